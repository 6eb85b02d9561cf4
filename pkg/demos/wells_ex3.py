"""Population transfer between the four wells of the 2D problem.

Runs a coarse version of the two-dimensional quartic-well problem and
prints the mass near each well centre. Pass a grid size and step count
on the command line for a finer run.
"""

import sys

from laserprop.harness import RunSpec, propagate

points = int(sys.argv[1]) if len(sys.argv) > 1 else 64
steps = int(sys.argv[2]) if len(sys.argv) > 2 else 200

res = propagate(RunSpec("ex3", "S2+OMF76", steps=steps, points=points, observables=("norm", "wells")))
wells = res.observables["wells"]
print(f"grid {points}^2, {steps} steps, norm drift {abs(res.norms[-1] - res.norms[0]):.1e}")
stride = max(1, steps // 8)
for k in range(0, len(res.times), stride):
    print(f"t = {res.times[k]:5.2f}  " + "  ".join(f"{w:.4f}" for w in wells[k]))
