"""Ionisation of a soft-Coulomb state under a long pulse.

Propagates the fifth excited state with the complex absorbing boundary
switched on. The norm decreases as ionised mass leaves the box, and
the printout shows how much remains at regular intervals.
"""

import sys

from laserprop.harness import RunSpec, propagate

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 1000

res = propagate(RunSpec("ex5", "S3+OMF85", steps=steps))
print(f"{steps} steps of h = {res.h:g}, {res.ffts} FFTs, {res.wall:.1f} s")
stride = max(1, steps // 10)
for t, n in zip(res.times[::stride], res.norms[::stride]):
    print(f"t = {t:7.1f}   norm = {n:.6f}")
if steps % stride:
    print(f"t = {res.times[-1]:7.1f}   norm = {res.norms[-1]:.6f}")
