"""Effect of the quadrature order on a fast oscillating field.

The field on Ex2 oscillates at frequency 100, so three Gauss-Legendre
knots cannot resolve its moments at practical step sizes. Eleven knots
remove that error without changing the number of FFTs per step.
"""

from laserprop.harness import RunSpec, convergence_study, propagate

STEPS = [50, 100, 200]

ref = propagate(RunSpec("ex2", "S2+OMF76", steps=3200, knots=11, T_final=1.0)).final
for label, kw in [("S2+OMF76, 3 knots", dict(knots=3)), ("S2+OMF76, 11 knots", dict(knots=11))]:
    rep = convergence_study("ex2", ["S2+OMF76"], STEPS, reference=ref, T_final=1.0, **kw)[0]
    print(label.ljust(22), "  ".join(f"{e:.2e}" for e in rep.errors))
rep = convergence_study("ex2", ["TO+OMF85"], STEPS, reference=ref, T_final=1.0)[0]
print("TO+OMF85".ljust(22), "  ".join(f"{e:.2e}" for e in rep.errors))
print("steps".ljust(22), "  ".join(f"{n:8d}" for n in STEPS))
