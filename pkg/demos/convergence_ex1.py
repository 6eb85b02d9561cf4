"""Global convergence on the one-dimensional pulse problem.

Compares the two sixth-order commutator-free schemes with the
fourth-order Magnus-Strang baseline and prints error against step size
together with the FFT cost of each run.
"""

from laserprop.harness import convergence_study

STEPS = [25, 50, 100, 200]
SCHEMES = ["S2+OMF76", "S3+OMF85", "MaStBM4+BM4", "TO+OMF85"]

reports = convergence_study("ex1", SCHEMES, STEPS, T_final=1.0)
print(f"reference: {reports[0].meta['reference']}")
for rep in reports:
    print(f"\n{rep.scheme}  fitted order {rep.slope:.2f}")
    print("       h        error     ffts")
    for h, err, _, ffts in rep.rows:
        print(f"  {h:.5f}  {err:.3e}  {ffts:7.0f}")
