"""Tour of the ambient space families and their diagnostics.

Builds each warped product, reports staticity and admissibility, and spot
checks the curvature formulas against familiar values.
"""

import numpy as np

from wvpflow import WarpedSpace

spaces = {
    "euclidean": WarpedSpace.euclidean(2, r_max=5.0, r_min=0.0, r_ref=1.0),
    "sphere(c=1)": WarpedSpace.sphere(2, r_max=1.45, r_min=0.0, r_ref=0.7),
    "hyperbolic(c=1)": WarpedSpace.hyperbolic(2, r_max=5.0, r_min=0.0, r_ref=1.0),
    "schwarzschild(m=1)": WarpedSpace.schwarzschild(2, r_max=6.0, m=1.0),
    "ads_schwarzschild(m=1,k=0.5)": WarpedSpace.ads_schwarzschild(
        2, r_max=4.0, m=1.0, kappa=0.5),
}

print("family                          static  substatic  admissible       C0")
for name, sp in spaces.items():
    rep = sp.staticity_report()
    print(f"{name:<30}  {str(rep.is_static):<6}  {str(rep.is_substatic):<9}  "
          f"{str(sp.is_admissible):<10}  {rep.c0:+.6f}")

print("\nScalar curvature is constant on static spaces:")
sch = spaces["schwarzschild(m=1)"]
for r in (0.5, 2.0, 4.0):
    rad, tan, scal = (float(v) for v in sch.ricci_scalar(r))
    print(f"  r={r:4.1f}: Ric eigenvalues ({rad:+.6f}, {tan:+.6f}), scalar {scal:+.6f}")

print("\nSchwarzschild geometry (m=1, n=2):")
lam, lp, lpp, _ = (float(v) for v in sch.phi(0.0))
print(f"  neck: lambda(0)={lam}, lambda'(0)={lp}, lambda''(0)={lpp}")
r0 = sch.schwarzschild_r0()
print(f"  static-convexity radius r0 = {r0:.6f} (lambda(r0) = "
      f"{float(sch.phi(r0)[0]):.6f}, expected 3)")

print("\nSectional curvature of hyperbolic space from the general formula:")
hyp = spaces["hyperbolic(c=1)"]
e1 = np.array([0.0, 1.0, 0.0])
e2 = np.array([0.0, 0.0, 1.0])
er = np.array([1.0, 0.0, 0.0])
print(f"  tangential plane: {hyp.riemann(1.3, e1, e2, e1, e2):+.12f} (expect -1)")
print(f"  radial plane:     {hyp.riemann(1.3, e1, er, e1, er):+.12f} (expect -1)")
