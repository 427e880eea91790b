"""Slice profile tables and the comparison functions xi and chi.

The functionals of centred balls are strictly increasing in the radius, so
they invert monotonically; xi maps weighted volume to weighted alpha-volume
through the common radius, chi maps weighted alpha-volume to the slice area
functionals.
"""

import numpy as np

from wvpflow import SliceProfile, WarpedSpace

space = WarpedSpace.hyperbolic(2, r_max=4.0, r_min=0.0, r_ref=1.0)

print("alpha = 1 makes xi the identity:")
prof1 = SliceProfile(space, 1.0)
for x in (0.7, 5.0, 40.0):
    print(f"  xi_1({x:g}) = {float(prof1.xi(x)):.12f}")

prof0 = SliceProfile(space, 0.0)
print("\nxi_0 against direct evaluation at matched radii:")
for r in (0.8, 1.6, 2.9):
    v_phi = float(prof0.v_slice(r))
    from_xi = float(prof0.xi(v_phi))
    direct = float(prof0.v_alpha_slice(r))
    print(f"  r={r:3.1f}: xi_0(V_phi) = {from_xi:.10f}, direct V = {direct:.10f}")

print("\nchi on slices reproduces the closed-form area functionals:")
for r in (0.8, 1.6, 2.9):
    phi, p1, _, _ = (float(v) for v in space.phi(r))
    a0_closed = 4 * np.pi * phi**2 * p1
    a0_chi = float(prof0.chi(0, prof0.v_alpha_slice(r)))
    print(f"  r={r:3.1f}: chi_0 = {a0_chi:.10f}, w_n phi^n phi' = {a0_closed:.10f}")

print("\nprofile table excerpt (r, V_phi, V, A0, A1):")
rows = prof0.export_rows()
for i in np.linspace(0, len(rows) - 1, 6, dtype=int):
    r, v, va, a0, a1 = rows[i]
    print(f"  {r:6.3f}  {v:12.6f}  {va:12.6f}  {a0:12.6f}  {a1:12.6f}")
