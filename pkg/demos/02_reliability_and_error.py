"""
Reliability against systematic error
====================================

After the field the spinor enters a Stern-Gerlach magnet of length ``b``.
The readout counts spin up above ``z = 0`` and spin down below it, then
inverts the ideal precession to get a field estimate.  Whatever goes wrong
(reflection in the field region, incomplete separation in the magnet) shows
up both as a reliability ``R < 1`` and as a bias ``delta_B``.  For near-ideal
configurations ``1 - R`` tracks ``S |delta_B|``, where ``S`` is the
sensitivity of the reading.
"""
import numpy as np

from qreliability import ModelParams, applicability_min_field, measurement_pipeline
from qreliability.reliability import relation_fit, scaling_fit, sweep

p = ModelParams()
r = measurement_pipeline(p)
print(f"reference point: R = {r.R:.6f}, B_measured = {r.B_measured:.6f}, "
      f"delta_B = {r.delta_B:.2e}, S = {r.sensitivity:.4f}\n")

# a longer magnet separates the spins better
print("   b       R        delta_B     B_min")
for b in (5, 10, 20, 35, 50):
    q = p.with_(b=b)
    r = measurement_pipeline(q)
    print(f"{b:4d}  {r.R:.6f}  {r.delta_B:+.3e}  {applicability_min_field(q):.2e}")

# the linear relation on a grid of fast particles and long magnets
print()
k0s, bs = np.linspace(10, 15, 21), np.linspace(30, 50, 21)
for Bx in (1.0, 1.25):
    fit = relation_fit(sweep(p.with_(Bx=Bx), k0s, bs))
    print(f"Bx = {Bx}: 1 - R = {fit.slope:.3f} * S|delta_B| {fit.intercept:+.1e}"
          f"  (r^2 = {fit.r_squared:.4f}, {fit.n_points} points)")

# near Bx = 0 the error grows like the square root of the loss
for regime, Bx in (("second_order", 1e-3), ("first_order", 2.0)):
    fit = scaling_fit(sweep(p.with_(Bx=Bx), np.linspace(13, 15, 21), bs), regime)
    print(f"{regime}: log|delta_B| vs log(1 - R) slope = {fit.slope:.3f}")
