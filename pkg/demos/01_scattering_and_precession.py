"""
Scattering a spin through a field region
========================================

A spin-up packet crosses a region of width ``a`` holding a transverse field
``Bx``.  In the eigenbasis of ``sigma_x`` the field is a square barrier for
one component and a square well for the other, so the spinor that leaves is
``c1 |up> + c2 |down>`` with ``c1, c2 = (T+ +- T-) / 2``.  Without
reflections the populations would follow pure precession,
``cos^2(theta), sin^2(theta)``.
"""
import numpy as np

from qreliability import ModelParams, channel_coefficients, ideal_populations, scatter_spinor

p = ModelParams()
print(f"k0 = {p.k0}, a = {p.a}, Bx = {p.Bx}, transit time t1 = {p.t1:.3f}\n")

# plane-wave amplitudes in the two channels
for ch in ("plus", "minus"):
    c = channel_coefficients(p, ch)
    print(f"{ch:>5}: T = {c.T:.6f}  |T|^2 + |R|^2 = {c.transmission + c.reflection:.15f}")

# compare the transmitted spin populations with ideal precession
print("\n  Bx    |c1|^2    |c2|^2   cos^2    sin^2    lost")
for Bx in np.linspace(0.0, 2.5, 6):
    q = p.with_(Bx=Bx)
    sp = scatter_spinor(q)
    ideal = ideal_populations(Bx, q)
    w1, w2 = abs(sp.up_coeff) ** 2, abs(sp.down_coeff) ** 2
    print(f"{Bx:5.2f}  {w1:.5f}  {w2:.5f}  {ideal.alpha:.5f}  {ideal.beta:.5f}  {1 - w1 - w2:.1e}")

# a slower particle sees resonances: |T| = 1 whenever q a is a multiple of pi
print("\nplus-channel transmission against k0 (Bx = 2):")
for k0 in np.linspace(2.1, 6.0, 14):
    T2 = channel_coefficients(p.with_(k0=k0), "plus").transmission
    print(f"  k0 = {k0:4.2f}  |T|^2 = {T2:.4f}  " + "#" * int(40 * T2))
