"""
The analytic conductor fields
=============================

A straight circular rod carrying alternating current has closed-form
magnetic and electric fields built from modified Bessel functions with
complex argument. This script prints the radial field profiles and shows
the skin effect: at higher frequency the current crowds toward the surface.
"""

import numpy as np

from eddyopt import ElectrodeParams, exact_E, exact_H, exact_J

# All material constants 1, radius 1/2, unit length, unit driving current.
p = ElectrodeParams()
print("rod radius", p.R, " angular frequency", p.omega)

# Sample along a radius at mid-height. H is azimuthal, E and J are axial.
r = np.linspace(1e-3, p.R, 6)
pts = np.stack([r, np.zeros_like(r), np.full_like(r, 0.5)], axis=1)
H = exact_H(pts, p)
E = exact_E(pts, p)
J = exact_J(pts, p)

print(f"{'r':>8} {'|H|':>12} {'|E|':>12} {'|J|':>12}")
for i in range(len(r)):
    print(f"{r[i]:8.3f} {np.linalg.norm(H[i]):12.6f} "
          f"{np.linalg.norm(E[i]):12.6f} {np.linalg.norm(J[i]):12.6f}")

# J = sigma E everywhere (here sigma = 1).
print("max |J - sigma E| =", np.abs(J - p.sigma * E).max())

# The skin effect: compare the current density at the axis and at the
# surface for a slow and a fast drive. The ratio collapses as omega grows.
for omega in (1.0, 50.0, 500.0):
    q = ElectrodeParams(omega=omega)
    axis = np.linalg.norm(exact_J(np.array([1e-6, 0.0, 0.5]), q))
    surf = np.linalg.norm(exact_J(np.array([p.R, 0.0, 0.5]), q))
    print(f"omega {omega:6.0f}: |J(axis)| / |J(surface)| = {axis / surf:.4f}")
