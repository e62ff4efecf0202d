"""The canonical family of tori built from a link, and its area profile.

Each member (v, z) is the image of the Gauss-type map of the link under an
inversion centred at v followed by a dilation. For the round Hopf link the
member at v=0, z=1/2 is the Clifford torus with area 2 pi^2, the largest in
the family.
"""

import math

import numpy as np

from linkenergy import FamilySampler, family_coeffs, family_scan, hopf_link, perturbed_hopf
from linkenergy.family import family_samples, support_radius

hopf = hopf_link()
sampler = FamilySampler(hopf, 96)
print("area of the Hopf member along z at v=0")
for z in (0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95):
    print(f"  z={z:.2f}  area={sampler.area(np.zeros(4), z):.10f}")
grid = sampler.grid(family_coeffs(np.zeros(4), 0.5))
print(f"Clifford member: area-2pi^2={grid.area_integral - 2 * math.pi**2:+.1e}")

print("\nsupport radius r(z) shrinks from pi to 0")
print("  " + "  ".join(f"{support_radius(z, math.sqrt(2)):.4f}" for z in np.linspace(0, 1, 6)))

link = perturbed_hopf(5, 0.1, chart="S3")
s, rows = family_scan(link, family_samples(400, 1), 64)
worst = max(r.area_integral - r.upper_integral for r in rows)
top = max(r.upper_integral for r in rows)
print(f"\nperturbed link, 400 members: max(area-upper)={worst:.2e}, "
      f"max upper={top:.6f} <= energy {s.energy:.6f}")
