"""Shrinking boundary members onto round spheres, then the full min-max family."""

import math

import numpy as np

from linkenergy import FamilySampler, MinMaxFamily, hopf_link, retracted_grid

link = hopf_link()
sampler = FamilySampler(link, 64)
p = np.array([0.3, -0.2, 0.5, 0.0])
p /= np.linalg.norm(p)
print("retracted member at z=0.7: area along the retraction parameter s")
for s in np.linspace(0, 1, 6):
    g = retracted_grid(sampler, p, 0.7, s)
    print(f"  s={s:.1f}  area={g.area_integral:.8f}")
print(f"  at s=1: sphere residual={g.sphere_residual:.1e}, "
      f"|mass|={abs(g.signed_integral):.8f}, 4pi sin^2 r={4 * math.pi * math.sin(g.radius)**2:.8f}")

mm = MinMaxFamily(link, 64)
rng = np.random.default_rng(2)
areas = [mm.surface(x[:4], x[4]).area for x in rng.random((40, 5))]
print(f"\nmin-max family: 40 random parameters, max area={max(areas):.8f}, "
      f"energy={mm.energy:.8f}")
print(f"t=0 and t=1 areas: {mm.surface(rng.random(4), 0.0).area}, "
      f"{mm.surface(rng.random(4), 1.0).area}")
