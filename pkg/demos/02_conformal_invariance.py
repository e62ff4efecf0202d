"""Energy is unchanged when a link is pushed through a sphere inversion."""

import numpy as np

from linkenergy import Inversion, mobius_energy, perturbed_hopf, pushforward_link

link = perturbed_hopf(3, 0.15, chart="S3")
base = mobius_energy(link, 128)
print(f"energy of a perturbed Hopf link on S^3: {base:.12f}")

rng = np.random.default_rng(0)
for _ in range(6):
    v = rng.normal(size=4)
    v *= 0.85 * rng.random() / np.linalg.norm(v)
    moved = pushforward_link(Inversion(v), link)
    e = mobius_energy(moved, 128)
    print(f"  |v|={np.linalg.norm(v):.3f}  E={e:.12f}  relative change={abs(e - base) / base:.1e}")
