"""Cross energy and linking numbers of a few standard links.

The round Hopf link in S^3 has energy exactly 2 pi^2. Its image in R^3
keeps that value, and every link with linking number lk sits above 4 pi |lk|.
"""

import math

from linkenergy import (gauss_linking_integral, hopf_link, mobius_energy, perturbed_hopf,
                        projected_hopf_link, split_link, torus_link_2_4)

print("Round Hopf link in S^3")
for n in (16, 32, 64, 128):
    e = mobius_energy(hopf_link(), n)
    print(f"  N={n:4d}  E={e:.15f}  E-2pi^2={e - 2 * math.pi**2:+.2e}")

print("\nSame link after stereographic projection to R^3")
r3 = projected_hopf_link()
print(f"  E={mobius_energy(r3, 128):.12f}  Gauss integral={gauss_linking_integral(r3, 128):+.12f}")

print("\nLower bound E >= 4 pi |lk|")
for name, link in [("split", split_link()), ("torus (2,4)", torus_link_2_4()),
                   ("perturbed Hopf", perturbed_hopf(0, 0.2))]:
    g = gauss_linking_integral(link, 128)
    e = mobius_energy(link, 128)
    print(f"  {name:15s} lk={g:+.9f}  E={e:9.5f}  4pi|lk|={4 * math.pi * abs(round(g)):9.5f}")
