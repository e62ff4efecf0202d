"""Gradient descent from a perturbed Hopf link back to the round minimum.

Pass a smaller iteration budget as the first argument for a quick look,
e.g. ``python demos/05_minimize.py 300``.
"""

import math
import sys

from linkenergy import minimize, perturbed_hopf, rigidity_report

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
start = perturbed_hopf(2024, 0.1, modes=16)


def show(row):
    if row.iter % 200 == 0:
        print(f"  iter {row.iter:5d}  E-2pi^2={row.energy - 2 * math.pi**2:.3e}  "
              f"|grad|={row.gradnorm:.2e}")


res = minimize(start, max_iter=budget, tol=1e-5, quad=96, modes=16, callback=show)
print(f"converged={res.converged} after {res.iterations} iterations, "
      f"E-2pi^2={res.energy - 2 * math.pi**2:.3e}")
rep = rigidity_report(res.link)
print(f"rigidity: orthogonality {rep.max_ortho_residual:.1e}, chord spread {rep.chord_spread:.1e}, "
      f"circle fits {max(rep.circle_residuals):.1e}")
