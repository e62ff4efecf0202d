"""
Cross energy of two-component links and the sweepout machinery around it.

Curves are truncated Fourier series; double integrals use the periodic
trapezoid rule. The main entry points are re-exported here.
"""

from .conformal import BoundaryMap, Composition, Dilation, Inversion, pushforward_link
from .curves import (Curve, Link, hopf_link, load_link, named_link, perturbed_hopf,
                     projected_hopf_link, project_link_to_r3, save_link, split_link,
                     stereographic_lift_link, stereographic_project_link, torus_link_2_4)
from .energy import (QuadratureSpec, energy_lower_bound_report, gauss_linking_integral,
                     gauss_map, gauss_map_grid, linking_number, mobius_energy)
from .errors import (ConfigError, ContainmentError, IntersectingLinkError, LinkEnergyError,
                     SingularityError, StallError, UnresolvedLinkingError)
from .family import FamilySampler, family_coeffs, family_scan, support_radius
from .optimizer import (energy_gradient, family_max_diagnostic, gauge_normalize, minimize,
                        rigidity_report)
from .sweepout import MinMaxFamily, Retraction, retracted_grid
from .verify import run_suite

__version__ = "0.1.0"
