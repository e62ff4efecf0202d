"""Exception hierarchy. Each class carries the process exit code used by the CLI."""


class LinkEnergyError(Exception):
    exit_code = 1


class ConfigError(LinkEnergyError, ValueError):
    """Malformed config, input file or argument."""

    exit_code = 2


class DegenerateCurveError(ConfigError):
    """Curve speed vanishes somewhere on the probe grid."""


class IntersectingLinkError(LinkEnergyError):
    exit_code = 3


class UnresolvedLinkingError(LinkEnergyError):
    """Gauss integral too far from an integer; the quadrature is under-resolved."""

    exit_code = 4


class SingularityError(LinkEnergyError, ZeroDivisionError):
    """A point sits on the center of an inversion (or a curve passes through it)."""

    exit_code = 5


class NearBoundaryError(SingularityError):
    """Interior formulas requested for a parameter too close to the unit sphere."""


class ContainmentError(LinkEnergyError):
    """A point falls outside the annulus on which a retraction is defined."""

    exit_code = 6


class StallError(LinkEnergyError):
    exit_code = 7
