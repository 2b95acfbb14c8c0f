"""Exception hierarchy shared by every elastonet module."""


class ElastoNetError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(ElastoNetError, ValueError):
    pass


class InvalidNetwork(ElastoNetError, ValueError):
    pass


class ZeroRestLength(InvalidNetwork):
    pass


class ResonanceProximity(ElastoNetError, ArithmeticError):
    """Raised when a frequency lies within the guard distance of a resonance."""

    def __init__(self, omega_sq, resonance, guard):
        self.omega_sq = omega_sq
        self.resonance = resonance
        self.guard = guard
        super().__init__(
            f"omega^2={omega_sq:.12g} is within {guard:.3g} of resonance {resonance:.12g}"
        )


class ValidationFailed(ElastoNetError, ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("target is not realizable: " + ", ".join(report.failed()))


class DegenerateTarget(ElastoNetError, ValueError):
    pass


class RankDeficient(DegenerateTarget):
    pass


class NoBalancingPoint(DegenerateTarget):
    pass


class GadgetVerificationFailed(ElastoNetError, RuntimeError):
    pass


class DegeneratePlacement(ElastoNetError, RuntimeError):
    pass


class RetryExhausted(ElastoNetError, RuntimeError):
    pass


class NegativeStiffness(InvalidNetwork):
    pass


class UnfixableFloppy(ElastoNetError, RuntimeError):
    pass


class NotSupported(ElastoNetError, NotImplementedError):
    pass


class ParseError(ElastoNetError, ValueError):
    pass
