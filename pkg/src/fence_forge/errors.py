"""Exception taxonomy for fence-forge.

Every failure mode that callers are expected to branch on gets its own
class; everything inherits from FenceForgeError so blanket handling stays
possible. Constructors and verifiers raise these rather than asserting.
"""


class FenceForgeError(Exception):
    """Base class for all fence-forge errors."""


class MalformedTower(FenceForgeError):
    """Level data violates the basic tower contract (bonds, edges, sizes)."""


class InsufficientDepth(FenceForgeError):
    """An operation needs more levels than the tower provides."""


class OrderViolation(FenceForgeError):
    """Endpoint tables violate lo <= hi or the nesting constraints."""


class NoChildren(FenceForgeError):
    """A vertex has no preimage under the bond."""


class DaggerMissing(FenceForgeError):
    """A vertex lacks a child with an identical endpoint pair."""


class ZeroUpper(FenceForgeError):
    """Ratio-mode machinery hit an upper endpoint equal to zero."""


class DegenerateInterval(FenceForgeError):
    """Affine-mode machinery hit a zero-length fiber interval."""


class RatioModeRequiresZeroLower(FenceForgeError):
    """Ratio mode was requested on a tower whose lower endpoints are not 0."""


class ImageOutsideFiber(FenceForgeError):
    """A lifted height left the target fiber interval."""


class EmptyRefinement(FenceForgeError):
    """A refinement step produced no vertices."""


class MaskNotInvariant(FenceForgeError):
    """A mask is not closed under the level dynamics."""


class InsufficientCycles(FenceForgeError):
    """A cycle-level refinement cannot host the required child cycles."""


class CylinderTooDeep(FenceForgeError):
    """A cylinder word is wider than the availably built levels."""


class OrbitScanExhausted(FenceForgeError):
    """The orbit scan ran out of budget before realizing every window."""


class PeriodicSearchExhausted(FenceForgeError):
    """No fresh periodic point could be found within the search budget."""


class MTooSmall(FenceForgeError):
    """The requested cycle multiple is below the schedule's minimum.

    Carries the minimum as .m0 when raised by the odometer refiner.
    """

    def __init__(self, message: str, m0: int | None = None):
        super().__init__(message)
        self.m0 = m0


class PeriodChainExhausted(FenceForgeError):
    """The supplied period chain has no entry large enough for a step."""


class ModeMismatch(FenceForgeError):
    """A scaling-mode specific operation was called with the wrong mode."""


class MarksMissing(FenceForgeError):
    """A verifier needed designated marks the tower does not carry."""
