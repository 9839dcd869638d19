"""Exception hierarchy shared across the package."""


class ZkfaultError(Exception):
    """Base class for all package errors."""


class ZeroInverse(ZkfaultError):
    """Multiplicative inverse of zero requested."""


class DimensionMismatch(ZkfaultError):
    """Operands have incompatible shapes or live in different fields."""


class BadIndexSet(ZkfaultError):
    """Column-selection index set is out of range, repeated or too large."""


class BadWeight(ZkfaultError):
    """Fixed-weight sampling parameters violate 0 < w <= t, s >= 2."""


class PathMismatch(ZkfaultError):
    """Disclosed tree nodes do not match the set implied by the digest."""


class MalformedSignature(ZkfaultError):
    """Signature component counts or dimensions are wrong."""


class InconsistentPair(ZkfaultError):
    """Response/ephemeral pair does not describe an injective column map."""


class AmbiguousMatch(ZkfaultError):
    """Secret completion found several candidate columns for one slot."""


class NoMatch(ZkfaultError):
    """Secret completion failed to place every remaining column."""


class NoLeakedRound(ZkfaultError):
    """No hidden round is covered by the faulted subtree."""


class TooLarge(ZkfaultError):
    """Brute-force enumeration would exceed the configured budget."""


class BadProbability(ZkfaultError):
    """Probability argument outside (0, 1]."""
