"""Exact recovery statistics for a single corrupted reference-tree node.

For a target node covering ell of the t digest positions, W counts the
nonzero digest entries inside the subtree and X the distinct nonzero values
among them (one per recoverable secret). All closed forms use exact rational
arithmetic; floats appear only at presentation time.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb, factorial

from .errors import BadProbability, TooLarge


@lru_cache(maxsize=None)
def stirling2(r: int, m: int) -> int:
    """Stirling number of the second kind S(r, m)."""
    if r < 0 or m < 0:
        raise ValueError("arguments must be nonnegative")
    if r == 0:
        return 1 if m == 0 else 0
    if m == 0 or m > r:
        return 0
    return m * stirling2(r - 1, m) + stirling2(r - 1, m - 1)


@dataclass(frozen=True)
class NodeContext:
    """Scheme parameters plus the subtree leaf coverage ell of the target node."""

    t: int
    w: int
    s: int
    ell: int

    def __post_init__(self):
        if not (0 < self.w <= self.t):
            raise ValueError("need 0 < w <= t")
        if self.s < 2:
            raise ValueError("need s >= 2")
        if not (0 <= self.ell <= self.t):
            raise ValueError("need 0 <= ell <= t")


def prob_w(ctx: NodeContext, r: int) -> Fraction:
    """Hypergeometric mass Pr[W = r]."""
    if r < 0 or r > ctx.w:
        return Fraction(0)
    return Fraction(
        comb(ctx.ell, r) * comb(ctx.t - ctx.ell, ctx.w - r), comb(ctx.t, ctx.w)
    )


def prob_x_given_w(ctx: NodeContext, m: int, r: int) -> Fraction:
    """Pr[X = m | W = r] = m! C(s-1, m) S(r, m) / (s-1)^r."""
    if m < 0 or m > ctx.s - 1:
        return Fraction(0)
    return Fraction(
        factorial(m) * comb(ctx.s - 1, m) * stirling2(r, m), (ctx.s - 1) ** r
    )


def prob_x(ctx: NodeContext, m: int) -> Fraction:
    return sum(
        (prob_x_given_w(ctx, m, r) * prob_w(ctx, r) for r in range(ctx.w + 1)),
        Fraction(0),
    )


@dataclass(frozen=True)
class RecoveryDistribution:
    probabilities: tuple
    expectation: Fraction


def recovery_distribution(ctx: NodeContext) -> RecoveryDistribution:
    probs = tuple(prob_x(ctx, m) for m in range(ctx.s))
    exp = sum((m * p for m, p in enumerate(probs)), Fraction(0))
    return RecoveryDistribution(probabilities=probs, expectation=exp)


def expected_recovered(ctx: NodeContext) -> Fraction:
    """Unconditional E[X]."""
    return sum(
        (
            m * prob_x_given_w(ctx, m, r) * prob_w(ctx, r)
            for m in range(1, ctx.s)
            for r in range(m, ctx.w + 1)
        ),
        Fraction(0),
    )


def effective_probability(ctx: NodeContext) -> Fraction:
    """Probability that a successful 1->0 corruption of this node is effective.

    Effective needs a nonzero digest entry both inside and outside the
    subtree: 1 <= W <= w-1.
    """
    return sum((prob_w(ctx, r) for r in range(1, ctx.w)), Fraction(0))


def expected_recovered_effective(ctx: NodeContext):
    """E[X | fault effective], or None when effectiveness has probability 0."""
    denom = effective_probability(ctx)
    if denom == 0:
        return None
    num = sum(
        (
            m * prob_x_given_w(ctx, m, r) * prob_w(ctx, r)
            for m in range(1, ctx.s)
            for r in range(max(m, 1), ctx.w)
        ),
        Fraction(0),
    )
    return num / denom


@lru_cache(maxsize=None)
def _distinct_sum(c: int, s: int) -> int:
    """Sum of distinct-value counts over all (s-1)^c value tuples."""
    return sum(len(set(v)) for v in product(range(1, s), repeat=c))


def brute_force_expectation(ctx: NodeContext, budget: int = 10**7) -> Fraction:
    """E[X] by enumerating every fixed-weight digest (independent oracle)."""
    n_digests = comb(ctx.t, ctx.w) * (ctx.s - 1) ** ctx.w
    if n_digests > budget:
        raise TooLarge(f"{n_digests} digests exceed budget {budget}")
    total = 0
    for support in combinations(range(ctx.t), ctx.w):
        c = sum(1 for p in support if p < ctx.ell)
        total += _distinct_sum(c, ctx.s) * (ctx.s - 1) ** (ctx.w - c)
    return Fraction(total, n_digests)


def brute_force_expectation_effective(ctx: NodeContext, budget: int = 10**7):
    """E[X | effective] by enumeration, or None when no digest is effective."""
    n_digests = comb(ctx.t, ctx.w) * (ctx.s - 1) ** ctx.w
    if n_digests > budget:
        raise TooLarge(f"{n_digests} digests exceed budget {budget}")
    total = 0
    eligible = 0
    for support in combinations(range(ctx.t), ctx.w):
        c = sum(1 for p in support if p < ctx.ell)
        if 0 < c < ctx.w:
            total += _distinct_sum(c, ctx.s) * (ctx.s - 1) ** (ctx.w - c)
            eligible += (ctx.s - 1) ** ctx.w
    if eligible == 0:
        return None
    return Fraction(total, eligible)


def trial_budget(n_avg: float, p: float) -> tuple:
    """(N_trial, N_total) = (1/p, n_avg/p) fault injections."""
    if not (0 < p <= 1):
        raise BadProbability(f"p must be in (0, 1], got {p}")
    return 1.0 / p, float(n_avg) / p
