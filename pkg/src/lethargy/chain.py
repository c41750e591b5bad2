"""Nested coordinate subspace chains and distance computations.

A chain is described by strictly increasing cut indices m_1 < m_2 < ...;
level n is the subspace of vectors supported on coordinates 1..m_n.  For the
coordinatewise monotone functionals in ``space`` the distance from x to level
n is exactly the value of the tail of x beyond m_n, so distances here are
closed-form.  A small brute-force minimizer serves as an independent oracle
for that rule on low-dimensional instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import ChainError, DimensionTooLargeError, InvalidSpecError, UnsupportedSpecError
from .space import (
    CompositeBounded,
    FNormSpec,
    Homogeneous,
    SConvex,
    SeminormFamily,
    Vector,
    fnorm_eval,
)

__all__ = [
    "ChainSpec",
    "SetChainSpec",
    "DnvEstimate",
    "SeminormBound",
    "distance",
    "distance_bruteforce",
    "dnv_estimate",
    "dv_infimum",
    "r_of_chain",
    "dv_lower_bound_seminorms",
]


@dataclass(frozen=True)
class ChainSpec:
    """Cut indices of a strictly nested chain of coordinate subspaces.

    Either a linear rule m_n = slope*n + offset, or an explicit prefix of
    cuts with an optional constant-step continuation.  Level 0 is the trivial
    subspace (cut 0).
    """

    cuts: tuple[int, ...] = ()
    slope: int = 1
    offset: int = 0
    step: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(int(c) for c in self.cuts))
        if self.cuts:
            if any(c < 0 for c in self.cuts):
                raise ChainError("cut indices must be nonnegative")
            if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
                raise ChainError("cut indices must be strictly increasing")
            if self.step is not None and self.step < 1:
                raise ChainError("continuation step must be >= 1")
        else:
            if self.slope < 1:
                raise ChainError("slope must be >= 1 for strict nesting")
            if self.slope * 1 + self.offset < 0:
                raise ChainError("first cut index must be nonnegative")

    @classmethod
    def linear(cls, slope: int = 1, offset: int = 0) -> "ChainSpec":
        return cls(slope=slope, offset=offset)

    @classmethod
    def explicit(cls, cuts: Sequence[int], step: int | None = None) -> "ChainSpec":
        return cls(cuts=tuple(cuts), step=step)

    def cut(self, n: int) -> int:
        if n < 0:
            raise ChainError(f"level must be >= 0, got {n}")
        if n == 0:
            return 0
        if self.cuts:
            if n <= len(self.cuts):
                return self.cuts[n - 1]
            if self.step is None:
                raise ChainError(
                    f"explicit chain has {len(self.cuts)} levels and no continuation rule"
                )
            return self.cuts[-1] + self.step * (n - len(self.cuts))
        return self.slope * n + self.offset

    def fresh_index(self, n: int) -> int:
        """First coordinate present in level n+1 but not in level n."""
        return self.cut(n) + 1

    def fresh_indices(self, n: int) -> range:
        """All coordinates of level n+1 beyond level n."""
        return range(self.cut(n) + 1, self.cut(n + 1) + 1)


@dataclass(frozen=True)
class SetChainSpec:
    """Set chain W_n = (level n-1 subspace) union the fresh coordinate lines.

    The closed span of W_n is level n of the base chain, and it is contained
    in W_(n+1), so the chain of sets interlaces the subspace chain.
    """

    base: ChainSpec

    def fresh_lines(self, n: int) -> range:
        return self.base.fresh_indices(n - 1)


def distance(spec: FNormSpec, chain: ChainSpec, n: int, x: Vector) -> float:
    """Distance from x to chain level n.

    For coordinatewise monotone functionals the best approximation matches x
    on coordinates up to the cut, so the distance is the value of the tail.
    """
    if not spec.monotone:
        raise UnsupportedSpecError(
            "closed-form distance needs a coordinatewise monotone functional; "
            "use distance_bruteforce"
        )
    return fnorm_eval(spec, x.tail(chain.cut(n)))


def _line_min(objective, lo: float, hi: float, resolution: int, rounds: int) -> float:
    """Shrinking grid search for a 1-d unimodal-ish objective on [lo, hi]."""
    for _ in range(rounds):
        stepw = (hi - lo) / (resolution - 1)
        values = [(objective(lo + i * stepw), i) for i in range(resolution)]
        _, best = min(values)
        lo, hi = lo + max(best - 1, 0) * stepw, lo + min(best + 1, resolution - 1) * stepw
    return 0.5 * (lo + hi)


def distance_bruteforce(
    spec: FNormSpec,
    chain: ChainSpec,
    n: int,
    x: Vector,
    resolution: int = 17,
    sweeps: int = 4,
    rounds: int = 40,
) -> float:
    """Direct minimization of ||x - v|| over level n, for tiny dimensions.

    Cyclic coordinate descent with a shrinking grid per coordinate.  Returns
    an upper bound on the true distance; used as the independent oracle for
    the closed-form tail rule.
    """
    dim = chain.cut(n)
    if dim > 4:
        raise DimensionTooLargeError(f"brute-force path supports dim <= 4, got {dim}")
    if resolution < 5:
        raise ValueError("resolution must be at least 5")
    radius = 2.0 * max(1.0, x.max_abs())
    coeffs = {k: 0.0 for k in range(1, dim + 1)}

    def objective_at(k: int, t: float) -> float:
        trial = dict(coeffs)
        trial[k] = t
        return fnorm_eval(spec, x - Vector(trial))

    for _ in range(sweeps):
        for k in range(1, dim + 1):
            center = coeffs[k]
            coeffs[k] = _line_min(
                lambda t, k=k: objective_at(k, t),
                center - radius,
                center + radius,
                resolution,
                rounds,
            )
    return fnorm_eval(spec, x - Vector(coeffs))


class DnvEstimate(NamedTuple):
    """Level separation sup of distance-to-level-n over level n+1.

    ``lower_bound_only`` marks variants where the supremum is approached by
    ray scaling but only certified from below numerically.
    """

    value: float
    lower_bound_only: bool = False


def dnv_estimate(spec: FNormSpec, chain: ChainSpec, n: int) -> DnvEstimate:
    """sup of dist(v, level n) over v in level n+1.

    Unbounded (infinite) for homogeneous and s-convex variants.  For the
    bounded composite the sup equals the sum of the weights of the fresh
    coordinates, approached as those coordinates blow up.  For seminorm
    families a finite ray evaluation gives a certified lower bound.
    """
    if n < 1:
        raise ChainError("level must be >= 1")
    fresh = chain.fresh_indices(n)
    if isinstance(spec, (Homogeneous, SConvex)):
        return DnvEstimate(math.inf)
    if isinstance(spec, CompositeBounded):
        return DnvEstimate(spec.weight_sum(fresh))
    if isinstance(spec, SeminormFamily):
        big = 1e6
        best = max(
            fnorm_eval(spec, Vector.basis(idx, big)) for idx in fresh
        )
        return DnvEstimate(best, lower_bound_only=True)
    raise UnsupportedSpecError(f"no separation estimate for {type(spec).__name__}")


def dv_infimum(spec: FNormSpec, chain: ChainSpec, horizon: int) -> float:
    """min over n <= horizon of the level separation.

    This is an upper bound on the true infimum over all n; a value trending
    to zero as the horizon grows indicates a degenerate chain/norm pair.
    """
    if horizon < 1:
        raise ChainError("horizon must be >= 1")
    return min(dnv_estimate(spec, chain, n).value for n in range(1, horizon + 1))


def r_of_chain(spec: FNormSpec, chain: ChainSpec, horizon: int) -> float:
    """inf over probed basis directions of sup_t ||t * b_j||.

    Probes the first max(horizon, m_horizon) coordinate generators, all of
    which lie in the union of the chain.
    """
    if horizon < 1:
        raise ChainError("horizon must be >= 1")
    top = max(horizon, chain.cut(horizon))
    return min(spec.ray_sup(j) for j in range(1, top + 1))


class SeminormBound(NamedTuple):
    value: float
    failing_level: int | None = None


def dv_lower_bound_seminorms(
    family: SeminormFamily,
    chain: ChainSpec,
    levels: int,
    horizon: int,
) -> SeminormBound:
    """Certified lower bound 2^(-levels) on every level separation.

    For each n <= horizon the fresh generator of level n+1 must be separated
    from level n by at least one of the first ``levels`` seminorms.  Scaling
    that generator then pushes the covering term toward its weight, so each
    separation is at least 2^(-levels).  Returns 0 with the failing level if
    some generator is not separated.
    """
    if not isinstance(family, SeminormFamily):
        raise InvalidSpecError("seminorm lower bound needs a seminorm family")
    if levels < 1 or levels > len(family.terms):
        raise InvalidSpecError(
            f"levels must lie in 1..{len(family.terms)}, got {levels}"
        )
    for n in range(1, horizon + 1):
        witness = Vector.basis(chain.fresh_index(n))
        separated = False
        for j in range(1, levels + 1):
            dist_j = family.terms[j - 1].value(witness.tail(chain.cut(n)))
            if dist_j > 0.0:
                separated = True
                break
        if not separated:
            return SeminormBound(0.0, failing_level=n)
    return SeminormBound(2.0 ** (-levels))
