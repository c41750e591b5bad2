"""The constructions themselves.

Two engines realize prescribed distances to every level of a chain at once:

* ``construct_wn`` runs the backward induction.  Each level j owns a fresh
  direction v_j scaled so that its distance to level j equals the full
  weighted target sum_{l>=j} 2^(l-j) (e_l + delta_l).  The deepest level is
  seeded by an intermediate-value solve; every earlier level then solves
  dist(t v_j + u, level j) = e_j for the smallest t against the part u
  already built, and the slack schedule guarantees the bracket.  The result
  w satisfies dist(w, level j) = e_j simultaneously for all j <= depth.

* ``construct_hilbert_exact`` is the closed-form inner-product build: place
  sqrt(e_j^2 - e_(j+1)^2) on each fresh coordinate and the l2 tail
  telescopes.  It needs no decay hypothesis and serves both as the
  independent oracle for the inductive engine and as the realization engine
  for slow sequences, where the strict weighted-tail condition is
  unattainable (it degenerates to equality for ratio-1/3 style targets).

``construct_sandwich`` glues them to the checkpoint rescaling: realize
f_k exactly on the subchain of checkpoint levels, and every intermediate
level n inherits e_n/factor <= dist <= factor * e_n.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

from .chain import ChainSpec, SetChainSpec, distance, dnv_estimate
from .errors import (
    BracketError,
    DegenerateChainError,
    InfeasibleTargetError,
    SequenceError,
    SummabilityError,
    ToleranceError,
    UnsupportedSpecError,
)
from .seqtools import (
    DeltaSchedule,
    ExplicitSeq,
    RescaleResult,
    ScaledSeq,
    SequenceSpec,
    delta_select,
    rescale,
    seq_validate,
    sqrt_sequence,
)
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
    "solver_tol",
    "ivt_smallest_t",
    "select_vn",
    "net_zn",
    "LevelRecord",
    "Checkpoint",
    "ConstructionTrace",
    "construct_wn",
    "construct_exact",
    "construct_hilbert_exact",
    "SandwichResult",
    "construct_sandwich",
    "RatioRow",
    "ShapiroResult",
    "shapiro_witness",
    "DominationRow",
    "TyuremskikhResult",
    "tyuremskikh_witness",
    "setchain_distance",
    "ball_chain_distance",
]


def solver_tol(spec: FNormSpec) -> float:
    """Default absolute tolerance on distance values for this variant."""
    if isinstance(spec, (CompositeBounded, SeminormFamily)):
        return 1e-10
    return 1e-12


def ivt_smallest_t(
    f: Callable[[float], float],
    target: float,
    s_max: float = 1.0,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Smallest t in [0, s_max] with f(t) = target, f continuous nondecreasing.

    Bisection on the predicate f(t) >= target converges to the infimum of the
    solution set, so on a flat segment the left endpoint is returned.  The
    bracket f(0) <= target <= f(s_max) is required up to ``tol``.
    """
    if s_max <= 0.0:
        raise BracketError(f"bracket width must be positive, got {s_max}")
    f0 = f(0.0)
    if f0 >= target:
        if f0 - target <= tol:
            return 0.0
        raise BracketError(f"f(0) = {f0!r} already exceeds the target {target!r}")
    f_hi = f(s_max)
    if f_hi < target:
        if target - f_hi <= tol:
            return s_max
        raise BracketError(
            f"f({s_max!r}) = {f_hi!r} stays below the target {target!r}"
        )
    lo, hi = 0.0, s_max
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    if abs(f(lo) - target) <= tol:
        return lo
    if abs(f(hi) - target) <= tol:
        return hi
    raise ToleranceError(
        f"bisection exhausted the bracket without meeting |f(t) - {target!r}| <= {tol!r}"
    )


def select_vn(
    spec: FNormSpec,
    chain: ChainSpec,
    n: int,
    target: float,
    delta_n: float = 0.0,
    tol: float | None = None,
) -> Vector:
    """Scale the fresh direction of level n until its value hits the target.

    A fresh coordinate has best approximation zero in level n, so the scaled
    vector satisfies dist(v, level n) = ||v|| = target with no slack at all
    (the ``delta_n`` allowance of the abstract selection is never consumed
    here).  Homogeneous variants use the closed form; bounded variants
    bisect along the ray, whose supremum is exactly the reach obstruction.
    """
    if not (target > 0.0):
        raise InfeasibleTargetError(f"target must be positive, got {target!r}")
    if tol is None:
        tol = solver_tol(spec)
    idx = chain.fresh_index(n)
    sup = spec.ray_sup(idx)
    if target >= sup:
        raise InfeasibleTargetError(
            f"target {target!r} is out of reach along coordinate {idx}: the ray "
            f"supremum there is {sup!r} (this is the level-separation obstruction)"
        )
    if isinstance(spec, Homogeneous):
        coeff = float(target)
    elif isinstance(spec, SConvex):
        coeff = float(target) ** (1.0 / spec.s)
    else:
        s_max = 1.0
        while fnorm_eval(spec, Vector.basis(idx, s_max)) < target:
            s_max *= 2.0
            if s_max > 1e18:
                raise InfeasibleTargetError(
                    f"no finite scaling reaches {target!r} along coordinate {idx}"
                )
        coeff = ivt_smallest_t(
            lambda t: fnorm_eval(spec, Vector.basis(idx, t)),
            float(target),
            s_max=s_max,
            tol=tol,
        )
    return Vector.basis(idx, coeff)


def net_zn(
    spec: FNormSpec,
    chain: ChainSpec,
    n: int,
    v: Vector,
    delta: float,
    grid_points: int | None = None,
) -> tuple[Vector, ...]:
    """Finite net in level n for the segment {t v : t in [0, 1]}.

    Returns Z such that every segment point g has some z in Z with
    ||g - z|| <= dist(g, level n) + delta.  The net consists of the exact
    truncations of grid points (truncation is the best approximation under
    the monotone functionals); with no explicit grid the spacing is refined
    until one grid gap of the truncated part costs at most delta.  A fresh v
    truncates to zero everywhere, so the net collapses to {0}.
    """
    cut = chain.cut(n)
    head = v.head(cut)
    if grid_points is None:
        if not (delta > 0.0):
            raise ValueError("delta must be positive for automatic refinement")
        m = 1
        while head and fnorm_eval(spec, head * (0.5 / m)) > delta:
            m *= 2
            if m > 2**24:
                raise ToleranceError("net refinement did not reach the requested delta")
    else:
        if grid_points < 2:
            raise ValueError("need at least two grid points")
        m = grid_points - 1
    seen: dict[tuple, Vector] = {}
    for i in range(m + 1):
        z = (v * (i / m)).head(cut)
        seen[tuple(sorted(z.entries.items()))] = z
    return tuple(seen.values())


@dataclass(frozen=True)
class LevelRecord:
    """Per-level outcome: scaling t, contribution q, recomputed distance.

    ``norm_bound`` is the certified strict upper bound on ||q||, the full
    weighted target of the level.
    """

    level: int
    t: float
    q: Vector
    target: float
    achieved: float
    q_norm: float
    norm_bound: float


class Checkpoint(NamedTuple):
    k: int
    n: int
    target: float


@dataclass(frozen=True)
class ConstructionTrace:
    """A built element with its per-level certificates.

    Distances are certified for levels 1..depth only; ``tail_bound`` is the
    Cauchy-style bound sum_{j>=depth} e_j on what continuing the construction
    past the truncation could still move the element.
    """

    element: Vector
    levels: tuple[LevelRecord, ...]
    depth: int
    tail_bound: float
    deltas: DeltaSchedule | None = None
    checkpoints: tuple[Checkpoint, ...] | None = None


def construct_wn(
    spec: FNormSpec,
    chain: ChainSpec,
    seq: SequenceSpec,
    deltas: DeltaSchedule,
    depth: int,
    tol: float | None = None,
) -> ConstructionTrace:
    """Backward induction realizing dist(w, level j) = e_j for all j <= depth.

    Requires a slack schedule certified to horizon >= 2*depth.  Level order
    is depth down to 1; at each level the solve is an intermediate-value
    bisection of a nondecreasing function (the built part u and the fresh
    direction occupy disjoint coordinates beyond the cut).  The bracket
    endpoint s_j is itself the smallest scaling whose level distance equals
    e_j plus the weighted certificate bound on ||u||, mirroring the
    feasibility argument that makes the induction go through.
    """
    if depth < 1:
        raise SequenceError("depth must be >= 1")
    if deltas.horizon < 2 * depth:
        raise SequenceError(
            f"slack schedule horizon {deltas.horizon} is below twice the depth {depth}"
        )
    if tol is None:
        tol = solver_tol(spec)

    e = {j: seq.float_value(j) for j in range(1, depth + 2)}
    weighted = {j: float(deltas.weighted_total(j)) for j in range(1, depth + 1)}
    fresh = {j: select_vn(spec, chain, j, weighted[j], tol=tol) for j in range(1, depth + 1)}

    u = Vector.zero()
    picked: dict[int, tuple[float, Vector, float]] = {}
    for j in range(depth, 0, -1):
        vj = fresh[j]
        if j == depth:
            bracket = 1.0
        else:
            s_target = e[j] + sum(
                2 ** (l - j - 1) * (e[l] + float(deltas.delta(l)))
                for l in range(j + 1, depth + 1)
            )
            bracket = ivt_smallest_t(
                lambda s: distance(spec, chain, j, vj * s),
                s_target,
                s_max=1.0,
                tol=tol,
            )
        t_j = ivt_smallest_t(
            lambda t: distance(spec, chain, j, vj * t + u),
            e[j],
            s_max=bracket,
            tol=tol,
        )
        q = vj * t_j
        u = u + q
        picked[j] = (t_j, q, fnorm_eval(spec, q))

    w = u
    records = []
    worst = 0.0
    for j in range(1, depth + 1):
        t_j, q, q_norm = picked[j]
        achieved = distance(spec, chain, j, w)
        worst = max(worst, abs(achieved - e[j]))
        if not (q_norm < weighted[j] + tol):
            raise ToleranceError(
                f"level {j} contribution norm {q_norm!r} breaks its certified "
                f"bound {weighted[j]!r}"
            )
        records.append(
            LevelRecord(
                level=j,
                t=t_j,
                q=q,
                target=e[j],
                achieved=achieved,
                q_norm=q_norm,
                norm_bound=weighted[j],
            )
        )
    if worst > 50.0 * tol:
        raise ToleranceError(
            f"worst simultaneous distance error {worst!r} exceeds 50x tolerance"
        )
    return ConstructionTrace(
        element=w,
        levels=tuple(records),
        depth=depth,
        tail_bound=float(seq.tail(depth)),
        deltas=deltas,
    )


def construct_exact(
    spec: FNormSpec,
    chain: ChainSpec,
    seq: SequenceSpec,
    depth: int,
    tail_cap: float | None = None,
    tol: float | None = None,
) -> ConstructionTrace:
    """Realize dist(x, level n) = e_n for n <= depth, rapid-decay route.

    The strict weighted-tail condition is verified exactly first (it fails,
    by equality, for e_n = 3^(-n) style sequences; such inputs must go
    through the sandwich pipeline instead).  The truncation tail bound
    sum_{j>=depth} e_j must not exceed ``tail_cap`` when one is given.
    Distances beyond the truncation depth are not certified.
    """
    report = seq_validate(seq, horizon=2 * depth)
    if not report.ok:
        raise SequenceError("; ".join(report.messages))
    horizon = 2 * depth
    separations = [dnv_estimate(spec, chain, m).value for m in range(1, horizon + 1)]
    try:
        schedule = delta_select(seq, separations, horizon)
    except SummabilityError as exc:
        raise SummabilityError(
            exc.level,
            exc.lhs,
            exc.bound,
            hint="the sequence is not strictly rapidly summable; use the sandwich pipeline",
        ) from None
    trace = construct_wn(spec, chain, seq, schedule, depth, tol=tol)
    if tail_cap is not None and not (trace.tail_bound <= tail_cap):
        raise ToleranceError(
            f"truncation tail bound {trace.tail_bound!r} exceeds the requested "
            f"cap {tail_cap!r}; increase the depth"
        )
    return trace


def construct_hilbert_exact(
    chain: ChainSpec, seq: SequenceSpec, depth: int
) -> ConstructionTrace:
    """Closed-form inner-product realization, no decay hypothesis needed.

    Coefficients a_j = sqrt(e_j^2 - e_(j+1)^2) for j < depth and
    a_depth = e_depth sit on the fresh coordinates; the squared l2 tail at
    level n telescopes to exactly e_n^2.  Only requires the targets to be
    positive and nonincreasing.
    """
    if depth < 1:
        raise SequenceError("depth must be >= 1")
    e = [seq.float_value(j) for j in range(1, depth + 2)]
    if e[depth - 1] <= 0.0:
        raise SequenceError("targets must be positive")
    for j in range(depth - 1):
        if e[j] < e[j + 1]:
            raise SequenceError(
                f"targets must be nonincreasing; e_{j + 1} = {e[j]!r} < "
                f"e_{j + 2} = {e[j + 1]!r}"
            )
    spec = Homogeneous(2.0)
    entries: dict[int, float] = {}
    placed: dict[int, float] = {}
    for j in range(1, depth):
        a = math.sqrt(max(e[j - 1] ** 2 - e[j] ** 2, 0.0))
        placed[j] = a
        if a != 0.0:
            entries[chain.fresh_index(j)] = a
    placed[depth] = e[depth - 1]
    entries[chain.fresh_index(depth)] = e[depth - 1]
    w = Vector(entries)
    records = []
    for j in range(1, depth + 1):
        a = placed[j]
        q = Vector.basis(chain.fresh_index(j), a) if a != 0.0 else Vector.zero()
        records.append(
            LevelRecord(
                level=j,
                t=a,
                q=q,
                target=e[j - 1],
                achieved=distance(spec, chain, j, w),
                q_norm=a,
                norm_bound=math.inf,
            )
        )
    return ConstructionTrace(
        element=w,
        levels=tuple(records),
        depth=depth,
        tail_bound=0.0,
    )


class SandwichResult(NamedTuple):
    trace: ConstructionTrace
    n_o: int
    n_max: int
    k_o: int
    factor: int
    rescaled: RescaleResult


def _grow_rescale(seq: SequenceSpec, factor: int, need) -> RescaleResult:
    """Rescale with enough checkpoints to satisfy ``need(result) -> bool``."""
    count = 4
    res = rescale(seq, factor, count)
    while not need(res):
        count *= 2
        if count > 4096:
            raise SequenceError("checkpoint generation did not cover the request")
        res = rescale(seq, factor, count)
    return res


def construct_sandwich(
    spec: FNormSpec,
    chain: ChainSpec,
    seq: SequenceSpec,
    depth: int,
    factor: int,
    tol: float | None = None,
) -> SandwichResult:
    """Two-sided realization e_n/factor <= dist(x, level n) <= factor * e_n.

    Pipeline: rescale to checkpoints (f_k, n_k); form the subchain of
    checkpoint levels; find the first k_o from which every remaining target
    f_k stays strictly below the subchain separation; realize
    dist(x, subchain level k) = f_k for k >= k_o; the two-sided bounds then
    hold for every n from n_o on, where n_o = 1 when all checkpoints are
    realized and n_(k_o) + 1 otherwise.

    The inner-product space uses the closed-form engine (either factor), so
    even boundary rescalings like f_k = 3^(1-k), where the strict
    weighted-tail condition degenerates to equality, are realized exactly.
    Other variants run the inductive engine and inherit its strictness
    demands; factor 2 is restricted to the inner-product space.
    """
    if factor not in (2, 3):
        raise SequenceError(f"factor must be 2 or 3, got {factor}")
    if depth < 1:
        raise SequenceError("depth must be >= 1")
    hilbert = isinstance(spec, Homogeneous) and spec.p == 2.0
    if factor == 2 and not hilbert:
        raise UnsupportedSpecError(
            "the factor-2 pipeline is only available in the inner-product space"
        )
    report = seq_validate(seq, horizon=min(depth + 2, 64))
    if not report.ok:
        raise SequenceError("; ".join(report.messages))

    res = _grow_rescale(seq, factor, lambda r: r.n[-1] >= depth)
    k_last = next(k for k in range(1, len(res.n) + 1) if res.n[k - 1] >= depth)

    # separations of the checkpoint subchain need one cut past k_last
    if len(res.n) < k_last + 1:
        res = _grow_rescale(seq, factor, lambda r: len(r.n) >= k_last + 1)
    sub_cuts = [chain.cut(nk) for nk in res.n[: k_last + 1]]
    subchain = ChainSpec.explicit(sub_cuts)
    seps = [dnv_estimate(spec, subchain, k).value for k in range(1, k_last + 1)]

    k_o = None
    for k in range(1, k_last + 1):
        if all(res.f[j - 1] < seps[j - 1] for j in range(k, k_last + 1)):
            k_o = k
            break
    if k_o is None:
        raise DegenerateChainError(
            "the chain separations collapse at least as fast as the rescaled "
            "targets; the sandwich construction needs the targets to fall "
            "strictly below every remaining level separation (pick targets "
            "dominated by the separations, e.g. e_n < d_n for all n)"
        )

    levels = k_last - k_o + 1
    if hilbert:
        shifted = ChainSpec.explicit(
            [chain.cut(res.n[k - 1]) for k in range(k_o, k_last + 1)]
        )
        f_seq = ExplicitSeq(res.f[k_o - 1 : k_last], Fraction(1, factor))
        trace = construct_hilbert_exact(shifted, f_seq, levels)
    else:
        need = k_o + 2 * levels
        if len(res.n) < need:
            res = _grow_rescale(seq, factor, lambda r: len(r.n) >= need)
        shifted = ChainSpec.explicit(
            [chain.cut(res.n[k - 1]) for k in range(k_o, need + 1)]
        )
        f_seq = ExplicitSeq(res.f[k_o - 1 :], Fraction(1, factor))
        trace = construct_exact(spec, shifted, f_seq, levels, tol=tol)

    checkpoints = tuple(
        Checkpoint(k, res.n[k - 1], float(res.f[k - 1]))
        for k in range(k_o, k_last + 1)
    )
    trace = dataclasses.replace(trace, checkpoints=checkpoints)
    n_o = 1 if k_o == 1 else res.n[k_o - 1] + 1
    return SandwichResult(trace, n_o, depth, k_o, factor, res)


class RatioRow(NamedTuple):
    n: int
    rho: float
    ratio: float
    bound: float
    ok: bool


class ShapiroResult(NamedTuple):
    sandwich: SandwichResult
    rows: tuple[RatioRow, ...]

    @property
    def unbounded_growth(self) -> bool:
        return all(r.ok for r in self.rows)


def shapiro_witness(
    spec: FNormSpec,
    chain: ChainSpec,
    seq: SequenceSpec,
    depth: int,
    tol: float | None = None,
) -> ShapiroResult:
    """Sandwich run on sqrt(e_n): distance/target ratios grow without bound.

    Since dist(x, level n) >= sqrt(e_n)/3, the ratio against e_n itself is at
    least e_n^(-1/2)/3 -> infinity, so the distances are not O(e_n).
    """
    root = sqrt_sequence(seq)
    sw = construct_sandwich(spec, chain, root, depth, factor=3, tol=tol)
    rows = []
    for n in range(sw.n_o, depth + 1):
        rho = distance(spec, chain, n, sw.trace.element)
        e_n = seq.float_value(n)
        ratio = rho / e_n
        bound = e_n ** (-0.5) / 3.0
        rows.append(RatioRow(n, rho, ratio, bound, ratio >= bound * (1.0 - 1e-9)))
    return ShapiroResult(sw, tuple(rows))


class DominationRow(NamedTuple):
    n: int
    rho: float
    floor: float
    ok: bool


class TyuremskikhResult(NamedTuple):
    sandwich: SandwichResult
    rows: tuple[DominationRow, ...]
    certified_from: int

    @property
    def dominated(self) -> bool:
        return all(r.ok for r in self.rows)


def tyuremskikh_witness(
    spec: FNormSpec,
    chain: ChainSpec,
    seq: SequenceSpec,
    depth: int,
    tol: float | None = None,
) -> TyuremskikhResult:
    """Sandwich run on 3 sqrt(e_n): distances then dominate e_n itself.

    dist(x, level n) >= sqrt(e_n) >= e_n holds from the first certified level
    where e_n <= 1 (the certificate starts there when the sequence opens
    above 1).
    """
    boosted = ScaledSeq(sqrt_sequence(seq), 3)
    sw = construct_sandwich(spec, chain, boosted, depth, factor=3, tol=tol)
    start = None
    for n in range(sw.n_o, depth + 1):
        if seq.value(n) <= 1:
            start = n
            break
    if start is None:
        raise SequenceError(
            f"no level up to {depth} has e_n <= 1; nothing can be certified"
        )
    rows = []
    for n in range(start, depth + 1):
        rho = distance(spec, chain, n, sw.trace.element)
        floor = seq.float_value(n)
        rows.append(DominationRow(n, rho, floor, rho >= floor * (1.0 - 1e-9)))
    return TyuremskikhResult(sw, tuple(rows), start)


def setchain_distance(
    spec: FNormSpec, setchain: SetChainSpec, n: int, x: Vector
) -> float:
    """Distance to the n-th set: previous subspace union the fresh lines.

    In the inner-product space the distance to the line through b_j is
    sqrt(||x||^2 - x_j^2), so the set distance is the minimum of that over
    the fresh lines and the distance to the previous subspace level.
    """
    if not (isinstance(spec, Homogeneous) and spec.p == 2.0):
        raise UnsupportedSpecError(
            "set-chain distances are closed-form in the inner-product space only"
        )
    if n < 1:
        raise SequenceError("set index must be >= 1")
    norm_sq = fnorm_eval(spec, x) ** 2
    best = distance(spec, setchain.base, n - 1, x)
    for j in setchain.fresh_lines(n):
        line = math.sqrt(max(norm_sq - x.coeff(j) ** 2, 0.0))
        if line < best:
            best = line
    return best


def ball_chain_distance(x: Vector, n: int) -> float:
    """Distance to the radius-n ball in the inner-product space.

    The balls exhaust the whole space without the span-nesting property, and
    every element's distance hits zero once n passes its norm, so no element
    can keep these distances above a positive target sequence.
    """
    if n < 1:
        raise SequenceError("ball index must be >= 1")
    return max(fnorm_eval(Homogeneous(2.0), x) - n, 0.0)
