"""Target sequences and the transforms the constructions need.

A target sequence is a decreasing positive null sequence e_1 > e_2 > ... > 0.
Forms with rational data evaluate in exact ``Fraction`` arithmetic so the
strict inequalities below are decided without rounding:

* the weighted tail sum_{j>=n} 2^(j-n) e_j must be strictly below
  min(e_(n-1), d_n) at every level before the inductive construction may run
  (``delta_select``); equality, as for e_n = 3^(-n), is a hard failure;
* the checkpoint rescaling replaces a slow sequence by a factor-c
  subsequence f_k at indices n_k, the device that turns exact realizations
  into two-sided sandwich bounds.

Geometric tails are summed in closed form; forms without one report an
infinite tail, which downstream code treats as "condition not certifiable".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import (
    DivergenceRiskError,
    ScanLimitError,
    SequenceError,
    SummabilityError,
    ToleranceError,
)

__all__ = [
    "SequenceSpec",
    "HarmonicSeq",
    "GeometricSeq",
    "PowerSeq",
    "ExplicitSeq",
    "ScaledSeq",
    "PerturbedSeq",
    "sqrt_sequence",
    "SeqReport",
    "seq_validate",
    "check_rapid",
    "b_series",
    "lemma_ineq_slack",
    "lemma_ineq_check",
    "RescaleResult",
    "rescale",
    "DeltaSchedule",
    "delta_select",
    "perturb_borodin",
]

Number = "Fraction | float"


def _as_ratio(x) -> Fraction:
    """Exact rational view of a ratio-like input; floats keep their exact binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _as_number(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return float(x)


class SequenceSpec:
    """Base class: positive values, closed-form tails where the form allows."""

    def value(self, n: int):
        """e_n, exact Fraction when the form has rational data."""
        raise NotImplementedError

    def float_value(self, n: int) -> float:
        return float(self.value(n))

    def weighted_tail(self, n: int):
        """sum_{j>=n} 2^(j-n) e_j, or inf when no finite closed form exists."""
        raise NotImplementedError

    def tail(self, n: int):
        """sum_{j>=n} e_j (exact or a certified upper bound), or inf."""
        raise NotImplementedError

    @property
    def is_null(self) -> bool:
        """Whether the form guarantees e_n -> 0."""
        return True

    def describe(self) -> str:
        return type(self).__name__

    def _check_level(self, n: int):
        if n < 1:
            raise SequenceError(f"sequence index must be >= 1, got {n}")


@dataclass(frozen=True)
class HarmonicSeq(SequenceSpec):
    """e_n = 1/n."""

    def value(self, n: int):
        self._check_level(n)
        return Fraction(1, n)

    def weighted_tail(self, n: int):
        return math.inf

    def tail(self, n: int):
        return math.inf

    def describe(self) -> str:
        return "harmonic e_n = 1/n"


@dataclass(frozen=True)
class GeometricSeq(SequenceSpec):
    """e_n = ratio^n, ratio in (0, 1)."""

    ratio: Fraction

    def __post_init__(self):
        object.__setattr__(self, "ratio", _as_ratio(self.ratio))
        if not (0 < self.ratio < 1):
            raise SequenceError(f"geometric ratio must lie in (0, 1), got {self.ratio}")

    def value(self, n: int):
        self._check_level(n)
        return self.ratio**n

    def weighted_tail(self, n: int):
        if 2 * self.ratio >= 1:
            return math.inf
        return self.value(n) / (1 - 2 * self.ratio)

    def tail(self, n: int):
        return self.value(n) / (1 - self.ratio)

    def describe(self) -> str:
        return f"geometric e_n = ({self.ratio})^n"


@dataclass(frozen=True)
class PowerSeq(SequenceSpec):
    """e_n = n^(-alpha), alpha > 0.  Evaluates in floats."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise SequenceError(f"power exponent must be positive, got {self.alpha}")

    def value(self, n: int):
        self._check_level(n)
        return float(n) ** (-self.alpha)

    def weighted_tail(self, n: int):
        return math.inf

    def tail(self, n: int):
        if self.alpha <= 1.0:
            return math.inf
        # integral comparison: sum_{j>=n} j^-a <= n^-a + n^(1-a)/(a-1)
        return self.value(n) + float(n) ** (1.0 - self.alpha) / (self.alpha - 1.0)

    def describe(self) -> str:
        return f"power e_n = n^(-{self.alpha})"


@dataclass(frozen=True)
class ExplicitSeq(SequenceSpec):
    """Explicit prefix continued by a geometric tail from its last entry."""

    prefix: tuple
    tail_ratio: Fraction

    def __post_init__(self):
        if not self.prefix:
            raise SequenceError("explicit sequence needs a nonempty prefix")
        object.__setattr__(self, "prefix", tuple(_as_number(v) for v in self.prefix))
        object.__setattr__(self, "tail_ratio", _as_ratio(self.tail_ratio))
        if any(not (v > 0) for v in self.prefix):
            raise SequenceError("explicit prefix entries must be positive")
        if not (0 < self.tail_ratio < 1):
            raise SequenceError(
                f"tail ratio must lie in (0, 1), got {self.tail_ratio}"
            )

    def value(self, n: int):
        self._check_level(n)
        last = len(self.prefix)
        if n <= last:
            return self.prefix[n - 1]
        return self.prefix[-1] * self.tail_ratio ** (n - last)

    def weighted_tail(self, n: int):
        r = self.tail_ratio
        if 2 * r >= 1:
            return math.inf
        last = len(self.prefix)
        if n > last:
            return self.value(n) / (1 - 2 * r)
        partial = sum(2 ** (j - n) * self.prefix[j - 1] for j in range(n, last + 1))
        geom = self.prefix[-1] * (2 * r) / (1 - 2 * r)
        return partial + 2 ** (last - n) * geom

    def tail(self, n: int):
        r = self.tail_ratio
        last = len(self.prefix)
        if n > last:
            return self.value(n) / (1 - r)
        partial = sum(self.prefix[j - 1] for j in range(n, last + 1))
        return partial + self.prefix[-1] * r / (1 - r)

    def describe(self) -> str:
        return f"explicit prefix of {len(self.prefix)} entries, tail ratio {self.tail_ratio}"


@dataclass(frozen=True)
class ScaledSeq(SequenceSpec):
    """factor * e_n for a positive factor."""

    base: SequenceSpec
    factor: Fraction

    def __post_init__(self):
        object.__setattr__(self, "factor", _as_number(self.factor))
        if not (self.factor > 0):
            raise SequenceError("scale factor must be positive")

    def value(self, n: int):
        return self.factor * self.base.value(n)

    def weighted_tail(self, n: int):
        return self.factor * self.base.weighted_tail(n)

    def tail(self, n: int):
        return self.factor * self.base.tail(n)

    @property
    def is_null(self) -> bool:
        return self.base.is_null

    def describe(self) -> str:
        return f"{self.factor} * ({self.base.describe()})"


@dataclass(frozen=True)
class PerturbedSeq(SequenceSpec):
    """e_n + 1/(k 3^n): nudges a summable sequence into strict tail domination."""

    base: SequenceSpec
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise SequenceError("perturbation index k must be >= 1")

    def _bump(self, n: int):
        return Fraction(1, self.k * 3**n)

    def value(self, n: int):
        return self.base.value(n) + self._bump(n)

    def weighted_tail(self, n: int):
        # sum_{j>=n} 2^(j-n) 3^(-j) = 3 * 3^(-n)
        return self.base.weighted_tail(n) + Fraction(3, self.k * 3**n)

    def tail(self, n: int):
        # sum_{j>=n} 3^(-j) = (3/2) 3^(-n)
        return self.base.tail(n) + Fraction(3, 2 * self.k * 3**n)

    def describe(self) -> str:
        return f"({self.base.describe()}) + 1/({self.k} * 3^n)"


def sqrt_sequence(seq: SequenceSpec) -> SequenceSpec:
    """Coordinate-free square root: returns a spec for sqrt(e_n)."""
    if isinstance(seq, HarmonicSeq):
        return PowerSeq(0.5)
    if isinstance(seq, PowerSeq):
        return PowerSeq(seq.alpha / 2.0)
    if isinstance(seq, GeometricSeq):
        return GeometricSeq(_sqrt_number(seq.ratio))
    if isinstance(seq, ExplicitSeq):
        return ExplicitSeq(
            tuple(_sqrt_number(v) for v in seq.prefix), _sqrt_number(seq.tail_ratio)
        )
    if isinstance(seq, ScaledSeq):
        return ScaledSeq(sqrt_sequence(seq.base), _sqrt_number(seq.factor))
    raise SequenceError(f"no square-root form for {seq.describe()}")


def _sqrt_number(v):
    if isinstance(v, Fraction):
        num, den = v.numerator, v.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd)
    return math.sqrt(float(v))


@dataclass(frozen=True)
class SeqReport:
    ok: bool
    messages: tuple[str, ...]
    first_violation: int | None
    tail_note: str


def seq_validate(seq: SequenceSpec, horizon: int, strict: bool = True) -> SeqReport:
    """Positivity, (strict) decrease up to the horizon, and a tail certificate."""
    if horizon < 1:
        raise SequenceError("horizon must be >= 1")
    messages: list[str] = []
    first = None
    for n in range(1, horizon + 1):
        v = seq.value(n)
        if not (v > 0):
            messages.append(f"e_{n} = {float(v)!r} is not positive")
            first = first or n
            break
    for n in range(1, horizon):
        a, b = seq.value(n), seq.value(n + 1)
        bad = (b >= a) if strict else (b > a)
        if bad:
            messages.append(
                f"sequence fails to decrease at index {n + 1}: "
                f"e_{n} = {float(a)!r}, e_{n + 1} = {float(b)!r}"
            )
            if first is None:
                first = n + 1
            break
    if not seq.is_null:
        messages.append("form does not guarantee convergence to zero")
        first = first or 1

    t = seq.tail(horizon)
    if t != math.inf:
        tail_note = f"certified tail bound: sum_(j>={horizon}) e_j <= {float(t)!r}"
    else:
        tail_note = (
            f"no geometric tail; beyond the horizon only e_n <= e_{horizon} = "
            f"{seq.float_value(horizon)!r} is used (form is null)"
        )
    return SeqReport(
        ok=not messages,
        messages=tuple(messages),
        first_violation=first,
        tail_note=tail_note,
    )


def check_rapid(seq: SequenceSpec, factor: int, horizon: int) -> bool:
    """True iff e_n >= factor * e_(n+1) for every n <= horizon."""
    if factor not in (2, 3):
        raise SequenceError(f"rapid-decrease factor must be 2 or 3, got {factor}")
    return all(seq.value(n) >= factor * seq.value(n + 1) for n in range(1, horizon + 1))


def b_series(seq: SequenceSpec, n: int, horizon: int = 40):
    """b_n = sum_{j>=n} 2^(j-n) e_j for sequences with e_(j+1)/e_j < 1/2.

    Also verifies the summability of sum_n b_n through the ratio bound
    b_(m+1)/b_m <= 1/(2+eps), where 2+eps is the worst decay factor seen.
    Raises when the decay precondition fails.
    """
    seq._check_level(n)
    ratios = [seq.value(j + 1) / seq.value(j) for j in range(1, horizon + 1)]
    q = max(ratios)
    if q >= Fraction(1, 2):
        raise DivergenceRiskError(
            f"needs e_(j+1) <= e_j/(2+eps); worst observed ratio is {float(q)!r}"
        )
    if seq.weighted_tail(n) == math.inf:
        raise DivergenceRiskError(
            "sequence form has no finite weighted tail; series would diverge"
        )
    prev = None
    for m in range(n, n + min(horizon, 10)):
        bm = seq.weighted_tail(m)
        if prev is not None and bm > q * prev * (1 + Fraction(1, 10**12)):
            raise ToleranceError(
                f"series ratio bound violated at m={m}: {float(bm)!r} vs "
                f"{float(q * prev)!r}"
            )
        prev = bm
    return seq.weighted_tail(n)


def lemma_ineq_slack(seq: SequenceSpec, mode: str, n: int, m: int | None = None):
    """Slack lhs - rhs of the factor-3 or factor-2 tail inequality at (n, m)."""
    if mode == "three":
        if m is None or m < 1:
            raise SequenceError("mode 'three' needs a block length m >= 1")
        rhs = sum(2 ** (j - n - 1) * seq.value(j) for j in range(n + 1, n + m + 1))
        rhs += 2**m * seq.value(n + m)
        return seq.value(n) - rhs
    if mode == "two":
        t = seq.tail(n + 1)
        if t == math.inf:
            return -math.inf
        return seq.value(n) - t
    raise SequenceError(f"unknown mode {mode!r}")


def lemma_ineq_check(
    seq: SequenceSpec, mode: str, n_max: int, m_max: int | None = None
) -> bool:
    """Verify the displayed tail inequality over the whole (n, m) range.

    mode 'three' needs e_n >= 3 e_(n+1): e_n >= sum_{j=n+1}^{n+m} 2^(j-n-1) e_j
    + 2^m e_(n+m) for all n <= n_max, m <= m_max.  mode 'two' needs
    e_n >= 2 e_(n+1): e_n >= sum_{j>n} e_j, tail in closed form.
    """
    factor = 3 if mode == "three" else 2
    probe = n_max + (m_max or 0) + 1
    if not check_rapid(seq, factor, probe):
        raise SequenceError(
            f"factor-{factor} decrease hypothesis fails below index {probe}"
        )
    fuzz = 1e-12
    if mode == "three":
        if m_max is None or m_max < 1:
            raise SequenceError("mode 'three' needs m_max >= 1")
        for n in range(1, n_max + 1):
            for m in range(1, m_max + 1):
                slack = lemma_ineq_slack(seq, mode, n, m)
                if slack < -fuzz * float(seq.value(n)):
                    return False
        return True
    for n in range(1, n_max + 1):
        slack = lemma_ineq_slack(seq, mode, n)
        if slack == -math.inf or slack < -fuzz * float(seq.value(n)):
            return False
    return True


def _last_true(pred: Callable[[int], bool], start: int, cap: int) -> int:
    """Largest m >= start with pred(m), for a predicate true at start and
    eventually false.  Galloping plus bisection, capped for safety."""
    if not pred(start):
        raise SequenceError("internal scan started outside the true region")
    lo, step = start, 1
    hi = None
    while hi is None:
        probe = lo + step
        if probe > cap:
            if pred(cap):
                raise ScanLimitError(
                    f"checkpoint scan exceeded the cap of {cap}; the sequence "
                    "decays too slowly to locate the next checkpoint"
                )
            hi = cap
            break
        if pred(probe):
            lo = probe
            step *= 2
        else:
            hi = probe
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class RescaleResult:
    """Checkpoint subsequence: targets f_k at indices n_k with f_k >= factor*f_(k+1).

    ``branches[k-1]`` records how entry k+1 was produced: 'rapid' when the
    next raw value was already small enough to be adopted verbatim, 'split'
    when the previous target was divided by the factor and the checkpoint
    index jumped forward.
    """

    f: tuple
    n: tuple[int, ...]
    factor: int
    branches: tuple[str, ...]


def rescale(
    seq: SequenceSpec, factor: int, checkpoints: int, scan_cap: int = 10_000_000
) -> RescaleResult:
    """Run the checkpoint construction verbatim.

    f_1 = e_1 and n_1 = 1.  Given (f_k, n_k): if e_(n_k + 1) <= f_k/factor,
    adopt it (f_(k+1) = e_(n_k+1), n_(k+1) = n_k + 1); otherwise halve by the
    factor (f_(k+1) = f_k/factor) and jump to the largest index still within
    factor reach, n_(k+1) = max{n >= n_k + 1 : f_k <= factor * e_n}, which is
    finite because the sequence is null.  Exact arithmetic wherever the form
    provides it, so the claimed invariants hold without rounding.
    """
    if factor not in (2, 3):
        raise SequenceError(f"factor must be 2 or 3, got {factor}")
    if checkpoints < 1:
        raise SequenceError("need at least one checkpoint")
    report = seq_validate(seq, horizon=min(checkpoints + 2, 50))
    if not report.ok:
        raise SequenceError("; ".join(report.messages))

    f = [seq.value(1)]
    n = [1]
    branches: list[str] = []
    for _ in range(checkpoints - 1):
        fk, nk = f[-1], n[-1]
        nxt = seq.value(nk + 1)
        if factor * nxt <= fk:
            f.append(nxt)
            n.append(nk + 1)
            branches.append("rapid")
        else:
            n.append(_last_true(lambda m: factor * seq.value(m) >= fk, nk + 1, scan_cap))
            f.append(fk / factor)
            branches.append("split")
    return RescaleResult(tuple(f), tuple(n), factor, tuple(branches))


@dataclass(frozen=True)
class DeltaSchedule:
    """Positive slack sequence delta_n certified against the strict tail condition.

    The slack at level n is sigma_n = min(e_(n-1), d_n) - sum_{j>=n} 2^(j-n) e_j,
    and delta_j = s_j * 4^(-(j+1)) where s_j is the running minimum of the
    finite slacks up to j.  That choice spends at most half of every slack, so
    the re-verification below always passes with margin at least sigma_n / 2.
    Beyond the horizon the last scale is frozen, keeping every infinite
    weighted tail in closed form.
    """

    seq: SequenceSpec
    horizon: int
    sigmas: tuple
    scales: tuple
    deltas: tuple
    verification: tuple

    def delta(self, j: int):
        if j < 1:
            raise SequenceError(f"delta index must be >= 1, got {j}")
        if j <= self.horizon:
            return self.deltas[j - 1]
        return self.scales[-1] * Fraction(1, 4 ** (j + 1))

    def sigma(self, n: int):
        if not (1 <= n <= self.horizon):
            raise SequenceError(f"slack only certified for 1..{self.horizon}")
        return self.sigmas[n - 1]

    def weighted_delta_tail(self, n: int):
        """sum_{j>=n} 2^(j-n) delta_j, exactly (geometric tail beyond horizon)."""
        if n < 1:
            raise SequenceError(f"index must be >= 1, got {n}")
        finite = sum(
            2 ** (j - n) * self.deltas[j - 1] for j in range(n, self.horizon + 1)
        )
        start = max(n, self.horizon + 1)
        # sum_{j>=J} 2^(j-n) 4^(-(j+1)) = 2^(-(n+J+1))
        tail = self.scales[-1] * Fraction(1, 2 ** (n + start + 1))
        return finite + tail

    def weighted_total(self, n: int):
        """sum_{j>=n} 2^(j-n) (e_j + delta_j)."""
        return self.seq.weighted_tail(n) + self.weighted_delta_tail(n)


def delta_select(seq: SequenceSpec, dnv, horizon: int) -> DeltaSchedule:
    """Choose slacks delta_n so the strict tail condition survives them.

    ``dnv`` lists the chain's level separations d_1..d_horizon (may contain
    inf).  Precondition, checked exactly where the form allows: for every
    n <= horizon, sum_{j>=n} 2^(j-n) e_j < min(e_(n-1), d_n), where e_0 is
    treated as infinite; a level whose min is infinite only needs the sum to
    be finite.  Raises ``SummabilityError`` naming the first bad level.
    """
    if horizon < 1:
        raise SequenceError("horizon must be >= 1")
    dnv = list(dnv)
    if len(dnv) < horizon:
        raise SequenceError(
            f"need separation values for levels 1..{horizon}, got {len(dnv)}"
        )
    sigmas = []
    for n in range(1, horizon + 1):
        total = seq.weighted_tail(n)
        e_prev = seq.value(n - 1) if n >= 2 else math.inf
        bound = min(e_prev, dnv[n - 1])
        if bound == math.inf:
            if total == math.inf:
                raise SummabilityError(n, total, bound)
            sigmas.append(math.inf)
        else:
            if not (total < bound):
                raise SummabilityError(n, total, bound)
            sigmas.append(bound - total)

    scales = []
    running = None
    for s in sigmas:
        if s != math.inf:
            running = s if running is None else min(running, s)
        # an all-infinite prefix is unconstrained; e_1 is a harmless scale
        scales.append(running if running is not None else seq.value(1))
    deltas = tuple(
        scales[j - 1] * Fraction(1, 4 ** (j + 1)) for j in range(1, horizon + 1)
    )

    schedule = DeltaSchedule(
        seq=seq,
        horizon=horizon,
        sigmas=tuple(sigmas),
        scales=tuple(scales),
        deltas=deltas,
        verification=(),
    )
    rows = []
    for n in range(1, horizon + 1):
        total = schedule.weighted_total(n)
        e_prev = seq.value(n - 1) if n >= 2 else math.inf
        bound = min(e_prev, dnv[n - 1])
        if bound == math.inf:
            rows.append((n, float(total), math.inf, math.inf))
            continue
        margin = bound - total
        if not (margin > 0) or 2 * margin < sigmas[n - 1]:
            raise ToleranceError(
                f"slack re-verification failed at n={n}: margin {float(margin)!r} "
                f"vs required {float(sigmas[n - 1]) / 2!r}"
            )
        rows.append((n, float(total), float(bound), float(margin)))
    object.__setattr__(schedule, "verification", tuple(rows))
    return schedule


def perturb_borodin(seq: SequenceSpec, k: int, horizon: int = 50) -> PerturbedSeq:
    """Perturb e_n to e_n + 1/(k 3^n), making tail domination strict.

    Requires e_n >= sum_{j>n} e_j up to the horizon (so the base is already
    at the non-strict boundary or better); the perturbed sequence then
    satisfies the strict version because the bump dominates its own tail.
    """
    for n in range(1, horizon + 1):
        t = seq.tail(n + 1)
        if t == math.inf:
            raise SequenceError(
                "tail domination precondition fails: sum_(j>n) e_j diverges"
            )
        if not (seq.value(n) >= t):
            raise SequenceError(
                f"tail domination precondition fails at n={n}: "
                f"e_n = {seq.float_value(n)!r} < tail {float(t)!r}"
            )
    out = PerturbedSeq(seq, k)
    for n in range(1, horizon + 1):
        if not (out.value(n) > out.tail(n + 1)):
            raise ToleranceError(f"strict perturbed domination failed at n={n}")
    return out
