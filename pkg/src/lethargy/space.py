"""Finitely supported coordinate vectors and the metric functionals on them.

Every space handled by this package is a sequence-space model: a vector is a
finite map from positive coordinate indices to real coefficients, and each
norm variant is a concrete functional on such maps.  Four variants are
provided:

* ``Homogeneous(p)``       the plain l_p norm, p in [1, inf];
* ``SConvex(p, s)``        (l_p norm)^s, which scales as |t|^s;
* ``CompositeBounded``     sum_k w_k |x_k| / (1 + |x_k|) with w_k = scale * base^(-k),
                           bounded above by the sum of the weights on the support;
* ``SeminormFamily``       sum_j 2^(-j) u_j / (1 + u_j) over a finite list of
                           block seminorms u_j, each a power of a block l2 norm.

All built-in variants are coordinatewise monotone: growing any |x_k| never
decreases the value.  That property is what makes distances to coordinate
subspaces exactly computable by zeroing a tail (see ``chain``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidSpecError

__all__ = [
    "Vector",
    "FNormSpec",
    "Homogeneous",
    "SConvex",
    "CompositeBounded",
    "Seminorm",
    "SeminormFamily",
    "fnorm_eval",
    "fnorm_axiom_check",
    "AxiomReport",
]


class Vector:
    """Immutable vector with finite support; no zero coefficients are stored."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = dict(entries)
        clean: dict[int, float] = {}
        for idx, coeff in items.items():
            if not isinstance(idx, int) or isinstance(idx, bool) or idx < 1:
                raise ValueError(f"coordinate index must be a positive integer, got {idx!r}")
            value = float(coeff)
            if value != 0.0:
                clean[idx] = value
        self._entries = clean

    @classmethod
    def zero(cls) -> "Vector":
        return cls()

    @classmethod
    def basis(cls, idx: int, coeff: float = 1.0) -> "Vector":
        return cls({idx: coeff})

    @property
    def entries(self) -> dict[int, float]:
        return dict(self._entries)

    def coeff(self, idx: int) -> float:
        return self._entries.get(idx, 0.0)

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self._entries))

    def max_index(self) -> int:
        return max(self._entries, default=0)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._entries.values()), default=0.0)

    def tail(self, cut: int) -> "Vector":
        """Keep only coordinates strictly beyond ``cut``."""
        return Vector({i: c for i, c in self._entries.items() if i > cut})

    def head(self, cut: int) -> "Vector":
        """Keep only coordinates up to and including ``cut``."""
        return Vector({i: c for i, c in self._entries.items() if i <= cut})

    def __add__(self, other: "Vector") -> "Vector":
        merged = dict(self._entries)
        for idx, coeff in other._entries.items():
            merged[idx] = merged.get(idx, 0.0) + coeff
        return Vector(merged)

    def __sub__(self, other: "Vector") -> "Vector":
        return self + (-other)

    def __neg__(self) -> "Vector":
        return Vector({i: -c for i, c in self._entries.items()})

    def __mul__(self, scalar: float) -> "Vector":
        return Vector({i: c * scalar for i, c in self._entries.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Vector) and self._entries == other._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __iter__(self):
        return iter(sorted(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {c!r}" for i, c in sorted(self._entries.items()))
        return f"Vector({{{body}}})"


class FNormSpec:
    """Base class for the metric functionals.

    Subclasses implement ``value`` and ``ray_sup``.  ``monotone`` declares
    coordinatewise monotonicity, which every built-in variant satisfies; a
    hypothetical non-monotone functional would only be usable through the
    brute-force distance path.
    """

    monotone: bool = True

    def value(self, x: Vector) -> float:
        raise NotImplementedError

    def ray_sup(self, idx: int) -> float:
        """Supremum of ||t * b_idx|| over t >= 0 for the basis direction idx."""
        raise NotImplementedError


def _lp(entries: Iterable[float], p: float) -> float:
    coeffs = [abs(c) for c in entries]
    if not coeffs:
        return 0.0
    if math.isinf(p):
        return max(coeffs)
    if p == 1.0:
        return math.fsum(coeffs)
    if p == 2.0:
        return math.sqrt(math.fsum(c * c for c in coeffs))
    return math.fsum(c**p for c in coeffs) ** (1.0 / p)


@dataclass(frozen=True)
class Homogeneous(FNormSpec):
    """The l_p norm on finitely supported vectors, p in [1, inf]."""

    p: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise InvalidSpecError(f"l_p norm needs p >= 1, got {self.p}")

    def value(self, x: Vector) -> float:
        return _lp(x.entries.values(), self.p)

    def ray_sup(self, idx: int) -> float:
        return math.inf


@dataclass(frozen=True)
class SConvex(FNormSpec):
    """(l_p norm)^s: scales as |t|^s, s in (0, 1]."""

    p: float = 2.0
    s: float = 0.5

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise InvalidSpecError(f"needs p >= 1, got {self.p}")
        if not (0.0 < self.s <= 1.0):
            raise InvalidSpecError(f"needs s in (0, 1], got {self.s}")

    def value(self, x: Vector) -> float:
        return _lp(x.entries.values(), self.p) ** self.s

    def ray_sup(self, idx: int) -> float:
        return math.inf


@dataclass(frozen=True)
class CompositeBounded(FNormSpec):
    """sum_k w_k |x_k| / (1 + |x_k|) with weights w_k = scale * base^(-k).

    Each term is strictly below its weight, so the whole value is strictly
    below the sum of the weights over the support.
    """

    base: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.base > 1.0):
            raise InvalidSpecError(f"weight base must exceed 1, got {self.base}")
        if not (self.scale > 0.0):
            raise InvalidSpecError(f"weight scale must be positive, got {self.scale}")

    def weight(self, idx: int) -> float:
        return self.scale * self.base ** (-idx)

    def value(self, x: Vector) -> float:
        return math.fsum(
            self.weight(i) * abs(c) / (1.0 + abs(c)) for i, c in x.entries.items()
        )

    def ray_sup(self, idx: int) -> float:
        return self.weight(idx)

    def weight_sum(self, indices: Iterable[int]) -> float:
        return math.fsum(self.weight(i) for i in indices)


@dataclass(frozen=True)
class Seminorm:
    """One block seminorm: (l2 norm over the selected coordinates)^degree.

    Selection, in order of precedence: an explicit index tuple, a residue
    class mod ``modulus``, or all coordinates.  ``degree`` in (0, 1] keeps the
    term degree-homogeneous under scaling.
    """

    degree: float = 1.0
    modulus: int | None = None
    residue: int = 0
    indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if not (0.0 < self.degree <= 1.0):
            raise InvalidSpecError(f"seminorm degree must lie in (0, 1], got {self.degree}")
        if self.modulus is not None and self.modulus < 1:
            raise InvalidSpecError("seminorm modulus must be >= 1")

    def covers(self, idx: int) -> bool:
        if self.indices is not None:
            return idx in self.indices
        if self.modulus is not None:
            return idx % self.modulus == self.residue % self.modulus
        return True

    def value(self, x: Vector) -> float:
        sq = math.fsum(c * c for i, c in x.entries.items() if self.covers(i))
        if sq == 0.0:
            return 0.0
        return math.sqrt(sq) ** self.degree


@dataclass(frozen=True)
class SeminormFamily(FNormSpec):
    """sum_j 2^(-j) u_j / (1 + u_j) over a finite seminorm list (j from 1)."""

    terms: tuple[Seminorm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InvalidSpecError("seminorm family must contain at least one seminorm")

    def value(self, x: Vector) -> float:
        total = 0.0
        for j, term in enumerate(self.terms, start=1):
            u = term.value(x)
            total += 2.0 ** (-j) * u / (1.0 + u)
        return total

    def ray_sup(self, idx: int) -> float:
        # Along t * b_idx each covering term tends to its weight 2^(-j).
        return math.fsum(
            2.0 ** (-j) for j, term in enumerate(self.terms, start=1) if term.covers(idx)
        )


def fnorm_eval(spec: FNormSpec, x: Vector) -> float:
    """Evaluate the functional; zero exactly on the zero vector for total variants."""
    return spec.value(x)


@dataclass(frozen=True)
class AxiomReport:
    checked: int
    violations: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def fnorm_axiom_check(
    spec: FNormSpec,
    samples: list[Vector],
    scalars: Iterable[float] = (1.0, -1.0),
    rel_tol: float = 1e-12,
) -> AxiomReport:
    """Check the three metric-functional axioms on the given samples.

    Verifies: value zero iff the vector is zero, invariance under unit-modulus
    scalars, and the triangle inequality over consecutive sample pairs.
    """
    if not samples:
        raise ValueError("need at least one sample vector")
    violations: list[str] = []
    checked = 0

    zero_val = fnorm_eval(spec, Vector.zero())
    checked += 1
    if zero_val != 0.0:
        violations.append(f"zero vector has value {zero_val!r}")

    for x in samples:
        nx = fnorm_eval(spec, x)
        checked += 1
        if x and nx <= 0.0:
            violations.append(f"nonzero vector {x!r} has value {nx!r}")
        for alpha in scalars:
            if abs(abs(alpha) - 1.0) > 1e-15:
                continue
            checked += 1
            na = fnorm_eval(spec, x * alpha)
            slack = rel_tol * max(1.0, nx)
            if abs(na - nx) > slack:
                violations.append(
                    f"unit-scalar invariance broken: alpha={alpha!r}, {na!r} != {nx!r}"
                )

    for x, y in zip(samples, samples[1:]):
        checked += 1
        nxy = fnorm_eval(spec, x + y)
        bound = fnorm_eval(spec, x) + fnorm_eval(spec, y)
        if nxy > bound * (1.0 + rel_tol) + 1e-300:
            violations.append(f"triangle inequality broken: {nxy!r} > {bound!r}")

    return AxiomReport(checked=checked, violations=tuple(violations))
