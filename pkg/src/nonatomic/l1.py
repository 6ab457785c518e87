"""Exact finite-support vectors in l1 and subsets of the naturals.

Coordinates are indexed from 1.  All values are :class:`fractions.Fraction`
and zero entries are never stored, so two vectors compare equal exactly
when they are equal as elements of l1.

Normalized indicator vectors ``c * 1_F`` are stored compactly (a support
plus one value) because the upper-density family has supports of size
``n`` for every ``n``; masses of such vectors on periodic sets are counted
arithmetically instead of coordinate by coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

Rational = Union[int, Fraction]

__all__ = [
    "SparseVec",
    "SubsetSpec",
    "ExplicitFinite",
    "EventuallyPeriodic",
    "finite",
    "periodic",
    "segment",
    "full",
    "empty",
    "evens",
    "odds",
    "residue_class",
    "norm1",
    "norm_inf",
    "project",
    "add",
    "scale",
    "modulus",
    "basis",
    "set_meet",
    "set_union",
    "set_complement",
]


# ---------------------------------------------------------------------------
# Subsets of N
# ---------------------------------------------------------------------------


class SubsetSpec:
    """A subset of N = {1, 2, ...}: explicit-finite or eventually periodic."""

    def __contains__(self, j: object) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def count_in(self, support: Iterable[int]) -> int:
        """Return ``|self ∩ support|``."""
        raise NotImplementedError  # pragma: no cover

    def members(self, J: int) -> list[int]:
        """Sorted members lying in the initial segment [J]."""
        raise NotImplementedError  # pragma: no cover

    def is_empty_within(self, J: int) -> bool:
        return self.count_in(range(1, J + 1)) == 0

    def describe(self) -> dict:
        raise NotImplementedError  # pragma: no cover

    def __and__(self, other: "SubsetSpec") -> "SubsetSpec":
        return set_meet(self, other)

    def __or__(self, other: "SubsetSpec") -> "SubsetSpec":
        return set_union(self, other)

    def __invert__(self) -> "SubsetSpec":
        return set_complement(self)


@dataclass(frozen=True)
class ExplicitFinite(SubsetSpec):
    elements: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for e in self.elements:
            if not isinstance(e, int) or e < 1:
                raise ValueError(f"set elements must be positive integers, got {e!r}")

    def __contains__(self, j: object) -> bool:
        return j in self.elements

    def count_in(self, support: Iterable[int]) -> int:
        if isinstance(support, range):
            return sum(1 for e in self.elements if e in support)
        if isinstance(support, (set, frozenset)):
            a, b = (self.elements, support) if len(self.elements) <= len(support) else (support, self.elements)
            return sum(1 for e in a if e in b)
        return sum(1 for j in support if j in self.elements)

    def members(self, J: int) -> list[int]:
        return sorted(e for e in self.elements if e <= J)

    @property
    def max_element(self) -> int:
        return max(self.elements, default=0)

    def describe(self) -> dict:
        return {"kind": "finite", "elements": sorted(self.elements)}

    def __repr__(self) -> str:
        return f"finite({sorted(self.elements)})"


@dataclass(frozen=True)
class EventuallyPeriodic(SubsetSpec):
    """Membership of ``n >= threshold`` is ``n % period in residues``.

    Below the threshold, membership is explicit: ``n in head``.  Build these
    through :func:`periodic`, which returns the canonical form.
    """

    period: int
    residues: frozenset
    threshold: int = 1
    head: frozenset = frozenset()

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be >= 1")
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if any(not 0 <= r < self.period for r in self.residues):
            raise ValueError("residues must lie in {0, ..., period-1}")
        if any(not 1 <= h < self.threshold for h in self.head):
            raise ValueError("head elements must lie below the threshold")

    def __contains__(self, j: object) -> bool:
        if not isinstance(j, int) or j < 1:
            return False
        if j < self.threshold:
            return j in self.head
        return j % self.period in self.residues

    def _count_tail(self, lo: int, hi: int) -> int:
        """Count residue-rule members in [lo, hi)."""
        if hi <= lo:
            return 0
        p = self.period
        full, rem = divmod(hi - lo, p)
        total = full * len(self.residues)
        start = lo + full * p
        total += sum(1 for n in range(start, hi) if n % p in self.residues)
        return total

    def count_in(self, support: Iterable[int]) -> int:
        if isinstance(support, range) and support.step == 1:
            lo, hi = max(support.start, 1), support.stop
            if hi <= lo:
                return 0
            head = sum(1 for h in self.head if lo <= h < hi)
            return head + self._count_tail(max(lo, self.threshold), hi)
        return sum(1 for j in support if j in self)

    def members(self, J: int) -> list[int]:
        out = sorted(h for h in self.head if h <= J)
        out.extend(n for n in range(self.threshold, J + 1) if n % self.period in self.residues)
        return out

    def density(self) -> Fraction:
        return Fraction(len(self.residues), self.period)

    def describe(self) -> dict:
        d = {"kind": "periodic", "period": self.period, "residues": sorted(self.residues)}
        if self.threshold > 1:
            d["threshold"] = self.threshold
            d["head"] = sorted(self.head)
        return d

    def __repr__(self) -> str:
        s = f"periodic({self.period}, {sorted(self.residues)}"
        if self.threshold > 1:
            s += f", threshold={self.threshold}, head={sorted(self.head)}"
        return s + ")"


def finite(elements: Iterable[int] = ()) -> ExplicitFinite:
    return ExplicitFinite(frozenset(int(e) for e in elements))


def periodic(period: int, residues: Iterable[int], threshold: int = 1, head: Iterable[int] = ()) -> SubsetSpec:
    """Canonical eventually periodic set (minimal period, minimal threshold).

    A spec with no residues is finite and comes back as :class:`ExplicitFinite`.
    """
    p = int(period)
    if p < 1:
        raise ValueError("period must be >= 1")
    R = {int(r) % p for r in residues}
    thr = max(int(threshold), 1)
    H = {int(h) for h in head if 1 <= int(h) < thr}
    if not R:
        return ExplicitFinite(frozenset(H))
    for d in sorted(_divisors(p)):
        if all((r % d in {s % d for s in R}) == (r in R) for r in range(p)):
            p, R = d, {r % d for r in R}
            break
    while thr > 1 and (((thr - 1) % p in R) == ((thr - 1) in H)):
        thr -= 1
        H.discard(thr)
    return EventuallyPeriodic(p, frozenset(R), thr, frozenset(H))


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def segment(m: int) -> ExplicitFinite:
    """The initial segment [m] = {1, ..., m}."""
    return ExplicitFinite(frozenset(range(1, int(m) + 1)))


def full() -> SubsetSpec:
    return periodic(1, [0])


def empty() -> ExplicitFinite:
    return ExplicitFinite(frozenset())


def evens() -> SubsetSpec:
    return periodic(2, [0])


def odds() -> SubsetSpec:
    return periodic(2, [1])


def residue_class(r: int, k: int) -> SubsetSpec:
    return periodic(k, [r])


def set_complement(A: SubsetSpec) -> SubsetSpec:
    if isinstance(A, ExplicitFinite):
        top = A.max_element
        return periodic(1, [0], threshold=top + 1, head=(n for n in range(1, top + 1) if n not in A.elements))
    p, thr = A.period, A.threshold
    return periodic(
        p,
        (r for r in range(p) if r not in A.residues),
        threshold=thr,
        head=(n for n in range(1, thr) if n not in A.head),
    )


def set_meet(A: SubsetSpec, B: SubsetSpec) -> SubsetSpec:
    if isinstance(A, ExplicitFinite):
        return ExplicitFinite(frozenset(e for e in A.elements if e in B))
    if isinstance(B, ExplicitFinite):
        return ExplicitFinite(frozenset(e for e in B.elements if e in A))
    L = math.lcm(A.period, B.period)
    thr = max(A.threshold, B.threshold)
    return periodic(
        L,
        (r for r in range(L) if r % A.period in A.residues and r % B.period in B.residues),
        threshold=thr,
        head=(n for n in range(1, thr) if n in A and n in B),
    )


def set_union(A: SubsetSpec, B: SubsetSpec) -> SubsetSpec:
    if isinstance(A, ExplicitFinite) and isinstance(B, ExplicitFinite):
        return ExplicitFinite(A.elements | B.elements)
    return set_complement(set_meet(set_complement(A), set_complement(B)))


# ---------------------------------------------------------------------------
# Sparse vectors
# ---------------------------------------------------------------------------


def _frac(v: Rational) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"expected an exact rational, got {type(v).__name__}")


class SparseVec:
    """Immutable finite-support element of l1 with exact rational entries."""

    __slots__ = ("_entries", "_support", "_value", "_hash")

    def __init__(self, entries: Mapping[int, Rational] | Iterable[tuple[int, Rational]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        d: dict[int, Fraction] = {}
        for j, v in items:
            if not isinstance(j, int) or j < 1:
                raise ValueError(f"coordinates are positive integers, got {j!r}")
            v = _frac(v)
            if v:
                d[j] = d.get(j, 0) + v
                if not d[j]:
                    del d[j]
        self._entries = d
        self._support = None
        self._value = None
        self._hash = None

    @classmethod
    def uniform(cls, support: Iterable[int], value: Rational) -> "SparseVec":
        """The vector ``value * 1_support`` in compact form."""
        value = _frac(value)
        if isinstance(support, range):
            if support.step != 1:
                support = frozenset(support)
            elif support.start < 1:
                raise ValueError("coordinates are positive integers")
        else:
            support = frozenset(int(j) for j in support)
            if any(j < 1 for j in support):
                raise ValueError("coordinates are positive integers")
        if not value or len(support) == 0:
            return cls()
        v = cls.__new__(cls)
        v._entries = None
        v._support = support
        v._value = value
        v._hash = None
        return v

    # -- mapping-like access ------------------------------------------------

    def _materialize(self) -> dict[int, Fraction]:
        if self._entries is None:
            self._entries = {j: self._value for j in self._support}
        return self._entries

    @property
    def entries(self) -> Mapping[int, Fraction]:
        return MappingProxyType(self._materialize())

    def items(self) -> Iterator[tuple[int, Fraction]]:
        if self._support is not None:
            v = self._value
            return ((j, v) for j in sorted(self._support)) if not isinstance(self._support, range) else ((j, v) for j in self._support)
        return iter(sorted(self._entries.items()))

    @property
    def support(self) -> frozenset | range:
        if self._support is not None:
            return self._support
        return frozenset(self._entries)

    def __getitem__(self, j: int) -> Fraction:
        if self._support is not None:
            return self._value if j in self._support else Fraction(0)
        return self._entries.get(j, Fraction(0))

    def __len__(self) -> int:
        return len(self._support) if self._support is not None else len(self._entries)

    def __bool__(self) -> bool:
        return len(self) > 0

    @property
    def max_index(self) -> int:
        if self._support is not None:
            s = self._support
            return s[-1] if isinstance(s, range) else max(s)
        return max(self._entries, default=0)

    @property
    def is_uniform(self) -> bool:
        return self._support is not None

    @property
    def uniform_value(self) -> Fraction | None:
        """The common value of a compact uniform vector, else ``None``."""
        return self._value if self._support is not None else None

    # -- norms ----------------------------------------------------------------

    def norm1(self) -> Fraction:
        if self._support is not None:
            return abs(self._value) * len(self._support)
        return sum((abs(v) for v in self._entries.values()), Fraction(0))

    def norm_inf(self) -> Fraction:
        if self._support is not None:
            return abs(self._value)
        return max((abs(v) for v in self._entries.values()), default=Fraction(0))

    def mass(self, A: SubsetSpec) -> Fraction:
        """``norm1(project(A, self))`` without building the projection."""
        if self._support is not None:
            return abs(self._value) * A.count_in(self._support)
        return sum((abs(v) for j, v in self._entries.items() if j in A), Fraction(0))

    def peak(self, A: SubsetSpec) -> Fraction:
        """``norm_inf(project(A, self))``."""
        if self._support is not None:
            return abs(self._value) if A.count_in(self._support) else Fraction(0)
        return max((abs(v) for j, v in self._entries.items() if j in A), default=Fraction(0))

    # -- algebra ----------------------------------------------------------------

    def __add__(self, other: "SparseVec") -> "SparseVec":
        if not isinstance(other, SparseVec):
            return NotImplemented
        d = dict(self._materialize())
        for j, v in other._materialize().items():
            s = d.get(j, 0) + v
            if s:
                d[j] = s
            else:
                d.pop(j, None)
        return SparseVec(d)

    def __neg__(self) -> "SparseVec":
        return self.scale(-1)

    def __sub__(self, other: "SparseVec") -> "SparseVec":
        if not isinstance(other, SparseVec):
            return NotImplemented
        return self + (-other)

    def scale(self, c: Rational) -> "SparseVec":
        c = _frac(c)
        if not c:
            return SparseVec()
        if self._support is not None:
            return SparseVec.uniform(self._support, c * self._value)
        return SparseVec({j: c * v for j, v in self._entries.items()})

    def __mul__(self, c: Rational) -> "SparseVec":
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __abs__(self) -> "SparseVec":
        if self._support is not None:
            return SparseVec.uniform(self._support, abs(self._value))
        return SparseVec({j: abs(v) for j, v in self._entries.items()})

    def project(self, A: SubsetSpec) -> "SparseVec":
        if self._support is not None:
            kept = [j for j in self._support if j in A]
            return SparseVec.uniform(kept, self._value)
        return SparseVec({j: v for j, v in self._entries.items() if j in A})

    # -- equality ---------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVec):
            return NotImplemented
        if self._support is not None and other._support is not None:
            return self._value == other._value and set(self._support) == set(other._support)
        if len(self) != len(other):
            return False
        return self._materialize() == other._materialize()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._materialize().items()))
        return self._hash

    def __repr__(self) -> str:
        if self._support is not None and len(self._support) > 8:
            return f"SparseVec.uniform(<{len(self._support)} coords>, {self._value})"
        body = ", ".join(f"{j}: {v}" for j, v in self.items())
        return f"SparseVec({{{body}}})"

    def to_json(self) -> dict[str, str]:
        return {str(j): str(v) for j, v in self.items()}


def basis(j: int) -> SparseVec:
    """The standard basis vector e_j."""
    return SparseVec({j: 1})


def norm1(x: SparseVec) -> Fraction:
    return x.norm1()


def norm_inf(x: SparseVec) -> Fraction:
    return x.norm_inf()


def project(A: SubsetSpec, x: SparseVec) -> SparseVec:
    """The characteristic projection ``1_A x``."""
    return x.project(A)


def add(x: SparseVec, y: SparseVec) -> SparseVec:
    return x + y


def scale(c: Rational, x: SparseVec) -> SparseVec:
    return x.scale(c)


def modulus(x: SparseVec) -> SparseVec:
    return abs(x)
