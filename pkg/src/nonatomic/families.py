"""Bounded sequences in l1: normalized indicator families and their relatives."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .l1 import Rational, SparseVec, _frac

__all__ = [
    "SeqFamily",
    "TLambdaSpec",
    "TLambdaReport",
    "make_xF",
    "upper_density_family",
    "family_from_sets",
    "check_t_lambda",
    "generate_t_lambda",
    "modulate",
    "embed_linf",
    "add_families",
    "zero_family",
    "constant_family",
]


@dataclass(frozen=True)
class SeqFamily:
    """A materialized sequence ``x_1, ..., x_N`` of sparse vectors.

    ``sup_norm`` is the recorded bound ``r`` with ``norm1(x_n) <= r`` for
    every member; ``ground`` is the smallest ``J`` with all supports in [J].
    Members are indexed from 1: ``family[n]`` is ``x_n``.
    """

    elements: tuple[SparseVec, ...]
    sup_norm: Fraction
    ground: int
    label: str = ""

    @classmethod
    def from_vectors(cls, vectors: Iterable[SparseVec], label: str = "", sup_norm: Rational | None = None) -> "SeqFamily":
        elements = tuple(vectors)
        norms = [v.norm1() for v in elements]
        actual = max(norms, default=Fraction(0))
        if sup_norm is None:
            r = actual
        else:
            r = _frac(sup_norm)
            if actual > r:
                raise ValueError(f"declared sup-norm bound {r} is below an actual member norm {actual}")
        ground = max((v.max_index for v in elements), default=0)
        return cls(elements, r, ground, label)

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, n: int) -> SparseVec:
        if not 1 <= n <= len(self.elements):
            raise IndexError(f"family index {n} outside 1..{len(self.elements)}")
        return self.elements[n - 1]

    def __iter__(self):
        return iter(self.elements)

    def window(self, n0: int, N: int) -> range:
        """Indices of the window ``n0 <= n <= N``, validated against the length."""
        if not 1 <= n0 <= N:
            raise ValueError(f"empty or invalid window {n0}:{N}")
        if N > len(self.elements):
            raise ValueError(f"window horizon {N} exceeds family length {len(self.elements)}")
        return range(n0, N + 1)

    def window_sup(self, n0: int | None = None, N: int | None = None) -> Fraction:
        n0 = 1 if n0 is None else n0
        N = len(self) if N is None else N
        return max((self[n].norm1() for n in self.window(n0, N)), default=Fraction(0))

    def support_in_window(self, n0: int, N: int) -> list[int]:
        s: set[int] = set()
        for n in self.window(n0, N):
            s.update(self[n].support)
        return sorted(s)

    def relabel(self, label: str) -> "SeqFamily":
        return SeqFamily(self.elements, self.sup_norm, self.ground, label)


def make_xF(F: Iterable[int]) -> SparseVec:
    """The norm-one vector ``|F|^-1 1_F``."""
    if not isinstance(F, range):
        F = frozenset(F)
    if len(F) == 0:
        raise ValueError("x_F needs a nonempty set F")
    return SparseVec.uniform(F, Fraction(1, len(F)))


def upper_density_family(N: int) -> SeqFamily:
    """``x_n = n^-1 1_[n]`` for ``n = 1..N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return SeqFamily.from_vectors((make_xF(range(1, n + 1)) for n in range(1, N + 1)), label=f"upper_density({N})", sup_norm=1)


def family_from_sets(sets: Sequence[Iterable[int]], label: str = "from_sets") -> SeqFamily:
    vecs = []
    for i, F in enumerate(sets, start=1):
        F = F if isinstance(F, range) else frozenset(F)
        if len(F) == 0:
            raise ValueError(f"set number {i} is empty")
        vecs.append(make_xF(F))
    return SeqFamily.from_vectors(vecs, label=label, sup_norm=1 if vecs else 0)


def zero_family(N: int, label: str = "zero") -> SeqFamily:
    return SeqFamily.from_vectors([SparseVec()] * N, label=label)


def constant_family(v: SparseVec, N: int, label: str = "constant") -> SeqFamily:
    return SeqFamily.from_vectors([v] * N, label=label)


def add_families(x: SeqFamily, y: SeqFamily, label: str | None = None) -> SeqFamily:
    if len(x) != len(y):
        raise ValueError(f"families have different lengths {len(x)} and {len(y)}")
    return SeqFamily.from_vectors((a + b for a, b in zip(x, y)), label=label or f"({x.label})+({y.label})")


def modulate(a: Sequence[Rational], x: SeqFamily, label: str | None = None) -> SeqFamily:
    """The product ``(a_n x_n)`` with recorded bound ``max|a_n| * r``."""
    if len(a) < len(x):
        raise ValueError(f"need {len(x)} multipliers, got {len(a)}")
    a = [_frac(c) for c in a[: len(x)]]
    r = max((abs(c) for c in a), default=Fraction(0)) * x.sup_norm
    return SeqFamily.from_vectors((v.scale(c) for c, v in zip(a, x)), label=label or f"modulate({x.label})", sup_norm=r)


def embed_linf(a: Sequence[Rational], H: Sequence[Iterable[int]], label: str = "embed_linf") -> SeqFamily:
    """The image ``(a_n x_{H_n})`` of a bounded scalar sequence."""
    if len(a) != len(H):
        raise ValueError("a and H must have equal lengths")
    return modulate(a, family_from_sets(H), label=label)


# ---------------------------------------------------------------------------
# T_lambda families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TLambdaSpec:
    lam: Fraction
    sets: tuple[frozenset, ...]

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if any(len(F) == 0 for F in self.sets):
            raise ValueError("T_lambda sets must be nonempty")

    def family(self, label: str = "t_lambda") -> SeqFamily:
        return family_from_sets(self.sets, label=label)


@dataclass(frozen=True)
class TLambdaReport:
    ok: bool
    rows: tuple[tuple[int, int, Fraction, bool], ...]  # (m, q_m, exponent lambda*m, within bound)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "rows": [{"m": m, "q_m": q, "bound": f"2^({e})", "within": w} for m, q, e, w in self.rows],
        }


def _within(q: int, lam: Fraction, m: int) -> bool:
    # q <= 2^(p m / s)  <=>  q^s <= 2^(p m)
    return q ** lam.denominator <= 2 ** (lam.numerator * m)


def check_t_lambda(spec: TLambdaSpec) -> TLambdaReport:
    counts = Counter(len(F) for F in spec.sets)
    rows = tuple((m, q, spec.lam * m, _within(q, spec.lam, m)) for m, q in sorted(counts.items()))
    return TLambdaReport(all(r[3] for r in rows), rows)


def generate_t_lambda(
    lam: Rational,
    size_range: tuple[int, int],
    count_per_size: int | Mapping[int, int] | Callable[[int], int],
    ground_size: int,
    seed: int,
) -> TLambdaSpec:
    """Draw ``count(m)`` uniform ``m``-subsets of [ground_size] for each size.

    Sizes run over ``size_range`` inclusive; sets are ordered by size.
    """
    lam = _frac(lam)
    lo, hi = size_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad size range {size_range}")
    if hi > ground_size:
        raise ValueError(f"size {hi} exceeds ground size {ground_size}")
    if callable(count_per_size):
        count = count_per_size
    elif isinstance(count_per_size, Mapping):
        count = lambda m: count_per_size.get(m, 0)  # noqa: E731
    else:
        count = lambda m: count_per_size  # noqa: E731
    rng = random.Random(seed)
    pool = range(1, ground_size + 1)
    sets = []
    for m in range(lo, hi + 1):
        c = int(count(m))
        if c < 0 or not _within(c, lam, m):
            raise ValueError(f"{c} sets of size {m} exceed the bound 2^({lam * m})")
        sets.extend(frozenset(rng.sample(pool, m)) for _ in range(c))
    spec = TLambdaSpec(lam, tuple(sets))
    assert check_t_lambda(spec).ok
    return spec
