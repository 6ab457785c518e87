"""Column operators on l1, their coordinatewise lift, and the transfer bounds.

An operator ``T`` is stored by its columns ``z_j = T e_j`` so that
``T x = sum_j x(j) z_j``; its norm is ``t = max_j norm1(z_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .families import SeqFamily, make_xF
from .l1 import SparseVec, SubsetSpec, segment
from .partitions import FineCertificate, Partition, is_fine, revalidate
from .submeasure import ChainClassification, classify_chain

__all__ = [
    "ColumnOperator",
    "identity_operator",
    "rank_one_operator",
    "columns_from_family",
    "cesaro_operator",
    "apply",
    "hat_apply",
    "cesaro",
    "LemmaReport",
    "lemma_triangle_bound",
    "lemma_split_bound",
    "TransferResult",
    "transfer_fineness",
    "ApproxReport",
    "finite_support_approx",
]


def _norm(v: SparseVec, which: str) -> Fraction:
    if which == "1":
        return v.norm1()
    if which == "inf":
        return v.norm_inf()
    raise ValueError(f"norm must be '1' or 'inf', got {which!r}")


def _proj_norm(v: SparseVec, A: SubsetSpec, which: str) -> Fraction:
    return v.mass(A) if which == "1" else v.peak(A)


class ColumnOperator:
    """Immutable operator on l1 given by finitely many nonzero columns."""

    __slots__ = ("_columns", "norm", "label")

    def __init__(self, columns: Mapping[int, SparseVec], label: str = ""):
        cols = {}
        for j, z in columns.items():
            if not isinstance(j, int) or j < 1:
                raise ValueError(f"column indices are positive integers, got {j!r}")
            if z:
                cols[j] = z
        self._columns = cols
        self.norm = max((z.norm1() for z in cols.values()), default=Fraction(0))
        self.label = label

    def column(self, j: int) -> SparseVec:
        return self._columns.get(j, SparseVec())

    @property
    def columns(self) -> Mapping[int, SparseVec]:
        return dict(self._columns)

    @property
    def width(self) -> int:
        """Largest index of a nonzero column."""
        return max(self._columns, default=0)

    def column_family(self, J: int | None = None) -> SeqFamily:
        """The columns ``z_1, ..., z_J`` viewed as a sequence."""
        J = self.width if J is None else J
        return SeqFamily.from_vectors((self.column(j) for j in range(1, J + 1)), label=f"columns({self.label})")

    def __call__(self, x: SparseVec) -> SparseVec:
        return apply(self, x)

    def __repr__(self) -> str:
        return f"ColumnOperator({self.label or len(self._columns)}, t={self.norm})"


def identity_operator(J: int) -> ColumnOperator:
    return ColumnOperator({j: SparseVec({j: 1}) for j in range(1, J + 1)}, label=f"identity({J})")


def rank_one_operator(target: SparseVec, J: int) -> ColumnOperator:
    """Every column ``z_j`` (``j <= J``) equal to ``target``."""
    return ColumnOperator({j: target for j in range(1, J + 1)}, label="rank_one")


def columns_from_family(x: SeqFamily) -> ColumnOperator:
    """The operator with ``T e_j = x_j``."""
    return ColumnOperator({j: x[j] for j in range(1, len(x) + 1)}, label=x.label)


def cesaro_operator(H: Sequence[Iterable[int]], label: str = "cesaro") -> ColumnOperator:
    """Columns ``z_j = x_{H_j}``; with ``H_j = [j]`` these are the upper-density columns."""
    return ColumnOperator({j: make_xF(Hj) for j, Hj in enumerate(H, start=1)}, label=label)


def apply(T: ColumnOperator, x: SparseVec) -> SparseVec:
    """``T x = sum_j x(j) z_j``, exactly."""
    acc: dict[int, Fraction] = {}
    steps: dict[int, Fraction] = {}  # coefficient changes from columns uniform on a range
    for j, c in x.items():
        z = T.column(j)
        s = z.support
        if z.is_uniform and isinstance(s, range) and s.step == 1 and len(s) > 8:
            w = c * z.uniform_value
            steps[s.start] = steps.get(s.start, 0) + w
            steps[s.stop] = steps.get(s.stop, 0) - w
            continue
        for k, v in z.items():
            acc[k] = acc.get(k, 0) + c * v
    if steps:
        level = Fraction(0)
        points = sorted(steps)
        for a, b in zip(points, points[1:]):
            level += steps[a]
            if level:
                for k in range(a, b):
                    acc[k] = acc.get(k, 0) + level
    return SparseVec(acc)


def hat_apply(T: ColumnOperator, x: SeqFamily) -> SeqFamily:
    """Coordinatewise lift ``(T x_n)_n`` with recorded bound ``t * r``."""
    return SeqFamily.from_vectors((apply(T, v) for v in x), label=f"{T.label or 'T'}^({x.label})", sup_norm=T.norm * x.sup_norm)


def cesaro(x: SeqFamily, H: Sequence[Iterable[int]], label: str | None = None) -> SeqFamily:
    """Averages ``y_n = |H_n|^-1 sum_{j in H_n} x_j``."""
    out = []
    for n, Hn in enumerate(H, start=1):
        Hn = sorted(Hn)
        if not Hn:
            raise ValueError(f"H_{n} is empty")
        if Hn[0] < 1 or Hn[-1] > len(x):
            raise ValueError(f"H_{n} is not contained in [{len(x)}]")
        acc = SparseVec()
        for j in Hn:
            acc = acc + x[j]
        out.append(acc.scale(Fraction(1, len(Hn))))
    return SeqFamily.from_vectors(out, label=label or f"cesaro({x.label})")


# ---------------------------------------------------------------------------
# Per-index inequality chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    kind: str  # "triangle" | "split"
    norm: str
    window: tuple[int, int]
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "norm": self.norm,
            "window": list(self.window),
            "ok": self.ok,
            "violations": list(self.violations),
            "columns": list(self.columns),
            "rows": [[str(v) for v in r] for r in self.rows],
        }


def lemma_triangle_bound(T: ColumnOperator, x: SeqFamily, A: SubsetSpec, n0: int, N: int, norm: str = "1") -> LemmaReport:
    """Check ``|P_A T x_n| <= sum_j |x_n(j)| |P_A z_j| <= norm1(x_n) max_j |P_A z_j|``.

    ``|.|`` is the 1-norm or the sup norm; the weights ``|x_n(j)|`` are always
    taken in the 1-norm sense.
    """
    cache: dict[int, Fraction] = {}

    def col(j: int) -> Fraction:
        if j not in cache:
            cache[j] = _proj_norm(T.column(j), A, norm)
        return cache[j]

    rows, bad = [], []
    for n in x.window(n0, N):
        v = x[n]
        lhs = _proj_norm(apply(T, v), A, norm)
        mid = sum((abs(c) * col(j) for j, c in v.items()), Fraction(0))
        top = max((col(j) for j in v.support), default=Fraction(0))
        rhs = v.norm1() * top
        rows.append((n, lhs, mid, rhs))
        if not (lhs <= mid <= rhs):
            bad.append(n)
    return LemmaReport("triangle", norm, (n0, N), ("n", "lhs", "weighted_sum", "max_form"), tuple(rows), tuple(bad))


def lemma_split_bound(
    T: ColumnOperator, x: SeqFamily, A: SubsetSpec, m: int, n0: int, N: int, norm: str = "1"
) -> LemmaReport:
    """Check ``|P_A T x_n| <= norm1(x_n) max_{j>m} |P_A z_j| + t norm1(1_[m] x_n)``.

    The max runs over the stored columns with index above ``m`` (zero if none).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    tail = max((_proj_norm(z, A, norm) for j, z in T.columns.items() if j > m), default=Fraction(0))
    head_set = segment(m)
    rows, bad = [], []
    for n in x.window(n0, N):
        v = x[n]
        lhs = _proj_norm(apply(T, v), A, norm)
        far = v.norm1() * tail
        near = T.norm * v.mass(head_set)
        rows.append((n, lhs, far, near, far + near))
        if not lhs <= far + near:
            bad.append(n)
    return LemmaReport("split", norm, (n0, N), ("n", "lhs", "tail_term", "head_term", "bound"), tuple(rows), tuple(bad))


# ---------------------------------------------------------------------------
# Fineness transfer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferResult:
    certificate: FineCertificate | None
    delta: Fraction
    r: Fraction
    t: Fraction
    slack: Fraction
    epsilon: Fraction
    m: int
    window: tuple[int, int]
    bound_violations: tuple[tuple[int, int], ...]  # (block index, n) where the per-n bound fails
    chain: ChainClassification

    @property
    def ok(self) -> bool:
        return self.certificate is not None and not self.bound_violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "delta": str(self.delta),
            "r": str(self.r),
            "t": str(self.t),
            "slack": str(self.slack),
            "epsilon": str(self.epsilon),
            "m": self.m,
            "window": list(self.window),
            "bound_violations": [list(v) for v in self.bound_violations],
            "x_chain": self.chain.label.value,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


def transfer_fineness(
    T: ColumnOperator,
    cert: FineCertificate,
    x: SeqFamily,
    m: int | None = None,
    p: int = 1,
    N: int | None = None,
) -> TransferResult:
    """Turn a ``delta``-fine partition for the columns into one for ``T^ x``.

    For every block ``A`` and ``n`` in ``[p, N]``::

        norm1(1_A T x_n) <= norm1(x_n) max_{j>m} norm1(1_A z_j) + t norm1(1_[m] x_n)
                         <= r delta + slack,

    where ``slack = t max_{p<=n<=N} norm1(1_[m] x_n)`` is computed from ``x``.
    ``m`` defaults to ``cert.tail_start - 1`` so that every column beyond
    ``m`` lies in the certificate's window.
    """
    z = T.column_family(cert.horizon)
    if not revalidate(cert, z):
        raise ValueError("certificate does not revalidate on the operator's columns")
    m = cert.tail_start - 1 if m is None else m
    if m < cert.tail_start - 1:
        raise ValueError(f"m={m} leaves columns {m + 1}..{cert.tail_start - 1} outside the certificate window")
    N = len(x) if N is None else N
    window = x.window(p, N)
    for n in window:
        if x[n].max_index > cert.horizon:
            raise ValueError(f"x_{n} uses columns beyond the certificate horizon {cert.horizon}")
    P: Partition = cert.partition
    blocks = list(P.blocks)
    head_set = segment(m) if m >= 1 else segment(0)
    r, t, delta = x.sup_norm, T.norm, cert.epsilon
    slack = t * max((x[n].mass(head_set) for n in window), default=Fraction(0))
    epsilon = r * delta + slack

    y = hat_apply(T, x)
    tails = [max((z[j].mass(A) for j in range(m + 1, cert.horizon + 1)), default=Fraction(0)) for A in blocks]
    violations = []
    for n in window:
        v, w = x[n], y[n]
        near = t * v.mass(head_set)
        for i, A in enumerate(blocks):
            bound = v.norm1() * tails[i] + near
            if not (w.mass(A) <= bound <= epsilon):
                violations.append((i, n))
    if y.ground > P.ground:
        P = P.widen(y.ground)
    out = is_fine(P, y, epsilon, p, N)
    certificate = out if isinstance(out, FineCertificate) else None
    return TransferResult(certificate, delta, r, t, slack, epsilon, m, (p, N), tuple(violations), classify_chain(x, p, N))


# ---------------------------------------------------------------------------
# Finite-support approximation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproxReport:
    rows: tuple[tuple[int, Fraction, Fraction, int, int], ...]  # (n, dropped mass, eps_n, kept, original size)

    @property
    def ok(self) -> bool:
        return all(d < e for _, d, e, _, _ in self.rows)

    def max_eps(self, n0: int, N: int) -> Fraction:
        return max(e for n, _, e, _, _ in self.rows if n0 <= n <= N)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "rows": [{"n": n, "dropped": str(d), "eps": str(e), "kept": k, "size": s} for n, d, e, k, s in self.rows],
        }


def finite_support_approx(
    x: SeqFamily, eps: Sequence[Fraction] | Callable[[int], Fraction]
) -> tuple[SeqFamily, ApproxReport]:
    """Keep the largest coordinates of each ``x_n`` until the dropped mass is ``< eps_n``.

    Coordinates are ranked by magnitude, ties by index; the shortest such
    prefix is kept.
    """
    eps_of = eps if callable(eps) else (lambda n: eps[n - 1])
    out, rows = [], []
    for n in range(1, len(x) + 1):
        e = Fraction(eps_of(n))
        if e <= 0:
            raise ValueError(f"eps_{n} must be positive")
        v = x[n]
        ranked = sorted(v.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
        remaining = v.norm1()
        kept = 0
        while remaining >= e:
            remaining -= abs(ranked[kept][1])
            kept += 1
        out.append(SparseVec(ranked[:kept]))
        rows.append((n, remaining, e, kept, len(ranked)))
    return SeqFamily.from_vectors(out, label=f"truncated({x.label})", sup_norm=x.sup_norm), ApproxReport(tuple(rows))
