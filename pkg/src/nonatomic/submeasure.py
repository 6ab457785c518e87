"""Windowed limsup submeasures and the checks built on them.

For a family ``x`` and a set ``A`` the submeasure is
``limsup_n norm1(1_A x_n)``.  From finite data we compute the windowed
surrogate ``max_{n0 <= n <= N} norm1(1_A x_n)``; every estimate carries its
window so claims stay finitary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .families import SeqFamily
from .l1 import EventuallyPeriodic, SubsetSpec, segment

__all__ = [
    "SubmeasureEstimate",
    "eval_windowed",
    "tail_sweep",
    "exact_periodic_upper_density",
    "DominationReport",
    "check_domination",
    "ZeroDominationReport",
    "check_domination_zero",
    "ChainClass",
    "ChainClassification",
    "classify_chain",
    "Fact2Report",
    "fact2_bound",
]


@dataclass(frozen=True)
class SubmeasureEstimate:
    value: Fraction
    tail_start: int
    horizon: int
    mode: str  # "windowed" | "exact-periodic"
    family: str = ""
    set_descriptor: str = ""
    attained_at: int | None = None

    def to_json(self) -> dict:
        d = {
            "value": str(self.value),
            "n0": self.tail_start,
            "N": self.horizon,
            "mode": self.mode,
            "family": self.family,
            "set": self.set_descriptor,
        }
        if self.attained_at is not None:
            d["attained_at"] = self.attained_at
        return d


def eval_windowed(x: SeqFamily, A: SubsetSpec, n0: int, N: int, name: str | None = None) -> SubmeasureEstimate:
    """Exact ``max_{n0<=n<=N} norm1(1_A x_n)``; the first maximizer is recorded."""
    best, at = Fraction(-1), None
    for n in x.window(n0, N):
        v = x[n].mass(A)
        if v > best:
            best, at = v, n
    return SubmeasureEstimate(best, n0, N, "windowed", x.label, repr(A) if name is None else name, at)


def tail_sweep(x: SeqFamily, A: SubsetSpec, starts: Iterable[int], N: int) -> list[SubmeasureEstimate]:
    """Estimates for several tail starts at a fixed horizon (non-increasing in n0)."""
    return [eval_windowed(x, A, n0, N) for n0 in starts]


def exact_periodic_upper_density(A: SubsetSpec) -> Fraction:
    """Upper density of an eventually periodic set: ``|residues| / period``."""
    if not isinstance(A, EventuallyPeriodic):
        raise ValueError(f"exact upper density needs an eventually periodic set, got {A!r}")
    return A.density()


# ---------------------------------------------------------------------------
# Domination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DominationReport:
    window: tuple[int, int]
    rows: tuple[tuple[Fraction, Fraction, bool, tuple[int, ...]], ...]  # (eps, delta, dominated, violating set indices)

    @property
    def dominated(self) -> bool:
        return all(r[2] for r in self.rows)

    def to_json(self) -> dict:
        return {
            "window": list(self.window),
            "rows": [
                {"epsilon": str(e), "delta": str(d), "dominated": ok, "violations": list(v)}
                for e, d, ok, v in self.rows
            ],
        }


def _values(x: SeqFamily, sets: Sequence[SubsetSpec], n0: int, N: int) -> list[Fraction]:
    return [eval_windowed(x, A, n0, N).value for A in sets]


def check_domination(
    x: SeqFamily,
    y: SeqFamily,
    test_sets: Sequence[SubsetSpec],
    grid: Iterable[tuple[Fraction, Fraction]],
    n0: int,
    N: int,
) -> DominationReport:
    """Evidence that small ``x``-values force small ``y``-values.

    For each ``(eps, delta)`` every test set with ``d_x(A) <= delta`` must have
    ``d_y(A) <= eps``.  Quantified over ``test_sets`` only.
    """
    dx = _values(x, test_sets, n0, N)
    dy = _values(y, test_sets, n0, N)
    rows = []
    for eps, delta in grid:
        bad = tuple(i for i, (a, b) in enumerate(zip(dx, dy)) if a <= delta and b > eps)
        rows.append((Fraction(eps), Fraction(delta), not bad, bad))
    return DominationReport((n0, N), tuple(rows))


@dataclass(frozen=True)
class ZeroDominationReport:
    window: tuple[int, int]
    tau: Fraction
    flagged: tuple[int, ...]

    @property
    def dominated(self) -> bool:
        return not self.flagged

    def to_json(self) -> dict:
        return {"window": list(self.window), "tau": str(self.tau), "flagged": list(self.flagged)}


def check_domination_zero(
    x: SeqFamily,
    y: SeqFamily,
    test_sets: Sequence[SubsetSpec],
    n0: int,
    N: int,
    tau: Fraction = Fraction(0),
) -> ZeroDominationReport:
    """Flag test sets that are ``x``-null (``<= tau``) but not ``y``-null."""
    dx = _values(x, test_sets, n0, N)
    dy = _values(y, test_sets, n0, N)
    tau = Fraction(tau)
    flagged = tuple(i for i, (a, b) in enumerate(zip(dx, dy)) if a <= tau and b > tau)
    return ZeroDominationReport((n0, N), tau, flagged)


# ---------------------------------------------------------------------------
# Inclusion chain
# ---------------------------------------------------------------------------


class ChainClass(str, enum.Enum):
    C0 = "c0"
    UNIFORM = "u->0"
    POINTWISE = "p->0"
    BOUNDED = "bounded-only"


@dataclass(frozen=True)
class ChainClassification:
    label: ChainClass
    window: tuple[int, int]
    tau: Fraction
    max_norm1: Fraction
    max_norm_inf: Fraction
    max_head_coordinate: Fraction  # max |x_n(j)| over j < n0, n in the tail

    def to_json(self) -> dict:
        return {
            "label": self.label.value,
            "window": list(self.window),
            "tau": str(self.tau),
            "max_norm1": str(self.max_norm1),
            "max_norm_inf": str(self.max_norm_inf),
            "max_head_coordinate": str(self.max_head_coordinate),
        }


def classify_chain(x: SeqFamily, n0: int, N: int, tau: Fraction = Fraction(0)) -> ChainClassification:
    """Strongest chain label whose windowed criterion holds on ``[n0, N]``.

    Pointwise convergence is tested on the coordinates ``j < n0`` (those fixed
    before the tail starts), restricted to the ground window.
    """
    tau = Fraction(tau)
    head = segment(min(n0 - 1, x.ground))
    m1 = mi = mh = Fraction(0)
    for n in x.window(n0, N):
        v = x[n]
        m1 = max(m1, v.norm1())
        mi = max(mi, v.norm_inf())
        mh = max(mh, v.peak(head))
    if m1 <= tau:
        label = ChainClass.C0
    elif mi <= tau:
        label = ChainClass.UNIFORM
    elif mh <= tau:
        label = ChainClass.POINTWISE
    else:
        label = ChainClass.BOUNDED
    return ChainClassification(label, (n0, N), tau, m1, mi, mh)


# ---------------------------------------------------------------------------
# Uniform decay from a fine partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fact2Report:
    epsilon: Fraction
    window: tuple[int, int]
    rows: tuple[tuple[int, Fraction, Fraction], ...]  # (n, norm_inf(x_n), max block mass)
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "epsilon": str(self.epsilon),
            "window": list(self.window),
            "max_norm_inf": str(max((r[1] for r in self.rows), default=Fraction(0))),
            "violations": list(self.violations),
        }


def fact2_bound(x: SeqFamily, cert) -> Fact2Report:
    """Check ``norm_inf(x_n) <= max_i norm1(1_{A_i} x_n) <= eps`` on the certificate's tail.

    The sup norm of ``x_n`` is attained inside one block, and the sup norm is
    dominated by the 1-norm there.
    """
    blocks = list(cert.partition.blocks) + [cert.partition.residual]
    rows, bad = [], []
    for n in x.window(cert.tail_start, cert.horizon):
        v = x[n]
        ninf = v.norm_inf()
        top = max((v.mass(B) for B in blocks), default=Fraction(0))
        rows.append((n, ninf, top))
        if not (ninf <= top <= cert.epsilon):
            bad.append(n)
    return Fact2Report(cert.epsilon, (cert.tail_start, cert.horizon), tuple(rows), tuple(bad))
