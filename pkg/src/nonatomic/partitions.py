"""Finite partitions of a ground window, fineness certificates, and searches.

A :class:`Partition` covers the ground window [J]; the residual block
``N \\ [J]`` is implicit and recorded in every certificate.  Certificates
are exact proof objects: revalidating one against its family must
reproduce every per-block value.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .families import SeqFamily, add_families
from .l1 import ExplicitFinite, SubsetSpec, finite, residue_class, segment, set_complement, set_meet
from .submeasure import SubmeasureEstimate, eval_windowed

__all__ = [
    "Partition",
    "FineCertificate",
    "FailingBlock",
    "NotFoundProof",
    "SearchFailure",
    "ColoringSearch",
    "residue_partition",
    "trivial_partition",
    "partition_from_labels",
    "is_fine",
    "revalidate",
    "meet",
    "certify_sum",
    "search_exhaustive",
    "search_greedy",
    "search_random_coloring",
    "EXHAUSTIVE_ELEMENT_LIMIT",
    "EXHAUSTIVE_BLOCK_LIMIT",
]

EXHAUSTIVE_ELEMENT_LIMIT = 14
EXHAUSTIVE_BLOCK_LIMIT = 4


@dataclass(frozen=True, eq=False)
class Partition:
    ground: int
    blocks: tuple[SubsetSpec, ...]

    def __post_init__(self):
        if self.ground < 0:
            raise ValueError("ground window must be >= 0")
        seen: set[int] = set()
        total = 0
        for i, B in enumerate(self.blocks):
            mem = B.members(self.ground)
            if not mem:
                raise ValueError(f"block {i} is empty within [{self.ground}]")
            total += len(mem)
            seen.update(mem)
        if total != len(seen):
            raise ValueError("partition blocks overlap")
        if len(seen) != self.ground:
            raise ValueError(f"blocks do not cover [{self.ground}]")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def residual(self) -> SubsetSpec:
        return set_complement(segment(self.ground))

    def block_sets(self) -> list[frozenset]:
        return [frozenset(B.members(self.ground)) for B in self.blocks]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.ground == other.ground and self.block_sets() == other.block_sets()

    def __hash__(self) -> int:
        return hash((self.ground, tuple(self.block_sets())))

    def refines(self, other: "Partition") -> bool:
        theirs = other.block_sets()
        return all(sum(1 for T in theirs if B <= T) == 1 for B in self.block_sets())

    def widen(self, J: int) -> "Partition":
        """The same partition on a larger ground window.

        Blocks that are periodic keep their specs when they still tile [J];
        otherwise new elements join the first block.
        """
        if J < self.ground:
            raise ValueError("cannot narrow a partition")
        if J == self.ground:
            return self
        try:
            return Partition(J, self.blocks)
        except ValueError:
            pass
        sets = self.block_sets()
        extra = range(self.ground + 1, J + 1)
        if not sets:
            return Partition(J, (finite(extra),))
        sets[0] = sets[0] | frozenset(extra)
        return Partition(J, tuple(ExplicitFinite(s) for s in sets))

    def to_json(self) -> dict:
        blocks = []
        for B in self.blocks:
            if isinstance(B, ExplicitFinite):
                blocks.append(B.members(self.ground))
            else:
                blocks.append(B.describe())
        return {"ground": self.ground, "blocks": blocks}


def residue_partition(k: int, J: int) -> Partition:
    """Residue classes mod ``k``, ordered 0..k-1, empty classes dropped."""
    blocks = [residue_class(r, k) for r in range(k)]
    return Partition(J, tuple(B for B in blocks if B.members(J)))


def trivial_partition(J: int) -> Partition:
    return Partition(J, (segment(J),) if J else ())


def partition_from_labels(labels: Sequence[int], elements: Sequence[int], J: int) -> Partition:
    """Blocks from a labelling of ``elements``; the rest of [J] joins the first block."""
    groups: dict[int, set[int]] = {}
    for j, b in zip(elements, labels):
        groups.setdefault(b, set()).add(j)
    rest = set(range(1, J + 1)).difference(elements)
    ordered = [groups[b] for b in sorted(groups)]
    if rest:
        if ordered:
            ordered[0] |= rest
        else:
            ordered.append(rest)
    return Partition(J, tuple(finite(s) for s in ordered))


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FineCertificate:
    partition: Partition
    epsilon: Fraction
    tail_start: int
    horizon: int
    block_values: tuple[SubmeasureEstimate, ...]
    residual_value: SubmeasureEstimate
    family: str = ""

    @property
    def max_value(self) -> Fraction:
        return max([e.value for e in self.block_values] + [self.residual_value.value])

    def to_json(self) -> dict:
        return {
            "type": "certificate",
            "family": self.family,
            "epsilon": str(self.epsilon),
            "window": [self.tail_start, self.horizon],
            "partition": self.partition.to_json(),
            "block_values": [str(e.value) for e in self.block_values],
            "residual_value": str(self.residual_value.value),
            "max_value": str(self.max_value),
        }


@dataclass(frozen=True)
class FailingBlock:
    index: int | None  # None means the residual block
    value: Fraction
    epsilon: Fraction
    partition: Partition
    window: tuple[int, int]

    def to_json(self) -> dict:
        return {
            "type": "failing-block",
            "block": "residual" if self.index is None else self.index,
            "value": str(self.value),
            "epsilon": str(self.epsilon),
            "window": list(self.window),
        }


def _block_estimates(P: Partition, x: SeqFamily, n0: int, N: int):
    vals = tuple(eval_windowed(x, B, n0, N, name=f"block {i}") for i, B in enumerate(P.blocks))
    res = eval_windowed(x, P.residual, n0, N, name="residual")
    return vals, res


def is_fine(P: Partition, x: SeqFamily, epsilon, n0: int, N: int) -> FineCertificate | FailingBlock:
    """Certificate if every block (and the residual) has windowed value ``<= epsilon``.

    Otherwise the block of maximal value is reported, lowest index first.
    """
    epsilon = Fraction(epsilon)
    vals, res = _block_estimates(P, x, n0, N)
    top = max([e.value for e in vals] + [res.value])
    if top <= epsilon:
        return FineCertificate(P, epsilon, n0, N, vals, res, x.label)
    for i, e in enumerate(vals):
        if e.value == top:
            return FailingBlock(i, top, epsilon, P, (n0, N))
    return FailingBlock(None, top, epsilon, P, (n0, N))


def revalidate(cert: FineCertificate, x: SeqFamily) -> bool:
    """Recompute every per-block value from ``x`` and compare exactly."""
    try:
        vals, res = _block_estimates(cert.partition, x, cert.tail_start, cert.horizon)
    except (ValueError, IndexError):
        return False
    same = [a.value for a in vals] == [b.value for b in cert.block_values] and res.value == cert.residual_value.value
    return same and cert.max_value <= cert.epsilon


def meet(P: Partition, Q: Partition) -> Partition:
    """Common refinement with blocks ``A_i ∩ B_j`` (empty ones dropped), ``i`` major."""
    if P.ground != Q.ground:
        raise ValueError(f"ground windows differ: {P.ground} vs {Q.ground}")
    blocks = []
    for A in P.blocks:
        for B in Q.blocks:
            C = set_meet(A, B)
            if C.members(P.ground):
                blocks.append(C)
    return Partition(P.ground, tuple(blocks))


def certify_sum(cert_x: FineCertificate, cert_y: FineCertificate, x: SeqFamily, y: SeqFamily) -> FineCertificate:
    """Certificate for ``x + y`` on the meet partition at ``eps_x + eps_y``."""
    if not revalidate(cert_x, x):
        raise ValueError("certificate for x does not revalidate")
    if not revalidate(cert_y, y):
        raise ValueError("certificate for y does not revalidate")
    window = (cert_x.tail_start, cert_x.horizon)
    if window != (cert_y.tail_start, cert_y.horizon):
        raise ValueError("certificates use different windows")
    J = max(cert_x.partition.ground, cert_y.partition.ground)
    M = meet(cert_x.partition.widen(J), cert_y.partition.widen(J))
    s = add_families(x, y)
    out = is_fine(M, s, cert_x.epsilon + cert_y.epsilon, *window)
    if not isinstance(out, FineCertificate):
        raise RuntimeError(f"sum certificate failed at block {out.index}: {out.value} > {out.epsilon}")
    return out


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NotFoundProof:
    """No partition of the effective support into ``<= max_blocks`` blocks is fine."""

    epsilon: Fraction
    max_blocks: int
    window: tuple[int, int]
    elements: tuple[int, ...]
    nodes: int

    def to_json(self) -> dict:
        return {
            "type": "not-found-proof",
            "epsilon": str(self.epsilon),
            "max_blocks": self.max_blocks,
            "window": list(self.window),
            "elements": list(self.elements),
            "nodes_explored": self.nodes,
        }


@dataclass(frozen=True)
class SearchFailure:
    strategy: str
    epsilon: Fraction
    achieved: Fraction
    partition: Partition | None
    window: tuple[int, int]

    def to_json(self) -> dict:
        return {
            "type": "search-failure",
            "strategy": self.strategy,
            "epsilon": str(self.epsilon),
            "achieved_max": str(self.achieved),
            "window": list(self.window),
        }


@dataclass(frozen=True)
class ColoringSearch:
    certificate: FineCertificate | None
    trial: int | None  # 1-based index of the first passing coloring
    maxima: tuple[Fraction, ...]  # achieved max per trial attempted
    seed: int

    @property
    def found(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        d = {
            "type": "random-coloring",
            "found": self.found,
            "seed": self.seed,
            "trials_run": len(self.maxima),
            "best_max": str(min(self.maxima)) if self.maxima else None,
        }
        if self.certificate is not None:
            d["trial"] = self.trial
            d["certificate"] = self.certificate.to_json()
        else:
            d["maxima"] = [str(m) for m in self.maxima]
        return d


def _abs_table_exact(x: SeqFamily, n0: int, N: int, elements: Sequence[int]):
    """Integer weights ``D * |x_n(j)|`` per element and the common denominator ``D``."""
    rows = list(x.window(n0, N))
    dens = {1}
    for n in rows:
        for _, v in x[n].items():
            dens.add(v.denominator)
    D = math.lcm(*dens)
    col = {j: i for i, j in enumerate(elements)}
    table = [[0] * len(rows) for _ in elements]
    for r, n in enumerate(rows):
        for j, v in x[n].items():
            table[col[j]][r] = abs(v.numerator) * (D // v.denominator)
    return table, D


def _abs_table_float(x: SeqFamily, n0: int, N: int, elements: Sequence[int]) -> np.ndarray:
    """Float matrix ``|x_n(j)|`` with rows over the window and columns over ``elements``."""
    rows = list(x.window(n0, N))
    el = np.asarray(elements, dtype=np.int64)
    M = np.zeros((len(rows), len(elements)))
    for r, n in enumerate(rows):
        v = x[n]
        if v.is_uniform:
            idx = np.searchsorted(el, np.fromiter(v.support, dtype=np.int64, count=len(v)))
            M[r, idx] = float(abs(v.norm_inf()))
        else:
            for j, c in v.items():
                M[r, np.searchsorted(el, j)] = float(abs(c))
    return M


def search_exhaustive(
    x: SeqFamily,
    epsilon,
    k: int,
    n0: int,
    N: int,
    limit: int = EXHAUSTIVE_ELEMENT_LIMIT,
) -> FineCertificate | NotFoundProof:
    """Decide fineness with at most ``k`` blocks by enumerating set partitions.

    Elements are labelled by restricted growth strings (an element may open
    block ``b`` only after blocks ``0..b-1`` are open), and branches whose
    partial block already exceeds ``epsilon`` are cut; block masses only grow.
    """
    epsilon = Fraction(epsilon)
    if k < 1 or k > EXHAUSTIVE_BLOCK_LIMIT:
        raise ValueError(f"exhaustive search supports 1..{EXHAUSTIVE_BLOCK_LIMIT} blocks, got {k}")
    support = x.support_in_window(n0, N)
    if len(support) > limit:
        raise ValueError(f"effective support has {len(support)} elements, limit is {limit}")
    if epsilon < 0:
        return NotFoundProof(epsilon, k, (n0, N), tuple(support), 0)

    table, D = _abs_table_exact(x, n0, N, support)
    cap = math.floor(epsilon * D)  # integer masses: m <= eps*D iff m <= floor(eps*D)
    order = sorted(range(len(support)), key=lambda i: (-sum(table[i]), support[i]))
    W = len(table[0]) if table else 0
    masses = [[0] * W for _ in range(k)]
    labels = [0] * len(order)
    nodes = 0

    def fits(b: int, w: list[int]) -> bool:
        m = masses[b]
        return all(m[r] + w[r] <= cap for r in range(W))

    def place(b: int, w: list[int], sign: int) -> None:
        m = masses[b]
        for r in range(W):
            m[r] += sign * w[r]

    def rec(pos: int, opened: int) -> bool:
        nonlocal nodes
        nodes += 1
        if pos == len(order):
            return True
        w = table[order[pos]]
        for b in range(min(opened + 1, k)):
            if fits(b, w):
                place(b, w, 1)
                labels[pos] = b
                if rec(pos + 1, max(opened, b + 1)):
                    return True
                place(b, w, -1)
        return False

    if not rec(0, 0):
        return NotFoundProof(epsilon, k, (n0, N), tuple(support), nodes)
    P = partition_from_labels(labels, [support[i] for i in order], x.ground)
    out = is_fine(P, x, epsilon, n0, N)
    assert isinstance(out, FineCertificate), "exhaustive search produced an unfit partition"
    return out


def search_greedy(x: SeqFamily, epsilon, k: int, n0: int, N: int) -> FineCertificate | SearchFailure:
    """Min-max greedy: heaviest elements first, each to the block keeping the max lowest.

    Scoring runs in floating point; the resulting partition is then checked
    exactly with :func:`is_fine`.
    """
    epsilon = Fraction(epsilon)
    if k < 1:
        raise ValueError("need at least one block")
    support = x.support_in_window(n0, N)
    if not support:
        P = trivial_partition(x.ground)
        return _finish_greedy(P, x, epsilon, n0, N)
    M = _abs_table_float(x, n0, N, support)
    totals = M.sum(axis=0)
    order = sorted(range(len(support)), key=lambda i: (-totals[i], support[i]))
    masses = np.zeros((k, M.shape[0]))
    peaks = np.zeros(k)
    labels = []
    for i in order:
        cand = (masses + M[:, i]).max(axis=1)
        best = None
        for b in range(k):
            others = max((peaks[c] for c in range(k) if c != b), default=0.0)
            key = (max(others, cand[b]), cand[b], b)
            if best is None or key < best:
                best = key
        b = best[2]
        masses[b] += M[:, i]
        peaks[b] = cand[b]
        labels.append(b)
    P = partition_from_labels(labels, [support[i] for i in order], x.ground)
    return _finish_greedy(P, x, epsilon, n0, N)


def _finish_greedy(P, x, epsilon, n0, N):
    out = is_fine(P, x, epsilon, n0, N)
    if isinstance(out, FineCertificate):
        return out
    return SearchFailure("greedy", epsilon, out.value, P, (n0, N))


def search_random_coloring(
    x: SeqFamily,
    epsilon,
    k: int,
    trials: int,
    seed: int,
    n0: int,
    N: int,
) -> ColoringSearch:
    """Independent uniform ``k``-colorings of [J]; the first fine one wins."""
    epsilon = Fraction(epsilon)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if k < 1:
        raise ValueError("need at least one color")
    rng = random.Random(seed)
    J = x.ground
    elements = list(range(1, J + 1))
    maxima = []
    for t in range(1, trials + 1):
        colors = [rng.randrange(k) for _ in elements]
        P = partition_from_labels(colors, elements, J) if J else trivial_partition(0)
        out = is_fine(P, x, epsilon, n0, N)
        if isinstance(out, FineCertificate):
            maxima.append(out.max_value)
            return ColoringSearch(out, t, tuple(maxima), seed)
        maxima.append(out.value)
    return ColoringSearch(None, None, tuple(maxima), seed)
