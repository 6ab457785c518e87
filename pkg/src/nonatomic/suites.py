"""Seeded randomized check batteries shared by the CLI and the tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .families import SeqFamily
from .l1 import SparseVec, SubsetSpec, finite, periodic, set_complement
from .operators import ColumnOperator, lemma_split_bound, lemma_triangle_bound
from .submeasure import eval_windowed, exact_periodic_upper_density

__all__ = [
    "random_rational",
    "random_vec",
    "random_family",
    "random_subset",
    "random_operator",
    "SuiteResult",
    "exactness_suite",
    "oracle_suite",
    "lemma_suite",
]


def random_rational(rng: random.Random, num: int = 9, den: int = 8, signed: bool = True) -> Fraction:
    lo = -num if signed else 0
    return Fraction(rng.randint(lo, num), rng.randint(1, den))


def random_vec(rng: random.Random, J: int, density: float = 0.5, signed: bool = True) -> SparseVec:
    return SparseVec({j: random_rational(rng, signed=signed) for j in range(1, J + 1) if rng.random() < density})


def random_family(rng: random.Random, length: int, J: int, signed: bool = True, label: str = "random") -> SeqFamily:
    return SeqFamily.from_vectors([random_vec(rng, J, rng.uniform(0.2, 0.8), signed) for _ in range(length)], label=label)


def random_subset(rng: random.Random, J: int) -> SubsetSpec:
    """Mix of explicit, periodic, and complemented sets."""
    kind = rng.randrange(3)
    if kind == 0:
        return finite(j for j in range(1, J + 1) if rng.random() < 0.5)
    p = rng.randint(1, 6)
    A = periodic(p, [r for r in range(p) if rng.random() < 0.5], threshold=rng.randint(1, J + 1),
                 head=[j for j in range(1, J + 1) if rng.random() < 0.5])
    return set_complement(A) if kind == 2 else A


def random_operator(rng: random.Random, width: int, J: int) -> ColumnOperator:
    cols = {j: random_vec(rng, J, rng.uniform(0.1, 0.7)) for j in range(1, width + 1) if rng.random() < 0.85}
    return ColumnOperator(cols, label="random")


@dataclass
class SuiteResult:
    name: str
    instances: int
    checks: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "instances": self.instances,
            "checks": self.checks,
            "violations": self.violations[:20],
            "violation_count": len(self.violations),
            "ok": self.ok,
        }


def exactness_suite(instances: int, seed: int, J: int = 12) -> SuiteResult:
    """Triangle inequality, projection additivity over complements, sup <= 1-norm."""
    rng = random.Random(seed)
    res = SuiteResult("exactness", instances)
    for i in range(instances):
        x, y = random_vec(rng, J), random_vec(rng, J)
        A = random_subset(rng, J)
        checks = {
            "triangle": (x + y).norm1() <= x.norm1() + y.norm1(),
            "complement": x.project(A).norm1() + x.project(set_complement(A)).norm1() == x.norm1(),
            "sup<=l1": x.norm_inf() <= x.norm1() and y.norm_inf() <= y.norm1(),
        }
        res.checks += len(checks)
        res.violations.extend(f"instance {i}: {k}" for k, ok in checks.items() if not ok)
    return res


def oracle_suite(x: SeqFamily, sets: Sequence[SubsetSpec], n0: int, N: int) -> tuple[SuiteResult, list[dict]]:
    """Windowed estimate within ``period / n0`` of the exact periodic density."""
    res = SuiteResult("oracle", len(sets))
    rows = []
    for A in sets:
        est = eval_windowed(x, A, n0, N)
        exact = exact_periodic_upper_density(A)
        gap = abs(est.value - exact)
        tol = Fraction(A.period, n0)
        rows.append({"set": repr(A), "windowed": str(est.value), "exact": str(exact), "gap": str(gap), "tolerance": str(tol), "n0": n0, "N": N})
        res.checks += 1
        if gap > tol:
            res.violations.append(f"{A!r}: gap {gap} > {tol}")
    return res, rows


def lemma_suite(instances: int, seed: int) -> SuiteResult:
    """Random ``(T, x, A, m)``: triangle and split chains in both norms."""
    rng = random.Random(seed)
    res = SuiteResult("lemma", instances)
    for i in range(instances):
        width, J = rng.randint(2, 10), rng.randint(2, 10)
        T = random_operator(rng, width, J)
        x = random_family(rng, rng.randint(1, 6), width)
        A = random_subset(rng, J)
        m = rng.randint(1, width + 2)
        for norm in ("1", "inf"):
            for rep in (lemma_triangle_bound(T, x, A, 1, len(x), norm), lemma_split_bound(T, x, A, m, 1, len(x), norm)):
                res.checks += len(rep.rows)
                res.violations.extend(f"instance {i}: {rep.kind}/{norm} at n={n}" for n in rep.violations)
    return res
