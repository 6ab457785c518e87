"""Windowed limsup submeasures on N induced by bounded sequences in l1.

Exact rational arithmetic throughout: sparse l1 vectors, normalized
indicator families, fine-partition certificates and searches, and column
operators with their transfer bounds.
"""

__version__ = "0.1.0"

from .l1 import (  # noqa: E402
    EventuallyPeriodic,
    ExplicitFinite,
    SparseVec,
    SubsetSpec,
    basis,
    empty,
    evens,
    finite,
    full,
    norm1,
    norm_inf,
    odds,
    periodic,
    project,
    segment,
)
from .families import SeqFamily, family_from_sets, make_xF, upper_density_family  # noqa: E402
from .submeasure import eval_windowed, exact_periodic_upper_density  # noqa: E402
from .partitions import FineCertificate, Partition, is_fine, residue_partition  # noqa: E402
from .operators import ColumnOperator, apply, hat_apply  # noqa: E402

__all__ = [
    "ColumnOperator",
    "EventuallyPeriodic",
    "ExplicitFinite",
    "FineCertificate",
    "Partition",
    "SeqFamily",
    "SparseVec",
    "SubsetSpec",
    "apply",
    "basis",
    "empty",
    "eval_windowed",
    "evens",
    "exact_periodic_upper_density",
    "family_from_sets",
    "finite",
    "full",
    "hat_apply",
    "is_fine",
    "make_xF",
    "norm1",
    "norm_inf",
    "odds",
    "periodic",
    "project",
    "residue_partition",
    "segment",
    "upper_density_family",
]
