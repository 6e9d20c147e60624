"""Rough-set operators over categorical decision tables.

Indiscernibility partitions, lower/upper approximations, the positive-region
degree of dependency, and a greedy backward-elimination reduct search that
keeps removing superfluous attributes while the positive region is preserved
exactly (integer cardinalities, no tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CategoricalTable
from .errors import DependencyDegenerateError, ParameterError
from .reduction import ReductionResult


@dataclass(frozen=True)
class InformationSystem:
    """Universe of row indices, condition attributes, and the decision column."""

    values: np.ndarray
    decisions: np.ndarray
    attributes: tuple[str, ...]

    @classmethod
    def from_table(cls, table: CategoricalTable) -> "InformationSystem":
        return cls(table.values, table.decisions, table.attributes)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def universe(self) -> frozenset:
        return frozenset(range(self.n_rows))

    def _column_indices(self, names) -> list[int]:
        idx = []
        for name in names:
            if name not in self.attributes:
                raise ParameterError(f"unknown attribute {name!r}")
            idx.append(self.attributes.index(name))
        return idx


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of row indices covering the universe, keyed by the
    attribute subset whose values the block members share."""

    blocks: tuple[tuple[int, ...], ...]
    key: tuple[str, ...]


@dataclass(frozen=True)
class RegionDecomposition:
    """Positive / boundary / negative regions of a target row set."""

    positive: frozenset
    boundary: frozenset
    negative: frozenset

    @property
    def lower(self) -> frozenset:
        return self.positive

    @property
    def upper(self) -> frozenset:
        return self.positive | self.boundary


def _block_inverse(values: np.ndarray, cols) -> tuple[np.ndarray, int]:
    """Block id per row for the partition induced by the given columns."""
    sub = values[:, cols]
    _, inverse = np.unique(sub, axis=0, return_inverse=True)
    return inverse.ravel(), int(inverse.max()) + 1 if inverse.size else 0


def equivalence_classes(system: InformationSystem, subset) -> Partition:
    """Partition of the universe by equal value tuples on the attribute subset."""
    names = tuple(subset)
    if not names:
        raise ParameterError("attribute subset must be non-empty")
    cols = system._column_indices(names)
    inverse, n_blocks = _block_inverse(system.values, cols)
    members: list[list[int]] = [[] for _ in range(n_blocks)]
    for row, block in enumerate(inverse):
        members[block].append(row)
    return Partition(tuple(tuple(m) for m in members), names)


def approximate(system: InformationSystem, subset, target) -> RegionDecomposition:
    """Lower/upper approximation of a target row set under the subset's partition."""
    target = frozenset(int(r) for r in target)
    if target and (min(target) < 0 or max(target) >= system.n_rows):
        raise ParameterError("target rows outside the universe")
    partition = equivalence_classes(system, subset)
    lower: set[int] = set()
    upper: set[int] = set()
    for block in partition.blocks:
        block_set = set(block)
        if block_set <= target:
            lower |= block_set
        if block_set & target:
            upper |= block_set
    universe = set(range(system.n_rows))
    return RegionDecomposition(
        positive=frozenset(lower),
        boundary=frozenset(upper - lower),
        negative=frozenset(universe - upper),
    )


def _positive_region_size(values, decisions, cols) -> int:
    """Rows in decision-pure blocks of the partition by the given columns.

    The empty column set induces the single-block partition of the universe.
    """
    if not cols:
        return len(decisions) if np.all(decisions == decisions[0]) else 0
    inverse, n_blocks = _block_inverse(values, cols)
    sizes = np.bincount(inverse, minlength=n_blocks)
    ones = np.bincount(inverse, weights=decisions, minlength=n_blocks)
    pure = (ones == 0) | (ones == sizes)
    return int(sizes[pure].sum())


def degree_of_dependency(system: InformationSystem, subset) -> float:
    """|positive region of the decision partition| / |universe|."""
    names = tuple(subset)
    if not names:
        raise ParameterError("attribute subset must be non-empty")
    cols = system._column_indices(names)
    return _positive_region_size(system.values, system.decisions, cols) / system.n_rows


def reduct_search(system: InformationSystem) -> ReductionResult:
    """Greedy backward elimination preserving the full-set degree of dependency.

    At each step every single-attribute removal is evaluated; among removals
    that keep the positive region intact, the highest-indexed attribute is
    dropped (so low-indexed attributes survive ties).  The loop stops when no
    removal preserves dependency, which also certifies superset-minimality.
    """
    if len(system.attributes) < 2:
        raise ParameterError("reduct search needs at least 2 attributes")
    values, decisions = system.values, system.decisions
    n = system.n_rows
    all_cols = list(range(len(system.attributes)))
    full = _positive_region_size(values, decisions, all_cols)
    if full == 0:
        raise DependencyDegenerateError(
            "degree of dependency of the full attribute set is 0; reduct undefined"
        )
    kept = list(all_cols)
    trace: list[tuple[str, float]] = []
    while len(kept) > 1:
        removable = None
        for j in kept:
            others = [c for c in kept if c != j]
            if _positive_region_size(values, decisions, others) == full:
                removable = j  # ascending scan: ends at the highest preserving index
        if removable is None:
            break
        kept.remove(removable)
        trace.append((system.attributes[removable], full / n))
    gamma_without = {}
    for j in kept:
        others = [c for c in kept if c != j]
        gamma_without[system.attributes[j]] = (
            _positive_region_size(values, decisions, others) / n
        )
    return ReductionResult(
        method="rs",
        kept=tuple(system.attributes[j] for j in kept),
        diagnostics={
            "gamma_full": full / n,
            "gamma_reduct": full / n,
            "eliminated": tuple(name for name, _ in trace),
            "gamma_without_kept": gamma_without,
        },
    )
