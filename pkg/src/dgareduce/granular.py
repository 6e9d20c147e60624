"""Granular layer: pattern granules with positive/negative counts, rough
membership, the ranking function count_t * proportion, and the incremental
chunked ranking whose accumulated granule set feeds the rough-set reduct
search.

Rank ranges per region follow the membership definition: a granule with
proportion 1 is positive (1 <= rank <= count_t), proportion 0 is negative
(rank = 0), anything between is boundary (0 < rank < count_t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CategoricalTable
from .errors import ParameterError, SchemaError
from .reduction import ReductionResult
from .roughset import InformationSystem, reduct_search


@dataclass(frozen=True)
class Granule:
    """All rows sharing one condition-value pattern, with decision counts."""

    pattern: tuple[int, ...]
    count_t: int  # rows with decision 1
    count_f: int  # rows with decision 0

    def __post_init__(self):
        if self.count_t < 0 or self.count_f < 0 or self.count_t + self.count_f == 0:
            raise ParameterError("granule counts must be non-negative and not both zero")

    @property
    def proportion(self) -> float:
        return self.count_t / (self.count_t + self.count_f)

    @property
    def rank(self) -> float:
        return self.count_t * self.proportion

    @property
    def region(self) -> str:
        if self.count_f == 0:
            return "positive"
        if self.count_t == 0:
            return "negative"
        return "boundary"


@dataclass(frozen=True)
class GranuleSet:
    """Granules keyed by pattern over a fixed attribute list."""

    granules: tuple[Granule, ...]
    attributes: tuple[str, ...]
    rows: int  # total row mass absorbed

    @classmethod
    def from_granules(cls, granules, attributes) -> "GranuleSet":
        granules = tuple(sorted(granules, key=lambda g: g.pattern))
        patterns = [g.pattern for g in granules]
        if len(set(patterns)) != len(patterns):
            raise ParameterError("duplicate granule patterns")
        rows = sum(g.count_t + g.count_f for g in granules)
        return cls(granules, tuple(attributes), rows)

    def by_pattern(self) -> dict[tuple[int, ...], Granule]:
        return {g.pattern: g for g in self.granules}

    def __len__(self) -> int:
        return len(self.granules)


def granulate(chunk: CategoricalTable) -> GranuleSet:
    """One granule per distinct condition tuple in the chunk."""
    if chunk.n_rows == 0:
        raise ParameterError("cannot granulate an empty chunk")
    patterns, inverse = np.unique(chunk.values, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sizes = np.bincount(inverse, minlength=len(patterns))
    ones = np.bincount(inverse, weights=chunk.decisions, minlength=len(patterns))
    granules = [
        Granule(tuple(int(v) for v in patterns[b]), int(ones[b]), int(sizes[b] - ones[b]))
        for b in range(len(patterns))
    ]
    return GranuleSet.from_granules(granules, chunk.attributes)


def combine(base: GranuleSet, new: GranuleSet) -> GranuleSet:
    """Merge matching patterns by adding counts; insert unmatched granules."""
    if base.attributes != new.attributes:
        raise SchemaError(
            f"attribute lists differ: {base.attributes} vs {new.attributes}"
        )
    merged = base.by_pattern()
    for granule in new.granules:
        hit = merged.get(granule.pattern)
        if hit is None:
            merged[granule.pattern] = granule
        else:
            merged[granule.pattern] = Granule(
                granule.pattern,
                hit.count_t + granule.count_t,
                hit.count_f + granule.count_f,
            )
    return GranuleSet.from_granules(merged.values(), base.attributes)


def top_ranked(granules: GranuleSet, n: int) -> list[Granule]:
    """Highest-ranked granules first; rank ties order by count_t descending,
    remaining ties by pattern."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    ordered = sorted(
        granules.granules, key=lambda g: (-g.rank, -g.count_t, g.pattern)
    )
    return ordered[:n]


def to_decision_table(granules: GranuleSet) -> CategoricalTable:
    """Expand a granule set back into a decision table for reduct search.

    Each granule contributes one row carrying its majority decision; an exact
    count tie contributes one row per class so the contradiction survives.
    """
    if len(granules) == 0:
        raise ParameterError("cannot expand an empty granule set")
    rows, decisions = [], []
    for g in granules.granules:
        if g.count_t == g.count_f:
            rows.extend([g.pattern, g.pattern])
            decisions.extend([1, 0])
        else:
            rows.append(g.pattern)
            decisions.append(1 if g.count_t > g.count_f else 0)
    return CategoricalTable(
        np.array(rows, dtype=np.int64),
        np.array(decisions, dtype=np.int64),
        granules.attributes,
    )


def dump_granules(granules: GranuleSet) -> str:
    """Human-readable rank trace, one granule per line."""
    lines = [f"attributes = {','.join(granules.attributes)}", f"rows = {granules.rows}"]
    for g in granules.granules:
        lines.append(
            "pattern=%s count_t=%d count_f=%d proportion=%.9g rank=%.9g"
            % (",".join(str(v) for v in g.pattern), g.count_t, g.count_f, g.proportion, g.rank)
        )
    return "\n".join(lines) + "\n"


def incremental_rank_reduce(
    table: CategoricalTable,
    chunk_size: int,
    carry: int,
    shuffle_seed: int | None = None,
) -> ReductionResult:
    """Chunked granular ranking feeding the degree-of-dependency reduct search.

    The first chunk is granulated whole; each later chunk contributes only its
    `carry` top-ranked granules to the accumulated set.  The accumulated set
    expands to a decision table whose attributes are then reduced.  A chunk
    size of at least the row count degenerates to a single-chunk run.
    """
    if chunk_size < 1:
        raise ParameterError("chunk_size must be at least 1")
    if carry < 1:
        raise ParameterError("carry must be at least 1")
    work = table
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(table.n_rows)
        work = table.take(order)
    starts = range(0, work.n_rows, chunk_size)
    chunks = [work.take(np.arange(s, min(s + chunk_size, work.n_rows))) for s in starts]
    accumulated = granulate(chunks[0])
    for chunk in chunks[1:]:
        ranked = granulate(chunk)
        carried = top_ranked(ranked, carry)
        accumulated = combine(
            accumulated, GranuleSet.from_granules(carried, ranked.attributes)
        )
    expanded = to_decision_table(accumulated)
    reduct = reduct_search(InformationSystem.from_table(expanded))
    diagnostics = {
        "chunks": len(chunks),
        "chunk_size": chunk_size,
        "carry": carry,
        "granules": len(accumulated),
        "rows_absorbed": accumulated.rows,
        "expanded_rows": expanded.n_rows,
    }
    diagnostics.update(reduct.diagnostics)
    return ReductionResult(method="gr", kept=reduct.kept, diagnostics=diagnostics)
