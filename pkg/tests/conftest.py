"""Shared fixtures and table-building helpers."""

import numpy as np
import pytest

from dgareduce.dataset import ATTRIBUTES, CategoricalTable, GasTable, Table


def make_gas_table(n_rows=4, decisions=None, **columns) -> GasTable:
    """Gas table with given columns, zeros elsewhere, default alternating decisions."""
    values = np.zeros((n_rows, len(ATTRIBUTES)))
    for name, col in columns.items():
        values[:, ATTRIBUTES.index(name)] = col
    if decisions is None:
        decisions = np.arange(n_rows) % 2
    return GasTable(values, np.asarray(decisions), ATTRIBUTES)


def make_categorical(columns, decisions, names=None) -> CategoricalTable:
    """Categorical table from a list of columns (each a list of categories)."""
    values = np.array(columns, dtype=np.int64).T
    if names is None:
        names = tuple(f"a{i + 1}" for i in range(values.shape[1]))
    return CategoricalTable(values, np.asarray(decisions), tuple(names))


def make_table(values, decisions, names=None) -> Table:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if names is None:
        names = tuple(f"a{i + 1}" for i in range(values.shape[1]))
    return Table(values, np.asarray(decisions), tuple(names))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
