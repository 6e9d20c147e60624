"""Tables, CSV ingestion, standardization, discretization, folds, synthesis."""

import math

import numpy as np
import pytest

from dgareduce import dataset
from dgareduce.dataset import (
    ATTRIBUTES,
    COMBUSTIBLES,
    Discretizer,
    GasTable,
    Scaler,
    discretize,
    kfold,
    load_csv,
    split_indices,
    standardize,
    synth_generate,
    write_csv,
)
from dgareduce.errors import (
    EmptyDatasetError,
    ParameterError,
    SchemaError,
    ValidationError,
)

from conftest import make_gas_table, make_table

HEADER = ",".join(ATTRIBUTES + ("decision",))
SAMPLE_ROW = "43,242,57,294,2055,1175,1882,12233,4060,5506,0"


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_reference_row(self, tmp_path):
        table = load_csv(_write(tmp_path, f"{HEADER}\n{SAMPLE_ROW}\n"))
        assert table.n_rows == 1
        assert table.decisions[0] == 0
        assert table.column("acetylene")[0] == 43
        assert table.column("tcg")[0] == 5506
        # this row's combustibles add up to its tcg column
        assert sum(table.column(g)[0] for g in COMBUSTIBLES) == 5506

    def test_header_only_is_empty_dataset(self, tmp_path):
        with pytest.raises(EmptyDatasetError):
            load_csv(_write(tmp_path, HEADER + "\n"))

    def test_blank_cell_dropped(self, tmp_path):
        good = SAMPLE_ROW
        blank_ethane = "10,20,30,,50,60,70,80,90,100,1"
        text = f"{HEADER}\n{good}\n{blank_ethane}\n{good}\n"
        table = load_csv(_write(tmp_path, text))
        assert table.n_rows == 2
        assert table.dropped_rows == 1

    def test_non_numeric_dropped(self, tmp_path):
        bad = SAMPLE_ROW.replace("2055", "n/a")
        table = load_csv(_write(tmp_path, f"{HEADER}\n{SAMPLE_ROW}\n{bad}\n"))
        assert table.n_rows == 1
        assert table.dropped_rows == 1

    def test_misordered_header(self, tmp_path):
        cols = list(ATTRIBUTES + ("decision",))
        cols[0], cols[1] = cols[1], cols[0]
        with pytest.raises(SchemaError):
            load_csv(_write(tmp_path, ",".join(cols) + "\n" + SAMPLE_ROW + "\n"))

    def test_missing_column(self, tmp_path):
        header = ",".join(ATTRIBUTES)  # no decision
        with pytest.raises(SchemaError):
            load_csv(_write(tmp_path, header + "\n"))

    def test_header_case_insensitive(self, tmp_path):
        table = load_csv(_write(tmp_path, HEADER.upper() + "\n" + SAMPLE_ROW + "\n"))
        assert table.n_rows == 1

    def test_negative_concentration_names_row(self, tmp_path):
        bad = SAMPLE_ROW.replace("43", "-43")
        with pytest.raises(ValidationError, match="row 3"):
            load_csv(_write(tmp_path, f"{HEADER}\n{SAMPLE_ROW}\n{bad}\n"))

    def test_bad_decision_rejected(self, tmp_path):
        bad = SAMPLE_ROW[:-1] + "2"
        with pytest.raises(ValidationError):
            load_csv(_write(tmp_path, f"{HEADER}\n{bad}\n"))

    def test_round_trip(self, tmp_path):
        table = synth_generate(40, 0.4, 0.3, seed=9)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_csv(table, first)
        reloaded = load_csv(first)
        write_csv(reloaded, second)
        assert first.read_text() == second.read_text()
        assert np.array_equal(table.decisions, reloaded.decisions)


class TestStandardize:
    def test_hand_column(self):
        table = make_table([[1.0], [2.0], [3.0]], [0, 1, 0])
        out, scaler = standardize(table)
        assert scaler.mean[0] == pytest.approx(2.0)
        assert scaler.std[0] == pytest.approx(math.sqrt(2.0 / 3.0))
        np.testing.assert_allclose(
            out.values[:, 0], [-1.224744871, 0.0, 1.224744871], atol=1e-9
        )

    def test_constant_column_zeroed_and_flagged(self):
        table = make_table([[5.0], [5.0], [5.0]], [0, 1, 0])
        out, scaler = standardize(table)
        assert np.all(out.values == 0.0)
        assert scaler.constant[0]

    def test_output_moments(self, rng):
        table = make_table(rng.uniform(1, 100, size=(50, 4)), rng.integers(0, 2, 50))
        out, _ = standardize(table)
        assert np.abs(out.values.mean(axis=0)).max() <= 1e-9
        np.testing.assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)

    def test_idempotent(self, rng):
        table = make_table(rng.uniform(1, 100, size=(30, 3)), rng.integers(0, 2, 30))
        once, _ = standardize(table)
        twice, _ = standardize(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)

    def test_inverse_reconstructs(self, rng):
        table = make_table(rng.uniform(1, 1e4, size=(25, 5)), rng.integers(0, 2, 25))
        out, scaler = standardize(table)
        np.testing.assert_allclose(scaler.inverse(out.values), table.values, atol=1e-9)

    def test_requires_two_rows(self):
        with pytest.raises(ParameterError):
            standardize(make_table([[1.0]], [0]))


class TestDiscretize:
    @pytest.mark.parametrize(
        "gas,value,category",
        [
            ("hydrogen", 100, 1),
            ("hydrogen", 101, 2),
            ("hydrogen", 1801, 4),
            ("methane", 401, 3),
            ("acetylene", 35, 1),
            ("tcg", 4631, 4),
        ],
    )
    def test_reference_thresholds(self, gas, value, category):
        table = make_gas_table(n_rows=2, **{gas: [value, value]})
        cat = discretize(table)
        assert cat.column(gas)[0] == category

    def test_minmax_gases(self):
        table = make_gas_table(n_rows=3, nitrogen=[0.0, 50.0, 100.0])
        cat = discretize(table)
        assert list(cat.column("nitrogen")) == [1, 2, 4]

    def test_order_preserving(self, rng):
        for gas in dataset.CATEGORY_BOUNDS:
            vals = np.sort(rng.uniform(0, 6000, size=40))
            table = make_gas_table(n_rows=40, **{gas: vals})
            cats = discretize(table).column(gas)
            assert np.all(np.diff(cats) >= 0)

    def test_fitted_spans_reused_on_new_rows(self):
        train = make_gas_table(n_rows=3, oxygen=[0.0, 50.0, 100.0])
        disc = Discretizer.fit(train)
        probe = make_gas_table(n_rows=2, oxygen=[100.0, 1000.0])
        cats = disc.apply(probe).column("oxygen")
        assert list(cats) == [4, 4]  # clipped into the fitted span

    def test_row_count_preserved(self):
        table = synth_generate(30, 0.5, 0.1, seed=1)
        assert discretize(table).n_rows == table.n_rows


class TestKfold:
    def test_exact_division(self):
        table = synth_generate(30, 0.5, 0.1, seed=4)
        plan = kfold(table, 15, seed=0)
        sizes = np.bincount(plan.assignments, minlength=15)
        assert np.all(sizes == 2)

    def test_stratification_forced(self):
        table = make_gas_table(n_rows=10, decisions=[0] * 5 + [1] * 5, hydrogen=range(10))
        plan = kfold(table, 5, seed=3)
        for fold in range(5):
            decs = table.decisions[plan.test_indices(fold)]
            assert sorted(decs) == [0, 1]

    def test_deterministic(self):
        table = synth_generate(40, 0.5, 0.1, seed=4)
        a = kfold(table, 5, seed=7)
        b = kfold(table, 5, seed=7)
        assert np.array_equal(a.assignments, b.assignments)

    def test_partition_and_balance(self, rng):
        for _ in range(10):
            n = int(rng.integers(12, 60))
            k = int(rng.integers(2, 7))
            table = make_gas_table(
                n_rows=n, decisions=rng.integers(0, 2, n), hydrogen=rng.uniform(0, 10, n)
            )
            plan = kfold(table, k, seed=int(rng.integers(1e6)))
            assert len(plan.assignments) == n
            for cls in (0, 1):
                counts = np.bincount(plan.assignments[table.decisions == cls], minlength=k)
                assert counts.max() - counts.min() <= 1

    def test_k_too_large(self):
        table = synth_generate(10, 0.5, 0.1, seed=4)
        with pytest.raises(ParameterError):
            kfold(table, 11, seed=0)


class TestSplitIndices:
    def test_partition(self):
        parts = split_indices(100, (0.7, 0.15, 0.15), seed=1)
        assert sorted(np.concatenate(parts)) == list(range(100))
        assert [len(p) for p in parts] == [70, 15, 15]

    def test_zero_ratio_allowed(self):
        parts = split_indices(10, (1.0, 0.0, 0.0), seed=1)
        assert len(parts[0]) == 10 and len(parts[1]) == 0

    def test_positive_ratio_empty_chunk_rejected(self):
        with pytest.raises(ParameterError):
            split_indices(3, (0.9, 0.05, 0.05), seed=1)


class TestSynthGenerate:
    def test_ratio_forced(self):
        table = synth_generate(100, 0.5, 0.2, seed=0)
        assert int((table.decisions == 0).sum()) == 50
        assert int((table.decisions == 1).sum()) == 50

    def test_tcg_is_combustible_sum(self):
        table = synth_generate(50, 0.5, 0.0, seed=0)
        total = sum(table.column(g) for g in COMBUSTIBLES)
        np.testing.assert_array_equal(table.column("tcg"), total)

    def test_deterministic(self, tmp_path):
        a = synth_generate(60, 0.3, 0.4, seed=12)
        b = synth_generate(60, 0.3, 0.4, seed=12)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.decisions, b.decisions)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, pa)
        write_csv(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_informative_subset_silences_other_gases(self):
        table = synth_generate(
            400, 0.5, 0.1, seed=5, informative=("hydrogen", "methane", "ethylene")
        )
        faulty = table.decisions == 0
        h = table.column("hydrogen")
        assert h[faulty].mean() > 3 * h[~faulty].mean()
        co2 = table.column("carbon_dioxide")
        ratio = co2[faulty].mean() / co2[~faulty].mean()
        assert 0.9 < ratio < 1.1

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            synth_generate(5, 0.5, 0.1, seed=0)
        with pytest.raises(ParameterError):
            synth_generate(20, 0.0, 0.1, seed=0)
        with pytest.raises(ParameterError):
            synth_generate(20, 0.5, 0.1, seed=0, informative=("tcg",))


class TestTableTypes:
    def test_gas_table_rejects_negative(self):
        with pytest.raises(ValidationError):
            make_gas_table(n_rows=2, hydrogen=[-1.0, 2.0])

    def test_gas_table_requires_canonical_attributes(self):
        with pytest.raises(SchemaError):
            GasTable(np.zeros((2, 3)), [0, 1], ("a", "b", "c"))

    def test_values_immutable(self):
        table = make_gas_table(n_rows=2, hydrogen=[1.0, 2.0])
        with pytest.raises(ValueError):
            table.values[0, 0] = 9.0

    def test_select_and_take(self):
        table = make_gas_table(n_rows=4, hydrogen=[1, 2, 3, 4], methane=[5, 6, 7, 8])
        sub = table.select(["methane", "hydrogen"])
        assert sub.attributes == ("methane", "hydrogen")
        assert list(sub.values[:, 0]) == [5, 6, 7, 8]
        part = table.take([0, 2])
        assert isinstance(part, GasTable)
        assert part.n_rows == 2

    def test_scaler_roundtrip_fields(self):
        scaler = Scaler(np.array([1.0]), np.array([2.0]), np.array([False]))
        out = scaler.transform(np.array([[3.0]]))
        assert out[0, 0] == pytest.approx(1.0)
        assert scaler.inverse(out)[0, 0] == pytest.approx(3.0)
