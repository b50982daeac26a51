import numpy as np
import pytest

from rulemill.dataset import (CATEGORICAL, NUMERIC, ColumnSchema, DataError,
                              Dataset, discretize_target, generate_team_data,
                              load_bundled, load_csv, split, write_csv)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_infers_kinds_and_levels(self, tmp_path):
        p = write(tmp_path, "a,b,t\n1,red,x\n2,blue,y\n3,red,x\n4,blue,y\n")
        d = load_csv(p)
        assert d.p == 2 and d.n == 4
        assert d.schema[0].kind == NUMERIC
        assert d.schema[1].kind == CATEGORICAL
        assert d.schema[1].levels == ("red", "blue")

    def test_all_numeric_column(self, tmp_path):
        p = write(tmp_path, "a,t\n1,x\n2.5,y\n-3e2,x\n")
        d = load_csv(p)
        assert d.schema[0].kind == NUMERIC
        assert np.allclose(d.columns[0], [1.0, 2.5, -300.0])

    def test_ragged_row_names_line(self, tmp_path):
        p = write(tmp_path, "a,b,t\n1,red,x\n2,blue\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(p)

    def test_empty_file(self, tmp_path):
        p = write(tmp_path, "")
        with pytest.raises(DataError, match="empty"):
            load_csv(p)

    def test_header_only(self, tmp_path):
        p = write(tmp_path, "a,t\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(p)

    def test_non_finite_numeric(self, tmp_path):
        p = write(tmp_path, "a,t\n1,x\ninf,y\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(p)

    def test_empty_cell_rejected(self, tmp_path):
        p = write(tmp_path, "a,b,t\n1,,x\n")
        with pytest.raises(DataError, match="empty cell"):
            load_csv(p)

    def test_bad_token_rejected(self, tmp_path):
        p = write(tmp_path, 'a,t\nre"d,x\n')
        with pytest.raises(DataError, match="quote"):
            load_csv(p)

    def test_schema_hint_override(self, tmp_path):
        p = write(tmp_path, "a,t\n1,x\n2,y\n")
        d = load_csv(p, schema_hint={"a": CATEGORICAL})
        assert d.schema[0].kind == CATEGORICAL
        assert d.schema[0].levels == ("1", "2")

    def test_target_by_name(self, tmp_path):
        p = write(tmp_path, "t,a\nx,1\ny,2\n")
        d = load_csv(p, target="t")
        assert d.target.name == "t"
        assert d.schema[0].name == "a"

    def test_roundtrip_write_read(self, tmp_path):
        p = write(tmp_path, "a,b,t\n1.5,red,x\n2.0,blue,y\n")
        d = load_csv(p)
        out = tmp_path / "copy.csv"
        write_csv(d, out)
        d2 = load_csv(out)
        assert d2.schema == d.schema
        assert np.array_equal(d2.y, d.y)


class TestDiscretize:
    def base(self, targets):
        n = len(targets)
        return Dataset(
            schema=(ColumnSchema("a", NUMERIC),),
            target=ColumnSchema("t", NUMERIC),
            columns=(np.arange(n, dtype=float),),
            y=np.array(targets, dtype=float),
        )

    def test_median_split(self):
        d = discretize_target(self.base([1, 2, 3, 4]), 2)
        assert d.target.levels == ("L1", "L2")
        assert [d.target_value(i) for i in range(4)] == ["L1", "L1", "L2", "L2"]

    def test_tie_rule_equal_values_share_bin(self):
        d = discretize_target(self.base([5, 5, 5, 1]), 2)
        labels = [d.target_value(i) for i in range(4)]
        assert labels == ["L2", "L2", "L2", "L1"]

    def test_equal_frequency_sizes(self):
        d = discretize_target(self.base(list(range(10, 101, 10))), 3)
        sizes = np.bincount(d.y, minlength=3)
        assert set(sizes.tolist()) <= {3, 4}
        assert sizes.sum() == 10

    def test_ties_go_to_lower_bin(self):
        d = discretize_target(self.base([1, 2, 2, 3]), 2)
        assert [d.target_value(i) for i in range(4)] == ["L1", "L1", "L1", "L2"]

    def test_too_many_bins_errors(self):
        with pytest.raises(DataError, match="distinct"):
            discretize_target(self.base([1, 1, 2, 2]), 3)

    def test_non_numeric_target_errors(self):
        d = generate_team_data(10, 3, 1, 0)
        with pytest.raises(DataError):
            discretize_target(d, 2)

    def test_preserves_order_and_monotone(self):
        y = [3.0, 1.0, 2.0, 9.0, 4.0, 7.0]
        d = discretize_target(self.base(y), 3)
        assert d.n == 6
        order = np.argsort(y)
        codes = d.y[order]
        assert np.all(np.diff(codes) >= 0)


class TestSplit:
    def test_sizes(self):
        d = generate_team_data(9, 4, 2, 0)
        tr, te = split(d, 2 / 3, seed=7)
        assert (tr.n, te.n) == (6, 3)

    def test_determinism(self):
        d = generate_team_data(30, 4, 2, 0)
        a = split(d, 0.5, seed=3)
        b = split(d, 0.5, seed=3)
        assert np.array_equal(a[0].y, b[0].y)
        assert np.array_equal(a[0].columns[0], b[0].columns[0])

    def test_partition_property(self):
        d = generate_team_data(100, 4, 2, 0)
        for seed in (1, 2):
            tr, te = split(d, 2 / 3, seed=seed)
            assert tr.n + te.n == d.n
            joined = sorted([tuple(tr.row(i)) + (tr.target_value(i),) for i in range(tr.n)]
                            + [tuple(te.row(i)) + (te.target_value(i),) for i in range(te.n)])
            original = sorted(tuple(d.row(i)) + (d.target_value(i),) for i in range(d.n))
            assert joined == original

    def test_bad_fraction(self):
        d = generate_team_data(10, 3, 1, 0)
        for f in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(DataError):
                split(d, f, seed=0)


class TestTeamData:
    def test_active_count_per_row(self):
        d = generate_team_data(100, 20, 10, seed=5)
        for i in range(d.n):
            row = d.row(i)
            assert sum(1 for v in row if v == "Y") == 10

    def test_xor_labels(self):
        d = generate_team_data(200, 20, 10, seed=3)
        for i in range(d.n):
            row = d.row(i)
            want = "win" if (row[0] == "Y") != (row[1] == "Y") else "lose"
            assert d.target_value(i) == want

    def test_determinism(self):
        a = generate_team_data(50, 5, 2, seed=9)
        b = generate_team_data(50, 5, 2, seed=9)
        assert np.array_equal(a.y, b.y)
        assert all(np.array_equal(x, y) for x, y in zip(a.columns, b.columns))

    def test_preconditions(self):
        with pytest.raises(DataError):
            generate_team_data(10, 1, 1, 0)
        with pytest.raises(DataError):
            generate_team_data(10, 3, 4, 0)


class TestBundled:
    def test_iris(self):
        d = load_bundled("iris")
        assert (d.n, d.p) == (150, 4)
        assert d.task == "classification"
        assert len(d.target.levels) == 3

    def test_tictactoe(self):
        d = load_bundled("tictactoe")
        assert (d.n, d.p) == (958, 9)
        pos = d.target.levels.index("positive")
        assert int((d.y == pos).sum()) == 626

    def test_breast(self):
        d = load_bundled("breast")
        assert (d.n, d.p) == (569, 30)

    def test_unknown_name(self):
        with pytest.raises(DataError):
            load_bundled("nope")
