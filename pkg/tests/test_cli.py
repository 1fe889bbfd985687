import csv
import io

import numpy as np
import pytest

from qreliability.cli import (
    SWEEP_COLUMNS,
    ConfigError,
    consistency_verdict,
    load_config,
    main,
    parse_pairs,
)
from qreliability.histories import History, HistoryFamily


def run(argv):
    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


def table(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


class TestConfig:
    def test_comments_and_blanks(self):
        pairs = parse_pairs(["# header", "", "k0 = 7  # inline", "b=12"])
        assert pairs == {"k0": "7", "b": "12"}

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="'colour'"):
            parse_pairs(["colour = blue"])

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_pairs(["k0 5"])

    def test_file_and_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("k0 = 7\nb = 12\nBx_range = 0.5, 1.5, 3\n", encoding="utf-8")
        cfg = load_config("sweep-field", path, ["b=20"])
        assert cfg.params.k0 == 7 and cfg.params.b == 20
        assert list(cfg.values("Bx_range")) == [0.5, 1.0, 1.5]

    @pytest.mark.parametrize(
        "override, message",
        [("k0_range=5,2,3", "lo < hi"), ("k0_range=2,5,1", "n >= 2"), ("k0_range=2,5", "lo, hi, n")],
    )
    def test_range_invariants(self, override, message):
        with pytest.raises(ConfigError, match=message):
            load_config("sweep-grid", overrides=[override])

    def test_physics_invariant(self):
        with pytest.raises(ConfigError, match="sigma"):
            load_config("run-point", overrides=["sigma=0"])

    def test_defaults_embed_reference_parameters(self):
        cfg = load_config("fit-relation")
        assert (cfg.params.a, cfg.params.sigma, cfg.params.f, cfg.params.Bx) == (3, 0.5, 1, 2)
        assert cfg.k0_range == (10, 15, 21) and cfg.b_range == (30, 50, 21)
        assert load_config("fit-scaling").k0_range == (13, 15, 21)
        assert load_config("fit-scaling", regime="second_order").params.Bx == pytest.approx(1e-3)


class TestRunPoint:
    def test_reference_point(self):
        code, out = run(["run-point"])
        rows = table(out)
        assert code == 0
        assert tuple(rows[0][: len(SWEEP_COLUMNS)]) == SWEEP_COLUMNS
        assert len(rows) == 2
        row = dict(zip(rows[0], rows[1]))
        assert (float(row["k0"]), float(row["b"]), float(row["Bx"])) == (5, 35, 2)
        assert 0 < float(row["R"]) < 1
        assert np.isfinite(float(row["delta_B"]))

    def test_zero_field(self):
        code, out = run(["run-point", "--set", "Bx=0", "--set", "b=2000"])
        row = dict(zip(*table(out)))
        assert code == 0
        assert abs(float(row["delta_B"])) < 1e-9
        assert row["degenerate_sensitivity"] == "1"

    def test_unknown_key_exit(self, capsys):
        code, _ = run(["run-point", "--set", "speed=3"])
        assert code == 2
        assert "speed" in capsys.readouterr().err

    def test_rejects_ranges(self):
        assert run(["run-point", "--set", "k0_range=1,2,2"])[0] == 2

    def test_full_precision(self, tmp_path):
        out = tmp_path / "point.csv"
        assert run(["run-point", "--out", str(out)])[0] == 0
        row = dict(zip(*table(out.read_text())))
        assert float(row["R"]) == pytest.approx(0.99559881252108406, abs=1e-16)


class TestSweeps:
    def test_grid_rows_and_order(self):
        code, out = run(["sweep-grid", "--set", "k0_range=4,6,2", "--set", "b_range=10,20,2"])
        rows = table(out)
        assert code == 0
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert [(float(r[0]), float(r[1])) for r in rows[1:]] == [(4, 10), (4, 20), (6, 10), (6, 20)]

    def test_grid_bit_identical(self, tmp_path):
        args = ["sweep-grid", "--set", "k0_range=2,15,6", "--set", "b_range=5,50,5"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(args + ["--out", str(a)])
        run(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        R = [float(r[3]) for r in table(a.read_text())[1:]]
        assert len(R) == 30 and all(0 <= v <= 1 for v in R)

    def test_grid_needs_ranges(self):
        assert run(["sweep-grid", "--set", "k0_range=none"])[0] == 2

    def test_field_sweep(self):
        code, out = run(["sweep-field", "--set", "Bx_range=0.5,1.5,2"])
        rows = table(out)
        assert code == 0 and len(rows) == 3
        assert rows[0][-2:] == ["one_minus_R", "abs_delta_B"]
        assert [float(r[2]) for r in rows[1:]] == [0.5, 1.5]
        assert float(rows[1][-2]) == pytest.approx(1 - float(rows[1][3]))

    def test_field_sweep_deterministic(self):
        assert run(["sweep-field"])[1] == run(["sweep-field"])[1]

    def test_reading_switch(self):
        a = table(run(["run-point"])[1])[1]
        b = table(run(["run-point", "--reading", "B_measured"])[1])[1]
        assert a[:8] == b[:8] and a[8] != b[8]


class TestFits:
    def test_relation_near_linear_window(self):
        code, out = run(["fit-relation", "--set", "Bx=1.25", "--set", "Bx_second=1.2"])
        assert code == 0
        assert "r2=" in out and "slope spread" in out

    def test_relation_insufficient(self):
        code, _ = run(["fit-relation", "--set", "k0_range=10,15,3", "--set", "b_range=30,50,3"])
        assert code == 3

    @pytest.mark.parametrize("regime", ["first_order", "second_order"])
    def test_scaling(self, regime):
        code, out = run(["fit-scaling", "--regime", regime])
        assert code == 0
        assert f"# {regime}: slope=" in out

    def test_scaling_wrong_window(self):
        # a strong field is outside the square-root regime
        code, _ = run(["fit-scaling", "--set", "regime=second_order", "--set", "Bx=2"])
        assert code == 1


class TestConsistency:
    def test_identity_family(self):
        rho = np.diag([0.3, 0.7]).astype(complex)
        fam = HistoryFamily([History(rho, [np.eye(2)], [np.eye(2)])])
        assert consistency_verdict(fam, stdout=io.StringIO()) == 0

    def test_inconsistent_family(self):
        H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        rho = np.array([1, 0])
        fam = HistoryFamily([History(rho, [P, Q], [H, H]) for P in (up, down) for Q in (up, down)])
        out = io.StringIO()
        assert consistency_verdict(fam, stdout=out) == 1
        assert "INCONSISTENT" in out.getvalue()

    def test_discretised_pipeline(self):
        code, out = run(["check-consistency", "--set", "n=256", "--set", "b=10"])
        assert code == 0
        assert "consistent" in out and "W(R2)" in out

    def test_grid_too_coarse(self):
        assert run(["check-consistency", "--set", "k0=5", "--set", "n=64"])[0] == 2


def test_oracle_compare_without_field():
    code, out = run(["oracle-compare", "--set", "Bx=0"])
    rows = table(out)
    assert code == 0
    assert rows[0] == ["quantity", "closed_form", "oracle", "abs_diff", "tolerance", "pass"]
    assert [r[0] for r in rows[1:]] == ["transmitted_plus", "transmitted_minus", "alpha_tilde", "beta_tilde", "R"]
    assert all(r[-1] == "1" for r in rows[1:])
