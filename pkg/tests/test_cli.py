import csv
import math

import numpy as np
import pytest

from cumanet.cli import (
    ExperimentSpec,
    SpecError,
    TAU_GRID_DB,
    main,
    parse_spec_file,
    run_spec,
)


def write_spec(tmp_path, body):
    p = tmp_path / "exp.spec"
    p.write_text(body)
    return p


SMALL_CDF = """
# comment line
name = tiny_cdf
kind = cdf
lambda_b = 1e-4
lambda_ratio = 4
n_ports = 16
aperture = 2.0
n_location_draws = 2
n_fading_draws = 30
schemes = cuma
seed = 11
sweep_param = eta
sweep_values = 2.4, 2.7
out_dir = {out}
"""


class TestSpecParsing:
    def test_round_trip(self, tmp_path):
        p = write_spec(tmp_path, SMALL_CDF.format(out=tmp_path))
        spec = parse_spec_file(p)
        assert spec.name == "tiny_cdf"
        assert spec.kind == "cdf"
        assert spec.sweep_values == [2.4, 2.7]
        assert spec.schemes == ("cuma",)

    def test_unknown_key_rejected(self, tmp_path):
        p = write_spec(tmp_path, "name = x\nkind = cdf\nbogus = 1\n")
        with pytest.raises(SpecError):
            parse_spec_file(p)

    def test_missing_name_rejected(self, tmp_path):
        p = write_spec(tmp_path, "kind = cdf\n")
        with pytest.raises(SpecError):
            parse_spec_file(p)

    def test_bad_kind_rejected(self):
        with pytest.raises(SpecError):
            ExperimentSpec(name="x", kind="nope")

    def test_unsorted_sweep_rejected(self):
        with pytest.raises(SpecError):
            ExperimentSpec(name="x", kind="cdf", sweep_param="eta", sweep_values=[2.7, 2.4])

    def test_defaults_applied(self):
        spec = ExperimentSpec(name="x", kind="bench_vs_N")
        assert spec.sweep_param == "n_ports"
        assert "mmse" in spec.schemes

    def test_config_at_maps_sweep(self):
        spec = ExperimentSpec(name="x", kind="cdf", sweep_param="eta", sweep_values=[2.4, 3.0])
        cfg = spec.config_at(3.0)
        assert cfg.eta == 3.0
        spec = ExperimentSpec(
            name="x", kind="bench_vs_N", sweep_param="n_ports", sweep_values=[16, 36]
        )
        assert spec.config_at(36).grid.n_ports == 36


class TestRunSpec:
    def test_cdf_artifacts(self, tmp_path):
        spec = parse_spec_file(write_spec(tmp_path, SMALL_CDF.format(out=tmp_path)))
        arts = run_spec(spec)
        assert arts["csv"].exists() and arts["png"].exists() and arts["manifest"].exists()
        with open(arts["csv"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["tau_db", "eta", "coverage_analytic", "coverage_empirical"]
        assert len(rows) - 1 == 2 * len(TAU_GRID_DB)
        for row in rows[1:]:
            vals = [float(v) for v in row]
            assert all(math.isfinite(v) for v in vals)
            assert 0.0 <= vals[2] <= 1.0 and 0.0 <= vals[3] <= 1.0
        manifest = arts["manifest"].read_text()
        assert "seed = 11" in manifest
        assert "wall_time_s" in manifest

    def test_csv_bodies_reproduce(self, tmp_path):
        spec = parse_spec_file(write_spec(tmp_path, SMALL_CDF.format(out=tmp_path)))
        a = run_spec(spec)["csv"].read_bytes()
        b = run_spec(spec)["csv"].read_bytes()
        assert a == b

    def test_asymptotic_kind(self, tmp_path):
        spec = ExperimentSpec(
            name="asym",
            kind="asymptotic",
            n_ports=16,
            aperture=2.0,
            sweep_param="eta",
            sweep_values=[2.4, 4.0],
            lambda_grid=[1.0, 10.0, 100.0],
            out_dir=str(tmp_path),
        )
        arts = run_spec(spec)
        with open(arts["csv"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["lambda_ratio", "eta", "cell_rate_analytic", "asymptote"]
        assert len(rows) - 1 == 6
        by_eta = {}
        for row in rows[1:]:
            by_eta.setdefault(row[1], []).append(float(row[2]))
        for vals in by_eta.values():
            assert vals == sorted(vals)  # monotone in load

    def test_rate_kind_log_base_2(self, tmp_path):
        spec = ExperimentSpec(
            name="rates",
            kind="rate_vs_lambda",
            n_ports=16,
            aperture=2.0,
            n_location_draws=2,
            n_fading_draws=20,
            schemes=("cuma",),
            sweep_param="lambda_ratio",
            sweep_values=[2.0, 4.0],
            out_dir=str(tmp_path),
        )
        nats = run_spec(spec, log_base="e")
        with open(nats["csv"], newline="") as fh:
            rows_e = list(csv.reader(fh))
        bits = run_spec(spec, log_base="2")
        with open(bits["csv"], newline="") as fh:
            rows_2 = list(csv.reader(fh))
        for re_, r2 in zip(rows_e[1:], rows_2[1:]):
            assert float(r2[1]) == pytest.approx(float(re_[1]) / math.log(2.0), rel=1e-6)

    def test_benchmark_kind_small(self, tmp_path):
        spec = ExperimentSpec(
            name="bench",
            kind="bench_vs_N",
            lambda_ratio=3.0,
            n_location_draws=2,
            n_fading_draws=10,
            japbo_every=5,
            sweep_param="n_ports",
            sweep_values=[16.0, 25.0],
            out_dir=str(tmp_path),
        )
        arts = run_spec(spec)
        with open(arts["csv"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "n_ports"
        assert "cell_rate_cuma" in rows[0]
        assert "cell_rate_cuma_analytic" in rows[0]
        for row in rows[1:]:
            assert math.isfinite(float(row[rows[0].index("cell_rate_cuma")]))


class TestMain:
    def test_exit_codes(self, tmp_path):
        bad = write_spec(tmp_path, "name = x\nkind = bogus\n")
        assert main(["--spec", str(bad)]) == 2
        assert main(["--spec", str(tmp_path / "missing.spec")]) == 2

    def test_smoke_run(self, tmp_path):
        p = write_spec(tmp_path, SMALL_CDF.format(out=tmp_path))
        code = main(["--spec", str(p), "--smoke", "--seed", "99", "--out", str(tmp_path / "o")])
        assert code == 0
        assert (tmp_path / "o" / "tiny_cdf.csv").exists()
        assert (tmp_path / "o" / "tiny_cdf.png").exists()
        manifest = (tmp_path / "o" / "tiny_cdf.manifest.txt").read_text()
        assert "seed = 99" in manifest
        assert "draws = 3 x 100" in manifest
