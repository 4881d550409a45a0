"""Tests for CSV persistence and config parsing."""

import json
import sys

import numpy as np
import pytest

from mmdreg.contamination import ContaminationSpec, contaminate
from mmdreg.dataio import (
    export_contaminated,
    fit_config_from_dict,
    fit_result_to_dict,
    load_config,
    load_csv,
    write_csv,
    write_fit_result,
)
from mmdreg.errors import ConfigError, FormatError
from mmdreg.fitting import FitConfig, fit
from mmdreg.kernels import KernelSpec
from mmdreg.models import Dataset, simulate_dataset


class TestCsvRoundTrip:
    def test_real(self, tmp_path):
        _, ds = simulate_dataset("gauss_linear_laplace", 100, seed=0)
        path = tmp_path / "d.csv"
        write_csv(ds, path)
        back = load_csv(path)
        assert back.kind == "real"
        assert np.array_equal(back.x, ds.x)
        assert np.array_equal(back.y, ds.y)

    def test_censored(self, tmp_path):
        _, ds = simulate_dataset("heckman_synthetic", 80, seed=1)
        path = tmp_path / "h.csv"
        write_csv(ds, path)
        back = load_csv(path)
        assert back.kind == "censored"
        assert np.array_equal(back.x, ds.x)
        assert np.array_equal(back.y, ds.y)

    def test_count_and_binary(self, tmp_path):
        rng = np.random.default_rng(2)
        for kind, y in (
            ("count", rng.integers(0, 9, size=30)),
            ("binary", rng.integers(0, 2, size=30)),
        ):
            ds = Dataset(x=rng.standard_normal((30, 2)), y=y, kind=kind)
            path = tmp_path / f"{kind}.csv"
            write_csv(ds, path)
            back = load_csv(path, kind=kind)
            assert back.y.dtype == np.int64
            assert np.array_equal(back.y, ds.y)

    def test_awkward_floats_survive(self, tmp_path):
        x = np.array([[1e-300, 0.1 + 0.2], [np.pi, -1.2345678901234567e17]])
        ds = Dataset(x=x, y=np.array([2.0**-52, 1.0]), kind="real")
        path = tmp_path / "f.csv"
        write_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.x, ds.x)
        assert np.array_equal(back.y, ds.y)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("x1,y\n1.0,2.0\n\n3.0,4.0\n")
        back = load_csv(path)
        assert back.x.shape == (2, 1)


class TestLoaderValidation:
    def test_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(FormatError, match="header"):
            load_csv(path)
        path.write_text("x1,x3,y\n1,2,3\n")
        with pytest.raises(FormatError, match="x1..x2"):
            load_csv(path)

    def test_kind_header_mismatch(self, tmp_path):
        pair = tmp_path / "p.csv"
        pair.write_text("x1,y1,y2\n0.5,0.0,0\n")
        with pytest.raises(FormatError, match="censored"):
            load_csv(pair, kind="real")
        scalar = tmp_path / "s.csv"
        scalar.write_text("x1,y\n0.5,1.0\n")
        with pytest.raises(FormatError, match="scalar"):
            load_csv(scalar, kind="censored")

    def test_expected_dimension(self, tmp_path):
        path = tmp_path / "d3.csv"
        path.write_text("x1,x2,x3,y\n1,2,3,4\n")
        with pytest.raises(FormatError, match="expected 8 covariate columns, found 3"):
            load_csv(path, expect_d=8)
        load_csv(path, expect_d=3)

    def test_malformed_rows_name_the_line(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("x1,y\n1.0,2.0\n1.0\n")
        with pytest.raises(FormatError, match="line 3"):
            load_csv(path)
        path.write_text("x1,y\n1.0,zap\n")
        with pytest.raises(FormatError, match="line 2.*zap"):
            load_csv(path)
        path.write_text("x1,y\n1.0,inf\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path)

    def test_selection_invariant(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("x1,y1,y2\n0.5,0.0,0\n0.2,1.1,1\n")
        ds = load_csv(path)
        assert ds.y[0, 0] == 0.0
        path.write_text("x1,y1,y2\n0.5,1.3,0\n")
        with pytest.raises(FormatError, match="line 2.*y1=0"):
            load_csv(path)
        ds = load_csv(path, strict=False)
        assert ds.y[0, 0] == 1.3
        path.write_text("x1,y1,y2\n0.5,1.3,2\n")
        with pytest.raises(FormatError, match="indicator"):
            load_csv(path, strict=False)

    def test_count_validation(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("x1,y\n1.0,2.5\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path, kind="count")
        path.write_text("x1,y\n1.0,-1\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path, kind="count")
        path.write_text("x1,y\n1.0,2\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path, kind="binary")

    def test_empty_and_headless(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(FormatError, match="empty"):
            load_csv(path)
        path.write_text("x1,y\n")
        with pytest.raises(FormatError, match="no data rows"):
            load_csv(path)


class TestContaminatedExport:
    def test_sidecar_lists_indices(self, tmp_path):
        _, ds = simulate_dataset("gauss_linear_laplace", 200, seed=3)
        out = contaminate(ds, ContaminationSpec(epsilon=0.05, recipe="type_y", seed=4))
        path = tmp_path / "cont.csv"
        sidecar = export_contaminated(out, path)
        assert sidecar == str(tmp_path / "cont.contamination.json")
        with open(sidecar) as fh:
            record = json.load(fh)
        assert record["indices"] == out.meta["contamination"]["indices"]
        assert record["n"] == 200
        back = load_csv(path)
        assert np.array_equal(back.y, out.y)

    def test_flipped_rows_round_trip_with_strict_off(self, tmp_path):
        _, ds = simulate_dataset("heckman_synthetic", 300, seed=5)
        out = contaminate(
            ds, ContaminationSpec(epsilon=0.1, recipe="selection_flip", seed=6)
        )
        path = tmp_path / "flip.csv"
        export_contaminated(out, path)
        with pytest.raises(FormatError):
            load_csv(path)
        back = load_csv(path, strict=False)
        assert np.array_equal(back.y, out.y)

    def test_requires_record(self, tmp_path):
        _, ds = simulate_dataset("gauss_linear_laplace", 20, seed=7)
        with pytest.raises(ConfigError, match="record"):
            export_contaminated(ds, tmp_path / "x.csv")


class TestConfigs:
    def test_json_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"estimator": "tilde", "eta": 0.05}')
        assert load_config(path) == {"estimator": "tilde", "eta": 0.05}
        path.write_text("{broken")
        with pytest.raises(FormatError):
            load_config(path)
        path.write_text("[1, 2]")
        with pytest.raises(FormatError, match="mapping"):
            load_config(path)

    def test_toml_config(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('estimator = "hat"\neta = 0.2\n')
        if sys.version_info >= (3, 11):
            assert load_config(path) == {"estimator": "hat", "eta": 0.2}
        else:
            with pytest.raises(ConfigError, match="3.11"):
                load_config(path)

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("a: 1")
        with pytest.raises(ConfigError, match="json"):
            load_config(path)

    def test_fit_config_from_dict(self):
        cfg = fit_config_from_dict(
            {
                "estimator": "hat",
                "eta": 0.2,
                "iters": 50,
                "m1": 10,
                "seed": 3,
                "kernel": {
                    "family": "product",
                    "x_kernel": {"family": "psi_matern", "gamma": 0.02, "m": 1},
                    "y_kernel": {"family": "exponential", "gamma": 1.0},
                },
            }
        )
        assert cfg.estimator == "hat"
        assert isinstance(cfg.kernel, KernelSpec)
        assert cfg.kernel.x_kernel.gamma == 0.02
        with pytest.raises(ConfigError, match="unknown fit config"):
            fit_config_from_dict({"stepsize": 0.1})
        cfg = fit_config_from_dict({"init": [0.0, 1.0]})
        assert isinstance(cfg.init, np.ndarray)


class TestFitResultJson:
    def test_round_trip(self, tmp_path):
        fam, ds = simulate_dataset("gauss_linear_laplace", 60, seed=8)
        res = fit(fam, ds, FitConfig(estimator="ols"))
        path = tmp_path / "r.json"
        write_fit_result(res, path)
        with open(path) as fh:
            back = json.load(fh)
        assert back["estimator"] == "ols"
        assert np.allclose(back["theta_raw"], res.theta_raw)
        assert back["natural_names"] == list(res.natural_names)
        assert back["error"] is None
        d = fit_result_to_dict(res)
        assert isinstance(d["trace"], list)
