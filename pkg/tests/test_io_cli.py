import json
import os
import subprocess
import sys

import numpy as np
import pytest

from coevnet import (
    AttributeSeries,
    DataFormatError,
    NetworkSeries,
    PriorSpec,
)
from coevnet import io as cio
from coevnet.cli import main

from conftest import make_instance


class TestCsvRoundTrip:
    def test_network_round_trip_bit_exact(self, tmp_path):
        net, attrs, _, mode = make_instance(110, m=5, n=4, p=2)
        path = tmp_path / "y.csv"
        cio.write_network_csv(path, net)
        back = cio.load_network_csv(path, directed=False, dense_zero=True)
        assert np.array_equal(back.values, net.values)

    def test_directed_round_trip(self, tmp_path):
        net, attrs, _, mode = make_instance(111, m=4, n=3, p=1, directed=True)
        path = tmp_path / "y.csv"
        cio.write_network_csv(path, net)
        back = cio.load_network_csv(path, directed=True, dense_zero=True)
        assert np.array_equal(back.values, net.values)

    def test_attributes_round_trip(self, tmp_path):
        _, attrs, _, _ = make_instance(112, m=4, n=3, p=2)
        path = tmp_path / "x.csv"
        cio.write_attributes_csv(path, attrs)
        back = cio.load_attributes_csv(path)
        assert np.array_equal(back.values, attrs.values)
        assert back.missing is None

    def test_unlisted_pairs_become_missing(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t,i,j,y\n0,1,2,1.5\n0,1,3,0.5\n")
        net = cio.load_network_csv(path)
        assert net.m == 3 and net.missing[0, 1, 2]
        dense = cio.load_network_csv(path, dense_zero=True)
        assert dense.missing is None and dense.values[0, 1, 2] == 0.0

    def test_duplicate_row_errors_with_line(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t,i,j,y\n0,1,2,1.5\n0,1,2,2.0\n")
        with pytest.raises(DataFormatError, match="line 2"):
            cio.load_network_csv(path)

    def test_conflicting_mirror_errors(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t,i,j,y\n0,1,2,1.5\n0,2,1,2.0\n")
        with pytest.raises(DataFormatError, match="conflict"):
            cio.load_network_csv(path)
        # consistent mirrors are fine
        path.write_text("t,i,j,y\n0,1,2,1.5\n0,2,1,1.5\n")
        net = cio.load_network_csv(path)
        assert net.values[0, 0, 1] == 1.5

    def test_out_of_range_ids(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t,i,j,y\n0,0,2,1.5\n")
        with pytest.raises(DataFormatError, match="1-based"):
            cio.load_network_csv(path)
        path.write_text("t,i,j,y\n-1,1,2,1.5\n")
        with pytest.raises(DataFormatError, match="negative"):
            cio.load_network_csv(path)
        path.write_text("t,i,j,y\n0,2,2,1.5\n")
        with pytest.raises(DataFormatError, match="diagonal"):
            cio.load_network_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("time,i,j,y\n0,1,2,1.0\n")
        with pytest.raises(DataFormatError, match="header"):
            cio.load_network_csv(path)

    def test_covariates_require_complete_coverage(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("i,j,s1\n1,2,0.5\n")
        with pytest.raises(DataFormatError, match="missing"):
            cio.load_dyad_covariates_csv(path, m=3)


class TestJsonAndNdjson:
    def test_params_round_trip(self):
        _, _, params, _ = make_instance(113, m=4, p=2, directed=True)
        d = cio.params_to_dict(params)
        back = cio.params_from_dict(json.loads(json.dumps(d)), m=4)
        assert np.allclose(back.H, params.H)
        assert np.allclose(back.C2, params.C2)
        assert back.alpha2 == params.alpha2

    def test_scalar_broadcast(self):
        d = {"p": 1, "directed": False, "q_dyad": 6, "q_node": 4,
             "gamma": 0.5, "alpha1": 0.3, "H": 0.2, "Gamma": 0.0,
             "A": 0.4, "C1": 0.0, "sigma2": 1.0}
        params = cio.params_from_dict(d)
        assert params.gamma.shape == (6,) and np.all(params.gamma == 0.5)
        assert params.H[0, 0] == 0.2

    def test_ndjson_round_trip(self, tmp_path):
        net, attrs, _, mode = make_instance(114, m=4, n=4, p=1, directed=True)
        from coevnet import run_chain

        s = run_chain(net, attrs, mode=mode, iters=60, burn_in=20, seed=3)
        path = tmp_path / "s.ndjson"
        cio.samples_to_ndjson(s, path)
        back = cio.samples_from_ndjson(path)
        assert back.n_draws == s.n_draws
        for key in s.draws:
            assert np.allclose(back.draws[key], s.draws[key])

    def test_prior_json(self, tmp_path):
        path = tmp_path / "prior.json"
        path.write_text(json.dumps({"v_beta": 10.0, "nu0": 2.0}))
        prior = cio.load_prior_json(path)
        assert prior.v_beta == 10.0 and prior.nu0 == 2.0
        path.write_text(json.dumps({"bogus": 1}))
        from coevnet import ValidationError

        with pytest.raises(ValidationError, match="bogus"):
            cio.load_prior_json(path)


def _write_instance_csvs(tmp_path, seed=115, **kw):
    net, attrs, _, mode = make_instance(seed, **kw)
    ypath, xpath = tmp_path / "y.csv", tmp_path / "x.csv"
    cio.write_network_csv(ypath, net)
    cio.write_attributes_csv(xpath, attrs)
    return str(ypath), str(xpath), mode


class TestCli:
    def test_validation_reports_every_violation(self, capsys):
        code = main([
            "fit-bayes", "--network", "no_such.csv", "--latent-dim", "0",
            "--attributes", "also_missing.csv",
            "--iters", "100", "--burn-in", "200", "--out", "o.ndjson",
        ])
        err = capsys.readouterr().err
        assert code == 2
        assert "no_such.csv" in err
        assert "also_missing.csv" in err
        assert "mutually exclusive" in err
        assert "--latent-dim must be >= 1" in err
        assert "must exceed" in err

    def test_fit_mle_rejects_ordinal_scale(self, tmp_path, capsys):
        ypath, xpath, _ = _write_instance_csvs(tmp_path)
        code = main([
            "fit-mle", "--network", ypath, "--attributes", xpath,
            "--network-scale", "ordinal", "--out", str(tmp_path / "r.json"),
        ])
        assert code == 2
        assert "gaussian" in capsys.readouterr().err

    def test_simulate_config_accepted(self, tmp_path):
        params = {"p": 1, "directed": False, "gamma": 0.1, "alpha1": 0.3,
                  "H": 0.1, "Gamma": 0.1, "A": 0.4, "C1": 0.01,
                  "sigma2": 0.5, "q_dyad": 45, "q_node": 10}
        ppath = tmp_path / "params.json"
        ppath.write_text(json.dumps(params))
        code = main([
            "simulate", "--params", str(ppath), "--m", "10", "--n", "20",
            "--p", "1", "--seed", "7",
            "--out-prefix", str(tmp_path / "sim"),
        ])
        assert code == 0
        assert (tmp_path / "sim_network.csv").exists()
        assert (tmp_path / "sim_attributes.csv").exists()

    def test_full_pipeline_and_exit_codes(self, tmp_path, capsys):
        ypath, xpath, _ = _write_instance_csvs(tmp_path, m=5, n=8, p=1)
        out = str(tmp_path / "s.ndjson")
        assert main([
            "fit-bayes", "--network", ypath, "--attributes", xpath,
            "--iters", "200", "--burn-in", "50", "--seed", "1",
            "--out", out,
        ]) == 0
        diag = str(tmp_path / "d.json")
        assert main([
            "diagnose", "--samples", out, "--network", ypath,
            "--attributes", xpath, "--out", diag,
        ]) == 0
        report = json.loads(open(diag).read())
        assert "average_ess" in report and "decomposition" in report
        fc = str(tmp_path / "fc.json")
        assert main([
            "forecast-study", "--network", ypath, "--attributes", xpath,
            "--holdouts", "6,8", "--out", fc,
        ]) == 0
        assert set(json.loads(open(fc).read())["pess"]) == {
            "full", "no_contagion", "no_ar", "neither"
        }

    def test_seeded_outputs_byte_identical(self, tmp_path):
        ypath, xpath, _ = _write_instance_csvs(tmp_path, seed=116, m=4, n=6,
                                               p=1)
        a, b = str(tmp_path / "a.ndjson"), str(tmp_path / "b.ndjson")
        args = ["fit-bayes", "--network", ypath, "--attributes", xpath,
                "--iters", "150", "--burn-in", "50", "--seed", "9"]
        assert main(args + ["--out", a]) == 0
        assert main(args + ["--out", b]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_console_script_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "coevnet.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        for name in ("simulate", "fit-mle", "fit-bayes", "diagnose",
                     "forecast-study"):
            assert name in proc.stdout
