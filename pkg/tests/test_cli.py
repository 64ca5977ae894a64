import json
import math
import os

import numpy as np
import pytest

from arctomo.cli import main
from arctomo.config import RunConfig
from arctomo.errors import ConfigError
from arctomo.geometry import Domain, ScalarField, eval_phantom_at, hull_grid, paper_phantom
from arctomo.io_formats import read_field, read_measurement_csv, write_field

TINY_CONFIG = {
    "phantom": {
        "source": {"regions": [
            {"shape": "disk", "params": {"cx": 0.0, "cy": 0.35, "r": 0.3},
             "value": 1.0}], "background": 0.0},
        "absorption": {"regions": [], "background": 0.3,
                       "mollify_eps": 0.0},
    },
    "kernel": {"type": "none"},
    "forward": {"grid_n": 48, "n_dir": 48, "tol": 1e-6, "max_iter": 200},
    "reconstruction": {"grid_n": 24, "n_lambda": 32, "n_chord": 16,
                       "M": 1, "factor_nx": 48, "factor_n_angles": 64,
                       "closure_margin": 3},
    "thresholds": {"max_rel_l2": 0.9},
}


@pytest.fixture(scope="module")
def cfg_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "run.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return str(path)


@pytest.fixture(scope="module")
def forward_out(cfg_path, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("fwd"))
    assert main(["forward", "--config", cfg_path, "--out", out]) == 0
    return out


@pytest.fixture(scope="module")
def recon_out(cfg_path, forward_out, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("rec"))
    meas = os.path.join(forward_out, "measurement.csv")
    assert main(["reconstruct", "--config", cfg_path,
                 "--measurement", meas, "--out", out]) == 0
    return out


class TestConfig:
    def test_round_trip_identity(self, cfg_path, tmp_path):
        cfg = RunConfig.load(cfg_path)
        p2 = tmp_path / "again.json"
        cfg.dump(str(p2))
        cfg2 = RunConfig.load(str(p2))
        assert cfg.data == cfg2.data
        assert cfg.to_json() == cfg2.to_json()

    def test_inverse_crime_guard(self):
        bad = dict(TINY_CONFIG)
        bad = json.loads(json.dumps(TINY_CONFIG))
        bad["forward"]["grid_n"] = 24
        with pytest.raises(ConfigError):
            RunConfig(bad)
        bad["allow_inverse_crime"] = True
        RunConfig(bad)  # no raise

    def test_kernel_constructors(self):
        cfg = RunConfig(json.loads(json.dumps(TINY_CONFIG)))
        assert cfg.kernel().is_zero
        cfg.data["kernel"] = {"type": "henyey_greenstein", "mu_s": 5.0,
                              "g": 0.5, "M": 10}
        cfg.data["reconstruction"]["M"] = None   # defer to the kernel
        assert cfg.reconstruction_M() == 10
        cfg.data["kernel"] = {"type": "quadratic", "mu_s": 5.0, "g": 0.5}
        assert cfg.reconstruction_M() == 2


class TestForwardCommand:
    def test_outputs_exist(self, forward_out):
        assert os.path.exists(os.path.join(forward_out, "measurement.csv"))
        meta = json.load(open(os.path.join(forward_out,
                                           "measurement.meta.json")))
        assert meta["monotone"] is True

    def test_measurement_parses_and_matches_chords(self, forward_out):
        meas = read_measurement_csv(os.path.join(forward_out,
                                                 "measurement.csv"))
        assert meas.n_nodes == 32
        # ballistic flat disk with a = 0.3: bounded by the chord integral
        assert meas.values.max() < 2.0

    def test_deterministic_rerun(self, cfg_path, forward_out, tmp_path):
        out2 = str(tmp_path / "fwd2")
        main(["forward", "--config", cfg_path, "--out", out2])
        a = open(os.path.join(forward_out, "measurement.csv")).read()
        b = open(os.path.join(out2, "measurement.csv")).read()
        assert a == b

    def test_noise_injection_seeded(self, cfg_path, tmp_path):
        outs = []
        for name in ("n1", "n2"):
            out = str(tmp_path / name)
            main(["forward", "--config", cfg_path, "--out", out,
                  "--noise-sigma", "0.01", "--seed", "7"])
            outs.append(open(os.path.join(out, "measurement.csv")).read())
        assert outs[0] == outs[1]
        clean = str(tmp_path / "clean")
        main(["forward", "--config", cfg_path, "--out", clean])
        assert outs[0] != open(os.path.join(clean, "measurement.csv")).read()


class TestReconstructCommand:
    def test_outputs(self, recon_out):
        f_hat, header = read_field(os.path.join(recon_out, "f_hat.bin"))
        assert np.isfinite(f_hat.values).all()
        diag = json.load(open(os.path.join(recon_out, "diagnostics.json")))
        assert "timings" in diag
        assert diag["diagnostics"]["n_modes"] >= 3
        csv_lines = open(os.path.join(recon_out,
                                      "f_hat.csv")).read().splitlines()
        assert csv_lines[0] == "x,y,value"
        assert len(csv_lines) > 100

    def test_reconstruction_quality(self, recon_out):
        # blob source away from the chord: plateau within ~25% at this
        # deliberately tiny resolution
        f_hat, _ = read_field(os.path.join(recon_out, "f_hat.bin"))
        xx, yy = f_hat.grid.meshgrid()
        core = (xx ** 2 + (yy - 0.35) ** 2 < 0.12 ** 2) & f_hat.grid.mask
        assert abs(f_hat.values[core].mean() - 1.0) < 0.3


class TestCompareCommand:
    def test_identical_passes(self, recon_out, tmp_path, capsys):
        rec_path = os.path.join(recon_out, "f_hat.bin")
        assert main(["compare", "--reconstruction", rec_path,
                     "--truth", rec_path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["rel_l2"] == 0.0
        assert out["support_jaccard"] == 1.0

    def test_threshold_gating(self, recon_out, cfg_path, tmp_path, capsys):
        rec_path = os.path.join(recon_out, "f_hat.bin")
        truth_grid = hull_grid(Domain(), 24)
        zero = ScalarField(truth_grid,
                           np.where(truth_grid.mask, 5.0, 0.0))
        tpath = str(tmp_path / "truth.bin")
        write_field(tpath, zero)
        code = main(["compare", "--reconstruction", rec_path,
                     "--truth", tpath, "--config", cfg_path])
        assert code == 1


class TestSectionCommand:
    def test_preset_line(self, recon_out, tmp_path):
        out = str(tmp_path / "sec.csv")
        assert main(["section", "--field",
                     os.path.join(recon_out, "f_hat.bin"),
                     "--line", "preset:sqrt3", "--out", out]) == 0
        lines = open(out).read().splitlines()
        assert lines[0] == "t,x,y,value"
        assert len(lines) == 201

    def test_explicit_line(self, recon_out, tmp_path):
        out = str(tmp_path / "sec2.csv")
        assert main(["section", "--field",
                     os.path.join(recon_out, "f_hat.bin"),
                     "--line=-0.4,0.3,0.4,0.3", "--out", out,
                     "--samples", "50"]) == 0
        assert len(open(out).read().splitlines()) == 51


class TestKernelsCommand:
    def test_prints_table(self, tmp_path, capsys):
        cfg = json.loads(json.dumps(TINY_CONFIG))
        cfg["kernel"] = {"type": "henyey_greenstein", "mu_s": 5.0, "g": 0.5}
        path = tmp_path / "k.json"
        path.write_text(json.dumps(cfg))
        assert main(["kernels", "--config", str(path),
                     "--n-modes", "4"]) == 0
        out = capsys.readouterr().out
        assert "henyey_greenstein" in out
        assert "0.795774" in out      # k_0 = 5 / 2 pi
        assert "5.000000" in out      # 2 pi k_0
