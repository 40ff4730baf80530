import csv
import io
import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from layermie.cli import (
    DEFAULT_TOLERANCES,
    EXIT_INVALID,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigError,
    main,
    parse_config,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stream=out)
    return code, out.getvalue()


def read_config(name):
    with open(fixture(name)) as fh:
        return json.load(fh)


class TestSolve:
    def test_vacuum(self, tmp_path):
        code, text = run("solve", "--config", fixture("vacuum.json"), "--out", str(tmp_path))
        assert code == EXIT_OK
        rows = list(csv.DictReader(open(tmp_path / "farfield.csv")))
        assert rows
        values = np.array([[float(r[c]) for c in ("re_x", "im_x", "re_y", "im_y", "re_z", "im_z")] for r in rows])
        assert np.max(np.abs(values)) <= 1e-13
        assert "n_max" in text

    def test_pec_sphere_matches_oracle(self, tmp_path):
        code, _ = run("solve", "--config", fixture("pec_sphere.json"), "--out", str(tmp_path))
        assert code == EXIT_OK
        modes = json.load(open(tmp_path / "modes.json"))
        oracle = json.load(open(fixture("pec_sphere_oracle.json")))
        assert modes["n_max"] == oracle["n_max"]
        for key in ("s_te", "s_tm"):
            got = np.array([complex(*v) for v in modes[key]])
            ref = np.array([complex(*v) for v in oracle[key]])
            assert np.all(np.abs(got - ref) <= 1e-10 * np.abs(ref) + 1e-300)

    def test_malformed(self, tmp_path, capsys):
        code, _ = run("solve", "--config", fixture("malformed.json"), "--out", str(tmp_path))
        assert code == EXIT_INVALID
        assert "core_radius" in capsys.readouterr().err

    def test_missing_and_bad_files(self, tmp_path, capsys):
        assert run("solve", "--config", str(tmp_path / "none.json"))[0] == EXIT_INVALID
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("solve", "--config", str(bad))[0] == EXIT_INVALID
        assert run("solve")[0] == EXIT_INVALID
        assert run("frobnicate", "--config", str(bad))[0] == EXIT_INVALID
        capsys.readouterr()

    def test_resonance(self, tmp_path, capsys):
        code, _ = run("solve", "--config", fixture("resonance.json"), "--out", str(tmp_path))
        assert code == EXIT_NUMERICAL
        assert "resonance" in capsys.readouterr().err

    def test_determinism(self, tmp_path):
        for name in ("a", "b"):
            run("solve", "--config", fixture("reference_pmc.json"), "--out", str(tmp_path / name))
        for f in ("farfield.csv", "modes.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_overrides(self, tmp_path):
        code, text = run(
            "solve", "--config", fixture("pec_sphere.json"), "--out", str(tmp_path), "--nmax", "6",
            "--quad-order", "10",
        )
        assert code == EXIT_OK and "n_max 6" in text
        assert len(open(tmp_path / "farfield.csv").readlines()) == 1 + 10 * 20
        assert run("solve", "--config", fixture("pec_sphere.json"), "--nmax", "0")[0] == EXIT_INVALID


class TestCheck:
    def test_vacuum(self, tmp_path):
        code, text = run("check", "--config", fixture("vacuum.json"), "--out", str(tmp_path))
        assert code == EXIT_OK
        assert "FAIL" not in text
        results = json.load(open(tmp_path / "checks.json"))
        assert all(v["value"] <= v["tolerance"] for v in results.values())

    def test_lossy_pmc(self, tmp_path):
        code, text = run("check", "--config", fixture("reference_pmc.json"), "--out", str(tmp_path))
        assert code == EXIT_OK, text
        assert text.count("PASS") == 7

    def test_resonance(self, tmp_path, capsys):
        code, _ = run("check", "--config", fixture("resonance.json"), "--out", str(tmp_path))
        assert code == EXIT_NUMERICAL
        err = capsys.readouterr().err
        assert "numerical resonance" in err and "n=20" in err

    def test_tolerance_flags(self, tmp_path, capsys):
        cfg = fixture("vacuum.json")
        assert run("check", "--config", cfg, "--out", str(tmp_path), "--tol", "energy=1e-9")[0] == EXIT_OK
        assert run("check", "--config", cfg, "--tol", "energy=0.5")[0] == EXIT_INVALID
        assert run("check", "--config", cfg, "--tol", "nonsense=1e-3")[0] == EXIT_INVALID
        assert run("check", "--config", cfg, "--tol", "energy=abc")[0] == EXIT_INVALID
        assert "1e-09" not in capsys.readouterr().out


class TestLadder:
    def test_penetrable_rejected(self, tmp_path, capsys):
        code, _ = run("ladder", "--config", fixture("penetrable.json"), "--out", str(tmp_path))
        assert code != EXIT_OK
        assert "PEC or PMC" in capsys.readouterr().err

    def test_small_delta_is_numerical(self, tmp_path, capsys):
        data = read_config("reference_pec.json")
        data["delta_ladder"] = [1e-7, 1e-9]
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        assert run("ladder", "--config", str(path), "--out", str(tmp_path))[0] == EXIT_NUMERICAL
        assert "delta=1e-09" in capsys.readouterr().err

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ["pmc", "pec"])
    def test_reference(self, tmp_path, kind):
        code, text = run("ladder", "--config", fixture(f"reference_{kind}.json"), "--out", str(tmp_path))
        assert code == EXIT_OK, text
        report = json.load(open(tmp_path / "report.json"))
        assert report["fitted_slope"] >= 0.45
        assert len(report["far_errs"]) == 5


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(read_config("pec_sphere.json"))
        assert cfg.tolerances == DEFAULT_TOLERANCES
        assert cfg.delta_ladder == [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
        assert cfg.scene.calderon_radius == 1.5

    @pytest.mark.parametrize(
        "patch,needle",
        [
            ({"colour": 1}, "unknown config keys"),
            ({"core_kind": "wood"}, "core_kind"),
            ({"tolerances": {"energy": 0.1}}, "energy"),
            ({"k": -1}, "background_k"),
            ({"shells": [{"radius": 1.0, "mu": [1, 0], "eps": "x"}]}, "eps"),
            ({"bounds": {"gamma1": 1}}, "bounds"),
            ({"incidence": {"d": [0, 0, 1], "p": [0, 0, 1]}}, "orthogonal"),
        ],
    )
    def test_rejections(self, patch, needle):
        data = read_config("reference_pec.json")
        data.update(patch)
        with pytest.raises(ConfigError, match=needle):
            parse_config(data)

    def test_missing_key(self):
        data = read_config("reference_pec.json")
        del data["k"]
        with pytest.raises(ConfigError, match="'k'"):
            parse_config(data)


@pytest.mark.skipif(shutil.which("layermie") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(
        ["layermie", "solve", "--config", fixture("malformed.json"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_INVALID
    assert "core_radius" in proc.stderr


def test_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "layermie.cli", "solve", "--config", fixture("vacuum.json"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_OK, proc.stderr
