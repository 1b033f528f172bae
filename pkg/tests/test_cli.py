import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fockext.cli import CSV_COLUMNS, SCHEMA_VERSION, ExperimentConfig, main
from fockext.polynomials import PolyKernel, VarSpec


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, mode, cfg, out="out"):
    code = main([mode, "--config", write(tmp_path, cfg), "--out", str(tmp_path / out)])
    return code, tmp_path / out


class TestConfig:
    @pytest.mark.parametrize("cfg", [
        {"n": 2, "m": 1, "colour": "blue"},
        {"n": 2},
        {"n": 2, "m": 3},
        {"n": 2, "m": 1, "p_list": [-1]},
        {"n": 3, "m": 1, "p_list": [8]},
    ])
    def test_invalid_exit_two(self, tmp_path, cfg, capsys):
        code, _ = run(tmp_path, "simulate", cfg)
        assert code == 2
        assert "invalid config" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["expand", "--config", str(tmp_path / "nope.json")]) == 2

    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({"mode": "simulate", "n": 2, "m": 1})
        assert cfg.p_list == [8, 16, 32] and cfg.seed == 0 and cfg.order == 1
        assert np.allclose(cfg.decay_radii, np.linspace(1.3, 2.6, 14))


class TestVerify:
    def test_pass_and_deterministic(self, tmp_path, capsys):
        cfg = {"n": 2, "m": 1, "seed": 3, "random_brackets": 12}
        code1, out1 = run(tmp_path, "verify-calculus", cfg, "a")
        code2, out2 = run(tmp_path, "verify-calculus", cfg, "b")
        assert code1 == code2 == 0
        assert "PASS" in capsys.readouterr().out
        a = (out1 / "verify_calculus.json").read_bytes()
        b = (out2 / "verify_calculus.json").read_bytes()
        assert a == b
        report = json.loads(a)
        assert report["schema_version"] == SCHEMA_VERSION and report["seed"] == 3
        assert report["max_identity_deviation"] < 1e-12
        assert report["oracle"]["count"] == 12 and report["oracle"]["max_deviation"] < 1e-8

    def test_square_case(self, tmp_path):
        code, out = run(tmp_path, "verify-calculus", {"n": 2, "m": 2, "random_brackets": 0})
        report = json.loads((out / "verify_calculus.json").read_text())
        assert code == 0
        (core,) = [c for c in report["identities"] if c["name"] == "K_nn==core"]
        assert core["passed"] and core["deviation"] == 0


class TestExpand:
    def test_trivial_jet(self, tmp_path):
        code, out = run(tmp_path, "expand", {"n": 2, "m": 1, "order": 1})
        report = json.loads((out / "expand.json").read_text())
        assert code == 0
        for key, right in (("J_perp", 2), ("J_E", 1)):
            terms = report[key]["terms"]
            v = VarSpec(2, 1, right)
            assert PolyKernel.from_json(terms[0], v) == PolyKernel.constant(v, 1)
            assert PolyKernel.from_json(terms[1], v).chop(1e-14).is_zero()

    def test_single_entry_A(self, tmp_path):
        cfg = {"n": 3, "m": 1, "order": 1, "jet": {"A": [[[{"re": 0.7, "im": -0.2}, 0.0]]]}}
        code, out = run(tmp_path, "expand", cfg)
        report = json.loads((out / "expand.json").read_text())
        assert code == 0
        assert report["comparison"]["J1_perp_deviation"] < 1e-12
        assert report["comparison"]["J1_E_deviation"] < 1e-12

    def test_missing_jet_named(self, tmp_path):
        code, out = run(tmp_path, "expand", {"n": 2, "m": 1, "order": 2})
        report = json.loads((out / "expand.json").read_text())
        assert code == 1
        assert "ambient Bergman" in report["error"]

    def test_user_supplied_second_order(self, tmp_path):
        vX, vY = VarSpec(2, 1, 2), VarSpec(1, 1, 1)
        j2 = (PolyKernel.variable(vX, "z", 0) * PolyKernel.variable(vX, "zbp", 0)).scale(0.3)
        jet = {"bergman_ambient": [PolyKernel.constant(vX, 1).to_json(), [], j2.to_json()],
               "bergman_sub": [PolyKernel.constant(vY, 1).to_json(), [], []]}
        code, out = run(tmp_path, "expand", {"n": 2, "m": 1, "order": 2, "jet": jet})
        report = json.loads((out / "expand.json").read_text())
        assert code == 0
        assert report["unverified_orders"] == [2]
        assert "comparison" not in report
        assert len(report["J_E"]["terms"]) == 3


class TestSimulate:
    def test_flat_run(self, tmp_path):
        cfg = {"n": 2, "m": 1, "p_list": [8, 4], "basis_degree": 14, "samples": 20,
               "linf_samples": 3, "seed": 1}
        code, out = run(tmp_path, "simulate", cfg)
        assert code == 0
        rows = list(csv.reader((out / "simulate.csv").open()))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [float(r[0]) for r in rows[1:]] == [4, 8]
        report = json.loads((out / "simulate.json").read_text())
        assert report["checks"]["flat_norms"] and report["flat_norms"]["max_deviation"] < 1e-6
        assert report["passed"]

    def test_failed_p_recorded(self, tmp_path):
        cfg = {"n": 1, "m": 0, "p_list": [4, 8], "basis_degree": 30, "quad_order": 4}
        code, out = run(tmp_path, "decay", cfg)
        report = json.loads((out / "decay.json").read_text())
        assert code == 1
        assert set(report["errors"]) == {"4", "8"}
        assert not report["checks"]["all_models_built"]

    def test_decay_mode(self, tmp_path):
        cfg = {"n": 1, "m": 0, "p_list": [8, 16], "basis_degree": 16}
        code, out = run(tmp_path, "decay", cfg)
        report = json.loads((out / "decay.json").read_text())
        assert code == 0
        assert report["checks"]["flat_decay_inequality"]
        assert report["decay"]["variation"] <= 0.2


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {"n": 1, "m": 0, "order": 1})
    res = subprocess.run([sys.executable, "-m", "fockext", "expand", "--config", path,
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "PASS"
