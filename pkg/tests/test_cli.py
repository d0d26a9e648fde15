import json
import math
from pathlib import Path

import numpy as np
import pytest

from so2deg.certify import validate_certificate_dict
from so2deg.cli import RunConfig, main, reproduce
from so2deg.errors import SpecError
from so2deg.io import load_spec, parse_matrix, parse_number, spec_from_dict

EXAMPLES = Path(__file__).resolve().parent.parent / "examples"


class TestParsing:
    @pytest.mark.parametrize(
        "token,value",
        [("7/2", 3.5), ("1/(2*sqrt(2))", 1 / (2 * math.sqrt(2))), ("-2", -2.0), (4, 4.0), ("2*pi", 2 * math.pi),
         ("2**3", 8.0), ("cbrt(-8)", -2.0)],
    )
    def test_tokens(self, token, value):
        assert parse_number(token) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("token", ["__import__('os')", "1/0", "x", "sqrt(-1)", "[1]", True, None, "1e400"])
    def test_rejected(self, token):
        with pytest.raises(SpecError):
            parse_number(token)

    def test_matrix(self):
        np.testing.assert_allclose(parse_matrix([["7/2", 0], [0, "-1"]]), np.diag([3.5, -1.0]))
        with pytest.raises(SpecError):
            parse_matrix([[1, 2], [3]])

    def test_model_form(self):
        spec = load_spec(EXAMPLES / "ex65.json")
        assert spec.n == 4 and len(spec.critical_points) == 3

    def test_explicit_form(self):
        spec = load_spec(EXAMPLES / "ex67_hessian_only.json")
        assert not spec.has_potential and spec.brouwer_inf == -1

    def test_T_override(self):
        assert load_spec(EXAMPLES / "ex67.json", T=1.0).T == 1.0

    def test_missing_period(self):
        with pytest.raises(SpecError):
            spec_from_dict({"model": {"v_inf": [[0]], "a": 1}})

    def test_missing_field(self):
        with pytest.raises(SpecError):
            spec_from_dict({"n": 1, "T": 1, "critical_points": []})


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestAnalyze:
    def test_ex65(self, capsys):
        code, out, _ = run(capsys, "analyze", str(EXAMPLES / "ex65.json"))
        assert code == 0 and "witness k=2: 0 != -1" in out

    def test_ex67_periods(self, capsys):
        code, out, _ = run(capsys, "analyze", str(EXAMPLES / "ex67.json"), "--T", "6.2832", "--format", "json")
        d = json.loads(out)
        assert code == 0 and d["witness_k"] == 1
        code, out, _ = run(capsys, "analyze", str(EXAMPLES / "ex67.json"), "--T", "1.0", "--format", "json")
        d = json.loads(out)
        assert code == 2 and d["verdict"] == "not-decided"
        assert all(r["lhs"] == r["rhs"] == 0 for r in d["comparisons"])

    def test_json_round_trip_and_determinism(self, capsys):
        args = ("analyze", str(EXAMPLES / "ex66.json"), "--format", "json")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert first == second
        validate_certificate_dict(json.loads(first))

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", str(tmp_path / "nope.json"))
        assert code == 1 and "I/O" in err

    def test_bad_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run(capsys, "analyze", str(p))
        assert code == 1 and "invalid JSON" in err

    def test_schema_error(self, capsys, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"n": 1, "T": 1}')
        code, _, err = run(capsys, "analyze", str(p))
        assert code == 1 and "missing field" in err

    def test_index_error(self, capsys, tmp_path):
        p = tmp_path / "two.json"
        p.write_text(json.dumps({
            "n": 4, "T": 1, "v_inf": np.eye(4).tolist(),
            "critical_points": [
                {"id": "a", "x": [0, 0, 0, 0], "hessian": np.diag([0, 1, 1, 1]).tolist()},
                {"id": "b", "x": [1, 1, 1, 1], "hessian": np.diag([0, 1, 1, 1]).tolist()},
            ],
        }))
        code, _, err = run(capsys, "analyze", str(p))
        assert code == 1 and "BrouwerIndexError" in err

    def test_bad_flag_value(self, capsys):
        code, _, err = run(capsys, "analyze", str(EXAMPLES / "ex65.json"), "--tol-res", "-1")
        assert code == 1


class TestVerify:
    def test_sitnikov(self, capsys):
        code, out, _ = run(capsys, "verify", str(EXAMPLES / "ex67.json"), "--format", "json")
        d = json.loads(out)
        assert code == 0
        orbit = d["orbits"][0]
        assert orbit["minimal_period"] == pytest.approx(2 * math.pi)
        assert orbit["ode_residual"] <= 1e-7

    def test_hessian_only(self, capsys):
        code, _, err = run(capsys, "verify", str(EXAMPLES / "ex67_hessian_only.json"))
        assert code == 1 and "hessian-only spec, verification unavailable" in err

    def test_not_decided(self, capsys):
        code, _, _ = run(capsys, "verify", str(EXAMPLES / "ex67.json"), "--T", "1.0")
        assert code == 2


class TestReproduce:
    @pytest.mark.parametrize("example", ["6.5", "6.6", "6.7", "6.8", "6.9"])
    def test_all_match(self, example, capsys):
        code, out, _ = run(capsys, "reproduce", example)
        assert code == 0 and "all values match" in out

    def test_ex66_residual_path(self):
        _, payload, _ = reproduce("6.6")
        origin = [i for i in payload["indices"] if i["owner"] == "origin"][0]
        assert "residual" in origin["provenance"]["brouwer"]


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == 0 and "FAIL" not in out


def test_trace_constant(capsys):
    code, out, _ = run(capsys, "trace", str(EXAMPLES / "ex67.json"), "--family", "constant", "--direction", "+1",
                       "--format", "json", "--max-steps", "50")
    d = json.loads(out)
    # 50 steps stay far inside the box: the run is truncated, which is not a verdict
    assert code == 2 and d["branches"][0]["verdict"] == "MAX_STEPS"


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("analyze", T=0.0)
    with pytest.raises(ValueError):
        RunConfig("analyze", modes=0)
