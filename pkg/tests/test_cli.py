import json
import subprocess
import sys

import numpy as np
import pytest

from gselab import io
from gselab.cli import main
from gselab.errors import DimensionError, MalformedInputError


def run(tmp_path, *argv):
    out = tmp_path / "res.json"
    code = main(list(argv) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if code == 0 else None)


def test_gse_maxcut_fixture(tmp_path, fixtures):
    code, res = run(tmp_path, "gse", "--instance", str(fixtures / "maxcut_k3.json"), "--exact")
    assert code == 0
    assert res["value"] == pytest.approx(4 / 9)
    assert res["oracle"] == "exact"
    assert {"value", "config_echo", "oracle", "seed"} <= set(res)


def test_cutdecomp_indicator_fixture(tmp_path, fixtures):
    code, res = run(tmp_path, "cutdecomp", "--instance", str(fixtures / "indicator.json"), "--eps", "0.5")
    assert code == 0
    assert res["s"] == 1


@pytest.mark.parametrize("argv,key,expected", [
    (["micro-gse", "--instance", "micro.json"], "value", 0.375),
    (["max-csp", "--instance", "xor_formula.json"], "value", 0.5),
    (["gse", "--instance", "xor_formula.json"], "value", 0.5),
    (["ac", "--instance", "ac_cycle.json"], "value", 4 / 25),
    (["qap", "--instance", "ac_cycle.json"], "value", 4 / 25),
    (["homdensity", "--instance", "triangle_density.json", "--injective"], "value_injective", 1.0),
    (["gse", "--instance", "maxcut_kernel.json"], "value", 0.5),
])
def test_subcommands(tmp_path, fixtures, argv, key, expected):
    argv = [str(fixtures / a) if a.endswith(".json") else a for a in argv]
    code, res = run(tmp_path, *argv)
    assert code == 0
    assert res[key] == pytest.approx(expected)


def test_sample_and_cutnorm(tmp_path, fixtures):
    code, res = run(tmp_path, "sample", "--instance", str(fixtures / "step_kernel.json"), "--k", "5", "--seed", "2")
    assert code == 0 and len(res["value"]) == 25
    code, res = run(tmp_path, "cutnorm", "--instance", str(fixtures / "step_kernel.json"))
    assert code == 0 and res["value"] > 0


def test_concentration_is_byte_identical(tmp_path, fixtures, monkeypatch):
    texts = []
    for i, threads in enumerate(["1", "3", "1"]):
        monkeypatch.setenv("GSELAB_THREADS", threads)
        out = tmp_path / f"c{i}.json"
        argv = ["concentration", "--instance", str(fixtures / "step_kernel.json"), "--trials", "100",
                "--seed", "7", "--k", "8", "--out", str(out)]
        assert main(argv) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_beta_curve_csv(tmp_path, fixtures):
    csv = tmp_path / "curve.csv"
    code, res = run(tmp_path, "beta-curve", "--instance", str(fixtures / "maxcut_kernel.json"), "--trials", "20",
                    "--k-max", "16", "--eps-grid", "0.3,0.1", "--csv", str(csv))
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "eps,k_star"
    assert len(lines) == 3
    assert len(res["curve"]) == 2


def test_exit_codes(tmp_path, fixtures):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["gse", "--instance", str(bad)]) == 1
    shape = tmp_path / "shape.json"
    shape.write_text(json.dumps({"kind": "rarray", "values": [1, 2, 3], "interaction": {"values": [0, 1, 1, 0]}}))
    assert main(["gse", "--instance", str(shape)]) == 1
    assert main(["max-csp", "--instance", str(fixtures / "maxcut_k3.json")]) == 2
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"kind": "rarray", "values": [0.0] * 900, "interaction": {"values": [0, 1, 1, 0]}}))
    assert main(["gse", "--instance", str(big), "--exact"]) == 2


def test_error_messages_name_the_invariant(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "step_kernel", "masses": [0.5, 0.5], "values": [1, 2, 3]}))
    with pytest.raises(DimensionError, match="3 values for 2 steps"):
        io.load_instance(bad)
    bad.write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises(MalformedInputError, match="unknown instance kind"):
        io.load_instance(bad)
    bad.write_text(json.dumps({"values": [1]}))
    with pytest.raises(MalformedInputError, match="'kind'"):
        io.load_instance(bad)


def test_canonical_json():
    text = io.canonical_dumps({"b": 1.0, "a": [0.1, np.float64(-0.0), float("nan")], "c": np.int64(3)})
    assert text == '{\n  "a": [0.10000000000000001, 0.0, null],\n  "b": 1.0,\n  "c": 3\n}\n'
    assert json.loads(text)["a"][0] == 0.1


def test_module_entry_point(fixtures):
    proc = subprocess.run([sys.executable, "-m", "gselab", "gse", "--instance", str(fixtures / "maxcut_k3.json")],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["value"] == pytest.approx(4 / 9)
