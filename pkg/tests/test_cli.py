from __future__ import annotations

import json

import pytest

from boxmagic.cli import main, parse_word
from boxmagic.diagrams import assign_radii, one_loop, sample_point


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_diagram_list(capsys):
    code, out, _ = run(capsys, "diagram", "list", "--loops", "2")
    assert code == 0 and len(json.loads(out)) == 2


def test_diagram_build(capsys):
    code, out, _ = run(capsys, "diagram", "build", "--word", "Z2")
    d = json.loads(out)
    assert code == 0 and d["loops"] == 2 and d["word"] == ["Z2"]
    assert d["dashed"] == [["Z1", "W1"]] or d["dashed"] == [["W1", "Z1"]]


def test_diagram_canon(capsys):
    code, out, _ = run(capsys, "diagram", "canon", "--word", "Z1", "--word", "W1", "--word", "Z2")
    keys = [e["key"] for e in json.loads(out)]
    assert keys[0] == keys[1] != keys[2]


@pytest.mark.parametrize("word", ["Z1,Z1,Z1,Z1,Z1,Z1", "Q3"])
def test_bad_words_rejected(capsys, word):
    code, _, err = run(capsys, "diagram", "build", "--word", word)
    assert code != 0 and "ValueError" in err


def test_parse_word():
    assert parse_word("") == []
    assert parse_word("Z1, W2") == ["Z1", "W2"]


def test_eval_quadrature(capsys):
    code, out, _ = run(capsys, "eval", "--method", "quad", "--seed", "1")
    rec = json.loads(out)
    assert code == 0 and rec["method"] == "quadrature" and rec["error"] < 1e-8


def test_eval_spectral_matches_quadrature(capsys):
    _, out1, _ = run(capsys, "eval", "--method", "spectral", "--lmax", "10", "--seed", "2")
    _, out2, _ = run(capsys, "eval", "--method", "quad", "--seed", "2")
    a, b = json.loads(out1), json.loads(out2)
    assert abs(complex(a["value_re"], a["value_im"]) - complex(b["value_re"], b["value_im"])) < 1e-7


def test_eval_point_file_and_domain_violation(capsys, tmp_path):
    p = sample_point(assign_radii(one_loop()), 0).to_dict()
    good = tmp_path / "good.json"
    good.write_text(json.dumps(p))
    code, out, _ = run(capsys, "eval", "--point", str(good))
    assert code == 0
    p["Z1"] = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(p))
    code, _, err = run(capsys, "eval", "--point", str(bad))
    assert code != 0 and err.startswith("DomainViolation")


def test_verify_normalization(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "normalization")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and len(rep["checks"]) == 3


def test_verify_failure_exit_code(capsys):
    code, _, err = run(capsys, "verify", "normalization", "--tol", "1e-30")
    assert code == 1 and "FAIL" in err


def test_verify_config_and_csv(capsys, tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[verify]\nseed = 4\n[verify.tolerances]\nexpansion = 1e-5\n")
    code, out, _ = run(capsys, "verify", "expansion", "--config", str(cfg), "--csv")
    assert code == 0 and out.splitlines()[0].startswith("id,pass")
    js = tmp_path / "cfg.json"
    js.write_text(json.dumps({"seed": 4}))
    code, out, _ = run(capsys, "verify", "expansion", "--config", str(js), "--seed", "5")
    assert json.loads(out)["seed"] == 5


def test_verify_plot(capsys, tmp_path):
    pytest.importorskip("matplotlib")
    code, _, err = run(capsys, "verify", "expansion", "--plot", str(tmp_path / "plots"))
    assert code == 0 and list((tmp_path / "plots").glob("*.png"))


def test_verify_operators_one_loop(capsys):
    code, out, _ = run(capsys, "verify", "operators", "--loops", "1")
    ids = [c["id"] for c in json.loads(out)["checks"]]
    assert code == 0 and "operators/identity" in ids
