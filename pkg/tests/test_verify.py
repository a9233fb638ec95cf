from __future__ import annotations

import json

import pytest

from boxmagic.verify import (DEFAULT_TOLERANCES, SCHEMA_VERSION, SUITES, VerifyConfig, digest, record,
                             run_suite)


def test_report_schema():
    rep = run_suite("normalization")
    data = json.loads(rep.to_json())
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["suite"] == "normalization" and data["passed"] is True
    for c in data["checks"]:
        assert set(c) == {"id", "claim", "inputs_digest", "values", "tolerance", "pass"}
        assert len(c["inputs_digest"]) == 64
    assert [c["id"] for c in data["checks"]] == sorted(c["id"] for c in data["checks"])


@pytest.mark.parametrize("suite", ["normalization", "expansion"])
def test_records_are_reproducible(suite):
    cfg = VerifyConfig(seed=7)
    assert run_suite(suite, cfg).checks == run_suite(suite, VerifyConfig(seed=7)).checks


def test_seed_changes_stochastic_inputs():
    a = run_suite("expansion", VerifyConfig(seed=1)).checks
    b = run_suite("expansion", VerifyConfig(seed=2)).checks
    assert a[0]["inputs_digest"] != b[0]["inputs_digest"]


def test_tolerance_overrides():
    cfg = VerifyConfig(tol=1e-30)
    assert cfg.tolerance("normalization") == 1e-30
    assert cfg.tolerance("sigmas") == DEFAULT_TOLERANCES["sigmas"]
    cfg = VerifyConfig(tolerances={"normalization": 0.5})
    assert cfg.tolerance("normalization") == 0.5
    assert not run_suite("normalization", VerifyConfig(tol=1e-30)).passed


def test_config_from_mapping():
    cfg = VerifyConfig.from_mapping({"seed": 3, "quad_grid1": [8, 4]})
    assert cfg.quad_grid1 == (8, 4)
    with pytest.raises(ValueError):
        VerifyConfig.from_mapping({"nonsense": 1})


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


def test_digest_is_order_free():
    assert digest({"a": 1, "b": [1, 2]}) == digest({"b": [1, 2], "a": 1})
    r = record("x", "claim", {"a": 1j}, {"v": 1 + 2j}, 0.1, True)
    assert r["values"]["v"] == [1.0, 2.0]


def test_csv_has_one_row_per_check():
    rep = run_suite("normalization")
    assert len(rep.to_csv().strip().splitlines()) == 1 + len(rep.checks)


def test_suite_list():
    assert set(SUITES) >= {"normalization", "orthogonality", "expansion", "magic", "conformal",
                           "harmonic", "operators"}
