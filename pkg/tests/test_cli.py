from __future__ import annotations

import json
import subprocess
import sys

import jsonschema
import pytest

from riccati.cli import load_schema, run


def _json(argv):
    status, text = run([*argv, "--format", "json"])
    doc = json.loads(text)
    jsonschema.validate(doc, load_schema(argv[0]))
    return status, doc


# --------------------------------------------------------------------------
# catalog


def test_catalog_default_lists_six_families():
    status, doc = _json(["catalog"])
    assert status == 0
    assert [f["family"] for f in doc["families"]] == [
        "torus", "kodaira", "hopf-primary", "hopf-secondary", "inoue-sm", "inoue-splus"]


def test_catalog_filter_hopf():
    status, doc = _json(["catalog", "hopf"])
    assert [f["family"] for f in doc["families"]] == ["hopf-primary", "hopf-secondary"]
    status, text = run(["catalog", "hopf"])
    assert status == 0 and text.count("| hopf-") == 2


# --------------------------------------------------------------------------
# check


def test_check_torus_type_2_passes():
    status, doc = _json(["check", "--surface", "torus", "--param", "type=2", "--param", "c=5"])
    assert status == 0 and doc["ok"]


def test_check_kodaira_e_ne_h_reports_residual():
    status, doc = _json(["check", "--surface", "kodaira", "--param", "e=1", "--param", "h=2"])
    assert status == 1
    failed = [c for c in doc["checks"] if not c["ok"]]
    assert {c["name"] for c in failed} == {"curvature", "frobenius"}
    assert all("e^2" in c["detail"] for c in failed)


def test_check_inline_and_file_descriptors(tmp_path):
    inline = json.dumps({"family": "hopf-primary", "params": {"a": 0.25, "b": 0.5}})
    assert run(["check", "--surface", inline])[0] == 0
    f = tmp_path / "s.json"
    f.write_text(inline)
    assert run(["check", "--surface", str(f)])[0] == 0


def test_usage_errors_exit_2():
    assert run(["check", "--surface", "{bad json"])[0] == 2
    assert run(["check", "--surface", "hopf-primary", "--param", "a=0.9"])[0] == 2
    assert run(["monodromy", "--tol", "1e-3"])[0] == 2
    assert run(["monodromy", "--word-bound", "13"])[0] == 2
    assert run(["chern", "--n", "5"])[0] == 2
    assert run(["pencil", "--u", "x+"])[0] == 2
    assert run(["frobnicate"])[0] == 2


# --------------------------------------------------------------------------
# monodromy


def test_monodromy_torus_type_1():
    status, doc = _json(["monodromy", "--surface", "torus", "--param", "a=1", "--param", "b=2"])
    assert status == 0
    assert len(doc["generators"]) == 4
    assert all(g["match_report"] == "exact-convention match" for g in doc["generators"])
    assert doc["group"]["classification"] == "infinite"


def test_monodromy_hopf_trivial():
    status, doc = _json(["monodromy", "--surface", "hopf-primary", "--param", "a=0.5", "--param", "b=0.5"])
    assert status == 0 and doc["group"]["classification"] == "trivial"


def test_monodromy_inoue_sm_cyclic_infinite():
    status, doc = _json(["monodromy", "--surface", "inoue-sm"])
    assert status == 0
    group = doc["group"]
    assert group["classification"] == "infinite" and group["cyclic"]
    assert "loxodromic" in group["evidence"][0]


# --------------------------------------------------------------------------
# verify-tables


def test_verify_tables_all_rows_match():
    status, doc = _json(["verify-tables", "--seed", "3"])
    assert status == 0 and doc["ok"]
    families = {row["family"] for row in doc["rows"]}
    assert families == {"torus", "kodaira", "hopf-primary", "hopf-secondary", "inoue-sm", "inoue-splus"}


def test_verify_tables_deterministic():
    assert run(["verify-tables", "--seed", "5"]) == run(["verify-tables", "--seed", "5"])
    assert run(["verify-tables", "--seed", "5", "--format", "json"]) == run(
        ["verify-tables", "--seed", "5", "--format", "json"])


def test_verify_tables_loose_tolerance_same_outcomes():
    _, tight = _json(["verify-tables", "--seed", "1"])
    _, loose = _json(["verify-tables", "--seed", "1", "--tol", "1e-4"])
    assert [(r["family"], r["match"], r["ok"]) for r in tight["rows"]] == [
        (r["family"], r["match"], r["ok"]) for r in loose["rows"]]


# --------------------------------------------------------------------------
# chern and pencil


@pytest.mark.parametrize("n", [2, 3, 4])
def test_chern(n):
    status, doc = _json(["chern", "--n", str(n)])
    assert status == 0 and doc["ok"]
    assert [row["k"] for row in doc["identities"]] == list(range(n + 1))


def test_pencil_flat():
    status, doc = _json(["pencil", "--u", "1"])
    assert status == 0 and doc["flat"] and doc["foliation"] == "dz"


def test_pencil_curvature_oracle():
    status, doc = _json(["pencil", "--u", "1/(1-x*y)"])
    assert status == 0 and not doc["flat"]
    assert doc["curvature"]["dxdy"] == "-1/(x^2*y^2 - 2*x*y + 1)"


def test_pencil_zero_rejected():
    status, text = run(["pencil", "--u", "0"])
    assert status == 2 and "transverse" in text


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "riccati.cli", "catalog", "--format", "json"],
                         capture_output=True, text=True, check=True)
    assert len(json.loads(out.stdout)["families"]) == 6
    bad = subprocess.run([sys.executable, "-m", "riccati.cli", "chern", "--n", "9"], capture_output=True, text=True)
    assert bad.returncode == 2 and bad.stderr
