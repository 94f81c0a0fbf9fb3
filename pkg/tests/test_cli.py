import csv
import io
import json
import math
import warnings

import pytest

from chainkit import __version__
from chainkit.cli import RunConfig, canonical_json, dispatch, main, render
from chainkit.errors import VersionMismatch


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_R4(capsys):
    code, out, _ = run(capsys, "constants", "--R", "4")
    doc = json.loads(out)
    c = doc["payload"]["R"]
    assert code == 0
    assert (c["A"]["exact"], c["B"]["exact"], c["A_plus_B"]["exact"]) == ("32/3", "16/3", "16")
    assert c["expectation_factor"] == 32


def test_constants_p2(capsys):
    code, out, _ = run(capsys, "constants", "--p", "2")
    c = json.loads(out)["payload"]["p"]
    assert code == 0
    assert c["kcoef"] == pytest.approx(5 ** 1.25, rel=1e-14)
    assert c["R"] == pytest.approx(2 + (5 ** 0.5 + 1) / 2)
    assert c["membership"] == pytest.approx(1, abs=1e-12)


def test_profile_bundled_two_point(capsys):
    code, out, _ = run(capsys, "profile", "--space", "bundled:two_point", "--orlicz", '{"kind": "power", "p": 2}')
    p = json.loads(out)["payload"]
    assert code == 0 and p["S"] == pytest.approx(math.sqrt(2)) and p["k0"] == 0


def test_profile_text_and_family_input(capsys):
    code, out, _ = run(capsys, "profile", "--space", '{"family": {"kind": "path", "n": 4}}', "--format", "text")
    assert code == 0 and "S = " in out and "sigma[3]" in out


def test_chain_emits_nu(capsys, tmp_path):
    target = tmp_path / "nu.json"
    code, out, _ = run(capsys, "chain", "--space", "bundled:two_point", "--orlicz", "power:2", "--emit-nu",
                       str(target))
    nu = json.loads(target.read_text())
    assert code == 0
    assert nu["M"] == 1 and sorted(nu["pairs"]) == [[0, 0, 0.25], [0, 1, 0.25], [1, 0, 0.25], [1, 1, 0.25]]
    assert set(nu["levels"]) == {"0"}


def test_lemmas_small_fleet_csv(capsys):
    code, out, _ = run(capsys, "lemmas", "--fleet", '{"count": 8, "max_n": 12}', "--seed", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert {r["case"] for r in rows} == {str(i) for i in range(8)}
    # every case has one row per lemma, geometric_sum only for R > 2
    per_case = {}
    for r in rows:
        per_case.setdefault(r["case"], set()).add(r["lemma"])
    assert all(len(v) in (7, 8) for v in per_case.values())
    assert all(r["pass"] == "True" for r in rows)


def test_verify_sobolev(capsys):
    code, out, _ = run(capsys, "verify-sobolev", "--space", "bundled:three_point_path", "--trials", "90",
                       "--seed", "3", "--p", "2")
    doc = json.loads(out)
    assert code == 0
    ineq = doc["payload"]["inequalities"]
    assert "power_oscillation[p=2]" in ineq and ineq["pointwise_deviation"]["trials"] == 90
    assert set(ineq["pointwise_deviation"]) == {"trials", "min_slack", "violations", "worst_witness"}


def test_verify_sobolev_bad_psi_is_an_error(capsys):
    code, _, err = run(capsys, "verify-sobolev", "--space", "bundled:two_point", "--trials", "5",
                       "--psi", "power:3", "--alpha", "0", "--beta", "1")
    assert code == 2 and "psi" in err


def test_verify_process_passes(capsys):
    code, out, _ = run(capsys, "verify-process", "--space", "bundled:three_point_path", "--model",
                       "brownian-path", "--trials", "2000")
    doc = json.loads(out)
    assert code == 0
    names = [c["name"] for c in doc["checks"]]
    assert names == ["expected_range_32s", "expected_range", "expected_psi_range", "range_moment", "net_expected_range"]


def test_violation_sets_exit_status_and_prints_witness(capsys):
    code, out, err = run(capsys, "verify-process", "--space", "bundled:two_point", "--model",
                         '{"kind": "custom-cov", "cov": [[0, 0], [0, 1]], "scale": 3}', "--trials", "100")
    assert code == 1
    assert "violation: expected_range_32s" in err and "witness=" in err
    assert json.loads(out)["summary"]["pass"] is False


def test_usage_errors(capsys):
    code, _, err = run(capsys, "profile")
    assert code == 2 and "--space" in err
    code, _, err = run(capsys, "profile", "--space", "/does/not/exist.json")
    assert code == 2 and "no such file" in err
    code, _, err = run(capsys, "profile", "--space", "bundled:two_point", "--orlicz", '{"kind": "cosh"}')
    assert code == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_same_config_same_bytes():
    cfg = RunConfig("verify-process", space="bundled:three_point_path", trials=3000, seed=4)
    a, b = render(dispatch(cfg), "json"), render(dispatch(cfg), "json")
    assert a == b
    cfg2 = RunConfig("verify-process", space="bundled:three_point_path", trials=3000, seed=4, threads=3)
    assert render(dispatch(cfg2), "json") == a


def test_empty_report_document():
    from chainkit.cli import RunRecord
    rec = RunRecord(RunConfig("constants"), {})
    doc = json.loads(render(rec, "json"))
    assert doc["checks"] == [] and doc["summary"] == {"checks": 0, "violations": 0, "pass": True}
    assert render(rec, "csv").strip() == "name,pass,lhs,rhs,slack,violations,min_slack,witness"


def test_record_and_replay(capsys, tmp_path):
    rec, out = tmp_path / "rec.json", tmp_path / "out.json"
    args = ["verify-process", "--space", "bundled:two_point", "--model",
            '{"kind": "custom-cov", "cov": [[0, 0], [0, 1]]}', "--trials", "5000", "--seed", "8"]
    assert main(args + ["--out", str(out), "--record", str(rec)]) == 0
    doc = json.loads(rec.read_text())
    assert "started" in doc and doc["version"] == __version__
    # report bytes never carry timestamps
    assert "started" not in out.read_text()
    replayed = tmp_path / "replayed.json"
    assert main(["replay", str(rec), "--out", str(replayed)]) == 0
    assert replayed.read_bytes() == out.read_bytes()
    capsys.readouterr()
    assert main(["replay", str(rec), "--seed", "9", "--out", str(tmp_path / "x.json")]) == 1
    assert "not a faithful replay" in capsys.readouterr().err


def test_replay_lemmas_is_seed_independent(tmp_path):
    rec = tmp_path / "rec.json"
    assert main(["lemmas", "--space", "bundled:three_point_path", "--out", str(tmp_path / "o.json"),
                 "--record", str(rec)]) == 0
    assert main(["replay", str(rec), "--out", str(tmp_path / "r.json")]) == 0


def test_replay_version_mismatch_warns(tmp_path):
    rec = tmp_path / "rec.json"
    main(["constants", "--R", "3", "--out", str(tmp_path / "o.json"), "--record", str(rec)])
    doc = json.loads(rec.read_text())
    doc["version"] = "0.0.1"
    rec.write_text(json.dumps(doc))
    with pytest.warns(VersionMismatch):
        main(["replay", str(rec), "--out", str(tmp_path / "r.json")])


def test_canonical_json_handles_infinity():
    assert json.loads(canonical_json({"x": float("inf")})) == {"x": "inf"}
