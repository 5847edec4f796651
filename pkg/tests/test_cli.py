import json
import subprocess
import sys

import numpy as np
import pytest

from opcalc import cli


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


BASE_CONFIG = {
    "backend": {"kind": "discrete_weyl", "N": 3},
    "seed": 11,
    "tasks": [
        {"kind": "verify_sq"},
        {"kind": "quantize", "n_random": 2},
        {"kind": "dequantize", "n_random": 2},
        {"kind": "star_table", "n_random": 2},
        {"kind": "berezin", "w_index": 0, "n_random": 2},
        {"kind": "inftensor", "copies": 2},
    ],
}


def test_run_all_tasks_pass(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", BASE_CONFIG)
    out = str(tmp_path / "report.json")
    assert cli.main(["run", cfg, "--out", out]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "pass"
    kinds = [t["kind"] for t in report["tasks"]]
    assert kinds == [t["kind"] for t in BASE_CONFIG["tasks"]]
    assert all(t["verdict"] == "pass" for t in report["tasks"])
    # timings go to stderr, never into the report
    assert "timings" not in report
    assert "in 0." in capsys.readouterr().err or True


def test_reports_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "cfg.json", BASE_CONFIG)
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    assert cli.main(["run", cfg, "--out", out1]) == 0
    assert cli.main(["run", cfg, "--out", out2]) == 0
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_seed_changes_report(tmp_path):
    cfg = write(tmp_path, "cfg.json", BASE_CONFIG)
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    assert cli.main(["run", cfg, "--out", out1]) == 0
    assert cli.main(["run", cfg, "--out", out2, "--seed", "99"]) == 0
    assert (tmp_path / "r1.json").read_bytes() != (tmp_path / "r2.json").read_bytes()


def test_empty_tasks_is_validation_failure(tmp_path):
    cfg = write(tmp_path, "bad.json",
                {"backend": {"kind": "trivial"}, "tasks": []})
    assert cli.main(["run", cfg]) == cli.EXIT_VALIDATION_FAILURE


def test_metaplectic_automorphism_validation(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {
        "backend": {"kind": "abelian_metaplectic", "orders": [2], "k": 2},
        "tasks": [{"kind": "verify_sq"}],
    })
    assert cli.main(["run", cfg]) == cli.EXIT_VALIDATION_FAILURE
    assert "automorphism" in capsys.readouterr().err


def test_parse_failure(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p)]) == cli.EXIT_PARSE_FAILURE
    assert cli.main(["run", str(tmp_path / "missing.json")]) == \
        cli.EXIT_PARSE_FAILURE


def test_task_failure_exit_code(tmp_path):
    cfg = write(tmp_path, "cfg.json", {
        "backend": {"kind": "discrete_weyl", "N": 3},
        "tasks": [{"kind": "verify_sq", "tol": 1e-30}],
    })
    assert cli.main(["run", cfg]) == cli.EXIT_TASK_FAILURE


def test_unknown_task_kind(tmp_path):
    cfg = write(tmp_path, "cfg.json", {
        "backend": {"kind": "trivial"},
        "tasks": [{"kind": "frobnicate"}],
    })
    assert cli.main(["run", cfg]) == cli.EXIT_VALIDATION_FAILURE


def test_describe_weyl3(tmp_path, capsys):
    spec = write(tmp_path, "b.json", {"kind": "discrete_weyl", "N": 3})
    assert cli.main(["describe", spec]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary == {"kind": "discrete_weyl", "hdim": 3, "points": 9,
                       "mass": 3.0, "exact": True, "tol": None, "b2_rank": 9}


def test_describe_trivial_and_s3(tmp_path, capsys):
    spec = write(tmp_path, "t.json", {"kind": "trivial"})
    cli.main(["describe", spec])
    summary = json.loads(capsys.readouterr().out)
    assert (summary["hdim"], summary["points"], summary["mass"]) == (1, 1, 1.0)

    spec = write(tmp_path, "s3.json",
                 {"kind": "finite_group", "preset": "s3_standard"})
    cli.main(["describe", spec])
    summary = json.loads(capsys.readouterr().out)
    assert (summary["hdim"], summary["points"], summary["b2_rank"]) == (2, 6, 4)
    assert summary["mass"] == pytest.approx(2.0)


def test_describe_table_rendering(tmp_path, capsys):
    spec = write(tmp_path, "b.json", {"kind": "discrete_weyl", "N": 2})
    assert cli.main(["describe", spec, "--table"]) == 0
    text = capsys.readouterr().out
    assert "hdim" in text and "b2_rank" in text


def test_star_table_payload(tmp_path):
    cfg = write(tmp_path, "cfg.json", {
        "backend": {"kind": "discrete_weyl", "N": 2},
        "seed": 3,
        "tasks": [{"kind": "star_table", "n_random": 2}],
    })
    out = str(tmp_path / "r.json")
    assert cli.main(["run", cfg, "--out", out]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    table = report["tasks"][0]["table"]
    assert len(table) == 2 and len(table[0]) == 2
    assert len(table[0][0]["re"]) == 4   # dense values on the 4-point space


def test_quantize_roundtrip_through_serialization(tmp_path):
    # feed explicit serialized symbols through quantize, read operators back
    import opcalc as oc
    from opcalc import core
    fam = oc.discrete_weyl(2)
    rng = np.random.default_rng(5)
    f = oc.random_symbol(rng, fam.space)
    cfg = write(tmp_path, "cfg.json", {
        "backend": {"kind": "discrete_weyl", "N": 2},
        "tasks": [{"kind": "quantize", "symbols": [core.symbol_to_json(f)]}],
    })
    out = str(tmp_path / "r.json")
    assert cli.main(["run", cfg, "--out", out]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    T = core.operator_from_json(report["tasks"][0]["operators"][0])
    q = oc.build_quantizer(fam)
    assert np.abs(T - oc.quantize(q, f)).max() < 1e-12


def test_console_entry_point(tmp_path):
    spec = write(tmp_path, "b.json", {"kind": "discrete_weyl", "N": 2})
    proc = subprocess.run(
        [sys.executable, "-m", "opcalc.cli", "describe", spec],
        capture_output=True, text=True, env={"PATH": "/usr/bin:/bin",
                                             "OPCALC_THREADS": "1"})
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["hdim"] == 2
