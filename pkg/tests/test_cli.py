"""Command-line behaviour: formats, consistency, exit codes."""
import json
import math

import numpy as np
import pytest

from groupfill.cli import main
from conftest import fading_doc, reference_doc, write_json, write_toml


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def grab(out, key):
    for line in out.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"missing {key!r} in output:\n{out}")


def test_solve_fixed_hand_problem(tmp_path, capsys):
    path = write_json(tmp_path / "hand.json", {
        "gains": [4.0, 1.0], "groups": [[1], [2]],
        "caps": [0.5, 2.0], "total_power": 2.0,
    })
    code, out, _ = run(capsys, "solve-fixed", path)
    assert code == 0
    powers = [float(x) for x in grab(out, "powers").split()]
    assert powers == pytest.approx([0.5, 1.5], abs=1e-9)
    assert float(grab(out, "mu")) == pytest.approx(0.4, abs=1e-9)
    assert float(grab(out, "capacity_nats")) == pytest.approx(
        math.log(3.0) + math.log(2.5), abs=1e-9
    )
    assert out.startswith("# solve-fixed ")


def test_solve_fixed_bits_flag(reference_file, capsys):
    code, out_nats, _ = run(capsys, "solve-fixed", reference_file)
    code2, out_bits, _ = run(capsys, "solve-fixed", reference_file, "--bits")
    assert code == code2 == 0
    nats = float(grab(out_nats, "capacity_nats"))
    bits = float(grab(out_bits, "capacity_bits"))
    assert bits == pytest.approx(nats / math.log(2.0), rel=1e-12)


def test_solve_fixed_slack_caps_match_tpc_only(tmp_path, capsys):
    doc = reference_doc()
    doc["caps"] = [100.0, 100.0, 100.0]
    path = write_json(tmp_path / "loose.json", doc)
    _, joint, _ = run(capsys, "solve-fixed", path)
    _, tpc, _ = run(capsys, "solve-fixed", path, "--tpc-only")
    a = [float(x) for x in grab(joint, "powers").split()]
    b = [float(x) for x in grab(tpc, "powers").split()]
    assert a == pytest.approx(b, abs=1e-8)


def test_solve_fixed_writes_json_out(reference_file, tmp_path, capsys):
    out_path = tmp_path / "result.json"
    code, out, _ = run(capsys, "solve-fixed", reference_file, "--out", str(out_path))
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["capacity_nats"] == pytest.approx(float(grab(out, "capacity_nats")))
    assert len(doc["powers"]) == 9


def test_solve_fading_hand_trace(fading_file, capsys):
    code, out, err = run(capsys, "solve-fading", fading_file)
    assert code == 0
    powers = [float(x) for x in grab(out, "powers").split()]
    assert powers == [1.25, 1.25, 1.25, 0.75, 0.75, 0.75, 0.75, 1.25]
    assert grab(out, "active_groups") == "2"
    assert grab(out, "rounds") == "1"
    assert "ignored" in err  # gains are not consulted


def test_solve_fading_case_notes(tmp_path, capsys):
    doc = fading_doc()
    doc["total_power"] = 2.0
    _, out, _ = run(capsys, "solve-fading", write_json(tmp_path / "c1.json", doc))
    assert grab(out, "case") == "Case 1"
    powers = [float(x) for x in grab(out, "powers").split()]
    assert powers == pytest.approx([0.25] * 8, abs=0)

    doc["total_power"] = 30.0
    _, out, _ = run(capsys, "solve-fading", write_json(tmp_path / "c2.json", doc))
    assert grab(out, "case") == "Case 2"
    powers = [float(x) for x in grab(out, "powers").split()]
    assert powers == [5.0, 5.0, 5.0, 0.75, 0.75, 0.75, 0.75, 6.0]


def test_sweep_single_row_matches_solve_fixed(reference_file, capsys):
    _, solve_out, _ = run(capsys, "solve-fixed", reference_file)
    code, sweep_out, _ = run(capsys, "sweep", reference_file, "--grid", "10:10:1")
    assert code == 0
    lines = [l for l in sweep_out.splitlines() if not l.startswith("#")]
    assert lines[0] == "P_T,JOINT,TPC_ONLY,PGPC_ONLY"
    row = lines[1].split(",")
    assert float(row[0]) == 10.0
    assert float(row[1]) == pytest.approx(float(grab(solve_out, "capacity_nats")), abs=1e-12)


def test_sweep_single_row_matches_solve_fading(fading_file, capsys):
    _, solve_out, _ = run(capsys, "solve-fading", fading_file)
    code, sweep_out, _ = run(
        capsys, "sweep", fading_file, "--mode", "fading", "--grid", "8:8:1"
    )
    assert code == 0
    lines = [l for l in sweep_out.splitlines() if not l.startswith("#")]
    assert lines[0] == "P_T,JOINT,TPC_ONLY,PGPC_ONLY,JENSEN"
    row = lines[1].split(",")
    assert float(row[1]) == pytest.approx(
        float(grab(solve_out, "ergodic_capacity_nats")), abs=1e-12
    )


def test_sweep_csv_formatting_and_out_file(reference_file, tmp_path, capsys):
    out_path = tmp_path / "curves.csv"
    code, out, _ = run(
        capsys, "sweep", reference_file, "--grid", "1:3:1",
        "--curves", "JOINT,TPC_ONLY", "--out", str(out_path),
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == "P_T,JOINT,TPC_ONLY"
    assert len(lines) == 4
    for line in lines[1:]:
        assert len(line.split(",")) == 3
        assert ";" not in line
    assert out_path.read_text().strip() == "\n".join(lines)

    # Bit-stable: a second run prints the identical bytes.
    _, out2, _ = run(
        capsys, "sweep", reference_file, "--grid", "1:3:1",
        "--curves", "JOINT,TPC_ONLY", "--out", str(out_path),
    )
    assert out2 == out


def test_sweep_rejects_bad_specs(reference_file, capsys):
    code, _, err = run(capsys, "sweep", reference_file, "--grid", "0:5:1")
    assert code == 2
    code, _, err = run(capsys, "sweep", reference_file, "--grid", "1:5:1",
                       "--curves", "JENSEN")
    assert code == 2 and "fading" in err
    code, _, _ = run(capsys, "sweep", reference_file, "--grid", "nope")
    assert code == 2


def test_verify_random_passes(capsys):
    code, out, _ = run(capsys, "verify", "--random", "6", "3", "42", "10")
    assert code == 0
    assert "oracle-equivalence" in out
    assert "kkt-residual" in out
    assert "majorization" in out
    assert "schur-concavity" in out
    assert out.strip().endswith("result: PASS")


def test_verify_file_includes_fading_check(fading_file, capsys):
    code, out, _ = run(capsys, "verify", fading_file, "--samples", "2000")
    assert code == 0
    assert "fading-saa" in out


def test_verify_injected_perturbation_fails(reference_file, capsys):
    code, out, _ = run(
        capsys, "verify", reference_file, "--inject-perturbation", "0.05",
        "--samples", "2000",
    )
    assert code == 1
    assert "kkt-residual" in out and "FAIL" in out


def test_verify_requires_exactly_one_input(capsys):
    code, _, _ = run(capsys, "verify")
    assert code == 2


def test_montecarlo_matches_closed_form(fading_file, capsys):
    code, out, _ = run(
        capsys, "montecarlo", fading_file, "--samples", "100000", "--seed", "1"
    )
    assert code == 0
    mean = float(grab(out, "mean_nats"))
    se = float(grab(out, "std_error_nats"))
    _, solve_out, _ = run(capsys, "solve-fading", fading_file)
    exact = float(grab(solve_out, "ergodic_capacity_nats"))
    assert abs(mean - exact) <= 4 * se


def test_montecarlo_rejects_zero_samples(fading_file, capsys):
    code, _, _ = run(capsys, "montecarlo", fading_file, "--samples", "0")
    assert code == 2


def test_montecarlo_rejects_mismatched_ensemble(fading_file, capsys):
    code, _, err = run(
        capsys, "montecarlo", fading_file, "--ensemble", "rayleigh-mimo:2x5"
    )
    assert code == 2
    code, _, _ = run(capsys, "montecarlo", fading_file, "--ensemble", "bogus")
    assert code == 2


def test_missing_file_is_input_error(capsys):
    code, _, err = run(capsys, "solve-fixed", "no-such-file.json")
    assert code == 2
    assert "error:" in err


def test_malformed_json_is_input_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, _ = run(capsys, "solve-fixed", str(path))
    assert code == 2


def test_schema_violation_is_input_error(tmp_path, capsys):
    path = write_json(tmp_path / "overlap.json", {
        "gains": [1.0, 1.0], "groups": [[1, 2], [2]],
        "caps": [1.0, 1.0], "total_power": 1.0,
    })
    code, _, _ = run(capsys, "solve-fixed", str(path))
    assert code == 2


def test_every_subcommand_echoes_config(reference_file, fading_file, capsys):
    for argv in (
        ("solve-fixed", reference_file),
        ("solve-fading", fading_file),
        ("sweep", reference_file, "--grid", "1:2:1"),
        ("verify", "--random", "4", "2", "1", "3"),
        ("montecarlo", fading_file, "--samples", "100"),
    ):
        _, out, _ = run(capsys, *argv)
        assert out.startswith("# " + argv[0])
