import json

import pytest

from permci.cli import main, read_subject_file


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_exact_reference_row(capsys):
    code, out, _ = run_cli(capsys, "exact", "--counts", "2,6,8,0", "--alpha", "0.05")
    assert code == 0
    assert "interval_scaled: [-14, -5]" in out


def test_exact_interval_contains_estimate(capsys):
    code, out, _ = run_cli(capsys, "exact", "--counts", "1,0,0,1", "--alpha", "0.5")
    assert code == 0
    assert "estimate: 1" in out
    data = dict(line.split(": ", 1) for line in out.strip().splitlines())
    lo, hi = json.loads(data["interval_scaled"])
    assert lo <= 2 <= hi  # scaled estimate n*T = 2


def test_exact_json_schema(capsys):
    code, out, _ = run_cli(capsys, "exact", "--counts", "8,4,5,7", "--format", "json")
    assert code == 0
    report = json.loads(out)
    for field in ("interval_scaled", "interval", "estimate", "alpha", "method", "tests", "k", "seed", "wall_ms"):
        assert field in report
    assert report["interval_scaled"] == [-3, 13]


def test_unbalanced_auto(capsys):
    code, out, _ = run_cli(capsys, "exact", "--counts", "1,0,1,1", "--format", "json")
    assert code == 0
    assert json.loads(out)["method"] == "general-exact"


def assert_usage_exit(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    capsys.readouterr()


def test_malformed_counts_usage_error(capsys):
    assert_usage_exit(["exact", "--counts", "0,0,0,0"], capsys)
    assert_usage_exit(["exact", "--counts", "1,2,3"], capsys)
    assert_usage_exit(["exact"], capsys)  # missing required argument


def test_bad_alpha_usage_error(capsys):
    assert_usage_exit(["exact", "--counts", "1,1,1,1", "--alpha", "1.5"], capsys)


def test_mc_eps_must_be_below_alpha(capsys):
    code = main(["mc", "--counts", "1,1,1,1", "--alpha", "0.05", "--eps", "0.05", "--seed", "1"])
    assert code == 2
    capsys.readouterr()


def test_mc_deterministic_output(capsys):
    args = ["mc", "--counts", "6,4,4,6", "--alpha", "0.05", "--eps", "0.02", "--k", "2000", "--seed", "7"]
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2  # text output carries no timing


def test_mc_json_wall_ms_is_only_unstable_field(capsys):
    args = [
        "mc", "--counts", "6,4,4,6", "--alpha", "0.05", "--eps", "0.02",
        "--k", "2000", "--seed", "0x10", "--format", "json",
    ]
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    r1, r2 = json.loads(out1), json.loads(out2)
    r1.pop("wall_ms"), r2.pop("wall_ms")
    assert r1 == r2
    assert r1["seed"] == 16  # hex token accepted


def test_mc_threads_do_not_change_result(capsys):
    base = ["mc", "--counts", "5,3,2,6", "--alpha", "0.05", "--eps", "0.02", "--k", "3000", "--seed", "5", "--format", "json"]
    _, out1, _ = run_cli(capsys, *base, "--threads", "1")
    _, out2, _ = run_cli(capsys, *base, "--threads", "2")
    r1, r2 = json.loads(out1), json.loads(out2)
    r1.pop("wall_ms"), r2.pop("wall_ms")
    assert r1 == r2


def test_mc_auto_k_widens_around_exact(capsys):
    # auto-K run at coverage target 0.05 with eps=0.005: the result must
    # contain the exact 95% interval [-4, 10] with the union-bound failure
    # probability; the seed is fixed so the assertion is deterministic.
    code, out, _ = run_cli(
        capsys, "mc", "--counts", "6,4,4,6", "--alpha", "0.05", "--eps", "0.005",
        "--seed", "7", "--format", "json", "--threads", "2",
    )
    assert code == 0
    report = json.loads(out)
    assert report["k"] == report["k_recommended"]
    lo, hi = report["interval_scaled"]
    assert lo <= -4 and hi >= 10


def test_mc_low_k_flagged(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--counts", "6,4,4,6", "--alpha", "0.05", "--eps", "0.005",
        "--k", "1", "--seed", "3",
    )
    assert code == 0
    assert "below the recommended" in out


def test_enum_alias_rh(capsys):
    code, out, _ = run_cli(capsys, "rh", "--counts", "8,4,5,7", "--alpha", "0.05", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["tests"] == 2160
    assert report["interval_scaled"] == [-3, 13]


def test_missing_file_roundtrip(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("z,y\n1,1\n1,0\n0,1\n0,0\n")
    code, out, _ = run_cli(capsys, "missing", "--file", str(path), "--alpha", "0.2", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["plus_counts"] == report["minus_counts"] == [1, 1, 1, 1]
    # no missing cells: identical to the complete-data run
    code, out, _ = run_cli(capsys, "exact", "--counts", "1,1,1,1", "--alpha", "0.2", "--format", "json")
    assert json.loads(out)["interval_scaled"] == report["interval_scaled"]


def test_missing_file_errors(tmp_path, capsys):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("treat,outcome\n1,1\n")
    assert main(["missing", "--file", str(bad_header)]) == 2
    capsys.readouterr()
    bad_row = tmp_path / "r.csv"
    bad_row.write_text("z,y\n1,maybe\n0,1\n")
    assert main(["missing", "--file", str(bad_row)]) == 2
    capsys.readouterr()
    missing_file = tmp_path / "nope.csv"
    assert main(["missing", "--file", str(missing_file)]) == 1
    capsys.readouterr()


def test_missing_pad_odd(tmp_path, capsys):
    path = tmp_path / "odd.csv"
    path.write_text("z,y\n1,1\n1,0\n0,1\n")
    code, out, _ = run_cli(capsys, "missing", "--file", str(path), "--pad-odd", "--format", "json")
    assert code == 0
    assert json.loads(out)["method"] == "bracketed-balanced"


def test_read_subject_file_na(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("z,y\n1,NA\n0,1\n")
    data = read_subject_file(str(path))
    assert data.records[0].y is None and data.records[1].y == 1


def test_validate_smoke(capsys):
    code, out, _ = run_cli(capsys, "validate", "--suite", "smoke")
    assert code == 0
    assert "PASS reference-rows" in out
    assert "FAIL" not in out


def test_bench_table1(capsys):
    code, out, _ = run_cli(capsys, "bench", "--table1")
    assert code == 0
    assert out.count("OK") == 3


def test_bench_requires_a_mode(capsys):
    assert main(["bench"]) == 2
    capsys.readouterr()
