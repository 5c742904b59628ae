import math

import pytest

from patmoments.cli import fmt, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fmt():
    assert fmt(None) == "NA"
    assert fmt(3) == "3"
    assert fmt(-math.inf) == "-inf"
    assert fmt(1 / 3) == "0.333333333333"


def test_moments_table(capsys):
    code, out, _ = run(capsys, "moments", "--pattern", "GCTGGT", "--pattern", "GCTGGTGG", "--len", "20000")
    assert code == 0
    lines = out.splitlines()
    assert lines[1].split()[:6] == ["pattern", "L", "expectation", "std_dev", "skewness", "excess_kurtosis"]
    assert lines[2].split()[:2] == ["GCTGGT", "9"]
    assert lines[3].split()[:2] == ["GCTGGTGG", "11"]


def test_moments_tsv_is_stable(capsys):
    args = ("moments", "--pattern", "AGAGAG", "--len", "5000", "--format", "tsv", "-k", "3")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    strip = lambda text: [line.rsplit("\t", 1)[0] for line in text.splitlines()]  # noqa: E731
    assert strip(first) == strip(second)
    header = first.splitlines()[1]
    assert header == "#pattern\tL\texpectation\tstd_dev\tskewness\talgorithm\ttime_s"


def test_moments_partial_with_pivot(capsys):
    code, out, _ = run(capsys, "moments", "--pattern", "GCTGGT", "--len", "20000",
                       "--algorithm", "partial", "--alpha", "300", "--format", "tsv")
    assert code == 0 and "\tpartial\t" in out


def test_stability_scan(capsys):
    code, out, _ = run(capsys, "stability-scan", "--pattern", "GCTGGT", "--K", "2", "--imax", "40")
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines() if not line.startswith("#")]
    assert len(rows) == 3 * 2 * 40
    assert {r[3] for r in rows} == {"diff", "matrix", "combined"}
    assert any(r[2] == "-inf" for r in rows if r[3] == "combined")


def test_approx_gaussian_and_poisson(capsys):
    code, out, _ = run(capsys, "approx", "--pattern", "GCTGGT", "--len", "20000",
                       "--family", "gaussian", "--orders", "0,3", "--range", "10:20")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "#n\texact\tapprox_0\tapprox_3\tlog10_relerr_0\tlog10_relerr_3"
    assert len(lines) == 2 + 11
    code, out, _ = run(capsys, "approx", "--pattern", "GCTGGT", "--len", "20000",
                       "--family", "poisson", "--orders", "2", "--no-exact", "--range", "0:3")
    assert code == 0 and out.splitlines()[1] == "#n\tapprox_2"


def test_dfa_dump_matches_state_count(capsys):
    code, out, _ = run(capsys, "dfa", "--pattern", "GCTGGT", "--model", "ecoli")
    assert code == 0
    assert out.splitlines()[-1] == "# Q' size=9"
    assert out.startswith("# alphabet=ACGT order=1")


def test_pmf(capsys):
    code, out, _ = run(capsys, "pmf", "--pattern", "AGAGAG", "--len", "3000")
    rows = [line.split("\t") for line in out.splitlines() if not line.startswith("#")]
    assert code == 0
    assert sum(float(p) for _, p in rows) == pytest.approx(1.0, abs=1e-10)


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--pattern", "GCTGGT", "--len", "2000", "--reps", "50", "--seed", "4")
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()[2:]] == [
        "mean", "variance", "skewness", "excess_kurtosis",
    ]


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.tsv"
    code, out, _ = run(capsys, "-o", str(target), "dfa", "--pattern", "AB", "--alphabet", "AB")
    assert code == 0 and out == ""
    assert "# Q' size=3" in target.read_text()


@pytest.mark.parametrize(
    "argv,needle",
    [
        (("moments", "--pattern", "GXT"), "unknown character"),
        (("moments", "--pattern", "GCTGGT", "--model", "/nonexistent.mm"), "not found"),
        (("approx", "--pattern", "GCTGGT", "--family", "poisson", "--range", "5"), "LO:HI"),
    ],
)
def test_errors_exit_with_code_two(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("patmoments: error:") and needle in err


def test_heterogeneous_model_rejects_power(capsys, tmp_path):
    path = tmp_path / "h.mm"
    path.write_text("alphabet: AB\norder: 0\npi[1..5]:\n0.5 0.5\npi[6..10]:\n0.4 0.6\n")
    code, _, err = run(capsys, "moments", "--pattern", "AB", "--model", str(path), "--len", "10",
                       "--algorithm", "power")
    assert code == 2 and "power requires homogeneous model" in err
    code, out, _ = run(capsys, "moments", "--pattern", "AB", "--model", str(path), "--len", "10")
    assert code == 0 and "full" in out


def test_warnings_are_prefixed(capsys):
    code, _, err = run(capsys, "moments", "--pattern", "GNNGNNGG", "--len", "20000",
                       "--algorithm", "partial", "--alpha", "40")
    assert code == 0
    assert "patmoments: warning:" in err
