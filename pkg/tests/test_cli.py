import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from mlfock import MLState, basis_state, level
from mlfock.cli import main, render_json


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("MLFOCK_MAX_TERMS", None)
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "mlfock", *args], capture_output=True, text=True, env=full_env
    )


def run_json(*args, **kw):
    proc = run(*args, **kw)
    return proc.returncode, json.loads(proc.stdout)


def test_levels_example():
    code, out = run_json("levels", "--q", "2", "--n", "3")
    assert code == 0
    assert out["levels"] == pytest.approx([0, 2, 12, 30], rel=1e-14)
    assert out["valid"] is True


def test_partition_example():
    code, out = run_json("partition", "--q", "1", "--s", "1")
    assert code == 0
    assert out["converged"] is True
    assert out["Z"] == pytest.approx(1.5819767, rel=1e-7)
    assert list(out) == ["q", "s", "Z", "terms_used", "last_term", "tail_estimate", "converged"]


def test_selftest_passes():
    proc = run("selftest")
    assert proc.returncode == 0, proc.stdout
    out = json.loads(proc.stdout)
    assert out["passed"] and all(c["passed"] for c in out["checks"])


def test_mlf_and_kernel():
    code, out = run_json("mlf", "--q", "2", "--z", "1")
    assert code == 0 and out["value"]["re"] == pytest.approx(math.cosh(1), rel=1e-14)
    code, out = run_json("kernel", "--q", "1", "--z", "1,1", "--w", "0.5,-0.2")
    expected = complex(math.e ** 0.3 * math.cos(-0.7), math.e ** 0.3 * math.sin(-0.7))
    assert code == 0
    assert complex(out["value"]["re"], out["value"]["im"]) == pytest.approx(expected, rel=1e-13)


def test_slit_point_is_structured_error():
    code, out = run_json("kernel", "--q", "1", "--z=-1,0", "--w", "1")
    assert code == 2
    assert out["error"]["type"] == "DomainError"
    assert "slit" in out["error"]["message"]


def test_mlf_non_convergence_emits_partial():
    code, out = run_json("mlf", "--q", "0.3", "--z", "50", "--max-terms", "16")
    assert code == 3
    assert out["value"] is None
    assert out["terms"] == 16
    assert out["error"]["type"] == "ConvergenceError"


def test_partition_non_convergence_exit_code():
    code, out = run_json("partition", "--q", "0.3", "--s", "0.1")
    assert code == 3
    assert out["converged"] is False
    assert out["terms_used"] == 4096
    assert out["Z"] > 1


def test_max_terms_from_environment():
    code, out = run_json("partition", "--q", "0.5", "--s", "1", env={"MLFOCK_MAX_TERMS": "100000000"})
    assert code == 0 and out["converged"]
    code, out = run_json("partition", "--q", "0.5", "--s", "1", "--max-terms", "100",
                         env={"MLFOCK_MAX_TERMS": "100000000"})
    assert code == 3 and out["terms_used"] == 100


@pytest.mark.parametrize(
    "args",
    [
        ("levels", "--q", "0.01", "--n", "3"),
        ("levels", "--q", "-1", "--n", "3"),
        ("partition", "--q", "1", "--s", "0"),
        ("levels", "--q", "1"),
        ("bogus",),
        ("levels", "--q", "1", "--n", "3", "--frobnicate"),
        ("matrix", "--q", "1", "--kind", "x", "--n", "3"),
        ("mlf", "--q", "1", "--z", "1,2,3"),
        ("partition", "--q", "1", "--s", "1", "--tol", "2"),
    ],
)
def test_validation_errors(args):
    proc = run(*args)
    assert proc.returncode == 2
    assert proc.stdout == ""
    assert "usage" in proc.stderr


def test_small_q_message():
    proc = run("levels", "--q", "0.01", "--n", "3")
    assert "0.05" in proc.stderr


def test_apply_round_trip(tmp_path):
    q, n = 2.0, 3
    src = tmp_path / "psi.json"
    src.write_text(basis_state(q, n).to_json())
    up, down = tmp_path / "up.json", tmp_path / "down.json"
    assert run("apply", "--op", "adag", "--f", str(src), "--output", str(up)).returncode == 0
    assert run("apply", "--op", "a", "--f", str(up), "--output", str(down)).returncode == 0
    out = MLState.from_json(down.read_text())
    expected = level(q, n + 1) * basis_state(q, n)
    for a, b in zip(out.coeffs, expected.coeffs):
        assert abs(a - b) <= 1e-12 * max(abs(b), 1e-300) or a == b


def test_inner_from_files(tmp_path):
    f = tmp_path / "f.json"
    g = tmp_path / "g.json"
    f.write_text(MLState(1.0, [1, 1j]).to_json())
    g.write_text(MLState(1.0, [2, 1]).to_json())
    code, out = run_json("inner", "--f", str(f), "--g", str(g))
    assert code == 0
    assert complex(out["value"]["re"], out["value"]["im"]) == pytest.approx(2 - 1j)
    proc = run("inner", "--q", "2", "--f", str(f), "--g", str(g))
    assert proc.returncode == 2


def test_inner_mismatched_spaces(tmp_path):
    f = tmp_path / "f.json"
    g = tmp_path / "g.json"
    f.write_text(MLState(1.0, [1]).to_json())
    g.write_text(MLState(2.0, [1]).to_json())
    code, out = run_json("inner", "--f", str(f), "--g", str(g))
    assert code == 2 and out["error"]["type"] == "IncompatibleSpaceError"


def test_matrix_command():
    code, out = run_json("matrix", "--q", "2", "--kind", "a", "--n", "2")
    assert code == 0
    assert out["kind"] == "annihilation" and out["dim"] == 3
    assert out["entries"][0][1] == pytest.approx(math.sqrt(2))
    assert out["entries"][1][2] == pytest.approx(math.sqrt(12))


def test_thermal_command_fields():
    code, out = run_json("thermal", "--q", "2", "--s", "0.1")
    assert code == 0
    for key in ("q", "s", "Z", "terms_used", "tail_estimate", "converged", "probs",
                "mean_occupation", "mean_level", "entropy", "abscissa_tail_max"):
        assert key in out
    assert len(out["probs"]) == out["terms_used"]
    assert out["probs"][0] == pytest.approx(0.460080, abs=5e-7)


def test_abscissa_command():
    code, out = run_json("abscissa", "--q", "1", "--n", "1000")
    assert code == 0
    assert out["sigma"][-1] == pytest.approx(math.log(1000) / 1000, rel=1e-13)
    assert out["n"][0] == 2


def test_report_is_byte_identical():
    a = run("report", "--q", "2", "--s", "0.5")
    b = run("report", "--q", "2", "--s", "0.5")
    assert a.returncode == 0
    assert a.stdout == b.stdout


@pytest.mark.parametrize(
    "args",
    [
        ("levels", "--q", "0.7", "--n", "20"),
        ("partition", "--q", "1.5", "--s", "0.3"),
        ("abscissa", "--q", "0.5", "--n", "50"),
        ("matrix", "--q", "2", "--kind", "n", "--n", "4"),
    ],
)
def test_csv_matches_json(args):
    code, js = run_json(*args)
    proc = run(*args, "--format", "csv")
    assert proc.returncode == code
    rows = list(csv.reader(io.StringIO(proc.stdout)))
    json_numbers = sorted(_numbers(js))
    keep = [i for i, name in enumerate(rows[0]) if name not in ("n", "row", "col")]
    csv_numbers = sorted(float(row[i]) for row in rows[1:] for i in keep if _is_float(row[i]))
    # every value in the CSV appears bit-for-bit in the JSON
    assert set(csv_numbers) <= set(json_numbers)
    if args[0] in ("levels", "abscissa"):
        col = rows[0].index("level" if args[0] == "levels" else "sigma")
        values = [float(r[col]) for r in rows[1:]]
        assert values == (js["levels"] if args[0] == "levels" else js["sigma"])


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _numbers(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _numbers(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _numbers(v)
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        yield float(obj)


def test_render_json_handles_non_finite():
    text = render_json({"a": math.inf, "b": [math.nan, 1.0], "c": 1 + 2j})
    assert json.loads(text) == {"a": None, "b": [None, 1.0], "c": {"re": 1.0, "im": 2.0}}


def test_main_in_process(capsys):
    assert main(["levels", "--q", "1", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["levels"] == [0.0, 1.0, 2.0]
