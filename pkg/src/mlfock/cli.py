"""Command-line front end: every computation as a subcommand with JSON/CSV output.

Exit codes: 0 success, 2 validation or domain error, 3 convergence failure
(the partial result is still written), 1 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import operators, space, specfun, thermal
from .errors import ConvergenceError, MLFockError
from .specfun import EvalControl

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3

# below this order the spectrum flattens so much that Z needs astronomically
# many terms; refuse instead of running into max_terms
MIN_CLI_Q = 0.05
DEFAULT_MAX_TERMS = 4096
# thermal output lists at most this many probabilities unless --n says otherwise
DEFAULT_LISTED_PROBS = 10_000


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# rendering


def _clean(obj):
    """Make a result JSON-ready: numpy scalars to Python, non-finite to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def render_json(result: dict) -> str:
    # floats use repr, the shortest string that round-trips
    return json.dumps(_clean(result), indent=2, allow_nan=False) + "\n"


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def render_csv(result: dict, table: tuple[list[str], list[list]] | None) -> str:
    """Columns for tabular results, otherwise ``key,value`` rows of the flattened record."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if table is not None:
        header, rows = table
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in _clean(row)])
    else:
        w.writerow(["key", "value"])
        for k, v in _flatten(_clean(result)):
            w.writerow([k, _cell(v)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing


def _complex_arg(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected RE or RE,IM, got {text!r}")


def _env_max_terms() -> int:
    raw = os.environ.get("MLFOCK_MAX_TERMS")
    if raw is None:
        return DEFAULT_MAX_TERMS
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MLFOCK_MAX_TERMS must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-12, help="relative tolerance")
    common.add_argument(
        "--max-terms", type=int, default=None,
        help=f"term cap (default {DEFAULT_MAX_TERMS}, or $MLFOCK_MAX_TERMS)",
    )
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write here instead of stdout")

    def q_flag(p, required=True):
        p.add_argument("--q", type=float, required=required, help="order q > 0")

    parser = argparse.ArgumentParser(
        prog="mlfock", description="Mittag-Leffler Fock space computations."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("levels", parents=[common], help="level spectrum n_q, n = 0..N")
    q_flag(p)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("mlf", parents=[common], help="Mittag-Leffler function E_q(z)")
    q_flag(p)
    p.add_argument("--z", type=_complex_arg, required=True, help="RE,IM")

    p = sub.add_parser("kernel", parents=[common], help="reproducing kernel K_q(z, w)")
    q_flag(p)
    p.add_argument("--z", type=_complex_arg, required=True)
    p.add_argument("--w", type=_complex_arg, required=True)

    p = sub.add_parser("inner", parents=[common], help="scalar product of two state files")
    q_flag(p, required=False)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)

    p = sub.add_parser("apply", parents=[common], help="apply a ladder operator to a state file")
    q_flag(p, required=False)
    p.add_argument("--op", choices=("a", "adag", "n"), required=True)
    p.add_argument("--f", required=True)

    p = sub.add_parser("matrix", parents=[common], help="operator matrix in the psi_n basis")
    q_flag(p)
    p.add_argument("--kind", required=True, help="a | adag | n (or the long names)")
    p.add_argument("--n", type=int, required=True)

    for name, text in (("partition", "partition function Z(s, q)"),
                       ("thermal", "thermal state and observables"),
                       ("report", "convergence diagnostics")):
        p = sub.add_parser(name, parents=[common], help=text)
        q_flag(p)
        p.add_argument("--s", type=float, required=True, help="inverse temperature s > 0")
        if name == "thermal":
            p.add_argument("--n", type=int, default=None,
                           help="probabilities to list; also the abscissa probe (default 200)")
        if name == "report":
            p.add_argument("--n", type=int, default=200, help="abscissa probe size")

    p = sub.add_parser("abscissa", parents=[common], help="sigma_n = ln n / n_q profile")
    q_flag(p)
    p.add_argument("--n", type=int, required=True)

    sub.add_parser("selftest", parents=[common], help="q = 1 closed-form checks")
    return parser


def _validate(args) -> EvalControl:
    """Check every argument before any computation starts."""
    q = getattr(args, "q", None)
    if q is not None:
        if not (q > 0 and math.isfinite(q)):
            raise UsageError(f"--q must be positive and finite, got {q}")
        if q < MIN_CLI_Q:
            raise UsageError(
                f"--q {q} is below {MIN_CLI_Q}: for tiny orders the levels grow so slowly "
                "that thermal sums need far more terms than a desk run allows"
            )
    s = getattr(args, "s", None)
    if s is not None and not (s > 0 and math.isfinite(s)):
        raise UsageError(f"--s must be positive and finite, got {s}")
    n = getattr(args, "n", None)
    if n is not None:
        lo = {"levels": 0, "abscissa": 2, "report": 2, "matrix": 1, "thermal": 2}[args.command]
        if n < lo:
            raise UsageError(f"--n must be >= {lo} for {args.command}, got {n}")
    if not (0 < args.tol < 1):
        raise UsageError(f"--tol must lie in (0, 1), got {args.tol}")
    max_terms = args.max_terms if args.max_terms is not None else _env_max_terms()
    if max_terms < 16:
        raise UsageError(f"--max-terms must be >= 16, got {max_terms}")
    if getattr(args, "kind", None) is not None:
        operators.parse_kind(args.kind)
    return EvalControl(rel_tol=args.tol, max_terms=max_terms)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, result dict, optional csv table)


def _load_state(path: str, q: float | None) -> space.MLState:
    try:
        with open(path) as fh:
            state = space.MLState.from_json(fh.read())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from None
    if q is not None and state.q != q:
        raise UsageError(f"state file {path} has q={state.q}, but --q {q} was given")
    return state


def cmd_levels(args, ctl):
    spec = specfun.level_spectrum(args.q, args.n)
    result = {"q": spec.q, "N": spec.N, "valid": spec.valid, "levels": spec.levels.tolist()}
    table = (["n", "level"], [[i, v] for i, v in enumerate(spec.levels.tolist())])
    return EXIT_OK, result, table


def cmd_mlf(args, ctl):
    try:
        value = specfun.mittag_leffler(args.q, args.z, ctl)
    except ConvergenceError as exc:
        return EXIT_NOT_CONVERGED, {
            "q": args.q, "z": args.z, "value": None,
            "error": _error_record(exc), "partial": exc.partial, "terms": exc.terms,
        }, None
    return EXIT_OK, {"q": args.q, "z": args.z, "value": complex(value)}, None


def cmd_kernel(args, ctl):
    try:
        value = space.kernel(args.q, args.z, args.w, ctl)
    except ConvergenceError as exc:
        return EXIT_NOT_CONVERGED, {
            "q": args.q, "z": args.z, "w": args.w, "value": None,
            "error": _error_record(exc), "partial": exc.partial, "terms": exc.terms,
        }, None
    return EXIT_OK, {"q": args.q, "z": args.z, "w": args.w, "value": complex(value)}, None


def cmd_inner(args, ctl):
    f = _load_state(args.f, args.q)
    g = _load_state(args.g, args.q)
    return EXIT_OK, {"q": f.q, "value": complex(space.inner(f, g))}, None


def cmd_apply(args, ctl):
    f = _load_state(args.f, args.q)
    op = {"a": operators.annihilate, "adag": operators.create, "n": operators.number_apply}
    out = op[args.op](f)
    table = (["n", "re", "im"], [[i, c.real, c.imag] for i, c in enumerate(out.coeffs.tolist())])
    return EXIT_OK, out.to_dict(), table


def cmd_matrix(args, ctl):
    m = operators.matrix(args.q, args.kind, args.n)
    rows = [[i, j, float(m.entries[i, j])] for i in range(m.dim) for j in range(m.dim)]
    return EXIT_OK, m.to_dict(), (["row", "col", "value"], rows)


def cmd_partition(args, ctl):
    spec = thermal.ThermalSpec(args.q, args.s, ctl)
    res = thermal.partition(spec)
    result = {"q": spec.q, "s": spec.s, **asdict(res)}
    return (EXIT_OK if res.converged else EXIT_NOT_CONVERGED), result, None


def cmd_thermal(args, ctl):
    spec = thermal.ThermalSpec(args.q, args.s, ctl)
    res = thermal.partition(spec)
    probe = args.n if args.n is not None else 200
    result = {
        "q": spec.q, "s": spec.s, "Z": res.Z, "terms_used": res.terms_used,
        "tail_estimate": res.tail_estimate, "converged": res.converged,
    }
    if not res.converged:
        result.update(probs=None, mean_occupation=None, mean_level=None, entropy=None,
                      abscissa_tail_max=thermal.abscissa_tail_max(spec.q, probe))
        return EXIT_NOT_CONVERGED, result, None
    state = thermal.thermal_state(spec)
    mom = state.moments()
    listed = min(state.terms_used, args.n if args.n is not None else DEFAULT_LISTED_PROBS)
    probs = thermal._probabilities(state.q, state.s, listed, state.Z).tolist()
    result.update(
        tail_mass_bound=state.tail_mass_bound,
        probs=probs,
        mean_occupation=mom.mean_occupation,
        mean_level=mom.mean_level,
        entropy=mom.entropy,
        abscissa_tail_max=thermal.abscissa_tail_max(spec.q, probe),
    )
    return EXIT_OK, result, None


def cmd_abscissa(args, ctl):
    prof = thermal.abscissa_profile(args.q, args.n).tolist()
    result = {
        "q": args.q, "N": args.n, "n": list(range(2, args.n + 1)), "sigma": prof,
        "tail_max": thermal.abscissa_tail_max(args.q, args.n),
    }
    table = (["n", "sigma"], [[i + 2, v] for i, v in enumerate(prof)])
    return EXIT_OK, result, table


def cmd_report(args, ctl):
    spec = thermal.ThermalSpec(args.q, args.s, ctl)
    rep = thermal.convergence_report(spec, n_probe=args.n)
    code = EXIT_OK if rep.partition.converged else EXIT_NOT_CONVERGED
    return code, rep.to_dict(), None


def _check(name, error, tol):
    return {"name": name, "error": error, "tol": tol, "passed": bool(error <= tol)}


def selftest_checks() -> list[dict]:
    """Closed forms at q = 1, where the space is the classical Fock space."""
    checks = []
    lv = specfun.level_spectrum(1.0, 64).levels
    checks.append(_check("levels equal n", float(np.max(np.abs(lv - np.arange(65)))), 1e-10))

    gram = max(
        abs(space.inner(space.basis_state(1.0, m), space.basis_state(1.0, n)) - (m == n))
        for m in range(16) for n in range(16)
    )
    checks.append(_check("basis orthonormal", gram, 1e-12))

    eig = max(
        space.norm(operators.number_apply(space.basis_state(1.0, n)) - n * space.basis_state(1.0, n))
        for n in range(16)
    )
    checks.append(_check("number operator eigenvalues", eig, 1e-12))

    err = float(np.max(np.abs(operators.matrix(1.0, "a", 16).entries
                              - operators.classical_matrix("a", 16))))
    checks.append(_check("annihilator matrix is sqrt(n)", err, 1e-12))
    checks.append(_check("adjointness", operators.adjoint_defect(1.0, 16, trials=20), 1e-11))

    zs = [0.5, -3.0, 2 + 1j, -1.5 - 2.5j, 4.0]
    err = max(abs(specfun.mittag_leffler(1.0, z) - np.exp(z)) / abs(np.exp(z)) for z in zs)
    checks.append(_check("E_1 equals exp", float(err), 1e-10))
    pairs = [(1 + 1j, 0.5 - 0.2j), (0.3 + 0.1j, 1.2 + 0.7j)]
    err = max(
        abs(space.kernel(1.0, z, w) - np.exp(np.conj(z) * w)) / abs(np.exp(np.conj(z) * w))
        for z, w in pairs
    )
    checks.append(_check("kernel equals exp(conj(z) w)", float(err), 1e-10))

    worst_z = worst_occ = 0.0
    for s in (0.25, 0.5, 1.0, 2.0, 4.0):
        spec = thermal.ThermalSpec(1.0, s)
        Z = thermal.partition(spec).Z
        exact = 1.0 / -math.expm1(-s)
        worst_z = max(worst_z, abs(Z - exact) / exact)
        worst_occ = max(worst_occ, abs(thermal.mean_occupation(spec) - 1.0 / math.expm1(s)))
    checks.append(_check("Z = 1 / (1 - exp(-s))", worst_z, 1e-10))
    checks.append(_check("mean occupation = 1 / (exp(s) - 1)", worst_occ, 1e-10))
    return checks


def cmd_selftest(args, ctl):
    checks = selftest_checks()
    ok = all(c["passed"] for c in checks)
    result = {"passed": ok, "checks": checks}
    table = (["name", "error", "tol", "passed"],
             [[c["name"], c["error"], c["tol"], c["passed"]] for c in checks])
    return (EXIT_OK if ok else EXIT_FAIL), result, table


COMMANDS = {
    "levels": cmd_levels, "mlf": cmd_mlf, "kernel": cmd_kernel, "inner": cmd_inner,
    "apply": cmd_apply, "matrix": cmd_matrix, "partition": cmd_partition,
    "thermal": cmd_thermal, "abscissa": cmd_abscissa, "report": cmd_report,
    "selftest": cmd_selftest,
}


def _error_record(exc: Exception) -> dict:
    rec = {"type": type(exc).__name__, "message": str(exc)}
    index = getattr(exc, "index", None)
    if index is not None:
        rec["index"] = index
    return rec


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 with usage on bad flags
    try:
        ctl = _validate(args)
    except (UsageError, MLFockError) as exc:
        parser.error(str(exc))
    try:
        code, result, table = COMMANDS[args.command](args, ctl)
    except UsageError as exc:
        parser.error(str(exc))
    except MLFockError as exc:
        # domain problems (slit points, overflow, mismatched spaces) as data
        _emit(render_json({"error": _error_record(exc)}), args.output)
        return EXIT_INVALID
    text = render_csv(result, table) if args.format == "csv" else render_json(result)
    _emit(text, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
