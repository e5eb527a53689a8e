"""Command-line front end.

Exit codes: 0 success, 1 a checked threshold was missed, 2 runtime failure
(partial output is still written), 64 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import systems
from .algebroid import validate_algebroid
from .definition import load_definition
from .dynamics import ConstrainedState, LagrangianSystem, simulate
from .errors import AlgebroidError, IntegrationError, InvalidInputError
from .integrate import IntegratorOptions, Trajectory, trajectory_compare
from .optimal_control import ExtremalState, extremal_lagrangian_residual, simulate_extremal
from .oracle import simulate_oracle

EXIT_OK, EXIT_THRESHOLD, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 64

VALIDATE_TOL = 1e-7
ORACLE_TOL = 1e-6
REDUCTION_TOL = 1e-6
CONSTANT_W_TOL = 1e-8
HAMILTONIAN_TOL = 1e-8
EXTREMAL_TOL = 1e-7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _box(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"box must look like lo:hi, got {text!r}") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("box needs lo < hi")
    return lo, hi


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _add_system(p, definition=True):
    p.add_argument("--system", help="catalog name (see list-systems)")
    if definition:
        p.add_argument("--definition", help="JSON system definition file (schema 1)")


def _add_run(p, t1=10.0):
    p.add_argument("--initial", type=_floats, help="comma-separated initial state")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=t1)
    p.add_argument("--method", choices=("rk4", "rk45"), default="rk45")
    p.add_argument("--step", type=float, help="fixed step (rk4) or initial step (rk45)")
    p.add_argument("--abs-tol", type=float, default=1e-10)
    p.add_argument("--rel-tol", type=float, default=1e-10)


def _add_output(p, default_format):
    p.add_argument("--output", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="algebroid-dynamics",
                     description="Constrained Lagrangian dynamics on Lie algebroids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list-systems", help="list catalog systems with their dimensions")

    p = sub.add_parser("validate", help="check the algebroid axioms on seeded samples")
    _add_system(p)
    p.add_argument("--box", type=_box)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, "json")

    p = sub.add_parser("simulate", help="integrate the constrained equations of motion")
    _add_system(p)
    _add_run(p)
    _add_output(p, "csv")

    p = sub.add_parser("compare-oracle", help="compare against the multiplier formulation")
    _add_system(p, definition=False)
    _add_run(p, t1=5.0)
    _add_output(p, "json")

    p = sub.add_parser("reduce-compare", help="compare the full and reduced rolling disk")
    _add_run(p, t1=5.0)
    _add_output(p, "json")

    p = sub.add_parser("pmp-check", help="integrate a normal extremal and test the Lagrangian identity")
    _add_system(p)
    _add_run(p)
    _add_output(p, "json")
    return parser


def _options(args) -> IntegratorOptions:
    if not args.t1 > args.t0:
        raise UsageError("--t1 must exceed --t0")
    if args.method == "rk4" and args.step is None:
        raise UsageError("--method rk4 needs --step")
    try:
        return IntegratorOptions(args.method, step=args.step, abs_tol=args.abs_tol, rel_tol=args.rel_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _resolve(args):
    """Catalog entry or parsed definition named by ``--system``/``--definition``."""
    system = getattr(args, "system", None)
    definition = getattr(args, "definition", None)
    if (system is None) == (definition is None):
        raise UsageError("give exactly one of --system or --definition")
    if system is not None:
        if system not in systems.names():
            raise UsageError(f"unknown system {system!r}; known: {', '.join(systems.names())}")
        return systems.build(system)
    try:
        return load_definition(definition)
    except OSError as exc:
        raise UsageError(f"cannot read definition: {exc}") from None
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None


def _lagrangian_system(obj) -> LagrangianSystem:
    if isinstance(obj, systems.CatalogEntry):
        return obj.system
    try:
        return obj.system()
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None


def _initial(S: LagrangianSystem, values) -> ConstrainedState:
    if values is None:
        if S.initial is None:
            raise UsageError("system has no recommended initial state; pass --initial")
        return S.initial
    if values.size != S.n + S.k:
        raise UsageError(f"--initial needs n+k={S.n + S.k} numbers (x then w), got {values.size}")
    return S.state(values[:S.n], values[S.n:])


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            yield fh


def _emit_json(args, report: dict):
    with _sink(args.output) as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v: float) -> str:
    return "%.17g" % v


def trajectory_csv(T: Trajectory, columns=("energy", "ff_residual")) -> str:
    """CSV text with header ``t,<layout>,<diagnostics>``, LF line endings."""
    buf = io.StringIO()
    names = ["t", *T.layout, *[c for c in columns if c in T.diagnostics]]
    buf.write(",".join(names) + "\n")
    for j, t in enumerate(T.times):
        row = [t, *T.states[j], *[T.diagnostics[c][j] for c in names[1 + len(T.layout):]]]
        buf.write(",".join(_fmt(float(v)) for v in row) + "\n")
    return buf.getvalue()


def trajectory_json(T: Trajectory) -> dict:
    return {"t": T.times.tolist(),
            "columns": list(T.layout),
            "states": T.states.tolist(),
            "diagnostics": {k: v.tolist() for k, v in T.diagnostics.items()}}


def _write_trajectory(args, T: Trajectory):
    with _sink(args.output) as fh:
        if args.format == "csv":
            fh.write(trajectory_csv(T))
        else:
            json.dump(trajectory_json(T), fh)
            fh.write("\n")


def cmd_list_systems(args) -> int:
    for name in systems.names():
        print(systems.build(name).summary())
    return EXIT_OK


def cmd_validate(args) -> int:
    obj = _resolve(args)
    A = obj.algebroid
    default_box = obj.system.box if isinstance(obj, systems.CatalogEntry) else obj.box
    box = args.box or default_box
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    rep = validate_algebroid(A, box, args.samples, args.seed)
    out = rep.to_dict()
    out["system"] = obj.name
    out["threshold"] = VALIDATE_TOL
    out["failing"] = rep.failing(VALIDATE_TOL)
    out["passed"] = not out["failing"]
    _emit_json(args, out)
    return EXIT_OK if out["passed"] else EXIT_THRESHOLD


def cmd_simulate(args) -> int:
    S = _lagrangian_system(_resolve(args))
    s0 = _initial(S, args.initial)
    opts = _options(args)
    try:
        T = simulate(S, s0, (args.t0, args.t1), opts)
    except IntegrationError as exc:
        if exc.trajectory is not None and len(exc.trajectory):
            _write_trajectory(args, exc.trajectory)
        print(f"error: {exc} (last time {exc.last_time})", file=sys.stderr)
        return EXIT_RUNTIME
    _write_trajectory(args, T)
    return EXIT_OK


def cmd_compare_oracle(args) -> int:
    entry = _resolve(args)
    if entry.oracle is None:
        raise UsageError(f"{entry.name} has no multiplier companion; choose one of "
                         + ", ".join(n for n in systems.names() if systems.build(n).oracle is not None))
    S = entry.system
    s0 = _initial(S, args.initial)
    opts = _options(args)
    span = (args.t0, args.t1)
    n = S.n
    T = simulate(S, s0, span, opts, diagnostics=False)
    To = simulate_oracle(entry.oracle, s0.x, S.W.injection.value(s0.x) @ s0.w, span, opts)

    def lift(y):
        return np.concatenate([y[:n], S.W.injection.value(y[:n]) @ y[n:]])

    dev, at = trajectory_compare(T, To, lift, lambda y: y)
    report = {"system": entry.name, "max_dev": dev, "at_time": at, "threshold": ORACLE_TOL,
              "max_constraint_drift": float(np.max(To.diagnostics["constraint_drift"])),
              "passed": dev < ORACLE_TOL}
    _emit_json(args, report)
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


def reduce_compare(x0, w0, span, opts: IntegratorOptions) -> dict:
    """Full rolling disk mapped through the connection isomorphism against the reduced disk."""
    full, red = systems.build("rolling_disk_full"), systems.build("rolling_disk_reduced")
    Sf, Sr = full.system, red.system
    Tf = simulate(Sf, Sf.state(x0, w0), span, opts, diagnostics=False)
    Tr = simulate(Sr, Sr.state(x0[2:], w0), span, opts, diagnostics=False)

    def from_full(y):
        q = y[:4]
        base, fibre = systems.alpha_A(q, Sf.W.injection.value(q) @ y[4:])
        return np.concatenate([base, fibre])

    def from_reduced(y):
        return np.concatenate([y[:2], Sr.W.injection.value(y[:2]) @ y[2:]])

    dev, at = trajectory_compare(Tf, Tr, from_full, from_reduced)
    w_var = float(np.max(np.ptp(Tr.states[:, 2:], axis=0)))
    _, radius, circ_dev = systems.circle_fit(Tf.states[:, :2])
    expected = abs(w0[1] / w0[0]) if w0[0] != 0 else float("inf")
    return {"max_dev": dev, "at_time": at, "reduced_w_variation": w_var,
            "circle_radius": radius, "expected_radius": expected,
            "circle_radius_error": abs(radius - expected), "circle_fit_deviation": circ_dev}


def cmd_reduce_compare(args) -> int:
    vals = args.initial if args.initial is not None else np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0])
    if vals.size != 6:
        raise UsageError("--initial needs 6 numbers: x, y, theta, phi, thetadot, phidot")
    if vals[4] == 0:
        raise UsageError("thetadot must be nonzero for the circle check")
    report = reduce_compare(vals[:4], vals[4:], (args.t0, args.t1), _options(args))
    report["passed"] = bool(report["max_dev"] < REDUCTION_TOL and report["reduced_w_variation"] < CONSTANT_W_TOL
                            and report["circle_radius_error"] < REDUCTION_TOL)
    _emit_json(args, report)
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


def cmd_pmp_check(args) -> int:
    obj = _resolve(args)
    mech = obj.mechanical
    if mech is None:
        raise UsageError("system has no mechanical Lagrangian")
    A = obj.algebroid
    n = A.n
    if args.initial is None:
        init = obj.system.initial if isinstance(obj, systems.CatalogEntry) else obj.initial
        x0 = init.x if init is not None else np.zeros(n)
        vals = np.concatenate([x0, np.ones(n)])
    else:
        vals = args.initial
    if vals.size != 2 * n:
        raise UsageError(f"--initial needs 2n={2 * n} numbers (x then p), got {vals.size}")
    if n == 0:
        report = {"hamiltonian_drift": 0.0, "lagrangian_residual": 0.0, "degenerate_base": True,
                  "passed": True}
        _emit_json(args, report)
        return EXIT_OK
    T = simulate_extremal(A, mech, ExtremalState(vals[:n], vals[n:]), (args.t0, args.t1), _options(args))
    H = T.diagnostics["hamiltonian"]
    drift = float(np.max(np.abs(H - H[0])) / max(abs(H[0]), 1e-300))
    res = extremal_lagrangian_residual(A, mech, T)
    report = {"hamiltonian_drift": drift, "lagrangian_residual": res,
              "passed": bool(drift < HAMILTONIAN_TOL and res < EXTREMAL_TOL)}
    _emit_json(args, report)
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


_COMMANDS = {
    "list-systems": cmd_list_systems,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "compare-oracle": cmd_compare_oracle,
    "reduce-compare": cmd_reduce_compare,
    "pmp-check": cmd_pmp_check,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AlgebroidError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
