"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 a requested guarantee does not hold,
3 a numerical routine failed (non-convergence, divergence).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .equilibrium import solve_equilibrium
from .errors import (ConfigurationError, DomainError, ImpulsiveNetError, LambdaUndefinedError,
                     ValidationError)
from .hypotheses import check_hypotheses
from .integrator import StepControl, simulate
from .io import atomic_write, dumps, load_document, rows_csv, trajectory_csv
from .model import validate
from .periodic import find_periodic, poincare_check
from .stability import decay_exponent, verify_decay, verify_lambda_inequality

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3

BUNDLES = {
    "existence": ("existence_unique",),
    "stability": ("existence_unique", "lambda_valid", "global_stability"),
    "periodic": ("existence_unique", "periodic_exists"),
    "equilibrium": ("equilibrium_unique",),
    "all": ("existence_unique", "lambda_valid", "global_stability", "periodic_exists",
            "equilibrium_unique"),
}


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _emit(data, out=None):
    text = dumps(data)
    if out:
        atomic_write(out, text)
    sys.stdout.write(text)


def _summary(data):
    sys.stdout.write(dumps(data))


def _load(args):
    doc = load_document(args.document)
    report = validate(doc.spec, doc.ts, doc.imp, doc.box)
    if not report.ok:
        code, msg = report.issues[0]
        raise _Fail(EXIT_INPUT, f"{code}: {msg}")
    return doc


def _ctl(doc, args):
    step = args.step if args.step is not None else doc.run["step"]
    return StepControl.for_time(doc.ts, base_step=step, method=doc.run["method"])


def _trajectory(doc, args):
    if "x0" not in doc.run:
        raise _Fail(EXIT_INPUT, "/run/x0: initial state is required")
    t_end = args.t_end if args.t_end is not None else doc.run["t_end"]
    return simulate(doc.spec, doc.ts, doc.imp, doc.run["t0"], np.asarray(doc.run["x0"], float),
                    t_end, _ctl(doc, args))


def cmd_check(args):
    doc = _load(args)
    x_star = None
    report = check_hypotheses(doc.spec, doc.ts, doc.imp, box=doc.box)
    if report.flags["equilibrium_unique"]:
        x_star = solve_equilibrium(doc.spec).x_star
        report = check_hypotheses(doc.spec, doc.ts, doc.imp, x_star=x_star, box=doc.box)
    out = report.to_dict()
    out["require"] = args.require
    passed = all(report.flags[f] for f in BUNDLES[args.require])
    out["passed"] = passed
    if x_star is not None:
        out["x_star"] = x_star.tolist()
    _emit(out, args.out)
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def cmd_equilibrium(args):
    doc = _load(args)
    tol = args.tol if args.tol is not None else 1e-12
    res = solve_equilibrium(doc.spec, tol=tol, imp=doc.imp)
    _emit(res.to_dict(), args.out)
    return EXIT_OK


def cmd_simulate(args):
    doc = _load(args)
    traj = _trajectory(doc, args)
    csv_text = trajectory_csv(traj)
    if args.out:
        atomic_write(args.out, csv_text)
        _summary({
            "samples": len(traj), "t0": float(traj.times[0]), "t_end": traj.t_end,
            "impulses": [p[0] for p in traj.impulse_pairs()],
            "final": traj.final.tolist(), "out": str(args.out),
        })
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_periodic(args):
    doc = _load(args)
    tol = args.tol if args.tol is not None else doc.run["tol"]
    grid = args.grid if args.grid is not None else doc.run["grid"]
    res = find_periodic(doc.spec, doc.ts, doc.imp, h_grid=grid, tol=tol, box=doc.box)
    ok, defect = poincare_check(res.phi_star, doc.ts.omega)
    summary = res.to_dict()
    summary["poincare_ok"] = ok
    summary["phi_star_0"] = res.phi_star.values[0].tolist()
    if args.out:
        atomic_write(args.out, rows_csv(res.phi_star.export_rows(), doc.spec.m))
        summary["out"] = str(args.out)
    _summary(summary)
    return EXIT_OK


def cmd_stability(args):
    doc = _load(args)
    which = args.reference or doc.run["reference"]
    report = check_hypotheses(doc.spec, doc.ts, doc.imp, box=doc.box)
    dc = report.constants
    if dc.lambda_ is None:
        raise _Fail(EXIT_HYPOTHESIS, "lambda-undefined: H4 fails, no decay exponent")
    if which == "periodic":
        tol = args.tol if args.tol is not None else doc.run["tol"]
        grid = args.grid if args.grid is not None else doc.run["grid"]
        reference = find_periodic(doc.spec, doc.ts, doc.imp, h_grid=grid, tol=tol, box=doc.box).phi_star
    else:
        reference = solve_equilibrium(doc.spec).x_star
    traj = _trajectory(doc, args)
    slack = args.slack if args.slack is not None else doc.run["slack"]
    rep = verify_decay(traj, reference, dc, doc.ts, slack=slack)
    lam = verify_lambda_inequality(traj, reference, dc, doc.ts)
    out = rep.to_dict()
    out["reference"] = which
    out["lambda"] = dc.lambda_
    out["lambda_violations"] = [list(v) for v in lam]
    out["lambda_checked"] = lam.checked
    out["lambda_skipped"] = lam.skipped
    out["hypotheses"] = {k: v for k, v in report.flags.items() if v is not None}
    if which == "equilibrium":
        out["x_star"] = np.asarray(reference).tolist()
    _emit(out, args.out)
    return EXIT_OK if not rep.bound_violations and not lam else EXIT_HYPOTHESIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impulsive-rnn",
                                     description="Impulsive recurrent networks with piecewise constant argument.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("document", help="bundled example name or path to a JSON model document")
        p.add_argument("--out", help="output file (written atomically)")
        p.set_defaults(func=func)
        return p

    p = add("check", cmd_check, "evaluate hypotheses and derived constants")
    p.add_argument("--require", choices=sorted(BUNDLES), default="existence")
    p = add("equilibrium", cmd_equilibrium, "solve for the equilibrium")
    p.add_argument("--tol", type=float)
    p = add("simulate", cmd_simulate, "integrate and write a CSV trajectory")
    p.add_argument("--t-end", type=float)
    p.add_argument("--step", type=float)
    p = add("periodic", cmd_periodic, "compute the omega-periodic solution")
    p.add_argument("--tol", type=float)
    p.add_argument("--grid", type=float)
    p = add("stability", cmd_stability, "check the decay bound along a simulated trajectory")
    p.add_argument("--reference", choices=["equilibrium", "periodic"])
    p.add_argument("--t-end", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid", type=float)
    p.add_argument("--slack", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except LambdaUndefinedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ValidationError, ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ImpulsiveNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
