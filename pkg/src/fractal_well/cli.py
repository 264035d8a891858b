"""Command-line front end.

Exit status: 0 when everything ran and every gated check passed, 1 on a
gated failure (or aborted suite), 2 on usage errors.  Results go to stdout
as CSV unless an output directory is given (``--output-dir`` or the
``FRACTAL_WELL_OUTPUT`` environment variable).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import experiments as ex
from . import suite
from .fractal_dim import DeltaLadder
from .phase import parse_angle
from .quantum_state import StateParams, Variant, eval_psi, spectrum

OUTPUT_ENV = "FRACTAL_WELL_OUTPUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _angle(text: str):
    try:
        return parse_angle(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err))


def _state_args(p: argparse.ArgumentParser, M_default: Optional[int] = None) -> None:
    p.add_argument("--q", type=int, default=2, help="integer base (default 2)")
    p.add_argument("--s", type=float, default=1.5, help="dimension parameter in (0, 2) (default 1.5)")
    p.add_argument("--M", type=int, default=M_default,
                   help="truncation order (default: ladder n_max + 4)")


def _ladder_args(p: argparse.ArgumentParser, n_min: Optional[int], n_max: Optional[int]) -> None:
    p.add_argument("--n-min", type=int, default=n_min, help="finest-scale ladder exponent start")
    p.add_argument("--n-max", type=int, default=n_max, help="ladder exponent end")
    p.add_argument("--intervals", type=int, default=ex.DEFAULT_INTERVALS,
                   help="grid intervals per section (default 2**20)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fractal-well", description=__doc__.splitlines()[0])
    parser.add_argument("--output-dir", default=os.environ.get(OUTPUT_ENV),
                        help=f"write summary.csv and detail records here (env {OUTPUT_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate the state and density at one point")
    _state_args(p, M_default=10)
    p.add_argument("--x", type=_angle, default=_angle("1/2pi"), help='position, e.g. "1/3pi" or 0.7')
    p.add_argument("--t", type=_angle, default=0.0, help="time, same syntax as --x")

    p = sub.add_parser("spectrum", help="Bohr frequencies of the density")
    _state_args(p, M_default=3)

    p = sub.add_parser("dim-space", help="dimension of x -> P(x, t)")
    _state_args(p)
    p.add_argument("--t", type=_angle, default=0.0)
    _ladder_args(p, None, None)
    p.add_argument("--tolerance", type=float, default=0.1)

    p = sub.add_parser("dim-time", help="dimension of t -> P(x, t) over one period")
    _state_args(p)
    p.add_argument("--x", type=_angle, default=_angle("1/3pi"))
    _ladder_args(p, None, None)
    p.add_argument("--tolerance", type=float, default=0.1)

    p = sub.add_parser("dim-velocity", help="dimension of the mean velocity")
    _state_args(p)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=None,
                   help="perturbed state instead of the lacunary one")
    p.add_argument("--sign", type=int, choices=(-1, 1), default=1, help="phi0 mode shift")
    p.add_argument("--seed", type=int, default=None, help="phi0 per-term random signs")
    _ladder_args(p, None, None)
    p.add_argument("--tolerance", type=float, default=None)

    p = sub.add_parser("dim-surface", help="surface dimension from sections")
    _state_args(p)
    p.add_argument("--sections", type=int, default=8)
    _ladder_args(p, None, None)
    p.add_argument("--tolerance", type=float, default=0.12)

    p = sub.add_parser("calibrate", help="Weierstrass calibration corpus")
    p.add_argument("--intervals", type=int, default=ex.DEFAULT_INTERVALS)
    p.add_argument("--tolerance", type=float, default=0.05)

    p = sub.add_parser("suite", help="run the full experiment table from a config file")
    p.add_argument("config", help="YAML config path")
    return parser


def _params(args, *ladders: DeltaLadder) -> StateParams:
    M = args.M if args.M is not None else max(l.n_max for l in ladders) + 4
    return StateParams(args.q, args.s, M)


def _space_ladder(args) -> DeltaLadder:
    d = ex.space_ladder(args.q)
    return DeltaLadder(args.q, args.n_min if args.n_min is not None else d.n_min,
                       args.n_max if args.n_max is not None else d.n_max)


def _time_ladder(args) -> DeltaLadder:
    d = ex.time_ladder(args.q)
    return DeltaLadder(args.q**2, args.n_min if args.n_min is not None else d.n_min,
                       args.n_max if args.n_max is not None else d.n_max)


def _emit(reports, args) -> int:
    if args.output_dir:
        path = suite.write_reports(reports, args.output_dir)
        print(path)
    else:
        suite.write_csv(reports, sys.stdout)
    return 0 if suite.all_gated_passed(reports) else 1


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except suite.SuiteError as err:
        if args.output_dir and err.code != "calibration_failed":
            suite.write_error(err, args.output_dir)
        print(json.dumps(err.record(), sort_keys=True), file=sys.stderr)
        return 1 if err.code == "calibration_failed" else 2
    except (ValueError, OverflowError) as err:
        print(f"{parser.prog}: error: {err}", file=sys.stderr)
        return 2


def _run(args) -> int:
    cmd = args.command
    if cmd == "eval":
        p = StateParams(args.q, args.s, args.M)
        z = eval_psi(p, args.x, args.t)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["re", "im", "density"])
        w.writerow([repr(z.real), repr(z.imag), repr(z.real**2 + z.imag**2)])
        return 0
    if cmd == "spectrum":
        p = StateParams(args.q, args.s, args.M)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["c", "d", "omega"])
        for line in spectrum(p):
            w.writerow([line.c, line.d, line.omega])
        return 0
    if cmd == "dim-space":
        lad = _space_ladder(args)
        p = _params(args, lad)
        return _emit([ex.run_space_fractal(p, args.t, lad, args.intervals, args.tolerance)], args)
    if cmd == "dim-time":
        lad = _time_ladder(args)
        p = _params(args, lad)
        return _emit([ex.run_time_fractal(p, args.x, lad, args.intervals, args.tolerance)], args)
    if cmd == "dim-velocity":
        lad = _time_ladder(args)
        p = _params(args, lad)
        if args.variant:
            tol = args.tolerance if args.tolerance is not None else 0.12
            r = ex.run_variant_velocity(args.variant, p, lad, args.intervals, tol,
                                        sign=args.sign, seed=args.seed)
        else:
            tol = args.tolerance if args.tolerance is not None else 0.1
            r = ex.run_velocity_fractal(p, lad, args.intervals, tol)
        return _emit([r], args)
    if cmd == "dim-surface":
        lad = _space_ladder(args)
        tlad = ex.time_ladder(args.q)
        p = _params(args, lad, tlad)
        return _emit([ex.run_surface(p, args.sections, lad, tlad, args.intervals, args.tolerance)], args)
    if cmd == "calibrate":
        cfg = suite.DEFAULT_CONFIG["calibration"]
        lc = cfg["ladder"]
        lad = DeltaLadder(lc["base"], lc["n_min"], lc["n_max"])
        reports = [ex.run_calibration(ex.calibration_params(a, b, args.intervals), lad,
                                      args.intervals, args.tolerance)
                   for a, b in cfg["pairs"]]
        return _emit(reports, args)
    if cmd == "suite":
        overrides = {"output_dir": args.output_dir} if args.output_dir else {}
        cfg = suite.load_config(args.config, overrides)
        reports = suite.run_full_suite(cfg)
        if cfg.get("output_dir"):
            print(os.path.join(cfg["output_dir"], "summary.csv"))
        else:
            suite.write_csv(reports, sys.stdout, bool(cfg.get("record_timing")))
        return 0 if suite.all_gated_passed(reports) else 1
    raise AssertionError(cmd)  # argparse guarantees a known subcommand


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
