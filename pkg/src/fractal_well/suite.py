"""Config-driven runs of the full experiment table and their persistence.

Config files are YAML.  Numbers used as points or times are plain reals;
strings such as ``"1/3"`` or ``"2/21pi"`` are exact rational multiples of
pi and take the exact phase-reduction path.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import yaml

from . import experiments as ex
from .fractal_dim import DeltaLadder
from .phase import Angle, PiRational, parse_angle
from .quantum_state import StateParams, Variant

log = logging.getLogger(__name__)

CSV_COLUMNS = ("theorem_item", "q", "s", "predicted", "estimated", "tolerance",
               "r_squared", "passed", "runtime_seconds", "label", "gated")

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 0,
    "output_dir": None,
    "record_timing": False,
    "n_intervals": 2**20,
    "ladders": {
        "space": {"n_min": 4, "n_max": 12},
        "time": {2: {"n_min": 2, "n_max": 6}, "default": {"n_min": 1, "n_max": 4}},
    },
    "calibration": {
        "pairs": [[0.5, 4], [0.7, 5], [0.6, 3]],
        "ladder": {"base": 2, "n_min": 4, "n_max": 12},
        "tolerance": 0.05,
    },
    "space": {"q": 2, "s": [0.5, 1.0, 1.5, 1.8], "t": "0", "tolerance": 0.1},
    "invariance": {"q": 2, "s": 1.5, "t": ["0", "2/21", 1.0], "tolerance": 0.1},
    "time": {
        "cases": [
            {"q": 2, "s": 1.0, "x": "1/3"},
            {"q": 2, "s": 1.5, "x": "1/3"},
            {"q": 3, "s": 1.2, "x": "1/2"},
        ],
        "tolerance": 0.1,
    },
    "smooth": {
        "cases": [{"q": 2, "s": 1.5, "k": 1, "m": 1}, {"q": 3, "s": 1.5, "k": 2, "m": 4}],
        "tolerance": 0.05,
    },
    "velocity": {"cases": [{"q": 2, "s": 1.5}, {"q": 3, "s": 1.5}], "tolerance": 0.1},
    "surface": {"q": 2, "s": 1.5, "n_sections": 8, "tolerance": 0.12},
    "variants": {
        "q": [2, 3],
        "s": 1.5,
        "which": ["phi1", "phi2", "phi3"],
        "phi0": {"enabled": True, "sign": 1},
        "tolerance": 0.12,
    },
}


class SuiteError(Exception):
    """Failed precondition; ``record()`` gives the machine-readable form."""

    def __init__(self, code: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra

    def record(self) -> dict:
        return {"error": self.code, "message": str(self), **self.extra}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: Optional[str | os.PathLike] = None, overrides: Optional[dict] = None) -> dict:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise SuiteError("bad_config", f"{path} does not hold a mapping")
    return _merge(_merge(DEFAULT_CONFIG, data), overrides or {})


def to_angle(value) -> Angle:
    """Config points: numbers are reals, strings are rationals of pi."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip()
    if "pi" in text.lower():
        return parse_angle(text)
    return PiRational(Fraction(text))


# --------------------------------------------------------------- planning

@dataclass
class Plan:
    """Validated list of zero-argument experiment thunks, in run order."""

    calibration: list
    quantum: list


def _ladder(entry: dict, base: float) -> DeltaLadder:
    return DeltaLadder(entry.get("base", base), int(entry["n_min"]), int(entry["n_max"]))


def _time_ladder(cfg: dict, q: int) -> DeltaLadder:
    table = cfg["ladders"]["time"]
    entry = table.get(q, table.get(str(q), table["default"]))
    return _ladder(entry, q * q)


def _space_ladder(cfg: dict, q: int) -> DeltaLadder:
    return _ladder(cfg["ladders"]["space"], q)


def _params(q, s, M, *ladders: DeltaLadder) -> StateParams:
    need = max(l.n_max for l in ladders) + 4
    try:
        p = StateParams(int(q), float(s), int(M) if M is not None else need)
    except ValueError as err:
        raise SuiteError("invalid_parameters", str(err), q=q, s=s, M=M) from None
    for l in ladders:
        try:
            ex.check_truncation(p, l)
        except ex.TruncationError as err:
            raise SuiteError("truncation_coupling", str(err), q=q, s=s, M=M) from None
    return p


def plan_suite(cfg: dict) -> Plan:
    """Validate everything up front and return the experiments to run."""
    n = int(cfg["n_intervals"])
    cal = cfg["calibration"]
    cal_ladder = _ladder(cal["ladder"], 2)
    calibration = []
    for a, b in cal["pairs"]:
        try:
            wp = ex.calibration_params(float(a), float(b), n)
        except ValueError as err:
            raise SuiteError("invalid_parameters", str(err), a=a, b=b) from None
        calibration.append(lambda wp=wp: ex.run_calibration(wp, cal_ladder, n, cal["tolerance"]))

    quantum = []
    sp = cfg["space"]
    q = int(sp["q"])
    lad = _space_ladder(cfg, q)
    s_list = sp["s"] if isinstance(sp["s"], list) else [sp["s"]]
    for s in s_list:
        p = _params(q, s, sp.get("M"), lad)
        t = to_angle(sp["t"])
        quantum.append(lambda p=p, t=t, lad=lad: ex.run_space_fractal(p, t, lad, n, sp["tolerance"]))

    iv = cfg["invariance"]
    q = int(iv["q"])
    lad = _space_ladder(cfg, q)
    p = _params(q, iv["s"], iv.get("M"), lad)
    times = [to_angle(t) for t in iv["t"]]
    quantum.append(lambda p=p, lad=lad: ex.run_time_invariance(p, times, lad, n, iv["tolerance"]))

    tm = cfg["time"]
    for case in tm["cases"]:
        q = int(case["q"])
        lad = _time_ladder(cfg, q)
        p = _params(q, case["s"], case.get("M"), lad)
        x = to_angle(case["x"])
        quantum.append(lambda p=p, x=x, lad=lad: ex.run_time_fractal(p, x, lad, n, tm["tolerance"]))

    sm = cfg["smooth"]
    for case in sm["cases"]:
        q = int(case["q"])
        lad = _time_ladder(cfg, q)
        p = _params(q, case["s"], case.get("M"), lad)
        k, m = int(case["k"]), int(case["m"])
        if k < 1 or not 0 <= m <= q**k - 1:
            raise SuiteError("invalid_parameters", f"smooth point needs 0 <= m < q**k, got k={k}, m={m}")
        quantum.append(lambda p=p, k=k, m=m, lad=lad: ex.run_smooth_points(p, k, m, lad, n, sm["tolerance"]))

    vl = cfg["velocity"]
    for case in vl["cases"]:
        q = int(case["q"])
        lad = _time_ladder(cfg, q)
        p = _params(q, case["s"], case.get("M"), lad)
        quantum.append(lambda p=p, lad=lad: ex.run_velocity_fractal(p, lad, n, vl["tolerance"]))

    sf = cfg["surface"]
    q = int(sf["q"])
    lad, tlad = _space_ladder(cfg, q), _time_ladder(cfg, q)
    p = _params(q, sf["s"], sf.get("M"), lad, tlad)
    if int(sf["n_sections"]) < 8:
        raise SuiteError("invalid_parameters", "surface needs n_sections >= 8")
    quantum.append(lambda p=p, lad=lad, tlad=tlad: ex.run_surface(
        p, int(sf["n_sections"]), lad, tlad, n, sf["tolerance"]))

    vr = cfg["variants"]
    q_list = vr["q"] if isinstance(vr["q"], list) else [vr["q"]]
    for q in q_list:
        q = int(q)
        lad = _time_ladder(cfg, q)
        p = _params(q, vr["s"], vr.get("M"), lad)
        for which in vr["which"]:
            try:
                w = Variant(which)
            except ValueError:
                raise SuiteError("invalid_parameters", f"unknown variant {which!r}") from None
            quantum.append(lambda w=w, p=p, lad=lad: ex.run_variant_velocity(w, p, lad, n, vr["tolerance"]))
        phi0 = vr.get("phi0") or {}
        if phi0.get("enabled"):
            sign = int(phi0.get("sign", 1))
            seed = phi0.get("seed")
            seed = cfg["seed"] if seed == "config" else seed
            quantum.append(lambda p=p, lad=lad, sign=sign, seed=seed: ex.run_variant_velocity(
                Variant.PHI0, p, lad, n, vr["tolerance"], sign=sign, seed=seed))
    return Plan(calibration, quantum)


# ------------------------------------------------------------ persistence

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_row(r: ex.ExperimentReport, record_timing: bool = True) -> list[str]:
    r2 = r.fit.r_squared if r.fit is not None else float("nan")
    return [
        r.theorem_item.value, _fmt(r.q), _fmt(float(r.s)), _fmt(r.predicted), _fmt(r.estimated),
        _fmt(r.tolerance), _fmt(float(r2)), _fmt(r.passed),
        _fmt(round(r.runtime_seconds, 6)) if record_timing else "",
        r.label, _fmt(r.gated),
    ]


def write_csv(reports: Iterable[ex.ExperimentReport], stream, record_timing: bool = True) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(report_row(r, record_timing))


def csv_text(reports: Iterable[ex.ExperimentReport], record_timing: bool = True) -> str:
    buf = io.StringIO()
    write_csv(reports, buf, record_timing)
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def detail_record(r: ex.ExperimentReport, record_timing: bool = True) -> dict:
    params = {k: getattr(r.params, k) for k in r.params.__dataclass_fields__}
    fit = None
    if r.fit is not None:
        fit = {
            "slope": r.fit.slope, "intercept": r.fit.intercept, "dimension": r.fit.dimension,
            "r_squared": r.fit.r_squared, "window": list(r.fit.window),
            "residuals": [float(x) for x in r.fit.residuals],
            "out_of_range": r.fit.out_of_range, "degenerate": r.fit.degenerate,
        }
    rec = {
        "theorem_item": r.theorem_item.value, "label": r.label, "params": params,
        "predicted": r.predicted, "estimated": r.estimated, "tolerance": r.tolerance,
        "passed": r.passed, "gated": r.gated, "checks": r.checks, "fit": fit,
        "ladder": r.ladder_table, "details": r.details,
    }
    if record_timing:
        rec["runtime_seconds"] = r.runtime_seconds
    return _jsonable(rec)


def write_reports(reports: Sequence[ex.ExperimentReport], out_dir, record_timing: bool = True) -> Path:
    out = Path(out_dir)
    (out / "details").mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        write_csv(reports, fh, record_timing)
    for i, r in enumerate(reports):
        name = f"{i:02d}_{r.theorem_item.value}.json"
        with open(out / "details" / name, "w") as fh:
            json.dump(detail_record(r, record_timing), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return out / "summary.csv"


def write_error(err: SuiteError, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "error.json"
    with open(path, "w") as fh:
        json.dump(_jsonable(err.record()), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ------------------------------------------------------------------ runner

def run_full_suite(config: dict | str | os.PathLike | None = None) -> list[ex.ExperimentReport]:
    """Calibrate, then run the quantum experiments; persist if configured.

    Every precondition is checked before any computation.  A failed
    calibration aborts with ``SuiteError("calibration_failed")`` because
    the estimators are then untrusted.
    """
    cfg = config if isinstance(config, dict) else load_config(config)
    cfg = _merge(DEFAULT_CONFIG, cfg)
    out_dir = cfg.get("output_dir")
    timing = bool(cfg.get("record_timing"))
    try:
        plan = plan_suite(cfg)
    except SuiteError as err:
        if out_dir:
            write_error(err, out_dir)
        raise
    reports = [run() for run in plan.calibration]
    failed = [r for r in reports if not r.passed]
    if failed:
        err = SuiteError("calibration_failed", "estimator calibration failed; quantum runs skipped",
                         failed=[r.label for r in failed],
                         estimates=[r.estimated for r in failed])
        if out_dir:
            write_reports(reports, out_dir, timing)
            write_error(err, out_dir)
        err.reports = reports
        raise err
    for run in plan.quantum:
        r = run()
        log.info("%s %s: predicted %.4f estimated %.4f %s", r.theorem_item.value, r.label,
                 r.predicted, r.estimated, "ok" if r.passed else "FAIL")
        reports.append(r)
    if out_dir:
        write_reports(reports, out_dir, timing)
    return reports


def all_gated_passed(reports: Iterable[ex.ExperimentReport]) -> bool:
    return all(r.passed for r in reports if r.gated)
