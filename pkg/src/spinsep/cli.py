"""Command-line driver: ``spinsep <command> --config FILE [--set k=v ...] --out DIR``.

Configuration files hold one ``key = value`` pair per line; ``#`` starts a
comment.  ``--set`` entries override the file.  Every command writes one CSV
file with unit-annotated headers into the output directory and prints
``metric=value`` summary lines on stdout.  The exit status is 0 only when
every computation succeeded, 1 if any failed and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import classical_flow as cf
from . import gaussian_qsl as gq
from . import pspin as ps
from . import timescales as ts
from .errors import SpinSepError
from .metrology import counter_twisting_targets, find_first_peak, metrology_series
from .spin_core import (
    PTaT,
    PTwoAxisCT,
    SpinEnsemble,
    TaT,
    TwoAxisCT,
    build_hamiltonian,
    coherent_state,
)

WORKERS_ENV = "SPINSEP_WORKERS"
DIMLESS = "[dimensionless]"
TIME = "[1/chi]"


class UsageError(Exception):
    """Invalid command line or configuration."""


def _float(text: str) -> float:
    val = float(text)
    if not math.isfinite(val):
        raise ValueError("not finite")
    return val


def _positive(text: str) -> float:
    val = _float(text)
    if val <= 0:
        raise ValueError("must be positive")
    return val


def _int(text: str) -> int:
    val = float(text)
    if val != int(val):
        raise ValueError("not an integer")
    return int(val)


def _int_list(text: str) -> list:
    return [_int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list:
    return [_float(t) for t in text.split(",") if t.strip()]


def _model_name(text: str) -> str:
    name = text.strip().lower()
    if name not in ("2act", "p2act", "tat", "ptat"):
        raise ValueError("expected one of 2act, p2act, tat, ptat")
    return name


def _axis_name(text: str) -> str:
    name = text.strip().lower()
    if name not in ("x", "y", "z", "optimal"):
        raise ValueError("expected one of x, y, z, optimal")
    return name


MODEL_KEYS = {
    "model": (_model_name, "2act"),
    "p": (_int, 3),
    "omega": (_float, 0.5),
    "chi": (_float, 1.0),
}
EVOLVE_KEYS = {
    "t_max": (_positive, 6.0),
    "dt": (_positive, 0.01),
    "tol": (_positive, 1e-10),
    "theta": (_float, None),
    "phi": (_float, 0.0),
    "qfi_axis": (_axis_name, None),
    "alpha": (_float, 0.678),
}

SCHEMAS = {
    "evolve": {**MODEL_KEYS, **EVOLVE_KEYS, "N": (_int, 100)},
    "scan-n": {**MODEL_KEYS, **EVOLVE_KEYS, "N_values": (_int_list, [30, 100])},
    "flow": dict(MODEL_KEYS),
    "separatrix": {**MODEL_KEYS, "n_points": (_int, 2001)},
    "timescales": {"N_values": (_int_list, [100]), "alpha": (_float, 0.678), "chi_physical": (_positive, None)},
    "qsl": {
        "r_values": (_float_list, [0.05, 0.1, 0.2]),
        "ratio_min": (_float, 0.1),
        "ratio_max": (_float, 5.0),
        "ratio_step": (_positive, 1e-3),
    },
    "pspin": {"p_values": (_int_list, [2, 3, 4, 5]), "sweep_max": (_positive, 50.0), "sweep_points": (_int, 400)},
    "order-params": {
        "p": (_int, 2),
        "N": (_int, 200),
        "omega_over_chi": (_float_list, [0.3, 0.75, 2.0]),
        "chi_t_avg": (_positive, 100.0),
    },
}


def read_config(path: str | None, overrides: list, schema: dict) -> dict:
    raw: dict = {}
    if path is not None:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from exc
        for n, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {n} is not key=value: {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        raw[key] = value
    cfg = {}
    for key, value in raw.items():
        if key not in schema:
            raise UsageError(f"unknown config key {key!r}")
        try:
            cfg[key] = schema[key][0](value)
        except ValueError as exc:
            raise UsageError(f"invalid value for {key!r}: {value!r} ({exc})") from exc
    for key, (_, default) in schema.items():
        cfg.setdefault(key, default)
    return cfg


def build_model(cfg: dict):
    name = cfg["model"]
    try:
        if name == "2act":
            model = TwoAxisCT(chi=cfg["chi"])
        elif name == "p2act":
            model = PTwoAxisCT(p=cfg["p"], chi=cfg["chi"])
        elif name == "tat":
            model = TaT(omega=cfg["omega"], chi=cfg["chi"])
        else:
            model = PTaT(p=cfg["p"], omega=cfg["omega"], chi=cfg["chi"])
        cf._validate(model)
    except SpinSepError as exc:
        raise UsageError(f"invalid model parameters: {exc}") from exc
    return model


def _initial_angles(model, cfg) -> tuple[float, float]:
    if cfg["theta"] is not None:
        return cfg["theta"], cfg["phi"]
    if isinstance(model, (TwoAxisCT, PTwoAxisCT)):
        return 0.0, 0.0
    if isinstance(model, TaT):
        return math.pi / 2, 0.0
    r = cf.saddle(model).position
    return math.acos(max(-1.0, min(1.0, r[2]))), math.atan2(r[1], r[0])


def _qfi_axis(model, cfg) -> str:
    if cfg["qfi_axis"]:
        return cfg["qfi_axis"]
    return "x" if isinstance(model, (TwoAxisCT, PTwoAxisCT)) else "z"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list, rows: list) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def summary(out, metric: str, value) -> None:
    print(f"{metric}={_fmt(value)}", file=out)


def _series(model, cfg, n, targets=False):
    ens = SpinEnsemble(n)
    theta, phi = _initial_angles(model, cfg)
    times = np.arange(0.0, cfg["t_max"] + 0.5 * cfg["dt"], cfg["dt"])
    h = build_hamiltonian(model, ens)
    axis = _qfi_axis(model, cfg)
    axes = tuple(dict.fromkeys((axis, "x", "y", "z", "optimal")))
    refs = {}
    if targets and isinstance(model, TwoAxisCT) and cfg["theta"] is None:
        refs = counter_twisting_targets(ens, alpha=cfg["alpha"])
    series = metrology_series(
        h, coherent_state(ens, theta, phi), times, qfi_axes=axes, targets=refs, tol=cfg["tol"]
    )
    return series, axis


def cmd_evolve(cfg, outdir: Path, out) -> bool:
    model = build_model(cfg)
    n = cfg["N"]
    series, axis = _series(model, cfg, n, targets=True)
    j = n / 2.0
    axes = list(series.qfi)
    header = [f"chi_t {TIME}", f"Jx/J {DIMLESS}", f"Jy/J {DIMLESS}", f"Jz/J {DIMLESS}", f"xi2 {DIMLESS}"]
    header += [f"qfi_{a} {DIMLESS}" for a in axes]
    header += [f"zeta2_optimal {DIMLESS}"]
    header += [f"fidelity_{k} {DIMLESS}" for k in series.fidelity]
    with np.errstate(divide="ignore"):
        zeta2 = np.where(series.qfi["optimal"] > 0, n / series.qfi["optimal"], np.inf)
    rows = []
    for i, t in enumerate(series.times):
        row = [t, *(series.means[i] / j), series.xi2[i]]
        row += [series.qfi[a][i] for a in axes]
        row += [zeta2[i]]
        row += [series.fidelity[k][i] for k in series.fidelity]
        rows.append(row)
    write_csv(outdir / "evolve.csv", header, rows)
    ok = True
    channels = [("xi2", series.xi2, "min"), (f"qfi_{axis}", series.qfi[axis], "max")]
    channels += [(f"fidelity_{k}", v, "max") for k, v in series.fidelity.items()]
    for name, values, kind in channels:
        try:
            t_peak, v_peak = find_first_peak(series.times, values, kind)
            summary(out, f"{name}_peak_chi_t", t_peak)
            summary(out, f"{name}_peak_value", v_peak)
        except SpinSepError as exc:
            print(f"error: {name}: {exc}", file=sys.stderr)
            ok = False
    return ok


def _prediction_labels(model) -> tuple:
    """Closed-form (squeezing, QFI) timescale labels valid for ``model``, or None."""
    if isinstance(model, TwoAxisCT):
        return "CT_sq", "CT_QFI"
    if isinstance(model, TaT) and math.isclose(model.omega, 0.5 * model.chi, rel_tol=1e-12):
        return "TaT_sq", "TaT_QFI"
    if isinstance(model, PTaT) and model.p == 3 and math.isclose(
        model.omega, ts.CRITICAL_3TAT.omega * model.chi, rel_tol=1e-12
    ):
        return None, "TaT3_QFI"
    return None, None


def _scan_one(args):
    cfg, n = args
    model = build_model(cfg)
    series, axis = _series(model, cfg, n)
    row = {"N": n}
    for name, values, kind in (("xi2", series.xi2, "min"), ("qfi", series.qfi[axis], "max")):
        try:
            row[f"{name}_t"], row[f"{name}_v"] = find_first_peak(series.times, values, kind)
        except SpinSepError as exc:
            row[f"{name}_t"] = row[f"{name}_v"] = float("nan")
            row.setdefault("errors", []).append(f"{name}: {exc}")
    return row


def _relative_error(sim: float, pred: float) -> float:
    return abs(sim - pred) / abs(pred)


def cmd_scan_n(cfg, outdir: Path, out) -> bool:
    ns = sorted(set(cfg["N_values"]))
    if not ns:
        raise UsageError("invalid value for 'N_values': empty list")
    model = build_model(cfg)
    try:
        workers = max(1, int(os.environ.get(WORKERS_ENV, "1") or 1))
    except ValueError as exc:
        raise UsageError(f"{WORKERS_ENV} must be an integer") from exc
    jobs = [(cfg, n) for n in ns]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_one, jobs))
    else:
        rows = [_scan_one(job) for job in jobs]
    rows.sort(key=lambda r: r["N"])
    sq_label, qfi_label = _prediction_labels(model)
    header = [
        f"N {DIMLESS}",
        f"t_sq_sim {TIME}", f"t_sq_pred {TIME}", f"rel_err_sq {DIMLESS}", f"xi2_min {DIMLESS}",
        f"t_qfi_sim {TIME}", f"t_qfi_pred {TIME}", f"rel_err_qfi {DIMLESS}", f"qfi_peak {DIMLESS}",
    ]
    nan = float("nan")
    table = []
    ok = True
    worst = {"sq": 0.0, "qfi": 0.0}
    for r in rows:
        n = r["N"]
        line = [n]
        for key, label in (("sq", sq_label), ("qfi", qfi_label)):
            sim = r["xi2_t" if key == "sq" else "qfi_t"]
            value = r["xi2_v" if key == "sq" else "qfi_v"]
            pred = ts.predict(label, n).chi_t if label else nan
            err = _relative_error(sim, pred) if label else nan
            if label and math.isfinite(err):
                worst[key] = max(worst[key], err)
            line += [sim, pred, err, value]
        table.append(line)
        for msg in r.get("errors", []):
            ok = False
            print(f"error: N={n}: {msg}", file=sys.stderr)
    write_csv(outdir / "scan_n.csv", header, table)
    summary(out, "rows", len(table))
    if sq_label:
        summary(out, "max_rel_err_sq", worst["sq"])
    if qfi_label:
        summary(out, "max_rel_err_qfi", worst["qfi"])
    return ok


def cmd_flow(cfg, outdir: Path, out) -> bool:
    model = build_model(cfg)
    pts = cf.fixed_points(model)
    rows = [[*fp.position, fp.kind, float(np.max(fp.eigenvalues.real))] for fp in pts]
    write_csv(
        outdir / "fixed_points.csv",
        [f"X {DIMLESS}", f"Y {DIMLESS}", f"Z {DIMLESS}", f"kind {DIMLESS}", "max_re_eig [chi]"],
        rows,
    )
    summary(out, "n_fixed_points", len(pts))
    summary(out, "n_saddles", sum(fp.kind == "saddle" for fp in pts))
    ok = True
    try:
        summary(out, "saddle_lyapunov", cf.saddle_lyapunov(model))
        summary(out, "branch_angle_cos", cf.branch_angle(model))
    except SpinSepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        ok = False
    return ok


def cmd_separatrix(cfg, outdir: Path, out) -> bool:
    model = build_model(cfg)
    curve = cf.separatrix(model, n_points=cfg["n_points"])
    rows = [[b, *pt] for b, branch in enumerate(curve.branches) for pt in branch]
    write_csv(outdir / "separatrix.csv", [f"branch {DIMLESS}", f"X {DIMLESS}", f"Y {DIMLESS}", f"Z {DIMLESS}"], rows)
    summary(out, "method", curve.method)
    summary(out, "energy", curve.energy)
    summary(out, "arclength", curve.arclength)
    return True


def cmd_timescales(cfg, outdir: Path, out) -> bool:
    chi = cfg["chi_physical"]
    header = [f"label {DIMLESS}", f"N {DIMLESS}", f"chi_t {TIME}", f"flagged {DIMLESS}"]
    if chi is not None:
        header.append("t [1/(unit of chi_physical)]")
    rows, ok = [], True
    for n in sorted(set(cfg["N_values"])):
        for label in ts.LABELS:
            try:
                pred = ts.predict(label, n, alpha=cfg["alpha"])
            except SpinSepError as exc:
                print(f"error: {label} N={n}: {exc}", file=sys.stderr)
                ok = False
                continue
            row = [label, n, pred.chi_t, int(pred.flagged)]
            if chi is not None:
                row.append(pred.physical_time(chi))
            rows.append(row)
    write_csv(outdir / "timescales.csv", header, rows)
    summary(out, "rows", len(rows))
    return ok


def cmd_qsl(cfg, outdir: Path, out) -> bool:
    count = int(round((cfg["ratio_max"] - cfg["ratio_min"]) / cfg["ratio_step"])) + 1
    if count < 3:
        raise UsageError("invalid value for 'ratio_step': grid needs at least 3 points")
    ratios = cfg["ratio_min"] + cfg["ratio_step"] * np.arange(count)
    r_values = cfg["r_values"]
    if not r_values:
        raise UsageError("invalid value for 'r_values': empty list")
    grids = [gq.qsl_ratio_grid(ratios, r) for r in r_values]
    header = [f"chi_over_omega {DIMLESS}"] + [f"qsl_ratio_r{r!r} {DIMLESS}" for r in r_values]
    write_csv(outdir / "qsl.csv", header, zip(ratios, *grids))
    best = []
    for r, values in zip(r_values, grids):
        i = int(np.argmax(values))
        best.append([r, ratios[i], values[i]])
        summary(out, f"argmax_chi_over_omega_r{r!r}", ratios[i])
        summary(out, f"max_ratio_r{r!r}", values[i])
    write_csv(
        outdir / "qsl_argmax.csv",
        [f"r {DIMLESS}", f"argmax_chi_over_omega {DIMLESS}", f"max_ratio {DIMLESS}"],
        best,
    )
    return True


def cmd_pspin(cfg, outdir: Path, out) -> bool:
    header = [
        f"p {DIMLESS}", f"spinodal {DIMLESS}", f"gs {DIMLESS}", f"le {DIMLESS}", f"dqpt {DIMLESS}",
        f"z_gs {DIMLESS}", f"z_le {DIMLESS}", f"chain {DIMLESS}", f"min_abs_cos_branch_angle {DIMLESS}",
    ]
    rows, sweep_rows, ok = [], [], True
    for p in sorted(set(cfg["p_values"])):
        try:
            cp = ps.critical_points(p)
            grid = np.linspace(1.2 * cp.spinodal, cfg["sweep_max"], cfg["sweep_points"])
            sweep = ps.branch_angle_sweep(p, grid)
        except SpinSepError as exc:
            print(f"error: p={p}: {exc}", file=sys.stderr)
            ok = False
            continue
        rows.append([p, cp.spinodal, cp.gs, cp.le, cp.dqpt, cp.z_gs, cp.z_le, cp.chain, sweep.min_abs_cos])
        sweep_rows += [[p, u, c] for u, c in zip(sweep.ratios, sweep.cosines) if np.isfinite(c)]
        summary(out, f"p{p}_chain", cp.chain)
        summary(out, f"p{p}_min_abs_cos_branch_angle", sweep.min_abs_cos)
    write_csv(outdir / "pspin.csv", header, rows)
    write_csv(
        outdir / "pspin_sweep.csv",
        [f"p {DIMLESS}", f"chi_over_omega {DIMLESS}", f"cos_branch_angle {DIMLESS}"],
        sweep_rows,
    )
    return ok


def cmd_order_params(cfg, outdir: Path, out) -> bool:
    rows, ok = [], True
    for w in cfg["omega_over_chi"]:
        model = TaT(omega=w, chi=1.0) if cfg["p"] == 2 else PTaT(p=cfg["p"], omega=w, chi=1.0)
        try:
            op = ps.order_parameters(model, cfg["N"], chi_t_avg=cfg["chi_t_avg"])
        except SpinSepError as exc:
            print(f"error: omega/chi={w}: {exc}", file=sys.stderr)
            ok = False
            continue
        rows.append([w, op.z_gs_quantum, op.z_inf])
    write_csv(
        outdir / "order_params.csv",
        [f"omega_over_chi {DIMLESS}", f"z_gs {DIMLESS}", f"z_inf {DIMLESS}"],
        rows,
    )
    summary(out, "rows", len(rows))
    return ok


COMMANDS = {
    "evolve": cmd_evolve,
    "scan-n": cmd_scan_n,
    "flow": cmd_flow,
    "separatrix": cmd_separatrix,
    "timescales": cmd_timescales,
    "qsl": cmd_qsl,
    "pspin": cmd_pspin,
    "order-params": cmd_order_params,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinsep", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a key")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    outdir = Path(args.out)
    try:
        cfg = read_config(args.config, args.set, SCHEMAS[args.command])
        outdir.mkdir(parents=True, exist_ok=True)
        ok = COMMANDS[args.command](cfg, outdir, sys.stdout)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spinsep: error: {exc}", file=sys.stderr)
        return 2
    except SpinSepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
