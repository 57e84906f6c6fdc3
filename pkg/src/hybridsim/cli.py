"""Command-line runner: one JSON scenario in, CSV datasets plus a manifest out.

Exit codes: 0 success, 1 runtime error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import traceback
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__, coupling, dynamics, magnonics, nv, sensing
from .config import TASKS, ConfigError, ScenarioConfig, load_config, parse_config
from .core import THETA_BV, DriveConfig, FieldConfig, HybridSimError

SUBCOMMANDS = ("dispersion", "transmission", "odmr-map", "rabi", "sequence", "amplification", "sensing")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def emit_csv(path, headers, rows) -> Path:
    """Write a UTF-8, LF-terminated CSV; floats keep 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(headers)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def emit_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_fmt) + "\n", encoding="utf-8")
    return path


def emit_map_csv(path, b_grid, f_grid, values) -> Path:
    """Field-frequency map: header row of frequencies, first column fields."""
    header = ["b_G/f_MHz"] + [_fmt(f) for f in f_grid]
    return emit_csv(path, header, ([b, *row] for b, row in zip(b_grid, values)))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    config: dict
    seed: int
    version: str = __version__
    files: list = dc_field(default_factory=list)
    wall_time_s: float = 0.0
    status: str = "ok"
    error: dict | None = None
    warnings: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "files": self.files,
            "wall_time_s": self.wall_time_s,
            "status": self.status,
            "error": self.error,
            "warnings": self.warnings,
        }


def emit_manifest(manifest: RunManifest, out_dir) -> Path:
    return emit_json(Path(out_dir) / "manifest.json", manifest.to_dict())


def _theta_nv(cfg: ScenarioConfig) -> np.ndarray:
    if cfg.nv["theta_nv"] is not None:
        return np.asarray(cfg.nv["theta_nv"], dtype=float)
    seed = cfg.nv["seed"] if cfg.nv["seed"] is not None else cfg.seed
    return nv.polar_angles(nv.ensemble_orientations(cfg.nv["ensemble"], seed))


def _need(value, name):
    if value is None:
        raise ConfigError("required for this task", name)
    return value


# tasks: each writes its files under ``out`` and returns their paths


def task_dispersion(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    p, b = cfg.system.params, cfg.block
    field = FieldConfig(cfg.field["b_ext"], cfg.field["theta"])
    k = np.linspace(b["k_min"], b["k_max"], int(b["num_k"]))
    files = []
    for name in b["modes"]:
        kind = magnonics.ModeKind(name.upper())
        # each family at its own propagation geometry
        fk = field if kind is magnonics.ModeKind.DESW else FieldConfig(field.b_ext, THETA_BV)
        f = magnonics.dispersion(kind, k, fk, p)
        vg = np.array([magnonics.group_velocity(kind, ki, fk, p) if ki > 0 else math.nan for ki in k])
        ld = np.array([magnonics.decay_length(kind, ki, fk, p) if ki > 0 else math.nan for ki in k])
        files.append(emit_csv(out / f"disp_{name}.csv", ["k_rad_per_um", "f_MHz", "v_g_m_per_s", "decay_length_um"],
                              zip(k, f, vg, ld)))
    summary = {"b_ext_G": field.b_ext, "kittel_MHz": magnonics.kittel_frequency(field.b_ext, p),
               "asymptote_MHz": magnonics.surface_limit(field.b_ext, p)}
    if cfg.field["b_grid"] is not None:
        rows = []
        for bi in cfg.field["b_grid"]:
            fb = FieldConfig(float(bi), cfg.field["theta"])
            top = magnonics.band_edges(fb, p, cfg.system.spin_wave.ladder_top(cfg.system.geometry))[1]
            rows.append((bi, magnonics.kittel_frequency(bi, p), magnonics.surface_limit(bi, p), top))
        files.append(emit_csv(out / "spectrum.csv", ["b_G", "kittel_MHz", "asymptote_MHz", "ladder_top_MHz"], rows))
    files.append(emit_json(out / "summary.json", summary))
    return files


def task_transmission(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    bg = _need(cfg.field["b_grid"], "field.b_grid")
    fg = _need(cfg.drive["f_grid"], "drive.f_grid")
    s = cfg.system
    m = magnonics.transmission_map(bg, fg, s.geometry, s.params, s.spin_wave, cfg.field["theta"], threads)
    files = [emit_map_csv(out / "transmission.csv", m.b_grid, m.f_grid, m.s21)]
    support = []
    for i, b in enumerate(m.b_grid):
        e = magnonics.support_edges(m.s21[i], m.f_grid)
        support.append({"b_G": float(b), "f_low_MHz": e[0] if e else None, "f_high_MHz": e[1] if e else None})
    files.append(emit_json(out / "summary.json", {"support": support}))
    return files


def _peak_at(power, theta, bg, fg, th, cfg, threads):
    m = nv.odmr_map(bg, fg, theta, power, th, cfg.system, cfg.drive["impedance"],
                    cfg.block["ferromagnet"], threads)
    return float(m.contrast.max())


def task_odmr_map(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    bg = _need(cfg.field["b_grid"], "field.b_grid")
    fg = _need(cfg.drive["f_grid"], "drive.f_grid")
    b = cfg.block
    th = _theta_nv(cfg)
    panels = b["panels"] or [{"theta": cfg.field["theta"], "power": cfg.drive["power"]}]
    threshold = b["threshold"] if b["threshold"] is not None else cfg.system.odmr.threshold
    files, summ = [], []
    for i, pnl in enumerate(panels):
        m = nv.odmr_map(bg, fg, pnl["theta"], pnl["power"], th, cfg.system, cfg.drive["impedance"],
                        b["ferromagnet"], threads)
        name = "odmr_map.csv" if len(panels) == 1 else f"odmr_map_{i}.csv"
        files.append(emit_map_csv(out / name, m.b_grid, m.f_grid, m.contrast))
        summ.append({"file": name, "theta": pnl["theta"], "power_mW": pnl["power"],
                     "onset_G": nv.onset_field(m, threshold),
                     "peak_contrast": float(m.contrast.max()),
                     "integrated_contrast": nv.integrated_contrast(m)})
    summary = {"threshold": threshold, "panels": summ}
    mp = b["match_power"]
    if mp is not None:
        ref = summ[mp["reference"]]
        target = ref["peak_contrast"]
        lo, hi = ref["power_mW"], mp["p_max"]
        if _peak_at(hi, mp["theta"], bg, fg, th, cfg, threads) < target:
            p_eq = None
        else:
            # peak contrast grows monotonically with power; bisect in log power
            for _ in range(40):
                mid = math.sqrt(lo * hi)
                if _peak_at(mid, mp["theta"], bg, fg, th, cfg, threads) >= target:
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1.0 + 1e-6:
                    break
            p_eq = hi
        summary["match_power"] = {"theta": mp["theta"], "reference_power_mW": ref["power_mW"],
                                  "equal_contrast_power_mW": p_eq,
                                  "power_ratio": p_eq / ref["power_mW"] if p_eq else None}
    files.append(emit_json(out / "summary.json", summary))
    return files


def task_rabi(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    s, b = cfg.system, cfg.block
    theta = cfg.field["theta"]
    match = nv.find_matching_orientation(b["f_target"], b["b_low"], b["b_high"], s.params)
    drive = DriveConfig(b["power"], match.frequency, cfg.drive["impedance"])
    t = b["t_grid"]
    decay = s.rabi.decay_time(b["power"])
    dec = dynamics.DecoherenceParams(rabi_decay_time=decay)
    out_summary = {"theta_nv_deg": math.degrees(match.theta_nv), "frequency_MHz": match.frequency,
                   "decay_time_us": decay}
    files = []
    for label, bias in (("sw", b["b_high"]), ("antenna", b["b_low"])):
        amp = coupling.total_drive_amplitude(drive, FieldConfig(bias, theta), s)
        omega = dynamics.rabi_frequency(amp, s.params)
        files.append(emit_csv(out / f"rabi_{label}.csv", ["time_us", "signal"],
                              zip(t, dynamics.rabi_trace(omega, 0.0, t, dec))))
        out_summary[f"{label}_b_G"] = bias
        out_summary[f"{label}_rabi_MHz"] = omega
        out_summary[f"{label}_visible"] = dynamics.rabi_visible(omega, decay, s.rabi.min_cycles)
    if b["powers"] is not None:
        ps = dynamics.power_scaling_check(b["powers"], b["b_high"], match.frequency, s, theta,
                                          cfg.drive["impedance"])
        files.append(emit_csv(out / "power_scaling.csv", ["power_mW", "sqrt_power", "rabi_MHz"],
                              zip(ps.powers, np.sqrt(ps.powers), ps.rabi)))
        out_summary["power_scaling"] = {"slope": ps.slope, "intercept": ps.intercept,
                                        "r_squared": ps.r_squared, "max_rabi_MHz": max(ps.rabi)}
    files.append(emit_json(out / "summary.json", out_summary))
    return files


def task_sequence(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    b = cfg.block
    t = b["t_grid"]
    files, fits = [], []
    for run in b["runs"]:
        dec = dynamics.DecoherenceParams(run["t2"], run["alpha"])
        y = dynamics.cpmg_trace(run["n"], t, dec, b["omega"])
        files.append(emit_csv(out / f"trace_{run['label']}.csv", ["time_us", "signal"], zip(t, y)))
        fit = dynamics.fit_envelope(t, y)
        fits.append({"label": run["label"], "n": run["n"], "t2_true": run["t2"], "alpha_true": run["alpha"],
                     "t2": fit.t2, "alpha": fit.alpha, "residual": fit.residual, "iterations": fit.iterations})
    files.append(emit_json(out / "fit.json", {"fits": fits}))
    return files


def task_amplification(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    b = cfg.block
    rows = []
    for x in b["x_grid"]:
        a = coupling.amplification_details(float(x), b["b_low"], b["b_high"], b["f_target"], cfg.system)
        rows.append((x, a.ratio, a.decay_length, a.mode_k))
    files = [emit_csv(out / "amplification.csv", ["x_um", "amplification", "decay_length_um", "mode_k_rad_per_um"],
                      rows)]
    files.append(emit_json(out / "summary.json", {
        "calibrated_kappa_G_per_sqrt_mW": coupling.kappa_sw(cfg.system),
        "theta_nv_deg": math.degrees(nv.find_matching_orientation(
            b["f_target"], b["b_low"], b["b_high"], cfg.system.params).theta_nv),
    }))
    return files


def task_sensing(cfg: ScenarioConfig, out: Path, threads: int) -> list[Path]:
    b = cfg.block
    sc: sensing.SensingConfig = b["config"]
    p = cfg.system.params
    decay = b["rabi_decay_time"] if b["rabi_decay_time"] is not None else math.inf
    centre = nv.NVConfig(b["theta_nv"], sc.bias_field)
    trace = sensing.run_protocol(sc, centre, dynamics.DecoherenceParams(rabi_decay_time=decay), p)
    files = [emit_csv(out / "sensing_trace.csv", ["time_us", "signal"], zip(trace.tau_grid, trace.nv_population))]
    summary = {"predicted_rabi_MHz": trace.predicted_rabi, "inferred_rabi_MHz": trace.inferred_rabi,
               "n_targets": sc.n_targets, "estimated_n_targets": sensing.estimate_concentration(trace, sc, p),
               "matching_b_drive_G": sensing.matching_drive_field(sc)}
    if b["b_drive_grid"] is not None:
        grid = b["b_drive_grid"]
        if b["species"]:
            resp = sensing.species_response(sc, [tuple(s) for s in b["species"]], grid, p)
        else:
            resp = sensing.matching_sweep(sc, grid, p)
        files.append(emit_csv(out / "sensing_sweep.csv", ["b_drive_G", "rabi_MHz"], zip(grid, resp)))
        summary["peak_b_drive_G"] = float(grid[int(np.argmax(resp))])
        summary["grid_step_G"] = float(np.max(np.diff(grid))) if grid.size > 1 else 0.0
    files.append(emit_json(out / "sensing.json", summary))
    return files


TASK_RUNNERS = {
    "dispersion": task_dispersion,
    "transmission": task_transmission,
    "odmr_map": task_odmr_map,
    "rabi": task_rabi,
    "sequence": task_sequence,
    "amplification": task_amplification,
    "sensing": task_sensing,
}


def run_scenario(cfg: ScenarioConfig, out_dir, threads: int = 1) -> RunManifest:
    """Run one task, write its files and the manifest. Raises on failure after writing the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.to_dict(), cfg.seed, warnings=list(cfg.warnings))
    t0 = time.perf_counter()
    try:
        paths = TASK_RUNNERS[cfg.task](cfg, out, threads)
    except Exception as exc:
        man.status = "error"
        man.error = {"type": type(exc).__name__, "message": str(exc),
                     "traceback": traceback.format_exc().splitlines()[-3:]}
        man.wall_time_s = time.perf_counter() - t0
        emit_manifest(man, out)
        raise
    man.files = [{"name": p.name, "sha256": sha256(p), "bytes": p.stat().st_size} for p in paths]
    man.wall_time_s = time.perf_counter() - t0
    emit_manifest(man, out)
    return man


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("HYBRIDSIM_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"HYBRIDSIM_THREADS = {env!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON scenario file")
    common.add_argument("--out", type=Path, help="output directory (overrides the file's 'output')")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--threads", type=int, help="worker threads (default: $HYBRIDSIM_THREADS or 1)")
    common.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                        help="reject unknown keys (default) or only warn")
    ap = argparse.ArgumentParser(prog="hybridsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS + ("validate",):
        sub.add_parser(name, parents=[common])
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    task = None if args.command == "validate" else args.command.replace("-", "_")
    try:
        if args.config is not None:
            cfg = parse_config(args.config, task, args.strict)
        elif task is not None:
            cfg = load_config({}, task, args.strict)
        else:
            raise ConfigError("validate needs --config")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("must be >= 0", "--seed")
            cfg.seed = args.seed
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("must be >= 1", "--threads")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.command == "validate":
        print(f"ok: task '{cfg.task}'")
        return 0
    out = args.out or (Path(cfg.output) if cfg.output else Path("out") / cfg.task)
    try:
        man = run_scenario(cfg, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HybridSimError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for f in man.files:
        print(f"{out / f['name']}  {f['sha256'][:16]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
