"""Golden scenarios: one per figure, run through the CLI and checked by tolerance predicates."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import magnonics
from .cli import emit_json, main as cli_main
from .config import parse_config
from .core import FieldConfig

GOLDEN_DIR = Path(str(resources.files("hybridsim") / "golden"))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class GoldenCase:
    name: str
    subcommand: str
    anchor: str
    assertions: Callable[[Path], list[Check]]

    @property
    def config_path(self) -> Path:
        return GOLDEN_DIR / f"{self.name}.json"


def _json(out: Path, name: str) -> dict:
    return json.loads((out / name).read_text(encoding="utf-8"))


def _csv(out: Path, name: str) -> np.ndarray:
    with (out / name).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))


def read_map(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(b_grid, f_grid, values) from a map CSV."""
    d = np.loadtxt(path, delimiter=",", ndmin=2, dtype=str)
    f = d[0, 1:].astype(float)
    return d[1:, 0].astype(float), f, d[1:, 1:].astype(float)


def _within(name, value, lo, hi) -> Check:
    value = None if value is None else float(value)
    ok = value is not None and lo <= value <= hi
    return Check(name, ok, f"{value!r} in [{lo}, {hi}]")


def _close(name, value, target, tol) -> Check:
    value = None if value is None else float(value)
    ok = value is not None and abs(value - target) <= tol
    return Check(name, ok, f"|{value!r} - {target}| <= {tol}")


def check_fig1c(out: Path) -> list[Check]:
    s = _json(out, "summary.json")
    f = _csv(out, "disp_desw.csv")[:, 1]
    return [
        _close("kittel edge at 145 G", s["kittel_MHz"], 1479.3, 1.0),
        _close("surface limit at 145 G", s["asymptote_MHz"], 2898.0, 1.0),
        # saturates to the surface limit in floating point at large k
        Check("DESW monotone in k", bool(np.all(np.diff(f) >= 0) and f[-1] > f[0]), "non-decreasing"),
        Check("BVMSW backward", bool(np.all(np.diff(_csv(out, "disp_bvmsw.csv")[:, 1]) < 0)),
              "strictly decreasing"),
    ]


def check_fig1d(out: Path) -> list[Check]:
    cfg = parse_config(GOLDEN_DIR / "fig1d.json")
    s = cfg.system
    b_grid, f_grid, s21 = read_map(out / "transmission.csv")
    cell = float(np.max(np.diff(f_grid)))
    checks = [Check("zero-field row vanishes", bool(np.all(s21[b_grid == 0.0] == 0.0)), "all exactly 0")]
    support = {r["b_G"]: r for r in _json(out, "summary.json")["support"]}
    for b in (50.0, 100.0, 150.0, 200.0, 250.0):
        lo, hi = magnonics.band_edges(FieldConfig(b, 0.0), s.params, s.spin_wave.ladder_top(s.geometry),
                                      s.spin_wave.k_spacing)
        r = support[b]
        ok = (r["f_low_MHz"] is not None and abs(r["f_low_MHz"] - lo) <= cell
              and abs(r["f_high_MHz"] - hi) <= cell)
        checks.append(Check(f"support at {b:g} G", ok,
                            f"({r['f_low_MHz']}, {r['f_high_MHz']}) vs ({lo:.1f}, {hi:.1f}) within {cell}"))
    return checks


def check_fig2a(out: Path) -> list[Check]:
    s = _json(out, "summary.json")
    low = s["panels"][0]
    b_grid, _, c = read_map(out / low["file"])
    onset = low["onset_G"]
    below = c[b_grid < (onset if onset is not None else math.inf)]
    return [
        _within("onset at 40 uW", onset, 45.0, 90.0),
        Check("no contrast below onset", bool(below.size == 0 or below.max() < s["threshold"]),
              f"max {below.max() if below.size else 0.0:.3g} < {s['threshold']}"),
        Check("higher power lowers onset", s["panels"][1]["onset_G"] is not None
              and s["panels"][1]["onset_G"] <= onset, f"{s['panels'][1]['onset_G']} <= {onset}"),
    ]


def check_fig2b(out: Path) -> list[Check]:
    s = _json(out, "summary.json")
    mp = s["match_power"]
    return [
        Check("reversed field needs >= 100x power", mp["power_ratio"] is not None and mp["power_ratio"] >= 100.0,
              f"ratio {mp['power_ratio']}"),
        Check("reversed field weaker at equal power", s["panels"][1]["peak_contrast"] < s["panels"][0]["peak_contrast"],
              f"{s['panels'][1]['peak_contrast']:.4g} < {s['panels'][0]['peak_contrast']:.4g}"),
    ]


def check_fig2c(out: Path) -> list[Check]:
    s = _json(out, "summary.json")
    p = s["panels"]
    return [
        Check(f"perpendicular weaker at {p[i]['power_mW']:g} mW",
              p[i + 1]["integrated_contrast"] < p[i]["integrated_contrast"],
              f"{p[i + 1]['integrated_contrast']:.4g} < {p[i]['integrated_contrast']:.4g}")
        for i in (0, 2)
    ]


def check_fig3a(out: Path) -> list[Check]:
    s = _json(out, "summary.json")
    sw = _csv(out, "rabi_sw.csv")[:, 1]
    return [
        _within("matching orientation (deg)", s["theta_nv_deg"], 75.0, 90.0),
        _close("common frequency", s["frequency_MHz"], 2862.0, 5.0),
        Check("spin-wave Rabi visible", s["sw_visible"] and float(sw.min()) < 0.5, f"min P {sw.min():.3f}"),
        Check("antenna Rabi below visibility", not s["antenna_visible"], f"{s['antenna_rabi_MHz']:.4g} MHz"),
    ]


def check_fig3b(out: Path) -> list[Check]:
    d = _csv(out, "amplification.csv")
    cfg = parse_config(GOLDEN_DIR / "fig3b.json")
    z = cfg.system.geometry.nd_z_um
    a = dict(zip(d[:, 0], d[:, 1]))
    L = float(d[0, 2])
    r = lambda x: math.hypot(x, z)
    ext = a[20.0] * r(235.0) / r(20.0) * math.exp(-(235.0 - 20.0) / L)
    return [
        _close("calibrated at 20 um", a[20.0], 100.0, 1e-6),
        _within("ratio 80 / 20 um", a[80.0] / a[20.0], 3.0, 4.5),
        _close("235 um vs 1/r extrapolation (relative)", a[235.0] / ext, 1.0, 0.10),
    ]


def check_fig3c(out: Path) -> list[Check]:
    ps = _json(out, "summary.json")["power_scaling"]
    d = _csv(out, "power_scaling.csv")
    return [
        Check("powers span 3 decades", d.shape[0] >= 4 and d[-1, 0] / d[0, 0] >= 1e3 * (1 - 1e-12),
              f"{d.shape[0]} powers, {d[0, 0]:g}..{d[-1, 0]:g} mW"),
        Check("R^2 > 0.999", ps["r_squared"] > 0.999, f"{ps['r_squared']!r}"),
        Check("zero intercept", abs(ps["intercept"]) <= 1e-3 * ps["max_rabi_MHz"],
              f"|{ps['intercept']:.3g}| <= 1e-3 x {ps['max_rabi_MHz']:.4g}"),
    ]


def check_fig3d(out: Path) -> list[Check]:
    checks = []
    for f in _json(out, "fit.json")["fits"]:
        checks.append(_close(f"{f['label']} T2 (relative)", f["t2"] / f["t2_true"], 1.0, 0.005))
        checks.append(_close(f"{f['label']} alpha (relative)", f["alpha"] / f["alpha_true"], 1.0, 0.005))
    return checks


def check_fig4(out: Path) -> list[Check]:
    s = _json(out, "sensing.json")
    return [
        _close("response peak at matching drive", s["peak_b_drive_G"], s["matching_b_drive_G"], s["grid_step_G"]),
        _close("concentration round trip (relative)", s["estimated_n_targets"] / s["n_targets"], 1.0, 0.02),
    ]


CASES = (
    GoldenCase("fig1c", "dispersion", "Fig. 1c", check_fig1c),
    GoldenCase("fig1d", "transmission", "Fig. 1d", check_fig1d),
    GoldenCase("fig2a", "odmr-map", "Fig. 2a", check_fig2a),
    GoldenCase("fig2b", "odmr-map", "Fig. 2b", check_fig2b),
    GoldenCase("fig2c", "odmr-map", "Fig. 2c", check_fig2c),
    GoldenCase("fig3a", "rabi", "Fig. 3a", check_fig3a),
    GoldenCase("fig3b", "amplification", "Fig. 3b", check_fig3b),
    GoldenCase("fig3c", "rabi", "Fig. 3c", check_fig3c),
    GoldenCase("fig3d", "sequence", "Fig. 3d", check_fig3d),
    GoldenCase("fig4", "sensing", "Fig. 4", check_fig4),
)


def run_case(case: GoldenCase, out_root, threads: int = 1) -> dict:
    out = Path(out_root) / case.name
    t0 = time.perf_counter()
    with contextlib.redirect_stdout(io.StringIO()):
        code = cli_main([case.subcommand, "--config", str(case.config_path), "--out", str(out),
                         "--threads", str(threads)])
    elapsed = time.perf_counter() - t0
    if code != 0:
        return {"name": case.name, "anchor": case.anchor, "passed": False, "exit_code": code,
                "checks": [], "seconds": elapsed}
    checks = case.assertions(out)
    digests = {f["name"]: f["sha256"] for f in _json(out, "manifest.json")["files"]}
    return {"name": case.name, "anchor": case.anchor, "passed": all(c.passed for c in checks),
            "exit_code": code, "seconds": elapsed, "digests": digests,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}


def run_golden_suite(out_root, threads: int = 1, cases=CASES, verbose: bool = True) -> dict:
    """Run every case, write ``report.json`` under ``out_root`` and return the report."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    results = []
    for case in cases:
        r = run_case(case, out_root, threads)
        results.append(r)
        if verbose:
            print(f"[{'PASS' if r['passed'] else 'FAIL'}] {case.name:6s} {case.anchor:8s} {r['seconds']:6.2f} s")
            for c in r["checks"]:
                if not c["passed"]:
                    print(f"        {c['name']}: {c['detail']}")
    report = {"passed": all(r["passed"] for r in results), "threads": threads, "cases": results}
    emit_json(out_root / "report.json", report)
    return report
