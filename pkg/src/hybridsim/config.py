"""JSON scenario files: parsing, defaults and strict key checking."""

from __future__ import annotations

import dataclasses
import difflib
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from .core import (
    CouplingModel,
    DeviceGeometry,
    HybridSystem,
    MaterialParams,
    ODMRModel,
    RabiDecayModel,
    SpinWaveModel,
)
from .sensing import SensingConfig

TASKS = ("dispersion", "transmission", "odmr_map", "rabi", "sequence", "amplification", "sensing")


class ConfigError(ValueError):
    """Bad scenario file. ``path`` is the dotted key path, ``line``/``column`` locate parse errors."""

    def __init__(self, message: str, path: str = "", line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = f"{path}: " if path else ""
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{where}{message}{loc}")


# task-block defaults; None means "take it from the shared section"
TASK_DEFAULTS: dict[str, dict[str, Any]] = {
    "dispersion": {"k_min": 0.0, "k_max": 20.0, "num_k": 401, "modes": ["desw", "bvmsw"]},
    "transmission": {},
    "odmr_map": {"panels": None, "ferromagnet": True, "threshold": None, "match_power": None},
    "rabi": {"b_low": 15.0, "b_high": 145.0, "f_target": 2862.0, "power": 0.001,
             "t_grid": {"start": 0.0, "stop": 2.0, "num": 401}, "powers": None},
    "sequence": {"runs": [{"label": "hahn", "n": 1, "t2": 1.54, "alpha": 1.0}],
                 "t_grid": {"start": 0.0, "stop": 6.0, "num": 121}, "omega": 10.0},
    "amplification": {"x_grid": [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
                      "b_low": 15.0, "b_high": 145.0, "f_target": 2862.0},
    "sensing": {"config": {}, "theta_nv": 0.0, "rabi_decay_time": None,
                "b_drive_grid": None, "species": None},
}

SECTION_KEYS = {
    "field": {"b_ext": 145.0, "b_grid": None, "theta": 0.0},
    "drive": {"power": 0.04, "frequency": 2862.0, "f_grid": None, "impedance": 50.0},
    "nv": {"theta_nv": None, "ensemble": 500, "seed": None},
}

MODEL_SECTIONS = {
    "spin_wave": SpinWaveModel,
    "odmr": ODMRModel,
    "coupling": CouplingModel,
    "rabi": RabiDecayModel,
}

TOP_KEYS = ("task", "material", "geometry", "models", "field", "drive", "nv", "output", "seed") + TASKS


def _unknown(key: str, allowed, path: str) -> ConfigError:
    near = difflib.get_close_matches(key, list(allowed), n=1)
    hint = f"; did you mean '{near[0]}'?" if near else ""
    return ConfigError(f"unknown key '{key}'{hint}", f"{path}.{key}" if path else key)


def _check_keys(data: dict, allowed, path: str, strict: bool, warnings: list) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", path)
    out = {}
    for k, v in data.items():
        if k in allowed:
            out[k] = v
        elif strict:
            raise _unknown(k, allowed, path)
        else:
            warnings.append(str(_unknown(k, allowed, path)))
    return out


def _number(v, path: str, allow_none: bool = False) -> float | None:
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", path)
    return float(v)


def parse_grid(grid, path: str) -> np.ndarray:
    """A list of numbers or ``{"start", "stop", "num"}``; must be finite and strictly increasing."""
    if isinstance(grid, dict):
        grid = _check_keys(grid, ("start", "stop", "num"), path, True, [])
        missing = {"start", "stop", "num"} - set(grid)
        if missing:
            raise ConfigError(f"grid needs {sorted(missing)}", path)
        num = grid["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(f"num = {num!r} must be a positive integer", f"{path}.num")
        g = np.linspace(_number(grid["start"], f"{path}.start"), _number(grid["stop"], f"{path}.stop"), num)
    elif isinstance(grid, list):
        g = np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(grid)], dtype=float)
    else:
        raise ConfigError("grid must be a list or {start, stop, num}", path)
    if g.size == 0:
        raise ConfigError("grid is empty", path)
    if np.any(np.diff(g) <= 0):
        raise ConfigError("grid must be strictly increasing", path)
    return g


def _dataclass_from(cls, data, path: str, strict: bool, warnings: list, base=None):
    names = [f.name for f in dataclasses.fields(cls)]
    data = _check_keys(data or {}, names, path, strict, warnings)
    for k, v in data.items():
        if v is not None and not isinstance(v, (bool, str, list)):
            _number(v, f"{path}.{k}")
    try:
        return dataclasses.replace(base, **data) if base is not None else cls(**data)
    except (ValueError, TypeError) as exc:
        bad = next((k for k in data if f".{k} =" in str(exc) or f".{k} " in str(exc)), "")
        raise ConfigError(str(exc), f"{path}.{bad}" if bad else path) from None


@dataclass
class ScenarioConfig:
    task: str
    system: HybridSystem
    field: dict
    drive: dict
    nv: dict
    block: dict
    seed: int = 0
    output: str | None = None
    warnings: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(x):
            if dataclasses.is_dataclass(x):
                return clean(dataclasses.asdict(x))
            if isinstance(x, np.ndarray):
                return [clean(v) for v in x.tolist()]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            return x

        return clean({
            "task": self.task,
            "seed": self.seed,
            "system": self.system.to_dict(),
            "field": self.field,
            "drive": self.drive,
            "nv": self.nv,
            self.task: self.block,
            "output": self.output,
        })


def _section(data: dict, name: str, strict: bool, warnings: list) -> dict:
    defaults = SECTION_KEYS[name]
    raw = _check_keys(data.get(name, {}) or {}, defaults, name, strict, warnings)
    out = dict(defaults)
    out.update(raw)
    return out


def _resolve_block(task: str, raw, strict: bool, warnings: list) -> dict:
    defaults = TASK_DEFAULTS[task]
    raw = _check_keys(raw or {}, defaults, task, strict, warnings)
    block = dict(defaults)
    block.update(raw)
    if task == "sensing":
        sc = dict(block["config"] or {})
        if isinstance(sc.get("tau_grid"), dict):
            sc["tau_grid"] = parse_grid(sc["tau_grid"], "sensing.config.tau_grid").tolist()
        cfg = _dataclass_from(SensingConfig, sc, "sensing.config", strict, warnings)
        block["config"] = cfg
    for key in ("t_grid", "x_grid", "b_drive_grid"):
        if block.get(key) is not None:
            block[key] = parse_grid(block[key], f"{task}.{key}")
    if block.get("powers") is not None:
        block["powers"] = parse_grid(block["powers"], f"{task}.powers")
    if task == "sequence":
        runs = block["runs"]
        if not isinstance(runs, list) or not runs:
            raise ConfigError("runs must be a non-empty list", "sequence.runs")
        resolved = []
        for i, r in enumerate(runs):
            p = f"sequence.runs[{i}]"
            r = _check_keys(r, ("label", "n", "t2", "alpha"), p, strict, warnings)
            n = r.get("n", 1)
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ConfigError(f"n = {n!r} must be a positive integer", f"{p}.n")
            t2 = _number(r.get("t2", 1.0), f"{p}.t2")
            alpha = _number(r.get("alpha", 1.0), f"{p}.alpha")
            if t2 <= 0 or alpha <= 0:
                raise ConfigError("t2 and alpha must be > 0", p)
            resolved.append({"label": str(r.get("label", f"cpmg{n}")), "n": n, "t2": t2, "alpha": alpha})
        block["runs"] = resolved
    if task == "odmr_map" and block["panels"] is not None:
        panels = []
        for i, pnl in enumerate(block["panels"]):
            p = f"odmr_map.panels[{i}]"
            pnl = _check_keys(pnl, ("theta", "power"), p, strict, warnings)
            panels.append({"theta": _number(pnl.get("theta", 0.0), f"{p}.theta"),
                           "power": _number(pnl.get("power", 0.04), f"{p}.power")})
        block["panels"] = panels
    if task == "odmr_map" and block["match_power"] is not None:
        m = _check_keys(block["match_power"], ("theta", "reference", "p_max"), "odmr_map.match_power",
                        strict, warnings)
        block["match_power"] = {"theta": _number(m.get("theta", math.pi), "odmr_map.match_power.theta"),
                                "reference": int(m.get("reference", 0)),
                                "p_max": _number(m.get("p_max", 1000.0), "odmr_map.match_power.p_max")}
    return block


def load_config(data: dict, task: str | None = None, strict: bool = True) -> ScenarioConfig:
    """Validate a decoded scenario and apply defaults.

    ``task`` (from the command line) fills in an empty task block when the
    file has none and must agree with the file's block otherwise.
    """
    warnings: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    data = _check_keys(data, TOP_KEYS, "", strict, warnings)
    blocks = [t for t in TASKS if t in data]
    declared = data.get("task")
    if declared is not None and declared not in TASKS:
        raise _unknown(str(declared), TASKS, "task")
    if len(blocks) > 1:
        raise ConfigError(f"exactly one task block allowed, found {blocks}")
    chosen = blocks[0] if blocks else (declared or task)
    for other in (declared, task):
        if other is not None and chosen is not None and other != chosen:
            raise ConfigError(f"task '{other}' does not match the '{chosen}' block", "task")
    if chosen is None:
        raise ConfigError("no task block and no task given")

    params = _dataclass_from(MaterialParams, data.get("material"), "material", strict, warnings)
    geometry = _dataclass_from(DeviceGeometry, data.get("geometry"), "geometry", strict, warnings)
    models_raw = _check_keys(data.get("models", {}) or {}, MODEL_SECTIONS, "models", strict, warnings)
    models = {k: _dataclass_from(cls, models_raw.get(k), f"models.{k}", strict, warnings)
              for k, cls in MODEL_SECTIONS.items()}
    system = HybridSystem(params, geometry, models["spin_wave"], models["odmr"],
                          models["coupling"], models["rabi"])

    fld = _section(data, "field", strict, warnings)
    _number(fld["b_ext"], "field.b_ext")
    _number(fld["theta"], "field.theta")
    if fld["b_grid"] is not None:
        fld["b_grid"] = parse_grid(fld["b_grid"], "field.b_grid")
    drv = _section(data, "drive", strict, warnings)
    for k in ("power", "frequency", "impedance"):
        _number(drv[k], f"drive.{k}")
    if drv["f_grid"] is not None:
        drv["f_grid"] = parse_grid(drv["f_grid"], "drive.f_grid")
    nvs = _section(data, "nv", strict, warnings)
    if nvs["theta_nv"] is not None:
        th = nvs["theta_nv"] if isinstance(nvs["theta_nv"], list) else [nvs["theta_nv"]]
        nvs["theta_nv"] = [_number(v, f"nv.theta_nv[{i}]") for i, v in enumerate(th)]
    n = nvs["ensemble"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"ensemble = {n!r} must be a positive integer", "nv.ensemble")

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed = {seed!r} must be a non-negative integer", "seed")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a string", "output")

    block = _resolve_block(chosen, data.get(chosen), strict, warnings)
    return ScenarioConfig(chosen, system, fld, drv, nvs, block, seed, output, warnings)


def parse_config(path, task: str | None = None, strict: bool = True) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return load_config(data, task, strict)
