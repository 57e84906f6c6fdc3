"""Microwave field at the nanodiamond: antenna near field and spin-wave stray field."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MU0,
    TESLA_TO_GAUSS,
    DeviceGeometry,
    DriveConfig,
    FieldConfig,
    HybridSystem,
    NotApplicableError,
    ValidationError,
    convert_power_to_current,
)
from . import magnonics
from .dynamics import rabi_frequency
from .nv import find_matching_orientation


class Channel(str, enum.Enum):
    ANTENNA = "antenna"
    SPIN_WAVE = "spin_wave"


@dataclass(frozen=True)
class DriveField:
    amplitude: float
    channel: Channel
    contributing_mode: magnonics.SWMode | None = None


def strip_field(current: float, x: float, z: float, width: float) -> float:
    """|B| in gauss of a thin current sheet of ``width`` um at lateral ``x``, height ``z`` (um).

    The sheet spans |x'| <= width / 2 at z' = 0 and carries ``current`` A.
    """
    a, b = x + 0.5 * width, x - 0.5 * width
    pref = MU0 * current / (2.0 * math.pi * width * 1e-6)
    bx = pref * (math.atan2(a, z) - math.atan2(b, z))
    bz = 0.5 * pref * math.log((a * a + z * z) / (b * b + z * z))
    return math.hypot(bx, bz) * TESLA_TO_GAUSS


def wire_field(current: float, r: float) -> float:
    """Thin-wire field mu0 I / (2 pi r) in gauss at distance ``r`` um."""
    return MU0 * current / (2.0 * math.pi * r * 1e-6) * TESLA_TO_GAUSS


def antenna_field(drive: DriveConfig, geometry: DeviceGeometry) -> float:
    """Antenna near field (gauss) at the nanodiamond from the finite-width strip."""
    x, z = geometry.nd_x, geometry.nd_z_um
    if abs(x) <= 0.5 * geometry.msl_width and z <= geometry.msl_thickness:
        raise ValidationError(
            f"point (x={x} um, z={z} um) lies inside the antenna cross-section")
    current = convert_power_to_current(drive.power, drive.impedance)
    if current == 0:
        return 0.0
    return strip_field(current, x, z, geometry.msl_width)


def _unit_mode_amplitudes(field: FieldConfig, system: HybridSystem):
    """Ladder and per-mode field per unit kappa per sqrt(mW) at the nanodiamond."""
    g = system.geometry
    lad = magnonics.ladder(field, system.params, g, system.spin_wave)
    if len(lad) == 0:
        return lad, np.zeros(0)
    with np.errstate(under="ignore"):
        amp = lad.efficiency * lad.stray(g.nd_z, system.params) * np.exp(-g.nd_x / lad.decay_length)
    return lad, amp


def _unit_sw_spectrum(f, field: FieldConfig, system: HybridSystem):
    f = np.asarray(f, dtype=float)
    lad, amp = _unit_mode_amplitudes(field, system)
    if len(lad) == 0:
        return np.zeros(f.shape), lad, np.zeros(f.shape + (0,))
    sw = system.spin_wave
    w = magnonics.tapered_lorentzian(f[..., None] - lad.frequency, sw.linewidth, sw.cutoff)
    # dense stretches of the ladder average rather than stack
    norm = np.maximum(1.0, w.sum(axis=-1, keepdims=True))
    contrib = w * amp / norm
    return contrib.sum(axis=-1), lad, contrib


@functools.lru_cache(maxsize=64)
def _calibrated_kappa(system: HybridSystem) -> float:
    c = system.coupling
    probe = HybridSystem(system.params, system.geometry, system.spin_wave, system.odmr,
                         c.replace(kappa_sw=1.0), system.rabi)
    ratio = _amplification(c.calibration_x, c.calibration_b_low, c.calibration_b_high,
                           c.calibration_frequency, probe).ratio
    return c.amplification_target / ratio


def kappa_sw(system: HybridSystem) -> float:
    """Spin-wave source scale in gauss per sqrt(mW), explicit or calibrated."""
    k = system.coupling.kappa_sw
    return k if k is not None else _calibrated_kappa(system)


def sw_amplitude_spectrum(f, power: float, field: FieldConfig, system: HybridSystem) -> np.ndarray:
    """Spin-wave drive amplitude (gauss) at the nanodiamond for each drive frequency.

    Each ladder mode contributes kappa sqrt(P) eta exp(-k z) exp(-x / L) times a
    tapered Lorentzian weight of the drive detuning, which vanishes
    continuously at the line-shape cutoff. Where the weights sum above one
    the contributions are weight-averaged instead of added.
    """
    if not power >= 0:
        raise ValidationError(f"power = {power!r} mW must be >= 0")
    unit, _, _ = _unit_sw_spectrum(f, field, system)
    if power == 0:
        return np.zeros_like(unit)
    return kappa_sw(system) * math.sqrt(power) * unit


def sw_drive_field(drive: DriveConfig, field: FieldConfig, system: HybridSystem) -> DriveField:
    """Spin-wave drive at the nanodiamond; zero amplitude when no mode is within the cutoff."""
    unit, lad, contrib = _unit_sw_spectrum(np.array(drive.frequency), field, system)
    if contrib.size == 0 or not np.any(contrib > 0):
        return DriveField(0.0, Channel.SPIN_WAVE, None)
    mode = lad.modes()[int(np.argmax(contrib))]
    amp = kappa_sw(system) * math.sqrt(drive.power) * float(unit)
    return DriveField(amp, Channel.SPIN_WAVE, mode)


def total_drive_amplitude(drive: DriveConfig, field: FieldConfig, system: HybridSystem,
                          ferromagnet: bool = True) -> float:
    amp = antenna_field(drive, system.geometry)
    if ferromagnet:
        amp += sw_drive_field(drive, field, system).amplitude
    return amp


@dataclass(frozen=True)
class Amplification:
    ratio: float
    theta_nv: float
    frequency: float
    decay_length: float
    mode_k: float


def _amplification(nd_x: float, b_low: float, b_high: float, f: float,
                   system: HybridSystem) -> Amplification:
    match = find_matching_orientation(f, b_low, b_high, system.params)
    sysx = system.with_geometry(nd_x=nd_x)
    unit = DriveConfig(1.0, match.frequency)
    low = sw_drive_field(unit, FieldConfig(b_low, 0.0), sysx)
    if low.amplitude > 0:
        raise NotApplicableError(
            f"spin waves are resonant at {b_low} G, {match.frequency:.1f} MHz; no pure antenna reference")
    high = sw_drive_field(unit, FieldConfig(b_high, 0.0), sysx)
    if high.amplitude == 0:
        raise NotApplicableError(
            f"no spin-wave mode within the line-shape cutoff of {match.frequency:.1f} MHz at {b_high} G")
    ant = antenna_field(unit, sysx.geometry)
    ratio = rabi_frequency(high.amplitude, system.params) / rabi_frequency(ant, system.params)
    mode = high.contributing_mode
    return Amplification(ratio, match.theta_nv, match.frequency, mode.decay_length, mode.k)


def amplification(nd_x: float, b_low: float, b_high: float, f: float, system: HybridSystem) -> float:
    """Spin-wave over antenna Rabi frequency per sqrt(power) at lateral distance ``nd_x``.

    The addressed transition is pinned by the NV orientation whose lower
    branch sits at the same frequency at ``b_low`` and ``b_high``.
    """
    return _amplification(nd_x, b_low, b_high, f, system).ratio


def amplification_details(nd_x: float, b_low: float, b_high: float, f: float,
                          system: HybridSystem) -> Amplification:
    return _amplification(nd_x, b_low, b_high, f, system)
