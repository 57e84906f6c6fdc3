"""Rate model of remote spin sensing through a magnonic cavity.

Target spins driven at their own Rabi frequency pump a single cavity mode
when that Rabi frequency matches the mode frequency. The cavity leaks spin
waves down a waveguide to an NV, whose Rabi frequency then encodes
(number of targets) x (single-target coupling). The whole chain is a
conceptual formalisation with placeholder defaults, not a device model; in
particular only the product ``n_targets * g_single`` is observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import least_squares

from .core import (
    FieldConfig,
    HybridSimError,
    InsufficientDataError,
    MaterialParams,
    ValidationError,
    _Serializable,
)
from . import magnonics
from .dynamics import DecoherenceParams, rabi_frequency, rabi_trace
from .nv import NVConfig, transition_frequencies


class ConfigurationError(HybridSimError, ValueError):
    """Sensing setup is inconsistent (cavity not resonant with the NV or outside the band)."""


@dataclass(frozen=True)
class SensingConfig(_Serializable):
    """Protocol settings. Rates in MHz (= 1/us), fields in gauss, times in us.

    ``field_per_amplitude`` converts a unit cavity amplitude into the leak
    field at the waveguide entrance; ``waveguide_length`` sets its
    propagation loss through the spin-wave decay length.
    """

    gamma_target: float = 2.8024
    n_targets: float = 100.0
    f_cavity: float = 2463.652
    kappa: float = 1.0
    g_single: float = 0.01
    b_drive: float = 1758.244
    pump_time: float = 20.0
    tau_grid: tuple = tuple(np.linspace(0.0, 4.0, 401).tolist())
    bias_field: float = 145.0
    field_per_amplitude: float = 1.0
    waveguide_length: float = 200.0
    resonance_tolerance: float = 1.0

    def __post_init__(self):
        name = type(self).__name__
        for f in ("gamma_target", "f_cavity", "kappa", "g_single", "pump_time", "bias_field",
                  "field_per_amplitude", "resonance_tolerance"):
            v = getattr(self, f)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name}.{f} = {v!r} must be > 0")
        for f in ("n_targets", "b_drive", "waveguide_length"):
            v = getattr(self, f)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name}.{f} = {v!r} must be >= 0")
        tau = np.asarray(self.tau_grid, dtype=float)
        if tau.ndim != 1 or tau.size < 2 or np.any(tau < 0) or np.any(np.diff(tau) <= 0):
            raise ValidationError(f"{name}.tau_grid must be increasing, non-negative, >= 2 points")
        object.__setattr__(self, "tau_grid", tuple(float(x) for x in tau))


@dataclass
class SensingTrace:
    tau_grid: np.ndarray
    nv_population: np.ndarray = dc_field(repr=False)
    inferred_rabi: float = 0.0
    predicted_rabi: float = 0.0


def target_rabi(cfg: SensingConfig) -> float:
    """Target-spin Rabi frequency gamma_target b_drive / 2 (spin-1/2, linear drive)."""
    return cfg.gamma_target * cfg.b_drive / 2.0


def matching_filter(detuning, kappa: float):
    """Peak-normalised Lorentzian of half width ``kappa``."""
    d = np.asarray(detuning, dtype=float)
    return kappa * kappa / (kappa * kappa + d * d)


def cavity_amplitude(cfg: SensingConfig, pump_time: float | None = None) -> float:
    """(N g / kappa) L(Omega_t - f_cavity) (1 - exp(-kappa t))."""
    t = cfg.pump_time if pump_time is None else pump_time
    match = float(matching_filter(target_rabi(cfg) - cfg.f_cavity, cfg.kappa))
    return cfg.n_targets * cfg.g_single / cfg.kappa * match * -math.expm1(-cfg.kappa * t)


def waveguide_transmission(cfg: SensingConfig, params: MaterialParams) -> float:
    """Amplitude transmission exp(-length / L) of the cavity mode along the waveguide."""
    field = FieldConfig(cfg.bias_field, 0.0)
    k = magnonics.desw_wavevector(cfg.f_cavity, field, params)
    if not np.isfinite(k):
        lo = magnonics.kittel_frequency(cfg.bias_field, params)
        hi = magnonics.surface_limit(cfg.bias_field, params)
        raise ConfigurationError(
            f"f_cavity = {cfg.f_cavity} MHz lies outside the surface-wave band ({lo:.1f}, {hi:.1f}) MHz "
            f"at {cfg.bias_field} G")
    if cfg.waveguide_length == 0:
        return 1.0
    L = magnonics.decay_length(magnonics.ModeKind.DESW, k, field, params)
    return math.exp(-cfg.waveguide_length / L)


def nv_rabi(cfg: SensingConfig, params: MaterialParams) -> float:
    """NV Rabi frequency (MHz) produced by the cavity leakage."""
    b = cfg.field_per_amplitude * cavity_amplitude(cfg) * waveguide_transmission(cfg, params)
    return rabi_frequency(b, params)


def _check_resonance(cfg: SensingConfig, nv: NVConfig, params: MaterialParams) -> None:
    lo, up = transition_frequencies(nv, params)
    if min(abs(lo - cfg.f_cavity), abs(up - cfg.f_cavity)) > cfg.resonance_tolerance:
        raise ConfigurationError(
            f"cavity at {cfg.f_cavity} MHz is not within {cfg.resonance_tolerance} MHz of the NV "
            f"transitions ({lo:.3f}, {up:.3f}) MHz")


def fit_rabi(tau, population, decay_time: float = math.inf) -> float:
    """Rabi frequency of a resonant trace 1 - sin^2(pi W t) exp(-t / T) with T known.

    Seeded from the FFT peak, refined on a local grid, then polished by least squares.
    """
    t = np.asarray(tau, dtype=float)
    y = np.asarray(population, dtype=float)
    dip = 1.0 - y
    if np.max(np.abs(dip)) < 1e-12:
        return 0.0
    dt = float(np.mean(np.diff(t)))
    n = 8 * t.size
    power = np.abs(np.fft.rfft(dip - dip.mean(), n))
    freqs = np.fft.rfftfreq(n, dt)
    w0 = float(freqs[1 + int(np.argmax(power[1:]))])
    env = np.exp(-t / decay_time)

    def resid(p):
        return np.sin(math.pi * p[0] * t) ** 2 * env - dip

    span = 2.0 / (t[-1] - t[0])
    cands = np.linspace(max(w0 - span, 1e-9), w0 + span, 401)
    costs = [float(np.sum(resid([w]) ** 2)) for w in cands]
    w1 = float(cands[int(np.argmin(costs))])
    sol = least_squares(resid, [w1], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(abs(sol.x[0]))


def run_protocol(cfg: SensingConfig, nv: NVConfig, dec: DecoherenceParams | None = None,
                 params: MaterialParams | None = None) -> SensingTrace:
    """NV population after interacting with the cavity leakage for each tau."""
    params = params or MaterialParams()
    dec = dec or DecoherenceParams()
    _check_resonance(cfg, nv, params)
    omega = nv_rabi(cfg, params)
    tau = np.asarray(cfg.tau_grid)
    pop = rabi_trace(omega, 0.0, tau, dec)
    inferred = fit_rabi(tau, pop, dec.rabi_decay_time)
    return SensingTrace(tau, pop, inferred, omega)


def estimate_concentration(trace: SensingTrace, cfg: SensingConfig,
                           params: MaterialParams | None = None) -> float:
    """Number of target spins implied by the trace's Rabi frequency.

    Only N * g_single is determined; the estimate assumes ``cfg.g_single``.
    """
    if trace.inferred_rabi == 0.0:
        return 0.0
    tau = np.asarray(trace.tau_grid)
    span = tau[-1] - tau[0]
    if trace.inferred_rabi * span < 1.0:
        raise InsufficientDataError(
            f"trace spans {trace.inferred_rabi * span:.2f} Rabi periods; need at least one")
    if trace.inferred_rabi * float(np.max(np.diff(tau))) > 0.25:
        raise InsufficientDataError("trace samples fewer than 4 points per Rabi period")
    per_target = nv_rabi(cfg.replace(n_targets=1.0), params or MaterialParams())
    return trace.inferred_rabi / per_target


def matching_sweep(cfg: SensingConfig, b_drive_grid, params: MaterialParams) -> np.ndarray:
    """NV Rabi frequency against the target drive field."""
    return np.array([nv_rabi(cfg.replace(b_drive=float(b)), params) for b in b_drive_grid])


def species_response(cfg: SensingConfig, species, b_drive_grid, params: MaterialParams) -> np.ndarray:
    """NV Rabi frequency against drive field for a mix of target species.

    ``species`` is a sequence of (gamma_target, n_targets) pairs whose cavity
    pumping adds linearly.
    """
    out = np.zeros(len(b_drive_grid))
    for gamma, n in species:
        out += matching_sweep(cfg.replace(gamma_target=gamma, n_targets=n), b_drive_grid, params)
    return out


def matching_drive_field(cfg: SensingConfig) -> float:
    """Drive field at which the target Rabi frequency equals the cavity frequency."""
    return 2.0 * cfg.f_cavity / cfg.gamma_target
