"""Coherent driving of one NV transition in the rotating frame.

Each addressed transition is reduced to a two-level system. Frequencies are
ordinary frequencies in MHz and times in us, so a rotation by angle
2 pi * Omega * t corresponds to a pulse of duration t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    TWO_PI,
    FitError,
    HybridSystem,
    MaterialParams,
    ValidationError,
)


@dataclass(frozen=True)
class Pulse:
    axis: str
    rabi_frequency: float
    duration: float

    def __post_init__(self):
        if self.axis not in ("x", "y", "-x", "-y"):
            raise ValidationError(f"pulse axis {self.axis!r} must be one of x, y, -x, -y")
        if not self.duration >= 0:
            raise ValidationError(f"pulse duration {self.duration!r} must be >= 0")
        if not self.rabi_frequency >= 0:
            raise ValidationError(f"pulse rabi_frequency {self.rabi_frequency!r} must be >= 0")

    @property
    def phase(self) -> float:
        return {"x": 0.0, "y": 0.5 * math.pi, "-x": math.pi, "-y": 1.5 * math.pi}[self.axis]


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValidationError(f"delay duration {self.duration!r} must be >= 0")


Element = Union[Pulse, Delay]


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ValidationError("a pulse sequence needs at least one element")
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def free_time(self) -> float:
        return sum(e.duration for e in self.elements if isinstance(e, Delay))


@dataclass(frozen=True)
class DecoherenceParams:
    """Echo envelope exp(-(t / t2)^stretch_exponent) and Rabi envelope time, in us."""

    t2: float = math.inf
    stretch_exponent: float = 1.0
    rabi_decay_time: float = math.inf

    def __post_init__(self):
        if not self.t2 > 0:
            raise ValidationError(f"t2 = {self.t2!r} must be > 0")
        if not 0 < self.stretch_exponent <= 4:
            raise ValidationError(f"stretch_exponent = {self.stretch_exponent!r} must be in (0, 4]")
        if not self.rabi_decay_time > 0:
            raise ValidationError(f"rabi_decay_time = {self.rabi_decay_time!r} must be > 0")

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        if math.isinf(self.t2):
            return np.ones_like(t)
        return np.exp(-((t / self.t2) ** self.stretch_exponent))


def rabi_frequency(b_perp, params: MaterialParams):
    """Rabi frequency gamma_e b_perp / sqrt(2) in MHz for a linear drive of b_perp gauss."""
    b = np.asarray(b_perp, dtype=float)
    if np.any(b < 0):
        raise ValidationError("drive amplitude b_perp must be >= 0")
    out = params.gamma_e * b / math.sqrt(2.0)
    return float(out) if out.ndim == 0 else out


def rabi_trace(omega: float, detuning: float, t_grid, dec: DecoherenceParams | None = None) -> np.ndarray:
    """Population left in the initial state during a square drive.

    P(t) = 1 - (Omega^2 / Omega_eff^2) sin^2(pi Omega_eff t) exp(-t / rabi_decay_time).
    """
    dec = dec or DecoherenceParams()
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValidationError("t_grid must be sorted and non-negative")
    eff2 = omega * omega + detuning * detuning
    if eff2 == 0:
        return np.ones_like(t)
    env = np.exp(-t / dec.rabi_decay_time)
    return 1.0 - (omega * omega / eff2) * np.sin(math.pi * math.sqrt(eff2) * t) ** 2 * env


def _rotate(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    # Rodrigues rotation of a Bloch vector
    n = np.linalg.norm(axis)
    if n == 0 or angle == 0:
        return v
    k = axis / n
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1 - c)


def pulse_rotation(pulse: Pulse, detuning: float) -> tuple[np.ndarray, float]:
    """Rotation axis and angle of a square pulse in the rotating frame."""
    w = np.array([pulse.rabi_frequency * math.cos(pulse.phase),
                  pulse.rabi_frequency * math.sin(pulse.phase),
                  detuning])
    return w, TWO_PI * float(np.linalg.norm(w)) * pulse.duration


def evolve_bloch(seq: PulseSequence, detuning: float = 0.0,
                 dec: DecoherenceParams | None = None) -> np.ndarray:
    """Final Bloch vector starting from the initial state (0, 0, 1).

    Free evolution precesses about z at the detuning and shrinks the transverse
    components by env(t_acc + dt) / env(t_acc), where t_acc is the free time
    already spent. The product over all delays is the envelope at the total
    free time, whatever the exponent.
    """
    dec = dec or DecoherenceParams()
    v = np.array([0.0, 0.0, 1.0])
    t_acc = 0.0
    for el in seq.elements:
        if isinstance(el, Pulse):
            axis, angle = pulse_rotation(el, detuning)
            v = _rotate(v, axis, angle)
        else:
            v = _rotate(v, np.array([0.0, 0.0, 1.0]), TWO_PI * detuning * el.duration)
            e0 = float(dec.envelope(t_acc))
            t_acc += el.duration
            e1 = float(dec.envelope(t_acc))
            shrink = e1 / e0 if e0 > 0 else 0.0
            v = np.array([v[0] * shrink, v[1] * shrink, v[2]])
    return v


def evolve_sequence(seq: PulseSequence, detuning: float = 0.0,
                    dec: DecoherenceParams | None = None) -> float:
    """Population of the flipped state after the sequence (1 after an ideal pi pulse)."""
    return 0.5 * (1.0 - float(evolve_bloch(seq, detuning, dec)[2]))


def echo_amplitude(seq: PulseSequence, detuning: float = 0.0,
                   dec: DecoherenceParams | None = None) -> float:
    """Readout contrast relative to the same sequence without decoherence."""
    ideal = evolve_bloch(seq, detuning)[2]
    if abs(ideal) < 1e-12:
        raise ValidationError("sequence maps the state onto the equator; echo amplitude undefined")
    return float(evolve_bloch(seq, detuning, dec)[2] / ideal)


def hahn_sequence(free_time: float, omega: float) -> PulseSequence:
    """pi/2 - tau - pi - tau - pi/2 with total free time ``free_time``."""
    half = 1.0 / (4.0 * omega)
    tau = 0.5 * free_time
    return PulseSequence((Pulse("x", omega, half), Delay(tau), Pulse("x", omega, 2 * half),
                          Delay(tau), Pulse("x", omega, half)))


def cpmg_sequence(n: int, free_time: float, omega: float) -> PulseSequence:
    """CPMG-n: pi/2_x - (tau - pi_y - tau)^n - pi/2_x; total free time 2 n tau."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError(f"CPMG pulse count n = {n!r} must be >= 1")
    half = 1.0 / (4.0 * omega)
    tau = free_time / (2 * n)
    els: list = [Pulse("x", omega, half)]
    for _ in range(n):
        els += [Delay(tau), Pulse("y", omega, 2 * half), Delay(tau)]
    els.append(Pulse("x", omega, half))
    return PulseSequence(tuple(els))


def cpmg_trace(n: int, t_grid, dec: DecoherenceParams, omega: float = 10.0,
               detuning: float = 0.0) -> np.ndarray:
    """Renormalised CPMG-n echo amplitude against total free time."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValidationError("t_grid must be sorted and non-negative")
    amp = np.array([echo_amplitude(cpmg_sequence(n, ti, omega), detuning, dec) for ti in t])
    ref = echo_amplitude(cpmg_sequence(n, 0.0, omega), detuning, dec)
    return amp / ref


def hahn_trace(t_grid, dec: DecoherenceParams, omega: float = 10.0, detuning: float = 0.0) -> np.ndarray:
    """Renormalised Hahn-echo amplitude; identical to ``cpmg_trace(1, ...)``."""
    return cpmg_trace(1, t_grid, dec, omega, detuning)


@dataclass(frozen=True)
class EnvelopeFit:
    t2: float
    alpha: float
    residual: float
    iterations: int


def stretched_exp(t, t2: float, alpha: float) -> np.ndarray:
    return np.exp(-((np.asarray(t, dtype=float) / t2) ** alpha))


def _seed_envelope(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    # ln(-ln y) = alpha ln t - alpha ln t2
    ok = (t > 0) & (y < 1.0 - 1e-12) & (y > 1e-300)
    if ok.sum() < 2:
        raise FitError("signal shows no decay; stretched exponential is undetermined")
    lt = np.log(t[ok])
    ll = np.log(-np.log(y[ok]))
    if np.ptp(lt) == 0:
        raise FitError("all decaying points share one time; cannot seed the fit")
    alpha, b = np.polyfit(lt, ll, 1)
    if not alpha > 0:
        alpha = 1.0
        b = float(np.mean(ll - lt))
    return float(math.exp(-b / alpha)), float(alpha)


def fit_envelope(t, signal, max_iter: int = 200, tol: float = 1e-12) -> EnvelopeFit:
    """Fit exp(-(t / t2)^alpha) to (t, signal) by damped Gauss-Newton.

    Seeded by linear regression of ln(-ln y) on ln t; parameters are iterated
    in (ln t2, ln alpha) so both stay positive.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValidationError("t and signal must be 1-D arrays of equal length")
    if t.size < 5:
        raise ValidationError(f"need >= 5 points to fit, got {t.size}")
    if np.any(y <= 0) or np.any(y > 1):
        raise ValidationError("signal values must lie in (0, 1]")
    if np.max(1.0 - y) < 1e-9:
        raise FitError("signal is constant; no decay to fit")

    t2, alpha = _seed_envelope(t, y)
    p = np.array([math.log(t2), math.log(alpha)])

    def resid(p):
        return stretched_exp(t, math.exp(p[0]), math.exp(p[1])) - y

    def jac(p):
        t2_, a = math.exp(p[0]), math.exp(p[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(t > 0, t / t2_, 1.0)
            xa = np.where(t > 0, x ** a, 0.0)
            lx = np.where(t > 0, np.log(x), 0.0)
        f = np.exp(-xa)
        # d f / d ln t2 = f * a * x^a ; d f / d ln a = -f * x^a * ln x * a
        return np.column_stack([f * a * xa, -f * xa * lx * a])

    lam = 1e-3
    r = resid(p)
    cost = float(r @ r)
    history = [cost]
    for it in range(1, max_iter + 1):
        J = jac(p)
        A = J.T @ J
        g = J.T @ r
        step = np.linalg.solve(A + lam * np.diag(np.diag(A) + 1e-300), -g)
        p_new = p + step
        r_new = resid(p_new)
        cost_new = float(r_new @ r_new)
        if cost_new <= cost:
            p, r = p_new, r_new
            converged = (np.max(np.abs(step)) < tol) or (cost - cost_new <= tol * tol * max(cost, 1e-300))
            cost = cost_new
            history.append(cost)
            lam = max(lam / 10.0, 1e-15)
            if converged or cost < 1e-30:
                return EnvelopeFit(math.exp(p[0]), math.exp(p[1]), math.sqrt(cost / t.size), it)
        else:
            lam *= 10.0
            if lam > 1e12:
                if np.max(np.abs(g)) < 1e-10:
                    return EnvelopeFit(math.exp(p[0]), math.exp(p[1]), math.sqrt(cost / t.size), it)
                break
    raise FitError(f"stretched-exponential fit did not converge in {max_iter} iterations", history)


@dataclass(frozen=True)
class PowerScaling:
    slope: float
    intercept: float
    r_squared: float
    powers: tuple
    rabi: tuple


def power_scaling_check(powers: Sequence[float], b_ext: float, frequency: float,
                        system: HybridSystem, theta: float = 0.0,
                        impedance: float = 50.0) -> PowerScaling:
    """Regress the Rabi frequency on sqrt(power) through the full drive chain."""
    from .coupling import total_drive_amplitude
    from .core import DriveConfig, FieldConfig

    p = np.asarray(powers, dtype=float)
    if len(np.unique(p)) < 3:
        raise ValidationError("power scaling needs at least 3 distinct powers")
    field = FieldConfig(b_ext, theta)
    omega = np.array([
        rabi_frequency(total_drive_amplitude(DriveConfig(pi, frequency, impedance), field, system),
                       system.params)
        for pi in p
    ])
    x = np.sqrt(p)
    slope, intercept = np.polyfit(x, omega, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((omega - fit) ** 2))
    ss_tot = float(np.sum((omega - omega.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return PowerScaling(float(slope), float(intercept), r2, tuple(p.tolist()), tuple(omega.tolist()))


def rabi_visible(omega: float, decay_time: float, min_cycles: float = 0.5) -> bool:
    """True when at least ``min_cycles`` Rabi periods fit inside the envelope time."""
    return omega * decay_time >= min_cycles
