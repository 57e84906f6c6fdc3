"""NV ground-state spin: Hamiltonian, transitions, ensembles and ODMR maps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .core import (
    DriveConfig,
    FieldConfig,
    HybridSystem,
    MaterialParams,
    NotFoundError,
    ODMRModel,
    ValidationError,
)
from . import magnonics

_S = 1.0 / math.sqrt(2.0)
SX = np.array([[0, _S, 0], [_S, 0, _S], [0, _S, 0]], dtype=complex)
SY = np.array([[0, -1j * _S, 0], [1j * _S, 0, -1j * _S], [0, 1j * _S, 0]], dtype=complex)
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
IDENTITY = np.eye(3, dtype=complex)


@dataclass(frozen=True)
class SpinOperators:
    """Spin-1 operators in the |+1>, |0>, |-1> basis."""

    sx: np.ndarray = dc_field(default_factory=lambda: SX.copy())
    sy: np.ndarray = dc_field(default_factory=lambda: SY.copy())
    sz: np.ndarray = dc_field(default_factory=lambda: SZ.copy())
    identity: np.ndarray = dc_field(default_factory=lambda: IDENTITY.copy())


@dataclass(frozen=True)
class NVConfig:
    """One NV centre: axis polar angle to the bias field (rad), azimuth, field in gauss."""

    theta_nv: float
    b_ext: float
    phi_nv: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta_nv) and 0 <= self.theta_nv <= math.pi):
            raise ValidationError(f"NVConfig.theta_nv = {self.theta_nv!r} must be in [0, pi]")
        if not (math.isfinite(self.b_ext) and self.b_ext >= 0):
            raise ValidationError(f"NVConfig.b_ext = {self.b_ext!r} must be >= 0")

    @classmethod
    def from_axis(cls, axis, b_ext: float) -> "NVConfig":
        """NV whose symmetry axis is ``axis`` in a frame with the bias field along z."""
        v = np.asarray(axis, dtype=float)
        n = np.linalg.norm(v)
        if not n > 0:
            raise ValidationError("NV axis must be a non-zero vector")
        v = v / n
        return cls(float(np.arccos(np.clip(v[2], -1.0, 1.0))), b_ext, float(np.arctan2(v[1], v[0])))

    @property
    def orientation(self) -> np.ndarray:
        st = math.sin(self.theta_nv)
        return np.array([st * math.cos(self.phi_nv), st * math.sin(self.phi_nv), math.cos(self.theta_nv)])


@dataclass
class ODMRMap:
    b_grid: np.ndarray
    f_grid: np.ndarray
    contrast: np.ndarray = dc_field(repr=False)


def hamiltonian(nv: NVConfig, params: MaterialParams) -> np.ndarray:
    """H = D Sz^2 + gamma_e B . S in the NV frame, in MHz."""
    b = params.gamma_e * nv.b_ext
    bx = b * math.sin(nv.theta_nv) * math.cos(nv.phi_nv)
    by = b * math.sin(nv.theta_nv) * math.sin(nv.phi_nv)
    bz = b * math.cos(nv.theta_nv)
    return params.d_zfs * SZ @ SZ + bx * SX + by * SY + bz * SZ


def _stacked_hamiltonians(theta_nv: np.ndarray, b_ext: float, params: MaterialParams) -> np.ndarray:
    # azimuth drops out of the spectrum, so phi = 0 here
    b = params.gamma_e * b_ext
    th = np.asarray(theta_nv, dtype=float)
    h = np.zeros(th.shape + (3, 3))
    h[..., 0, 0] = params.d_zfs + b * np.cos(th)
    h[..., 2, 2] = params.d_zfs - b * np.cos(th)
    off = b * np.sin(th) * _S
    h[..., 0, 1] = h[..., 1, 0] = off
    h[..., 1, 2] = h[..., 2, 1] = off
    return h


def transition_frequencies(nv: NVConfig, params: MaterialParams) -> tuple[float, float]:
    """(f_lower, f_upper) in MHz, measured from the lowest eigenstate."""
    e = np.linalg.eigvalsh(hamiltonian(nv, params))
    return float(e[1] - e[0]), float(e[2] - e[0])


def transition_table(theta_nv, b_ext: float, params: MaterialParams) -> np.ndarray:
    """Vectorised transitions: array of shape theta_nv.shape + (2,)."""
    e = np.linalg.eigvalsh(_stacked_hamiltonians(theta_nv, b_ext, params))
    return np.stack([e[..., 1] - e[..., 0], e[..., 2] - e[..., 0]], axis=-1)


def f_lower(theta_nv: float, b_ext: float, params: MaterialParams) -> float:
    return float(transition_table(theta_nv, b_ext, params)[0])


@dataclass(frozen=True)
class OrientationMatch:
    theta_nv: float
    frequency: float
    residual: float


def find_matching_orientation(f_target: float, b_low: float, b_high: float,
                              params: MaterialParams, n_scan: int = 181,
                              tol: float = 1e-9) -> OrientationMatch:
    """NV polar angle whose lower transition is equal at ``b_low`` and ``b_high``.

    The residual f_lower(b_high) - f_lower(b_low) is scanned over [0, pi/2],
    each sign change is refined with Brent's method, and the root whose
    common frequency lies closest to ``f_target`` is returned.
    """
    if not b_low < b_high:
        raise ValidationError(f"need b_low < b_high, got {b_low!r}, {b_high!r}")

    def resid(th):
        return f_lower(th, b_high, params) - f_lower(th, b_low, params)

    grid = np.linspace(0.0, math.pi / 2, n_scan)
    r = np.array([resid(t) for t in grid])
    roots = []
    for i in range(n_scan - 1):
        if r[i] == 0.0:
            roots.append(grid[i])
        elif r[i] * r[i + 1] < 0:
            roots.append(brentq(resid, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    if r[-1] == 0.0:
        roots.append(grid[-1])
    if not roots:
        raise NotFoundError(
            f"no orientation in [0, pi/2] gives equal lower transitions at {b_low} G and {b_high} G",
            residuals=np.column_stack([grid, r]),
        )
    best = min(roots, key=lambda t: abs(f_lower(t, b_low, params) - f_target))
    return OrientationMatch(float(best), f_lower(best, b_low, params), abs(resid(best)))


def ensemble_orientations(n: int, seed: int) -> np.ndarray:
    """``n`` unit vectors uniform on the sphere, shape (n, 3)."""
    if not (isinstance(n, (int, np.integer)) and n > 0):
        raise ValidationError(f"ensemble size n = {n!r} must be a positive integer")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def polar_angles(orientations) -> np.ndarray:
    """Polar angle of each axis from the bias direction (z)."""
    v = np.atleast_2d(np.asarray(orientations, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return np.arccos(np.clip(v[:, 2], -1.0, 1.0))


def dip(omega, delta, model: ODMRModel):
    """Saturation-broadened Lorentzian contrast of one driven transition."""
    w2 = np.asarray(omega, dtype=float) ** 2
    return model.c_max * w2 / (w2 + model.linewidth ** 2 + model.saturation * np.asarray(delta) ** 2)


def odmr_spectrum(theta_nv, b_ext: float, f_grid, b_drive_at_nd, params: MaterialParams,
                  model: ODMRModel | None = None, quench=1.0) -> np.ndarray:
    """Ensemble ODMR contrast over ``f_grid``.

    ``b_drive_at_nd`` (gauss) and ``quench`` may be scalars or arrays over the
    grid. Dips of one NV's two branches combine as independent saturable
    channels, ``c_max (1 - prod(1 - c_i / c_max))``, and NVs are averaged with
    a sorted reduction so the result does not depend on ensemble order. The
    quench factor Q mixes in a broad feature: ``Q c_res + c_max (1 - Q)``.
    """
    from .dynamics import rabi_frequency

    model = model or ODMRModel()
    f = np.asarray(f_grid, dtype=float)
    th = np.atleast_1d(np.asarray(theta_nv, dtype=float))
    trans = transition_table(th, b_ext, params)  # (n, 2)
    omega = np.broadcast_to(rabi_frequency(np.asarray(b_drive_at_nd, dtype=float), params), f.shape)
    keep = np.ones((th.size, f.size))
    for branch in (0, 1):
        c = dip(omega[None, :], f[None, :] - trans[:, branch, None], model)
        keep *= 1.0 - c / model.c_max
    per_nv = model.c_max * (1.0 - keep)
    c_res = np.sort(per_nv, axis=0).sum(axis=0) / th.size
    q = np.broadcast_to(np.asarray(quench, dtype=float), f.shape)
    return q * c_res + model.c_max * (1.0 - q)


def noise_density(f_grid, field: FieldConfig, system: HybridSystem) -> np.ndarray:
    """Weighted count of ladder modes within the noise bandwidth of each frequency.

    Each mode counts with its excitation efficiency, stray-field reach to the
    nanodiamond height and propagation loss over the lateral distance.
    """
    f = np.asarray(f_grid, dtype=float)
    lad = magnonics.ladder(field, system.params, system.geometry, system.spin_wave)
    if len(lad) == 0:
        return np.zeros_like(f)
    with np.errstate(under="ignore"):
        w = (lad.efficiency * lad.stray(system.geometry.nd_z, system.params)
             * np.exp(-system.geometry.nd_x / lad.decay_length))
    near = np.abs(f[:, None] - lad.frequency[None, :]) < 0.5 * system.odmr.noise_bandwidth
    return (near * w[None, :]).sum(axis=1)


def quench_factor(f, field: FieldConfig, power: float, system: HybridSystem):
    """Q = 1 / (1 + c_q P rho(f, B)); exactly 1 at zero power or with no nearby modes."""
    if not (math.isfinite(power) and power >= 0):
        raise ValidationError(f"power = {power!r} mW must be >= 0")
    rho = noise_density(np.atleast_1d(f), field, system)
    q = 1.0 / (1.0 + system.odmr.quench_coeff * power * rho)
    return float(q[0]) if np.ndim(f) == 0 else q


def drive_at_nd(f_grid, field: FieldConfig, drive: DriveConfig, system: HybridSystem,
                ferromagnet: bool = True) -> np.ndarray:
    """Total drive amplitude (gauss) at the nanodiamond for each probe frequency."""
    from .coupling import antenna_field, sw_amplitude_spectrum

    f = np.asarray(f_grid, dtype=float)
    amp = np.full(f.shape, antenna_field(drive, system.geometry))
    if ferromagnet:
        amp = amp + sw_amplitude_spectrum(f, drive.power, field, system)
    m = system.odmr
    if m.msl_rolloff > 0:
        amp = amp * np.exp(-m.msl_rolloff * np.clip(f - m.rolloff_ref, 0.0, None) / 1000.0)
    return amp


def odmr_row(b_ext: float, f_grid, theta: float, power: float, theta_nv, system: HybridSystem,
             impedance: float = 50.0, ferromagnet: bool = True) -> np.ndarray:
    f = np.asarray(f_grid, dtype=float)
    field = FieldConfig(b_ext, theta)
    drive = DriveConfig(power, float(f[0]) if f.size else 1.0, impedance)
    b_nd = drive_at_nd(f, field, drive, system, ferromagnet)
    q = quench_factor(f, field, power, system) if ferromagnet else 1.0
    return odmr_spectrum(theta_nv, b_ext, f, b_nd, system.params, system.odmr, q)


def odmr_map(b_grid, f_grid, theta: float, power: float, theta_nv, system: HybridSystem,
             impedance: float = 50.0, ferromagnet: bool = True, threads: int = 1) -> ODMRMap:
    """Field-frequency ODMR map for one field angle and microwave power.

    ``ferromagnet=False`` removes the spin-wave channel and its noise, leaving
    only the antenna near field.
    """
    b = magnonics._check_grid("b_grid", b_grid)
    f = magnonics._check_grid("f_grid", f_grid)

    def row(bi):
        return odmr_row(bi, f, theta, power, theta_nv, system, impedance, ferromagnet)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(row, b))
    else:
        rows = [row(bi) for bi in b]
    return ODMRMap(b, f, np.vstack(rows))


def onset_field(m: ODMRMap, threshold: float) -> float | None:
    """Lowest bias field whose row has any contrast at or above ``threshold``."""
    hit = np.flatnonzero(m.contrast.max(axis=1) >= threshold)
    return float(m.b_grid[hit[0]]) if hit.size else None


def integrated_contrast(m: ODMRMap) -> float:
    return float(trapezoid(trapezoid(m.contrast, m.f_grid, axis=1), m.b_grid))
