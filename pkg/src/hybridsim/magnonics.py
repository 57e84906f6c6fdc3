"""Magnetostatic spin waves in an in-plane magnetized thin film.

Damon-Eshbach (surface) and backward-volume dispersions, group velocity,
propagation loss, antenna k-filtering, stray-field decay above the film and
the two-antenna transmission map. Exchange is neglected throughout; for the
wave vectors a 5 um strip can launch the exchange shift is a few MHz at most.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import (
    THETA_BV,
    THETA_DE,
    THETA_DE_REVERSED,
    TWO_PI,
    DeviceGeometry,
    FieldConfig,
    MaterialParams,
    ModeFamilyError,
    NotApplicableError,
    SpinWaveModel,
    ValidationError,
    angle_is,
)


class ModeKind(str, enum.Enum):
    DESW = "DESW"
    BVMSW = "BVMSW"


class SurfaceSide(str, enum.Enum):
    NEAR = "near"
    FAR = "far"


@dataclass(frozen=True)
class SWMode:
    k: float
    frequency: float
    kind: ModeKind
    group_velocity: float
    decay_length: float
    efficiency: float
    surface_side: SurfaceSide


@dataclass
class TransmissionMap:
    b_grid: np.ndarray
    f_grid: np.ndarray
    s21: np.ndarray = dc_field(repr=False)


def mode_kind(field: FieldConfig) -> ModeKind:
    """Mode family launched for the field angle; only 0, pi/2, pi, 3pi/2 are modelled."""
    th = field.theta
    if angle_is(th, THETA_DE) or angle_is(th, THETA_DE_REVERSED):
        return ModeKind.DESW
    if angle_is(th, THETA_BV) or angle_is(th, 3 * THETA_BV):
        return ModeKind.BVMSW
    raise ModeFamilyError(f"theta = {th!r} rad: only 0, pi/2, pi, 3pi/2 are supported")


def surface_side(field: FieldConfig) -> SurfaceSide:
    return SurfaceSide.FAR if angle_is(field.theta, THETA_DE_REVERSED) else SurfaceSide.NEAR


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k < 0):
        raise ValidationError("wave vector k must be finite and >= 0")
    return k


def _maybe_scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def desw_frequency(k, field: FieldConfig, params: MaterialParams):
    """Damon-Eshbach surface-mode frequency in MHz.

    f(k)^2 = f_H (f_H + f_M) + (f_M^2 / 4) (1 - exp(-2 k d)).

    An unbiased film (``b_ext == 0``) is unsaturated and carries no modes;
    the frequency is reported as 0 there.
    """
    if mode_kind(field) is not ModeKind.DESW:
        raise ModeFamilyError("Damon-Eshbach modes need theta = 0 or pi")
    kk = _check_k(k)
    if field.b_ext == 0:
        return _maybe_scalar(np.zeros_like(kk), k)
    fh = params.f_h(field.b_ext)
    fm = params.f_m
    f2 = fh * (fh + fm) + 0.25 * fm * fm * -np.expm1(-2.0 * kk * params.thickness)
    return _maybe_scalar(np.sqrt(f2), k)


def _bv_shape(x):
    # (1 - exp(-x)) / x with its x -> 0 limit
    out = np.ones_like(x)
    nz = x > 0
    out[nz] = -np.expm1(-x[nz]) / x[nz]
    return out


def bvmsw_frequency(k, field: FieldConfig, params: MaterialParams):
    """Lowest backward-volume branch in MHz.

    f(k)^2 = f_H (f_H + f_M (1 - exp(-k d)) / (k d)).
    """
    if mode_kind(field) is not ModeKind.BVMSW:
        raise ModeFamilyError("backward-volume modes need theta = pi/2")
    kk = np.atleast_1d(_check_k(k))
    if field.b_ext == 0:
        return _maybe_scalar(np.zeros_like(kk).reshape(np.shape(k)), k)
    fh = params.f_h(field.b_ext)
    f2 = fh * (fh + params.f_m * _bv_shape(kk * params.thickness))
    return _maybe_scalar(np.sqrt(f2).reshape(np.shape(k)), k)


def dispersion(kind: ModeKind, k, field: FieldConfig, params: MaterialParams):
    if kind is ModeKind.DESW:
        return desw_frequency(k, field, params)
    return bvmsw_frequency(k, field, params)


def kittel_frequency(b_ext: float, params: MaterialParams) -> float:
    fh = params.f_h(b_ext)
    return math.sqrt(fh * (fh + params.f_m))


def surface_limit(b_ext: float, params: MaterialParams) -> float:
    """Large-k limit f_H + f_M / 2 of the surface-wave branch; 0 in an unsaturated film."""
    if b_ext == 0:
        return 0.0
    return params.f_h(b_ext) + 0.5 * params.f_m


def band_edges(field: FieldConfig, params: MaterialParams, k_max: float,
               k_min: float = 0.0) -> tuple[float, float]:
    """(f_min, f_max) in MHz of the dispersion over k in [k_min, k_max]."""
    if not k_max > 0:
        raise ValidationError(f"k_max = {k_max!r} must be > 0")
    if not 0 <= k_min <= k_max:
        raise ValidationError(f"k_min = {k_min!r} must be in [0, k_max]")
    kind = mode_kind(field)
    lo = dispersion(kind, k_min, field, params)
    hi = dispersion(kind, k_max, field, params)
    return (min(lo, hi), max(lo, hi))


def desw_wavevector(f, field: FieldConfig, params: MaterialParams):
    """Inverse of the Damon-Eshbach dispersion; NaN outside the open band."""
    f = np.asarray(f, dtype=float)
    fh = params.f_h(field.b_ext)
    fm = params.f_m
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (f * f - fh * (fh + fm)) / (0.25 * fm * fm)
        k = -np.log1p(-u) / (2.0 * params.thickness)
    k = np.where((u > 0) & (u < 1) & (field.b_ext > 0), k, np.nan)
    return float(k) if k.ndim == 0 else k


def group_velocity(kind: ModeKind, k, field: FieldConfig, params: MaterialParams,
                   rel_step: float = 1e-4):
    """Group velocity d(omega)/dk in m/s by central difference with step ``rel_step * k``.

    With f in MHz and k in rad/um, 2 pi df/dk comes out directly in m/s.
    """
    kk = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(kk)) or np.any(kk <= 0):
        raise ValidationError("group velocity needs k > 0 (the k = 0 end is a band edge)")
    h = rel_step * kk
    v = TWO_PI * _central_difference(kind, kk, h, field, params) / (2.0 * h)
    return _maybe_scalar(v, k)


def _central_difference(kind: ModeKind, k: np.ndarray, h: np.ndarray, field: FieldConfig,
                        params: MaterialParams) -> np.ndarray:
    # f(k+h) - f(k-h) = (f^2(k+h) - f^2(k-h)) / (f(k+h) + f(k-h)); the f^2 difference is
    # formed so the k-independent part cancels exactly instead of in floating point
    d = params.thickness
    fp = np.asarray(dispersion(kind, k + h, field, params), dtype=float)
    fm_ = np.asarray(dispersion(kind, k - h, field, params), dtype=float)
    if field.b_ext == 0:
        return np.zeros_like(fp)
    fh, fm = params.f_h(field.b_ext), params.f_m
    if kind is ModeKind.DESW:
        dg = 0.25 * fm * fm * np.exp(-2.0 * k * d) * 2.0 * np.sinh(2.0 * h * d)
    else:
        dg = fh * fm * (_bv_shape(np.atleast_1d((k + h) * d)) - _bv_shape(np.atleast_1d((k - h) * d)))
        dg = dg.reshape(np.shape(k))
    return dg / (fp + fm_)


def decay_length(kind: ModeKind, k, field: FieldConfig, params: MaterialParams,
                 rel_step: float = 1e-4):
    """Amplitude decay length in um, |v_g| / (alpha omega)."""
    f = np.asarray(dispersion(kind, k, field, params), dtype=float)
    if np.any(f <= 0):
        raise NotApplicableError("decay length undefined for a zero-frequency mode")
    v = np.abs(np.asarray(group_velocity(kind, k, field, params, rel_step)))
    # v [m/s] / (alpha * 2 pi f [MHz]) is already in um
    return _maybe_scalar(v / (params.alpha_gilbert * TWO_PI * f), k)


def excitation_efficiency(k, geometry: DeviceGeometry, field: FieldConfig,
                          model: SpinWaveModel | None = None):
    """Antenna k-filter |sin(k w / 2) / (k w / 2)|, times rho_nr for the reversed field."""
    model = model or SpinWaveModel()
    kk = _check_k(k)
    eta = np.abs(np.sinc(kk * geometry.msl_width / TWO_PI))
    if surface_side(field) is SurfaceSide.FAR:
        eta = model.rho_nr * eta
    return _maybe_scalar(eta, k)


def stray_field_profile(mode: SWMode, z, params: MaterialParams):
    """Relative stray-field amplitude at height ``z`` (nm) above the near surface."""
    zz = np.asarray(z, dtype=float)
    if np.any(zz < 0):
        raise ValidationError("height z must be >= 0")
    amp = np.exp(-mode.k * zz * 1e-3)
    if mode.surface_side is SurfaceSide.FAR:
        amp = amp * math.exp(-mode.k * params.thickness)
    return _maybe_scalar(amp, z)


@dataclass(frozen=True)
class Ladder:
    """Column view of a mode ladder, for vectorised sweeps."""

    kind: ModeKind
    side: SurfaceSide
    k: np.ndarray
    frequency: np.ndarray
    group_velocity: np.ndarray
    decay_length: np.ndarray
    efficiency: np.ndarray

    def __len__(self):
        return len(self.k)

    def stray(self, z_nm: float, params: MaterialParams) -> np.ndarray:
        amp = np.exp(-self.k * z_nm * 1e-3)
        if self.side is SurfaceSide.FAR:
            amp = amp * np.exp(-self.k * params.thickness)
        return amp

    def modes(self) -> list[SWMode]:
        return [
            SWMode(float(k), float(f), self.kind, float(v), float(L), float(e), self.side)
            for k, f, v, L, e in zip(self.k, self.frequency, self.group_velocity,
                                     self.decay_length, self.efficiency)
        ]


def ladder_wavevectors(model: SpinWaveModel, geometry: DeviceGeometry) -> np.ndarray:
    top = model.ladder_top(geometry)
    n = int(math.floor(top / model.k_spacing * (1 + 1e-12)))
    return model.k_spacing * np.arange(1, n + 1, dtype=float)


def ladder(field: FieldConfig, params: MaterialParams, geometry: DeviceGeometry,
           model: SpinWaveModel | None = None) -> Ladder:
    model = model or SpinWaveModel()
    kind = mode_kind(field)
    side = surface_side(field)
    k = ladder_wavevectors(model, geometry)
    if field.b_ext == 0:
        k = k[:0]
    if len(k) == 0:
        empty = np.zeros(0)
        return Ladder(kind, side, empty, empty, empty, empty, empty)
    f = np.asarray(dispersion(kind, k, field, params))
    v = np.asarray(group_velocity(kind, k, field, params, model.fd_step))
    L = np.abs(v) / (params.alpha_gilbert * TWO_PI * f)
    eta = np.asarray(excitation_efficiency(k, geometry, field, model))
    return Ladder(kind, side, k, f, v, L, eta)


def mode_ladder(field: FieldConfig, params: MaterialParams, geometry: DeviceGeometry,
                model: SpinWaveModel | None = None) -> list[SWMode]:
    """Modes at k_n = n * k_spacing up to the ladder top.

    An unbiased film returns an empty ladder; so does a ladder top below the
    spacing.
    """
    return ladder(field, params, geometry, model).modes()


def lorentzian(delta, hwhm: float, cutoff: float) -> np.ndarray:
    """Peak-normalised Lorentzian, hard-truncated outside |delta| < cutoff."""
    d = np.asarray(delta, dtype=float)
    out = hwhm * hwhm / (hwhm * hwhm + d * d)
    return np.where(np.abs(d) < cutoff, out, 0.0)


def tapered_lorentzian(delta, hwhm: float, cutoff: float) -> np.ndarray:
    """Peak-normalised Lorentzian shifted to reach zero continuously at the cutoff."""
    d = np.asarray(delta, dtype=float)
    edge = hwhm * hwhm / (hwhm * hwhm + cutoff * cutoff)
    out = (hwhm * hwhm / (hwhm * hwhm + d * d) - edge) / (1.0 - edge)
    return np.clip(out, 0.0, None)


def _raw_row(b: float, f_grid: np.ndarray, theta: float, geometry: DeviceGeometry,
             params: MaterialParams, model: SpinWaveModel) -> np.ndarray:
    row = np.full(f_grid.shape, model.background)
    lad = ladder(FieldConfig(b, theta), params, geometry, model)
    with np.errstate(divide="ignore", under="ignore"):
        weight = lad.efficiency ** 2 * np.exp(-geometry.msl_separation / lad.decay_length)
    for w, fm in zip(weight, lad.frequency):
        if w > 0:
            row = row + w * lorentzian(f_grid - fm, model.linewidth, model.cutoff)
    return row


def _check_grid(name: str, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D grid")
    if np.any(~np.isfinite(g)):
        raise ValidationError(f"{name} must be finite")
    if np.any(np.diff(g) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return g


def transmission_map(b_grid, f_grid, geometry: DeviceGeometry, params: MaterialParams,
                     model: SpinWaveModel | None = None, theta: float = 0.0,
                     threads: int = 1) -> TransmissionMap:
    """Zero-field-referenced antenna-to-antenna transmission.

    Each mode adds eta^2 exp(-separation / L) times a truncated Lorentzian;
    the raw map at ``model.reference_field`` is subtracted row by row.
    """
    model = model or SpinWaveModel()
    b = _check_grid("b_grid", b_grid)
    f = _check_grid("f_grid", f_grid)
    ref = _raw_row(model.reference_field, f, theta, geometry, params, model)

    def row(bi):
        return _raw_row(bi, f, theta, geometry, params, model) - ref

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(row, b))
    else:
        rows = [row(bi) for bi in b]
    return TransmissionMap(b, f, np.vstack(rows))


def support_edges(values: np.ndarray, grid: np.ndarray) -> tuple[float, float] | None:
    """First and last grid points where ``values`` is positive."""
    idx = np.flatnonzero(values > 0)
    if idx.size == 0:
        return None
    return float(grid[idx[0]]), float(grid[idx[-1]])
