"""Units, constants and validated parameter containers.

Unit conventions used everywhere in the package:

    frequency   MHz
    field       gauss
    length      micrometers (nanodiamond standoff ``nd_z`` in nanometers)
    time        microseconds
    power       milliwatts
    wave vector rad/um
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

MU0 = 4.0e-7 * math.pi  # T m / A
TESLA_TO_GAUSS = 1.0e4
TWO_PI = 2.0 * math.pi


class HybridSimError(Exception):
    """Base class for all package errors."""


class ValidationError(HybridSimError, ValueError):
    """A parameter or config value is outside its allowed range."""


class ModeFamilyError(HybridSimError, ValueError):
    """Dispersion requested for a field geometry that does not support the mode family."""


class NotFoundError(HybridSimError):
    """A root or resonance search found nothing in the bracket."""

    def __init__(self, message: str, residuals: Any = None):
        super().__init__(message)
        self.residuals = residuals


class NotApplicableError(HybridSimError):
    """The requested quantity is undefined for these inputs."""


class FitError(HybridSimError):
    """Curve fit did not converge or the data carry no information."""

    def __init__(self, message: str, history: Any = None):
        super().__init__(message)
        self.history = history if history is not None else []


class InsufficientDataError(HybridSimError):
    """Input trace is too short or too coarse to analyse."""


def _require(cond: bool, cls_name: str, field: str, value: Any, rule: str) -> None:
    if not cond:
        raise ValidationError(f"{cls_name}.{field} = {value!r} violates: {rule}")


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


class _Serializable:
    """Mixin giving dict round trips with strict key checking."""

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"{cls.__name__}: unknown field(s) {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MaterialParams(_Serializable):
    """Magnetic film and NV constants.

    ``gamma_m`` and ``gamma_e`` are in MHz/gauss, ``four_pi_ms`` in gauss,
    ``thickness`` in um and ``d_zfs`` in MHz. Setting
    ``allow_zfs_override`` lifts the [2800, 2900] MHz window on ``d_zfs``.
    """

    gamma_m: float = 2.80
    four_pi_ms: float = 1780.0
    thickness: float = 3.08
    alpha_gilbert: float = 1e-4
    gamma_e: float = 2.8024
    d_zfs: float = 2870.0
    allow_zfs_override: bool = False

    def __post_init__(self):
        name = type(self).__name__
        for f in ("gamma_m", "four_pi_ms", "thickness", "alpha_gilbert", "gamma_e", "d_zfs"):
            v = getattr(self, f)
            _require(_finite(v) and v > 0, name, f, v, "finite and > 0")
        _require(self.alpha_gilbert < 0.1, name, "alpha_gilbert", self.alpha_gilbert, "in (0, 0.1)")
        if not self.allow_zfs_override:
            _require(2800.0 <= self.d_zfs <= 2900.0, name, "d_zfs", self.d_zfs,
                     "in [2800, 2900] MHz unless allow_zfs_override")

    def f_h(self, b_ext: float) -> float:
        """Field term gamma_m * B in MHz."""
        return self.gamma_m * b_ext

    @property
    def f_m(self) -> float:
        """Magnetization term gamma_m * 4 pi Ms in MHz."""
        return self.gamma_m * self.four_pi_ms


@dataclass(frozen=True)
class DeviceGeometry(_Serializable):
    """Antenna and nanodiamond placement.

    ``msl_width``, ``msl_separation`` and ``nd_x`` are in um (``nd_x`` measured
    from the strip centre); ``nd_z`` is the standoff above the film in nm.
    """

    msl_width: float = 5.0
    msl_separation: float = 100.0
    nd_x: float = 20.0
    nd_z: float = 50.0
    msl_thickness: float = 0.2

    def __post_init__(self):
        name = type(self).__name__
        _require(_finite(self.msl_width) and self.msl_width > 0, name, "msl_width", self.msl_width, "> 0")
        _require(_finite(self.msl_separation) and self.msl_separation > self.msl_width, name,
                 "msl_separation", self.msl_separation, "> msl_width")
        _require(_finite(self.nd_x) and self.nd_x >= 0, name, "nd_x", self.nd_x, ">= 0")
        _require(_finite(self.nd_z) and self.nd_z >= 0, name, "nd_z", self.nd_z, ">= 0")
        _require(_finite(self.msl_thickness) and self.msl_thickness >= 0, name,
                 "msl_thickness", self.msl_thickness, ">= 0")

    @property
    def nd_z_um(self) -> float:
        return self.nd_z * 1e-3


@dataclass(frozen=True)
class FieldConfig(_Serializable):
    """Bias field magnitude (gauss) and in-plane angle to the antenna axis (rad)."""

    b_ext: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        name = type(self).__name__
        _require(_finite(self.b_ext) and self.b_ext >= 0, name, "b_ext", self.b_ext, ">= 0")
        _require(_finite(self.theta) and 0.0 <= self.theta < TWO_PI, name, "theta", self.theta,
                 "in [0, 2 pi)")


@dataclass(frozen=True)
class DriveConfig(_Serializable):
    """Microwave drive: power in mW, frequency in MHz, line impedance in ohm."""

    power: float = 0.0
    frequency: float = 2870.0
    impedance: float = 50.0

    def __post_init__(self):
        name = type(self).__name__
        _require(_finite(self.power) and self.power >= 0, name, "power", self.power, ">= 0")
        _require(_finite(self.frequency) and self.frequency > 0, name, "frequency", self.frequency, "> 0")
        _require(_finite(self.impedance) and self.impedance > 0, name, "impedance", self.impedance, "> 0")


def convert_power_to_current(power: float, impedance: float = 50.0) -> float:
    """Current amplitude in A for ``power`` mW into ``impedance`` ohm, sqrt(P/Z)."""
    if not math.isfinite(power) or power < 0:
        raise ValidationError(f"power = {power!r} mW must be finite and >= 0")
    if not impedance > 0:
        raise ValidationError(f"impedance = {impedance!r} ohm must be > 0")
    return math.sqrt(power * 1e-3 / impedance)


def default_params() -> MaterialParams:
    """YIG film of 3.08 um with standard YIG and NV constants."""
    return MaterialParams()


# Field-angle cases with a named mode family.
THETA_DE = 0.0
THETA_BV = math.pi / 2
THETA_DE_REVERSED = math.pi


def angle_is(theta: float, target: float, tol: float = 1e-9) -> bool:
    d = (theta - target) % TWO_PI
    return min(d, TWO_PI - d) < tol


@dataclass(frozen=True)
class SpinWaveModel(_Serializable):
    """Knobs of the spin-wave model that the film constants do not fix.

    k_spacing   ladder spacing, rad/um
    k_max       ladder top, rad/um; None means the first zero of the antenna
                k-filter, 2 pi / msl_width
    rho_nr      excitation efficiency ratio for the reversed field (theta = pi)
    linewidth   Lorentzian half width at half maximum, MHz
    cutoff      line-shape support half width, MHz
    background  field-independent antenna-to-antenna coupling in raw S21
    reference_field  bias field of the subtracted reference map, gauss
    fd_step     relative central-difference step for the group velocity
    """

    k_spacing: float = 0.05
    k_max: float | None = None
    rho_nr: float = 0.2
    linewidth: float = 5.0
    cutoff: float = 10.0
    background: float = 1e-3
    reference_field: float = 0.0
    fd_step: float = 1e-4

    def __post_init__(self):
        if not self.k_spacing > 0:
            raise ValidationError(f"SpinWaveModel.k_spacing = {self.k_spacing!r} must be > 0")
        if self.k_max is not None and not self.k_max > 0:
            raise ValidationError(f"SpinWaveModel.k_max = {self.k_max!r} must be > 0")
        if not 0 < self.rho_nr < 1:
            raise ValidationError(f"SpinWaveModel.rho_nr = {self.rho_nr!r} must be in (0, 1)")
        if not self.linewidth > 0:
            raise ValidationError(f"SpinWaveModel.linewidth = {self.linewidth!r} must be > 0")
        if not self.cutoff > 0:
            raise ValidationError(f"SpinWaveModel.cutoff = {self.cutoff!r} must be > 0")
        if not self.background >= 0:
            raise ValidationError(f"SpinWaveModel.background = {self.background!r} must be >= 0")
        if not self.reference_field >= 0:
            raise ValidationError(f"SpinWaveModel.reference_field = {self.reference_field!r} must be >= 0")
        if not 0 < self.fd_step < 0.1:
            raise ValidationError(f"SpinWaveModel.fd_step = {self.fd_step!r} must be in (0, 0.1)")

    def ladder_top(self, geometry: DeviceGeometry) -> float:
        return self.k_max if self.k_max is not None else TWO_PI / geometry.msl_width


@dataclass(frozen=True)
class ODMRModel(_Serializable):
    """Phenomenological ODMR contrast and spin-wave noise quenching.

    A driven transition at detuning delta gives a dip
    ``c_max * W^2 / (W^2 + linewidth^2 + saturation * delta^2)`` with W the
    Rabi frequency. Quenching by spin-wave noise follows
    ``Q = 1 / (1 + quench_coeff * P * rho)`` where rho is the efficiency- and
    reach-weighted number of ladder modes within +/- noise_bandwidth / 2 of the
    probe frequency. ``threshold`` is the smallest contrast counted as
    resolvable. ``msl_rolloff`` (per GHz above ``rolloff_ref`` MHz) attenuates
    the antenna output at high frequency; 0 means a flat line.
    """

    linewidth: float = 8.0
    c_max: float = 0.2
    saturation: float = 1.0
    quench_coeff: float = 0.02
    noise_bandwidth: float = 50.0
    threshold: float = 5e-3
    msl_rolloff: float = 0.0
    rolloff_ref: float = 2870.0

    def __post_init__(self):
        name = type(self).__name__
        for f in ("linewidth", "saturation", "noise_bandwidth", "threshold"):
            v = getattr(self, f)
            _require(_finite(v) and v > 0, name, f, v, "> 0")
        _require(_finite(self.c_max) and 0 < self.c_max <= 1, name, "c_max", self.c_max, "in (0, 1]")
        _require(_finite(self.quench_coeff) and self.quench_coeff >= 0, name, "quench_coeff",
                 self.quench_coeff, ">= 0")
        _require(_finite(self.msl_rolloff) and self.msl_rolloff >= 0, name, "msl_rolloff",
                 self.msl_rolloff, ">= 0")


@dataclass(frozen=True)
class CouplingModel(_Serializable):
    """Spin-wave drive scale.

    ``kappa_sw`` is the spin-wave field (gauss per sqrt(mW)) at the source
    before k-filtering, stray-field decay and propagation loss. When None it
    is calibrated so that the amplification at ``calibration_x`` um, comparing
    ``calibration_b_low`` and ``calibration_b_high`` near
    ``calibration_frequency`` MHz, equals ``amplification_target``.
    """

    kappa_sw: float | None = None
    amplification_target: float = 100.0
    calibration_x: float = 20.0
    calibration_b_low: float = 15.0
    calibration_b_high: float = 145.0
    calibration_frequency: float = 2862.0

    def __post_init__(self):
        name = type(self).__name__
        if self.kappa_sw is not None:
            _require(_finite(self.kappa_sw) and self.kappa_sw >= 0, name, "kappa_sw", self.kappa_sw, ">= 0")
        for f in ("amplification_target", "calibration_x", "calibration_frequency"):
            v = getattr(self, f)
            _require(_finite(v) and v > 0, name, f, v, "> 0")
        _require(0 <= self.calibration_b_low < self.calibration_b_high, name, "calibration_b_low",
                 self.calibration_b_low, "0 <= b_low < b_high")


@dataclass(frozen=True)
class RabiDecayModel(_Serializable):
    """Rabi envelope time ``t0 / (1 + c_p * P)`` in us, P in mW.

    A trace counts as visibly oscillating when ``omega * decay_time >= min_cycles``.
    """

    t0: float = 2.0
    c_p: float = 10.0
    min_cycles: float = 0.5

    def __post_init__(self):
        name = type(self).__name__
        _require(_finite(self.t0) and self.t0 > 0, name, "t0", self.t0, "> 0")
        _require(_finite(self.c_p) and self.c_p >= 0, name, "c_p", self.c_p, ">= 0")
        _require(_finite(self.min_cycles) and self.min_cycles > 0, name, "min_cycles", self.min_cycles, "> 0")

    def decay_time(self, power: float) -> float:
        return self.t0 / (1.0 + self.c_p * power)


@dataclass(frozen=True)
class HybridSystem:
    """Everything the simulation needs besides the bias field and the drive."""

    params: MaterialParams = MaterialParams()
    geometry: DeviceGeometry = DeviceGeometry()
    spin_wave: SpinWaveModel = SpinWaveModel()
    odmr: ODMRModel = ODMRModel()
    coupling: CouplingModel = CouplingModel()
    rabi: RabiDecayModel = RabiDecayModel()

    def with_geometry(self, **changes) -> "HybridSystem":
        return dataclasses.replace(self, geometry=dataclasses.replace(self.geometry, **changes))

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name).to_dict() for f in dataclasses.fields(self)}
