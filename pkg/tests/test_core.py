import dataclasses
import math

import pytest
from hypothesis import given, strategies as st

from hybridsim.core import (
    CouplingModel,
    DeviceGeometry,
    DriveConfig,
    FieldConfig,
    HybridSystem,
    MaterialParams,
    ODMRModel,
    SpinWaveModel,
    ValidationError,
    convert_power_to_current,
    default_params,
)


def test_default_params():
    p = default_params()
    assert p.thickness == 3.08
    assert p.d_zfs == 2870.0
    assert p.alpha_gilbert == 1e-4
    assert (p.gamma_m, p.four_pi_ms, p.gamma_e) == (2.80, 1780.0, 2.8024)


@pytest.mark.parametrize("power, expected", [(0.0, 0.0), (4.0, 8.944e-3), (1e-3, 1.414e-4)])
def test_power_to_current(power, expected):
    assert convert_power_to_current(power, 50.0) == pytest.approx(expected, rel=1e-3, abs=0)


def test_negative_power_rejected():
    with pytest.raises(ValidationError):
        convert_power_to_current(-1.0)


@pytest.mark.parametrize("field, value", [
    ("four_pi_ms", -5.0), ("thickness", 0.0), ("alpha_gilbert", 0.2), ("d_zfs", 3000.0),
    ("gamma_e", math.nan),
])
def test_material_rejects(field, value):
    with pytest.raises(ValidationError, match=field):
        MaterialParams(**{field: value})


def test_zfs_override():
    assert MaterialParams(d_zfs=3000.0, allow_zfs_override=True).d_zfs == 3000.0


@pytest.mark.parametrize("kw", [{"msl_width": 0.0}, {"msl_separation": 4.0}, {"nd_x": -1.0}, {"nd_z": -1.0}])
def test_geometry_rejects(kw):
    with pytest.raises(ValidationError):
        DeviceGeometry(**kw)


@pytest.mark.parametrize("kw", [{"b_ext": -1.0}, {"theta": 2 * math.pi}, {"theta": -0.1}])
def test_field_rejects(kw):
    with pytest.raises(ValidationError):
        FieldConfig(**{"b_ext": 1.0, "theta": 0.0, **kw})


@pytest.mark.parametrize("kw", [{"power": -1.0}, {"frequency": 0.0}, {"impedance": 0.0}])
def test_drive_rejects(kw):
    with pytest.raises(ValidationError):
        DriveConfig(**{"power": 1.0, "frequency": 2870.0, **kw})


@given(
    st.floats(0.5, 5.0), st.floats(100.0, 3000.0), st.floats(0.1, 10.0), st.floats(1e-6, 0.09),
    st.floats(2.0, 3.5), st.floats(2800.0, 2900.0),
)
def test_material_round_trip(gm, ms, d, a, ge, dz):
    p = MaterialParams(gm, ms, d, a, ge, dz)
    q = MaterialParams.from_dict(p.to_dict())
    assert q == p
    assert all(getattr(q, f.name) == getattr(p, f.name) for f in dataclasses.fields(p))


@pytest.mark.parametrize("cls", [MaterialParams, DeviceGeometry, SpinWaveModel, ODMRModel, CouplingModel])
def test_round_trip_defaults(cls):
    obj = cls()
    assert cls.from_dict(obj.to_dict()) == obj


def test_from_dict_unknown_key():
    with pytest.raises(ValidationError, match="thicknes"):
        MaterialParams.from_dict({"thicknes": 3.0})


def test_units_gamma_times_field(params):
    # MHz/G x G = MHz
    assert params.f_h(100.0) == pytest.approx(280.0)
    assert params.f_m == pytest.approx(2.80 * 1780.0)


def test_system_hashable_and_replace(system):
    s2 = system.with_geometry(nd_x=40.0)
    assert s2.geometry.nd_x == 40.0 and system.geometry.nd_x == 20.0
    assert hash(s2) != hash(system) or s2 != system
    assert isinstance(HybridSystem().to_dict()["params"], dict)
