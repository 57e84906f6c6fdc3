import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridsim import magnonics as mg
from hybridsim.core import (
    THETA_BV, THETA_DE, THETA_DE_REVERSED, DeviceGeometry, FieldConfig, ModeFamilyError,
    SpinWaveModel, ValidationError,
)

D = 3.08
DE = FieldConfig(145.0, THETA_DE)
BV = FieldConfig(145.0, THETA_BV)
REV = FieldConfig(145.0, THETA_DE_REVERSED)


def kittel(b, p):
    fh = p.gamma_m * b
    return math.sqrt(fh * (fh + p.gamma_m * p.four_pi_ms))


def test_desw_examples(params):
    assert mg.desw_frequency(0.0, DE, params) == pytest.approx(1479.3, abs=0.05)
    assert mg.desw_frequency(1e4, DE, params) == pytest.approx(2898.0, abs=1e-9)
    assert mg.desw_frequency(1 / D, DE, params) == pytest.approx(2749.2, abs=0.05)


def test_bvmsw_examples(params):
    assert mg.bvmsw_frequency(0.0, BV, params) == pytest.approx(1479.3, abs=0.05)
    assert mg.bvmsw_frequency(1e12, BV, params) == pytest.approx(406.0, abs=1e-3)
    assert mg.bvmsw_frequency(1 / D, BV, params) == pytest.approx(1201.6, abs=0.05)


def test_mode_family_errors(params):
    with pytest.raises(ModeFamilyError):
        mg.desw_frequency(1.0, BV, params)
    with pytest.raises(ModeFamilyError):
        mg.bvmsw_frequency(1.0, DE, params)
    with pytest.raises(ModeFamilyError):
        mg.mode_kind(FieldConfig(145.0, 0.3))


def test_negative_k_rejected(params):
    with pytest.raises(ValidationError):
        mg.desw_frequency(-1.0, DE, params)


@given(st.floats(1e-3, 50.0), st.floats(1.0, 250.0))
def test_desw_monotone_and_bounded(k, b):
    from hybridsim.core import MaterialParams
    p = MaterialParams()
    f = FieldConfig(b, 0.0)
    lo, hi = mg.desw_frequency(k, f, p), mg.desw_frequency(k * 1.01, f, p)
    top = mg.surface_limit(b, p)
    # strictly increasing until the exponential term drops below one ulp of the limit
    assert hi > lo or abs(hi - top) <= 4e-16 * top
    assert hi <= top * (1 + 4e-16)


@given(st.floats(1e-3, 50.0), st.floats(1.0, 250.0))
def test_bvmsw_monotone_and_bounded(k, b):
    from hybridsim.core import MaterialParams
    p = MaterialParams()
    f = FieldConfig(b, THETA_BV)
    lo, hi = mg.bvmsw_frequency(k * 1.01, f, p), mg.bvmsw_frequency(k, f, p)
    assert hi > lo
    assert lo > p.f_h(b)


def test_random_dispersion_samples(params):
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = rng.uniform(1e-3, 30.0)
        b = rng.uniform(1.0, 250.0)
        de = mg.desw_frequency(np.array([k, k * 1.001]), FieldConfig(b, 0.0), params)
        bv = mg.bvmsw_frequency(np.array([k, k * 1.001]), FieldConfig(b, THETA_BV), params)
        assert de[1] >= de[0] and de[1] <= mg.surface_limit(b, params) * (1 + 4e-16)
        assert bv[1] < bv[0] and bv[1] > params.f_h(b)


@pytest.mark.parametrize("b", [1.0, 50.0, 145.0, 250.0])
def test_kittel_limit(params, b):
    ref = kittel(b, params)
    assert abs(mg.desw_frequency(0.0, FieldConfig(b, 0.0), params) / ref - 1) < 1e-12
    assert abs(mg.bvmsw_frequency(0.0, FieldConfig(b, THETA_BV), params) / ref - 1) < 1e-12
    # the k -> 0 approach: the DESW slope is finite, so go well below kd = 1e-6
    k = 1e-12 / D
    assert abs(mg.desw_frequency(k, FieldConfig(b, 0.0), params) / ref - 1) < 1e-9
    assert abs(mg.bvmsw_frequency(k, FieldConfig(b, THETA_BV), params) / ref - 1) < 1e-9


def test_band_edges(params):
    assert mg.band_edges(FieldConfig(0.0, 0.0), params, 5.0) == (0.0, 0.0)
    lo, hi = mg.band_edges(DE, params, 10 / D)
    assert lo == pytest.approx(1479.3, abs=0.05) and hi == pytest.approx(2898.0, abs=0.05)
    assert mg.band_edges(BV, params, 10 / D)[1] == pytest.approx(1479.3, abs=0.05)
    with pytest.raises(ValidationError):
        mg.band_edges(DE, params, 0.0)


def _analytic_vg(kind, k, field, p):
    fh, fm, d = p.f_h(field.b_ext), p.f_m, p.thickness
    if kind is mg.ModeKind.DESW:
        f = mg.desw_frequency(k, field, p)
        dfdk = 0.25 * fm * fm * 2 * d * math.exp(-2 * k * d) / (2 * f)
    else:
        f = mg.bvmsw_frequency(k, field, p)
        x = k * d
        dshape = (x * math.exp(-x) - (1 - math.exp(-x))) / (x * x) * d
        dfdk = fh * fm * dshape / (2 * f)
    return 2 * math.pi * dfdk


@pytest.mark.parametrize("kind, field", [(mg.ModeKind.DESW, DE), (mg.ModeKind.BVMSW, BV)])
@pytest.mark.parametrize("kd", [0.1, 0.3, 1.0, 3.0, 10.0])
def test_group_velocity_vs_analytic(params, kind, field, kd):
    k = kd / D
    num = mg.group_velocity(kind, k, field, params)
    assert num == pytest.approx(_analytic_vg(kind, k, field, params), rel=1e-6)


def test_group_velocity_examples(params):
    assert mg.group_velocity(mg.ModeKind.DESW, 1 / D, DE, params) == pytest.approx(5.9e3, rel=0.01)
    assert abs(mg.group_velocity(mg.ModeKind.DESW, 50.0, DE, params)) < 1e-6
    assert mg.group_velocity(mg.ModeKind.BVMSW, 1 / D, BV, params) < 0
    with pytest.raises(ValidationError):
        mg.group_velocity(mg.ModeKind.DESW, 0.0, DE, params)


def test_decay_length(params):
    L = mg.decay_length(mg.ModeKind.DESW, 1 / D, DE, params)
    assert L == pytest.approx(3.4e3, rel=0.02)
    assert L > 235.0
    L2 = mg.decay_length(mg.ModeKind.DESW, 1 / D, DE, params.replace(alpha_gilbert=2e-4))
    assert L2 == pytest.approx(L / 2, rel=1e-12)


def test_excitation_efficiency():
    g = DeviceGeometry()
    m = SpinWaveModel()
    assert mg.excitation_efficiency(0.0, g, DE) == 1.0
    assert mg.excitation_efficiency(2 * math.pi / g.msl_width, g, DE) == pytest.approx(0.0, abs=1e-15)
    assert mg.excitation_efficiency(0.0, g, REV, m) == m.rho_nr


@given(st.floats(0.0, 20.0))
def test_efficiency_bounded(k):
    e = mg.excitation_efficiency(k, DeviceGeometry(), DE)
    assert 0.0 <= e <= 1.0


def _mode(k, side):
    return mg.SWMode(k, 2000.0, mg.ModeKind.DESW, 1.0, 1.0, 1.0, side)


def test_stray_field_examples(params):
    k = 1 / D
    assert mg.stray_field_profile(_mode(0.7, mg.SurfaceSide.NEAR), 0.0, params) == 1.0
    assert mg.stray_field_profile(_mode(k, mg.SurfaceSide.NEAR), D * 1e3, params) == pytest.approx(math.exp(-1))
    assert mg.stray_field_profile(_mode(k, mg.SurfaceSide.FAR), 0.0, params) == pytest.approx(math.exp(-1))


@given(st.floats(0.01, 5.0), st.floats(0.0, 1e4), st.floats(1.001, 3.0))
def test_stray_field_monotone(k, z, s):
    from hybridsim.core import MaterialParams
    p = MaterialParams()
    m = _mode(k, mg.SurfaceSide.NEAR)
    assert mg.stray_field_profile(m, z * s + 1.0, p) < mg.stray_field_profile(m, z, p) or z == 0 and k * 1e-3 < 1e-300
    assert mg.stray_field_profile(_mode(k * s, mg.SurfaceSide.NEAR), z + 1.0, p) < mg.stray_field_profile(m, z + 1.0, p)


def test_nonreciprocity_factor(params):
    g = DeviceGeometry()
    m = SpinWaveModel()
    fwd = mg.ladder(DE, params, g, m)
    rev = mg.ladder(REV, params, g, m)
    factor = (rev.efficiency * rev.stray(g.nd_z, params)) / (fwd.efficiency * fwd.stray(g.nd_z, params))
    ok = fwd.efficiency > 0
    np.testing.assert_allclose(factor[ok], m.rho_nr * np.exp(-fwd.k[ok] * params.thickness), rtol=1e-12)
    assert np.all(factor[ok] < 1)


def test_mode_ladder(params):
    g = DeviceGeometry()
    assert mg.mode_ladder(FieldConfig(0.0, 0.0), params, g) == []
    m = SpinWaveModel(k_spacing=0.5 / D, k_max=10 / D)
    de = mg.mode_ladder(DE, params, g, m)
    assert len(de) == 20
    assert np.all(np.diff([x.frequency for x in de]) > 0)
    bv = mg.mode_ladder(BV, params, g, m)
    assert np.all(np.diff([x.frequency for x in bv]) < 0)
    assert all(x.decay_length > 0 and 0 <= x.efficiency <= 1 for x in de)
    assert mg.mode_ladder(DE, params, g, SpinWaveModel(k_spacing=1.0, k_max=0.5)) == []


def test_default_ladder_size(params):
    assert len(mg.mode_ladder(DE, params, DeviceGeometry())) == 25


def test_transmission_examples(params):
    g = DeviceGeometry()
    f = np.linspace(1000.0, 3500.0, 1251)
    m = mg.transmission_map([0.0, 145.0], f, g, params)
    assert np.all(m.s21[0] == 0.0)
    assert np.all(m.s21 >= 0.0)
    # the ladder is discrete: the lowest modes sit near 1958 and 2246 MHz at 145 G
    lowest = mg.ladder(DE, params, g).frequency[0]
    assert 1479.3 < lowest < 2000.0
    assert m.s21[1, np.argmin(np.abs(f - lowest))] > 0
    assert m.s21[1, np.searchsorted(f, 3100.0)] == 0.0


def test_transmission_unsorted(params):
    with pytest.raises(ValidationError):
        mg.transmission_map([10.0, 5.0], [1.0, 2.0], DeviceGeometry(), params)


def test_transmission_support_every_field(params):
    g, m = DeviceGeometry(), SpinWaveModel()
    f = np.linspace(0.0, 5988.0, 500)
    cell = f[1] - f[0]
    b = np.arange(5.0, 251.0, 5.0)
    tm = mg.transmission_map(b, f, g, params, m)
    for bi, row in zip(b, tm.s21):
        lo, hi = mg.band_edges(FieldConfig(bi, 0.0), params, m.ladder_top(g), m.k_spacing)
        e = mg.support_edges(row, f)
        assert abs(e[0] - lo) <= cell and abs(e[1] - hi) <= cell


def test_transmission_threads_identical(params):
    g = DeviceGeometry()
    f = np.linspace(1000.0, 3500.0, 301)
    b = np.linspace(0.0, 250.0, 26)
    a = mg.transmission_map(b, f, g, params, threads=1).s21
    c = mg.transmission_map(b, f, g, params, threads=4).s21
    assert a.tobytes() == c.tobytes()


def test_desw_wavevector_inverse(params):
    k = np.array([0.05, 0.5, 1.0, 2.0])
    f = mg.desw_frequency(k, DE, params)
    np.testing.assert_allclose(mg.desw_wavevector(f, DE, params), k, rtol=1e-9)
    assert math.isnan(mg.desw_wavevector(3000.0, DE, params))


def test_tapered_lorentzian_continuous():
    d = np.linspace(-12, 12, 2401)
    w = mg.tapered_lorentzian(d, 5.0, 10.0)
    assert w.max() == pytest.approx(1.0)
    assert np.all(w[np.abs(d) >= 10.0] == 0.0)
    assert np.max(np.abs(np.diff(w))) < 1e-2
