import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridsim import magnonics as mg
from hybridsim import nv
from hybridsim.core import (
    DeviceGeometry, DriveConfig, FieldConfig, HybridSystem, MaterialParams, NotFoundError,
    ODMRModel, ValidationError,
)

P = MaterialParams()


def test_spin_operators():
    ops = nv.SpinOperators()
    for m in (ops.sx, ops.sy, ops.sz):
        np.testing.assert_allclose(m, m.conj().T, atol=0)
    comm = ops.sx @ ops.sy - ops.sy @ ops.sx
    np.testing.assert_allclose(comm, 1j * ops.sz, atol=1e-12)


def test_hamiltonian_zero_field():
    h = nv.hamiltonian(nv.NVConfig(0.3, 0.0), P)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [0.0, 2870.0, 2870.0], atol=1e-9)


@given(st.floats(0.0, math.pi), st.floats(0.0, 250.0), st.floats(0.0, 2 * math.pi))
def test_hamiltonian_hermitian_trace(th, b, phi):
    h = nv.hamiltonian(nv.NVConfig(th, b, phi), P)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)
    assert np.trace(h).real == pytest.approx(2 * P.d_zfs, rel=1e-12)


def test_transition_examples():
    assert nv.transition_frequencies(nv.NVConfig(0.0, 100.0), P) == pytest.approx((2589.76, 3150.24), abs=1e-9)
    assert nv.transition_frequencies(nv.NVConfig(math.pi / 2, 145.0), P) == pytest.approx((2926.4, 2982.8), abs=0.1)
    assert nv.transition_frequencies(nv.NVConfig(0.0, 15.0), P) == pytest.approx((2827.964, 2912.036), abs=1e-9)
    assert nv.transition_frequencies(nv.NVConfig(1.0, 0.0), P) == pytest.approx((2870.0, 2870.0), abs=1e-9)


def _perp_oracle(b):
    # independent 3x3 diagonalisation of D Sz^2 + gamma B Sx written out by hand
    g = P.gamma_e * b / math.sqrt(2)
    h = np.array([[P.d_zfs, g, 0], [g, 0, g], [0, g, P.d_zfs]])
    e = np.linalg.eigvalsh(h)
    return e[1] - e[0], e[2] - e[0]


@pytest.mark.parametrize("b", [10.0, 145.0, 250.0])
def test_perpendicular_oracle(b):
    assert nv.transition_frequencies(nv.NVConfig(math.pi / 2, b), P) == pytest.approx(_perp_oracle(b), abs=1e-9)


@given(st.floats(0.0, 250.0))
def test_aligned_closed_form(b):
    lo, up = nv.transition_frequencies(nv.NVConfig(0.0, b), P)
    assert lo == pytest.approx(P.d_zfs - P.gamma_e * b, rel=1e-9)
    assert up == pytest.approx(P.d_zfs + P.gamma_e * b, rel=1e-9)


@given(st.floats(0.0, math.pi), st.floats(0.0, 250.0))
def test_transition_envelope(th, b):
    lo, up = nv.transition_frequencies(nv.NVConfig(th, b), P)
    gb = P.gamma_e * b
    shift = 2 * gb * gb / P.d_zfs
    assert lo <= up
    assert P.d_zfs - gb - 1e-9 <= lo and up <= P.d_zfs + gb + shift + 1e-9


def test_transitions_continuous():
    b = np.linspace(0.0, 250.0, 2501)
    for th in (0.0, 0.5, 1.2, math.pi / 2):
        t = nv.transition_table(np.array([th]), 0.0, P)
        prev = t[0]
        for bi in b[1:]:
            cur = nv.transition_table(np.array([th]), bi, P)[0]
            # each level moves at most gamma_e per gauss, so a gap at most twice that
            assert np.all(np.abs(cur - prev) <= 2 * P.gamma_e * (b[1] - b[0]) * 1.0001)
            prev = cur


def test_matching_orientation():
    m = nv.find_matching_orientation(2862.0, 15.0, 145.0, P)
    assert 75.0 < math.degrees(m.theta_nv) < 90.0
    assert abs(m.frequency - 2862.0) < 5.0
    assert abs(nv.f_lower(m.theta_nv, 15.0, P) - nv.f_lower(m.theta_nv, 145.0, P)) < 1e-9


def test_matching_degenerate():
    with pytest.raises(ValidationError):
        nv.find_matching_orientation(2862.0, 145.0, 145.0, P)


def test_matching_residual_at_aligned():
    r0 = nv.f_lower(0.0, 145.0, P) - nv.f_lower(0.0, 15.0, P)
    assert r0 == pytest.approx(-P.gamma_e * 130.0, rel=1e-9)


def test_matching_not_found():
    # far apart fields with a weak zfs leave no crossing
    p = MaterialParams(d_zfs=100.0, allow_zfs_override=True)
    with pytest.raises(NotFoundError) as e:
        nv.find_matching_orientation(100.0, 100.0, 250.0, p)
    assert e.value.residuals.shape[1] == 2


def test_ensemble_deterministic_and_uniform():
    a = nv.ensemble_orientations(500, 7)
    assert np.array_equal(a, nv.ensemble_orientations(500, 7))
    assert nv.ensemble_orientations(1, 3).shape == (1, 3)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    big = nv.ensemble_orientations(10_000, 11)
    c = np.abs(big[:, 2])  # |cos| from a fixed axis is uniform on [0, 1]
    assert abs(c.mean() - 0.5) < 3 * math.sqrt(1 / 12 / big.shape[0])


def test_nvconfig_from_axis():
    c = nv.NVConfig.from_axis([1.0, 1.0, 0.0], 10.0)
    assert c.theta_nv == pytest.approx(math.pi / 2)
    assert np.linalg.norm(c.orientation) == pytest.approx(1.0, abs=1e-12)


F = np.linspace(2400.0, 3400.0, 501)


def test_spectrum_no_drive():
    assert np.all(nv.odmr_spectrum([0.3, 1.0], 100.0, F, 0.0, P) == 0.0)


def test_spectrum_zero_field_single_dip():
    c = nv.odmr_spectrum([0.1, 1.3], 0.0, F, 5.0, P)
    assert F[np.argmax(c)] == pytest.approx(2870.0)
    peaks = np.flatnonzero((c[1:-1] > c[:-2]) & (c[1:-1] > c[2:]))
    assert len(peaks) == 1


@given(st.permutations(list(np.linspace(0.0, math.pi, 7))))
def test_spectrum_permutation_invariant(th):
    base = nv.odmr_spectrum(np.linspace(0.0, math.pi, 7), 120.0, F, 2.0, P)
    assert np.array_equal(base, nv.odmr_spectrum(np.array(th), 120.0, F, 2.0, P))


def test_spectrum_bounded():
    c = nv.odmr_spectrum(nv.polar_angles(nv.ensemble_orientations(50, 1)), 80.0, F, 50.0, P)
    assert np.all((0 <= c) & (c <= ODMRModel().c_max))


def test_quench_factor(system):
    f145 = FieldConfig(145.0, 0.0)
    assert nv.quench_factor(2500.0, f145, 0.0, system) == 1.0
    assert nv.quench_factor(2870.0, FieldConfig(0.0, 0.0), 4.0, system) == 1.0
    assert nv.quench_factor(2500.0, f145, 4.0, system) == 1.0  # between ladder modes
    q_hi = nv.quench_factor(1958.0, f145, 4.0, system)
    q_lo = nv.quench_factor(1958.0, f145, 0.04, system)
    assert 0 < q_hi <= q_lo < 1
    with pytest.raises(ValidationError):
        nv.quench_factor(2500.0, f145, -1.0, system)


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_quench_monotone_in_power(p1, p2):
    s = HybridSystem()
    f = FieldConfig(145.0, 0.0)
    lo, hi = sorted((p1, p2))
    assert nv.quench_factor(1958.0, f, hi, s) <= nv.quench_factor(1958.0, f, lo, s)


def test_sw_contrast_only_near_modes():
    s = HybridSystem(odmr=ODMRModel(quench_coeff=0.0)).with_geometry(nd_x=40.0)
    th = nv.polar_angles(nv.ensemble_orientations(100, 2))
    b = np.arange(0.0, 251.0, 25.0)
    with_fm = nv.odmr_map(b, F, 0.0, 0.04, th, s).contrast
    no_fm = nv.odmr_map(b, F, 0.0, 0.04, th, s, ferromagnet=False).contrast
    for i, bi in enumerate(b):
        lad = mg.ladder(FieldConfig(bi, 0.0), s.params, s.geometry, s.spin_wave)
        near = np.zeros(F.size, bool)
        for fm in lad.frequency:
            near |= np.abs(F - fm) < s.spin_wave.cutoff
        assert np.all(with_fm[i, ~near] == no_fm[i, ~near])


def test_odmr_map_regimes():
    s = HybridSystem().with_geometry(nd_x=40.0)
    th = nv.polar_angles(nv.ensemble_orientations(500, 1))
    b = np.arange(0.0, 251.0, 5.0)
    m = nv.odmr_map(b, F, 0.0, 0.04, th, s)
    onset = nv.onset_field(m, s.odmr.threshold)
    assert 45.0 <= onset <= 90.0
    assert m.contrast[b < 45.0].max() < s.odmr.threshold
    row145 = m.contrast[np.searchsorted(b, 145.0)]
    assert row145.max() > s.odmr.threshold
    hi0 = nv.integrated_contrast(nv.odmr_map(b, F, 0.0, 4.0, th, s))
    hi90 = nv.integrated_contrast(nv.odmr_map(b, F, math.pi / 2, 4.0, th, s))
    assert hi90 < hi0


def test_odmr_map_threads_identical():
    s = HybridSystem()
    th = nv.polar_angles(nv.ensemble_orientations(50, 4))
    b = np.arange(0.0, 251.0, 25.0)
    a = nv.odmr_map(b, F, 0.0, 0.04, th, s, threads=1).contrast
    c = nv.odmr_map(b, F, 0.0, 0.04, th, s, threads=3).contrast
    assert a.tobytes() == c.tobytes()


def test_drive_scaling_exact():
    s = HybridSystem()
    f = FieldConfig(145.0, 0.0)
    a = nv.drive_at_nd(F, f, DriveConfig(1.0, 2870.0), s)
    b = nv.drive_at_nd(F, f, DriveConfig(4.0, 2870.0), s)
    np.testing.assert_allclose(b, 2 * a, rtol=1e-14)
