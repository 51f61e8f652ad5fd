import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from casimir_torque.grating import (
    TOL_PASSIVITY,
    ConicalIncidence,
    GratingGeometry,
    channel_labels,
    dump_matrix,
    profile_fourier_coefficients,
    reflection_1d,
    reflection_1d_batch,
    spectral_radius,
)
from casimir_torque.materials import VACUUM, Constant, Drude, PerfectConductor, epsilon_imag, gold_drude

GOLD = gold_drude()
REFERENCE = GratingGeometry(400e-9, 200e-9, 200e-9, GOLD)


def fresnel_oracle(eps, xi, q):
    k = np.sqrt(xi**2 + q**2)
    kt = np.sqrt(eps * xi**2 + q**2)
    return (k - kt) / (k + kt), (eps * k - kt) / (eps * k + kt)


def mirror_n(orders):
    m = 2 * orders + 1
    P = np.zeros((2 * m, 2 * m))
    for i in range(m):
        P[2 * i, 2 * (m - 1 - i)] = P[2 * i + 1, 2 * (m - 1 - i) + 1] = 1
    return P


def h_sign(orders):
    return np.diag([1.0, -1.0] * (2 * orders + 1))


# Fourier coefficients ------------------------------------------------------


def test_coefficients_of_solid_layer():
    g = GratingGeometry(1e-6, 1e-7, 1e-6, Constant(7.0))
    assert profile_fourier_coefficients(g, 1e6, 0) == 7.0
    for j in (1, -1, 2, 5):
        assert profile_fourier_coefficients(g, 1e6, j) == pytest.approx(0.0, abs=1e-15)


def test_mean_coefficient():
    g = GratingGeometry.from_fill(1e-6, 1e-7, 0.5, Constant(10.0))
    assert profile_fourier_coefficients(g, 1e6, 0) == pytest.approx(5.5, rel=1e-15)
    assert profile_fourier_coefficients(g, 1e6, 0, reciprocal=True) == pytest.approx(0.55, rel=1e-15)


@pytest.mark.parametrize("j", [1, 2, 3, -1])
@pytest.mark.parametrize("fill", [0.5, 0.3])
def test_coefficient_matches_numerical_integral(j, fill):
    d = 1.0
    g = GratingGeometry.from_fill(d, 0.1, fill, Constant(10.0))

    # real by symmetry: (1/d) int eps(x) cos(2 pi j x / d) dx over a centered period, piece by piece
    edges = [-d / 2, -fill * d / 2, fill * d / 2, d / 2]
    val = sum(
        quad(lambda x: eps * np.cos(2 * np.pi * j * x / d) / d, a, b, epsabs=1e-13, epsrel=1e-13)[0]
        for a, b, eps in zip(edges, edges[1:], (1.0, 10.0, 1.0))
    )
    assert profile_fourier_coefficients(g, 1.0, j) == pytest.approx(val, abs=1e-12)


# Reflection matrix -----------------------------------------------------------


@pytest.mark.parametrize("eps", [2.0, 13.0])
def test_flat_interface_is_fresnel(eps):
    g = GratingGeometry(400e-9, 0.0, 200e-9, Constant(eps))
    xi = np.array([1e5, 1e6, 1e7, 5e7])
    for kx0 in (0.0, 3e6, -7e6):
        for ky in (0.0, 2e6, 4e7):
            R = reflection_1d_batch(g, xi, kx0, ky, 2)
            n = np.arange(-2, 3)
            for b, x in enumerate(xi):
                q = np.hypot(kx0 + n * 2 * np.pi / g.period, ky)
                re, rh = fresnel_oracle(eps, x, q)
                expected = np.diag(np.ravel(np.column_stack([re, rh])))
                off = R[b] - np.diag(np.diag(R[b]))
                assert np.abs(off).max() < 1e-12
                np.testing.assert_allclose(np.diag(R[b]), np.diag(expected), rtol=1e-10, atol=1e-14)


def test_flat_drude_matches_fresnel():
    g = GratingGeometry(400e-9, 0.0, 200e-9, GOLD)
    xi, kx0, ky = 3e6, 1e6, 2e6
    R = reflection_1d(g, ConicalIncidence(xi, kx0, ky, 0))
    re, rh = fresnel_oracle(epsilon_imag(GOLD, xi), xi, np.hypot(kx0, ky))
    np.testing.assert_allclose(np.diag(R), [re, rh], rtol=1e-10)


def test_flat_perfect_conductor():
    g = GratingGeometry(400e-9, 0.0, 200e-9, PerfectConductor())
    R = reflection_1d(g, ConicalIncidence(1e6, 2e6, 3e6, 1))
    np.testing.assert_array_equal(R, np.diag([-1.0, 1.0] * 3))


def test_vacuum_scatters_nothing():
    g = GratingGeometry(400e-9, 200e-9, 150e-9, VACUUM, ridge=VACUUM, groove=VACUUM)
    R = reflection_1d_batch(g, [1e6, 2e7], [0.0, 5e6], [3e6, 0.0], 3)
    assert np.abs(R).max() < 1e-12


@pytest.mark.parametrize("material", [Constant(6.0), GOLD])
def test_solid_film_on_same_substrate(material):
    film = GratingGeometry(400e-9, 250e-9, 400e-9, material)
    flat = GratingGeometry(400e-9, 0.0, 400e-9, material)
    for xi, kx0, ky in ((1e6, 0.0, 0.0), (5e6, 2e6, 3e6), (3e7, -1e7, 1e6)):
        a = reflection_1d_batch(film, xi, kx0, ky, 3)[0]
        b = reflection_1d_batch(flat, xi, kx0, ky, 3)[0]
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_real_and_finite():
    R = reflection_1d_batch(REFERENCE, [1e4, 1e6, 1e8], [0.0, 1e6, -5e6], [1e6, 0.0, 2e7], 4)
    assert R.dtype == np.float64
    assert np.all(np.isfinite(R))


def test_couples_polarisations_only_off_plane():
    # ky = 0: e and h decouple; ky != 0: they mix
    R = reflection_1d_batch(REFERENCE, 5e6, 1e6, [0.0, 3e6], 2)
    assert np.abs(R[0, 0::2, 1::2]).max() < 1e-13
    assert np.abs(R[1, 0::2, 1::2]).max() > 1e-3


@pytest.mark.parametrize("ky", [0.0, 3e6, -1e7])
def test_mirror_symmetry(ky):
    N = 3
    # a zero in-plane wavevector takes its q_hat along the lines, which the mirror preserves
    R = reflection_1d_batch(REFERENCE, 5e6, 0.0, ky, N, zero_dir=np.pi / 2)[0]
    P, S = mirror_n(N), h_sign(N)
    np.testing.assert_allclose(P @ S @ R @ S @ P, R, atol=1e-13)


def test_mirror_along_lines():
    S = h_sign(3)
    a = reflection_1d_batch(REFERENCE, 5e6, 1e6, 3e6, 3, zero_dir=0.3)[0]
    b = reflection_1d_batch(REFERENCE, 5e6, 1e6, -3e6, 3, zero_dir=-0.3)[0]
    np.testing.assert_allclose(S @ a @ S, b, atol=1e-13)


@pytest.mark.parametrize("xi,kx0,ky", [(1e5, 3e5, 1e5), (1e6, 0.0, 0.0), (5e6, 1e6, 2e6), (2e7, 5e6, 1e7)])
def test_specular_order_convergence(xi, kx0, ky):
    n = 160
    a = reflection_1d_batch(REFERENCE, xi, kx0, ky, n)[0][2 * n : 2 * n + 2, 2 * n : 2 * n + 2]
    b = reflection_1d_batch(REFERENCE, xi, kx0, ky, n + 2)[0][2 * n + 4 : 2 * n + 6, 2 * n + 4 : 2 * n + 6]
    assert np.abs(b - a).max() / np.abs(a).max() < 1e-6


@settings(max_examples=40, deadline=None)
@given(
    period=st.floats(200e-9, 800e-9),
    fill=st.floats(0.0, 1.0),
    depth=st.floats(0.0, 400e-9),
    log_xi=st.floats(4.0, 8.5),
    kx0=st.floats(-2e7, 2e7),
    ky=st.floats(-3e7, 3e7),
    drude=st.booleans(),
)
def test_passivity(period, fill, depth, log_xi, kx0, ky, drude):
    mat = GOLD if drude else Constant(9.0)
    g = GratingGeometry.from_fill(period, depth, fill, mat)
    R = reflection_1d_batch(g, 10**log_xi, kx0, ky, 3)[0]
    assert spectral_radius(R) <= 1 + TOL_PASSIVITY


def test_input_validation():
    with pytest.raises(ValueError):
        ConicalIncidence(0.0, 0.0, 0.0, 1)
    with pytest.raises(ValueError):
        ConicalIncidence(1e6, 0.0, 0.0, -1)
    with pytest.raises(ValueError):
        reflection_1d_batch(REFERENCE, [1e6, -1.0], 0.0, 0.0, 1)
    with pytest.raises(ValueError):
        GratingGeometry(400e-9, 1e-7, 500e-9, GOLD)
    with pytest.raises(ValueError):
        GratingGeometry.from_fill(400e-9, 1e-7, 1.2, GOLD)
    with pytest.raises(ValueError):
        GratingGeometry(400e-9, -1e-9, 100e-9, GOLD)


def test_patterned_perfect_conductor_not_supported():
    g = GratingGeometry(400e-9, 100e-9, 200e-9, PerfectConductor())
    with pytest.raises(NotImplementedError):
        reflection_1d_batch(g, 1e6, 0.0, 0.0, 1)


def test_dump_matrix(tmp_path):
    R = reflection_1d(REFERENCE, ConicalIncidence(5e6, 1e6, 2e6, 1))
    path = tmp_path / "r.tsv"
    dump_matrix(path, R, channel_labels(1))
    lines = path.read_text().splitlines()
    assert lines[0].split("\t")[1:] == channel_labels(1)
    back = np.array([[float(v) for v in line.split("\t")[1:]] for line in lines[1:]])
    np.testing.assert_array_equal(back, R)
