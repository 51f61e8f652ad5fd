import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casimir_torque.crossed import (
    BrillouinCell,
    ChannelBasis,
    assemble_reflection_1,
    assemble_reflection_2,
    cell_area,
    channel_wavevector,
    dump_operator,
    round_trip_batch,
    translation_diagonal,
)
from casimir_torque.energy import _central_log_batch
from casimir_torque.grating import GratingGeometry, fresnel
from casimir_torque.materials import VACUUM, Constant, epsilon_imag, gold_drude

D = 400e-9
GOLD = gold_drude()
REFERENCE = GratingGeometry(D, 200e-9, 200e-9, GOLD)


def swap_permutation(basis):
    P = np.zeros((basis.size, basis.size))
    for n, m, s in basis.channels():
        P[basis.index(m, n, s), basis.index(n, m, s)] = 1
    return P


# Basis and wavevectors -------------------------------------------------------


def test_basis_size_and_order():
    b = ChannelBasis(2, D, 0.5)
    assert b.size == 50
    ch = b.channels()
    assert len(ch) == b.size
    assert ch[:3] == [(-2, -2, "e"), (-2, -2, "h"), (-2, -1, "e")]
    assert all(b.index(*c) == i for i, c in enumerate(ch))


def test_zeroth_channel_is_k():
    b = ChannelBasis(2, D, 0.7, (3e5, -2e5))
    assert channel_wavevector(b, 0, 0) == pytest.approx((3e5, -2e5), abs=1e-9)


def test_square_lattice_channel():
    b = ChannelBasis(1, D, math.pi / 2)
    kx, ky = channel_wavevector(b, 1, 1)
    assert kx == pytest.approx(2 * math.pi / D, rel=1e-14)
    assert ky == pytest.approx(2 * math.pi / D, rel=1e-14)


def test_oblique_channel_trigonometry():
    th, G = math.radians(30), 2 * math.pi / D
    k = (0.1 * G, 0.2 * G)
    b = ChannelBasis(2, D, th, k)
    kx = k[0] + 2 * G - 1 * G * math.cos(th)
    ky = k[1] + 0 - 1 * G * math.sin(th)
    assert channel_wavevector(b, 2, -1) == pytest.approx((kx, ky), rel=1e-14)


def test_channel_outside_truncation():
    with pytest.raises(IndexError):
        channel_wavevector(ChannelBasis(1, D, 0.5), 2, 0)


# Translation -----------------------------------------------------------------


def test_translation_identity_at_contact():
    b = ChannelBasis(1, D, 0.4, (1e6, 2e6))
    np.testing.assert_array_equal(translation_diagonal(b, 1e7, 0.0).matrix, np.eye(18))


def test_translation_specular_at_normal():
    b = ChannelBasis(1, D, 0.4)
    t = translation_diagonal(b, 1e7, 1e-7).matrix
    i = b.index(0, 0, "e")
    assert t[i, i] == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert t[i + 1, i + 1] == t[i, i]


@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
def test_translation_scalar_recomputation(theta):
    xi, L = 1e7, 100e-9
    b = ChannelBasis(1, D, theta, (1e6, 0.0))
    t = translation_diagonal(b, xi, L).matrix
    i = b.index(1, 0, "h")
    assert t[i, i] == pytest.approx(math.exp(-math.sqrt(xi**2 + (1e6 + 2 * math.pi / D) ** 2) * L), rel=1e-14)
    assert np.count_nonzero(t - np.diag(np.diag(t))) == 0


def test_translation_bounded_and_decaying_along_rays():
    b = ChannelBasis(3, D, 0.7, (1e5, -2e5))
    t = np.diag(translation_diagonal(b, 2e6, 1e-7).matrix).reshape(7, 7, 2)[..., 0]
    assert np.all((t > 0) & (t < 1))
    for dn, dm in ((1, 0), (0, 1), (1, 1), (1, -1)):
        ray = [t[3 + j * dn, 3 + j * dm] for j in range(4)]
        assert all(x > y for x, y in zip(ray[1:], ray[2:]))


def test_translation_rejects_bad_input():
    b = ChannelBasis(1, D, 0.4)
    with pytest.raises(ValueError):
        translation_diagonal(b, 0.0, 1e-7)
    with pytest.raises(ValueError):
        translation_diagonal(b, 1e6, -1e-7)


# Reflection operators --------------------------------------------------------


def test_block_patterns_n1():
    b = ChannelBasis(1, D, math.radians(40), (2e6, -1e6))
    r1 = assemble_reflection_1(b, REFERENCE, 5e6).matrix
    r2 = assemble_reflection_2(b, REFERENCE, 5e6).matrix
    assert r1.shape == r2.shape == (18, 18)
    ch = b.channels()
    for i, (n, m, _) in enumerate(ch):
        for j, (n2, m2, _) in enumerate(ch):
            if m != m2:
                assert abs(r1[i, j]) < 1e-14
            if n != n2:
                assert abs(r2[i, j]) < 1e-14
    # and the allowed blocks are populated
    assert abs(r1[b.index(-1, 0, "e"), b.index(1, 0, "h")]) > 1e-6
    assert abs(r2[b.index(0, -1, "e"), b.index(0, 1, "h")]) > 1e-6


def test_vacuum_gratings_reflect_nothing():
    g = GratingGeometry(D, 200e-9, 100e-9, VACUUM)
    b = ChannelBasis(1, D, 0.8, (1e6, 1e6))
    assert np.abs(assemble_reflection_1(b, g, 3e6).matrix).max() < 1e-12
    assert np.abs(assemble_reflection_2(b, g, 3e6).matrix).max() < 1e-12


def test_flat_plates_are_fresnel():
    g = GratingGeometry(D, 0.0, 200e-9, GOLD)
    xi = 4e6
    b = ChannelBasis(1, D, 0.9, (1e6, 3e5))
    eps = epsilon_imag(GOLD, xi)
    kv = b.wavevectors().reshape(-1, 2)
    q = np.hypot(kv[:, 0], kv[:, 1])
    re, rh = fresnel(eps, xi, q)
    expected = np.column_stack([re, rh]).ravel()
    for r in (assemble_reflection_1(b, g, xi).matrix, assemble_reflection_2(b, g, xi).matrix):
        np.testing.assert_allclose(np.diag(r), expected, rtol=1e-10)
        assert np.abs(r - np.diag(np.diag(r))).max() < 1e-12


def test_right_angle_permutation_oracle():
    # the zero-wavevector channel takes its polarisation axis by convention;
    # a vanishing k on the diagonal makes that axis swap-invariant
    b = ChannelBasis(1, D, math.pi / 2, (1e-3, 1e-3))
    r1 = assemble_reflection_1(b, REFERENCE, 5e6).matrix
    r2 = assemble_reflection_2(b, REFERENCE, 5e6).matrix
    P = swap_permutation(b)
    np.testing.assert_allclose(P @ r1 @ P.T, r2, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(theta=st.floats(0.1, 3.0), frame=st.floats(-3.0, 3.0), kx=st.floats(-1e7, 1e7), ky=st.floats(-1e7, 1e7),
       xi=st.floats(1e5, 3e7))
def test_rotating_both_gratings_changes_nothing(theta, frame, kx, ky, xi):
    c, s = math.cos(frame), math.sin(frame)
    k0 = np.array([[kx, ky]])
    k1 = k0 @ np.array([[c, s], [-s, c]])
    a = round_trip_batch(REFERENCE, np.array([xi]), k0, 1, theta, 1e-7)
    b = round_trip_batch(REFERENCE, np.array([xi]), k1, 1, theta, 1e-7, frame=frame)
    ga, _, _ = _central_log_batch(a, 1)
    gb, _, _ = _central_log_batch(b, 1)
    assert gb[0] == pytest.approx(ga[0], rel=1e-9, abs=1e-14)
    np.testing.assert_allclose(np.linalg.eigvals(b[0]).real.sum(), np.trace(a[0]), rtol=1e-9, atol=1e-14)


def test_round_trip_matches_dense_product():
    b = ChannelBasis(1, D, 0.6, (2e6, 1e6))
    xi, L = 6e6, 1.2e-7
    r1 = assemble_reflection_1(b, REFERENCE, xi).matrix
    r2 = assemble_reflection_2(b, REFERENCE, xi).matrix
    t = translation_diagonal(b, xi, L).matrix
    M = round_trip_batch(REFERENCE, np.array([xi]), np.array([b.k]), 1, b.theta, L)[0]
    np.testing.assert_allclose(M, r1 @ t @ r2 @ t, atol=1e-15)


def test_dump_operator(tmp_path):
    b = ChannelBasis(1, D, 0.6)
    op = translation_diagonal(b, 1e7, 1e-7)
    path = tmp_path / "t.tsv"
    dump_operator(path, op)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# tag=Translation N=1")
    assert lines[1].split("\t")[1] == "-1,-1,e"
    assert len(lines) == 2 + 18


# Reciprocal cell -------------------------------------------------------------


@pytest.mark.parametrize("deg", [5, 30, 90, 150])
def test_cell_area(deg):
    cell = BrillouinCell(D, math.radians(deg))
    _, w = cell.nodes(7)
    exact = 4 * math.pi**2 / D**2 * math.sin(math.radians(deg))
    assert cell_area(cell) == pytest.approx(exact, rel=1e-15)
    assert abs(w.sum() / exact - 1) < 1e-12


def test_cell_area_examples():
    assert cell_area(BrillouinCell(D, math.pi / 2)) == pytest.approx((2 * math.pi / D) ** 2, rel=1e-15)
    assert cell_area(BrillouinCell(D, math.radians(30))) == pytest.approx(4 * math.pi**2 / D**2 * 0.5, rel=1e-14)


def test_cell_rule_integrates_polynomials():
    cell = BrillouinCell(D, math.radians(50))
    k, w = cell.nodes(8)
    b1, b2 = cell.b1, cell.b2
    # second moment of the parallelogram {a b1 + c b2, |a|, |c| <= 1/2}
    M = cell_area(cell) / 12 * (np.outer(b1, b1) + np.outer(b2, b2))
    np.testing.assert_allclose((w[:, None, None] * k[:, :, None] * k[:, None, :]).sum(0), M, rtol=1e-12)
    np.testing.assert_allclose((w[:, None] * k).sum(0), 0.0, atol=1e-12 * np.abs(k).max() * w.sum())


def test_wigner_seitz():
    cell = BrillouinCell(D, math.pi / 2)
    G = 2 * math.pi / D
    assert cell.in_wigner_seitz([[0.0, 0.0]])[0]
    assert cell.in_wigner_seitz([[0.49 * G, 0.49 * G]])[0]
    assert not cell.in_wigner_seitz([[0.51 * G, 0.0]])[0]


def test_cell_rejects_degenerate_angle():
    for th in (0.0, math.pi, -0.1):
        with pytest.raises(ValueError):
            BrillouinCell(D, th)
