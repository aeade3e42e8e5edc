import math

import mpmath as mp
import numpy as np
import pytest

from subconvex import selberg
from subconvex.geom import point_pair_u
from subconvex.qexp import from_coefficients


@pytest.fixture(scope="module")
def pair4():
    return selberg.localizer(4.0)


def _mob(g, z):
    a, b, c, d = g
    return (a * z + b) / (c * z + d)


def test_u_r_conversion():
    r = np.linspace(0, 6, 13)
    assert np.allclose(selberg.u_to_r(selberg.r_to_u(r)), r, atol=1e-12)
    assert selberg.r_to_u(math.log(2.0)) == pytest.approx(point_pair_u(1j, 2j))


def test_localizer_closed_forms():
    pair = selberg.localizer(3.0)
    assert pair.g_side(0.0) == pytest.approx(2.0)
    for T in (2.0, 5.0):
        assert selberg.localizer_h(T, T) == pytest.approx(1.0 + math.exp(-T * T / math.pi), rel=1e-15)
    with pytest.raises(ValueError):
        selberg.localizer(0.0)


def test_localizer_pair_by_mpmath_fourier():
    T = 2.5
    for t in (0.0, 1.0, 2.5, 6.0):
        ref = mp.quad(lambda r: 2 * mp.cos(r * T) * mp.exp(-mp.pi * r * r) * mp.cos(r * t), [-mp.inf, 0, mp.inf])
        assert float(selberg.localizer_h(T, t)) == pytest.approx(float(ref), abs=1e-13)


def test_g_side_check():
    for T in (2.0, 5.0, 10.0):
        assert selberg.g_side_check(T) < 1e-9


def test_g_prime_matches_difference():
    x = np.linspace(0.1, 3.0, 9)
    step = 1e-6
    num = (selberg.localizer_g(3.0, x + step) - selberg.localizer_g(3.0, x - step)) / (2 * step)
    assert np.allclose(selberg.localizer_g_prime(3.0, x), num, atol=1e-7)


@pytest.mark.parametrize("T", [2.0, 5.0, 10.0])
def test_roundtrips(T):
    rep = selberg.localizer_roundtrips(T)
    assert rep.h_k_h < 1e-6
    assert rep.k_h_k < 1e-6
    assert rep.routes < 1e-6


def test_zero_kernel_forward_routes():
    zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    t = np.linspace(0, 8, 5)
    assert np.all(selberg.forward_three_step(zero, r_max=5.0).h_side(t) == 0)
    assert np.all(selberg.forward_single_step(zero, r_max=5.0)(t) == 0)
    inv = selberg.inverse_transform(lambda t: np.zeros_like(np.asarray(t, dtype=float)))
    assert np.all(inv.k_radial(np.linspace(0, 3, 5)) == 0)


def test_bare_kernel_needs_cutoff():
    with pytest.raises(ValueError):
        selberg.forward_three_step(lambda u: np.exp(-u))


def test_slow_decay_rejected():
    with pytest.raises(selberg.DecayError):
        selberg.forward_three_step(lambda u: 1.0 / (1.0 + np.asarray(u)), r_max=5.0)


def test_single_step_even(pair4):
    h = selberg.forward_single_step(pair4)
    t = np.array([0.5, 2.0, 4.0, 7.5])
    assert np.max(np.abs(h(t) - h(-t))) < 1e-10


def test_inverse_routes_agree(pair4):
    u = np.array([0.1, 1.0, 10.0])
    a = selberg.inverse_transform(pair4.h_side, "abel").k_side(u)
    b = selberg.inverse_transform(pair4.h_side, "legendre").k_side(u)
    assert np.max(np.abs(a - b)) < 1e-6
    assert np.max(np.abs(a - pair4.k_side(u))) < 1e-6
    with pytest.raises(ValueError):
        selberg.inverse_transform(pair4.h_side, "fourier")


def test_pairing_against_eigenfunction(pair4):
    # y^s is an eigenfunction of every point-pair invariant with eigenvalue h(t), s = 1/2 + it
    for t in (0.0, 2.0, 4.0, 6.0):
        v = selberg.radial_pairing(lambda z: z.imag ** (0.5 + 1j * t), pair4, 1j)
        assert abs(v - pair4.h_side(t)) < 1e-12
    v = selberg.radial_pairing(lambda z: z.imag ** (0.5 + 3j), pair4, 0.4 + 2.0j)
    assert abs(v - 2.0 ** (0.5 + 3j) * pair4.h_side(3.0)) < 1e-11


def test_kernel_single_term():
    bump = lambda r: np.where(np.abs(np.asarray(r)) < 0.2, np.cos(np.asarray(r) * 5.0) + 2.0, 0.0)
    pair = selberg.TransformPair(bump, bump, bump, "compact", 0.2)
    z, zp = 0.05 + 1.02j, 0.0 + 1.0j
    kv = selberg.automorphic_kernel(z, zp, pair, 64, 0.2)
    assert kv.terms == 1
    assert kv.value == pytest.approx(float(bump(selberg.u_to_r(point_pair_u(z, zp)))), rel=1e-14)


def test_kernel_invariance():
    pair = selberg.localizer(2.0)
    z, zp = 0.13 + 0.9j, 0.31 + 1.2j
    base = selberg.automorphic_kernel(z, zp, pair, 4, 6.0)
    for g1, g2 in (((1, 1, 4, 5), (3, -1, 4, -1)), ((1, 0, 8, 1), (1, 2, 0, 1)), ((5, 1, 4, 1), (1, 0, -4, 1))):
        moved = selberg.automorphic_kernel(_mob(g1, z), _mob(g2, zp), pair, 4, 6.0)
        assert abs(moved.value - base.value) < 1e-8


def test_kernel_cutoff_refinement():
    pair = selberg.localizer(2.0)
    z, zp = 0.13 + 0.9j, 0.31 + 1.2j
    a = selberg.automorphic_kernel(z, zp, pair, 4, 3.0)
    b = selberg.automorphic_kernel(z, zp, pair, 4, 6.0)
    assert abs(a.value - b.value) <= a.tail_bound
    assert b.terms > a.terms
    with pytest.raises(selberg.CutoffError):
        selberg.automorphic_kernel(z, zp, pair, 4, 1.0, tol=1e-12)


def test_pairing_zero_form():
    zero = from_coefficients(np.zeros(2000), 3, 64, "zero")
    rep = selberg.kernel_pairing_check(zero, zero, T_grid=(4.0,))
    assert rep.rows[0].value == 0 and rep.within_bound
    assert rep.log_slope is None


def test_pairing_within_bound_t4(eta8_small):
    rep = selberg.kernel_pairing_check(eta8_small, eta8_small, T_grid=(4.0,))
    row = rep.rows[0]
    assert abs(row.value) <= row.bound
    assert abs(row.value - row.refined) < 1e-3 * abs(row.refined)
    assert abs(row.refined) == pytest.approx(1.59e-4, rel=0.02)


def test_pairing_bound_formula():
    v = selberg.pairing_bound(1.0, 1.0, 4.0, 1.5)
    expected = 64 * 4.0**4 * math.exp(-2 * math.pi) * math.exp(3.5**2 / (4 * math.pi)) * (1 + 1.5 / 4)
    assert v == pytest.approx(expected, rel=1e-14)
