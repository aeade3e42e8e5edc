import math

import mpmath as mp
import numpy as np
import pytest

from subconvex import shifted
from subconvex.qexp import PrecisionError, expand_eta_quotient, from_coefficients
from subconvex.special import PoleProximityError
from subconvex.suites import toy_triple_mellin


def _d_oracle(f, g, s, h, delta=0.0):
    total = 0j
    for n in range(1, min(f.M - h, g.M) + 1):
        a, b = int(f.coeffs[n + h]), int(g.coeffs[n])
        if a and b:
            total += a * b * (n + h * delta / 2) ** (-(s + f.k - 1))
    return total


def test_d_series_zero_form(eta8_small):
    zero = from_coefficients(np.zeros(4001), 3, 64, "zero")
    assert shifted.D_series(eta8_small, zero, 3.0, 8).value == 0


def test_d_series_shift_domain(eta8_small):
    with pytest.raises(ValueError):
        shifted.D_series(eta8_small, eta8_small, 3.0, 0)
    with pytest.raises(ValueError):
        shifted.D_series_delta(eta8_small, eta8_small, 3.0, 8, delta=-0.1)


def test_d_series_against_loop(eta8_small):
    for h in (8, 16, 48):
        got = shifted.D_series(eta8_small, eta8_small, 3.0 + 1.0j, h, tol=1e-5)
        assert got.value == pytest.approx(_d_oracle(eta8_small, eta8_small, 3.0 + 1.0j, h), rel=1e-12)


def test_d_series_delta_zero_is_identical(eta8_small):
    a = shifted.D_series_delta(eta8_small, eta8_small, 3.0, 8, 0.0, tol=1e-5)
    b = shifted.D_series(eta8_small, eta8_small, 3.0, 8, tol=1e-5)
    assert a.value == b.value


def test_d_series_delta_linear_convergence(eta8_small):
    base = shifted.D_series(eta8_small, eta8_small, 3.0, 8, tol=1e-5).value
    gaps = [abs(shifted.D_series_delta(eta8_small, eta8_small, 3.0, 8, d, tol=1e-5).value - base)
            for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3] > 0
    # derivative regime: gap/delta settles once 4 delta is small next to n = 1
    assert gaps[2] / 1e-3 == pytest.approx(gaps[3] / 1e-4, rel=0.01)
    assert math.log10(gaps[1] / gaps[2]) == pytest.approx(1.0, abs=0.05)
    assert shifted.D_series_delta(eta8_small, eta8_small, 3.0, 8, 1e-2, tol=1e-5).value == pytest.approx(
        _d_oracle(eta8_small, eta8_small, 3.0, 8, 1e-2), rel=1e-12)


def test_d_series_large_shift_finite(eta8_small):
    v = shifted.D_series_delta(eta8_small, eta8_small, 3.0, 1000, 0.5, tol=1e-3)
    assert np.isfinite(v.value)


def test_d_series_tail_certificate(eta8_small):
    short = expand_eta_quotient("eta(8z)^3", 1000)
    a = shifted.D_series(short, short, 3.0, 8, tol=1.0)
    b = shifted.D_series(eta8_small, eta8_small, 3.0, 8, tol=1.0)
    assert a.tail >= abs(a.value - b.value)
    with pytest.raises(PrecisionError):
        shifted.D_series(short, short, 3.0, 8, tol=1e-12)


def test_d_series_oldform_constrained(eta8_small):
    f0 = expand_eta_quotient("eta(8z)^3", 20_000)
    fa, fb = f0.scaled(3), f0.scaled(5)
    for h in (2, 4, 16):
        d = shifted.D_series(fa, fb, 3.0, h, tol=1.0)
        c = shifted.D_series_constrained(f0, f0, 3.0, h, 3, 5, (20_000 - h) // 5)
        assert d.value == pytest.approx(c, rel=1e-12, abs=1e-300)


def test_zq_no_solutions(eta8_small):
    assert shifted.Z_Q_bruteforce(eta8_small, 2.5, 2.5, 10_000, m_max=100).value == 0


@pytest.mark.parametrize("l1,l2", [(1, 1), (3, 5)])
def test_zq_oldform_relation(eta8_small, l1, l2):
    a = shifted.Z_Q_bruteforce(eta8_small, 2.5, 2.5 + 0.5j, 11, l1, l2, 1500).value
    b = shifted.Z_Q_oldform(eta8_small, 2.5, 2.5 + 0.5j, 11, l1, l2, 1500).value
    assert a == pytest.approx((l1 * l2) ** 0.25 * b, rel=1e-10)


def test_zq_matches_d_sum(eta8_small):
    a = shifted.Z_Q_bruteforce(eta8_small, 2.5, 2.5, 11, m_max=3000).value
    assert a == pytest.approx(shifted.Z_Q_from_D(eta8_small, 2.5, 2.5, 11, 3000), rel=1e-12)


def test_zq_tail_certificate(eta8_small):
    a = shifted.Z_Q_bruteforce(eta8_small, 3.0, 3.0, 11, m_max=1000)
    b = shifted.Z_Q_bruteforce(eta8_small, 3.0, 3.0, 11, m_max=2000)
    assert a.tail >= abs(a.value - b.value)


def test_gamma_factor_symmetry_and_values():
    for s, u in ((2.3, 0.7), (2.3 + 0.4j, 0.5 + 1.5j)):
        assert shifted.gamma_factor_G(s, u, 1.5) == pytest.approx(shifted.gamma_factor_G(s, 1 - u, 1.5), rel=1e-12)
    g = mp.gamma
    # s = 2 sits on the Gamma(1 - s) pole
    with pytest.raises(PoleProximityError):
        shifted.gamma_factor_G(2.0, 0.5, 1.5)
    with pytest.raises(PoleProximityError):
        shifted.gamma_factor_G(1.0 + 1e-8, 0.5, 1.5)
    s, u = 2.5, 0.5 + 2j
    ref = complex(0.5 * (4 * mp.pi) ** 1.5 * g(s + u - 1) * g(s - u) * g(1 - s) / (g(u) * g(1 - u) * g(s + 0.5)))
    assert shifted.gamma_factor_G(s, u, 1.5) == pytest.approx(ref, rel=1e-12)


def test_level_assumption():
    with pytest.raises(shifted.LevelAssumptionError):
        shifted.check_level(64)
    shifted.check_level(92)
    with pytest.raises(ValueError):
        shifted.eisenstein_rho(3, 92, 2.0, 1)


@pytest.mark.parametrize("w,N,m", [(1, 4, 1), (2, 92, 3), (23, 92, -46), (4, 92, 12), (92, 92, 5)])
def test_eisenstein_rho_closed_form(w, N, m):
    tr = shifted.eisenstein_rho_truncated(w, N, 2.0, m, 2000)
    exact = shifted.eisenstein_rho(w, N, 2.0, m)
    assert abs(tr.value - exact) <= 1e-10
    assert abs(tr.value - exact) <= tr.tail


def test_eisenstein_rho_constant_branch():
    # the m = 0 c-sum carries the zeta(2s-1)/zeta(2s) factor of the constant term
    s = 2.0 + 0.5j
    tr = shifted.eisenstein_rho_truncated(2, 92, s, 0, 20_000)
    exact = shifted.eisenstein_rho(2, 92, s, 0) * complex(mp.zeta(2 * s - 1) / mp.zeta(2 * s))
    assert abs(tr.value - exact) <= tr.tail
    assert abs(tr.value - exact) <= 1e-9 * abs(exact)
    assert shifted.eisenstein_rho(2, 92, s, 0) == shifted.eisenstein_rho_constant(2, 92, s)


def test_eisenstein_rho_truncation_doubling():
    a = shifted.eisenstein_rho_truncated(1, 4, 2.0, 1, 1000)
    b = shifted.eisenstein_rho_truncated(1, 4, 2.0, 1, 2000)
    assert abs(a.value - b.value) < 1e-8 and a.tail >= abs(a.value - b.value)


def test_eisenstein_rho_even_in_m():
    for m in (1, 6, 46):
        assert shifted.eisenstein_rho(2, 92, 1.7 + 0.3j, m) == shifted.eisenstein_rho(2, 92, 1.7 + 0.3j, -m)


def test_zeta_q_truncation_doubling():
    a = shifted.zeta_Q_a(1, 4, 2.0, 0.5 + 2j, 3, 20_000)
    b = shifted.zeta_Q_a(1, 4, 2.0, 0.5 + 2j, 3, 40_000)
    assert abs(a.value - b.value) < 1e-6
    assert a.tail >= abs(a.value - b.value)


def test_zeta_q_thinning():
    a = shifted.zeta_Q_a_terms(2, 92, 2.0, 0.5 + 1j, 5, 40)
    b = shifted.zeta_Q_a_terms(2, 92, 2.0, 0.5 + 1j, 10, 20)
    assert np.allclose(a[1::2], b, rtol=1e-14, atol=0)


def test_zeta_q_leading_term_dominates():
    u = 0.5 + 0.5j
    # the h = 2 term is 2^{-12} of the first up to the ratio of rho values
    v = shifted.zeta_Q_a(1, 4, 12.0, u, 10_000, 30)
    lead = complex(mp.zeta(2 - 2 * u)) * shifted.zeta_Q_a_terms(1, 4, 12.0, u, 10_000, 1)[0]
    assert abs(v.value - lead) < 1e-3 * abs(lead)


def test_triple_mellin_single_solution():
    coeffs = np.zeros(21)
    coeffs[4] = 2.0
    coeffs[1] = 1.0
    toy = from_coefficients(coeffs, 3, 4, "two-term")
    r = shifted.triple_mellin_inner_check(toy, 2.5, 2.5, 3, m_max=20)
    assert r.pairs == 1
    assert r.discrepancy < 1e-6


def test_triple_mellin_toy_collapse():
    assert toy_triple_mellin().discrepancy < 1e-6


def test_triple_mellin_abscissa_domain(eta8_small):
    with pytest.raises(ValueError):
        shifted.triple_mellin_inner_check(eta8_small, 2.5, 2.5, 11, m_max=200, abscissa=1.0)


def test_triple_mellin_real_form(eta8_small):
    r = shifted.triple_mellin_inner_check(eta8_small, 2.5, 2.5, 11, m_max=200)
    assert r.discrepancy < 1e-4


def test_triple_mellin_half_weight_shift_disagrees(eta8_small):
    r = shifted.triple_mellin_inner_check(eta8_small, 2.5, 2.5, 11, m_max=200, gamma_shift=0.75)
    assert r.discrepancy == pytest.approx(0.3077, abs=1e-3)


def test_barnes_grid():
    assert shifted.barnes_grid_check((1.5, 2.5 + 1j, 4.0), (0.3, 1.0, 4.0)) < 1e-8
