import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subconvex.arith import euler_phi, kronecker
from subconvex.chars import (
    character_from_function,
    conductor_and_primitivity,
    enumerate_characters,
    gauss_sum,
    gauss_sum_table,
    jacobi_character,
    nebentypus_ell,
)


def test_modulus_one():
    chars = enumerate_characters(1)
    assert len(chars) == 1
    assert chars[0](5) == 1
    assert gauss_sum(1, chars[0]) == pytest.approx(1.0)


def test_modulus_five():
    chars = enumerate_characters(5)
    assert len(chars) == 4
    assert chars[0].is_principal()
    real_nonprincipal = [c for c in chars if c.is_real() and not c.is_principal()]
    assert len(real_nonprincipal) == 1
    legendre = real_nonprincipal[0]
    assert [round(legendre(n).real) for n in range(5)] == [0, 1, -1, -1, 1]


@pytest.mark.parametrize("Q", [12, 7, 9, 20])
def test_orthogonality(Q):
    chars = enumerate_characters(Q)
    table = np.array([c.values for c in chars])
    gram = table.T @ np.conj(table)
    phi = euler_phi(Q)
    expected = np.zeros((Q, Q))
    for a in range(Q):
        if math.gcd(a, Q) == 1:
            expected[a, a] = phi
    assert np.max(np.abs(gram - expected)) < 1e-10


def test_group_structure_up_to_60():
    for Q in range(1, 61):
        chars = enumerate_characters(Q)
        assert len(chars) == euler_phi(Q)
        keys = {tuple(np.round(c.values, 8)) for c in chars}
        assert len(keys) == len(chars)
        for a in chars[:: max(1, len(chars) // 5)]:
            for b in chars[:: max(1, len(chars) // 4)]:
                prod = np.round((a * b).values, 8)
                assert tuple(prod) in keys
            inv = np.round(a.conj().values, 8)
            assert tuple(inv) in keys
            assert np.allclose((a * a.conj()).values, chars[0].values)


@given(st.integers(2, 80), st.data())
def test_character_invariants(Q, data):
    chars = enumerate_characters(Q)
    chi = chars[data.draw(st.integers(0, len(chars) - 1))]
    m = data.draw(st.integers(0, 5 * Q))
    n = data.draw(st.integers(0, 5 * Q))
    assert cmath.isclose(chi(m * n), chi(m) * chi(n), abs_tol=1e-12)
    assert abs(chi(1) - 1) < 1e-12
    assert (abs(chi(n)) < 1e-12) == (math.gcd(n, Q) > 1)
    assert abs(abs(chi(n)) - 1) < 1e-12 or abs(chi(n)) < 1e-12


def test_gauss_sums_primitive_up_to_200():
    worst_mod = worst_sep = 0.0
    for Q in range(1, 201):
        for chi in enumerate_characters(Q):
            if not chi.primitive:
                continue
            table = gauss_sum_table(chi)
            g1 = table[1 % Q]
            worst_mod = max(worst_mod, abs(abs(g1) - math.sqrt(Q)))
            worst_sep = max(worst_sep, float(np.max(np.abs(table - np.conj(chi.values) * g1))))
    assert worst_mod < 1e-10
    assert worst_sep < 1e-10


def test_gauss_sum_scalar_matches_table():
    chi = enumerate_characters(13)[5]
    t = gauss_sum_table(chi)
    for n in range(-13, 26):
        assert abs(gauss_sum(n, chi) - t[n % 13]) < 1e-12


def test_quadratic_gauss_sum_value():
    # for p = 1 mod 4 the Legendre Gauss sum is sqrt(p), for p = 3 mod 4 it is i sqrt(p)
    for p in (5, 13, 17, 3, 7, 11):
        g = gauss_sum(1, jacobi_character(p))
        expected = math.sqrt(p) if p % 4 == 1 else 1j * math.sqrt(p)
        assert abs(g - expected) < 1e-10


def test_nebentypus_ell():
    one = nebentypus_ell(1)
    assert all(one(d) == 1 for d in range(1, 200, 2))
    five = nebentypus_ell(5)
    for d in (3, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97):
        squares = {x * x % 5 for x in range(1, 5)}
        assert five(d) == (1 if d % 5 in squares else -1)
    three, seven = nebentypus_ell(3), nebentypus_ell(7)
    twenty_one = nebentypus_ell(21)
    assert all(three(d) * seven(d) == twenty_one(d) for d in range(-101, 102, 2))


def test_conductors():
    assert conductor_and_primitivity(enumerate_characters(12)[0]) == (1, False)
    legendre5 = jacobi_character(5)
    assert conductor_and_primitivity(legendre5) == (5, True)
    induced = character_from_function(10, lambda n: kronecker(n, 5))
    assert conductor_and_primitivity(induced) == (5, False)


def test_primitive_counts():
    # number of primitive characters mod p is p - 2
    for p in (3, 5, 7, 101):
        assert sum(c.primitive for c in enumerate_characters(p)) == p - 2
    # mod 4: one primitive; mod 8: two
    assert sum(c.primitive for c in enumerate_characters(4)) == 1
    assert sum(c.primitive for c in enumerate_characters(8)) == 2
