"""Amplified character averages, the Parseval identity on (Z/Q)^*, and the
split of the congruence sum into diagonal and shifted pieces.

Notation: for primes l1, l2 and a cutoff H supported on [1, 2],

    S1 = sum_{m1 l1 = m2 l2}        A(m1) conj A(m2) H(m1/X) H(m2/X)
    S2 = sum_{m1 l1 = m2 l2 + hQ}   (h > 0)
    S3 = sum_{m1 l1 + hQ = m2 l2}   (h > 0)

and S1 + S2 + S3 is the full sum over m1 l1 = m2 l2 (mod Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arith import euler_phi, primes_in
from .chars import DirichletCharacter, enumerate_characters, gauss_sum, gauss_sum_table
from .lfunc import UnsupportedTwistError, dual_character
from .qexp import PrecisionError, QExpansion, normalized_coeffs


class DegenerateFitError(ValueError):
    """A growth fit was requested on data that vanish identically."""


# ---------------------------------------------------------------- cutoffs


@dataclass(frozen=True)
class SmoothCutoff:
    evaluator: Callable[[np.ndarray], np.ndarray]
    first_derivative: Callable[[np.ndarray], np.ndarray] | None = None
    second_derivative: Callable[[np.ndarray], np.ndarray] | None = None
    support: tuple[float, float] = (1.0, 2.0)
    name: str = "custom"

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))


def _bump_parts(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    t = 2.0 * x - 3.0
    inside = np.abs(t) < 1.0
    tt = np.where(inside, t, 0.0)
    den = tt * tt - 1.0
    phi = np.where(inside, np.exp(1.0 / den + 1.0), 0.0)
    return inside, tt, den, phi


def _bump(x):
    return _bump_parts(x)[3]


def _bump_d1(x):
    inside, t, den, phi = _bump_parts(x)
    return np.where(inside, 2.0 * phi * (-2.0 * t / den ** 2), 0.0)


def _bump_d2(x):
    inside, t, den, phi = _bump_parts(x)
    g1 = -2.0 * t / den ** 2
    g1p = -2.0 / den ** 2 + 8.0 * t * t / den ** 3
    return np.where(inside, 4.0 * phi * (g1 * g1 + g1p), 0.0)


def default_bump() -> SmoothCutoff:
    """exp(1/((2x-3)^2 - 1) + 1) on (1, 2), zero elsewhere; maximum 1 at x = 3/2."""
    return SmoothCutoff(_bump, _bump_d1, _bump_d2, (1.0, 2.0), "bump")


# ---------------------------------------------------------------- helpers


@dataclass(frozen=True)
class AmplifierParams:
    L: float
    X: float
    Q: int
    ell_1: int = 1
    ell_2: int = 1

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be at least 2")
        if self.X <= 0 or self.Q < 1:
            raise ValueError("X must be positive and Q at least 1")


def prime_window(L: float, N: int, Q: int) -> list[int]:
    """Primes in [L, 2L] coprime to N Q."""
    return [p for p in primes_in(L, 2 * L) if math.gcd(p, N * Q) == 1]


def _window(f: QExpansion, H, X: float, reach: int = 1):
    """(m, A(m) H(m/X)) over nonzero coefficients with X < m < 2X."""
    top = int(math.floor(2 * X))
    if top > f.M:
        raise PrecisionError(f"window up to {top} needs more than {f.M} coefficients")
    lo = int(math.floor(X)) + 1
    m = f.support[(f.support >= lo) & (f.support <= top)]
    A = normalized_coeffs(f)[m]
    w = A * np.asarray(H(m / X), dtype=float)
    keep = w != 0
    return m[keep], w[keep].astype(complex)


# ---------------------------------------------------------------- amplified sum


def amplified_sum_direct(f: QExpansion, chi: DirichletCharacter, H, X: float, L: float,
                         chi_prime: DirichletCharacter | None = None) -> float:
    """sum_psi |sum_l psi(l) conj chi'(l)|^2 |g(1, conj chi)^{-1} sum_m A(m) g(m, psi) H(m/X)|^2 by brute force."""
    Q = chi.modulus
    chi_prime = dual_character(chi) if chi_prime is None else chi_prime
    ells = prime_window(L, f.N, Q)
    m, w = _window(f, H, X)
    buckets = np.zeros(Q, dtype=complex)
    np.add.at(buckets, m % Q, w)
    g1 = gauss_sum(1, chi.conj())
    total = 0.0
    for psi in enumerate_characters(Q):
        amp = sum(psi(l) * np.conj(chi_prime(l)) for l in ells)
        inner = np.dot(buckets, gauss_sum_table(psi)) / g1
        total += abs(amp) ** 2 * abs(inner) ** 2
    return float(total)


def amplified_sum_parseval(f: QExpansion, chi: DirichletCharacter, H, X: float, L: float,
                           chi_prime: DirichletCharacter | None = None) -> float:
    """Same quantity summed over units a mod Q:

    phi(Q)/|g(1, conj chi)|^2 sum_{(a,Q)=1} |sum_l conj chi'(l) sum_m A(m) H(m/X) e(m a lbar / Q)|^2.
    """
    Q = chi.modulus
    chi_prime = dual_character(chi) if chi_prime is None else chi_prime
    ells = prime_window(L, f.N, Q)
    m, w = _window(f, H, X)
    # T(u) = sum_m A(m) H(m/X) e(m u / Q) for every u, directly
    u = np.arange(Q)
    T = np.exp(2j * np.pi * np.outer(u, m % Q) / Q) @ w
    G = np.zeros(Q, dtype=complex)
    for l in ells:
        lbar = pow(l, -1, Q) if Q > 1 else 0
        G += np.conj(chi_prime(l)) * T[(u * lbar) % Q]
    units = np.array([math.gcd(a, Q) == 1 for a in range(Q)])
    g1 = gauss_sum(1, chi.conj())
    return float(euler_phi(Q) / abs(g1) ** 2 * np.sum(np.abs(G[units]) ** 2))


def parseval_check(Q: int, F) -> tuple[float, float]:
    """(sum_psi |F(psi)|^2, sum_{(a,Q)=1} |Fhat(a)|^2) with Fhat(a) = phi^{-1/2} sum_psi F(psi) conj psi(a).

    F is an array indexed like enumerate_characters(Q) or a callable on characters.
    """
    chars = enumerate_characters(Q)
    vals = np.array([F(psi) for psi in chars] if callable(F) else F, dtype=complex)
    if vals.shape != (len(chars),):
        raise ValueError("F must have one value per character")
    table = np.array([psi.values for psi in chars])  # phi x Q
    units = np.array([math.gcd(a, Q) == 1 for a in range(Q)]) if Q > 1 else np.array([True])
    fhat = (vals @ np.conj(table))[units] / math.sqrt(len(chars))
    return float(np.sum(np.abs(vals) ** 2)), float(np.sum(np.abs(fhat) ** 2))


# ---------------------------------------------------------------- split sums


@dataclass(frozen=True)
class SplitSums:
    S1: complex
    S2: complex
    S3: complex
    congruence_total: complex  # sum over m1 l1 = m2 l2 (mod Q) computed class by class

    @property
    def total(self) -> complex:
        return self.S1 + self.S2 + self.S3


def shifted_split_sums_bruteforce(f: QExpansion, H, X: float, ell_1: int, ell_2: int, Q: int) -> SplitSums:
    """All pairs (m1, m2) enumerated explicitly."""
    m1, w1 = _window(f, H, X)
    m2, w2 = _window(f, H, X)
    d = np.subtract.outer(m1 * ell_1, m2 * ell_2)
    prod = np.outer(w1, np.conj(w2))
    cong = d % Q == 0
    s1 = prod[d == 0].sum()
    s2 = prod[cong & (d > 0)].sum()
    s3 = prod[cong & (d < 0)].sum()
    return SplitSums(complex(s1), complex(s2), complex(s3), complex(prod[cong].sum()))


def shifted_split_sums(f: QExpansion, H, X: float, ell_1: int, ell_2: int, Q: int) -> SplitSums:
    """S1, S2, S3 by sorting within residue classes of m l (mod Q); O(n log n)."""
    m1, w1 = _window(f, H, X)
    m2, w2 = _window(f, H, X)
    v1, v2 = m1 * ell_1, m2 * ell_2
    w2c = np.conj(w2)
    r1, r2 = v1 % Q, v2 % Q
    s1 = s2 = s3 = tot = 0j
    order2 = np.lexsort((v2, r2))
    v2s, r2s, w2s = v2[order2], r2[order2], w2c[order2]
    cums = np.concatenate([[0j], np.cumsum(w2s)])
    for r in np.unique(r1):
        lo, hi = np.searchsorted(r2s, r, "left"), np.searchsorted(r2s, r, "right")
        if lo == hi:
            continue
        sel = r1 == r
        a_v, a_w = v1[sel], w1[sel]
        cls_v = v2s[lo:hi]
        left = lo + np.searchsorted(cls_v, a_v, "left")  # v2 < v1
        right = lo + np.searchsorted(cls_v, a_v, "right")  # v2 <= v1
        below = cums[left] - cums[lo]
        equal = cums[right] - cums[left]
        above = cums[hi] - cums[right]
        s1 += np.dot(a_w, equal)
        s2 += np.dot(a_w, below)
        s3 += np.dot(a_w, above)
        tot += a_w.sum() * (cums[hi] - cums[lo])
    return SplitSums(complex(s1), complex(s2), complex(s3), complex(tot))


def diagonal_sum(f: QExpansion, H, X: float, ell_1: int, ell_2: int) -> complex:
    """S1 alone, via matching m1 l1 = m2 l2."""
    m1, w1 = _window(f, H, X)
    m2, w2 = _window(f, H, X)
    common, i1, i2 = np.intersect1d(m1 * ell_1, m2 * ell_2, assume_unique=True, return_indices=True)
    return complex(np.dot(w1[i1], np.conj(w2[i2])))


# ---------------------------------------------------------------- inequality


@dataclass(frozen=True)
class AmplificationReport:
    S: float
    bound: float  # phi(Q) sum chi'(l1) conj chi'(l2) (S1+S2+S3)(l1, l2)
    bound_swapped: float  # same with chi'(l2) conj chi'(l1)
    bound_imag: float
    a_zero_term: float  # the a = 0 residue added when passing to all a mod Q
    exact_residual: float  # S - (bound - a_zero_term)
    single_term: float  # (#primes)^2 |g^{-1} sum A g(m, chi') H|^2, the psi = chi' summand
    single_term_unsquared: float  # L^2/(log L)^2 |g^{-1} sum A g(m, chi') H|
    scale: float

    @property
    def slack(self) -> float:
        return self.bound - self.S


def amplification_inequality_check(f: QExpansion, chi: DirichletCharacter, H, X: float, L: float,
                                   chi_prime: DirichletCharacter | None = None) -> AmplificationReport:
    """S against its shifted-sum bound.  The bound has |g(1, conj chi)|^2 = Q built in,
    so chi must be primitive."""
    if not chi.primitive:
        raise UnsupportedTwistError("the shifted-sum bound needs a primitive character")
    Q = chi.modulus
    chi_prime = dual_character(chi) if chi_prime is None else chi_prime
    ells = prime_window(L, f.N, Q)
    S = amplified_sum_direct(f, chi, H, X, L, chi_prime)
    phi = euler_phi(Q)
    bound = swapped = 0j
    scale = 0.0
    for l1 in ells:
        for l2 in ells:
            sp = shifted_split_sums_bruteforce(f, H, X, l1, l2, Q)
            bound += chi_prime(l1) * np.conj(chi_prime(l2)) * sp.total
            swapped += chi_prime(l2) * np.conj(chi_prime(l1)) * sp.total
            scale += abs(sp.S1) + abs(sp.S2) + abs(sp.S3)
    bound *= phi
    swapped *= phi
    m, w = _window(f, H, X)
    g1 = gauss_sum(1, chi.conj())
    a0 = phi / abs(g1) ** 2 * abs(sum(np.conj(chi_prime(l)) for l in ells)) ** 2 * abs(w.sum()) ** 2
    table = gauss_sum_table(chi_prime)
    inner = abs(np.dot(w, table[m % Q]) / g1)
    single = len(ells) ** 2 * inner ** 2
    single_display = L ** 2 / math.log(L) ** 2 * inner
    return AmplificationReport(S, float(bound.real), float(swapped.real), float(abs(bound.imag)), float(a0),
                               float(S - (bound.real - a0)), float(single), float(single_display),
                               float(phi * scale + abs(S)))


# ---------------------------------------------------------------- growth scans


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    constant: float
    xs: tuple[float, ...]
    values: tuple[float, ...]


def _fit(xs, vals) -> GrowthFit:
    vals = np.abs(np.asarray(vals, dtype=complex))
    if np.any(vals == 0):
        raise DegenerateFitError("statistic vanishes at some grid point")
    slope, icpt = np.polyfit(np.log(xs), np.log(vals), 1)
    return GrowthFit(float(slope), float(math.exp(icpt)), tuple(float(x) for x in xs), tuple(float(v) for v in vals))


def diagonal_growth_scan(f: QExpansion, ell_1: int, ell_2: int, X_grid, H=None) -> GrowthFit:
    """Least-squares slope of log |S1| against log X."""
    H = default_bump() if H is None else H
    return _fit(list(X_grid), [diagonal_sum(f, H, X, ell_1, ell_2) for X in X_grid])


@dataclass(frozen=True)
class OffDiagonalRow:
    X: float
    Q: int
    ell: int
    S2: complex
    S3: complex
    normalized: float  # |S2| sqrt(Q) / (X ell^{1.1})


@dataclass(frozen=True)
class OffDiagonalReport:
    rows: tuple[OffDiagonalRow, ...]
    exponents: dict  # Q -> fitted X-exponent of |S2|
    max_over_Q: dict  # Q -> max normalized statistic over the X grid
    spread: float  # max/min of max_over_Q across Q


def offdiagonal_scaling_scan(f: QExpansion, X_grid, Q_grid, ell: int = 1, H=None, eps: float = 0.1) -> OffDiagonalReport:
    H = default_bump() if H is None else H
    rows = []
    exps, maxes = {}, {}
    for Q in Q_grid:
        vals = []
        for X in X_grid:
            sp = shifted_split_sums(f, H, X, ell, ell, Q)
            norm = abs(sp.S2) * math.sqrt(Q) / (X * ell ** (1.0 + eps))
            rows.append(OffDiagonalRow(float(X), int(Q), ell, sp.S2, sp.S3, norm))
            vals.append(sp.S2)
        try:
            exps[Q] = _fit(list(X_grid), vals).exponent if len(X_grid) > 1 else float("nan")
        except DegenerateFitError:
            exps[Q] = float("nan")
        maxes[Q] = max(r.normalized for r in rows if r.Q == Q)
    positive = [v for v in maxes.values() if v > 0]
    spread = max(positive) / min(positive) if positive else float("nan")
    return OffDiagonalReport(tuple(rows), exps, maxes, spread)
