"""Shifted convolution Dirichlet series and the double Dirichlet series Z_Q,
evaluated by direct summation inside their regions of absolute convergence,
plus the Eisenstein coefficients rho_a and the restricted zeta series.

Two normalizations of Z_Q are used:

* ``Z_Q_bruteforce``: sum over m1 l1 = m2 l2 + hQ of
  A(m1) conj A(m2) (1 + hQ/(l2 m2))^{(k-1)/2} (l2 m2)^{-s} (hQ)^{-w-(k-1)/2};
* ``Z_Q_oldform``: sum over h, n of a(n+hQ) conj b(n) n^{-(s+k-1)} (hQ)^{-w-(k-1)/2}
  for the pair f(l1 .), f(l2 .).

They satisfy Z_Q_bruteforce = (l1 l2)^{(k-1)/2} Z_Q_oldform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from .arith import euler_phi, factorize, ramanujan_closed_form
from .qexp import PrecisionError, QExpansion, normalized_coeffs
from .special import POLE_RADIUS, PoleProximityError, barnes_beta_integral, composite_nodes, log_gamma


class LevelAssumptionError(ValueError):
    """The level is not of the form 4 * (odd squarefree)."""


@dataclass(frozen=True)
class ShiftedSeriesParams:
    s: complex
    w: complex = 2.0
    h: int = 1
    delta: float = 0.0
    Q: int = 1
    ell_1: int = 1
    ell_2: int = 1
    k: float = 1.5
    budget: int | None = None
    tail_tol: float = 1e-8

    @property
    def s_prime(self) -> complex:
        return complex(self.s) - 0.5 + complex(self.w) + (self.k - 1.0) / 2.0


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    tail: float
    terms: int


# ---------------------------------------------------------------- D(s; h)


def _tail_D(f: QExpansion, g: QExpansion, sigma: float, h: int, n_max: int, delta: float) -> float:
    Cf, pf = f.envelope
    Cg, pg = g.envelope
    e = pf + pg - (sigma + f.k - 1.0)
    if e >= -1.0:
        return math.inf
    n0 = max(n_max, 1)
    # (n + h)^{pf} <= (1 + h/n0)^{pf} n^{pf} and (n + h delta/2) >= n
    return Cf * Cg * (1.0 + h / n0) ** pf * n0 ** (e + 1.0) / (-e - 1.0)


def D_series_delta(f: QExpansion, g: QExpansion, s: complex, h: int, delta: float = 0.0,
                   tol: float = 1e-8) -> SeriesValue:
    """sum_n a(n+h) conj b(n) (n + h delta/2)^{-(s+k-1)}, truncated at the coefficient budget."""
    if h < 1:
        raise ValueError("shift h must be a positive integer")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    s = complex(s)
    if s.real <= 1.0:
        raise ValueError("D(s; h) is summed only for Re s > 1")
    n_max = min(f.M - h, g.M)
    if n_max < 1:
        raise PrecisionError("coefficient budget shorter than the shift")
    tail = _tail_D(f, g, s.real, h, n_max, delta)
    if tail > tol:
        raise PrecisionError(f"D-series tail {tail:.2e} exceeds {tol:.1e}")
    b = g.coeffs[1 : n_max + 1]
    n = np.nonzero(b)[0] + 1
    n = n[f.coeffs[n + h] != 0]
    if n.size == 0:
        return SeriesValue(0j, tail, 0)
    a_sh = f.coeffs[n + h].astype(complex)
    bb = np.conj(g.coeffs[n].astype(complex))
    base = n.astype(float) + h * delta / 2.0
    terms = a_sh * bb * np.exp(-(s + f.k - 1.0) * np.log(base))
    return SeriesValue(complex(terms.sum()), tail, int(n.size))


def D_series(f: QExpansion, g: QExpansion, s: complex, h: int, tol: float = 1e-8) -> SeriesValue:
    """sum_n a(n+h) conj b(n) n^{-(s+k-1)}."""
    return D_series_delta(f, g, s, h, 0.0, tol)


def D_series_constrained(f0: QExpansion, g0: QExpansion, s: complex, h: int, ell_1: int, ell_2: int,
                         m_max: int) -> complex:
    """sum over m1 l1 = m2 l2 + h of a0(m1) conj b0(m2) (m2 l2)^{-(s+k-1)}, m2 <= m_max."""
    s = complex(s)
    total = 0j
    for m2 in range(1, m_max + 1):
        b = g0.coeffs[m2] if m2 <= g0.M else 0
        if b == 0:
            continue
        num = m2 * ell_2 + h
        if num % ell_1:
            continue
        m1 = num // ell_1
        if m1 > f0.M:
            raise PrecisionError("constrained sum runs past the coefficient budget")
        a = f0.coeffs[m1]
        if a:
            total += complex(a) * np.conj(complex(b)) * (m2 * ell_2) ** (-(s + f0.k - 1.0))
    return total


# ---------------------------------------------------------------- Z_Q


def _solution_pairs(f: QExpansion, Q: int, ell_1: int, ell_2: int, m_max: int):
    """(m1, m2, h) with l1 m1 = l2 m2 + hQ, h > 0, both coefficients nonzero, m1, m2 <= m_max."""
    sup = f.support[(f.support > 0) & (f.support <= m_max)]
    v1 = sup * ell_1
    v2 = sup * ell_2
    d = np.subtract.outer(v1, v2)
    i1, i2 = np.nonzero((d > 0) & (d % Q == 0))
    return sup[i1], sup[i2], d[i1, i2] // Q


def _z_tail(f: QExpansion, sigma: float, omega: float, Q: int, ell_1: int, ell_2: int, m_max: int) -> float:
    # heuristic certificate from |A(m)| <= C m^{pA}; one term per (m1, h)
    C, p = f.envelope
    kappa = (f.k - 1.0) / 2.0
    pA = p - kappa
    e1 = 2.0 * pA - sigma
    e2 = pA - omega
    ez = pA - kappa - sigma
    if e1 >= -1.0 or e2 >= -1.0 or omega + kappa <= 1.0:
        return math.inf
    zeta_w = float(mp.zeta(omega + kappa))
    zeta_m = float(mp.zeta(-ez)) if ez < -1.0 else m_max ** (ez + 1.0) / (ez + 1.0) + 1.0
    x = float(m_max)
    t1 = zeta_w * Q ** (-(omega + kappa)) * 2.0 ** max(0.0, -(pA - kappa - sigma)) * x ** (e1 + 1.0) / (-e1 - 1.0)
    t2 = zeta_m * (ell_1 / 2.0) ** (-(omega + kappa)) * x ** (e2 + 1.0) / (-e2 - 1.0)
    return C * C * max(ell_1, ell_2) ** abs(sigma) * (t1 + t2)


def Z_Q_bruteforce(f: QExpansion, s: complex, w: complex, Q: int, ell_1: int = 1, ell_2: int = 1,
                   m_max: int | None = None) -> SeriesValue:
    """Truncated double sum with the (1 + hQ/(l2 m2))^{(k-1)/2} factor; m1, m2 <= m_max."""
    s, w = complex(s), complex(w)
    if s.real <= 1.0 or w.real <= 1.0:
        raise ValueError("Z_Q is summed only for Re s, Re w > 1")
    m_max = f.M if m_max is None else min(m_max, f.M)
    m1, m2, h = _solution_pairs(f, Q, ell_1, ell_2, m_max)
    tail = _z_tail(f, s.real, w.real, Q, ell_1, ell_2, m_max)
    if m1.size == 0:
        return SeriesValue(0j, tail, 0)
    A = normalized_coeffs(f)
    kappa = (f.k - 1.0) / 2.0
    x2 = (ell_2 * m2).astype(float)
    hq = (h * Q).astype(float)
    terms = (A[m1] * np.conj(A[m2]) * (1.0 + hq / x2) ** kappa
             * np.exp(-s * np.log(x2) - (w + kappa) * np.log(hq)))
    return SeriesValue(complex(terms.sum()), tail, int(m1.size))


def _stretched(f0: QExpansion, ell: int, m_max: int) -> np.ndarray:
    """Coefficients of f0(ell z) up to q^{ell m_max}."""
    out = np.zeros(ell * m_max + 1, dtype=f0.coeffs.dtype)
    out[::ell] = f0.coeffs[: m_max + 1]
    return out


def Z_Q_oldform(f0: QExpansion, s: complex, w: complex, Q: int, ell_1: int = 1, ell_2: int = 1,
                m_max: int | None = None) -> SeriesValue:
    """sum_{h, n} a(n + hQ) conj b(n) n^{-(s+k-1)} (hQ)^{-(w+(k-1)/2)} for a, b the coefficients of f0(l1 z), f0(l2 z).

    Enumerated over n and h directly in the coefficient arrays of the scaled forms,
    restricted to the range where the m-values of f0 are at most m_max.
    """
    s, w = complex(s), complex(w)
    m_max = f0.M if m_max is None else min(m_max, f0.M)
    kappa = (f0.k - 1.0) / 2.0
    fa = _stretched(f0, ell_1, m_max)
    gb = _stretched(f0, ell_2, m_max)
    na = np.nonzero(fa)[0]
    nb = np.nonzero(gb)[0]
    na, nb = na[na > 0], nb[nb > 0]
    d = np.subtract.outer(na, nb)
    ia, ib = np.nonzero((d > 0) & (d % Q == 0))
    if ia.size == 0:
        return SeriesValue(0j, math.nan, 0)
    n_a, n_b = na[ia], nb[ib]
    hq = (n_a - n_b).astype(float)
    terms = (fa[n_a].astype(complex) * np.conj(gb[n_b].astype(complex))
             * np.exp(-(s + f0.k - 1.0) * np.log(n_b.astype(float)) - (w + kappa) * np.log(hq)))
    return SeriesValue(complex(terms.sum()), math.nan, int(ia.size))


def Z_Q_from_D(f: QExpansion, s: complex, w: complex, Q: int, m_max: int) -> complex:
    """sum_h D(s; hQ) (hQ)^{-(w+(k-1)/2)} with D enumerated over n <= m_max, n + hQ <= m_max."""
    s, w = complex(s), complex(w)
    kappa = (f.k - 1.0) / 2.0
    total = 0j
    for h in range(1, m_max // Q + 1):
        hq = h * Q
        n = f.support[(f.support > 0) & (f.support + hq <= m_max)]
        n = n[f.coeffs[n + hq] != 0]
        if n.size == 0:
            continue
        d = np.sum(f.coeffs[n + hq].astype(complex) * np.conj(f.coeffs[n].astype(complex))
                   * np.exp(-(s + f.k - 1.0) * np.log(n.astype(float))))
        total += d * hq ** (-(w + kappa))
    return complex(total)


# ---------------------------------------------------------------- gamma factor


def gamma_factor_G(s: complex, u: complex, k: float) -> complex:
    """(1/2)(4 pi)^k Gamma(s+u-1) Gamma(s-u) Gamma(1-s) / (Gamma(u) Gamma(1-u) Gamma(s+k-1))."""
    s, u = complex(s), complex(u)
    for z in (s + u - 1.0, s - u, 1.0 - s):
        if z.real < 0.5 and abs(z - round(z.real)) < POLE_RADIUS:
            raise PoleProximityError(f"gamma factor pole at argument {z}")
    log_num = log_gamma(s + u - 1.0) + log_gamma(s - u) + log_gamma(1.0 - s)
    den = 0j
    for z in (u, 1.0 - u, s + k - 1.0):
        # 1/Gamma vanishes at poles, which makes G vanish
        if z.real < 0.5 and abs(z - round(z.real)) < 1e-14:
            return 0j
        den += log_gamma(z)
    return complex(0.5 * (4.0 * math.pi) ** k * np.exp(log_num - den))


# ---------------------------------------------------------------- Eisenstein coefficients


def check_level(N: int) -> None:
    if N % 4 or (N // 4) % 2 == 0 or any(e > 1 for e in factorize(N // 4).values()):
        raise LevelAssumptionError(f"level {N} is not 4 times an odd squarefree number")


def eisenstein_rho_constant(w: int, N: int, s: complex) -> complex:
    """phi(w) (wN)^{-s} prod_{p|N} (1 - p^{-2s})^{-1} prod_{p | N/w} (1 - p^{1-2s})."""
    check_level(N)
    if N % w:
        raise ValueError("cusp parameter w must divide N")
    s = complex(s)
    val = euler_phi(w) * (w * N) ** (-s)
    for p in factorize(N):
        val /= 1.0 - p ** (-2.0 * s)
    for p in factorize(N // w):
        val *= 1.0 - p ** (1.0 - 2.0 * s)
    return complex(val)


def eisenstein_rho_truncated(w: int, N: int, s: complex, m: int, c_max: int) -> SeriesValue:
    """(wN)^{-s} sum_{c <= c_max, (c, N/w) = 1} c^{-2s} c_{cw}(m), with a tail bound.

    At m = 0 the full sum is zeta(2s-1)/zeta(2s) times eisenstein_rho_constant.
    """
    check_level(N)
    if N % w:
        raise ValueError("cusp parameter w must divide N")
    s = complex(s)
    if s.real <= 0.5 + 1e-9 + (0.5 if m == 0 else 0.0):
        raise ValueError("truncated c-sum needs Re s > 1/2 (Re s > 1 when m = 0)")
    total = 0j
    for c in range(1, c_max + 1):
        if math.gcd(c, N // w) != 1:
            continue
        total += ramanujan_closed_form(c * w, abs(m)) * c ** (-2.0 * s)
    sig = s.real
    if m == 0:
        tail = w * c_max ** (2.0 - 2.0 * sig) / (2.0 * sig - 2.0)
    else:
        div_sum = sum(d for d in range(1, abs(m) + 1) if m % d == 0)
        tail = div_sum * c_max ** (1.0 - 2.0 * sig) / (2.0 * sig - 1.0)
    scale = abs((w * N) ** (-s))
    return SeriesValue(complex((w * N) ** (-s) * total), scale * tail, c_max)


def _ramanujan_local(p: int, e: int, m: int) -> int:
    """c_{p^e}(m)."""
    if e == 0:
        return 1
    v = 0
    mm = abs(m)
    while mm and mm % p == 0:
        mm //= p
        v += 1
    if m == 0:
        v = e
    if v >= e:
        return p ** e - p ** (e - 1)
    if v == e - 1:
        return -p ** (e - 1)
    return 0


@lru_cache(maxsize=64)
def _inv_zeta(z: complex) -> complex:
    with mp.workdps(20):
        return complex(1 / mp.zeta(mp.mpc(z)))


def eisenstein_rho(w: int, N: int, s: complex, m: int) -> complex:
    """rho_a(s, m) in closed form (Euler product, valid by continuation wherever zeta(2s) != 0).

    m = 0 returns the constant-term factor rho_a(s).
    """
    if m == 0:
        return eisenstein_rho_constant(w, N, s)
    check_level(N)
    if N % w:
        raise ValueError("cusp parameter w must divide N")
    s = complex(s)
    z = 2.0 * s
    val = _inv_zeta(z)
    primes = set(factorize(m)) | set(factorize(N))
    for p in primes:
        v = 0
        mm = abs(m)
        while mm % p == 0:
            mm //= p
            v += 1
        # local factor of sum_c c^{-z} c_{cw}(m) at p, divided by the p-part (1 - p^{-z}) of 1/zeta(z)
        if N % p:
            local = sum(_ramanujan_local(p, j, m) * p ** (-j * z) for j in range(v + 2))
        else:
            a = 0
            ww = w
            while ww % p == 0:
                ww //= p
                a += 1
            if (N // w) % p == 0:
                local = _ramanujan_local(p, a, m)
            else:
                local = sum(_ramanujan_local(p, a + j, m) * p ** (-j * z) for j in range(v + 2))
        val *= local / (1.0 - p ** (-z))
    return complex((w * N) ** (-s) * val)


def zeta_Q_a_terms(w: int, N: int, s: complex, u: complex, Q: int, h_max: int) -> np.ndarray:
    """Terms rho_a(1-u, -hQ) (hQ)^{-(s+u-1/2)} for h = 1..h_max."""
    s, u = complex(s), complex(u)
    out = np.empty(h_max, dtype=complex)
    for h in range(1, h_max + 1):
        hq = h * Q
        out[h - 1] = eisenstein_rho(w, N, 1.0 - u, -hq) * hq ** (-(s + u - 0.5))
    return out


def zeta_Q_a(w: int, N: int, s: complex, u: complex, Q: int, h_max: int) -> SeriesValue:
    """zeta(2-2u) sum_{h <= h_max} rho_a(1-u, -hQ) (hQ)^{-(s+u-1/2)}."""
    s, u = complex(s), complex(u)
    terms = zeta_Q_a_terms(w, N, s, u, Q, h_max)
    with mp.workdps(20):
        zf = complex(mp.zeta(mp.mpc(2.0 - 2.0 * u)))
    expo = (s + u - 0.5).real
    # |rho_a(1-u, m)| <= (wN)^{-Re(1-u)} d(m) sigma-type factor; bounded by the largest observed term ratio
    if expo <= 1.0:
        tail = math.inf
    else:
        mags = np.abs(terms) * (np.arange(1, h_max + 1) * Q) ** expo
        tail = float(np.max(mags) * math.log(h_max * Q + 2.0) * (h_max * Q) ** (1.0 - expo) / ((expo - 1.0) * Q))
    return SeriesValue(zf * complex(terms.sum()), abs(zf) * tail, h_max)


# ---------------------------------------------------------------- triple Mellin collapse


@dataclass(frozen=True)
class TripleMellinReport:
    contour_value: complex
    direct_value: complex
    discrepancy: float
    abscissa: float
    height: float
    pairs: int


def triple_mellin_inner_check(f: QExpansion, s: complex, w: complex, Q: int, ell_1: int = 1, ell_2: int = 1,
                              m_max: int | None = None, abscissa: float | None = None, height: float = 40.0,
                              panels_per_unit: float = 2.0, gamma_shift: float | None = None) -> TripleMellinReport:
    """(2 pi i)^{-1} int_(c) Z_Q(s+w-u, u-(k-1)/2) Gamma(z-u) Gamma(u)/Gamma(z) du against
    sum A(m1) conj A(m2) (l2 m2)^{-s} (l1 m1)^{-w}, both over the same truncated solution set.

    z = w + gamma_shift with gamma_shift = (k-1)/2 by default; passing k/2 exhibits the
    variant in which the two sides differ by (1 + hQ/(l2 m2))^{-1/2} termwise.
    """
    s, w = complex(s), complex(w)
    kappa = (f.k - 1.0) / 2.0
    shift = kappa if gamma_shift is None else gamma_shift
    z = w + shift
    lo = 1.0 + kappa
    hi = min((s + w).real - 1.0, z.real)
    if abscissa is None:
        abscissa = 0.5 * (lo + hi)
    if not (lo < abscissa < hi):
        raise ValueError(f"abscissa must lie in ({lo}, {hi})")
    m_max = f.M if m_max is None else min(m_max, f.M)
    m1, m2, h = _solution_pairs(f, Q, ell_1, ell_2, m_max)
    A = normalized_coeffs(f)
    coef = A[m1] * np.conj(A[m2])
    x1 = (ell_1 * m1).astype(float)
    x2 = (ell_2 * m2).astype(float)
    hq = (h * Q).astype(float)
    direct = complex(np.sum(coef * np.exp(-s * np.log(x2) - w * np.log(x1))))
    # contour side: Z_Q evaluated by brute force at each node
    y, wts = composite_nodes(-height, height, int(math.ceil(2 * height * panels_per_unit)))
    from scipy.special import loggamma

    u = abscissa + 1j * y
    kern = np.exp(loggamma(z - u) + loggamma(u) - loggamma(z))
    base = coef * (1.0 + hq / x2) ** kappa
    s_arg = s + w - u  # per node
    w_arg = u - kappa
    logx2 = np.log(x2)
    loghq = np.log(hq)
    zq = np.empty(u.shape, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, base.size))
    for i in range(0, u.size, chunk):
        sa = s_arg[i : i + chunk, None]
        wa = w_arg[i : i + chunk, None]
        zq[i : i + chunk] = (base[None, :] * np.exp(-sa * logx2[None, :] - (wa + kappa) * loghq[None, :])).sum(axis=1)
    contour = complex(np.sum(zq * kern * wts) / (2.0 * math.pi))
    disc = abs(contour - direct) / max(abs(direct), 1e-300)
    return TripleMellinReport(contour, direct, disc, float(abscissa), float(height), int(m1.size))


def barnes_grid_check(zs, ts, abscissa_fraction: float = 0.5) -> float:
    """Max |Barnes integral - (1+t)^{-z}| over a grid of (z, t)."""
    worst = 0.0
    for z in zs:
        for t in ts:
            c = abscissa_fraction * complex(z).real
            worst = max(worst, abs(barnes_beta_integral(z, t, c) - (1.0 + t) ** (-complex(z))))
    return worst
