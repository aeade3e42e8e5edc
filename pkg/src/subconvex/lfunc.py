"""Completed L-functions of additive and multiplicative twists.

For f = sum a(n) e(nz) of weight k on Gamma_0(N) and gcd(Q, N) = 1,

    L*(s, f, u/Q) = (sqrt(N) Q)^s int_0^oo f(iy + u/Q) y^{s + (k-1)/2} dy/y.

Cutting the integral at y0 and folding the part below y0 through the Fricke
involution composed with a Gamma_0(N) element gives the exact split

    L*(s, u/Q) = U(s, u, y0) + C(u) U(1 - s, v, 1/(N Q^2 y0)),
    U(s, u, y) = (sqrt(N) Q)^s sum_n a(n) e(nu/Q) (2 pi n)^{-(s+kappa)} Gamma(s+kappa, 2 pi n y),

with kappa = (k-1)/2, N u v = -1 (mod Q) and
C(u) = chi_f(Q) eps(f) eps_Q^{-2k} (N v / Q).  The split point is free, so
agreement between two split points checks the constant C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import eps_d, kronecker
from .chars import DirichletCharacter, gauss_sum, gauss_sum_table, jacobi_character
from .qexp import PrecisionError, QExpansion, detect_character, fricke_eigenvalue, normalized_coeffs
from .special import log_gamma, upper_incomplete_gamma

THETA_KIM_SARNAK = 7.0 / 64.0
CONVEXITY_EXPONENT = 0.5


def subconvex_exponent(theta: float = THETA_KIM_SARNAK) -> float:
    return 3.0 / 8.0 + theta / 4.0


class UnsupportedTwistError(ValueError):
    """Twist modulus shares a factor with the level, or the character is imprimitive."""


@dataclass(frozen=True)
class TwistedLResult:
    s: complex
    value: complex
    split_point: float
    truncation_error: float
    empirical_root_number: complex | None = None
    root_number_residual: float | None = None
    n_terms: int = 0
    extra: dict = field(default_factory=dict)


def default_split(f: QExpansion, Q: int) -> float:
    """The symmetric point y0 = 1/(sqrt(N) Q), fixed by y0 -> 1/(N Q^2 y0)."""
    return 1.0 / (math.sqrt(f.N) * Q)


def fricke_sign(f: QExpansion, max_residual: float = 1e-8) -> complex:
    """eps(f), measured once per expansion and memoized in f.meta."""
    if "fricke" not in f.meta:
        f.meta["fricke"] = fricke_eigenvalue(f)
    est = f.meta["fricke"]
    if est.residual > max_residual:
        raise UnsupportedTwistError(f"form is not a Fricke eigenform (ratio spread {est.residual:.2e})")
    return est.eps


def nebentypus(f: QExpansion) -> int:
    """D with nebentypus d -> (D/d), detected numerically and memoized in f.meta."""
    if "character" not in f.meta:
        D = detect_character(f)
        if D is None:
            raise UnsupportedTwistError("could not identify the nebentypus")
        f.meta["character"] = D
    return f.meta["character"]


def _incomplete_gamma_bound(a: float, x: np.ndarray) -> np.ndarray:
    # Gamma(a, x) <= x^{a-1} e^{-x} for a <= 1, and <= x^{a-1} e^{-x} / (1 - (a-1)/x) once x > 2(a-1)
    base = np.exp((a - 1.0) * np.log(x) - x)
    if a <= 1.0:
        return base
    return np.where(x > 2.0 * (a - 1.0), base / (1.0 - (a - 1.0) / x), np.inf)


def _tail(f: QExpansion, sigma: float, y: float, n0: int) -> float:
    """Bound for sum_{n > n0} |a(n)| (2 pi n)^{-(sigma+kappa)} |Gamma(s+kappa, 2 pi n y)|."""
    C, p = f.envelope
    a = sigma + (f.k - 1.0) / 2.0
    n1 = n0 + 1
    x = 2.0 * math.pi * n1 * y
    first = C * n1 ** p * (2.0 * math.pi * n1) ** (-a) * float(_incomplete_gamma_bound(a, np.array([x]))[0])
    # consecutive terms behave like n^{p-1} e^{-2 pi n y}
    ratio = math.exp(-2.0 * math.pi * y) * ((n1 + 1) / n1) ** max(p - 1.0, 0.0)
    if ratio >= 1.0 or not math.isfinite(first):
        return math.inf
    return first / (1.0 - ratio)


def _cutoff(f: QExpansion, sigma: float, y: float, tol: float) -> tuple[int, float]:
    hi = max(8, int(40.0 / (2.0 * math.pi * y)))
    while _tail(f, sigma, y, hi) > tol:
        hi *= 2
        if hi > 64 * max(f.M, 1):
            break
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail(f, sigma, y, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    if hi > f.M:
        raise PrecisionError(f"split sum needs {hi} coefficients, expansion has {f.M}")
    return hi, _tail(f, sigma, y, hi)


def _weights(f: QExpansion, s: complex, y: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, a(n) (2 pi n)^{-(s+kappa)} Gamma(s+kappa, 2 pi n y)) over the support up to n_max."""
    n = f.support[(f.support > 0) & (f.support <= n_max)]
    if n.size == 0:
        return n, np.zeros(0, dtype=complex)
    a = s + (f.k - 1.0) / 2.0
    x = 2.0 * math.pi * n.astype(float)
    g = upper_incomplete_gamma(a, x * y)
    return n, f.coeffs[n].astype(complex) * np.exp(-a * np.log(x)) * g


def _additive_sums(n: np.ndarray, c: np.ndarray, Q: int) -> np.ndarray:
    """sum_n c_n e(n u / Q) for every u mod Q."""
    r = n % Q
    buckets = np.bincount(r, weights=c.real, minlength=Q) + 1j * np.bincount(r, weights=c.imag, minlength=Q)
    return Q * np.fft.ifft(buckets)


@dataclass(frozen=True)
class _SplitTables:
    Q: int
    s: complex
    y0: float
    direct: np.ndarray  # U(s, u, y0) for u mod Q
    dual: np.ndarray  # U(1-s, v, y0') for v mod Q
    error: float
    n_terms: int


def _split_tables(f: QExpansion, s: complex, Q: int, y0: float, tol: float) -> _SplitTables:
    if math.gcd(Q, f.N) != 1:
        raise UnsupportedTwistError(f"gcd(Q={Q}, N={f.N}) > 1 is not supported")
    s = complex(s)
    y1 = 1.0 / (f.N * Q * Q * y0)
    scale = math.sqrt(f.N) * Q
    n0, e0 = _cutoff(f, s.real, y0, tol)
    n1, e1 = _cutoff(f, 1.0 - s.real, y1, tol)
    direct = scale ** s * _additive_sums(*_weights(f, s, y0, n0), Q)
    dual = scale ** (1.0 - s) * _additive_sums(*_weights(f, 1.0 - s, y1, n1), Q)
    err = scale ** s.real * e0 + scale ** (1.0 - s.real) * e1
    return _SplitTables(Q, s, y0, direct, dual, err, max(n0, n1))


def dual_twist(u: int, Q: int, N: int) -> int:
    """v with N u v = -1 (mod Q)."""
    if Q == 1:
        return 0
    return (-pow(N * u, -1, Q)) % Q


def fe_constant(f: QExpansion, Q: int, v: int, eps_f: complex) -> complex:
    """C with L*(s, u/Q) = C L*(1-s, v/Q)."""
    chi_f_Q = kronecker(nebentypus(f), Q)
    return chi_f_Q * eps_f * eps_d(Q) ** (-f.two_k) * kronecker(f.N * v, Q)


def completed_L_additive(f: QExpansion, s: complex, u: int, Q: int, y0: float | None = None,
                         eps_f: complex | None = None, tol: float = 1e-15) -> TwistedLResult:
    """L*(s, f, u/Q) with gcd(u, Q) = 1 via the split at y0."""
    if Q > 1 and math.gcd(u, Q) != 1:
        raise ValueError("u must be a unit mod Q")
    y0 = default_split(f, Q) if y0 is None else float(y0)
    eps_f = fricke_sign(f) if eps_f is None else eps_f
    tab = _split_tables(f, s, Q, y0, tol)
    u %= Q
    v = dual_twist(u, Q, f.N)
    value = tab.direct[u] + fe_constant(f, Q, v, eps_f) * tab.dual[v]
    return TwistedLResult(complex(s), complex(value), y0, tab.error, n_terms=tab.n_terms, extra={"u": u, "v": v, "Q": Q})


def additive_root_number(f: QExpansion, s: complex, u: int, Q: int, eps_f: complex | None = None,
                         split_ratio: float = 1.37) -> TwistedLResult:
    """L*(s, u/Q) / L*(1-s, v/Q), the two sides evaluated at different split points."""
    y0 = default_split(f, Q)
    lhs = completed_L_additive(f, s, u, Q, y0, eps_f)
    v = lhs.extra["v"]
    rhs = completed_L_additive(f, 1.0 - complex(s), v, Q, y0 * split_ratio, eps_f)
    ratio = lhs.value / rhs.value
    return TwistedLResult(lhs.s, lhs.value, y0, lhs.truncation_error + rhs.truncation_error, ratio,
                          abs(abs(ratio) - 1.0), lhs.n_terms, {"u": lhs.extra["u"], "v": v, "Q": Q, "dual": rhs.value})


def _twist_vector(f: QExpansion, tab: _SplitTables, eps_f: complex) -> np.ndarray:
    """L*(s, u/Q) for all u mod Q (entries at non-units are 0)."""
    Q = tab.Q
    out = np.zeros(Q, dtype=complex)
    for u in range(Q):
        if Q > 1 and math.gcd(u, Q) != 1:
            continue
        v = dual_twist(u, Q, f.N)
        out[u] = tab.direct[u] + fe_constant(f, Q, v, eps_f) * tab.dual[v]
    return out


def _require_primitive(chi: DirichletCharacter) -> complex:
    if not chi.primitive:
        raise UnsupportedTwistError("multiplicative twists need a primitive character")
    g = gauss_sum(1, chi.conj())
    if abs(g) < 1e-9:
        raise UnsupportedTwistError("vanishing Gauss sum")
    return g


def completed_L_multiplicative(f: QExpansion, s: complex, chi: DirichletCharacter, eps_f: complex | None = None,
                               y0: float | None = None, tol: float = 1e-15) -> TwistedLResult:
    """L*(s, f, chi) = g(1, conj chi)^{-1} sum_u conj chi(u) L*(s, f, u/Q)."""
    g = _require_primitive(chi)
    Q = chi.modulus
    y0 = default_split(f, Q) if y0 is None else float(y0)
    eps_f = fricke_sign(f) if eps_f is None else eps_f
    tab = _split_tables(f, s, Q, y0, tol)
    vec = _twist_vector(f, tab, eps_f)
    value = complex(np.dot(np.conj(chi.values), vec) / g)
    err = tab.error * math.sqrt(Q)  # sum over units of |chi| / |g| = phi(Q)/sqrt(Q)
    return TwistedLResult(complex(s), value, y0, err, n_terms=tab.n_terms, extra={"Q": Q})


def dual_character(chi: DirichletCharacter) -> DirichletCharacter:
    """chi' = chi (./Q), the character whose conjugate appears on the dual side."""
    return chi * jacobi_character(chi.modulus) if chi.modulus > 1 else chi


def dual_side_value(f: QExpansion, s: complex, chi: DirichletCharacter, eps_f: complex | None = None,
                    y0: float | None = None) -> complex:
    """g(1, conj chi)^{-1} sum_v chi'(v) L*(s, v/Q)."""
    g = _require_primitive(chi)
    Q = chi.modulus
    y0 = default_split(f, Q) if y0 is None else float(y0)
    eps_f = fricke_sign(f) if eps_f is None else eps_f
    tab = _split_tables(f, s, Q, y0, 1e-15)
    vec = _twist_vector(f, tab, eps_f)
    return complex(np.dot(dual_character(chi).values, vec) / g)


def expected_root_number(f: QExpansion, chi: DirichletCharacter, eps_f: complex | None = None) -> complex:
    """eps chi_f(Q) eps_Q^{-2k} (N/Q) chi(-N): the factor with L*(s, chi) = factor * dual(1-s)."""
    Q = chi.modulus
    eps_f = fricke_sign(f) if eps_f is None else eps_f
    if Q == 1:
        return eps_f
    return kronecker(nebentypus(f), Q) * eps_f * eps_d(Q) ** (-f.two_k) * kronecker(f.N, Q) * chi(-f.N)


def multiplicative_root_number(f: QExpansion, s: complex, chi: DirichletCharacter, eps_f: complex | None = None,
                               split_ratio: float = 1.37) -> TwistedLResult:
    """epsilon* = L*(s, chi) / [g(1, conj chi)^{-1} sum_v chi'(v) L*(1-s, v/Q)], both sides independently split.

    |epsilon*| = 1 when chi and chi' are both primitive; the measured ratio is
    reported together with | |epsilon*| - 1 |.
    """
    lhs = completed_L_multiplicative(f, s, chi, eps_f)
    rhs = dual_side_value(f, 1.0 - complex(s), chi, eps_f, lhs.split_point * split_ratio)
    ratio = lhs.value / rhs
    return TwistedLResult(lhs.s, lhs.value, lhs.split_point, lhs.truncation_error, ratio, abs(abs(ratio) - 1.0),
                          lhs.n_terms, {"Q": chi.modulus, "dual": rhs})


def gamma_prefactor(f: QExpansion, s: complex, Q: int) -> complex:
    """(sqrt(N) Q)^s (2 pi)^{-(s+kappa)} Gamma(s+kappa)."""
    a = complex(s) + (f.k - 1.0) / 2.0
    return complex(np.exp(complex(s) * math.log(math.sqrt(f.N) * Q) - a * math.log(2 * math.pi) + log_gamma(a)))


def central_value(f: QExpansion, chi: DirichletCharacter, eps_f: complex | None = None,
                  y0: float | None = None) -> complex:
    """L(1/2, f, chi) = L*(1/2, f, chi) / gamma_prefactor."""
    if not np.any(f.coeffs):
        return 0j
    res = completed_L_multiplicative(f, 0.5, chi, eps_f, y0)
    return res.value / gamma_prefactor(f, 0.5, chi.modulus)


@dataclass(frozen=True)
class CentralValueRow:
    Q: int
    chi_index: int
    value: complex
    truncation_error: float
    root_number_residual: float


def central_values_all(f: QExpansion, Q: int, characters: list[DirichletCharacter], eps_f: complex | None = None,
                       fe_point: complex = 0.6 + 0.2j) -> list[CentralValueRow]:
    """L(1/2, f, chi) for many primitive chi mod Q sharing one split table.

    The root-number residual of each row comes from the functional equation
    at fe_point with the dual side split at a different point.
    """
    eps_f = fricke_sign(f) if eps_f is None else eps_f
    y0 = default_split(f, Q)
    half = _twist_vector(f, _split_tables(f, 0.5, Q, y0, 1e-15), eps_f)
    tab_err = _split_tables(f, 0.5, Q, y0, 1e-15).error * math.sqrt(Q)
    fe_lhs = _twist_vector(f, _split_tables(f, fe_point, Q, y0, 1e-15), eps_f)
    fe_rhs = _twist_vector(f, _split_tables(f, 1.0 - fe_point, Q, 1.37 * y0, 1e-15), eps_f)
    jac = jacobi_character(Q).values
    pref = gamma_prefactor(f, 0.5, Q)
    rows = []
    for chi in characters:
        if not chi.primitive:
            continue
        g = gauss_sum(1, chi.conj())
        val = np.dot(np.conj(chi.values), half) / g / pref
        lhs = np.dot(np.conj(chi.values), fe_lhs)
        rhs = np.dot(chi.values * jac, fe_rhs)
        resid = abs(abs(lhs / rhs) - 1.0) if abs(rhs) > 0 else math.inf
        rows.append(CentralValueRow(Q, chi.index, complex(val), tab_err / abs(pref), float(resid)))
    return rows


def smoothed_coeff_sum(f: QExpansion, chi: DirichletCharacter, H, x: float, gauss_mode: bool = False) -> complex:
    """sum_m A(m) chi(m) H(m/x), or with gauss_mode sum_m A(m) g(m, chi') H(m/x) / g(1, conj chi).

    H is any callable vanishing outside [1, 2].
    """
    if x * 2.0 > f.M:
        raise PrecisionError(f"smoothed sum up to {2 * x} needs more than {f.M} coefficients")
    lo, hi = math.floor(x) + 1 if x >= 0 else 1, math.floor(2.0 * x)
    if hi < max(lo, 1):
        return 0j
    m = np.arange(max(lo, 1), hi + 1)
    A = normalized_coeffs(f)[m]
    w = np.asarray(H(m / x), dtype=float)
    Q = chi.modulus
    if not gauss_mode:
        return complex(np.sum(A * w * chi.values[m % Q]))
    table = gauss_sum_table(dual_character(chi))
    return complex(np.sum(A * w * table[m % Q]) / gauss_sum(1, chi.conj()))
