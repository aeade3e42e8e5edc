"""Special functions: gamma, incomplete gamma, 2F1, K-Bessel of imaginary order,
Legendre P on the cut, the Barnes beta integral and the function

    M(s, t, delta) = int_0^oo e^{(1-delta) y} K_{it}(y) y^{s-1/2} dy / y

in its three representations (direct quadrature and two hypergeometric forms).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy import special as sps


class PoleProximityError(ValueError):
    """Evaluation point lies within the pole-proximity radius of a pole."""


POLE_RADIUS = 1e-6


# ---------------------------------------------------------------- quadrature helpers


@lru_cache(maxsize=16)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def composite_nodes(a: float, b: float, panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# ---------------------------------------------------------------- gamma family


def _near_nonpositive_integer(z: complex) -> bool:
    return z.real < 0.5 and abs(z - round(z.real)) < POLE_RADIUS


def log_gamma(z):
    """Principal-branch log Gamma (scipy's loggamma), rejecting poles."""
    arr = np.asarray(z, dtype=complex)
    bad = (arr.real < 0.5) & (np.abs(arr - np.round(arr.real)) < POLE_RADIUS)
    if np.any(bad):
        raise PoleProximityError("log_gamma evaluated at a pole")
    out = sps.loggamma(arr)
    return complex(out) if np.ndim(z) == 0 else out


def gamma(z):
    return np.exp(log_gamma(z))


def upper_incomplete_gamma(a: complex, x, max_iter: int = 400):
    """Gamma(a, x) = int_x^oo t^{a-1} e^{-t} dt for x > 0.

    Lower-gamma power series when x < Re(a) + 1 (then Gamma(a) - gamma(a, x)),
    modified-Lentz continued fraction otherwise.
    """
    a = complex(a)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise ValueError("upper_incomplete_gamma needs x > 0")
    out = np.empty(xs.shape, dtype=complex)
    use_series = xs < a.real + 1.0
    if np.any(use_series):
        xv = xs[use_series]
        term = np.full(xv.shape, 1.0 / a, dtype=complex)
        total = term.copy()
        for n in range(1, max_iter * 4):
            term = term * xv / (a + n)
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        lower = np.exp(a * np.log(xv) - xv) * total
        out[use_series] = gamma(a) - lower
    if np.any(~use_series):
        xv = xs[~use_series]
        tiny = 1e-300
        b = xv + 1.0 - a
        c = np.full(xv.shape, 1.0 / tiny, dtype=complex)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, max_iter):
            an = -i * (i - a)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < tiny, tiny, d)
            c = b + an / c
            c = np.where(np.abs(c) < tiny, tiny, c)
            d = 1.0 / d
            delta = d * c
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[~use_series] = np.exp(a * np.log(xv) - xv) * h
    return complex(out[0]) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------- hypergeometric


def gauss_2f1(a, b, c, z) -> complex:
    """Gauss 2F1 with analytic continuation (mpmath backend, 30 digits)."""
    cc = complex(c)
    if abs(cc.imag) < POLE_RADIUS and cc.real <= 0 and abs(cc.real - round(cc.real)) < POLE_RADIUS:
        raise PoleProximityError("2F1 with c at a nonpositive integer")
    with mp.workdps(30):
        return complex(mp.hyp2f1(mp.mpc(complex(a)), mp.mpc(complex(b)), mp.mpc(cc), mp.mpc(complex(z))))


def gauss_2f1_series(a, b, c, z, terms: int = 4000) -> complex:
    """Plain Taylor series of 2F1 for |z| < 1."""
    total, term = 1.0 + 0j, 1.0 + 0j
    for n in range(terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


# ---------------------------------------------------------------- Bessel K


def _bessel_u_nodes(t: float, y: np.ndarray, cutoff: float = 42.0):
    u_max = np.arccosh(1.0 + cutoff / y)
    panels = int(min(400, max(16, math.ceil(float(np.max(u_max)) * (abs(t) + 1.0) / 1.5))))
    xi, w = composite_nodes(0.0, 1.0, panels)
    return u_max, xi, w


def bessel_k_scaled(t: float, y) -> np.ndarray:
    """e^y K_{it}(y) = int_0^oo exp(-y (cosh u - 1)) cos(t u) du, real t, y > 0."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(ys <= 0):
        raise ValueError("bessel_k needs y > 0")
    u_max, xi, w = _bessel_u_nodes(t, ys)
    out = np.empty(ys.shape)
    chunk = max(1, 2_000_000 // xi.size)
    for s in range(0, ys.size, chunk):
        yy = ys[s : s + chunk, None]
        um = u_max[s : s + chunk, None]
        u = um * xi[None, :]
        integrand = np.exp(-yy * 2.0 * np.sinh(0.5 * u) ** 2) * np.cos(t * u)
        out[s : s + chunk] = (integrand * w[None, :]).sum(axis=1) * um[:, 0]
    return out if np.ndim(y) else out[0]


def bessel_k_imaginary_order(t: float, y):
    """K_{it}(y) for real t and y > 0 via the cosh-integral representation."""
    ys = np.asarray(y, dtype=float)
    return bessel_k_scaled(t, ys) * np.exp(-ys)


# ---------------------------------------------------------------- Legendre


def legendre_p_on_axis(t: float, x):
    """P_{-1/2+it}(x) for x >= 1 (Mehler-Dirichlet integral, endpoint singularity removed).

    With x = cosh a and theta = a - v^2,
    P = (sqrt 2/pi) int_0^sqrt(a) 2 v cos(t (a - v^2)) / sqrt(2 sinh(a - v^2/2) sinh(v^2/2)) dv.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 1.0):
        raise ValueError("legendre_p_on_axis needs x >= 1")
    a = np.arccosh(xs)
    out = np.ones(xs.shape)
    pos = a > 0
    if np.any(pos):
        ap = a[pos]
        panels = int(max(8, math.ceil(float(np.max(ap)) * (abs(t) + 1.0))))
        xi, w = composite_nodes(0.0, 1.0, panels)
        root = np.sqrt(ap)[:, None]
        v = root * xi[None, :]
        v2 = v * v
        # 2v / sqrt(2 sinh(a - v^2/2) sinh(v^2/2)); the small-v limit is 2/sqrt(sinh a)
        den = np.sqrt(2.0 * np.sinh(ap[:, None] - 0.5 * v2) * np.sinh(0.5 * v2))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(v > 0, 2.0 * v / den, 2.0 / np.sqrt(np.sinh(ap))[:, None])
        integrand = ratio * np.cos(t * (ap[:, None] - v2))
        out[pos] = math.sqrt(2.0) / math.pi * (integrand * w[None, :]).sum(axis=1) * root[:, 0]
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------- Barnes integral


def barnes_beta_integral(z: complex, t: float, contour_abscissa: float, height: float | None = None,
                         panels_per_unit: float = 2.0) -> complex:
    """(2 pi i)^{-1} int_{(c)} Gamma(u) Gamma(z - u) / Gamma(z) t^{-u} du on Re u = c.

    Equals (1 + t)^{-z} for 0 < c < Re z.  The line is truncated where the
    Stirling envelope exp(-pi |Im u|) has dropped below 1e-17.
    """
    z = complex(z)
    c = float(contour_abscissa)
    if not (0.0 < c < z.real) or min(c, z.real - c) < POLE_RADIUS:
        raise PoleProximityError("contour abscissa must lie strictly between 0 and Re z")
    if t <= 0:
        raise ValueError("t must be positive")
    if height is None:
        height = abs(z.imag) + (40.0 + 2.0 * abs(z) + abs(math.log(t))) / (0.5 * math.pi) * 0.5 + 10.0
    panels = int(math.ceil(2 * height * panels_per_unit * max(1.0, abs(math.log(t)) / 2.0)))
    y, w = composite_nodes(-height, height, panels)
    u = c + 1j * y
    log_int = sps.loggamma(u) + sps.loggamma(z - u) - sps.loggamma(z) - u * math.log(t)
    return complex(np.sum(np.exp(log_int) * w) / (2.0 * math.pi))


# ---------------------------------------------------------------- M(s, t, delta)


@dataclass(frozen=True)
class MFunctionParams:
    s: complex
    t: complex
    delta: float


def m_poles_near(s: complex, t: complex, radius: float = POLE_RADIUS) -> bool:
    """True when s is within radius of some pole 1/2 +- i t - r (r >= 0)."""
    for sign in (1, -1):
        base = 0.5 + sign * 1j * complex(t)
        r = base.real - s.real
        if r > -radius:
            r_int = max(0, round(r))
            if abs(s - (base - r_int)) < radius:
                return True
    return False


def _mp(z) -> mp.mpc:
    return mp.mpc(complex(z))


def m_far(s: complex, t: complex, delta: float) -> complex:
    """sqrt(pi) 2^{it} delta^{-(s-1/2+it)} G(s-1/2-it) G(s-1/2+it)/G(s) F(s-1/2+it, 1/2+it; s; 1-2/delta)."""
    with mp.workdps(30):
        s_, t_, d_ = _mp(s), _mp(t), mp.mpf(delta)
        it = 1j * t_
        pref = mp.sqrt(mp.pi) * mp.power(2, it) * mp.power(d_, -(s_ - 0.5 + it))
        gam = mp.gamma(s_ - 0.5 - it) * mp.gamma(s_ - 0.5 + it) / mp.gamma(s_)
        return complex(pref * gam * mp.hyp2f1(s_ - 0.5 + it, 0.5 + it, s_, 1 - 2 / d_))


def _m_near_raw(s, t, delta) -> mp.mpc:
    s_, t_, d_ = _mp(s), _mp(t), mp.mpf(delta)
    it = 1j * t_
    first = (mp.sqrt(mp.pi) * mp.power(2, 0.5 - s_) * mp.gamma(s_ - 0.5 + it) * mp.gamma(s_ - 0.5 - it)
             * mp.gamma(1 - s_) / (mp.gamma(0.5 + it) * mp.gamma(0.5 - it))
             * mp.hyp2f1(s_ - 0.5 + it, s_ - 0.5 - it, s_, d_ / 2))
    second = mp.sqrt(mp.pi / 2) * mp.gamma(s_ - 1) * mp.power(d_, 1 - s_) * mp.hyp2f1(0.5 + it, 0.5 - it, 2 - s_, d_ / 2)
    return first + second


def m_near(s: complex, t: complex, delta: float, avg_radius: float = 0.02, nodes: int = 24) -> complex:
    """Sum-of-two representation (small delta/2 arguments).

    Each summand has removable-in-sum poles at integers s; there the value is
    taken as the mean over a small circle (exact for analytic functions up to
    an exponentially small aliasing term).
    """
    s = complex(s)
    with mp.workdps(40):
        if abs(s - round(s.real)) < 0.05:
            th = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
            vals = [_m_near_raw(s + avg_radius * cmath.exp(1j * a), t, delta) for a in th]
            return complex(mp.fsum(vals) / nodes)
        return complex(_m_near_raw(s, t, delta))


def m_limit(s: complex, t: complex) -> complex:
    """M(s, t, 0) = sqrt(pi) 2^{1/2-s} G(s-1/2+it) G(s-1/2-it) G(1-s) / (G(1/2+it) G(1/2-it)), Re s < 1."""
    with mp.workdps(30):
        s_, t_ = _mp(s), _mp(t)
        it = 1j * t_
        return complex(mp.sqrt(mp.pi) * mp.power(2, 0.5 - s_) * mp.gamma(s_ - 0.5 + it) * mp.gamma(s_ - 0.5 - it)
                       * mp.gamma(1 - s_) / (mp.gamma(0.5 + it) * mp.gamma(0.5 - it)))


def m_residue_leading(t: complex, r: int = 0, sign: int = 1) -> complex:
    """Leading residue of M at s = 1/2 + sign*i t - r."""
    with mp.workdps(30):
        t_ = _mp(t)
        it = 1j * t_ * sign
        num = (-1) ** r * mp.sqrt(mp.pi) * mp.power(2, r - it) * mp.gamma(0.5 - it + r) * mp.gamma(2 * it - r)
        den = mp.factorial(r) * mp.gamma(0.5 + 1j * t_) * mp.gamma(0.5 - 1j * t_)
        return complex(num / den)


def m_residue_probe(s0: complex, t: complex, delta: float, radius: float = 1e-3, nodes: int = 64) -> complex:
    """(2 pi i)^{-1} contour integral of M around a small circle centred at s0."""
    th = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
    total = 0j
    for a in th:
        e = cmath.exp(1j * a)
        total += m_far(s0 + radius * e, t, delta) * radius * e
    return total / nodes


def _m_quadrature(s: complex, t: float, delta: float) -> complex:
    sigma = s.real
    # integrand in x = log y: [e^y K](y) e^{-delta y} y^{s - 1/2}
    y_lo = math.exp(-40.0 / max(sigma - 0.5, 0.05))
    y_lo = max(y_lo, 1e-300)
    peak = max((sigma - 1.0) / delta, 1.0)
    log_env = lambda yy: (sigma - 1.0) * math.log(yy) - delta * yy
    target = log_env(peak) - 42.0
    y_hi = peak * 2.0
    while log_env(y_hi) > target:
        y_hi *= 1.5
    x_lo, x_hi = math.log(y_lo), math.log(y_hi)
    panels = int(math.ceil((x_hi - x_lo) * (2.0 + abs(s.imag) + abs(t)) / 1.5))
    x, w = composite_nodes(x_lo, x_hi, panels)
    y = np.exp(x)
    ek = bessel_k_scaled(t, y)
    integrand = ek * np.exp(-delta * y + (s - 0.5) * x)
    return complex(np.sum(integrand * w))


def m_function(p: MFunctionParams, method: str = "hypergeometric_far") -> complex:
    s, t, delta = complex(p.s), complex(p.t), float(p.delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if m_poles_near(s, t):
        raise PoleProximityError(f"s={s} is within {POLE_RADIUS} of a pole")
    if method == "quadrature":
        if abs(t.imag) > 0:
            raise ValueError("quadrature supports real t only")
        if s.real <= abs(t.imag) + 0.5:
            raise ValueError("quadrature needs Re s > |Im t| + 1/2")
        return _m_quadrature(s, t.real, delta)
    if method == "hypergeometric_far":
        return m_far(s, t, delta)
    if method == "hypergeometric_near":
        return m_near(s, t, delta)
    raise ValueError(f"unknown method {method!r}")
