"""Hyperbolic geometry on the upper half plane and the unit disc.

The disc map centred at z' is w = (z - z')/(z - conj z').  Pulling a
holomorphic form back to the disc and integrating against powers of the
Poisson kernel gives the theta integral

    (1/2pi) int_0^{2pi} e^{i h theta} ((1 - rho^2)/|1 - rho e^{i theta}|^2)^k dtheta
        = (1 - rho^2)^k rho^|h| Gamma(k+|h|)/(Gamma(k) Gamma(|h|+1)) F(k, k+|h|; |h|+1; rho^2).

The normalization Gamma(|h|+1) in the denominator is the one confirmed by
quadrature; Gamma(|h|) is off by a factor |h|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .qexp import QExpansion, evaluate


class QuadratureError(RuntimeError):
    """Periodic quadrature failed to converge under refinement."""


class ConditioningError(ValueError):
    """Taylor extraction requested too close to the unit circle."""


# ---------------------------------------------------------------- point-pair invariant


def point_pair_u(z, z_prime):
    """u(z, z') = |z - z'|^2 / (4 Im z Im z'); cosh d = 2u + 1."""
    z = np.asarray(z, dtype=complex)
    zp = np.asarray(z_prime, dtype=complex)
    if np.any(z.imag <= 0) or np.any(zp.imag <= 0):
        raise ValueError("points must lie in the upper half plane")
    u = np.abs(z - zp) ** 2 / (4.0 * z.imag * zp.imag)
    return float(u) if u.ndim == 0 else u


def hyperbolic_distance(z, z_prime):
    return np.arccosh(1.0 + 2.0 * np.asarray(point_pair_u(z, z_prime)))


def mobius(g, z):
    """Action of a real 2x2 matrix (a, b, c, d) on z."""
    a, b, c, d = g
    return (a * z + b) / (c * z + d)


# ---------------------------------------------------------------- disc model


@dataclass(frozen=True)
class DiscCenterFrame:
    z_prime: complex

    def __post_init__(self) -> None:
        if complex(self.z_prime).imag <= 0:
            raise ValueError("disc center must lie in the upper half plane")

    @property
    def y_prime(self) -> float:
        return complex(self.z_prime).imag


def disc_map(z, frame: DiscCenterFrame):
    zp = complex(frame.z_prime)
    z = np.asarray(z, dtype=complex)
    w = (z - zp) / (z - zp.conjugate())
    return complex(w) if w.ndim == 0 else w


def inverse_disc_map(w, frame: DiscCenterFrame):
    zp = complex(frame.z_prime)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) >= 1.0):
        raise ValueError("points must lie in the open unit disc")
    z = (zp - zp.conjugate() * w) / (1.0 - w)
    return complex(z) if z.ndim == 0 else z


def ys_transform_check(frame: DiscCenterFrame, s: float, grid) -> float:
    """max relative residual of y^s against ((1-|w|^2)/|1-w|^2)^s y'^s over a disc grid."""
    w = np.atleast_1d(np.asarray(grid, dtype=complex))
    y = np.asarray(inverse_disc_map(w, frame)).imag
    lhs = y**s
    rhs = ((1.0 - np.abs(w) ** 2) / np.abs(1.0 - w) ** 2) ** s * frame.y_prime**s
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


# ---------------------------------------------------------------- theta integral


def poisson_coefficient(k: float, h: int) -> float:
    """Gamma(k+|h|) / (Gamma(k) Gamma(|h|+1))."""
    h = abs(int(h))
    return math.exp(math.lgamma(k + h) - math.lgamma(k) - math.lgamma(h + 1))


def euler_hyp(k: float, h, z, tol: float = 1e-17, max_terms: int = 200_000):
    """G_h(z) = (1-z)^{2k-1} F(k, h+k; h+1; z) = F(h+1-k, 1-k; h+1; z).

    The right-hand series has terms of size n^{-2k} |z|^n, so it converges on
    the closed disc for k > 1/2 and is summed directly.  Vectorized over h and z.
    """
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    hh, zz = np.meshgrid(h_arr, z_arr, indexing="ij")
    total = np.ones(hh.shape, dtype=complex)
    term = np.ones(hh.shape, dtype=complex)
    a, c = hh + 1.0 - k, hh + 1.0
    b = 1.0 - k
    n = 0
    while True:
        term = term * (a + n) * (b + n) / ((c + n) * (n + 1.0)) * zz
        total += term
        n += 1
        # the ratio tends to |z|; once below 1 the remaining tail is dominated geometrically
        bound = np.abs(term) * np.where(np.abs(zz) < 1, 1.0 / (1.0 - np.abs(zz) + 1e-300), n)
        if n > 8 and np.all(bound <= tol * np.maximum(1.0, np.abs(total))):
            break
        if n >= max_terms:
            if np.all(np.abs(term) * n <= 1e-9):
                break
            raise QuadratureError("hypergeometric series did not converge")
    out = total.reshape(hh.shape)
    if np.ndim(h) == 0 and np.ndim(z) == 0:
        return complex(out[0, 0])
    if np.ndim(h) == 0:
        return out[0]
    if np.ndim(z) == 0:
        return out[:, 0]
    return out


def poisson_closed_form(k: float, h: int, rho) -> float:
    """(1-rho^2)^k rho^|h| Gamma(k+|h|)/(Gamma(k)Gamma(|h|+1)) F(k, k+|h|; |h|+1; rho^2)."""
    h = abs(int(h))
    r2 = rho * rho
    g = euler_hyp(k, h, r2)
    return poisson_coefficient(k, h) * rho**h * (1.0 - r2) ** (1.0 - k) * g


def poisson_quadrature(k: float, h: int, rho: float, tol: float = 1e-14, max_nodes: int = 1 << 18) -> float:
    """Periodic trapezoid rule, doubled until two successive values agree to tol."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")

    def rule(n: int) -> float:
        th = 2.0 * np.pi * np.arange(n) / n
        P = (1.0 - rho * rho) / (1.0 - 2.0 * rho * np.cos(th) + rho * rho)
        return float(np.mean(np.cos(h * th) * P**k))

    n = 64
    prev = rule(n)
    while n < max_nodes:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"theta quadrature did not settle (k={k}, h={h}, rho={rho})")


class PoissonIntegral(NamedTuple):
    quadrature: float
    closed_form: float


def poisson_power_integral(k: float, h: int, rho: float) -> PoissonIntegral:
    return PoissonIntegral(poisson_quadrature(k, h, rho), float(np.real(poisson_closed_form(k, h, rho))))


def normalization_residuals(k: float, h: int, rho: float) -> dict[str, float]:
    """Residuals of the two candidate normalizations against quadrature."""
    h = abs(int(h))
    quad = poisson_quadrature(k, h, rho)
    base = float(np.real(poisson_closed_form(k, h, rho)))
    out = {"gamma(h+1)": abs(base - quad)}
    # Gamma(|h|) in place of Gamma(|h|+1) multiplies by |h|
    out["gamma(h)"] = abs(h * base - quad) if h > 0 else math.inf
    return out


# ---------------------------------------------------------------- hypergeometric bound


def hyp_bound_property(k: float, h_grid, rho_grid) -> float:
    """max of |F(k, h+k; h+1; rho^2) (1-rho^2)^{2k-1}| over the grid."""
    rho = np.asarray(rho_grid, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1 - 1e-3):
        raise ValueError("rho grid must lie in [0, 1 - 1e-3]")
    vals = euler_hyp(k, np.asarray(h_grid, dtype=float), rho * rho)
    return float(np.max(np.abs(vals)))


def hyp_large_h_limit(k: float, rho) -> np.ndarray:
    """h -> infinity limit of (1-rho^2)^{2k-1} F(k, h+k; h+1; rho^2), namely (1-rho^2)^{k-1}."""
    return (1.0 - np.asarray(rho, dtype=float) ** 2) ** (k - 1.0)


# ---------------------------------------------------------------- pulled-back Taylor series


@dataclass
class DiscPullback:
    """phi(w) = f(z(w)) for the disc frame, with memoized Taylor coefficients."""

    f: QExpansion
    frame: DiscCenterFrame
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, w):
        return evaluate(self.f, inverse_disc_map(w, self.frame), 1e-15)

    def taylor(self, n_coeffs: int, radius: float = 0.5, samples: int = 256) -> np.ndarray:
        """a_0..a_{n-1} from uniform samples on |w| = radius and an inverse DFT."""
        if not 0.0 < radius < 1.0:
            raise ConditioningError("sampling radius must lie in (0, 1)")
        if samples < n_coeffs:
            raise ValueError("need at least as many samples as coefficients")
        key = (n_coeffs, float(radius), samples)
        if key not in self._cache:
            w = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
            c = np.fft.fft(np.asarray(self(w))) / samples
            coeffs = c[:n_coeffs] / radius ** np.arange(n_coeffs)
            coeffs.setflags(write=False)
            self._cache[key] = coeffs
        return self._cache[key]


def _budget(rho_abs: float) -> tuple[int, float, int]:
    """Coefficient count, sampling radius and sample count for |rho|."""
    if rho_abs >= 0.95:
        raise ConditioningError("|rho| too close to 1 for Taylor extraction")
    r2 = max(rho_abs * rho_abs, 0.04)
    n = int(math.ceil(40.0 / -math.log(r2))) + 24
    radius = min(0.95, max(0.5, math.sqrt(r2)))
    samples = 256
    while samples < 2 * n or radius**samples > 1e-30:
        samples *= 2
    return n, radius, samples


def B_rho(f1: QExpansion, f2: QExpansion, frame: DiscCenterFrame, rho: complex, H_max: int | None = None,
          pullbacks: tuple[DiscPullback, DiscPullback] | None = None) -> complex:
    """Shifted double series

        B(rho) = sum_{h>=0} sum_n a_{n+h} conj(b_n) rho^{2n+2h} c_h (1-rho^2)^k F(k,h+k;h+1;rho^2)
               + sum_{h>=1} sum_n a_n conj(b_{n+h}) rho^{2n+2h} c_h (1-rho^2)^k F(k,h+k;h+1;rho^2)

    with c_h = Gamma(h+k)/(Gamma(h+1)Gamma(k)); holomorphic and even in rho.
    """
    if f1.two_k != f2.two_k:
        raise ValueError("forms must share the weight")
    rho = complex(rho)
    k = f1.k
    n, radius, samples = _budget(abs(rho))
    p1, p2 = pullbacks or (DiscPullback(f1, frame), DiscPullback(f2, frame))
    a = p1.taylor(n, radius, samples)
    b = p2.taylor(n, radius, samples)
    if rho == 0:
        return complex(a[0] * np.conj(b[0]))
    H = n - 1 if H_max is None else min(int(H_max), n - 1)
    r2 = rho * rho
    pw = r2 ** np.arange(n)
    hs = np.arange(H + 1)
    weight = np.array([poisson_coefficient(k, h) for h in hs]) * (1.0 - r2) ** (1.0 - k)
    weight = weight * np.asarray(euler_hyp(k, hs, r2)) * r2**hs
    bc = np.conj(b)
    ac = a
    total = 0j
    for h in hs:
        m = n - h
        s1 = np.sum(ac[h:] * bc[:m] * pw[:m])
        s2 = np.sum(ac[:m] * bc[h:] * pw[:m]) if h > 0 else 0.0
        total += weight[h] * (s1 + s2)
    return complex(total)


def B_rho_direct(f1: QExpansion, f2: QExpansion, frame: DiscCenterFrame, rho: float,
                 tol: float = 1e-12, max_nodes: int = 1 << 14) -> complex:
    """(1/2pi) int phi1(rho e^{it}) conj(phi2(rho e^{it})) P_rho(t)^k dt by the periodic trapezoid rule."""
    rho = float(rho)
    if abs(rho) >= 1:
        raise ValueError("|rho| must be < 1")
    k = f1.k

    def rule(n: int) -> complex:
        th = 2.0 * np.pi * np.arange(n) / n
        w = rho * np.exp(1j * th)
        zs = inverse_disc_map(w, frame)
        v1 = evaluate(f1, zs, 1e-15)
        v2 = v1 if f2 is f1 else evaluate(f2, zs, 1e-15)
        P = (1.0 - rho * rho) / np.abs(1.0 - w) ** 2
        return complex(np.mean(v1 * np.conj(v2) * P**k))

    n = 128
    prev = rule(n)
    while n < max_nodes:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError("direct theta quadrature did not settle")


def B_bound(M1: float, M2: float, y_prime: float, k: float, rho) -> np.ndarray:
    """M1 M2 y'^{-k} 2^{4k} (1-|rho|^2)^{-2k} |1-rho^2|^{-(2k-1)}."""
    rho = np.asarray(rho, dtype=complex)
    r = np.abs(rho)
    return M1 * M2 * y_prime ** (-k) * 2.0 ** (4 * k) * (1 - r * r) ** (-2 * k) * np.abs(1 - rho * rho) ** (1 - 2 * k)


def taylor_consistency(pullback: DiscPullback, n_coeffs: int = 64, radius: float = 0.5,
                       samples: tuple[int, int] = (256, 512)) -> float:
    """max_n |a_n - a'_n| radius^n between two sample counts.

    Dividing by radius^n amplifies rounding for large n, so the comparison is
    made on the scale the DFT actually resolves.
    """
    a = pullback.taylor(n_coeffs, radius, samples[0])
    b = pullback.taylor(n_coeffs, radius, samples[1])
    return float(np.max(np.abs(a - b) * radius ** np.arange(n_coeffs)))
