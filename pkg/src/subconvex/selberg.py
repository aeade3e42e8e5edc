"""Harish-Chandra--Selberg transform, the Gaussian localizer and automorphic kernels.

Conventions, all in the hyperbolic distance r with u = sinh^2(r/2):

    Q(v) = int_R k(v + w^2) dw,   g(r) = 2 Q(sinh^2(r/2)),   h(t) = int_R g(r) e^{irt} dr
    h(t) = 4 pi int_0^oo k(u) P_{-1/2+it}(1 + 2u) du
    g(xi) = (1/2pi) int_R h(t) e^{-it xi} dt,   k(u) = -(1/pi) int_u^oo Q'(v) (v - u)^{-1/2} dv
    k(u) = (1/4pi) int_R P_{-1/2+it}(1 + 2u) h(t) t tanh(pi t) dt

The constants were fixed by requiring the forward, inverse and Legendre routes
to agree; the inverse Abel step with 1/pi then makes the localizer kernel
k(sinh^2(r/2)) = (1/pi) int_r^oo (T sin xi T + 2 pi xi cos xi T) e^{-pi xi^2}
(sinh^2(xi/2) - sinh^2(r/2))^{-1/2} dxi exactly the inverse of g = 2 cos(xi T) e^{-pi xi^2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev

from .arith import _egcd
from .geom import inverse_disc_map, point_pair_u
from .qexp import QExpansion, evaluate, sup_norm_estimate
from .special import composite_nodes, legendre_p_on_axis


class DecayError(ValueError):
    """Input does not decay fast enough for the truncated quadratures."""


class CutoffError(RuntimeError):
    """Orbit-sum tail estimate exceeds the requested tolerance."""


Radial = Callable[[np.ndarray], np.ndarray]


def u_to_r(u):
    return 2.0 * np.arcsinh(np.sqrt(np.asarray(u, dtype=float)))


def r_to_u(r):
    return np.sinh(0.5 * np.asarray(r, dtype=float)) ** 2


# ---------------------------------------------------------------- quadrature rules


def _graded_unit_nodes(oscillation: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1], geometrically graded towards 0."""
    geo = 2.0 ** -np.arange(24, 4, -1)
    uniform = np.linspace(2.0**-5, 1.0, int(24 + 2 * oscillation) + 1)
    edges = np.concatenate([[0.0], geo, uniform])
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = composite_nodes(a, b, 1)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _abel_weight(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """s / sqrt(sinh^2((r+s^2)/2) - sinh^2(r/2)), finite as s -> 0 for r > 0."""
    half = 0.5 * s * s
    return np.sqrt(s * s / np.sinh(half)) / np.sqrt(np.sinh(r + half))


def _abel_integral(fn: Radial, r: np.ndarray, r_max: float, oscillation: float) -> np.ndarray:
    """int_0^{sqrt(r_max - r)} fn(r + s^2) abel_weight(r, s) ds, vectorized over r."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros(r.shape)
    inside = r < r_max
    if not np.any(inside):
        return out
    sig, wsig = _graded_unit_nodes(oscillation)
    rr = r[inside][:, None]
    smax = np.sqrt(r_max - rr)
    s = smax * sig[None, :]
    vals = fn((rr + s * s).ravel()).reshape(s.shape) * _abel_weight(rr, s)
    out[inside] = (vals * wsig[None, :]).sum(axis=1) * smax[:, 0]
    return out


def _cheb_fit(fn: Radial, a: float, b: float, tol: float = 1e-14,
              degrees: tuple[int, ...] = (64, 128, 256, 512)) -> Chebyshev:
    for deg in degrees:
        c = Chebyshev.interpolate(fn, deg, domain=[a, b])
        coef = np.abs(c.coef)
        if np.max(coef[-6:]) <= tol * max(np.max(coef), 1e-300):
            return c
    return c


# ---------------------------------------------------------------- transform pairs


@dataclass(frozen=True)
class TransformPair:
    """Radial kernel and its transforms; every side is a vectorized callable.

    k_radial(r) = k(sinh^2(r/2)); g_side(r) is even; h_side(t) is even.  The k
    side is treated as zero beyond r_max.
    """

    k_radial: Radial
    g_side: Radial
    h_side: Radial
    provenance: str
    r_max: float
    g_prime: Radial | None = None

    def k_side(self, u):
        return self.k_radial(u_to_r(u))

    def q_side(self, v):
        return 0.5 * self.g_side(u_to_r(v))


@dataclass(frozen=True)
class LocalizerParams:
    T: float

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError("T must be positive")


def localizer_g(T: float, xi):
    xi = np.asarray(xi, dtype=float)
    return 2.0 * np.cos(xi * T) * np.exp(-math.pi * xi * xi)


def localizer_g_prime(T: float, xi):
    xi = np.asarray(xi, dtype=float)
    return -2.0 * (T * np.sin(xi * T) + 2.0 * math.pi * xi * np.cos(xi * T)) * np.exp(-math.pi * xi * xi)


def localizer_h(T: float, t):
    """int_R 2 cos(r T) e^{-pi r^2} e^{irt} dr."""
    t = np.asarray(t, dtype=float)
    return np.exp(-((t - T) ** 2) / (4.0 * math.pi)) + np.exp(-((t + T) ** 2) / (4.0 * math.pi))


def _abel_inverse(g_prime: Radial, r: np.ndarray, r_max: float, T: float) -> np.ndarray:
    # k = -(1/pi) int Q'(v) dv / sqrt(v-u) with dQ = g'(xi)/2 dxi and dv/sqrt(v-u) -> 2 s ds / w
    return -_abel_integral(g_prime, r, r_max, T * math.sqrt(r_max)) / math.pi


def localizer(T: float, r_max: float = 7.0) -> TransformPair:
    """Analytic pair g = 2 cos(xi T) e^{-pi xi^2}, h = e^{-(t-T)^2/4pi} + e^{-(t+T)^2/4pi}.

    The k side is the Abel inverse of the closed-form g', sampled on a
    Chebyshev grid in r; it decays like e^{-pi r^2}.
    """
    LocalizerParams(T)
    gp = lambda x: localizer_g_prime(T, x)
    k_cheb = _cheb_fit(lambda r: _abel_inverse(gp, r, r_max, T), 0.0, r_max)
    return TransformPair(
        k_radial=_zero_beyond(k_cheb, r_max),
        g_side=lambda x: localizer_g(T, np.abs(x)),
        h_side=lambda t: localizer_h(T, t),
        provenance="analytic_pair",
        r_max=r_max,
        g_prime=gp,
    )


def _zero_beyond(fn: Radial, r_max: float) -> Radial:
    def out(r):
        r = np.asarray(r, dtype=float)
        ra = np.abs(r)
        return np.where(ra <= r_max, fn(np.minimum(ra, r_max)), 0.0)

    return out


# ---------------------------------------------------------------- forward transforms


def _fourier_cos(fn_vals: np.ndarray, nodes: np.ndarray, weights: np.ndarray, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    for s in range(0, t.size, 512):
        tt = t[s : s + 512]
        out[s : s + 512] = np.cos(np.outer(tt, nodes)) @ (fn_vals * weights)
    return out


def forward_three_step(k_side: TransformPair | Radial, r_max: float | None = None,
                       t_scale: float = 40.0) -> TransformPair:
    """Abel transform, change of variables and cosine transform.

    k_side is a TransformPair or a radial callable k(u); t_scale bounds the
    frequencies at which h will be requested and sets the r-quadrature density.
    """
    if isinstance(k_side, TransformPair):
        kr, r_max = k_side.k_radial, k_side.r_max if r_max is None else r_max
    else:
        if r_max is None:
            raise ValueError("r_max is required for a bare kernel")
        kr = lambda r, f=k_side: f(r_to_u(r))
    tail = float(np.max(np.abs(kr(np.linspace(0.98 * r_max, r_max, 8)))))
    head = float(np.max(np.abs(kr(np.linspace(0.0, r_max, 257)))))
    if head > 0 and tail > 1e-13 * head:
        raise DecayError(f"k is not negligible at r_max={r_max} (ratio {tail / head:.2e})")

    weighted = lambda rho: kr(rho) * np.sinh(rho)
    osc = t_scale * math.sqrt(r_max) / 4.0
    Q = lambda r: _abel_integral(weighted, r, r_max, osc)
    g_cheb = _cheb_fit(lambda r: 2.0 * Q(r), 0.0, r_max)
    g = _zero_beyond(g_cheb, r_max)
    nodes, weights = composite_nodes(0.0, r_max, int(math.ceil(r_max * (t_scale + 4) / 4.0)) + 8)
    g_nodes = g_cheb(nodes)

    def h(t):
        return 2.0 * _fourier_cos(g_nodes, nodes, weights, np.abs(t))

    return TransformPair(k_radial=_zero_beyond(kr, r_max), g_side=g, h_side=h, provenance="from_k", r_max=r_max)


def forward_single_step(k_side: TransformPair | Radial, r_max: float | None = None,
                        panels_per_unit: float = 6.0) -> Radial:
    """h(t) = 4 pi int_0^oo k(u) P_{-1/2+it}(1+2u) du = 2 pi int_0^oo k(sinh^2(r/2)) P(cosh r) sinh r dr."""
    if isinstance(k_side, TransformPair):
        kr, r_max = k_side.k_radial, k_side.r_max if r_max is None else r_max
    else:
        if r_max is None:
            raise ValueError("r_max is required for a bare kernel")
        kr = lambda r, f=k_side: f(r_to_u(r))

    def h(t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t_arr.shape)
        for i, tt in enumerate(t_arr):
            panels = int(math.ceil(r_max * panels_per_unit * (1.0 + abs(tt) / 4.0)))
            r, w = composite_nodes(0.0, r_max, panels)
            P = legendre_p_on_axis(abs(tt), np.cosh(r))
            out[i] = 2.0 * math.pi * np.sum(kr(r) * P * np.sinh(r) * w)
        return out if np.ndim(t) else float(out[0])

    return h


# ---------------------------------------------------------------- inverse transforms


def _decay_horizon(h_side: Radial, limit: float = 400.0, tol: float = 1e-18) -> float:
    t = np.linspace(0.0, limit, int(4 * limit) + 1)
    v = np.abs(h_side(t))
    top = float(np.max(v))
    if top == 0.0:
        return 1.0
    big = np.nonzero(v > tol * top)[0]
    if big[-1] == t.size - 1:
        raise DecayError("h does not decay within the scan window")
    return float(t[big[-1]]) + 2.0


def fourier_inverse(h_side: Radial, t_max: float | None = None, r_max: float = 7.0):
    """g(xi) = (1/pi) int_0^oo h(t) cos(t xi) dt and g'(xi) by the same rule."""
    if t_max is None:
        t_max = _decay_horizon(h_side)
    panels = int(math.ceil(t_max * (r_max + 2.0) / 3.0)) + 16
    t, w = composite_nodes(0.0, t_max, panels)
    hv = np.asarray(h_side(t), dtype=float) * w

    def g(xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return (np.cos(np.outer(xi, t)) @ hv) / math.pi

    def g_prime(xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return -(np.sin(np.outer(xi, t)) @ (hv * t)) / math.pi

    return g, g_prime, t_max


def inverse_transform(h_side: Radial, route: str = "abel", t_max: float | None = None,
                      r_max: float = 7.0) -> TransformPair:
    """Recover k from an even, rapidly decaying h.

    route "abel": Fourier inversion, change of variables, Abel inversion with Q'.
    route "legendre": k(u) = (1/2pi) int_0^oo P_{-1/2+it}(1+2u) h(t) t tanh(pi t) dt.
    """
    if t_max is None:
        t_max = _decay_horizon(h_side)
    if route == "abel":
        g, gp, _ = fourier_inverse(h_side, t_max, r_max)
        # g' is resampled on a Chebyshev grid so the Abel nodes never meet the t-quadrature directly
        gp = _zero_beyond(_cheb_fit(gp, 0.0, r_max), r_max)
        k_cheb = _cheb_fit(lambda r: _abel_inverse(gp, r, r_max, t_max / 2.0), 0.0, r_max)
        return TransformPair(k_radial=_zero_beyond(k_cheb, r_max), g_side=g, h_side=h_side,
                             provenance="from_h", r_max=r_max, g_prime=gp)
    if route == "legendre":
        panels = int(math.ceil(t_max * 2.0)) + 16
        t, w = composite_nodes(0.0, t_max, panels)
        weight = np.asarray(h_side(t), dtype=float) * t * np.tanh(math.pi * t) * w / (2.0 * math.pi)

        def k_radial(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            x = np.cosh(r)
            acc = np.zeros(r.shape)
            for tt, ww in zip(t, weight):
                acc += ww * legendre_p_on_axis(tt, x)
            return acc

        g, gp, _ = fourier_inverse(h_side, t_max, r_max)
        return TransformPair(k_radial=k_radial, g_side=g, h_side=h_side, provenance="from_h",
                             r_max=r_max, g_prime=gp)
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------- verification helpers


def g_side_check(T: float, xi=None) -> float:
    """max |closed-form g - Fourier quadrature of h| for the localizer."""
    if xi is None:
        xi = np.linspace(0.0, 4.0, 81)
    g, _, _ = fourier_inverse(lambda t: localizer_h(T, t), T + 40.0)
    return float(np.max(np.abs(g(xi) - localizer_g(T, xi))))


@dataclass(frozen=True)
class RoundtripReport:
    T: float
    h_k_h: float
    k_h_k: float
    routes: float


def localizer_roundtrips(T: float, r_max: float = 7.0) -> RoundtripReport:
    """Sup errors of h -> k -> h on [0, 2T], k -> h -> k on a u grid, and three-step vs one-step."""
    pair = localizer(T, r_max)
    t_grid = np.linspace(0.0, 2.0 * T, 41)

    from_h = inverse_transform(pair.h_side, "abel", r_max=r_max)
    h_back = forward_three_step(from_h, t_scale=T + 40.0)
    e_hkh = float(np.max(np.abs(h_back.h_side(t_grid) - pair.h_side(t_grid))))

    fwd = forward_three_step(pair, t_scale=T + 40.0)
    k_back = inverse_transform(fwd.h_side, "abel", t_max=T + 40.0, r_max=r_max)
    r_grid = np.linspace(0.0, 0.9 * r_max, 61)
    e_khk = float(np.max(np.abs(k_back.k_radial(r_grid) - pair.k_radial(r_grid))))

    t_route = np.linspace(0.0, 2.0 * T, 9)
    single = forward_single_step(pair)
    e_route = float(np.max(np.abs(single(t_route) - fwd.h_side(t_route))))
    return RoundtripReport(T, e_hkh, e_khk, e_route)


# ---------------------------------------------------------------- automorphic kernel


@dataclass(frozen=True)
class KernelValue:
    value: float
    tail_bound: float
    terms: int


def _orbit(z: complex, z_prime: complex, N: int, R: float) -> list[tuple[int, int, int, complex]]:
    """Points gamma z' (gamma in Gamma_0(N) modulo +-1) within distance R of z, sorted by (c, d, n)."""
    x, y = z.real, z.imag
    xp, yp = z_prime.real, z_prime.imag
    u_max = 0.5 * (math.cosh(R) - 1.0)
    B = yp * math.exp(R) / y
    out = []
    c_max = int(math.floor(math.sqrt(B) / yp))
    for c in range(0, c_max + 1, N):
        if c == 0:
            pairs = [(1, 0, 1)]
        else:
            rad = B - (c * yp) ** 2
            if rad < 0:
                continue
            lo = math.ceil(-c * xp - math.sqrt(rad))
            hi = math.floor(-c * xp + math.sqrt(rad))
            pairs = []
            for d in range(lo, hi + 1):
                if math.gcd(c, d) != 1:
                    continue
                g, s, t = _egcd(d, -c)  # s d - t c = 1 up to the sign of g
                a0, b0 = s * g, t * g
                pairs.append((a0, b0, d))
        for a0, b0, d in pairs:
            w0 = (a0 * z_prime + b0) / (c * z_prime + d)
            reach = 4.0 * y * w0.imag * u_max - (y - w0.imag) ** 2
            if reach < 0:
                continue
            span = math.sqrt(reach)
            for n in range(math.ceil(x - w0.real - span), math.floor(x - w0.real + span) + 1):
                out.append((c, d, n, w0 + n))
    out.sort(key=lambda e: (e[0], e[1], e[2]))
    return out


def _injectivity(z_prime: complex, N: int) -> tuple[int, float]:
    """Stabilizer order (mod +-1) of z' and half the minimal nontrivial orbit distance."""
    pts = _orbit(z_prime, z_prime, N, 4.0)
    d = np.array([math.acosh(1.0 + 2.0 * point_pair_u(z_prime, p[3])) for p in pts])
    stab = int(np.sum(d < 1e-9))
    rest = d[d >= 1e-9]
    delta = 0.5 * float(rest.min()) if rest.size else 2.0
    return max(stab, 1), delta


def automorphic_kernel(z: complex, z_prime: complex, pair: TransformPair, N: int, R: float,
                       tol: float | None = None) -> KernelValue:
    """sum over gamma in Gamma_0(N)/{+-1} with d(z, gamma z') <= R of k(u(z, gamma z')).

    The tail bound counts orbit points in unit annuli beyond R with a packing
    estimate and multiplies by the sup of |k| on each annulus.
    """
    z, z_prime = complex(z), complex(z_prime)
    pts = _orbit(z, z_prime, N, R)
    u = np.array([point_pair_u(z, p[3]) for p in pts]) if pts else np.zeros(0)
    val = float(np.sum(pair.k_side(u))) if u.size else 0.0
    stab, delta = _injectivity(z_prime, N)
    tail = 0.0
    j = 0
    while R + j < pair.r_max:
        rr = np.linspace(R + j, min(R + j + 1, pair.r_max), 64)
        sup_k = float(np.max(np.abs(pair.k_radial(rr))))
        count = stab * math.sinh(0.5 * (R + j + 1 + delta)) ** 2 / math.sinh(0.5 * delta) ** 2
        tail += count * sup_k
        j += 1
    if tol is not None and tail > tol:
        raise CutoffError(f"tail estimate {tail:.3e} exceeds {tol:.3e}")
    return KernelValue(val, tail, len(pts))


# ---------------------------------------------------------------- kernel pairing


def pairing_bound(M1: float, M2: float, T: float, k: float) -> float:
    """64 M1 M2 T^{2k+1} e^{-pi T/2} e^{(3k-1)^2/(4 pi)} (1 + k/T)."""
    return 64.0 * M1 * M2 * T ** (2 * k + 1) * math.exp(-math.pi * T / 2) * math.exp((3 * k - 1) ** 2 / (4 * math.pi)) * (1 + k / T)


def radial_pairing(F: Callable[[np.ndarray], np.ndarray], pair: TransformPair, z_prime: complex = 1j,
                   n_r: int = 24, n_theta: int = 2048, r_cut: float | None = None) -> complex:
    """int_H F(z) k(u(z, z')) dmu in geodesic polar coordinates about z'.

    dmu = sinh r dr dtheta; theta by the periodic trapezoid rule, r by composite
    Gauss-Legendre with n_r panels.
    """
    from .geom import DiscCenterFrame

    frame = DiscCenterFrame(complex(z_prime))
    r_cut = min(pair.r_max, 5.0) if r_cut is None else r_cut
    r, wr = composite_nodes(0.0, r_cut, n_r)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    kr = pair.k_radial(r)
    total = 0j
    for rr, ww, kk in zip(r, wr, kr):
        zs = inverse_disc_map(math.tanh(0.5 * rr) * np.exp(1j * th), frame)
        total += ww * math.sinh(rr) * kk * np.mean(F(zs))
    return 2.0 * math.pi * total


def unfolded_pairing(f1: QExpansion, f2: QExpansion, pair: TransformPair, z_prime: complex = 1j,
                     n_r: int = 24, n_theta: int = 2048, r_cut: float | None = None) -> complex:
    """int_H f1(z) conj(f2(z)) y^k k(u(z, z')) dmu."""
    k = f1.k

    def F(zs):
        v1 = evaluate(f1, zs, 1e-15)
        v2 = v1 if f2 is f1 else evaluate(f2, zs, 1e-15)
        return v1 * np.conj(v2) * zs.imag**k

    return radial_pairing(F, pair, z_prime, n_r, n_theta, r_cut)


@dataclass(frozen=True)
class PairingRow:
    T: float
    z_prime: complex
    value: complex
    refined: complex
    bound: float


@dataclass(frozen=True)
class PairingReport:
    rows: list[PairingRow]
    M1: float
    M2: float
    log_slope: float | None

    @property
    def within_bound(self) -> bool:
        return all(abs(r.value) <= r.bound for r in self.rows)


def kernel_pairing_check(f1: QExpansion, f2: QExpansion, T_grid=(3.0, 4.0, 5.0, 6.0), z_primes=(1j,),
                         n_r: int = 24, n_theta: int = 2048, M1: float | None = None,
                         M2: float | None = None) -> PairingReport:
    """Measured unfolded pairing against the bound at each (T, z'), plus the fitted
    slope of log|pairing| in T at the first z'."""
    zero = not np.any(f1.coeffs) or not np.any(f2.coeffs)
    M1 = (0.0 if zero else sup_norm_estimate(f1)) if M1 is None else M1
    M2 = (0.0 if zero else sup_norm_estimate(f2)) if M2 is None else M2
    rows = []
    for T in T_grid:
        pair = localizer(T)
        for zp in z_primes:
            if zero:
                v = ref = 0j
            else:
                v = unfolded_pairing(f1, f2, pair, zp, n_r, n_theta)
                ref = unfolded_pairing(f1, f2, pair, zp, int(1.5 * n_r), 2 * n_theta)
            rows.append(PairingRow(float(T), complex(zp), v, ref, pairing_bound(M1, M2, T, f1.k)))
    slope = None
    first = [r for r in rows if r.z_prime == complex(z_primes[0])]
    if len(first) >= 2 and all(abs(r.refined) > 0 for r in first):
        Ts = np.array([r.T for r in first])
        logs = np.log([abs(r.refined) for r in first])
        slope = float(np.polyfit(Ts, logs, 1)[0])
    return PairingReport(rows, M1, M2, slope)
