"""q-expansions of eta quotients and theta products.

A form is described by a product string such as ``eta(8z)^3`` or
``theta(z)*eta(z)*eta(23z)``.  Coefficients are exact integers; evaluation
carries a tail bound derived from a measured polynomial coefficient envelope.
"""

from __future__ import annotations

import hashlib
import math
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from .arith import IntegerMatrix2x2, cocycle_j, gamma0_coset_reps, kronecker


class PrecisionError(RuntimeError):
    """Raised when a requested accuracy cannot be certified."""


class FormSpecError(ValueError):
    pass


@dataclass(frozen=True)
class EtaQuotientSpec:
    """Product of eta(m z)^e factors and theta(m z)^e factors (theta exponents >= 0)."""

    factors: tuple[tuple[int, int], ...] = ()
    theta: tuple[tuple[int, int], ...] = ()

    @property
    def two_k(self) -> int:
        return sum(e for _, e in self.factors) + sum(e for _, e in self.theta)

    def leading_power(self) -> Fraction:
        return Fraction(sum(m * e for m, e in self.factors), 24)

    def scaled(self, ell: int) -> "EtaQuotientSpec":
        """Factor description of z -> f(ell z)."""
        return EtaQuotientSpec(
            tuple((m * ell, e) for m, e in self.factors),
            tuple((m * ell, e) for m, e in self.theta),
        )

    def as_eta_quotient(self) -> dict[int, int]:
        """Rewrite theta(mz) = eta(2mz)^5 / (eta(mz)^2 eta(4mz)^2) and merge."""
        out: dict[int, int] = {}
        for m, e in self.factors:
            out[m] = out.get(m, 0) + e
        for m, e in self.theta:
            for mm, ee in ((2 * m, 5), (m, -2), (4 * m, -2)):
                out[mm] = out.get(mm, 0) + ee * e
        return {m: e for m, e in out.items() if e}

    def level(self) -> int:
        eta = [(m, e) for m, e in self.factors]
        base = 1
        for m, _ in eta:
            base = math.lcm(base, m)
        n_eta = base
        if eta:
            s = sum(Fraction(e, m) for m, e in eta)
            j = 1
            while (base * j * s) % 24 != 0:
                j += 1
            n_eta = base * j
        level = n_eta
        for m, _ in self.theta:
            level = math.lcm(level, 4 * m)
        if self.two_k % 2 == 1:
            level = math.lcm(level, 4)
        return level

    def __str__(self) -> str:
        parts = []
        for m, e in self.theta:
            parts.append(_fmt("theta", m, e))
        for m, e in self.factors:
            parts.append(_fmt("eta", m, e))
        return "*".join(parts) if parts else "1"


def _fmt(name: str, m: int, e: int) -> str:
    arg = "z" if m == 1 else f"{m}z"
    return f"{name}({arg})" + ("" if e == 1 else f"^{e}")


_FACTOR_RE = re.compile(r"^(eta|theta)\((\d*)z\)(?:\^\(?(-?\d+)\)?)?$")


def parse_form_spec(text: str) -> EtaQuotientSpec:
    """Parse strings like 'eta(8z)^3' or 'theta(z)*eta(z)*eta(23z)'."""
    text = text.replace(" ", "")
    if text in ("", "1"):
        return EtaQuotientSpec()
    eta: dict[int, int] = {}
    theta: dict[int, int] = {}
    for tok in text.split("*"):
        mt = _FACTOR_RE.match(tok)
        if not mt:
            raise FormSpecError(f"cannot parse factor {tok!r}")
        kind, m_s, e_s = mt.groups()
        m = int(m_s) if m_s else 1
        e = int(e_s) if e_s else 1
        if m < 1:
            raise FormSpecError("scale must be positive")
        target = eta if kind == "eta" else theta
        target[m] = target.get(m, 0) + e
    if any(e < 0 for e in theta.values()):
        raise FormSpecError("theta factors need nonnegative exponents")
    return EtaQuotientSpec(
        tuple(sorted((m, e) for m, e in eta.items() if e)),
        tuple(sorted((m, e) for m, e in theta.items() if e)),
    )


@dataclass(frozen=True, eq=False)
class QExpansion:
    two_k: int
    N: int
    coeffs: np.ndarray  # a(0..M)
    M: int
    leading_q_power: Fraction = Fraction(0)
    spec: EtaQuotientSpec | None = None
    label: str = ""
    character: int = 1  # nebentypus d -> (character/d)
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> float:
        return self.two_k / 2.0

    @cached_property
    def support(self) -> np.ndarray:
        return np.nonzero(self.coeffs)[0]

    @cached_property
    def envelope(self) -> tuple[float, float]:
        """(C, p) with |a(n)| <= C n^p on the computed range."""
        k = self.k
        p = max((k - 1.0) / 2.0 + 0.25, k - 1.0, 0.0)
        n = self.support[self.support > 0]
        if n.size == 0:
            return (abs(float(self.coeffs[0])) if self.M >= 0 else 0.0, p)
        c = float(np.max(np.abs(self.coeffs[n].astype(float)) / n.astype(float) ** p))
        return (c, p)

    def scaled(self, ell: int) -> "QExpansion":
        """z -> f(ell z) with coefficients up to the same M."""
        a = np.zeros_like(self.coeffs)
        a[:: ell] = self.coeffs[: self.M // ell + 1]
        spec = self.spec.scaled(ell) if self.spec is not None else None
        return replace(self, coeffs=a, N=self.N * ell, spec=spec, label=f"{self.label}[{ell}z]",
                       leading_q_power=self.leading_q_power * ell, meta={})

    def __mul__(self, c: complex) -> "QExpansion":
        return replace(self, coeffs=self.coeffs * c, meta={})

    __rmul__ = __mul__


# ---------------------------------------------------------------- expansion


def _pentagonal(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse (index, value) of prod_{n>=1} (1 - x^n) up to x^M."""
    idx, val = [0], [1]
    j = 1
    while True:
        g1 = j * (3 * j - 1) // 2
        if g1 > M:
            break
        s = -1 if j % 2 else 1
        idx.append(g1)
        val.append(s)
        g2 = j * (3 * j + 1) // 2
        if g2 <= M:
            idx.append(g2)
            val.append(s)
        j += 1
    order = np.argsort(idx)
    return np.array(idx, dtype=np.int64)[order], np.array(val, dtype=np.int64)[order]


def _jacobi_cube(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse prod (1 - x^n)^3 = sum_j (-1)^j (2j+1) x^{j(j+1)/2}."""
    idx, val = [], []
    j = 0
    while j * (j + 1) // 2 <= M:
        idx.append(j * (j + 1) // 2)
        val.append((-1) ** j * (2 * j + 1))
        j += 1
    return np.array(idx, dtype=np.int64), np.array(val, dtype=np.int64)


def _theta_sparse(M: int) -> tuple[np.ndarray, np.ndarray]:
    r = int(math.isqrt(M))
    idx = np.arange(r + 1, dtype=np.int64) ** 2
    val = np.full(r + 1, 2, dtype=np.int64)
    val[0] = 1
    return idx, val


def _stretch(sparse: tuple[np.ndarray, np.ndarray], m: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    idx, val = sparse
    idx = idx * m
    keep = idx <= M
    return idx[keep], val[keep]


def _mul_sparse(dense: np.ndarray, sparse: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    idx, val = sparse
    M = dense.shape[0] - 1
    bound = np.max(np.abs(dense)) * int(np.sum(np.abs(val))) if dense.dtype != object else 0
    if dense.dtype != object and bound >= 2 ** 62:
        dense = dense.astype(object)
    out = np.zeros_like(dense)
    for i, v in zip(idx.tolist(), val.tolist()):
        if i > M:
            continue
        out[i:] += v * dense[: M + 1 - i]
    return out


def _mul_sparse_sparse(a: tuple[np.ndarray, np.ndarray], b: tuple[np.ndarray, np.ndarray], M: int
                       ) -> tuple[np.ndarray, np.ndarray]:
    if np.max(np.abs(a[1])) * np.sum(np.abs(b[1])) >= 2 ** 62:
        raise OverflowError("coefficient growth exceeds 64-bit range")
    idx = (a[0][:, None] + b[0][None, :]).ravel()
    val = (a[1][:, None] * b[1][None, :]).ravel()
    keep = idx <= M
    idx, val = idx[keep], val[keep]
    uniq, inv = np.unique(idx, return_inverse=True)
    out = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(out, inv, val)
    nz = out != 0
    return uniq[nz], out[nz]


def _inverse_series(sparse: tuple[np.ndarray, np.ndarray], M: int) -> np.ndarray:
    """Exact reciprocal of a sparse series with constant term 1 (Python integers)."""
    idx, val = sparse
    terms = [(int(i), int(v)) for i, v in zip(idx, val) if i > 0]
    inv = [0] * (M + 1)
    inv[0] = 1
    for n in range(1, M + 1):
        s = 0
        for i, v in terms:
            if i > n:
                break
            s -= v * inv[n - i]
        inv[n] = s
    return np.array(inv, dtype=object)


def expand_eta_quotient(spec: EtaQuotientSpec | str, M: int, N: int | None = None) -> QExpansion:
    """Coefficients a(0..M) of the product, exact integers."""
    if isinstance(spec, str):
        spec = parse_form_spec(spec)
    if M < 1:
        raise ValueError("M must be at least 1")
    lead = spec.leading_power()
    if lead.denominator != 1:
        raise FormSpecError(f"leading q-power {lead} is not integral for {spec}")
    shift = int(lead)
    if shift < 0:
        raise FormSpecError("negative leading q-power (not holomorphic at infinity)")
    L = M - shift
    series = np.zeros(M + 1, dtype=np.int64)
    if L >= 0:
        factors: list[tuple[np.ndarray, np.ndarray]] = []
        for m, e in spec.factors:
            if e > 0:
                q3, r = divmod(e, 3)
                factors += [_stretch(_jacobi_cube(L // m), m, L)] * q3
                factors += [_stretch(_pentagonal(L // m), m, L)] * r
        for m, e in spec.theta:
            factors += [_stretch(_theta_sparse(L // m), m, L)] * e
        current: tuple[np.ndarray, np.ndarray] | None = (np.array([0]), np.array([1], dtype=np.int64))
        dense = None
        for fac in factors:
            if current is not None and current[0].size * fac[0].size <= 20_000_000:
                current = _mul_sparse_sparse(current, fac, L)
                continue
            if dense is None:
                dense = np.zeros(L + 1, dtype=np.int64)
                dense[current[0]] = current[1]
                current = None
            dense = _mul_sparse(dense, fac)
        if dense is None:
            dense = np.zeros(L + 1, dtype=current[1].dtype)
            dense[current[0]] = current[1]
        for m, e in spec.factors:
            if e < 0:
                inv_base = _inverse_series(_pentagonal(L // m), L // m)
                inv = np.zeros(L + 1, dtype=object)
                inv[::m] = inv_base
                nz = np.nonzero(inv)[0]
                for _ in range(-e):
                    dense = _mul_sparse(dense.astype(object), (nz, inv[nz]))
        if dense.dtype == object:
            if max(abs(int(x)) for x in dense) < 2 ** 63:
                dense = dense.astype(np.int64)
            else:
                series = series.astype(object)
        series[shift:] = dense
    level = N if N is not None else spec.level()
    return QExpansion(spec.two_k, level, series, M, lead, spec, str(spec))


def theta_series(M: int) -> QExpansion:
    """Theta(z) = sum_{n in Z} q^{n^2}."""
    return expand_eta_quotient(EtaQuotientSpec((), ((1, 1),)), M)


def from_coefficients(coeffs, two_k: int, N: int, label: str = "") -> QExpansion:
    a = np.asarray(coeffs)
    return QExpansion(two_k, N, a, a.shape[0] - 1, Fraction(0), None, label)


def normalized_coeffs(f: QExpansion) -> np.ndarray:
    """A(n) = a(n) n^{-(k-1)/2}; entry 0 is set to 0."""
    n = np.arange(f.M + 1, dtype=float)
    out = np.zeros(f.M + 1, dtype=complex if np.iscomplexobj(f.coeffs) else float)
    a = f.coeffs[1:].astype(out.dtype)
    out[1:] = a * n[1:] ** (-(f.k - 1.0) / 2.0)
    return out


# ---------------------------------------------------------------- evaluation


def tail_bound(f: QExpansion, y: float, n_from: int | None = None) -> float:
    """Bound for sum_{n > n_from} |a(n)| e^{-2 pi n y} from the measured envelope (factor 2 slack)."""
    C, p = f.envelope
    n0 = (f.M if n_from is None else n_from) + 1
    r = math.exp(-2.0 * math.pi * y)
    ratio = ((n0 + 1) / n0) ** p * r
    if ratio >= 1.0:
        return math.inf
    log_first = p * math.log(n0) - 2.0 * math.pi * y * n0
    if log_first < -745:
        return 0.0
    return 2.0 * C * math.exp(log_first) / (1.0 - ratio)


def terms_needed(f: QExpansion, y: float, tol: float) -> int:
    """Smallest cutoff n0 <= M such that the tail past n0 is below tol."""
    if tail_bound(f, y) > tol:
        raise PrecisionError(f"q-expansion tail {tail_bound(f, y):.3e} exceeds {tol:.1e} at Im z = {y:.4g}")
    lo, hi = 0, f.M
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(f, y, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def evaluate(f: QExpansion, z, tol: float = 1e-13):
    """sum_{n<=M} a(n) e(nz) for scalar or array z, with the tail certified below tol."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if z_arr.size == 0:
        return z_arr
    y_min = float(np.min(z_arr.imag))
    if y_min <= 0:
        raise ValueError("evaluation needs Im z > 0")
    n_cut = terms_needed(f, y_min, tol)
    n = f.support[f.support <= n_cut]
    a = f.coeffs[n].astype(complex)
    out = np.zeros(z_arr.shape, dtype=complex)
    flat = z_arr.ravel()
    res = out.ravel()
    chunk = max(1, 4_000_000 // max(1, n.size))
    for s in range(0, flat.size, chunk):
        zz = flat[s : s + chunk]
        res[s : s + chunk] = np.exp(2j * np.pi * np.outer(zz, n)) @ a
    out = res.reshape(z_arr.shape)
    return complex(out[0]) if np.ndim(z) == 0 else out


def fricke_image(f: QExpansion, z, tol: float = 1e-13):
    """(W f)(z) = N^{k/2} (-i N z)^{-k} f(-1/(N z)) with principal powers."""
    z_arr = np.asarray(z, dtype=complex)
    N, k = f.N, f.k
    w = -1.0 / (N * z_arr)
    return N ** (k / 2.0) * np.exp(-k * np.log(-1j * N * z_arr)) * evaluate(f, w, tol)


@dataclass(frozen=True)
class FrickeEstimate:
    eps: complex
    residual: float
    points: tuple[complex, ...]


def fricke_eigenvalue(f: QExpansion, tol: float = 1e-13) -> FrickeEstimate:
    """Ratio (W f)(z)/f(z) sampled near the fixed point i/sqrt(N)."""
    s = 1.0 / math.sqrt(f.N)
    pts = tuple(complex(x * s, 1.1 * s) for x in (0.13, 0.29, -0.41, 0.57))
    ratios = [fricke_image(f, z, tol) / evaluate(f, z, tol) for z in pts]
    mean = complex(np.mean(ratios))
    resid = float(max(abs(r - mean) for r in ratios))
    return FrickeEstimate(mean, resid, pts)


def detect_character(f: QExpansion, candidates=None, tol: float = 1e-8) -> int | None:
    """Find D with f(gz) = (D/d) j(g,z)^{2k} f(z) on sample elements of Gamma_0(N)."""
    N = f.N
    if candidates is None:
        divs = [d for d in range(1, 4 * N + 1) if (4 * N) % d == 0]
        candidates = [s * d for d in divs for s in (1, -1)]
    samples = []
    for d in (1, 3, 5, 7, 11, 13):
        if math.gcd(d, N) != 1:
            continue
        c = N
        # a d - b c = 1
        b = -pow(c, -1, d) if d > 1 else 0
        a = (1 + b * c) // d if d > 1 else 1
        g = IntegerMatrix2x2(a, b, c, d)
        if g.det() != 1:
            continue
        z = complex(-d / c + 0.3 / c, 1.0 / c)
        lhs = evaluate(f, g.act(z), 1e-14)
        rhs = cocycle_j(g, z) ** f.two_k * evaluate(f, z, 1e-14)
        samples.append((d, lhs, rhs))
    for D in candidates:
        if all(abs(lhs - kronecker(D, d) * rhs) <= tol * max(1.0, abs(rhs)) for d, lhs, rhs in samples):
            return D
    return None


# ---------------------------------------------------------------- sup norm


def _reduce_sl2(tau: np.ndarray) -> np.ndarray:
    tau = tau.copy()
    for _ in range(200):
        tau = tau - np.round(tau.real)
        small = np.abs(tau) < 1.0 - 1e-15
        if not small.any():
            break
        tau[small] = -1.0 / tau[small]
    return tau


def _eta_invariant(tau: np.ndarray) -> np.ndarray:
    """Im(tau)^{1/4} |eta(tau)|, an SL_2(Z)-invariant function."""
    t = _reduce_sl2(tau)
    q = np.exp(2j * np.pi * t)
    idx, val = _pentagonal(60)
    prod = np.zeros_like(q)
    for i, v in zip(idx, val):
        prod += v * q ** int(i)
    return t.imag ** 0.25 * np.abs(np.exp(2j * np.pi * t / 24.0) * prod)


def invariant_height(f: QExpansion, z) -> np.ndarray:
    """|f(z)| (Im z)^{k/2} via the eta-quotient rewrite (needs f.spec)."""
    if f.spec is None:
        raise ValueError("invariant_height needs an eta/theta product spec")
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape)
    for m, e in f.spec.as_eta_quotient().items():
        out *= (m ** -0.25 * _eta_invariant(m * z)) ** e
    scale = float(np.max(np.abs(f.coeffs[f.support]))) if f.support.size else 0.0
    lead = f.coeffs[f.support[0]] if f.support.size else 0
    return out * abs(float(lead)) if scale else out * 0.0


@dataclass(frozen=True)
class SupNormEstimate:
    value: float
    argmax: complex
    grid_points: int
    grid_step: float


def sup_norm_details(f: QExpansion, n_x: int = 40, n_y: int = 48, refine: bool = True) -> SupNormEstimate:
    """Grid maximum of |f| y^{k/2} over the Gamma_0(N)-translates of the SL_2(Z) fundamental domain."""
    if f.support.size == 0:
        return SupNormEstimate(0.0, 1j, 0, 0.0)
    if f.spec is None:
        return _sup_norm_rectangle(f)
    reps = gamma0_coset_reps(f.N)
    xs = np.linspace(-0.5, 0.5, n_x)
    ys = np.geomspace(0.5, max(4.0, 2.0 * f.N * f.k), n_y)
    W = (xs[None, :] + 1j * ys[:, None]).ravel()
    best_val, best_z = -1.0, 1j
    for g in reps:
        z = (g.a * W + g.b) / (g.c * W + g.d)
        v = invariant_height(f, z)
        i = int(np.argmax(v))
        if v[i] > best_val:
            best_val, best_z = float(v[i]), complex(z[i])
    if refine:
        from scipy.optimize import minimize

        def neg(p):
            if p[1] <= 0:
                return 0.0
            return -float(invariant_height(f, np.array([p[0] + 1j * p[1]]))[0])

        res = minimize(neg, [best_z.real, best_z.imag], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        if -res.fun > best_val:
            best_val, best_z = float(-res.fun), complex(res.x[0], res.x[1])
    step = float(xs[1] - xs[0])
    return SupNormEstimate(best_val, best_z, len(reps) * W.size, step)


def _sup_norm_rectangle(f: QExpansion) -> SupNormEstimate:
    y_lo = 1.0 / f.N
    xs = np.linspace(0.0, 1.0, 400, endpoint=False)
    ys = np.geomspace(y_lo, 3.0, 60)
    Z = (xs[None, :] + 1j * ys[:, None]).ravel()
    v = np.abs(evaluate(f, Z, 1e-10)) * Z.imag ** (f.k / 2.0)
    i = int(np.argmax(v))
    return SupNormEstimate(float(v[i]), complex(Z[i]), Z.size, float(xs[1] - xs[0]))


def sup_norm_estimate(f: QExpansion) -> float:
    return sup_norm_details(f).value


# ---------------------------------------------------------------- cache


def _coeff_bytes(a: np.ndarray) -> bytes:
    if a.dtype == object:
        return ",".join(str(int(x)) for x in a).encode()
    return np.ascontiguousarray(a.astype("<i8")).tobytes()


def cache_digest(f: QExpansion) -> str:
    h = hashlib.sha256()
    h.update(f"{f.two_k}|{f.N}|{f.M}|{f.label}".encode())
    h.update(_coeff_bytes(f.coeffs))
    return h.hexdigest()


def write_cache(f: QExpansion, path: str) -> None:
    """CSV table (n, a(n)) behind a header line; written atomically."""
    header = f"# two_k={f.two_k} N={f.N} M={f.M} spec={f.label} sha256={cache_digest(f)}\n"
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".coeffs-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(header)
            fh.write("n,a\n")
            for n, a in enumerate(f.coeffs.tolist()):
                fh.write(f"{n},{int(a)}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class CacheIntegrityError(RuntimeError):
    pass


def read_cache(path: str) -> QExpansion:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise CacheIntegrityError("missing header")
        fields = dict(tok.split("=", 1) for tok in header[1:].split())
        fh.readline()
        vals = [int(line.split(",")[1]) for line in fh if line.strip()]
    big = any(abs(v) >= 2 ** 63 for v in vals)
    a = np.array(vals, dtype=object if big else np.int64)
    spec_text = fields["spec"]
    try:
        spec = parse_form_spec(spec_text)
        lead = spec.leading_power()
    except FormSpecError:
        spec, lead = None, Fraction(0)
    f = QExpansion(int(fields["two_k"]), int(fields["N"]), a, int(fields["M"]), lead, spec, spec_text)
    if cache_digest(f) != fields["sha256"]:
        raise CacheIntegrityError(f"hash mismatch in {path}")
    return f


def load_or_expand(spec_text: str, M: int, cache_dir: str | None = None) -> QExpansion:
    """Expansion with an optional on-disk cache keyed by (spec, M)."""
    if cache_dir is None:
        return expand_eta_quotient(spec_text, M)
    key = hashlib.sha256(f"{spec_text}|{M}".encode()).hexdigest()[:16]
    path = os.path.join(cache_dir, f"coeffs-{key}.csv")
    if os.path.exists(path):
        try:
            return read_cache(path)
        except (CacheIntegrityError, KeyError, ValueError):
            pass
    f = expand_eta_quotient(spec_text, M)
    os.makedirs(cache_dir, exist_ok=True)
    write_cache(f, path)
    return f
