"""Invariant suites run by `subconvex verify`.

Each check returns a CheckResult with the measured residual and the tolerance
it is held to; suites are lists of such checks and never raise on failure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import amplifier, geom, lfunc, selberg, shifted, special
from .arith import cocycle_j, random_gamma0
from .chars import enumerate_characters
from .qexp import expand_eta_quotient, evaluate, normalized_coeffs, theta_series


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tolerance

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _eta8(M: int = 1 << 16):
    return expand_eta_quotient("eta(8z)^3", M)


# ---------------------------------------------------------------- identities


def theta_multiplier_residual(samples: int = 50, seed: int = 1) -> float:
    """max |Theta(gamma z) - j(gamma, z) Theta(z)| over random gamma in Gamma_0(4), Im z >= 0.5."""
    th = theta_series(400_000)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        g = random_gamma0(4, rng, size=5)
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2.0))
        gz = (g.a * z + g.b) / (g.c * z + g.d)
        worst = max(worst, abs(evaluate(th, gz) - cocycle_j(g, z) * evaluate(th, z)))
    return worst


def parseval_residual(Q_list=(5, 7, 12, 36), trials: int = 100, seed: int = 2) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for Q in Q_list:
        n = len(enumerate_characters(Q))
        for _ in range(trials):
            F = rng.normal(size=n) + 1j * rng.normal(size=n)
            a, b = amplifier.parseval_check(Q, F)
            worst = max(worst, abs(a - b) / a)
    return worst


def congruence_split_residual() -> float:
    f = _eta8()
    H = amplifier.default_bump()
    worst = 0.0
    for (l1, l2, Q, X) in ((1, 1, 11, 500.0), (3, 5, 11, 800.0), (7, 3, 12, 600.0)):
        sp = amplifier.shifted_split_sums_bruteforce(f, H, X, l1, l2, Q)
        worst = max(worst, abs(sp.total - sp.congruence_total) / max(abs(sp.congruence_total), 1e-300))
        fast = amplifier.shifted_split_sums(f, H, X, l1, l2, Q)
        worst = max(worst, abs(fast.total - sp.total) / max(abs(sp.total), 1e-300))
    return worst


def identities() -> list[CheckResult]:
    return [
        CheckResult("identities", "theta multiplier", theta_multiplier_residual(), 1e-10),
        CheckResult("identities", "Parseval over characters", parseval_residual(trials=20), 1e-10),
        CheckResult("identities", "congruence split completeness", congruence_split_residual(), 1e-12),
    ]


# ---------------------------------------------------------------- L-values


def direct_series_residuals(f, Q_list=(1, 5, 7, 11), s: float = 3.0) -> tuple[float, float]:
    """(max relative split-point dependence, max relative gap to the Dirichlet series) over primitive chi."""
    A = normalized_coeffs(f)
    n = np.arange(A.size)
    n[0] = 1
    split = direct = 0.0
    for Q in Q_list:
        for chi in enumerate_characters(Q):
            if not chi.primitive:
                continue
            a = lfunc.completed_L_multiplicative(f, s, chi)
            b = lfunc.completed_L_multiplicative(f, s, chi, y0=2.0 * a.split_point)
            ref = lfunc.gamma_prefactor(f, s, Q) * np.sum(A * chi.values[n % Q] / n**s)
            split = max(split, abs(a.value - b.value) / abs(a.value))
            direct = max(direct, abs(a.value - ref) / abs(ref))
    return split, direct


def root_number_residual(f, n_additive: int = 20, n_multiplicative: int = 10) -> float:
    """max | |eps| - 1 | over additive twists u/Q and primitive chi with gcd(Q, N) = 1."""
    worst = 0.0
    count = 0
    for Q in (3, 5, 7, 11, 13):
        for u in range(1, Q):
            if count >= n_additive:
                break
            worst = max(worst, lfunc.additive_root_number(f, 0.5 + 0.3j, u, Q).root_number_residual)
            count += 1
    count = 0
    for Q in (5, 7, 11, 13):
        for chi in enumerate_characters(Q):
            if not chi.primitive or count >= n_multiplicative:
                continue
            worst = max(worst, lfunc.multiplicative_root_number(f, 0.6 + 0.2j, chi).root_number_residual)
            count += 1
    return worst


def lvalues() -> list[CheckResult]:
    f = expand_eta_quotient("eta(8z)^3", 200_000)
    split, direct = direct_series_residuals(f)
    return [
        CheckResult("lvalues", "split-point independence", split, 1e-9),
        CheckResult("lvalues", "Dirichlet series at s=3", direct, 1e-8),
        CheckResult("lvalues", "root number modulus", root_number_residual(f), 1e-6),
    ]


# ---------------------------------------------------------------- special functions


M_GRID_S = (2.0, 3.0, 2.0 + 2.0j)
M_GRID_T = (0.0, 1.0, 5.0)
M_GRID_DELTA = (0.1, 0.01)


def m_function_agreement() -> float:
    worst = 0.0
    for s in M_GRID_S:
        for t in M_GRID_T:
            for d in M_GRID_DELTA:
                p = special.MFunctionParams(s, t, d)
                q = special.m_function(p, "quadrature")
                for method in ("hypergeometric_far", "hypergeometric_near"):
                    worst = max(worst, abs(special.m_function(p, method) - q) / abs(q))
    return worst


def m_limit_errors(s: complex = 0.25, t: float = 1.0, deltas=(1e-2, 1e-3, 1e-4)) -> list[float]:
    lim = special.m_limit(s, t)
    return [abs(special.m_function(special.MFunctionParams(s, t, d), "hypergeometric_far") - lim) for d in deltas]


def m_residue_error(t: float = 1.0, delta: float = 1e-3) -> float:
    s0 = 0.5 + 1j * t
    probe = special.m_residue_probe(s0, t, delta)
    lead = special.m_residue_leading(t)
    return abs(probe - lead) / abs(lead)


def special_suite() -> list[CheckResult]:
    errs = m_limit_errors()
    mono = 0.0 if errs[0] > errs[1] > errs[2] else 1.0
    barnes = shifted.barnes_grid_check((1.5, 2.5 + 1j, 4.0), (0.3, 1.0, 4.0))
    shift = max(abs(special.barnes_beta_integral(2.5, 0.7, c) - special.barnes_beta_integral(2.5, 0.7, 1.25))
                for c in (0.5, 2.0))
    return [
        CheckResult("special", "M-function three-route agreement", m_function_agreement(), 1e-6),
        CheckResult("special", "M-function delta->0 monotone", mono, 0.0),
        CheckResult("special", "M-function residue leading term", m_residue_error(), 1e-3),
        CheckResult("special", "Barnes integral closed form", barnes, 1e-8),
        CheckResult("special", "Barnes abscissa independence", shift, 1e-9),
    ]


# ---------------------------------------------------------------- geometry


def poisson_grid_residual(ks=(0.5, 1.5, 2.5), hs=(0, 1, 2, 5, 10), rhos=(0.0, 0.2, 0.5, 0.8, 0.95)) -> float:
    worst = 0.0
    for k in ks:
        for h in hs:
            for r in rhos:
                q, c = geom.poisson_power_integral(k, h, r)
                worst = max(worst, abs(q - c))
    return worst


def b_rho_residual(rhos=(0.2, 0.4, 0.6)) -> float:
    f = expand_eta_quotient("eta(8z)^3", 4000)
    frame = geom.DiscCenterFrame(1j)
    pb = geom.DiscPullback(f, frame)
    worst = 0.0
    for r in rhos:
        s = geom.B_rho(f, f, frame, r, pullbacks=(pb, pb))
        d = geom.B_rho_direct(f, f, frame, r)
        worst = max(worst, abs(s - d))
    return worst


def geometry() -> list[CheckResult]:
    hyp = geom.hyp_bound_property(1.5, np.arange(501), np.linspace(0.0, 0.999, 24))
    return [
        CheckResult("geometry", "theta integral closed form", poisson_grid_residual(), 1e-8),
        CheckResult("geometry", "B(rho) series vs quadrature", b_rho_residual(), 1e-6),
        CheckResult("geometry", "hypergeometric bound minus 2^k", max(0.0, hyp - 2**1.5), 0.0),
    ]


# ---------------------------------------------------------------- Selberg transform


def selberg_suite(T_grid=(2.0, 5.0, 10.0)) -> list[CheckResult]:
    g = max(selberg.g_side_check(T) for T in T_grid)
    reps = [selberg.localizer_roundtrips(T) for T in T_grid]
    return [
        CheckResult("selberg", "localizer g closed form", g, 1e-9),
        CheckResult("selberg", "h -> k -> h roundtrip", max(r.h_k_h for r in reps), 1e-6),
        CheckResult("selberg", "k -> h -> k roundtrip", max(r.k_h_k for r in reps), 1e-6),
        CheckResult("selberg", "three-step vs single-step", max(r.routes for r in reps), 1e-6),
    ]


# ---------------------------------------------------------------- shifted series


def shifted_suite() -> list[CheckResult]:
    f = expand_eta_quotient("eta(8z)^3", 4000)
    rho = max(abs(shifted.eisenstein_rho_truncated(w, N, 2.0, m, 2000).value - shifted.eisenstein_rho(w, N, 2.0, m))
              for (w, N, m) in ((1, 4, 1), (2, 92, 3), (23, 92, -46), (4, 92, 12)))
    a = shifted.Z_Q_bruteforce(f, 2.5, 2.5, 11, 3, 5, 1500).value
    b = shifted.Z_Q_oldform(f, 2.5, 2.5, 11, 3, 5, 1500).value * 15**0.25
    toy = toy_triple_mellin().discrepancy
    return [
        CheckResult("shifted", "Eisenstein rho closed form", rho, 1e-10),
        CheckResult("shifted", "Z_Q oldform relation", abs(a - b) / abs(a), 1e-10),
        CheckResult("shifted", "triple-Mellin toy collapse", toy, 1e-6),
    ]


def toy_triple_mellin(height: float = 40.0):
    from .qexp import from_coefficients

    coeffs = np.zeros(121)
    coeffs[1:] = np.cos(np.arange(1, 121))
    toy = from_coefficients(coeffs, 3, 4, "toy")
    return shifted.triple_mellin_inner_check(toy, 2.5, 2.5, 3, m_max=120, height=height)


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "identities": identities,
    "lvalues": lvalues,
    "special": special_suite,
    "geometry": geometry,
    "selberg": selberg_suite,
    "shifted": shifted_suite,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        out = []
        for key in SUITES:
            out.extend(SUITES[key]())
        return out
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
