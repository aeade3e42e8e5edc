"""Dirichlet characters as value tables, Gauss sums and Kronecker characters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np

from .arith import factorize, kronecker


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    modulus: int
    values: np.ndarray  # values[n % Q], zero off the unit group
    conductor: int
    primitive: bool
    index: int = 0
    exponents: tuple[int, ...] = field(default=())

    def __call__(self, n: int) -> complex:
        return complex(self.values[n % self.modulus])

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, np.conj(self.values), self.conductor, self.primitive, -1)

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("moduli differ")
        vals = self.values * other.values
        cond, prim = _conductor(vals, self.modulus)
        return DirichletCharacter(self.modulus, vals, cond, prim, -1)

    def is_principal(self) -> bool:
        units = np.abs(self.values) > 0.5
        return bool(np.allclose(self.values[units], 1.0))

    def is_real(self) -> bool:
        return bool(np.allclose(self.values.imag, 0.0))

    def parity(self) -> int:
        return 1 if abs(self(-1) - 1) < 1e-9 else -1


def _primitive_root(p: int) -> int:
    phi = p - 1
    fac = list(factorize(phi)) if phi > 1 else []
    for g in range(2, p + 1):
        if all(pow(g, phi // q, p) != 1 for q in fac):
            return g
    return 1


def _group_generators(Q: int) -> list[tuple[int, int]]:
    """Generators of (Z/Q)^* with their orders, one cyclic factor each."""
    gens: list[tuple[int, int]] = []
    for p, e in sorted(factorize(Q).items()):
        pe = p ** e
        rest = Q // pe
        if p == 2:
            if e == 1:
                continue
            factors = [(pe - 1, 2)]  # -1
            if e >= 3:
                factors.append((5, 2 ** (e - 2)))
        else:
            g = _primitive_root(p)
            # a primitive root mod p^2 is one mod every p^e
            if e > 1 and pow(g, p - 1, p * p) == 1:
                g += p
            factors = [(g, (p - 1) * p ** (e - 1))]
        for g_local, order in factors:
            # lift via CRT: x = g_local mod p^e, x = 1 mod rest
            x = g_local
            if rest > 1:
                x = (g_local * rest * pow(rest, -1, pe) + pe * pow(pe, -1, rest)) % Q
            gens.append((x, order))
    return gens


@lru_cache(maxsize=64)
def _discrete_logs(Q: int) -> tuple[list[tuple[int, int]], np.ndarray]:
    """For each unit n mod Q, the exponent vector w.r.t. the generators."""
    gens = _group_generators(Q)
    logs = np.full((Q, len(gens)), -1, dtype=np.int64)
    orders = [o for _, o in gens]
    for exps in product(*[range(o) for o in orders]):
        n = 1
        for (g, _), e in zip(gens, exps):
            n = n * pow(g, e, Q) % Q
        logs[n % Q] = exps
    return gens, logs


def _conductor(values: np.ndarray, Q: int) -> tuple[int, bool]:
    units = np.array([math.gcd(n, Q) == 1 for n in range(Q)])
    for d in sorted(d for d in range(1, Q + 1) if Q % d == 0):
        idx = np.arange(1, Q, d) if d < Q else np.array([1])
        idx = idx[units[idx % Q]] if Q > 1 else idx
        if np.allclose(values[idx % Q], 1.0, atol=1e-9):
            return d, d == Q
    return Q, True


def enumerate_characters(Q: int) -> list[DirichletCharacter]:
    """All phi(Q) characters mod Q; index 0 is principal, order is lexicographic in exponents."""
    if Q == 1:
        return [DirichletCharacter(1, np.array([1.0 + 0j]), 1, True, 0, ())]
    gens, logs = _discrete_logs(Q)
    orders = [o for _, o in gens]
    unit = logs[:, 0] >= 0 if gens else np.array([math.gcd(n, Q) == 1 for n in range(Q)])
    out: list[DirichletCharacter] = []
    for idx, exps in enumerate(product(*[range(o) for o in orders])):
        phase = np.zeros(Q)
        for j, (e, o) in enumerate(zip(exps, orders)):
            phase += e * logs[:, j] / o
        vals = np.where(unit, np.exp(2j * np.pi * phase), 0.0)
        cond, prim = _conductor(vals, Q)
        out.append(DirichletCharacter(Q, vals, cond, prim, idx, tuple(exps)))
    return out


def conductor_and_primitivity(chi: DirichletCharacter) -> tuple[int, bool]:
    return _conductor(chi.values, chi.modulus)


def character_from_function(Q: int, fn: Callable[[int], complex]) -> DirichletCharacter:
    vals = np.array([fn(n) if math.gcd(n, Q) == 1 else 0.0 for n in range(Q)], dtype=complex)
    cond, prim = _conductor(vals, Q)
    return DirichletCharacter(Q, vals, cond, prim, -1)


def jacobi_character(Q: int) -> DirichletCharacter:
    """n -> (n/Q) as a character mod Q (Q odd)."""
    return character_from_function(Q, lambda n: kronecker(n, Q))


def gauss_sum(n: int, psi: DirichletCharacter) -> complex:
    """sum_{u mod Q} psi(u) e(n u / Q), by direct summation."""
    Q = psi.modulus
    u = np.arange(Q)
    phase = (n % Q) * u % Q
    return complex(np.sum(psi.values * np.exp(2j * np.pi * phase / Q)))


def gauss_sum_table(psi: DirichletCharacter) -> np.ndarray:
    """g(r, psi) for r = 0..Q-1, by direct summation over residues."""
    Q = psi.modulus
    u = np.arange(Q)
    phase = np.outer(u, u) % Q
    return np.exp(2j * np.pi * phase / Q) @ psi.values


def nebentypus_ell(ell: int) -> Callable[[int], int]:
    """d -> (ell/d)."""
    if ell < 1:
        raise ValueError("ell must be positive")
    return lambda d: kronecker(ell, d)
