"""Integer and elementary multiplicative helpers.

Kronecker symbol (Shimura-compatible extension), the theta multiplier
ingredients eps_d and j(gamma, z), restricted Ramanujan sums and the
index-based volume of Gamma_0(N).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class IntegerMatrix2x2:
    a: int
    b: int
    c: int
    d: int

    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def in_gamma0(self, N: int) -> bool:
        return self.det() == 1 and self.c % N == 0

    def act(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def __matmul__(self, other: "IntegerMatrix2x2") -> "IntegerMatrix2x2":
        return IntegerMatrix2x2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "IntegerMatrix2x2":
        return IntegerMatrix2x2(self.d, -self.b, -self.c, self.a)


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization of |n| (n != 0)."""
    n = abs(n)
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(n: int) -> int:
    r = n
    for p in factorize(n):
        r -= r // p
    return r


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def primes_in(lo: float, hi: float) -> list[int]:
    """Primes p with lo <= p <= hi, by sieve."""
    hi_i = int(math.floor(hi))
    if hi_i < 2:
        return []
    sieve = np.ones(hi_i + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(hi_i ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0] if p >= lo]


def _jacobi(a: int, n: int) -> int:
    # n odd positive
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(c: int, d: int) -> int:
    """Kronecker symbol (c/d) for arbitrary integers.

    Conventions: (c/0) = 1 iff c = +-1; (c/-1) = -1 iff c < 0;
    (c/2) = 0 for even c, else +1 when c = +-1 (mod 8) and -1 otherwise.
    With these, (c/d) for d < 0 equals (c/|d|) times -1 exactly when c < 0,
    which is the sign rule the theta multiplier needs.
    """
    c, d = int(c), int(d)
    if d == 0:
        return 1 if abs(c) == 1 else 0
    sign = 1
    if d < 0:
        d = -d
        if c < 0:
            sign = -1
    v = 0
    while d % 2 == 0:
        d //= 2
        v += 1
    if v:
        if c % 2 == 0:
            return 0
        if v % 2 == 1 and c % 8 in (3, 5):
            sign = -sign
    if d == 1:
        return sign
    return sign * _jacobi(c, d)


def eps_d(d: int) -> complex:
    if d % 2 == 0:
        raise ValueError(f"eps_d needs odd d, got {d}")
    return 1.0 + 0j if d % 4 == 1 else 1j


def cocycle_j(gamma: IntegerMatrix2x2, z: complex) -> complex:
    """eps_d^{-1} (c/d) (cz+d)^{1/2} with the principal square root."""
    if gamma.d % 2 == 0 or gamma.c % 4 != 0:
        raise ValueError("cocycle_j needs gamma in Gamma_0(4) with odd d")
    return kronecker(gamma.c, gamma.d) * cmath.sqrt(gamma.c * z + gamma.d) / eps_d(gamma.d)


def ramanujan_restricted(c: int, w: int, m: int) -> int:
    """sum_{d mod cw, (d,cw)=1} e(-m d / (cw)), by direct summation."""
    q = c * w
    if q == 1:
        return 1
    d = np.arange(q)
    d = d[np.gcd(d, q) == 1]
    phase = (-(m % q) * d) % q
    total = np.cos(2.0 * np.pi * phase / q).sum()
    return int(round(total))


@lru_cache(maxsize=None)
def ramanujan_closed_form(q: int, m: int) -> int:
    """sum_{e | (q, m)} mu(q/e) e."""
    g = math.gcd(q, m) if m else q
    return sum(mobius(q // e) * e for e in range(1, g + 1) if g % e == 0 and q % e == 0)


def volume(N: int) -> float:
    """Hyperbolic area of Gamma_0(N) backslash H."""
    if N < 1:
        raise ValueError("N must be positive")
    prod = 1.0
    for p in factorize(N):
        prod *= 1.0 + 1.0 / p
    return math.pi / 3.0 * N * prod


def gamma0_index(N: int) -> int:
    idx = N
    for p in factorize(N):
        idx = idx // p * (p + 1)
    return idx


def gamma0_coset_reps(N: int) -> list[IntegerMatrix2x2]:
    """Right coset representatives of Gamma_0(N) in SL_2(Z), one per point of P^1(Z/N)."""
    units = [u for u in range(1, N + 1) if math.gcd(u, N) == 1] if N > 1 else [1]
    stabilizers = {g: [u for u in units if (u - 1) % (N // g) == 0] for g in range(1, N + 1) if N % g == 0}
    seen: set[tuple[int, int]] = set()
    reps: list[IntegerMatrix2x2] = []
    for c in range(N):
        for d in range(N):
            if math.gcd(math.gcd(c, d), N) != 1:
                continue
            key = _p1_key(c, d, N, units, stabilizers)
            if key in seen:
                continue
            seen.add(key)
            reps.append(_lift_to_sl2(c, d, N))
    return reps


def _p1_key(c: int, d: int, N: int, units: list[int], stabilizers: dict[int, list[int]]) -> tuple[int, int]:
    # scale so the first entry becomes g = gcd(c, N); the remaining freedom
    # is multiplication by units congruent to 1 mod N/g
    if N == 1:
        return (0, 0)
    g = math.gcd(c, N)
    u0 = next(u for u in units if (u * c) % N == g % N)
    d1 = (u0 * d) % N
    return (g % N, min((u * d1) % N for u in stabilizers[g]))


def _lift_to_sl2(c: int, d: int, N: int) -> IntegerMatrix2x2:
    # find integers c' = c, d' = d (mod N) with gcd(c', d') = 1, then complete
    if N == 1:
        return IntegerMatrix2x2(1, 0, 0, 1)
    c0 = c if c else N
    dd = d
    while math.gcd(c0, dd) != 1:
        dd += N
    g, x, y = _egcd(c0, dd)
    # x c0 + y dd = 1 -> matrix [[y, -x], [c0, dd]] has det y*dd + x*c0 = 1
    return IntegerMatrix2x2(y, -x, c0, dd)


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0)
    g, x, y = _egcd(b, a % b)
    return (g, y, x - (a // b) * y)


def random_gamma0(N: int, rng: np.random.Generator, size: int = 20) -> IntegerMatrix2x2:
    """A random element of Gamma_0(N) with entries of moderate size."""
    while True:
        c = N * int(rng.integers(-size, size + 1))
        d = int(rng.integers(-size * N, size * N + 1))
        if d == 0 or math.gcd(c, d) != 1:
            continue
        g, x, y = _egcd(c, d)
        # x c + y d = g = +-1
        if g < 0:
            x, y = -x, -y
        a, b = y, -x
        shift = int(rng.integers(-3, 4))
        a, b = a + shift * c, b + shift * d
        m = IntegerMatrix2x2(a, b, c, d)
        if m.det() == 1:
            return m
