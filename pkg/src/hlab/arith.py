"""Small integer-arithmetic helpers used across modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from sympy import factorint, isprime, primerange


def primes_up_to(n: int) -> list[int]:
    return list(primerange(2, n + 1))


def is_prime(n: int) -> bool:
    return bool(isprime(n))


@lru_cache(maxsize=None)
def factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factor(abs(n))] if n not in (0, 1, -1) else []


def smallest_prime_factor_table(n: int) -> np.ndarray:
    """spf[k] for 0 <= k <= n (spf[0] = spf[1] = 0)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if spf[p] == 0:
            spf[p::p][spf[p::p] == 0] = p
    return spf


def divisor_counts(n: int) -> np.ndarray:
    """d(k) for 0 <= k <= n, with d(0) = 0."""
    d = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        d[k::k] += 1
    return d


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a | n)."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a | n), n odd positive
    a %= n
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


def is_fundamental_discriminant(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factor(abs(n))) if abs(n) > 1 else True


def legendre_table(p: int) -> np.ndarray:
    """sq[v] = number of u in F_p with u^2 = v."""
    sq = np.zeros(p, dtype=np.int64)
    np.add.at(sq, (np.arange(p, dtype=np.int64) ** 2) % p, 1)
    return sq


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def index_gamma0(n: int) -> int:
    """[PSL2(Z) : Gamma0(n)] = n * prod_{p | n} (1 + 1/p)."""
    idx = n
    for p in prime_divisors(n):
        idx = idx // p * (p + 1)
    return idx


def divisor_bound_sum(alpha: float, start: int) -> float:
    """Upper bound for sum_{n > start} d(n)^2 n^(-alpha), alpha > 1.

    Uses d(n)^2 <= d_4(n) and sum_{n<=x} d_4(n) <= x (1 + log x)^3, then
    partial summation.
    """
    if alpha <= 1:
        return math.inf
    beta = alpha - 1.0
    L = math.log(max(start, 1))
    # alpha * int_L^inf (1+u)^3 e^{-beta u} du
    acc = 0.0
    fact = 1.0
    for k in range(4):
        acc += fact * (1 + L) ** (3 - k) / beta ** (k + 1)
        fact *= 3 - k
    return alpha * math.exp(-beta * L) * acc
