"""
Modular arithmetic kernel for moduli below 2^63: products, powers, inverses,
the quadratic character, deterministic primality and multiplicative orders
"""

from enum import IntEnum
from functools import lru_cache
from typing import TYPE_CHECKING, Tuple
import logging

import numpy as np

from modules.errors import NotInvertibleError, OrderUndefinedError

if TYPE_CHECKING:
    from modules.factor import Factorization

logger = logging.getLogger(__name__)

TRIAL_DIVISION_CUTOFF = 10 ** 4

# Bases proven sufficient for every n < 2^64 (Jim Sinclair's set)
MILLER_RABIN_BASES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)


class QuadChar(IntEnum):
    """Value of the quadratic character"""
    NON_RESIDUE = -1
    ZERO = 0
    RESIDUE = 1


@lru_cache(maxsize=8)
def small_primes(limit: int) -> Tuple[int, ...]:
    """
    All primes below `limit`, by a numpy sieve of Eratosthenes

    Args:
        limit: exclusive upper bound

    Returns:
        Tuple of primes in increasing order
    """
    if limit <= 2:
        return ()
    sieve = np.ones(limit, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(limit ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = False
    return tuple(int(x) for x in np.flatnonzero(sieve))


def mul_mod(a: int, b: int, m: int) -> int:
    """(a*b) mod m; Python integers keep the 126-bit product exact"""
    return (a * b) % m


def pow_mod(a: int, e: int, m: int) -> int:
    """a^e mod m by square-and-multiply; pow_mod(a, 0, m) is 1 mod m"""
    if e < 0:
        raise ValueError(f"negative exponent {e}")
    result = 1 % m
    base = a % m
    while e:
        if e & 1:
            result = result * base % m
        base = base * base % m
        e >>= 1
    return result


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b)"""
    x0, x1, y0, y1 = 0, 1, 1, 0
    while a != 0:
        q, b, a = b // a, a, b % a
        y0, y1 = y1, y0 - q * y1
        x0, x1 = x1, x0 - q * x1
    return b, x0, y0


def inv_mod(a: int, m: int) -> int:
    """
    Inverse of a modulo m via the extended Euclidean algorithm

    Raises:
        NotInvertibleError: if gcd(a, m) != 1
    """
    a %= m
    g, x, _ = xgcd(a, m)
    if g != 1:
        raise NotInvertibleError(f"{a} has no inverse modulo {m}")
    return x % m


def legendre(a: int, p: int) -> QuadChar:
    """Quadratic character of a modulo the odd prime p (Euler's criterion)"""
    a %= p
    if a == 0:
        return QuadChar.ZERO
    ls = pow_mod(a, (p - 1) // 2, p)
    return QuadChar.RESIDUE if ls == 1 else QuadChar.NON_RESIDUE


def _check_composite(n: int, s: int, d: int, a: int) -> bool:
    """True if a witnesses compositeness of n, where n - 1 = d * 2^s with d odd"""
    a %= n
    if a == 0:
        return False
    x = pow_mod(a, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(1, s):
        x = x * x % n
        if x == n - 1:
            return False
        if x == 1:
            return True
    return True


def is_prime(m: int) -> bool:
    """
    Deterministic primality for 0 <= m < 2^64

    Exact trial division below 10^4, Miller-Rabin with a base set proven
    complete for 64-bit inputs above it.
    """
    if m < 2:
        return False
    if m < TRIAL_DIVISION_CUTOFF:
        for q in small_primes(100):
            if q * q > m:
                return True
            if m % q == 0:
                return False
        return True
    for q in small_primes(100):
        if m % q == 0:
            return False
    d, s = m - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    return not any(_check_composite(m, s, d, a) for a in MILLER_RABIN_BASES)


def mult_order(q: int, p: int, fact_p_minus_1: 'Factorization') -> int:
    """
    Multiplicative order of q modulo the prime p

    Starts from p-1 and strips each prime r of p-1 while q^(e/r) stays 1.

    Args:
        q: element, coprime to p
        p: prime modulus
        fact_p_minus_1: exact factorization of p-1

    Returns:
        Least e > 0 with q^e = 1 mod p
    """
    if q % p == 0:
        raise OrderUndefinedError(f"order of {q} modulo {p} is undefined")
    e = p - 1
    for r in fact_p_minus_1.primes:
        while e % r == 0 and pow_mod(q, e // r, p) == 1:
            e //= r
    return e


def primitive_root(p: int, fact_p_minus_1: 'Factorization') -> int:
    """Smallest g >= 2 of order p-1 (1 for p = 2)"""
    if p == 2:
        return 1
    for g in range(2, p):
        if all(pow_mod(g, (p - 1) // r, p) != 1 for r in fact_p_minus_1.primes):
            return g
    raise ValueError(f"{p} has no primitive root; is it prime?")
