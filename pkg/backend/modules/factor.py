"""
Exact factorization of integers up to 10^18: trial division by the primes
below 10^5, then Brent's variant of Pollard rho with deterministic seeds
"""

from dataclasses import dataclass
from math import gcd, isqrt
from typing import Dict, Iterator, Tuple
import logging

from modules.errors import RangeError
from modules.modmath import is_prime, small_primes

logger = logging.getLogger(__name__)

FACTOR_CEILING = 10 ** 18
TRIAL_DIVISION_LIMIT = 10 ** 5


@dataclass(frozen=True)
class Factorization:
    """value together with its (prime, exponent) pairs, primes increasing"""

    value: int
    factors: Tuple[Tuple[int, int], ...] = ()

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(q for q, _ in self.factors)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.factors)

    def divisors(self) -> Iterator[int]:
        """All positive divisors, unordered"""
        divs = [1]
        for q, e in self.factors:
            divs = [d * q ** i for d in divs for i in range(e + 1)]
        return iter(divs)

    def to_dict(self) -> dict:
        return {'value': self.value, 'factors': [[q, e] for q, e in self.factors]}

    @classmethod
    def from_dict(cls, data: dict) -> 'Factorization':
        return cls(int(data['value']), tuple((int(q), int(e)) for q, e in data['factors']))

    def _render(self, sep: str) -> str:
        if not self.factors:
            return '1'
        return sep.join(str(q) if e == 1 else f"{q}^{e}" for q, e in self.factors)

    def to_latex(self) -> str:
        """Rendering used in the survivor table, e.g. 2\\cdot 5^2"""
        return self._render('\\cdot ')

    def __str__(self) -> str:
        return self._render('·')


def _from_counts(value: int, counts: Dict[int, int]) -> Factorization:
    return Factorization(value, tuple(sorted(counts.items())))


def pollard_brent(n: int, c: int) -> int:
    """
    One Brent cycle-finding pass with polynomial x^2 + c from seed 2

    Returns a divisor of n in (1, n]; n itself signals failure for this c.
    """
    if n % 2 == 0:
        return 2
    y, r, q, g = 2, 1, 1, 1
    m = 128
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = gcd(q, n)
            k += m
        r *= 2
    if g == n:
        # batched product hit 0 mod n; walk back one step at a time
        while True:
            ys = (ys * ys + c) % n
            g = gcd(abs(x - ys), n)
            if g > 1:
                break
    return g


def _split(n: int, counts: Dict[int, int]) -> None:
    """Add the prime factors of n (no factor below the trial limit) to counts"""
    if n == 1:
        return
    if is_prime(n):
        counts[n] = counts.get(n, 0) + 1
        return
    root = isqrt(n)
    if root * root == n:
        _split(root, counts)
        _split(root, counts)
        return
    c = 1
    while True:
        d = pollard_brent(n, c)
        if d != n:
            break
        c += 1
    logger.debug(f"rho split {n} = {d} * {n // d} (c={c})")
    _split(d, counts)
    _split(n // d, counts)


def factorize(m: int) -> Factorization:
    """
    Complete factorization of 1 <= m <= 10^18

    Args:
        m: positive integer

    Returns:
        Factorization of m (empty factor list for m = 1)
    """
    if m < 1 or m > FACTOR_CEILING:
        raise RangeError(f"cannot factor {m}: outside [1, 10^18]")
    value = m
    counts: Dict[int, int] = {}
    for q in small_primes(TRIAL_DIVISION_LIMIT):
        if q * q > m:
            break
        if m % q == 0:
            e = 0
            while m % q == 0:
                m //= q
                e += 1
            counts[q] = e
    if m > 1:
        if m < TRIAL_DIVISION_LIMIT ** 2:
            counts[m] = counts.get(m, 0) + 1
        else:
            _split(m, counts)
    return _from_counts(value, counts)


def valuation(fact: Factorization, q: int) -> int:
    """Exponent of q in fact (0 if absent)"""
    for r, e in fact.factors:
        if r == q:
            return e
    return 0


def merge(f1: Factorization, f2: Factorization) -> Factorization:
    """Factorization of f1.value * f2.value"""
    value = f1.value * f2.value
    if value > FACTOR_CEILING:
        raise RangeError(f"product {value} exceeds 10^18")
    counts = f1.as_dict()
    for q, e in f2.factors:
        counts[q] = counts.get(q, 0) + e
    return _from_counts(value, counts)


def mobius(k: int) -> int:
    """Moebius function of k >= 1"""
    fact = factorize(k)
    if any(e > 1 for _, e in fact.factors):
        return 0
    return -1 if len(fact.factors) % 2 else 1

