"""
Necessary conditions for a set A in F_p with A - A hitting every quadratic
residue exactly once, each as a standalone test producing a checkable witness
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
from math import gcd, lcm
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union
import logging

from modules.errors import ConfigError, CyclotomicPreconditionError, NotPrimeError, RangeError
from modules.factor import Factorization, factorize, merge, mobius, valuation
from modules.modmath import QuadChar, inv_mod, is_prime, legendre, mult_order, pow_mod

logger = logging.getLogger(__name__)

P_CEILING = 10 ** 18
# A_5 and A_13 exist; the gcd bound only holds above this
KNOWN_SOLUTION_CEILING = 13


class TestId(str, Enum):
    __test__ = False

    PARITY = 'PARITY'
    PRIMALITY = 'PRIMALITY'
    DIVISOR_MOD8 = 'DIVISOR_MOD8'
    ORDER_PARITY = 'ORDER_PARITY'
    GCD = 'GCD'
    CYCLOTOMIC = 'CYCLOTOMIC'
    HASSE = 'HASSE'
    LCM_CONJECTURAL = 'LCM_CONJECTURAL'


PIPELINE_ORDER = tuple(TestId)
DEFAULT_PIPELINE = (TestId.PARITY, TestId.PRIMALITY, TestId.DIVISOR_MOD8,
                    TestId.ORDER_PARITY, TestId.GCD, TestId.CYCLOTOMIC)
DIAGNOSTIC_TESTS = (TestId.HASSE, TestId.LCM_CONJECTURAL)

TEST_ALIASES = {
    'primality': TestId.PRIMALITY,
    'prime': TestId.PRIMALITY,
    'parity': TestId.PARITY,
    'div': TestId.DIVISOR_MOD8,
    'divisor': TestId.DIVISOR_MOD8,
    'divisor_mod8': TestId.DIVISOR_MOD8,
    'order': TestId.ORDER_PARITY,
    'order_parity': TestId.ORDER_PARITY,
    'gcd': TestId.GCD,
    'cyclotomic': TestId.CYCLOTOMIC,
    'cyclo': TestId.CYCLOTOMIC,
    'hasse': TestId.HASSE,
    'lcm': TestId.LCM_CONJECTURAL,
    'lcm_conjectural': TestId.LCM_CONJECTURAL,
}


def parse_test_ids(tests: Union[str, Iterable[Union[str, TestId]]]) -> Tuple[TestId, ...]:
    """
    Parse test names (comma-separated string or iterable) into pipeline order

    Raises:
        ConfigError: on an unknown test name
    """
    if isinstance(tests, str):
        tests = [t for t in (part.strip() for part in tests.split(',')) if t]
    chosen = set()
    for name in tests:
        if isinstance(name, TestId):
            chosen.add(name)
            continue
        key = name.strip().lower()
        if key in TEST_ALIASES:
            chosen.add(TEST_ALIASES[key])
        elif key.upper() in TestId.__members__:
            chosen.add(TestId[key.upper()])
        else:
            raise ConfigError(f"unknown test '{name}'; known: {', '.join(sorted(TEST_ALIASES))}")
    return tuple(t for t in PIPELINE_ORDER if t in chosen)


@dataclass(frozen=True)
class Candidate:
    """One sieve item: n, p = 2n(n-1)+1 prime, and the factorizations it needs"""

    n: int
    p: int
    fact_n: Factorization
    fact_n_minus_1: Factorization
    fact_p_minus_1: Factorization

    @property
    def quarter_primes(self) -> Tuple[int, ...]:
        """Primes dividing (p-1)/4"""
        primes = []
        for q, e in self.fact_p_minus_1.factors:
            if q != 2 or e >= 3:
                primes.append(q)
        return tuple(primes)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'p': self.p,
            'fact_n': str(self.fact_n),
            'fact_n_minus_1': str(self.fact_n_minus_1),
            'fact_p_minus_1': str(self.fact_p_minus_1),
        }


@dataclass(frozen=True)
class GpInfo:
    g_p: int
    delta: Optional[int] = None
    quotient: Optional[int] = None
    # True for p = 5, where (p-1)/4 has no prime divisor and g_p = p-1 by convention
    conventional: bool = False

    def to_dict(self) -> dict:
        return {'g_p': self.g_p, 'delta': self.delta, 'quotient': self.quotient,
                'conventional': self.conventional}

    @classmethod
    def from_dict(cls, data: dict) -> 'GpInfo':
        return cls(data['g_p'], data.get('delta'), data.get('quotient'), data.get('conventional', False))


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False

    test_id: TestId
    passed: bool
    witness: Optional[Dict] = None
    skipped: bool = False

    @property
    def status(self) -> str:
        if self.skipped:
            return 'SKIPPED'
        return 'PASS' if self.passed else 'FAIL'

    def to_dict(self) -> dict:
        return {'test_id': self.test_id.value, 'status': self.status,
                'passed': self.passed, 'witness': self.witness}

    @classmethod
    def from_dict(cls, data: dict) -> 'TestVerdict':
        return cls(TestId(data['test_id']), data['passed'], data.get('witness'),
                   data.get('status') == 'SKIPPED')


def _ok(test_id: TestId, witness: Optional[Dict] = None) -> TestVerdict:
    return TestVerdict(test_id, True, witness)


def _fail(test_id: TestId, witness: Dict) -> TestVerdict:
    return TestVerdict(test_id, False, witness)


def _skip(test_id: TestId, reason: str) -> TestVerdict:
    return TestVerdict(test_id, True, {'reason': reason}, skipped=True)


def candidate_p(n: int) -> int:
    return 2 * n * (n - 1) + 1


def build_candidate(n: int, p: int) -> Candidate:
    """Candidate for an n whose p is already known to be prime"""
    fact_n = factorize(n)
    fact_n_minus_1 = factorize(n - 1)
    fact_p_minus_1 = merge(merge(factorize(2), fact_n), fact_n_minus_1)
    return Candidate(n, p, fact_n, fact_n_minus_1, fact_p_minus_1)


def candidate_from_n(n: int) -> Candidate:
    """
    Build the candidate for n

    Raises:
        RangeError: if n < 2 or p would exceed 10^18
        NotPrimeError: if 2n(n-1)+1 is composite (carries its factorization)
    """
    if n < 2:
        raise RangeError(f"n must be at least 2, got {n}")
    p = candidate_p(n)
    if p > P_CEILING:
        raise RangeError(f"p = {p} for n = {n} exceeds 10^18")
    if not is_prime(p):
        raise NotPrimeError(n, p, factorize(p))
    return build_candidate(n, p)


@lru_cache(maxsize=4096)
def quarter_orders(cand: Candidate) -> Tuple[Tuple[int, int], ...]:
    """(q, ord_p(q)) for every prime q dividing (p-1)/4, q increasing"""
    return tuple((q, mult_order(q, cand.p, cand.fact_p_minus_1)) for q in cand.quarter_primes)


def parity_test(n: int) -> TestVerdict:
    """n must be 2 or 3 mod 4, equivalently p = 5 mod 8"""
    if n % 4 in (2, 3):
        return _ok(TestId.PARITY)
    return _fail(TestId.PARITY, {'n_mod_4': n % 4, 'p_mod_8': candidate_p(n) % 8})


def divisor_congruence_test(fact_n: Factorization, fact_n_minus_1: Factorization) -> TestVerdict:
    """
    Residues mod 8 of the prime divisors of n and n-1

    No prime 7 mod 8 divides either; the even number has no prime 3 mod 8;
    the odd number has no prime 5 mod 8. Clauses are checked in that order.
    """
    if fact_n.value % 2 == 0:
        even, odd = fact_n, fact_n_minus_1
    else:
        even, odd = fact_n_minus_1, fact_n
    for number in (fact_n_minus_1, fact_n):
        for q in number.primes:
            if q % 8 == 7:
                return _fail(TestId.DIVISOR_MOD8, {'prime': q, 'number': number.value, 'clause': 'ANY_7_MOD_8'})
    for q in even.primes:
        if q % 8 == 3:
            return _fail(TestId.DIVISOR_MOD8, {'prime': q, 'number': even.value, 'clause': 'EVEN_3_MOD_8'})
    for q in odd.primes:
        if q % 8 == 5:
            return _fail(TestId.DIVISOR_MOD8, {'prime': q, 'number': odd.value, 'clause': 'ODD_5_MOD_8'})
    return _ok(TestId.DIVISOR_MOD8)


def order_parity_test(cand: Candidate) -> TestVerdict:
    """Every prime q dividing (p-1)/4 must have odd order mod p"""
    for q, order in quarter_orders(cand):
        if order % 2 == 0:
            return _fail(TestId.ORDER_PARITY, {'prime': q, 'order': order})
    return _ok(TestId.ORDER_PARITY)


def compute_gp(cand: Candidate) -> GpInfo:
    """
    G_p = gcd of ord_p(q) over the primes q dividing (p-1)/4

    An empty prime set (p = 5 only) gives G_p = p-1 by convention.
    delta is 0 if G_p | n, else 1 if G_p | n-1, else None.
    """
    orders = [order for _, order in quarter_orders(cand)]
    if orders:
        g_p = reduce(gcd, orders)
        assert ((cand.p - 1) // 2) % g_p == 0, f"G_p={g_p} does not divide (p-1)/2 for p={cand.p}"
        conventional = False
    else:
        g_p = cand.p - 1
        conventional = True
    if cand.n % g_p == 0:
        return GpInfo(g_p, 0, cand.n // g_p, conventional)
    if (cand.n - 1) % g_p == 0:
        return GpInfo(g_p, 1, (cand.n - 1) // g_p, conventional)
    return GpInfo(g_p, None, None, conventional)


def gcd_test(cand: Candidate, gp: GpInfo) -> TestVerdict:
    """G_p must be a proper divisor of n or of n-1; skipped for p <= 13"""
    if cand.p <= KNOWN_SOLUTION_CEILING:
        return _skip(TestId.GCD, f"p={cand.p} <= {KNOWN_SOLUTION_CEILING}: gcd bound needs p > 13")
    g = gp.g_p
    if (cand.n % g == 0 and cand.n // g >= 2) or ((cand.n - 1) % g == 0 and (cand.n - 1) // g >= 2):
        return _ok(TestId.GCD, {'g_p': g, 'delta': gp.delta, 'quotient': gp.quotient})
    return _fail(TestId.GCD, {'g_p': g, 'n': cand.n})


def eval_cyclotomic(k: int, z: int, p: int) -> int:
    """
    Phi_k(z) mod p as the Moebius product of (z^(k/d) - 1)^mu(d) over d | k

    Raises:
        CyclotomicPreconditionError: if some factor z^(k/d) - 1 vanishes
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    z %= p
    if k == 1:
        return (z - 1) % p
    numerator, denominator = 1, 1
    for d in factorize(k).divisors():
        mu = mobius(d)
        if mu == 0:
            continue
        factor = (pow_mod(z, k // d, p) - 1) % p
        if factor == 0:
            raise CyclotomicPreconditionError(f"z^{k // d} = 1 mod {p}: ord(z) divides {k}")
        if mu == 1:
            numerator = numerator * factor % p
        else:
            denominator = denominator * factor % p
    return numerator * inv_mod(denominator, p) % p


def cyclotomic_test(cand: Candidate, gp: GpInfo, bases: Sequence[int], k_max: int) -> TestVerdict:
    """
    Search (w, k) with z = w^((p-1)/G_p), z^k != 1 and Phi_k(z) a non-residue

    A witness eliminates p; passing only means "not eliminated". Small k are
    exhausted over all bases before larger k are tried.
    """
    if gp.conventional:
        return _skip(TestId.CYCLOTOMIC, f"G_{cand.p} is defined only by convention")
    exponent = (cand.p - 1) // gp.g_p
    powers = [(w, pow_mod(w, exponent, cand.p)) for w in bases if w % cand.p]
    for k in range(2, k_max + 1):
        for w, z in powers:
            if pow_mod(z, k, cand.p) == 1:
                continue
            value = eval_cyclotomic(k, z, cand.p)
            if legendre(value, cand.p) == QuadChar.NON_RESIDUE:
                return _fail(TestId.CYCLOTOMIC, {'base': w, 'k': k, 'z': z, 'value': value, 'g_p': gp.g_p})
    return _ok(TestId.CYCLOTOMIC, {'bases_tried': len(bases), 'k_max': k_max})


def hasse_alpha_exists(cand: Candidate) -> TestVerdict:
    """Every prime dividing p-1 to an odd power must have odd order mod p"""
    for q, e in cand.fact_p_minus_1.factors:
        if e % 2 == 1:
            order = mult_order(q, cand.p, cand.fact_p_minus_1)
            if order % 2 == 0:
                return _fail(TestId.HASSE, {'prime': q, 'valuation': e, 'order': order})
    return _ok(TestId.HASSE)


def lcm_conjectural_test(cand: Candidate) -> TestVerdict:
    """
    Diagnostic only: lcm of the orders must divide n or n-1

    Rests on the unproven multiplier conjecture; never part of a default pipeline.
    """
    orders = [order for _, order in quarter_orders(cand)]
    value = reduce(lcm, orders, 1)
    if cand.n % value == 0 or (cand.n - 1) % value == 0:
        return _ok(TestId.LCM_CONJECTURAL, {'lcm': value, 'conjectural': True})
    return _fail(TestId.LCM_CONJECTURAL, {'lcm': value, 'conjectural': True})


def run_test(test_id: TestId, cand: Candidate, gp: GpInfo,
             bases: Sequence[int], k_max: int) -> TestVerdict:
    """Dispatch one named test on a candidate"""
    if test_id is TestId.PRIMALITY:
        return _ok(TestId.PRIMALITY) if is_prime(cand.p) else _fail(TestId.PRIMALITY, {'p': cand.p})
    if test_id is TestId.PARITY:
        return parity_test(cand.n)
    if test_id is TestId.DIVISOR_MOD8:
        return divisor_congruence_test(cand.fact_n, cand.fact_n_minus_1)
    if test_id is TestId.ORDER_PARITY:
        return order_parity_test(cand)
    if test_id is TestId.GCD:
        return gcd_test(cand, gp)
    if test_id is TestId.CYCLOTOMIC:
        return cyclotomic_test(cand, gp, bases, k_max)
    if test_id is TestId.HASSE:
        return hasse_alpha_exists(cand)
    if test_id is TestId.LCM_CONJECTURAL:
        return lcm_conjectural_test(cand)
    raise ConfigError(f"unknown test {test_id}")


def replay_witness(cand: Candidate, verdict: TestVerdict) -> bool:
    """
    Re-derive a FAIL verdict from its witness using only the base operations

    Returns:
        True if the witness reproduces the failure
    """
    if verdict.passed or not verdict.witness:
        return False
    w = verdict.witness
    p, n = cand.p, cand.n
    test_id = verdict.test_id
    if test_id is TestId.PRIMALITY:
        return not is_prime(p)
    if test_id is TestId.PARITY:
        return n % 4 not in (2, 3)
    if test_id is TestId.DIVISOR_MOD8:
        q, number = w['prime'], w['number']
        if number not in (n, n - 1) or number % q != 0 or not is_prime(q):
            return False
        return {
            'ANY_7_MOD_8': q % 8 == 7,
            'EVEN_3_MOD_8': number % 2 == 0 and q % 8 == 3,
            'ODD_5_MOD_8': number % 2 == 1 and q % 8 == 5,
        }.get(w['clause'], False)
    if test_id is TestId.ORDER_PARITY:
        q = w['prime']
        return ((p - 1) // 4) % q == 0 and is_prime(q) and mult_order(q, p, cand.fact_p_minus_1) % 2 == 0
    if test_id is TestId.GCD:
        g = reduce(gcd, (mult_order(q, p, cand.fact_p_minus_1) for q in cand.quarter_primes), 0)
        if g != w['g_p']:
            return False
        return not ((n % g == 0 and n // g >= 2) or ((n - 1) % g == 0 and (n - 1) // g >= 2))
    if test_id is TestId.CYCLOTOMIC:
        z = pow_mod(w['base'], (p - 1) // w['g_p'], p)
        if z != w['z'] or pow_mod(z, w['k'], p) == 1:
            return False
        return legendre(eval_cyclotomic(w['k'], z, p), p) == QuadChar.NON_RESIDUE
    if test_id is TestId.HASSE:
        q = w['prime']
        return valuation(cand.fact_p_minus_1, q) % 2 == 1 and mult_order(q, p, cand.fact_p_minus_1) % 2 == 0
    if test_id is TestId.LCM_CONJECTURAL:
        value = w['lcm']
        return n % value != 0 and (n - 1) % value != 0
    return False


@dataclass(frozen=True)
class Diagnosis:
    """Every test run on one candidate, without short-circuiting"""

    candidate: Candidate
    gp: GpInfo
    verdicts: Tuple[TestVerdict, ...]

    @property
    def eliminated_by(self) -> Optional[TestVerdict]:
        """First failing proven test; diagnostics do not count"""
        for verdict in self.verdicts:
            if verdict.test_id not in DIAGNOSTIC_TESTS and not verdict.passed:
                return verdict
        return None

    def to_dict(self) -> dict:
        first = self.eliminated_by
        return {
            'candidate': self.candidate.to_dict(),
            'gp': self.gp.to_dict(),
            'verdicts': [v.to_dict() for v in self.verdicts],
            'eliminated_by': first.test_id.value if first else None,
        }


def diagnose(cand: Candidate, bases: Sequence[int], k_max: int) -> Diagnosis:
    gp = compute_gp(cand)
    verdicts = tuple(run_test(t, cand, gp, bases, k_max) for t in PIPELINE_ORDER)
    return Diagnosis(cand, gp, verdicts)
