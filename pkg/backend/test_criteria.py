import random

import pytest
from sympy import Poly, cyclotomic_poly, symbols

from modules.criteria import (
    DEFAULT_PIPELINE, DIAGNOSTIC_TESTS, GpInfo, TestId, candidate_from_n, compute_gp, cyclotomic_test,
    diagnose, divisor_congruence_test, eval_cyclotomic, gcd_test, hasse_alpha_exists, lcm_conjectural_test,
    order_parity_test, parity_test, parse_test_ids, quarter_orders, replay_witness,
)
from modules.errors import ConfigError, CyclotomicPreconditionError, NotPrimeError, RangeError
from modules.factor import factorize
from modules.modmath import inv_mod, is_prime, small_primes
from modules.sieve import DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX


def prime_ns(limit):
    return [n for n in range(2, limit) if is_prime(2 * n * (n - 1) + 1)]


def test_candidate_from_n():
    cand = candidate_from_n(3)
    assert cand.p == 13
    assert cand.fact_p_minus_1.value == 12
    assert candidate_from_n(51).p == 5101
    with pytest.raises(NotPrimeError) as info:
        candidate_from_n(7)
    assert info.value.p == 85
    assert str(info.value.factorization) == '5·17'
    assert info.value.exit_code == 4
    with pytest.raises(RangeError):
        candidate_from_n(1)
    with pytest.raises(RangeError):
        candidate_from_n(10 ** 9)


def test_quarter_primes_drop_two_unless_eight_divides():
    assert candidate_from_n(51).quarter_primes == (3, 5, 17)
    assert candidate_from_n(5).quarter_primes == (2, 5)
    assert candidate_from_n(2).quarter_primes == ()
    assert quarter_orders(candidate_from_n(3)) == ((3, 3),)


def test_parse_test_ids_normalises_order():
    assert parse_test_ids('gcd, div ,primality') == (TestId.PRIMALITY, TestId.DIVISOR_MOD8, TestId.GCD)
    assert parse_test_ids('') == ()
    assert parse_test_ids([TestId.CYCLOTOMIC, 'parity']) == (TestId.PARITY, TestId.CYCLOTOMIC)
    assert parse_test_ids('primality,parity,gcd') == (TestId.PARITY, TestId.PRIMALITY, TestId.GCD)
    with pytest.raises(ConfigError):
        parse_test_ids('gcd,bogus')


def test_parity_test():
    assert parity_test(51).passed
    assert parity_test(650).passed
    verdict = parity_test(4)
    assert not verdict.passed
    assert verdict.witness == {'n_mod_4': 0, 'p_mod_8': 25 % 8}


def test_divisor_congruence_test():
    assert divisor_congruence_test(factorize(51), factorize(50)).passed
    six = divisor_congruence_test(factorize(6), factorize(5))
    assert not six.passed
    assert six.witness == {'prime': 3, 'number': 6, 'clause': 'EVEN_3_MOD_8'}
    eight = divisor_congruence_test(factorize(8), factorize(7))
    assert eight.witness == {'prime': 7, 'number': 7, 'clause': 'ANY_7_MOD_8'}


def test_order_parity_test():
    assert order_parity_test(candidate_from_n(3)).passed
    assert order_parity_test(candidate_from_n(2)).passed
    p41 = order_parity_test(candidate_from_n(5))
    assert not p41.passed
    assert p41.witness == {'prime': 2, 'order': 20}


@pytest.mark.parametrize('n, g_p, delta, quotient', [
    (3, 3, 0, 1),
    (51, 25, 1, 2),
    (650, 325, 0, 2),
    (32283, 16141, 1, 2),
])
def test_compute_gp(n, g_p, delta, quotient):
    gp = compute_gp(candidate_from_n(n))
    assert (gp.g_p, gp.delta, gp.quotient) == (g_p, delta, quotient)
    assert not gp.conventional


def test_compute_gp_empty_prime_set_convention():
    gp = compute_gp(candidate_from_n(2))
    assert gp.g_p == 4
    assert gp.conventional


def test_gp_divides_half_p_minus_1():
    for n in prime_ns(400):
        cand = candidate_from_n(n)
        gp = compute_gp(cand)
        if gp.conventional:
            continue
        assert ((cand.p - 1) // 2) % gp.g_p == 0
        if gp.delta is not None:
            assert (n - gp.delta) % gp.g_p == 0
            assert gp.quotient == (n - gp.delta) // gp.g_p


def test_odd_orders_give_odd_gp():
    for n in prime_ns(400):
        cand = candidate_from_n(n)
        if order_parity_test(cand).passed and cand.quarter_primes:
            assert compute_gp(cand).g_p % 2 == 1


def test_gcd_test(cand_51, gp_51):
    assert gcd_test(cand_51, gp_51).passed
    cand = candidate_from_n(32283)
    assert gcd_test(cand, compute_gp(cand)).passed
    improper = gcd_test(cand_51, GpInfo(51, 0, 1))
    assert not improper.passed
    assert improper.witness == {'g_p': 51, 'n': 51}
    p61 = candidate_from_n(6)
    verdict = gcd_test(p61, compute_gp(p61))
    assert not verdict.passed and verdict.witness['g_p'] == 10


def test_gcd_test_skipped_up_to_13():
    for n in (2, 3):
        cand = candidate_from_n(n)
        verdict = gcd_test(cand, compute_gp(cand))
        assert verdict.skipped
        assert verdict.status == 'SKIPPED'


def test_eval_cyclotomic_small_k():
    p = 101
    for z in range(2, 20):
        assert eval_cyclotomic(1, z, p) == (z - 1) % p
        assert eval_cyclotomic(2, z, p) == (z + 1) % p
    z = 7
    assert pow(z, 6, p) != 1
    assert eval_cyclotomic(6, z, p) == (z * z - z + 1) % p


def test_eval_cyclotomic_against_sympy_coefficients():
    x = symbols('x')
    rng = random.Random(21)
    primes = [p for p in small_primes(10 ** 4) if p > 100]
    for k in range(1, 21):
        coeffs = [int(c) for c in Poly(cyclotomic_poly(k, x), x).all_coeffs()]
        for _ in range(5):
            p = rng.choice(primes)
            z = rng.randrange(2, p)
            if pow(z, k, p) == 1:
                continue
            horner = 0
            for c in coeffs:
                horner = (horner * z + c) % p
            assert eval_cyclotomic(k, z, p) == horner


def test_eval_cyclotomic_telescoping():
    rng = random.Random(22)
    primes = [p for p in small_primes(10 ** 5) if p > 50]
    checked = 0
    while checked < 100:
        p = rng.choice(primes)
        k = rng.randrange(2, 25)
        z = rng.randrange(2, p)
        if any(pow(z, j, p) == 1 for j in range(1, k + 1)):
            continue
        product = 1
        for d in factorize(k).divisors():
            if d > 1:
                product = product * eval_cyclotomic(d, z, p) % p
        assert product == (pow(z, k, p) - 1) * inv_mod(z - 1, p) % p
        checked += 1


def test_eval_cyclotomic_precondition():
    with pytest.raises(CyclotomicPreconditionError):
        eval_cyclotomic(3, 3, 13)


@pytest.mark.parametrize('n, base, z', [(51, 2, 1933), (650, 2, 626699), (32283, 3, 97487324)])
def test_cyclotomic_witnesses_for_table_survivors(n, base, z):
    cand = candidate_from_n(n)
    verdict = cyclotomic_test(cand, compute_gp(cand), DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX)
    assert not verdict.passed
    assert (verdict.witness['base'], verdict.witness['k'], verdict.witness['z']) == (base, 2, z)
    assert replay_witness(cand, verdict)


def test_cyclotomic_single_base():
    cand = candidate_from_n(32283)
    verdict = cyclotomic_test(cand, compute_gp(cand), [3], 2)
    assert not verdict.passed and verdict.witness['k'] == 2


def test_cyclotomic_does_not_eliminate_known_solutions():
    p13 = candidate_from_n(3)
    assert cyclotomic_test(p13, compute_gp(p13), DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX).passed
    p5 = candidate_from_n(2)
    assert cyclotomic_test(p5, compute_gp(p5), DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX).skipped


def test_hasse_alpha_exists():
    assert hasse_alpha_exists(candidate_from_n(3)).passed
    assert hasse_alpha_exists(candidate_from_n(2)).passed
    verdict = hasse_alpha_exists(candidate_from_n(5))
    assert not verdict.passed
    assert verdict.witness == {'prime': 2, 'valuation': 3, 'order': 20}


def test_lcm_conjectural_test(cand_51):
    assert lcm_conjectural_test(candidate_from_n(3)).passed
    verdict = lcm_conjectural_test(cand_51)
    assert not verdict.passed
    assert verdict.witness == {'lcm': 1275, 'conjectural': True}
    assert TestId.LCM_CONJECTURAL not in DEFAULT_PIPELINE
    assert TestId.LCM_CONJECTURAL in DIAGNOSTIC_TESTS


@pytest.mark.parametrize('n', [2, 3])
def test_no_test_eliminates_known_solutions(n):
    diagnosis = diagnose(candidate_from_n(n), DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX)
    assert all(v.passed for v in diagnosis.verdicts)
    assert diagnosis.eliminated_by is None


def test_check_n_51_diagnosis(cand_51):
    diagnosis = diagnose(cand_51, DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX)
    assert diagnosis.eliminated_by.test_id is TestId.CYCLOTOMIC
    data = diagnosis.to_dict()
    assert data['gp'] == {'g_p': 25, 'delta': 1, 'quotient': 2, 'conventional': False}
    assert data['eliminated_by'] == 'CYCLOTOMIC'


def test_every_failure_witness_replays():
    for n in prime_ns(500):
        cand = candidate_from_n(n)
        for verdict in diagnose(cand, DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX).verdicts:
            if verdict.status == 'FAIL':
                assert verdict.witness
                assert replay_witness(cand, verdict), (n, verdict)


def test_replay_rejects_forged_witness(cand_51):
    forged = order_parity_test(candidate_from_n(5))
    assert not replay_witness(cand_51, forged)
    assert not replay_witness(cand_51, parity_test(51))
