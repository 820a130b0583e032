import json
from dataclasses import replace

import pytest

from modules.checkpoint import CheckpointStore
from modules.criteria import TestId
from modules.errors import CheckpointIOError, CheckpointMismatchError, ConfigError, SieveInterrupted
from modules.report import render_csv, render_json, render_report, render_stats, render_table, render_text
from modules.sieve import (
    SieveConfig, checkpoint_roundtrip, elimination_fraction, gp_statistics, largest_n_below,
    reproduce_table, run_sieve,
)

STRUCTURAL = (TestId.PRIMALITY, TestId.DIVISOR_MOD8, TestId.GCD)
TABLE_TESTS = (TestId.PARITY, TestId.PRIMALITY, TestId.DIVISOR_MOD8, TestId.GCD)


def canonical(report):
    return json.dumps(report.to_dict(include_runtime=False), sort_keys=True)


def test_config_validation():
    bad = [
        dict(n_from=1, n_to=5),
        dict(n_from=10, n_to=5),
        dict(n_from=2, n_to=10 ** 9 + 1),
        dict(n_to=5, worker_count=0),
        dict(n_to=5, chunk_size=0),
        dict(n_to=5, k_max=1),
        dict(n_to=5, bases=()),
        dict(n_to=5, bases=(1, 2)),
        dict(n_to=5, output_format='xml'),
        dict(n_to=5, enabled_tests='gcd,nonsense'),
    ]
    for kwargs in bad:
        with pytest.raises(ConfigError):
            SieveConfig(**kwargs)


def test_config_normalises_test_order():
    config = SieveConfig(n_to=5, enabled_tests='gcd,primality,div')
    assert config.enabled_tests == STRUCTURAL


def test_chunking():
    config = SieveConfig(n_from=2, n_to=11, chunk_size=4)
    assert config.chunk_count == 3
    assert [config.chunk_bounds(i) for i in range(3)] == [(2, 5), (6, 9), (10, 11)]


def test_config_hash_depends_on_chunk_size_not_workers():
    base = SieveConfig(n_to=100)
    assert base.config_hash() == replace(base, worker_count=4).config_hash()
    assert base.config_hash() != replace(base, chunk_size=7).config_hash()
    assert base.config_hash() != replace(base, n_to=101).config_hash()


def test_largest_n_below():
    assert largest_n_below(13) == 3
    assert largest_n_below(12) == 2
    assert largest_n_below(5101) == 51
    assert largest_n_below(10 ** 12) == 707107


def test_single_n_two_is_exempt():
    report = run_sieve(SieveConfig(n_from=2, n_to=2))
    assert report.survivor_ns == []
    assert [r.n for r in report.exempt] == [2]


def test_no_tests_keeps_every_candidate_prime():
    report = run_sieve(SieveConfig(n_from=2, n_to=20, enabled_tests=()))
    assert report.survivor_ns == [2, 3, 5, 6, 8, 10, 13, 15, 18, 20]
    assert report.totals()['non_prime'] == 9
    assert report.per_test == {}


def test_accounting_identity():
    for tests in ((), STRUCTURAL, tuple(TestId)[:6]):
        report = run_sieve(SieveConfig(n_from=2, n_to=1500, enabled_tests=tests, chunk_size=100))
        totals = report.totals()
        assert totals['eliminated'] + totals['survivors'] + totals['exempt'] + totals['non_prime'] \
            == totals['range_size'] == 1499
        assert sum(report.per_test.values()) == totals['eliminated']


def test_full_pipeline_small_range():
    report = run_sieve(SieveConfig(n_from=2, n_to=71))
    assert report.survivor_ns == []
    assert [r.n for r in report.exempt] == [2, 3]
    # 36 of the 70 n pass PARITY, 16 of those give a prime p
    assert report.per_test['PARITY'] == 34
    assert report.totals()['non_prime'] == 20
    assert report.candidate_prime_count == 16


def test_parity_runs_before_primality_and_factoring(monkeypatch):
    import modules.sieve as sieve

    primality_calls, built = [], []
    real_is_prime, real_build = sieve.is_prime, sieve.build_candidate

    def counting_is_prime(p):
        primality_calls.append(p)
        return real_is_prime(p)

    def counting_build(n, p):
        built.append(n)
        return real_build(n, p)

    monkeypatch.setattr(sieve, 'is_prime', counting_is_prime)
    monkeypatch.setattr(sieve, 'build_candidate', counting_build)
    report = run_sieve(SieveConfig(n_from=2, n_to=20, enabled_tests='primality,parity'))
    assert report.per_test == {'PARITY': 9}
    assert report.totals()['non_prime'] == 4
    assert report.candidate_prime_count == 6
    assert report.survivor_ns == [2, 3, 6, 10, 15, 18]
    assert report.exempt == []
    assert sorted(built) == [2, 3, 6, 10, 15, 18]
    assert sorted(primality_calls) == [2 * n * (n - 1) + 1 for n in (2, 3, 6, 7, 10, 11, 14, 15, 18, 19)]
    assert [v.test_id for v in report.survivors[0].verdicts] == [TestId.PARITY, TestId.PRIMALITY]


def test_table_pipeline_below_1e7():
    report = run_sieve(SieveConfig(n_from=2, n_to=largest_n_below(10 ** 7), enabled_tests=TABLE_TESTS))
    assert report.survivor_ns == [51, 650]
    assert [r.n for r in report.exempt] == [2, 3]
    assert [(r.gp.delta, r.gp.quotient) for r in report.survivors] == [(1, 2), (0, 2)]


def test_structural_pipeline_without_parity_below_1e7():
    # n = 1300 is 0 mod 4, so only PARITY removes it
    report = run_sieve(SieveConfig(n_from=2, n_to=largest_n_below(10 ** 7), enabled_tests=STRUCTURAL))
    assert report.survivor_ns == [51, 650, 1300]
    survivor = report.survivors[-1]
    assert (survivor.p, survivor.gp.g_p, str(survivor.fact_n_minus_1)) == (3377401, 433, '3·433')


def test_determinism_across_workers_and_chunks():
    results = {
        canonical(run_sieve(SieveConfig(n_from=2, n_to=3000, worker_count=jobs, chunk_size=chunk)))
        for jobs, chunk in ((1, 4096), (1, 64), (3, 64), (3, 4096))
    }
    assert len(results) == 1


def test_monotone_in_enabled_tests():
    small = run_sieve(SieveConfig(n_from=2, n_to=3000, enabled_tests=(TestId.PRIMALITY, TestId.GCD)))
    large = run_sieve(SieveConfig(n_from=2, n_to=3000, enabled_tests=STRUCTURAL))
    assert set(large.survivor_ns) <= set(small.survivor_ns)


@pytest.mark.parametrize('interrupt_point', [0, 5])
def test_checkpoint_roundtrip_matches_uninterrupted(checkpoint_path, interrupt_point):
    config = SieveConfig(n_from=2, n_to=3000, chunk_size=256, checkpoint_path=checkpoint_path)
    resumed = checkpoint_roundtrip(config, interrupt_point)
    straight = run_sieve(replace(config, checkpoint_path=None))
    assert canonical(resumed) == canonical(straight)


def test_interrupt_leaves_a_checkpoint(checkpoint_path):
    config = SieveConfig(n_from=2, n_to=1000, chunk_size=100, checkpoint_path=checkpoint_path)
    with pytest.raises(SieveInterrupted) as info:
        run_sieve(config, stop_after_chunk=2)
    assert info.value.chunk_index == 2
    assert info.value.exit_code == 6
    state = CheckpointStore(checkpoint_path).load(config.config_hash())
    assert state['last_completed_chunk'] == 2


def test_checkpoint_mismatch(checkpoint_path):
    config = SieveConfig(n_from=2, n_to=1000, chunk_size=100, checkpoint_path=checkpoint_path)
    with pytest.raises(SieveInterrupted):
        run_sieve(config, stop_after_chunk=0)
    with pytest.raises(CheckpointMismatchError) as info:
        run_sieve(replace(config, n_to=1001))
    assert info.value.exit_code == 3
    with pytest.raises(CheckpointMismatchError):
        run_sieve(replace(config, chunk_size=50))


def test_checkpoint_malformed(checkpoint_path):
    with open(checkpoint_path, 'w', encoding='utf-8') as f:
        f.write('{not json')
    with pytest.raises(CheckpointIOError):
        run_sieve(SieveConfig(n_from=2, n_to=100, checkpoint_path=checkpoint_path))


def test_checkpoint_roundtrip_needs_path():
    with pytest.raises(ConfigError):
        checkpoint_roundtrip(SieveConfig(n_to=100), 0)


def test_gp_statistics_edge_cases():
    single = gp_statistics(SieveConfig(n_from=51, n_to=51, enabled_tests=()))
    assert (single.below, single.total) == (1, 1)
    assert single.fraction == 1.0
    empty = gp_statistics(SieveConfig(n_from=7, n_to=7, enabled_tests=()))
    assert empty.zero_denominator
    assert empty.fraction == 0.0


def test_elimination_fraction():
    report = run_sieve(SieveConfig(n_from=2, n_to=2000, enabled_tests=(TestId.PRIMALITY, TestId.GCD)))
    eliminated = report.tally.eliminated.get('GCD', 0)
    assert elimination_fraction(report, TestId.GCD) == eliminated / report.candidate_prime_count
    assert elimination_fraction(report, TestId.GCD) > 0.8
    assert elimination_fraction(report, TestId.PARITY) == 0.0
    empty = run_sieve(SieveConfig(n_from=7, n_to=7))
    assert elimination_fraction(empty, TestId.GCD) == 0.0


def test_reproduce_table_below_1e7():
    table = reproduce_table(10 ** 7)
    assert [row.n for row in table.rows] == [51, 650]
    first, second = table.rows
    assert (first.delta, first.quotient) == (1, 2)
    assert (second.delta, second.quotient) == (0, 2)
    assert first.factorizations == '2·5^2, 3·17'
    assert first.factorizations_latex == '2\\cdot 5^2,\\ 3\\cdot 17'
    assert second.factorizations == '11·59, 2·5^2·13'
    assert (first.witness['base'], first.witness['k']) == (2, 2)
    assert (second.witness['base'], second.witness['k']) == (2, 2)


def test_reproduce_table_limits():
    with pytest.raises(ConfigError):
        reproduce_table(10 ** 19)
    with pytest.raises(ConfigError):
        reproduce_table(13)


def test_render_table():
    table = reproduce_table(10 ** 7)
    latex = render_table(table, latex=True).splitlines()
    assert latex[0] == '51 & 1 & 2 & $2\\cdot 5^2,\\ 3\\cdot 17$ \\\\'
    assert len(latex) == 2
    text = render_table(table)
    assert 'w=2, k=2' in text
    assert '2·5^2, 3·17' in text


def test_report_renderings():
    report = run_sieve(SieveConfig(n_from=2, n_to=20, enabled_tests=()))
    csv_lines = render_csv(report).splitlines()
    assert csv_lines[0] == 'kind,n,p,g_p,delta,quotient,fact_n_minus_1,fact_n,verdicts'
    assert len(csv_lines) == 11
    assert csv_lines[1].startswith('survivor,2,5,')
    text = render_text(report)
    assert 'survivors      : 10' in text
    assert 'pipeline       : (none)' in text
    data = json.loads(render_json(report))
    assert data['totals']['survivors'] == 10
    assert data['runtime']['output_format'] == 'json'
    assert 'runtime' not in report.to_dict(include_runtime=False)
    csv_report = run_sieve(SieveConfig(n_from=2, n_to=5, enabled_tests=(), output_format='csv'))
    assert csv_report.to_dict()['runtime']['output_format'] == 'csv'
    with pytest.raises(ConfigError):
        render_report(report, 'xml')


def test_render_stats():
    config = SieveConfig(n_from=51, n_to=51, enabled_tests=(TestId.PRIMALITY, TestId.GCD),
                         collect_gp_statistics=True)
    report = run_sieve(config)
    text = render_stats(report.gp_statistics, elimination_fraction(report, TestId.GCD),
                        report.candidate_prime_count)
    assert 'candidate primes          : 1' in text
    assert 'G_p < sqrt(p)             : 1 (1.000000)' in text
    assert 'eliminated by GCD test    : 0.000000' in text
