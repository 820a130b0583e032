"""
Chunked, checkpointable driver running the criteria pipeline over a range of n
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple
import hashlib
import json
import logging
import time

from modules.checkpoint import CheckpointStore
from modules.criteria import (
    DEFAULT_PIPELINE, P_CEILING, GpInfo, TestId, TestVerdict,
    build_candidate, candidate_p, compute_gp, cyclotomic_test, parity_test, parse_test_ids, run_test,
)
from modules.errors import ConfigError, SieveInterrupted
from modules.factor import Factorization
from modules.modmath import is_prime, small_primes

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_CHUNK_SIZE = 4096
DEFAULT_CYCLOTOMIC_BASES = small_primes(100)
DEFAULT_K_MAX = 12
OUTPUT_FORMATS = ('json', 'csv', 'text')
# tests that need G_p
GP_TESTS = (TestId.GCD, TestId.CYCLOTOMIC)
TABLE_PIPELINE = (TestId.PARITY, TestId.PRIMALITY, TestId.DIVISOR_MOD8, TestId.GCD)


def largest_n_below(limit_p: int) -> int:
    """Largest n with 2n(n-1)+1 <= limit_p"""
    n = (1 + isqrt(max(2 * limit_p - 1, 0))) // 2
    while n > 0 and candidate_p(n) > limit_p:
        n -= 1
    return n


@dataclass(frozen=True)
class SieveConfig:
    n_from: int = 2
    n_to: int = 2
    enabled_tests: Tuple[TestId, ...] = DEFAULT_PIPELINE
    bases: Tuple[int, ...] = DEFAULT_CYCLOTOMIC_BASES
    k_max: int = DEFAULT_K_MAX
    worker_count: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE
    checkpoint_path: Optional[str] = None
    output_format: str = 'json'
    collect_gp_statistics: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'enabled_tests', parse_test_ids(self.enabled_tests))
        object.__setattr__(self, 'bases', tuple(int(b) for b in self.bases))
        self.validate()

    def validate(self):
        if self.n_from < 2:
            raise ConfigError(f"n_from must be at least 2, got {self.n_from}")
        if self.n_to < self.n_from:
            raise ConfigError(f"n_to ({self.n_to}) is below n_from ({self.n_from})")
        if candidate_p(self.n_to) > P_CEILING:
            raise ConfigError(f"n_to={self.n_to} gives p above 10^18")
        if self.worker_count < 1:
            raise ConfigError(f"worker count must be positive, got {self.worker_count}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk size must be positive, got {self.chunk_size}")
        if self.k_max < 2:
            raise ConfigError(f"k_max must be at least 2, got {self.k_max}")
        if TestId.CYCLOTOMIC in self.enabled_tests and not self.bases:
            raise ConfigError("cyclotomic test enabled with no bases")
        if any(b < 2 for b in self.bases):
            raise ConfigError(f"cyclotomic bases must be at least 2: {list(self.bases)}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format '{self.output_format}'")

    @property
    def range_size(self) -> int:
        return self.n_to - self.n_from + 1

    @property
    def chunk_count(self) -> int:
        return -(-self.range_size // self.chunk_size)

    def chunk_bounds(self, index: int) -> Tuple[int, int]:
        start = self.n_from + index * self.chunk_size
        return start, min(self.n_to, start + self.chunk_size - 1)

    def echo(self) -> dict:
        """Fields that determine the report content"""
        return {
            'n_from': self.n_from,
            'n_to': self.n_to,
            'enabled_tests': [t.value for t in self.enabled_tests],
            'bases': list(self.bases),
            'k_max': self.k_max,
            'collect_gp_statistics': self.collect_gp_statistics,
        }

    def config_hash(self) -> str:
        """Checkpoint key; chunk_size is included since chunk indices depend on it"""
        payload = dict(self.echo(), chunk_size=self.chunk_size, schema_version=SCHEMA_VERSION)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class SurvivorRecord:
    n: int
    p: int
    fact_n: Factorization
    fact_n_minus_1: Factorization
    gp: GpInfo
    verdicts: Tuple[TestVerdict, ...]

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'p': self.p,
            'fact_n': self.fact_n.to_dict(),
            'fact_n_minus_1': self.fact_n_minus_1.to_dict(),
            'gp': self.gp.to_dict(),
            'verdicts': [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SurvivorRecord':
        return cls(
            data['n'], data['p'],
            Factorization.from_dict(data['fact_n']),
            Factorization.from_dict(data['fact_n_minus_1']),
            GpInfo.from_dict(data['gp']),
            tuple(TestVerdict.from_dict(v) for v in data['verdicts']),
        )


@dataclass
class SieveTally:
    """Counts and records accumulated over completed chunks"""

    non_prime: int = 0
    candidate_primes: int = 0
    eliminated: Dict[str, int] = field(default_factory=dict)
    survivors: List[SurvivorRecord] = field(default_factory=list)
    exempt: List[SurvivorRecord] = field(default_factory=list)
    gp_below_sqrt: int = 0
    gp_total: int = 0

    def add(self, other: 'SieveTally') -> None:
        self.non_prime += other.non_prime
        self.candidate_primes += other.candidate_primes
        for test, count in other.eliminated.items():
            self.eliminated[test] = self.eliminated.get(test, 0) + count
        self.survivors.extend(other.survivors)
        self.exempt.extend(other.exempt)
        self.gp_below_sqrt += other.gp_below_sqrt
        self.gp_total += other.gp_total

    def to_dict(self) -> dict:
        return {
            'non_prime': self.non_prime,
            'candidate_primes': self.candidate_primes,
            'eliminated': dict(self.eliminated),
            'survivors': [r.to_dict() for r in self.survivors],
            'exempt': [r.to_dict() for r in self.exempt],
            'gp_below_sqrt': self.gp_below_sqrt,
            'gp_total': self.gp_total,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SieveTally':
        return cls(
            data['non_prime'], data['candidate_primes'], dict(data['eliminated']),
            [SurvivorRecord.from_dict(r) for r in data['survivors']],
            [SurvivorRecord.from_dict(r) for r in data['exempt']],
            data['gp_below_sqrt'], data['gp_total'],
        )


@dataclass(frozen=True)
class GpStatistics:
    below: int
    total: int

    @property
    def zero_denominator(self) -> bool:
        return self.total == 0

    @property
    def fraction(self) -> float:
        return 0.0 if self.total == 0 else self.below / self.total

    def to_dict(self) -> dict:
        return {'below_sqrt_p': self.below, 'candidate_primes': self.total,
                'fraction': self.fraction, 'zero_denominator': self.zero_denominator}


@dataclass
class SieveReport:
    config: SieveConfig
    tally: SieveTally
    elapsed: float = 0.0

    @property
    def survivors(self) -> List[SurvivorRecord]:
        return self.tally.survivors

    @property
    def exempt(self) -> List[SurvivorRecord]:
        return self.tally.exempt

    @property
    def survivor_ns(self) -> List[int]:
        return [r.n for r in self.tally.survivors]

    @property
    def candidate_prime_count(self) -> int:
        return self.tally.candidate_primes

    @property
    def per_test(self) -> Dict[str, int]:
        structural = [t for t in self.config.enabled_tests if t is not TestId.PRIMALITY]
        return {t.value: self.tally.eliminated.get(t.value, 0) for t in structural}

    @property
    def gp_statistics(self) -> GpStatistics:
        return GpStatistics(self.tally.gp_below_sqrt, self.tally.gp_total)

    def totals(self) -> dict:
        return {
            'range_size': self.config.range_size,
            'non_prime': self.tally.non_prime,
            'candidate_primes': self.tally.candidate_primes,
            'eliminated': sum(self.tally.eliminated.values()),
            'survivors': len(self.tally.survivors),
            'exempt': len(self.tally.exempt),
        }

    def to_dict(self, include_runtime: bool = True) -> dict:
        data = {
            'schema_version': SCHEMA_VERSION,
            'config': self.config.echo(),
            'totals': self.totals(),
            'per_test': self.per_test,
            'survivors': [r.to_dict() for r in self.tally.survivors],
            'exempt': [r.to_dict() for r in self.tally.exempt],
        }
        if self.config.collect_gp_statistics:
            data['gp_statistics'] = self.gp_statistics.to_dict()
        if include_runtime:
            data['runtime'] = {
                'elapsed_seconds': round(self.elapsed, 3),
                'worker_count': self.config.worker_count,
                'chunk_size': self.config.chunk_size,
                'checkpoint_path': self.config.checkpoint_path,
                'output_format': self.config.output_format,
            }
        return data


def evaluate_chunk(config: SieveConfig, index: int) -> SieveTally:
    """Run the pipeline on every n of one chunk; pure in (config, index)"""
    tally = SieveTally()
    start, stop = config.chunk_bounds(index)
    check_parity = TestId.PARITY in config.enabled_tests
    tests = [t for t in config.enabled_tests if t not in (TestId.PARITY, TestId.PRIMALITY)]
    needs_gp = config.collect_gp_statistics or any(t in GP_TESTS for t in tests)
    for n in range(start, stop + 1):
        p = candidate_p(n)
        # n mod 4 alone decides PARITY, before p is tested or factored
        parity = parity_test(n) if check_parity else None
        if parity is not None and not parity.passed:
            tally.eliminated[TestId.PARITY.value] = tally.eliminated.get(TestId.PARITY.value, 0) + 1
            continue
        if not is_prime(p):
            tally.non_prime += 1
            continue
        tally.candidate_primes += 1
        cand = build_candidate(n, p)
        gp = compute_gp(cand) if needs_gp else None
        if config.collect_gp_statistics and gp.g_p * gp.g_p < p:
            tally.gp_below_sqrt += 1
        if config.collect_gp_statistics:
            tally.gp_total += 1

        verdicts = [parity] if parity is not None else []
        if TestId.PRIMALITY in config.enabled_tests:
            verdicts.append(run_test(TestId.PRIMALITY, cand, gp, config.bases, config.k_max))
        failed = None
        for test_id in tests:
            verdict = run_test(test_id, cand, gp, config.bases, config.k_max)
            verdicts.append(verdict)
            if not verdict.passed:
                failed = verdict
                break
        if failed is not None:
            tally.eliminated[failed.test_id.value] = tally.eliminated.get(failed.test_id.value, 0) + 1
            logger.debug(f"n={n} p={p} eliminated by {failed.test_id.value}: {failed.witness}")
            continue

        record = SurvivorRecord(n, p, cand.fact_n, cand.fact_n_minus_1,
                                gp if gp is not None else compute_gp(cand), tuple(verdicts))
        if any(v.skipped for v in verdicts):
            tally.exempt.append(record)
        else:
            tally.survivors.append(record)
    return tally


def run_sieve(config: SieveConfig, stop_after_chunk: Optional[int] = None) -> SieveReport:
    """
    Sieve n_from..n_to, resuming from the checkpoint if one is configured

    Args:
        config: validated sieve configuration
        stop_after_chunk: raise SieveInterrupted once this chunk is checkpointed

    Returns:
        SieveReport with chunks merged in ascending order
    """
    started = time.perf_counter()
    config_hash = config.config_hash()
    store = CheckpointStore(config.checkpoint_path) if config.checkpoint_path else None
    tally = SieveTally()
    next_chunk = 0
    if store is not None and store.exists():
        state = store.load(config_hash)
        tally = SieveTally.from_dict(state['tally'])
        next_chunk = state['last_completed_chunk'] + 1
        logger.warning(f"resuming {config.checkpoint_path} after chunk {state['last_completed_chunk']}")

    pending = range(next_chunk, config.chunk_count)
    logger.info(f"sieve n={config.n_from}..{config.n_to}: {len(pending)} of {config.chunk_count} chunk(s), "
                f"{config.worker_count} worker(s), tests {[t.value for t in config.enabled_tests]}")

    executor = None
    if config.worker_count > 1 and len(pending) > 1:
        executor = ProcessPoolExecutor(max_workers=config.worker_count)
        results = executor.map(partial(evaluate_chunk, config), pending)
    else:
        results = (evaluate_chunk(config, index) for index in pending)
    try:
        for index, chunk in zip(pending, results):
            tally.add(chunk)
            if store is not None:
                store.save(config_hash, index, tally.to_dict())
            logger.info(f"chunk {index + 1}/{config.chunk_count} done: "
                        f"{tally.candidate_primes} candidate primes, {len(tally.survivors)} survivor(s)")
            if stop_after_chunk is not None and index >= stop_after_chunk:
                raise SieveInterrupted(index)
    finally:
        if executor is not None:
            executor.shutdown(wait=True, cancel_futures=True)

    report = SieveReport(config, tally, time.perf_counter() - started)
    totals = report.totals()
    logger.info(f"sieve finished: {totals['candidate_primes']} candidate primes, "
                f"{totals['survivors']} survivor(s), {totals['exempt']} exempt")
    return report


def checkpoint_roundtrip(config: SieveConfig, interrupt_point: int) -> SieveReport:
    """Interrupt after chunk `interrupt_point`, then resume to completion"""
    if not config.checkpoint_path:
        raise ConfigError("checkpoint_roundtrip needs a checkpoint path")
    try:
        run_sieve(config, stop_after_chunk=interrupt_point)
    except SieveInterrupted as e:
        logger.info(f"interrupted after chunk {e.chunk_index}; resuming")
    return run_sieve(config)


def gp_statistics(config: SieveConfig) -> GpStatistics:
    """Fraction of candidate primes in range with G_p^2 < p"""
    return run_sieve(replace(config, collect_gp_statistics=True)).gp_statistics


def elimination_fraction(report: SieveReport, test_id: TestId) -> float:
    """Share of the candidate primes eliminated by test_id (first failure attribution)"""
    if report.candidate_prime_count == 0:
        return 0.0
    return report.tally.eliminated.get(TestId(test_id).value, 0) / report.candidate_prime_count


@dataclass(frozen=True)
class TableRow:
    n: int
    p: int
    g_p: int
    delta: Optional[int]
    quotient: Optional[int]
    fact_n_minus_1: Factorization
    fact_n: Factorization
    witness: Optional[Dict] = None

    @property
    def factorizations(self) -> str:
        return f"{self.fact_n_minus_1}, {self.fact_n}"

    @property
    def factorizations_latex(self) -> str:
        return f"{self.fact_n_minus_1.to_latex()},\\ {self.fact_n.to_latex()}"

    def to_dict(self) -> dict:
        data = asdict(self)
        data['fact_n_minus_1'] = str(self.fact_n_minus_1)
        data['fact_n'] = str(self.fact_n)
        return data


@dataclass
class SurvivorTable:
    limit_p: int
    rows: List[TableRow]
    report: SieveReport


def reproduce_table(limit_p: int, worker_count: int = 1, bases: Sequence[int] = DEFAULT_CYCLOTOMIC_BASES,
                    k_max: int = DEFAULT_K_MAX, checkpoint_path: Optional[str] = None) -> SurvivorTable:
    """
    Survivors with 13 < p <= limit_p of the structural pipeline, each with
    delta, (n - delta)/G_p, factorizations of n-1 and n, and the first
    cyclotomic witness that rules it out
    """
    if limit_p > P_CEILING:
        raise ConfigError(f"limit {limit_p} exceeds 10^18")
    n_to = largest_n_below(limit_p)
    if n_to < 4:
        raise ConfigError(f"no candidate with 13 < p <= {limit_p}")
    config = SieveConfig(n_from=4, n_to=n_to, enabled_tests=TABLE_PIPELINE, bases=tuple(bases),
                         k_max=k_max, worker_count=worker_count, checkpoint_path=checkpoint_path)
    report = run_sieve(config)
    rows = []
    for record in report.survivors:
        cand = build_candidate(record.n, record.p)
        verdict = cyclotomic_test(cand, record.gp, config.bases, config.k_max)
        witness = None if verdict.passed else verdict.witness
        rows.append(TableRow(record.n, record.p, record.gp.g_p, record.gp.delta, record.gp.quotient,
                             record.fact_n_minus_1, record.fact_n, witness))
    return SurvivorTable(limit_p, rows, report)
