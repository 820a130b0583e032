"""
Residue difference sieve - command line front end

Subcommands: sieve, check-n, search, verify, coset-scan, stats, table.
Results go to stdout, logs and errors to stderr as error[CODE]: message.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, NoReturn, Optional, Sequence
import logging

# Add current directory to path
sys.path.insert(0, str(Path(__file__).parent))

from sieve_config import (  # noqa: E402
    configure_logging, get_cyclotomic_defaults, get_search_defaults, get_sieve_defaults,
)
from modules.criteria import Diagnosis, TestId, candidate_from_n, diagnose, replay_witness  # noqa: E402
from modules.errors import EXIT_CONFIG, EXIT_INTERRUPTED, EXIT_OK, NotPrimeError, QrSieveError  # noqa: E402
from modules.report import render_report, render_stats, render_table, write_text  # noqa: E402
from modules.search import (  # noqa: E402
    SearchMode, coset_scan, exhaustive_search, parse_residue_list, verify_candidate_set,
)
from modules.sieve import SieveConfig, elimination_fraction, reproduce_table, run_sieve  # noqa: E402

logger = logging.getLogger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """argparse with the error[CONFIG] prefix and exit code 2"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"error[CONFIG]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _emit(text: str, out: Optional[str] = None) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_sieve(args: argparse.Namespace) -> int:
    config = SieveConfig(
        n_from=args.n_from,
        n_to=args.n_to,
        enabled_tests=args.tests,
        bases=tuple(args.bases),
        k_max=args.k_max,
        worker_count=args.jobs,
        chunk_size=args.chunk,
        checkpoint_path=args.checkpoint,
        output_format=args.format,
    )
    report = run_sieve(config, stop_after_chunk=args.interrupt_after)
    _emit(render_report(report), args.out)
    return EXIT_OK


def _print_diagnosis(diagnosis: Diagnosis, verify_witnesses: bool) -> None:
    cand, gp = diagnosis.candidate, diagnosis.gp
    print(f"n = {cand.n}")
    print(f"p = {cand.p}")
    print(f"n-1 = {cand.fact_n_minus_1}")
    print(f"n = {cand.fact_n}")
    print(f"p-1 = {cand.fact_p_minus_1}")
    print(f"G_p = {gp.g_p}" + (' (convention)' if gp.conventional else ''))
    print(f"delta = {'-' if gp.delta is None else gp.delta}")
    print(f"quotient = {'-' if gp.quotient is None else gp.quotient}")
    for verdict in diagnosis.verdicts:
        witness = json.dumps(verdict.witness, sort_keys=True) if verdict.witness else ''
        line = f"{verdict.test_id.value:<16} {verdict.status:<8} {witness}".rstrip()
        if verify_witnesses and verdict.status == 'FAIL':
            line += f"  replay={'ok' if replay_witness(cand, verdict) else 'MISMATCH'}"
        print(line)
    first = diagnosis.eliminated_by
    print(f"eliminated by: {first.test_id.value if first else '-'}")


def cmd_check_n(args: argparse.Namespace) -> int:
    try:
        cand = candidate_from_n(args.n)
    except NotPrimeError as e:
        print(f"n = {e.n}")
        print(f"p = {e.p} = {e.factorization}")
        raise
    diagnosis = diagnose(cand, args.bases, args.k_max)
    if args.json:
        print(json.dumps(diagnosis.to_dict(), sort_keys=True, indent=2))
    else:
        _print_diagnosis(diagnosis, args.verify_witnesses)
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    solutions = exhaustive_search(args.p, SearchMode(args.mode), bound=args.bound, jobs=args.jobs)
    print(f"p = {args.p}: {len(solutions)} solution set(s) [{args.mode}]")
    for subset in solutions:
        print(subset)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    values = parse_residue_list(args.set)
    result = verify_candidate_set(args.p, values, bound=args.bound)
    print(f"set = {result.subset}")
    print(f"perfect = {str(result.perfect).lower()}")
    if result.perfect:
        group = result.multipliers
        print(f"M_A = {{{','.join(str(m) for m in group.members)}}}")
        print(f"|M_A| = {group.order} ({'odd' if group.is_odd else 'even'})")
        cert = result.certificate
        print(f"nu = {result.nu}")
        print(f"D = {cert.subset}")
        status = 'verified' if cert.verified else f"NOT verified at {cert.offending}"
        print(f"difference set ({cert.v}, {cert.k}, {cert.lam}) {status}")
    return EXIT_OK


def cmd_coset_scan(args: argparse.Namespace) -> int:
    report = coset_scan(args.p, bound=args.bound)
    print(f"p = {report.p}, n = {report.n}, primitive root {report.primitive_root}")
    print(f"subgroup orders scanned: {report.scanned_orders or '-'}; {report.cosets_tested} sets tested")
    for hit in report.hits:
        kind = 'gH+{0}' if hit.with_zero else 'gH'
        print(f"hit: |H|={hit.order} g={hit.generator} {kind} = {hit.subset}")
    if not report.hits:
        print("no hits")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    config = SieveConfig(
        n_from=args.n_from, n_to=args.n_to, enabled_tests=(TestId.PRIMALITY, TestId.GCD),
        worker_count=args.jobs, chunk_size=args.chunk, checkpoint_path=args.checkpoint,
        collect_gp_statistics=True,
    )
    report = run_sieve(config)
    print(render_stats(report.gp_statistics, elimination_fraction(report, TestId.GCD),
                       report.candidate_prime_count), end='')
    return EXIT_OK


def cmd_table(args: argparse.Namespace) -> int:
    table = reproduce_table(args.limit_p, worker_count=args.jobs, bases=args.bases, k_max=args.k_max)
    _emit(render_table(table, latex=args.latex), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    sieve_defaults = get_sieve_defaults()
    cyclotomic = get_cyclotomic_defaults()
    search_defaults = get_search_defaults()

    parser = CliArgumentParser(prog='qrsieve', description='Residue difference sieve')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING, ...')
    parser.add_argument('--log-file', default=None)
    sub = parser.add_subparsers(dest='command', required=True)

    def add_cyclotomic_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument('--bases', type=_int_list, default=cyclotomic['bases'])
        p.add_argument('--k-max', type=int, default=cyclotomic['k_max'])

    def add_jobs_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument('--jobs', type=int, default=sieve_defaults['worker_count'],
                       help='worker processes (default from QRSIEVE_JOBS)')

    p = sub.add_parser('sieve', help='run the criteria pipeline over a range of n')
    p.add_argument('--n-from', type=int, default=sieve_defaults['n_from'])
    p.add_argument('--n-to', type=int, required=True)
    p.add_argument('--tests', default=','.join(sieve_defaults['enabled_tests']))
    add_cyclotomic_flags(p)
    add_jobs_flag(p)
    p.add_argument('--chunk', type=int, default=sieve_defaults['chunk_size'])
    p.add_argument('--checkpoint', default=sieve_defaults['checkpoint_path'])
    p.add_argument('--format', choices=['json', 'csv', 'text'], default=sieve_defaults['output_format'])
    p.add_argument('--out', default=None)
    p.add_argument('--interrupt-after', type=int, default=None, metavar='CHUNK',
                   help='stop with exit 6 once this chunk is checkpointed')
    p.set_defaults(handler=cmd_sieve)

    p = sub.add_parser('check-n', help='every verdict for one n')
    p.add_argument('n', type=int)
    add_cyclotomic_flags(p)
    p.add_argument('--verify-witnesses', action='store_true')
    p.add_argument('--json', action='store_true')
    p.set_defaults(handler=cmd_check_n)

    p = sub.add_parser('search', help='exhaustive search at a small candidate prime')
    p.add_argument('--p', type=int, required=True)
    p.add_argument('--mode', choices=[m.value for m in SearchMode], default=search_defaults['mode'])
    p.add_argument('--bound', type=int, default=search_defaults['bound'])
    add_jobs_flag(p)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser('verify', help='check a set for the perfect residue difference property')
    p.add_argument('--p', type=int, required=True)
    p.add_argument('--set', required=True)
    p.add_argument('--bound', type=int, default=search_defaults['verify_bound'],
                   help='largest p accepted for a set of the full size n')
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('coset-scan', help='test cosets of the subgroups of order n and n-1')
    p.add_argument('--p', type=int, required=True)
    p.add_argument('--bound', type=int, default=search_defaults['bound'])
    p.set_defaults(handler=cmd_coset_scan)

    p = sub.add_parser('stats', help='G_p < sqrt(p) share and GCD elimination share')
    p.add_argument('--n-from', type=int, default=sieve_defaults['n_from'])
    p.add_argument('--n-to', type=int, required=True)
    add_jobs_flag(p)
    p.add_argument('--chunk', type=int, default=sieve_defaults['chunk_size'])
    p.add_argument('--checkpoint', default=None)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser('table', help='survivor table with cyclotomic witnesses')
    p.add_argument('--limit-p', type=int, default=10 ** 12)
    add_cyclotomic_flags(p)
    add_jobs_flag(p)
    p.add_argument('--latex', action='store_true')
    p.add_argument('--out', default=None)
    p.set_defaults(handler=cmd_table)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    if args.log_level and not isinstance(logging.getLevelName(args.log_level.upper()), int):
        print(f"error[CONFIG]: unknown log level '{args.log_level}'", file=sys.stderr)
        return EXIT_CONFIG
    configure_logging(args.log_level, args.log_file)
    try:
        return args.handler(args)
    except QrSieveError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("error[INTERRUPTED]: interrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED


if __name__ == '__main__':
    sys.exit(main())
