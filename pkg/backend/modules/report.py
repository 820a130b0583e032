"""
Report renderings: JSON is canonical, CSV and aligned text are projections
"""

import json
import logging
from typing import Optional

import pandas as pd

from modules.errors import ConfigError, ReportIOError
from modules.sieve import GpStatistics, SieveReport, SurvivorTable

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ['n', 'δ', '(n−δ)/G_p', 'n−1, n', 'witness']


def render_json(report: SieveReport, include_runtime: bool = True) -> str:
    return json.dumps(report.to_dict(include_runtime), sort_keys=True, indent=2) + '\n'


def survivors_frame(report: SieveReport) -> pd.DataFrame:
    """One row per survivor and per exempt candidate; witnesses omitted"""
    rows = []
    for kind, records in (('survivor', report.survivors), ('exempt', report.exempt)):
        for r in records:
            rows.append({
                'kind': kind,
                'n': r.n,
                'p': r.p,
                'g_p': r.gp.g_p,
                'delta': r.gp.delta,
                'quotient': r.gp.quotient,
                'fact_n_minus_1': str(r.fact_n_minus_1),
                'fact_n': str(r.fact_n),
                'verdicts': ' '.join(f"{v.test_id.value}:{v.status}" for v in r.verdicts),
            })
    columns = ['kind', 'n', 'p', 'g_p', 'delta', 'quotient', 'fact_n_minus_1', 'fact_n', 'verdicts']
    return pd.DataFrame(rows, columns=columns).astype({'delta': 'Int64', 'quotient': 'Int64'})


def render_csv(report: SieveReport) -> str:
    return survivors_frame(report).to_csv(index=False)


def per_test_frame(report: SieveReport) -> pd.DataFrame:
    total = report.candidate_prime_count
    rows = [{'test': test, 'eliminated': count, 'share': (count / total if total else 0.0)}
            for test, count in report.per_test.items()]
    return pd.DataFrame(rows, columns=['test', 'eliminated', 'share'])


def render_text(report: SieveReport) -> str:
    totals = report.totals()
    lines = [
        f"n range        : {report.config.n_from}..{report.config.n_to} ({totals['range_size']} values)",
        f"pipeline       : {' -> '.join(t.value for t in report.config.enabled_tests) or '(none)'}",
        f"non-prime p    : {totals['non_prime']}",
        f"candidate p    : {totals['candidate_primes']}",
        f"eliminated     : {totals['eliminated']}",
        f"survivors      : {totals['survivors']}",
        f"exempt         : {totals['exempt']}",
    ]
    if report.config.collect_gp_statistics:
        stats = report.gp_statistics
        lines.append(f"G_p < sqrt(p)  : {stats.below}/{stats.total} ({stats.fraction:.6f})")
    frame = per_test_frame(report)
    if not frame.empty:
        lines += ['', frame.to_string(index=False, formatters={'share': '{:.6f}'.format})]
    survivors = survivors_frame(report).drop(columns=['verdicts'])
    if not survivors.empty:
        lines += ['', survivors.to_string(index=False)]
    return '\n'.join(lines) + '\n'


def render_report(report: SieveReport, output_format: Optional[str] = None) -> str:
    fmt = output_format or report.config.output_format
    if fmt == 'json':
        return render_json(report)
    if fmt == 'csv':
        return render_csv(report)
    if fmt == 'text':
        return render_text(report)
    raise ConfigError(f"unknown output format '{fmt}'")


def write_text(path: str, content: str) -> None:
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(content)
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise ReportIOError(f"cannot write {path}: {e}") from e
    logger.info(f"wrote {path}")


def _witness_label(witness: Optional[dict]) -> str:
    if not witness:
        return '-'
    return f"w={witness['base']}, k={witness['k']}"


def table_frame(table: SurvivorTable, latex: bool = False) -> pd.DataFrame:
    rows = []
    for row in table.rows:
        rows.append({
            'n': row.n,
            'δ': row.delta,
            '(n−δ)/G_p': row.quotient,
            'n−1, n': row.factorizations_latex if latex else row.factorizations,
            'witness': _witness_label(row.witness),
        })
    return pd.DataFrame(rows, columns=TABLE_COLUMNS).astype({'δ': 'Int64', '(n−δ)/G_p': 'Int64'})


def render_table(table: SurvivorTable, latex: bool = False) -> str:
    """Survivor table as aligned text, or as LaTeX tabular rows"""
    frame = table_frame(table, latex)
    if not latex:
        if frame.empty:
            return f"no survivors with 13 < p <= {table.limit_p}\n"
        return frame.to_string(index=False) + '\n'
    lines = [f"{r['n']} & {r['δ']} & {r['(n−δ)/G_p']} & ${r['n−1, n']}$ \\\\" for r in frame.to_dict('records')]
    return '\n'.join(lines) + ('\n' if lines else '')


def render_stats(stats: GpStatistics, gcd_fraction: float, candidate_primes: int) -> str:
    lines = [
        f"candidate primes          : {candidate_primes}",
        f"G_p < sqrt(p)             : {stats.below} ({stats.fraction:.6f})"
        + (' [no candidates]' if stats.zero_denominator else ''),
        f"eliminated by GCD test    : {gcd_fraction:.6f}",
    ]
    return '\n'.join(lines) + '\n'
