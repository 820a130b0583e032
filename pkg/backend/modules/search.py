"""
Small-scale ground truth: exhaustive search for A in F_p with A - A = R_p
(each quadratic residue exactly once), multiplier subgroups, the
(p, n^2, n(n+1)/2) difference set built from A, and multiplicative coset scans
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import isqrt
from typing import Iterable, List, Optional, Sequence, Set, Tuple
import logging

import numpy as np

from modules.errors import BoundExceededError, CollisionError, ConfigError, NotCandidatePrimeError
from modules.factor import factorize
from modules.modmath import QuadChar, inv_mod, is_prime, legendre, pow_mod, primitive_root

logger = logging.getLogger(__name__)

DEFAULT_SEARCH_BOUND = 10 ** 4
SEARCH_WARNING_THRESHOLD = 10 ** 5
# neighbour masks are precomputed up to this p (about p^2/8 bytes)
NEIGHBOUR_TABLE_LIMIT = 50_000
# largest p for which a length-p residue table is built
RESIDUE_TABLE_LIMIT = 10 ** 7
# verify refuses sets of the full size n above this p
DEFAULT_VERIFY_BOUND = 10 ** 7


class SearchMode(str, Enum):
    ALL = 'all'
    CANONICAL = 'canonical'


@dataclass(frozen=True)
class SubsetFp:
    """Sorted set of residues modulo the prime p"""

    p: int
    elements: Tuple[int, ...]

    @classmethod
    def of(cls, p: int, values: Iterable[int]) -> 'SubsetFp':
        return cls(p, tuple(sorted({v % p for v in values})))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        return x % self.p in self.elements

    def translate(self, c: int) -> 'SubsetFp':
        return SubsetFp.of(self.p, (a + c for a in self.elements))

    def dilate(self, mu: int) -> 'SubsetFp':
        return SubsetFp.of(self.p, (mu * a for a in self.elements))

    def to_list(self) -> List[int]:
        return list(self.elements)

    def __str__(self) -> str:
        return '{' + ','.join(str(a) for a in self.elements) + '}'


@dataclass(frozen=True)
class DiffSetCertificate:
    p: int
    v: int
    k: int
    lam: int
    subset: SubsetFp
    verified: bool
    # first residue whose representation count differs from lam, with that count
    offending: Optional[Tuple[int, int]] = None

    def to_dict(self) -> dict:
        return {
            'p': self.p, 'v': self.v, 'k': self.k, 'lambda': self.lam,
            'set': self.subset.to_list(), 'verified': self.verified,
            'offending': list(self.offending) if self.offending else None,
        }


@dataclass(frozen=True)
class MultiplierSubgroup:
    p: int
    members: Tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.members)

    @property
    def is_odd(self) -> bool:
        return self.order % 2 == 1

    def contains(self, values: Iterable[int]) -> bool:
        members = set(self.members)
        return all(v % self.p in members for v in values)

    def to_dict(self) -> dict:
        return {'p': self.p, 'members': list(self.members), 'order': self.order, 'odd': self.is_odd}


@dataclass(frozen=True)
class CosetHit:
    order: int
    generator: int
    with_zero: bool
    subset: SubsetFp

    def to_dict(self) -> dict:
        return {'order': self.order, 'generator': self.generator,
                'with_zero': self.with_zero, 'set': self.subset.to_list()}


@dataclass
class CosetScanReport:
    p: int
    n: int
    primitive_root: int
    scanned_orders: List[int] = field(default_factory=list)
    cosets_tested: int = 0
    hits: List[CosetHit] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'p': self.p, 'n': self.n, 'primitive_root': self.primitive_root,
            'scanned_orders': self.scanned_orders, 'cosets_tested': self.cosets_tested,
            'hits': [hit.to_dict() for hit in self.hits],
        }


@lru_cache(maxsize=16)
def residue_mask(p: int) -> np.ndarray:
    """
    Boolean table of length p, True exactly on the nonzero squares

    Raises:
        BoundExceededError: if p > RESIDUE_TABLE_LIMIT
    """
    if p > RESIDUE_TABLE_LIMIT:
        raise BoundExceededError(f"p={p} exceeds the residue table limit {RESIDUE_TABLE_LIMIT}")
    mask = np.zeros(p, dtype=bool)
    x = np.arange(1, p, dtype=np.int64)
    mask[(x * x) % p] = True
    mask.setflags(write=False)
    return mask


def candidate_n_for(p: int) -> int:
    """
    The n with p = 2n(n-1)+1

    Raises:
        NotCandidatePrimeError: if p is not a prime of that form
    """
    if p < 5 or not is_prime(p):
        raise NotCandidatePrimeError(f"{p} is not a candidate prime (not prime)")
    n = (1 + isqrt(2 * p - 1)) // 2
    if 2 * n * (n - 1) + 1 != p:
        raise NotCandidatePrimeError(f"{p} is not of the form 2n(n-1)+1")
    return n


def _off_diagonal_differences(subset: SubsetFp) -> np.ndarray:
    arr = np.array(subset.elements, dtype=np.int64)
    diffs = np.subtract.outer(arr, arr) % subset.p
    return diffs[~np.eye(arr.size, dtype=bool)]


def is_perfect_qr_difference(subset: SubsetFp) -> bool:
    """True iff the ordered differences are distinct quadratic residues covering R_p"""
    k = len(subset)
    p = subset.p
    if k < 2 or k * (k - 1) != (p - 1) // 2:
        return False
    diffs = _off_diagonal_differences(subset)
    if np.unique(diffs).size != diffs.size:
        return False
    if p <= RESIDUE_TABLE_LIMIT:
        return bool(residue_mask(p)[diffs].all())
    return all(legendre(int(d), p) is QuadChar.RESIDUE for d in diffs)


class ResidueGraph:
    """Paley graph on F_p as Python-int bitsets: y ~ x iff y - x is a square"""

    def __init__(self, p: int):
        self.p = p
        self.full = (1 << p) - 1
        packed = np.packbits(residue_mask(p), bitorder='little')
        self.residues = int.from_bytes(packed.tobytes(), 'little')
        self._table = None
        self._inverses = None
        if p <= NEIGHBOUR_TABLE_LIMIT:
            self._table = [self._rotate(x) for x in range(p)]
            inverses = [0, 1] + [0] * (p - 2)
            for i in range(2, p):
                inverses[i] = (p - (p // i) * inverses[p % i] % p) % p
            self._inverses = inverses

    def inverse(self, d: int) -> int:
        if self._inverses is not None:
            return self._inverses[d]
        return inv_mod(d, self.p)

    def _rotate(self, x: int) -> int:
        r = self.residues
        return ((r << x) | (r >> (self.p - x))) & self.full

    def neighbours(self, x: int) -> int:
        if self._table is not None:
            return self._table[x]
        return self._rotate(x)

    def above(self, x: int) -> int:
        """Bitset of residues strictly greater than x"""
        return self.full & ~((1 << (x + 1)) - 1)

    def may_hold_clique(self, pool: int, size: int) -> bool:
        """Greedy colouring bound: False proves pool has no clique of `size`"""
        colours = 0
        uncoloured = pool
        while uncoloured:
            colours += 1
            if colours >= size:
                return True
            q = uncoloured
            while q:
                low = q & -q
                uncoloured ^= low
                q ^= low
                q &= ~self.neighbours(low.bit_length() - 1)
        return False


def _mark_new_differences(x: int, elements: Sequence[int], used: bytearray, p: int) -> Optional[List[int]]:
    """Mark the differences of x against elements (all below x); None on reuse"""
    marked = []
    for a in elements:
        d = x - a
        if used[d] or used[p - d]:
            for e in marked:
                used[e] = used[p - e] = 0
            return None
        used[d] = used[p - d] = 1
        marked.append(d)
    return marked


def _beats_third(graph: ResidueGraph, elements: Sequence[int], x: int, third: int) -> bool:
    """
    True if adding x yields another normal form with a known element in (1, third)

    Each ordered pair (a, b) of a solution sends it to a normal form through
    c -> (c - a) / (b - a), which contains 0 and 1. Every image computed here
    is a member of such a normal form, so a set whose third element is least
    over all its normal forms is never cut.
    """
    p = graph.p
    members = list(elements) + [x]
    for a in elements:
        for lo, hi in ((a, x), (x, a)):
            scale = graph.inverse((hi - lo) % p)
            for c in members:
                if 1 < (c - lo) * scale % p < third:
                    return True
    for a in elements:
        for b in elements:
            if a != b and 1 < (x - a) * graph.inverse((b - a) % p) % p < third:
                return True
    return False


def _extend(graph: ResidueGraph, n: int, elements: List[int], used: bytearray,
            pool: int, solutions: List[Tuple[int, ...]]) -> None:
    need = n - len(elements)
    if need == 0:
        solutions.append(tuple(elements))
        return
    if pool.bit_count() < need:
        return
    if need > 1 and not graph.may_hold_clique(pool, need):
        return
    p = graph.p
    while pool:
        low = pool & -pool
        pool ^= low
        x = low.bit_length() - 1
        marked = _mark_new_differences(x, elements, used, p)
        if marked is not None:
            if not _beats_third(graph, elements, x, elements[2]):
                elements.append(x)
                _extend(graph, n, elements, used, pool & graph.neighbours(x), solutions)
                elements.pop()
            for d in marked:
                used[d] = used[p - d] = 0
        if pool.bit_count() < need:
            break


def _search_branch(graph: ResidueGraph, n: int, prefix: Tuple[int, ...]) -> List[Tuple[int, ...]]:
    """All solutions of size n extending the increasing prefix (which contains 0, 1)"""
    p = graph.p
    used = bytearray(p)
    for i, x in enumerate(prefix):
        if _mark_new_differences(x, prefix[:i], used, p) is None:
            return []
    pool = graph.above(prefix[-1])
    for a in prefix:
        pool &= graph.neighbours(a)
    solutions: List[Tuple[int, ...]] = []
    _extend(graph, n, list(prefix), used, pool, solutions)
    return solutions


_WORKER_GRAPH: Optional[ResidueGraph] = None


def _init_worker(p: int) -> None:
    global _WORKER_GRAPH
    _WORKER_GRAPH = ResidueGraph(p)


def _worker_branch(args: Tuple[int, Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    n, prefix = args
    return _search_branch(_WORKER_GRAPH, n, prefix)


def _normalised_solutions(p: int, n: int, jobs: int) -> List[Tuple[int, ...]]:
    """At least one solution containing 0 and 1 from every affine orbit"""
    graph = ResidueGraph(p)
    if n == 2:
        return _search_branch(graph, n, (0, 1))
    if not graph.residues & 2:
        return []
    root_pool = graph.residues & graph.neighbours(1) & graph.above(1)
    thirds = [x for x in range(2, p) if root_pool >> x & 1 and not _beats_third(graph, (0, 1), x, x)]
    tasks = [(n, (0, 1, x)) for x in thirds]
    logger.info(f"search p={p} n={n}: {len(tasks)} branches on {jobs} worker(s)")
    if jobs <= 1 or len(tasks) < 2:
        found = [s for _, prefix in tasks for s in _search_branch(graph, n, prefix)]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(p,)) as executor:
            found = [s for branch in executor.map(_worker_branch, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
                     for s in branch]
    return sorted(found)


def affine_orbit(subset: SubsetFp) -> Set[Tuple[int, ...]]:
    """Images of subset under a -> mu*a + c with mu a nonzero square"""
    p = subset.p
    residues = np.flatnonzero(residue_mask(p))
    base = np.array(subset.elements, dtype=np.int64)
    orbit = set()
    shifts = np.arange(p, dtype=np.int64)[:, None]
    for mu in residues:
        images = np.sort((mu * base[None, :] + shifts) % p, axis=1)
        orbit.update(map(tuple, images.tolist()))
    return orbit


def exhaustive_search(p: int, mode: SearchMode = SearchMode.CANONICAL,
                      bound: int = DEFAULT_SEARCH_BOUND, jobs: int = 1) -> List[SubsetFp]:
    """
    Every A in F_p with A - A hitting each quadratic residue exactly once

    Backtracks over sets containing 0 and 1 (translation plus dilation by a
    residue reaches that normal form), then expands the affine orbits.

    Args:
        p: candidate prime 2n(n-1)+1
        mode: ALL lists every solution set, CANONICAL the least set per orbit
        bound: refuse p above this
        jobs: worker processes for the branch split

    Returns:
        Sorted list of solution sets
    """
    mode = SearchMode(mode)
    if p > bound:
        raise BoundExceededError(f"p={p} exceeds the search bound {bound}")
    n = candidate_n_for(p)
    if p > SEARCH_WARNING_THRESHOLD:
        logger.warning(f"exhaustive search at p={p} may run for a very long time")
    normalised = _normalised_solutions(p, n, jobs)
    results: Set[Tuple[int, ...]] = set()
    seen: Set[Tuple[int, ...]] = set()
    for elements in normalised:
        if elements in seen:
            continue
        orbit = affine_orbit(SubsetFp(p, elements))
        seen |= orbit
        if mode is SearchMode.ALL:
            results |= orbit
        else:
            results.add(min(orbit))
    logger.info(f"search p={p} mode={mode.value}: {len(results)} solution set(s)")
    return [SubsetFp(p, elements) for elements in sorted(results)]


def _require_subgroup(p: int, members: Sequence[int]) -> None:
    group = set(members)
    if 1 not in group or (p - 1) % len(group):
        raise RuntimeError(f"multiplier set mod {p} is not a subgroup: {sorted(group)}")
    for a in members:
        for b in members:
            if a * b % p not in group:
                raise RuntimeError(f"multiplier set mod {p} not closed: {a}*{b}")


def multiplier_subgroup(subset: SubsetFp) -> MultiplierSubgroup:
    """
    All mu in F_p^x with mu*A = A + g for some g

    For |A| prime to p the shift is forced by the element sums:
    g = (mu - 1) * sum(A) / |A|.
    """
    p = subset.p
    k = len(subset)
    if k == 0:
        raise ValueError("multiplier subgroup of the empty set")
    if k % p == 0:
        members = tuple(range(1, p))
    else:
        total = sum(subset.elements) % p
        inv_k = inv_mod(k, p)
        members_list = []
        for mu in range(1, p):
            g = (mu - 1) * total * inv_k % p
            if all((mu * a - g) % p in subset for a in subset.elements):
                members_list.append(mu)
        members = tuple(members_list)
    _require_subgroup(p, members)
    return MultiplierSubgroup(p, members)


def translate_to_zero_sum(subset: SubsetFp) -> SubsetFp:
    """The translate of A whose elements add up to 0 mod p"""
    p = subset.p
    g = sum(subset.elements) * inv_mod(len(subset), p) % p
    return subset.translate(-g)


def coset_decomposition(subset: SubsetFp) -> Tuple[bool, List[SubsetFp]]:
    """
    Split the zero-sum translate of A, minus 0, into cosets of M_A

    Returns:
        (whether 0 belongs to the translate, list of cosets)
    """
    p = subset.p
    zero_sum = translate_to_zero_sum(subset)
    group = multiplier_subgroup(subset)
    rest = set(zero_sum.elements)
    has_zero = 0 in rest
    rest.discard(0)
    cosets = []
    while rest:
        x = min(rest)
        coset = SubsetFp.of(p, (x * m for m in group.members))
        if not set(coset.elements) <= rest:
            raise RuntimeError(f"{zero_sum} is not fixed by its multipliers")
        rest -= set(coset.elements)
        cosets.append(coset)
    return has_zero, cosets


def smallest_non_residue(p: int) -> int:
    for x in range(2, p):
        if legendre(x, p) == QuadChar.NON_RESIDUE:
            return x
    raise ValueError(f"no quadratic non-residue modulo {p}")


def build_claim_diff_set(subset: SubsetFp, nu: int) -> SubsetFp:
    """
    D = {a' + nu*a''} for a non-residue nu; all n^2 sums must be distinct

    Raises:
        CollisionError: with the two colliding pairs
    """
    p = subset.p
    if legendre(nu, p) != QuadChar.NON_RESIDUE:
        raise ValueError(f"nu={nu} is not a quadratic non-residue mod {p}")
    sums = {}
    for a1 in subset.elements:
        for a2 in subset.elements:
            s = (a1 + nu * a2) % p
            if s in sums:
                pairs = [list(sums[s]), [a1, a2]]
                raise CollisionError(f"sum {s} arises from {pairs[0]} and {pairs[1]}", pairs)
            sums[s] = (a1, a2)
    return SubsetFp.of(p, sums)


def verify_difference_set(subset: SubsetFp, k: int, lam: int) -> DiffSetCertificate:
    """Histogram the ordered differences; every nonzero residue must occur lam times"""
    p = subset.p
    if len(subset) != k:
        raise ValueError(f"set has {len(subset)} elements, expected k={k}")
    counts = np.bincount(_off_diagonal_differences(subset), minlength=p)[1:]
    bad = np.flatnonzero(counts != lam)
    offending = None
    if bad.size:
        offending = (int(bad[0]) + 1, int(counts[bad[0]]))
    return DiffSetCertificate(p, p, k, lam, subset, offending is None, offending)


def coset_scan(p: int, bound: int = DEFAULT_SEARCH_BOUND) -> CosetScanReport:
    """
    Test every coset gH, and gH with 0 added, for H of order n and n-1

    Cosets run over the transversal g = r^j, r the least primitive root.

    Raises:
        BoundExceededError: if p > bound
    """
    if p > bound:
        raise BoundExceededError(f"p={p} exceeds the coset scan bound {bound}")
    n = candidate_n_for(p)
    fact = factorize(p - 1)
    root = primitive_root(p, fact)
    report = CosetScanReport(p, n, root)
    for order in sorted({n, n - 1}):
        if (p - 1) % order:
            continue
        report.scanned_orders.append(order)
        index = (p - 1) // order
        subgroup = [pow_mod(root, index * i, p) for i in range(order)]
        for j in range(index):
            g = pow_mod(root, j, p)
            coset = SubsetFp.of(p, (g * h for h in subgroup))
            for with_zero in (False, True):
                candidate = SubsetFp.of(p, coset.elements + (0,)) if with_zero else coset
                report.cosets_tested += 1
                if is_perfect_qr_difference(candidate):
                    report.hits.append(CosetHit(order, g, with_zero, candidate))
    logger.info(f"coset scan p={p}: {report.cosets_tested} sets, {len(report.hits)} hit(s)")
    return report


def parse_residue_list(text: str) -> List[int]:
    """
    Comma-separated integers, whitespace tolerated

    Raises:
        ConfigError: on an empty list or a non-integer entry
    """
    parts = [part.strip() for part in str(text).split(',')]
    if not any(parts):
        raise ConfigError("empty set")
    values = []
    for part in parts:
        if not part:
            raise ConfigError(f"empty entry in set '{text}'")
        try:
            values.append(int(part))
        except ValueError:
            raise ConfigError(f"'{part}' is not an integer") from None
    return values


@dataclass(frozen=True)
class VerificationResult:
    p: int
    n: int
    subset: SubsetFp
    perfect: bool
    multipliers: Optional[MultiplierSubgroup] = None
    nu: Optional[int] = None
    certificate: Optional[DiffSetCertificate] = None

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'n': self.n,
            'set': self.subset.to_list(),
            'perfect': self.perfect,
            'multipliers': self.multipliers.to_dict() if self.multipliers else None,
            'nu': self.nu,
            'certificate': self.certificate.to_dict() if self.certificate else None,
        }


def verify_candidate_set(p: int, values: Sequence[int], bound: int = DEFAULT_VERIFY_BOUND) -> VerificationResult:
    """
    Check a user-supplied set for the perfect residue difference property;
    on success add M_A and the difference-set certificate for the least
    non-residue

    A set whose size is not n is rejected for any p without building tables.

    Raises:
        NotCandidatePrimeError: if p is not 2n(n-1)+1 and prime
        BoundExceededError: if the set has n elements and p > bound
    """
    n = candidate_n_for(p)
    out_of_range = [v for v in values if not 0 <= v < p]
    if out_of_range:
        logger.warning(f"reducing {out_of_range} modulo {p}")
    subset = SubsetFp.of(p, values)
    if len(subset) < len(values):
        logger.warning(f"{len(values) - len(subset)} duplicate value(s) dropped after reduction mod {p}")
    if len(subset) == n and p > bound:
        raise BoundExceededError(f"p={p} exceeds the verify bound {bound} for a set of size n={n}")
    if not is_perfect_qr_difference(subset):
        return VerificationResult(p, n, subset, False)
    group = multiplier_subgroup(subset)
    nu = smallest_non_residue(p)
    claim = build_claim_diff_set(subset, nu)
    certificate = verify_difference_set(claim, n * n, n * (n + 1) // 2)
    return VerificationResult(p, n, subset, True, group, nu, certificate)
