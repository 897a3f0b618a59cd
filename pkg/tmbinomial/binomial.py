from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import chain, product
from math import comb
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tmbinomial import settings
from tmbinomial.core import (
    EMPTY,
    MorphicWord,
    Word,
    check_alphabet,
    factors,
    stabilized_prefix,
    window_parikh,
)
from tmbinomial.errors import BinomialOverflowError, PreconditionError
from tmbinomial.schemas import ComplexityRow, ComplexityTable, Provenance


logger = logging.getLogger(__name__)

ENTRY_BYTES = 16
Source = Union[Word, MorphicWord]


def binomial_bound_check(length: int, k: int) -> None:
    """Refuse inputs whose coefficients of length <= k could reach 2^127."""
    if k < 1 or length < 1:
        return
    top = comb(length, min(k, length // 2))
    if top >= settings.BINOMIAL_LIMIT:
        raise BinomialOverflowError(
            f"binomial coefficients of a {length}-letter word up to length {k} exceed 2^127"
        )


def binom_words(u: Word, v: Word) -> int:
    if not v:
        return 1
    if len(v) > len(u):
        return 0
    binomial_bound_check(len(u), len(v))
    ways = [1] + [0] * len(v)
    for a in u:
        for j in range(len(v), 0, -1):
            if v[j - 1] == a:
                ways[j] += ways[j - 1]
    return ways[len(v)]


def psi_length(k: int, m: int) -> int:
    return sum(m**ell for ell in range(1, k + 1))


def psi_words(k: int, m: int) -> List[Word]:
    """Labels of the extended Parikh vector: all words of length 1..k, lexicographic per length."""
    return [bytes(t) for ell in range(1, k + 1) for t in product(range(m), repeat=ell)]


def psi_index(v: Word, m: int) -> int:
    if not v:
        raise PreconditionError("the empty word has no position in the extended Parikh vector")
    check_alphabet(v, m)
    rank = 0
    for a in v:
        rank = rank * m + a
    return psi_length(len(v) - 1, m) + rank


@dataclass(frozen=True)
class ExtendedParikhVector:
    k: int
    m: int
    counts: Tuple[int, ...]

    def __getitem__(self, v: Word) -> int:
        if not v:
            return 1
        if len(v) > self.k:
            raise PreconditionError(f"word of length {len(v)} beyond k={self.k}")
        return self.counts[psi_index(v, self.m)]

    def block(self, ell: int) -> Tuple[int, ...]:
        start = psi_length(ell - 1, self.m)
        return self.counts[start : start + self.m**ell]

    def serialize(self) -> bytes:
        return serialize_psi(self.counts)


def serialize_psi(counts: Iterable[int]) -> bytes:
    return b"".join(c.to_bytes(ENTRY_BYTES, "big") for c in counts)


def extended_parikh(u: Word, k: int, m: int) -> ExtendedParikhVector:
    if k < 1:
        raise PreconditionError("k must be at least 1")
    check_alphabet(u, m)
    binomial_bound_check(len(u), k)

    # levels[ell - 1] holds the coefficients of the m^ell words of length ell.
    levels = [[0] * m**ell for ell in range(1, k + 1)]
    for a in u:
        for ell in range(k - 1, 0, -1):
            shorter, longer = levels[ell - 1], levels[ell]
            # v of rank r extends to v.a of rank r * m + a
            longer[a::m] = [x + y for x, y in zip(longer[a::m], shorter)]
        levels[0][a] += 1
    return ExtendedParikhVector(k=k, m=m, counts=tuple(chain.from_iterable(levels)))


def equivalent_k(u: Word, v: Word, k: int, m: int) -> bool:
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if len(u) != len(v):
        return False
    return extended_parikh(u, k, m).counts == extended_parikh(v, k, m).counts


def count_classes(fs: Iterable[Word], k: int, m: int) -> int:
    words = list(fs)
    if len({len(w) for w in words}) > 1:
        raise PreconditionError("count_classes expects words of one length")
    return len({extended_parikh(w, k, m).serialize() for w in words})


def abelian_classes(hosts: Sequence[Word], n: int, m: int) -> int:
    """Distinct Parikh vectors over all length-n windows of the host words."""
    if n == 0:
        return 1
    blocks = [window_parikh(h, n, m) for h in hosts if len(h) >= n]
    if not blocks:
        return 0
    return int(np.unique(np.vstack(blocks), axis=0).shape[0])


@dataclass(frozen=True)
class FactorOptions:
    strategy: str = settings.STRATEGY
    growth_k: int = settings.PREFIX_GROWTH_K
    max_doublings: int = settings.MAX_DOUBLINGS


def factor_hosts(source: Source, n: int, options: FactorOptions) -> Tuple[Word, ...]:
    """Words whose length-n windows are exactly the length-n factors of the source."""
    if isinstance(source, MorphicWord):
        if options.strategy == "cover":
            return source.covering_words(n)
        if options.strategy == "prefix":
            return (stabilized_prefix(source, n, options.growth_k, options.max_doublings),)
        raise PreconditionError(f"unknown factor strategy {options.strategy!r}")
    # a finite word shorter than n has no windows, so the row counts 0 classes
    return (source,)


def source_factors(source: Source, n: int, options: Optional[FactorOptions] = None) -> List[Word]:
    options = options or FactorOptions()
    if n == 0:
        return [EMPTY]
    found: set[Word] = set()
    for host in factor_hosts(source, n, options):
        found.update(factors(host, n))
    return sorted(found)


def _profile_row(source: Source, k: int, m: int, n: int, options: FactorOptions) -> ComplexityRow:
    if n == 0:
        return ComplexityRow(n=0, value=1)
    if k == 1:
        value = abelian_classes(factor_hosts(source, n, options), n, m)
    else:
        value = count_classes(source_factors(source, n, options), k, m)
    return ComplexityRow(n=n, value=value, provenance=Provenance.ORACLE)


def _profile_row_args(args: Tuple[Source, int, int, int, FactorOptions]) -> ComplexityRow:
    return _profile_row(*args)


def complexity_profile(
    source: Source,
    k: int,
    m: int,
    n_range: Iterable[int],
    options: Optional[FactorOptions] = None,
    jobs: int = 1,
) -> ComplexityTable:
    if k < 1:
        raise PreconditionError("k must be at least 1")
    options = options or FactorOptions()
    if isinstance(source, MorphicWord):
        if source.m != m:
            raise PreconditionError(f"source alphabet {source.m} differs from m={m}")
        generator = "morphism"
    else:
        check_alphabet(source, m)
        generator = "word"
    n_values = sorted(set(n_range))
    if n_values and n_values[0] < 0:
        raise PreconditionError("factor lengths must be non-negative")

    tasks = [(source, k, m, n, options) for n in n_values]
    if jobs > 1 and len(tasks) > 1:
        logger.info("computing %d rows on %d workers", len(tasks), jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_profile_row_args, tasks))
    else:
        rows = [_profile_row(*task) for task in tasks]
    return ComplexityTable(m=m, k=k, rows=rows, generator=generator, oracle_checked=True)
