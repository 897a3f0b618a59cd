from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import comb
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tmbinomial import settings
from tmbinomial.binomial import (
    ENTRY_BYTES,
    FactorOptions,
    binom_words,
    complexity_profile,
    extended_parikh,
    psi_length,
    source_factors,
)
from tmbinomial.core import (
    CircularInterval,
    IntervalKind,
    Letter,
    Morphism,
    MorphicWord,
    Word,
    apply_morphism,
    fixed_point_factors,
    interval_members,
    parikh,
    word_from_text,
    word_to_text,
)
from tmbinomial.errors import BudgetExceededError, NotAFactorError, PreconditionError
from tmbinomial.schemas import (
    ComplexityRow,
    ComplexityTable,
    CounterexampleReport,
    PeriodicityReport,
    Provenance,
)


logger = logging.getLogger(__name__)

ParikhVector = Tuple[int, ...]

COUNTEREXAMPLE_IMAGES = ("012", "210", "120")
# (core, tail) of the two words quoted for the morphism above
COUNTEREXAMPLE_U = ("10122", "21")
COUNTEREXAMPLE_V = ("22101", "12")


@dataclass(frozen=True)
class GTMParams:
    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise PreconditionError(f"generalized Thue-Morse words need m >= 2, got {self.m}")

    def require_binomial2(self) -> None:
        if self.m < 3:
            raise PreconditionError("the 2-binomial closed form needs m >= 3; use the m=2 formula")


@lru_cache(maxsize=None)
def sigma(m: int) -> Morphism:
    GTMParams(m)
    return Morphism(m=m, images=tuple(rotation_word(a, m, m) for a in range(m)))


@lru_cache(maxsize=None)
def thue_morse(m: int) -> MorphicWord:
    return MorphicWord(sigma(m), 0)


def tm_prefix(m: int, min_len: int) -> Word:
    return thue_morse(m).prefix(max(min_len, 1))


def digit_sum_prefix(m: int, length: int) -> Word:
    """t_m(n) is the base-m digit sum of n, reduced mod m."""
    GTMParams(m)
    idx = np.arange(length, dtype=np.int64)
    total = np.zeros(length, dtype=np.int64)
    while idx.any():
        total += idx % m
        idx //= m
    return (total % m).astype(np.uint8).tobytes()


def rotation_word(x: Letter, length: int, m: int) -> Word:
    """x|_length: the letters x, x+1, ... taken mod m."""
    return bytes((x + i) % m for i in range(length))


def _is_rotation_fragment(w: Word, m: int) -> bool:
    if len(w) >= m or (w and max(w) >= m):
        return False
    return all(w[i + 1] == (w[i] + 1) % m for i in range(len(w) - 1))


def in_suffix_set(w: Word, m: int) -> bool:
    """Proper suffixes of the images sigma_m(a), the empty word included."""
    return _is_rotation_fragment(w, m)


def in_prefix_set(w: Word, m: int) -> bool:
    return _is_rotation_fragment(w, m)


def block_fragments_abelian_rigid(m: int) -> bool:
    fragments = [rotation_word(x, ell, m) for ell in range(m) for x in range(m)]
    for a in fragments:
        for b in fragments:
            if len(a) == len(b) and (parikh(a, m) == parikh(b, m)) != (a == b):
                return False
    return True


def abelian_closed(m: int, n: int) -> int:
    GTMParams(m)
    if n < m:
        raise PreconditionError(f"abelian closed form holds for n >= m, got n={n}, m={m}")
    r = n % m
    if m % 2 == 1:
        if r == 0:
            return m * (m * m - 1) // 4 + 1
        return m * (m - 1) ** 2 // 4 + m
    if r == 0:
        return m**3 // 4 + 1
    if r % 2 == 0:
        return m * ((m - 1) ** 2 + 5) // 4
    return m * m * (m - 2) // 4 + m


def binomial2_closed(m: int, n: int) -> int:
    GTMParams(m).require_binomial2()
    if n < m * m:
        raise PreconditionError(f"2-binomial closed form holds for n >= m^2, got n={n}, m={m}")
    if n % m == 0:
        return abelian_closed(m, n // m) + m * (m - 1) * (m * (m - 1) + 1)
    return m**4 - 2 * m**3 + 2 * m * m


def tm2_binomial_closed(k: int, n: int) -> int:
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if n < 2**k:
        raise PreconditionError(f"Thue-Morse k-binomial formula holds for n >= 2^k, got n={n}, k={k}")
    if n % 2**k == 0:
        return 3 * 2**k - 3
    return 3 * 2**k - 4


def closed_form_value(m: int, k: int, n: int) -> int:
    if m == 2:
        return tm2_binomial_closed(k, n)
    if k == 1:
        return abelian_closed(m, n)
    if k == 2:
        return binomial2_closed(m, n)
    raise PreconditionError(f"no closed form for k={k} when m >= 3")


def closed_form_table(m: int, k: int, n_range: Iterable[int]) -> ComplexityTable:
    rows = [
        ComplexityRow(n=n, value=closed_form_value(m, k, n), provenance=Provenance.CLOSED_FORM)
        for n in sorted(set(n_range))
    ]
    return ComplexityTable(m=m, k=k, rows=rows, generator="closed_form", oracle_checked=False)


def _check_parikh(u_parikh: Sequence[int], m: int) -> None:
    if len(u_parikh) != m or any(x < 0 for x in u_parikh):
        raise PreconditionError(f"not a Parikh vector over {m} letters: {tuple(u_parikh)}")


def _check_letters(m: int, *letters: Letter) -> None:
    for a in letters:
        if not 0 <= a < m:
            raise PreconditionError(f"letter {a} outside alphabet of size {m}")


def _between(u_parikh: Sequence[int], c: Letter, d: Letter, m: int) -> int:
    # sum of |u|_x for x in the circular interval (d, c]
    return sum(u_parikh[x] for x in interval_members(CircularInterval(d, c, IntervalKind.HALF_OPEN_LEFT), m))


def binom_sigma_cd(u_parikh: Sequence[int], c: Letter, d: Letter, m: int) -> int:
    """binom(sigma_m(u), cd) from the Parikh vector of u alone."""
    _check_parikh(u_parikh, m)
    _check_letters(m, c, d)
    size = sum(u_parikh)
    if c == d:
        return comb(size, 2)
    return comb(size, 2) + _between(u_parikh, c, d, m)


def binom_decorated(
    alpha: Word,
    u_parikh: Sequence[int],
    u_len: int,
    beta: Word,
    c: Letter,
    d: Letter,
    m: int,
) -> int:
    """binom(alpha . sigma_m(u) . beta, cd) without expanding sigma_m(u)."""
    _check_parikh(u_parikh, m)
    _check_letters(m, c, d)
    if sum(u_parikh) != u_len:
        raise PreconditionError(f"Parikh vector sums to {sum(u_parikh)}, expected {u_len}")
    if not in_suffix_set(alpha, m):
        raise PreconditionError(f"{word_to_text(alpha, m)!r} is not a proper suffix of a block")
    if not in_prefix_set(beta, m):
        raise PreconditionError(f"{word_to_text(beta, m)!r} is not a proper prefix of a block")
    if c == d:
        return comb(alpha.count(c) + u_len + beta.count(c), 2)
    return (
        binom_words(alpha + beta, bytes((c, d)))
        + u_len * (alpha.count(c) + beta.count(d))
        + _between(u_parikh, c, d, m)
        + comb(u_len, 2)
    )


@dataclass(frozen=True, order=True)
class Decomposition:
    alpha: Word
    u_core: Word
    beta: Word

    def expand(self, phi: Morphism) -> Word:
        return self.alpha + apply_morphism(phi, self.u_core) + self.beta

    def structural_key(self, m: int) -> Tuple[Word, Word, ParikhVector]:
        return (self.alpha, self.beta, parikh(self.u_core, m))

    def describe(self, m: int) -> str:
        return "({}, {}, {})".format(
            word_to_text(self.alpha, m) or "e",
            word_to_text(self.u_core, m) or "e",
            word_to_text(self.beta, m) or "e",
        )


def _decompose_at(f: Word, start: int, size: int, inverse: Dict[Word, Letter]) -> Decomposition:
    offset = start % size
    head = 0 if offset == 0 else size - offset
    whole = (len(f) - head) // size
    if whole < 1:
        raise PreconditionError(f"factor of length {len(f)} does not contain a whole block")
    end = head + whole * size
    try:
        core = bytes(inverse[f[i : i + size]] for i in range(head, end, size))
    except KeyError as exc:
        raise PreconditionError("host is not block-aligned") from exc
    return Decomposition(alpha=f[:head], u_core=core, beta=f[end:])


def decompose_with(phi: Morphism, f: Word, hosts: Sequence[Word]) -> FrozenSet[Decomposition]:
    """
    Alignment-induced decompositions of f over every occurrence in the hosts.

    Hosts must be images under phi read from position 0 (a fixed-point prefix or
    covering words), so that blocks start at multiples of the image length.
    """
    size = phi.uniform_length
    if size is None:
        raise PreconditionError("desubstitution needs a uniform morphism")
    inverse = phi.inverse_images()
    found = set()
    for host in hosts:
        start = host.find(f)
        while start != -1:
            found.add(_decompose_at(f, start, size, inverse))
            start = host.find(f, start + 1)
    if not found:
        raise NotAFactorError(f"{word_to_text(f, phi.m)!r} does not occur in the host words")
    return frozenset(found)


def decompose_factor(
    f: Word, m: int, host_prefix: Union[Word, Sequence[Word], None] = None
) -> FrozenSet[Decomposition]:
    if host_prefix is None:
        hosts: Sequence[Word] = thue_morse(m).covering_words(len(f))
    elif isinstance(host_prefix, bytes):
        hosts = (host_prefix,)
    else:
        hosts = host_prefix
    return decompose_with(sigma(m), f, hosts)


def equivalent2_structural(d1: Decomposition, d2: Decomposition, m: int) -> bool:
    if m < 3:
        raise PreconditionError("structural 2-binomial criterion needs m >= 3")
    if min(len(d1.u_core), len(d2.u_core)) < 3:
        raise PreconditionError("structural 2-binomial criterion needs cores of length >= 3")
    for d in (d1, d2):
        if not (in_suffix_set(d.alpha, m) and in_prefix_set(d.beta, m)):
            raise PreconditionError(f"{d.describe(m)} is not a block decomposition")
    return d1.alpha == d2.alpha and d1.beta == d2.beta and parikh(d1.u_core, m) == parikh(d2.u_core, m)


@dataclass(frozen=True)
class CollisionWitness:
    u: Word
    v: Word
    u_decompositions: FrozenSet[Decomposition]
    v_decompositions: FrozenSet[Decomposition]


DecompositionTest = Callable[[FrozenSet[Decomposition], FrozenSet[Decomposition], int], bool]


def structurally_distinct(du: FrozenSet[Decomposition], dv: FrozenSet[Decomposition], m: int) -> bool:
    return {d.structural_key(m) for d in du}.isdisjoint(d.structural_key(m) for d in dv)


def tails_distinct(du: FrozenSet[Decomposition], dv: FrozenSet[Decomposition], m: int) -> bool:
    return {d.beta for d in du}.isdisjoint(d.beta for d in dv)


def find_binomial_collision(
    phi: Morphism,
    seed: Letter,
    n: int,
    k: int = 2,
    differs: DecompositionTest = structurally_distinct,
) -> Optional[CollisionWitness]:
    """
    First pair u < v of length-n factors with equal Psi_k whose decompositions differ.
    """
    source = MorphicWord(phi, seed)
    hosts = source.covering_words(n)
    fs = source.factors(n)
    groups: Dict[bytes, List[Word]] = {}
    keys: Dict[Word, bytes] = {}
    for f in fs:
        keys[f] = extended_parikh(f, k, phi.m).serialize()
        groups.setdefault(keys[f], []).append(f)

    decompositions: Dict[Word, FrozenSet[Decomposition]] = {}

    def decompose(w: Word) -> FrozenSet[Decomposition]:
        if w not in decompositions:
            decompositions[w] = decompose_with(phi, w, hosts)
        return decompositions[w]

    for u in fs:
        group = groups[keys[u]]
        for v in group[group.index(u) + 1 :]:
            if differs(decompose(u), decompose(v), phi.m):
                return CollisionWitness(u, v, decompose(u), decompose(v))
    return None


def counterexample_morphism() -> Morphism:
    return Morphism.from_images(COUNTEREXAMPLE_IMAGES)


def _quoted_word(phi: Morphism, parts: Tuple[str, str]) -> Word:
    core, tail = parts
    return apply_morphism(phi, word_from_text(core)) + word_from_text(tail)


def counterexample_report() -> CounterexampleReport:
    phi = counterexample_morphism()
    u = _quoted_word(phi, COUNTEREXAMPLE_U)
    v = _quoted_word(phi, COUNTEREXAMPLE_V)
    fs = set(fixed_point_factors(phi, 0, len(u)))
    literal = extended_parikh(u, 2, phi.m).counts == extended_parikh(v, 2, phi.m).counts
    logger.info("quoted pair: 2-binomially equivalent=%s", literal)

    report = CounterexampleReport(
        images=list(COUNTEREXAMPLE_IMAGES),
        literal_u=word_to_text(u, phi.m),
        literal_v=word_to_text(v, phi.m),
        literal_equivalent=literal,
        literal_u_is_factor=u in fs,
        literal_v_is_factor=v in fs,
    )
    witness = find_binomial_collision(phi, 0, len(u), 2, differs=tails_distinct)
    if witness is not None:
        report.witness_u = word_to_text(witness.u, phi.m)
        report.witness_v = word_to_text(witness.v, phi.m)
        report.witness_beta_u = word_to_text(min(witness.u_decompositions).beta, phi.m)
        report.witness_beta_v = word_to_text(min(witness.v_decompositions).beta, phi.m)
    return report


def counterexample_check() -> bool:
    """
    True iff the morphism 0->012, 1->210, 2->120 has two 2-binomially equivalent
    factors whose block decompositions end in different tails.
    """
    return counterexample_report().holds


class BoundaryMode(str, Enum):
    PREFIX_LETTER = "prefix_letter"
    SUFFIX_LETTER = "suffix_letter"
    BOTH_LETTERS = "both_letters"


def _check_boundary_args(m: int, n: int, mode: BoundaryMode, a: Letter, b: Optional[Letter]) -> None:
    GTMParams(m)
    _check_letters(m, a)
    if mode is BoundaryMode.BOTH_LETTERS:
        if b is None:
            raise PreconditionError("both_letters mode needs a last letter")
        _check_letters(m, b)
        if n < m + 1:
            raise PreconditionError(f"both_letters mode needs n >= m + 1, got n={n}")
    elif n < m:
        raise PreconditionError(f"{mode.value} mode needs n >= m, got n={n}")


def boundary_parikh_counts(
    m: int,
    n: int,
    mode: Union[BoundaryMode, str],
    a: Letter,
    b: Optional[Letter] = None,
    options: Optional[FactorOptions] = None,
) -> int:
    mode = BoundaryMode(mode)
    _check_boundary_args(m, n, mode, a, b)
    selected = []
    for f in source_factors(thue_morse(m), n, options):
        if mode is BoundaryMode.SUFFIX_LETTER:
            keep = f[-1] == a
        else:
            keep = f[0] == a and (mode is BoundaryMode.PREFIX_LETTER or f[-1] == b)
        if keep:
            selected.append(f)
    return len({parikh(f, m) for f in selected})


def boundary_parikh_closed(
    m: int, n: int, mode: Union[BoundaryMode, str], a: Letter, b: Optional[Letter] = None
) -> int:
    mode = BoundaryMode(mode)
    _check_boundary_args(m, n, mode, a, b)
    if mode is BoundaryMode.BOTH_LETTERS:
        return 1 if (n - (b - a + 1)) % m == 0 else m
    return 1 + m * (m - 1) // 2


def factor_complexity(m: int, n: int) -> int:
    return len(thue_morse(m).factors(n))


def periodicity_check(table: ComplexityTable, period: int, offset: int) -> PeriodicityReport:
    if period < 1:
        raise PreconditionError("period must be positive")
    values = table.as_dict()
    missing = [n for n in range(offset, offset + 2 * period) if n not in values]
    if missing:
        raise PreconditionError(
            f"table must cover [{offset}, {offset + 2 * period}); first missing n={missing[0]}"
        )

    tested = [n for n in sorted(values) if n >= offset and n + period in values]
    violated_at = next((n for n in tested if values[n + period] != values[n]), None)
    hi = max(values)
    return PeriodicityReport(
        period_tested=period,
        offset=offset,
        window=(offset, hi),
        verdict="consistent" if violated_at is None else "violated",
        violated_at=violated_at,
        pairs_compared=len(tested),
        values=table.slice(offset, hi).rows,
    )


def estimate_state_bytes(m: int, k: int, n_max: int, growth_k: Optional[int] = None) -> int:
    growth_k = settings.PREFIX_GROWTH_K if growth_k is None else growth_k
    return psi_length(k, m) * ENTRY_BYTES * max(growth_k * n_max, m**3)


def conjecture_scan(
    m: int,
    k: int,
    n_max: Optional[int] = None,
    budget_mb: Optional[int] = None,
    options: Optional[FactorOptions] = None,
    jobs: int = 1,
) -> PeriodicityReport:
    """
    Numeric evidence for periodicity of b_{t_m,k} with period m^k from offset m^k.

    Report only: a consistent verdict is evidence, not a theorem.
    """
    GTMParams(m)
    if k < 3:
        raise PreconditionError("the scanner is for k >= 3; k = 1, 2 have closed forms")
    period = m**k
    n_max = 3 * period if n_max is None else n_max
    if n_max < 3 * period:
        raise PreconditionError(f"n_max must be at least 3 * m^k = {3 * period}")
    options = options or FactorOptions()
    budget_mb = settings.BUDGET_MB if budget_mb is None else budget_mb

    estimate = estimate_state_bytes(m, k, n_max, options.growth_k)
    logger.info("scan m=%d k=%d n_max=%d: estimated state %d bytes", m, k, n_max, estimate)
    if estimate > budget_mb * 2**20:
        raise BudgetExceededError(
            f"estimated state of {estimate / 2**20:.1f} MB exceeds the {budget_mb} MB budget"
        )

    table = complexity_profile(thue_morse(m), k, m, range(period, n_max + 1), options, jobs)
    report = periodicity_check(table, period, period)
    report.assumptions.append(f"periodicity assumed to start at offset m^k = {period}")
    return report
