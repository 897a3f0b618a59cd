from __future__ import annotations

import logging
import random
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from tmbinomial.binomial import (
    FactorOptions,
    binom_words,
    complexity_profile,
    equivalent_k,
    extended_parikh,
    psi_words,
)
from tmbinomial.core import (
    Word,
    apply_morphism,
    boundary_pairs,
    is_cube_free,
    parikh,
    word_to_text,
)
from tmbinomial.errors import PreconditionError
from tmbinomial.schemas import ComplexityTable, RunConfig, VerificationReport
from tmbinomial.tm import (
    BoundaryMode,
    Decomposition,
    GTMParams,
    binom_decorated,
    binom_sigma_cd,
    block_fragments_abelian_rigid,
    boundary_parikh_closed,
    boundary_parikh_counts,
    closed_form_table,
    counterexample_report,
    decompose_with,
    digit_sum_prefix,
    equivalent2_structural,
    factor_complexity,
    periodicity_check,
    rotation_word,
    sigma,
    thue_morse,
    tm_prefix,
)


logger = logging.getLogger(__name__)

RANDOM_INSTANCES = 1000
FORMULA_INSTANCES = 500
SEED = 20240607
GENERATOR_LENGTH = 100_000
CUBE_FREE_LENGTH = 10_000

# Pinned windows; flags may only push the upper end further out.
THM11_ALPHABETS = (3, 4, 5, 6)
THM13_WINDOWS = {3: (9, 54), 4: (16, 48)}
THM12_ALPHABETS = (3, 4)
LEMMA41_WINDOW = (2, 30)
LEMMA42_ALPHABETS = (3, 4)
LEMMA44_ALPHABETS = (3,)
COROLLARY_K2_WINDOWS = {3: (9, 54), 4: (16, 48)}
COROLLARY_K1_WINDOWS = {3: (3, 60)}
THUE_MORSE_KS = (2, 3)
GENERATOR_ALPHABETS = (2, 3, 4, 5, 6)
CUBE_FREE_ALPHABETS = (2, 3, 4, 5)


def _options(config: RunConfig) -> FactorOptions:
    return FactorOptions(
        strategy=config.strategy,
        growth_k=config.prefix_growth_k,
        max_doublings=config.max_doublings,
    )


def _alphabets(default: Sequence[int], config: RunConfig) -> Tuple[int, ...]:
    return (config.m,) if config.m is not None else tuple(default)


def _window(lo: int, hi: int, config: RunConfig) -> range:
    if config.n_hi is not None and config.n_hi > hi:
        hi = config.n_hi
    return range(lo, hi + 1)


def _random_word(rng: random.Random, m: int, length: int) -> Word:
    return bytes(rng.randrange(m) for _ in range(length))


def _table_mismatches(oracle: ComplexityTable, closed: ComplexityTable) -> List[Dict[str, int]]:
    expected = closed.as_dict()
    return [
        {"n": row.n, "oracle": row.value, "closed_form": expected[row.n]}
        for row in oracle.rows
        if row.value != expected[row.n]
    ]


def _compare_with_closed_form(
    report: VerificationReport,
    claim_id: str,
    anchor: str,
    config: RunConfig,
    m: int,
    k: int,
    window: range,
) -> ComplexityTable:
    oracle = complexity_profile(thue_morse(m), k, m, window, _options(config), config.workers)
    report.add(claim_id, anchor, [], _table_mismatches(oracle, closed_form_table(m, k, window)))
    return oracle


def verify_examples(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="examples")
    report.add("examples/binom", "definition example", 3, binom_words(b"\x01\x00\x01\x00\x00\x00", b"\x01\x01\x00"))
    for text in ("010001", "001010"):
        word = bytes(int(ch) for ch in text)
        report.add(f"examples/psi2-{text}", "extended Parikh example", [4, 2, 6, 5, 3, 1], list(extended_parikh(word, 2, 2).counts))
    report.add("examples/sigma3", "morphism definition", ["012", "120", "201"], sigma(3).images_text())
    report.add("examples/t3-prefix", "fixed point", "012120201", word_to_text(tm_prefix(3, 9)[:9], 3))
    report.add("examples/t2-prefix", "fixed point", "01101001", word_to_text(tm_prefix(2, 8)[:8], 2))
    report.add("examples/binom-sigma", "definition", 2, binom_words(apply_morphism(sigma(3), b"\x00\x01"), b"\x02\x00"))

    options = _options(config)
    abelian = complexity_profile(thue_morse(3), 1, 3, range(3, 6), options)
    report.add("examples/t3-abelian", "abelian closed form", [7, 6, 6], [r.value for r in abelian.rows])
    binomial = complexity_profile(thue_morse(3), 2, 3, range(9, 13), options)
    report.add("examples/t3-binomial2", "2-binomial closed form", [49, 45, 45, 48], [r.value for r in binomial.rows])
    classic = complexity_profile(thue_morse(2), 2, 2, (4, 5, 8), options)
    report.add("examples/t2-binomial2", "Thue-Morse k-binomial formula", [9, 8, 9], [r.value for r in classic.rows])
    return report


@lru_cache(maxsize=32)
def _equivalence_pool(m: int, length: int, k: int) -> Tuple[Tuple[Word, ...], ...]:
    """All words of the given length over m letters, grouped by Psi_k."""
    groups: Dict[bytes, List[Word]] = {}
    for index in range(m**length):
        letters = []
        for _ in range(length):
            index, a = divmod(index, m)
            letters.append(a)
        word = bytes(letters)
        groups.setdefault(extended_parikh(word, k, m).serialize(), []).append(word)
    return tuple(tuple(g) for g in groups.values())


@lru_cache(maxsize=16)
def _separated_pairs(m: int, length: int, k: int) -> Tuple[Tuple[Word, Word], ...]:
    """Pairs that are (k-1)-binomially equivalent but not k-binomially equivalent."""
    pairs = []
    for group in _equivalence_pool(m, length, k - 1):
        for u, v in combinations(group, 2):
            if not equivalent_k(u, v, k, m):
                pairs.append((u, v))
    return tuple(pairs)


def _equivalent_partner(rng: random.Random, word: Word, m: int, k: int) -> Word:
    for group in _equivalence_pool(m, len(word), k):
        if word in group:
            return rng.choice(group)
    return word


def verify_lemma24(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="lemma24")
    rng = random.Random(SEED)

    left = right = 0
    for _ in range(RANDOM_INSTANCES):
        m = rng.randint(2, 4)
        u = _random_word(rng, m, rng.randint(0, 29))
        v = _random_word(rng, m, rng.randint(0, 3))
        a, b = rng.randrange(m), rng.randrange(m)
        delta = 1 if a == b else 0
        left += binom_words(bytes([a]) + u, bytes([b]) + v) == binom_words(u, bytes([b]) + v) + delta * binom_words(u, v)
        right += binom_words(u + bytes([a]), v + bytes([b])) == binom_words(u, v + bytes([b])) + delta * binom_words(u, v)
    report.add("lemma24/recurrence-left", "recurrence on a leading letter", RANDOM_INSTANCES, left)
    report.add("lemma24/recurrence-right", "recurrence on a trailing letter", RANDOM_INSTANCES, right)

    concat = 0
    for _ in range(RANDOM_INSTANCES):
        m = rng.randint(2, 4)
        s = _random_word(rng, m, rng.randint(0, 15))
        w = _random_word(rng, m, rng.randint(0, 15))
        t = _random_word(rng, m, rng.randint(0, 4))
        split = sum(binom_words(s, t[:i]) * binom_words(w, t[i:]) for i in range(len(t) + 1))
        concat += binom_words(s + w, t) == split
    report.add("lemma24/concatenation", "coefficient of a concatenation", RANDOM_INSTANCES, concat)

    cancel = 0
    for _ in range(RANDOM_INSTANCES):
        k = rng.randint(1, 3)
        u = _random_word(rng, 3, rng.randint(0, 10))
        v = _random_word(rng, 3, rng.randint(3, 5))
        w = _equivalent_partner(rng, v, 3, k) if rng.random() < 0.5 else _random_word(rng, 3, len(v))
        verdicts = {equivalent_k(v + u, w + u, k, 3), equivalent_k(v, w, k, 3), equivalent_k(u + v, u + w, k, 3)}
        cancel += len(verdicts) == 1
    report.add("lemma24/cancellation", "cancellation on either side", RANDOM_INSTANCES, cancel)

    compose = 0
    for _ in range(RANDOM_INSTANCES):
        m = rng.randint(2, 3)
        k = rng.randint(2, 3)
        candidates = _separated_pairs(m, rng.randint(5, 6) if m == 2 else 4, k) or _separated_pairs(m, 6, k)
        u, u2 = rng.choice(candidates)
        v = _random_word(rng, m, rng.randint(0, 5))
        v2 = _equivalent_partner(rng, v, m, k)
        compose += not equivalent_k(u + v, u2 + v2, k, m)
    report.add("lemma24/composition", "separated prefix stays separated", RANDOM_INSTANCES, compose)

    hierarchy = diagonal = 0
    for _ in range(RANDOM_INSTANCES):
        m = rng.randint(2, 4)
        u = _random_word(rng, m, rng.randint(0, 30))
        v = _equivalent_partner(rng, _random_word(rng, 2, rng.randint(1, 6)), 2, 3)
        partner = _equivalent_partner(rng, v, 2, 3)
        hierarchy += all(equivalent_k(v, partner, ell, 2) for ell in (1, 2, 3))
        a = rng.randrange(m)
        diagonal += binom_words(u, bytes((a, a))) == u.count(a) * (u.count(a) - 1) // 2
    report.add("lemma24/hierarchy", "k-equivalence implies l-equivalence", RANDOM_INSTANCES, hierarchy)
    report.add("lemma24/diagonal", "coefficient of aa", RANDOM_INSTANCES, diagonal)

    incremental = 0
    for _ in range(FORMULA_INSTANCES):
        m = rng.randint(2, 4)
        k = rng.randint(1, 3)
        u = _random_word(rng, m, rng.randint(0, 50))
        psi = extended_parikh(u, k, m)
        naive = tuple(binom_words(u, v) for v in psi_words(k, m))
        incremental += psi.counts == naive and psi.block(1) == parikh(u, m)
    report.add("lemma24/single-pass", "single pass equals pairwise counting", FORMULA_INSTANCES, incremental)
    return report


def verify_eq31(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="eq31")
    rng = random.Random(SEED + 31)
    alphabets = _alphabets((3, 4, 5), config)
    agree = 0
    for _ in range(FORMULA_INSTANCES):
        m = rng.choice(alphabets)
        u = _random_word(rng, m, rng.randint(0, 20))
        image = apply_morphism(sigma(m), u)
        vector = parikh(u, m)
        agree += all(
            binom_sigma_cd(vector, c, d, m) == binom_words(image, bytes((c, d)))
            for c in range(m)
            for d in range(m)
        )
    report.add("eq31/sigma-image", "coefficient of cd in a block image", FORMULA_INSTANCES, agree)
    return report


def verify_eq32(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="eq32")
    rng = random.Random(SEED + 32)
    alphabets = _alphabets((3, 4, 5), config)
    agree = 0
    for _ in range(FORMULA_INSTANCES):
        m = rng.choice(alphabets)
        u = _random_word(rng, m, rng.randint(0, 20))
        alpha = rotation_word(rng.randrange(m), rng.randrange(m), m)
        beta = rotation_word(rng.randrange(m), rng.randrange(m), m)
        c, d = rng.randrange(m), rng.randrange(m)
        expanded = alpha + apply_morphism(sigma(m), u) + beta
        fast = binom_decorated(alpha, parikh(u, m), len(u), beta, c, d, m)
        agree += fast == binom_words(expanded, bytes((c, d)))
    report.add("eq32/decorated-image", "coefficient of cd in a decorated block image", FORMULA_INSTANCES, agree)
    return report


def verify_thm11(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="thm11")
    for m in _alphabets(THM11_ALPHABETS, config):
        window = _window(m, 60 * m, config)
        _compare_with_closed_form(report, f"thm11/m={m}", "abelian complexity closed form", config, m, 1, window)
    return report


def verify_thm13(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="thm13")
    for m in _alphabets(tuple(THM13_WINDOWS), config):
        GTMParams(m).require_binomial2()
        lo, hi = THM13_WINDOWS.get(m, (m * m, 3 * m * m))
        oracle = _compare_with_closed_form(
            report, f"thm13/m={m}", "2-binomial complexity closed form", config, m, 2, _window(lo, hi, config)
        )
        if m == 3:
            report.add("thm13/m=3,n=9", "closed form at n = m^2", 49, oracle.value(9))
            report.add("thm13/m=3,n=10", "closed form off multiples of m", 45, oracle.value(10))
        if m == 4:
            report.add("thm13/m=4,n=16", "closed form at n = m^2", 173, oracle.value(16))
    return report


def _structural_sweep(m: int, n: int) -> Tuple[int, int, int, int]:
    """
    Returns (factor pairs, ambiguous factors, bad reconstructions, disagreements).

    The structural criterion agrees with Psi_2 on every pair exactly when both
    induce the same partition of the factor set, which is checked by counting
    classes of each key and of the joint key.
    """
    phi = sigma(m)
    source = thue_morse(m)
    hosts = source.covering_words(n)
    fs = source.factors(n)

    chosen: Dict[Word, Decomposition] = {}
    ambiguous = bad = 0
    for f in fs:
        found = decompose_with(phi, f, hosts)
        ambiguous += len(found) > 1
        bad += sum(d.expand(phi) != f for d in found)
        chosen[f] = min(found)

    psi = {f: extended_parikh(f, 2, m).serialize() for f in fs}
    structural = {f: chosen[f].structural_key(m) for f in fs}
    classes = (len(set(psi.values())), len(set(structural.values())), len({(psi[f], structural[f]) for f in fs}))
    disagreements = int(len(set(classes)) != 1)

    # direct decider calls: every pair inside a Psi_2 class and every adjacent pair across classes
    by_psi: Dict[bytes, List[Word]] = {}
    for f in fs:
        by_psi.setdefault(psi[f], []).append(f)
    for group in by_psi.values():
        for u, v in combinations(group, 2):
            disagreements += not equivalent2_structural(chosen[u], chosen[v], m)
    for u, v in zip(fs, fs[1:]):
        if psi[u] != psi[v]:
            disagreements += equivalent2_structural(chosen[u], chosen[v], m)
    return len(fs) * (len(fs) - 1) // 2, ambiguous, bad, disagreements


def verify_thm12(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="thm12")
    for m in _alphabets(THM12_ALPHABETS, config):
        if m < 3:
            raise PreconditionError("the structural criterion needs m >= 3")
        for n in _window(5 * m, 8 * m, config):
            pairs, ambiguous, bad, disagreements = _structural_sweep(m, n)
            report.add(f"thm12/m={m},n={n}", "structural criterion agrees with Psi_2", 0, disagreements)
            report.add(f"thm12/m={m},n={n}/unique", "one decomposition per factor", 0, ambiguous)
            report.add(f"thm12/m={m},n={n}/reconstruct", "decomposition rebuilds the factor", 0, bad)
            report.notes.append(f"m={m} n={n}: {pairs} factor pairs checked")

    rng = random.Random(SEED + 12)
    agree = 0
    for _ in range(FORMULA_INSTANCES):
        m = rng.choice(_alphabets(THM12_ALPHABETS, config))
        u = _random_word(rng, m, rng.randint(3, 12))
        v = bytes(rng.sample(list(u), len(u))) if rng.random() < 0.5 else _random_word(rng, m, len(u))
        images = equivalent_k(apply_morphism(sigma(m), u), apply_morphism(sigma(m), v), 2, m)
        agree += images == equivalent_k(u, v, 1, m)
    report.add("thm12/sigma-images", "block images are 2-equivalent iff abelian equivalent", FORMULA_INSTANCES, agree)
    return report


def verify_lemmas4x(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="lemmas4x")
    options = _options(config)
    for m in _alphabets(LEMMA42_ALPHABETS, config):
        source = thue_morse(m)
        short = []
        for n in _window(*LEMMA41_WINDOW, config):
            pairs = frozenset().union(*(boundary_pairs(h, n) for h in source.covering_words(n)))
            if len(pairs) != m * m:
                short.append(n)
        report.add(f"lemmas4x/boundary/m={m}", "every first-last letter pair occurs", [], short)

        wrong = []
        for n in _window(m, 6 * m, config):
            for mode in (BoundaryMode.PREFIX_LETTER, BoundaryMode.SUFFIX_LETTER):
                for a in range(m):
                    if boundary_parikh_counts(m, n, mode, a, options=options) != boundary_parikh_closed(m, n, mode, a):
                        wrong.append(f"{mode.value}:n={n},a={a}")
        report.add(f"lemmas4x/one-letter/m={m}", "Parikh vectors with a fixed end letter", [], wrong)
        report.add(f"lemmas4x/fragments/m={m}", "block fragments are abelian rigid", True, block_fragments_abelian_rigid(m))

    for m in _alphabets(LEMMA44_ALPHABETS, config):
        wrong = []
        for n in _window(m + 1, 5 * m, config):
            for a in range(m):
                for b in range(m):
                    observed = boundary_parikh_counts(m, n, BoundaryMode.BOTH_LETTERS, a, b, options)
                    if observed != boundary_parikh_closed(m, n, BoundaryMode.BOTH_LETTERS, a, b):
                        wrong.append(f"n={n},a={a},b={b}")
        report.add(f"lemmas4x/two-letters/m={m}", "Parikh vectors with both end letters fixed", [], wrong)
    return report


def verify_corollary(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="corollary")
    options = _options(config)
    for m in _alphabets(tuple(COROLLARY_K2_WINDOWS), config):
        for k, windows, period in ((2, COROLLARY_K2_WINDOWS, m * m), (1, COROLLARY_K1_WINDOWS, m)):
            lo, hi = windows.get(m, (period, 3 * period))
            table = complexity_profile(thue_morse(m), k, m, _window(lo, hi, config), options, config.workers)
            periodic = periodicity_check(table, period, period)
            report.add(f"corollary/m={m},k={k}", f"period {period} from n={period}", "consistent", periodic.verdict)
    return report


def verify_counterexample(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="counterexample")
    found = counterexample_report()
    report.notes.append(
        f"quoted pair u={found.literal_u} v={found.literal_v}: 2-binomially equivalent="
        f"{found.literal_equivalent}, u is a factor={found.literal_u_is_factor}, "
        f"v is a factor={found.literal_v_is_factor}"
    )
    report.add("counterexample/witness", "equivalent factors with different tails", True, found.holds)
    if found.witness_u is not None:
        report.notes.append(
            f"witness u={found.witness_u} (tail {found.witness_beta_u or 'e'}), "
            f"v={found.witness_v} (tail {found.witness_beta_v or 'e'})"
        )
        report.add("counterexample/distinct", "witness words differ", True, found.witness_u != found.witness_v)
    return report


def verify_m2_llr20(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="m2-llr20")
    options = _options(config)
    source = thue_morse(2)
    for k in THUE_MORSE_KS:
        period = 2**k
        _compare_with_closed_form(
            report, f"m2-llr20/k={k}", "Thue-Morse k-binomial formula", config, 2, k, _window(period, period + 40, config)
        )
        short = complexity_profile(source, k, 2, range(1, period), options)
        report.add(
            f"m2-llr20/k={k}/short",
            "k-binomial complexity equals factor complexity below 2^k",
            [factor_complexity(2, n) for n in range(1, period)],
            [row.value for row in short.rows],
        )
    return report


def verify_generator(config: RunConfig) -> VerificationReport:
    report = VerificationReport(suite="generator")
    for m in _alphabets(GENERATOR_ALPHABETS, config):
        morphic = tm_prefix(m, GENERATOR_LENGTH)[:GENERATOR_LENGTH]
        digits = digit_sum_prefix(m, GENERATOR_LENGTH)
        mismatch = next((i for i, (x, y) in enumerate(zip(morphic, digits)) if x != y), None)
        report.add(f"generator/m={m}/digit-sum", "morphism prefix equals digit-sum formula", None, mismatch)
        report.add(
            f"generator/m={m}/fixed-point",
            "prefix is a prefix of its image",
            True,
            apply_morphism(sigma(m), morphic)[: len(morphic)] == morphic,
        )
        report.add(f"generator/m={m}/parikh-constant", "images share one Parikh vector", True, sigma(m).parikh_constant)
    for m in _alphabets(CUBE_FREE_ALPHABETS, config):
        report.add(f"generator/m={m}/cube-free", "no cube xxx", True, is_cube_free(tm_prefix(m, CUBE_FREE_LENGTH)[:CUBE_FREE_LENGTH]))
    return report


SUITES: Dict[str, Callable[[RunConfig], VerificationReport]] = {
    "examples": verify_examples,
    "lemma24": verify_lemma24,
    "eq31": verify_eq31,
    "eq32": verify_eq32,
    "thm11": verify_thm11,
    "thm12": verify_thm12,
    "thm13": verify_thm13,
    "lemmas4x": verify_lemmas4x,
    "corollary": verify_corollary,
    "counterexample": verify_counterexample,
    "m2-llr20": verify_m2_llr20,
    "generator": verify_generator,
}


def run_suite(name: str, config: Optional[RunConfig] = None) -> VerificationReport:
    config = config or RunConfig()
    if name == "all":
        combined = VerificationReport(suite="all")
        for suite in SUITES:
            part = run_suite(suite, config)
            combined.records.extend(part.records)
            combined.notes.extend(part.notes)
        return combined
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}")
    logger.info("suite %s started", name)
    report = SUITES[name](config)
    logger.info("suite %s finished: %d records, verdict %s", name, len(report.records), report.verdict)
    return report
