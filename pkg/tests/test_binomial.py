import random
from math import comb

import pytest

from tmbinomial.binomial import (
    FactorOptions,
    binom_words,
    complexity_profile,
    count_classes,
    equivalent_k,
    extended_parikh,
    psi_index,
    psi_words,
    serialize_psi,
)
from tmbinomial.core import apply_morphism, parikh, word_from_text
from tmbinomial.errors import BinomialOverflowError, InsufficientPrefixError, PreconditionError
from tmbinomial.schemas import Provenance
from tmbinomial.tm import sigma, thue_morse


def _w(text: str) -> bytes:
    return word_from_text(text)


def _random_word(rng: random.Random, m: int, length: int) -> bytes:
    return bytes(rng.randrange(m) for _ in range(length))


def test_binom_words_examples():
    assert binom_words(_w("101000"), _w("110")) == 3
    assert binom_words(_w("101000"), b"") == 1
    assert binom_words(b"", b"") == 1
    assert binom_words(_w("01"), _w("012")) == 0
    assert binom_words(apply_morphism(sigma(3), _w("01")), _w("20")) == 2


def test_binom_words_refuses_overflow():
    with pytest.raises(BinomialOverflowError):
        binom_words(bytes(200), bytes(100))
    with pytest.raises(BinomialOverflowError):
        extended_parikh(bytes(1000), 20, 2)


def test_extended_parikh_examples():
    assert extended_parikh(_w("010001"), 2, 2).counts == (4, 2, 6, 5, 3, 1)
    assert extended_parikh(_w("001010"), 2, 2).counts == (4, 2, 6, 5, 3, 1)
    assert extended_parikh(b"", 3, 2).counts == (0,) * 14


def test_extended_parikh_lookup_and_blocks():
    psi = extended_parikh(_w("0120"), 2, 3)
    assert psi[_w("0")] == 2
    assert psi[_w("20")] == 1
    assert psi[b""] == 1
    assert psi.block(1) == (2, 1, 1)
    assert len(psi.block(2)) == 9


def test_psi_labels():
    assert psi_words(2, 2) == [_w("0"), _w("1"), _w("00"), _w("01"), _w("10"), _w("11")]
    assert psi_index(_w("10"), 2) == 4
    assert psi_index(_w("2"), 3) == 2
    with pytest.raises(PreconditionError):
        psi_index(b"", 2)


def test_serialization_is_fixed_width_big_endian():
    assert serialize_psi((1,)) == bytes(15) + b"\x01"
    assert len(extended_parikh(_w("0110"), 2, 2).serialize()) == 6 * 16


def test_single_pass_matches_pairwise_counting():
    rng = random.Random(7)
    for _ in range(300):
        m = rng.randint(2, 4)
        k = rng.randint(1, 3)
        u = _random_word(rng, m, rng.randint(0, 50))
        psi = extended_parikh(u, k, m)
        assert psi.counts == tuple(binom_words(u, v) for v in psi_words(k, m))
        assert psi.block(1) == parikh(u, m)


def test_diagonal_entries():
    rng = random.Random(11)
    for _ in range(200):
        m = rng.randint(2, 4)
        u = _random_word(rng, m, rng.randint(0, 30))
        psi = extended_parikh(u, 2, m)
        for a in range(m):
            assert psi[bytes((a, a))] == comb(u.count(a), 2)


def test_recurrence_on_first_and_last_letter():
    rng = random.Random(13)
    for _ in range(300):
        m = rng.randint(2, 4)
        u = _random_word(rng, m, rng.randint(0, 29))
        v = _random_word(rng, m, rng.randint(0, 3))
        a, b = rng.randrange(m), rng.randrange(m)
        delta = int(a == b)
        assert binom_words(bytes([a]) + u, bytes([b]) + v) == binom_words(u, bytes([b]) + v) + delta * binom_words(u, v)
        assert binom_words(u + bytes([a]), v + bytes([b])) == binom_words(u, v + bytes([b])) + delta * binom_words(u, v)


def test_concatenation_identity():
    rng = random.Random(17)
    for _ in range(300):
        s = _random_word(rng, 3, rng.randint(0, 12))
        w = _random_word(rng, 3, rng.randint(0, 12))
        t = _random_word(rng, 3, rng.randint(0, 4))
        expected = sum(binom_words(s, t[:i]) * binom_words(w, t[i:]) for i in range(len(t) + 1))
        assert binom_words(s + w, t) == expected


def test_equivalence_examples():
    assert equivalent_k(_w("010001"), _w("001010"), 2, 2)
    assert equivalent_k(_w("0120"), _w("0120"), 3, 3)
    assert not equivalent_k(_w("01"), _w("10"), 2, 2)
    assert equivalent_k(_w("01"), _w("10"), 1, 2)
    assert not equivalent_k(_w("01"), _w("011"), 1, 2)


def test_equivalence_is_hierarchical():
    u, v = _w("010001"), _w("001010")
    assert equivalent_k(u, v, 2, 2)
    assert equivalent_k(u, v, 1, 2)
    assert not equivalent_k(u + _w("1"), v + _w("0"), 1, 2)


def test_count_classes():
    assert count_classes([_w("0120")], 2, 3) == 1
    assert count_classes(thue_morse(2).factors(4), 2, 2) == 9
    assert count_classes(thue_morse(2).factors(5), 2, 2) == 8
    assert count_classes(thue_morse(3).factors(10), 2, 3) == 45
    with pytest.raises(PreconditionError):
        count_classes([_w("0"), _w("01")], 1, 2)


def test_complexity_profile_of_t3():
    table = complexity_profile(thue_morse(3), 1, 3, range(3, 6))
    assert [(r.n, r.value) for r in table.rows] == [(3, 7), (4, 6), (5, 6)]
    assert all(r.provenance is Provenance.ORACLE for r in table.rows)
    assert table.oracle_checked


def test_complexity_profile_trivial_and_classic():
    assert complexity_profile(thue_morse(3), 2, 3, [0]).value(0) == 1
    assert complexity_profile(thue_morse(2), 2, 2, [8]).value(8) == 9


def test_complexity_profile_of_finite_word():
    table = complexity_profile(_w("0110"), 1, 2, range(0, 6))
    assert table.generator == "word"
    assert [r.value for r in table.rows] == [1, 2, 2, 1, 1, 0]


def test_prefix_strategy_matches_cover():
    cover = complexity_profile(thue_morse(3), 2, 3, range(9, 13))
    prefix = complexity_profile(thue_morse(3), 2, 3, range(9, 13), FactorOptions(strategy="prefix"))
    assert cover.rows == prefix.rows
    assert [r.value for r in cover.rows] == [49, 45, 45, 48]


def test_parallel_profile_matches_sequential():
    sequential = complexity_profile(thue_morse(3), 2, 3, range(9, 15))
    parallel = complexity_profile(thue_morse(3), 2, 3, range(9, 15), jobs=2)
    assert parallel == sequential


def test_profile_reports_stabilization_failure():
    options = FactorOptions(strategy="prefix", max_doublings=0)
    with pytest.raises(InsufficientPrefixError) as excinfo:
        complexity_profile(thue_morse(3), 2, 3, [10], options)
    assert excinfo.value.n == 10
