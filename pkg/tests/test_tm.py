from itertools import combinations

import pytest

from tmbinomial.binomial import equivalent_k, extended_parikh
from tmbinomial.core import apply_morphism, fixed_point_factors, parikh, word_from_text
from tmbinomial.errors import BudgetExceededError, NotAFactorError, PreconditionError
from tmbinomial.schemas import ComplexityRow, ComplexityTable
from tmbinomial.tm import (
    BoundaryMode,
    Decomposition,
    abelian_closed,
    binom_decorated,
    binom_sigma_cd,
    binomial2_closed,
    block_fragments_abelian_rigid,
    boundary_parikh_closed,
    boundary_parikh_counts,
    closed_form_table,
    conjecture_scan,
    counterexample_check,
    counterexample_morphism,
    counterexample_report,
    decompose_factor,
    digit_sum_prefix,
    equivalent2_structural,
    factor_complexity,
    find_binomial_collision,
    in_prefix_set,
    in_suffix_set,
    periodicity_check,
    rotation_word,
    sigma,
    thue_morse,
    tm2_binomial_closed,
    tm_prefix,
)


def _w(text: str) -> bytes:
    return word_from_text(text)


def _table(values: dict) -> ComplexityTable:
    return ComplexityTable(m=3, k=2, rows=[ComplexityRow(n=n, value=v) for n, v in sorted(values.items())])


def test_sigma_images():
    assert sigma(3).images_text() == ["012", "120", "201"]
    assert sigma(2).images_text() == ["01", "10"]
    with pytest.raises(PreconditionError):
        sigma(1)


def test_tm_prefix_examples():
    assert tm_prefix(3, 9)[:9] == _w("012120201")
    assert tm_prefix(2, 8)[:8] == _w("01101001")
    assert tm_prefix(5, 1)[0] == 0


def test_digit_sum_generator_agrees_with_morphism():
    for m in range(2, 7):
        assert tm_prefix(m, 5000)[:5000] == digit_sum_prefix(m, 5000)


def test_abelian_closed_form():
    assert abelian_closed(3, 9) == 7
    assert abelian_closed(3, 10) == 6
    assert abelian_closed(4, 8) == 17
    assert abelian_closed(4, 9) == 12
    assert abelian_closed(4, 10) == 14
    with pytest.raises(PreconditionError):
        abelian_closed(4, 3)


def test_binomial2_closed_form():
    assert binomial2_closed(3, 10) == 45
    assert binomial2_closed(3, 9) == 49
    assert binomial2_closed(3, 12) == 48
    assert binomial2_closed(4, 16) == 173
    with pytest.raises(PreconditionError):
        binomial2_closed(2, 8)
    with pytest.raises(PreconditionError):
        binomial2_closed(3, 8)


def test_thue_morse_closed_form():
    assert tm2_binomial_closed(2, 8) == 9
    assert tm2_binomial_closed(2, 5) == 8
    assert tm2_binomial_closed(3, 16) == 21
    with pytest.raises(PreconditionError):
        tm2_binomial_closed(3, 7)


def test_closed_form_table_routes_by_alphabet():
    assert [r.value for r in closed_form_table(3, 2, range(9, 13)).rows] == [49, 45, 45, 48]
    assert [r.value for r in closed_form_table(2, 2, [4, 5]).rows] == [9, 8]
    with pytest.raises(PreconditionError):
        closed_form_table(3, 3, [27])


def test_binom_sigma_cd_examples():
    assert binom_sigma_cd((1, 1, 0), 2, 0, 3) == 2
    assert binom_sigma_cd((0, 0, 0), 1, 2, 3) == 0
    assert binom_sigma_cd((1, 0, 0), 1, 0, 3) == 0
    assert binom_sigma_cd((2, 1, 0), 1, 1, 3) == 3


def test_binom_sigma_cd_matches_expansion():
    u = _w("2103012")
    image = apply_morphism(sigma(4), u)
    for c in range(4):
        for d in range(4):
            expected = len([1 for i in range(len(image)) for j in range(i + 1, len(image)) if image[i] == c and image[j] == d])
            assert binom_sigma_cd(parikh(u, 4), c, d, 4) == expected


def test_binom_decorated_examples():
    assert binom_decorated(_w("2"), (0, 1, 0), 1, _w("0"), 2, 0, 3) == 4
    u = _w("0112")
    assert binom_decorated(b"", parikh(u, 3), 4, b"", 1, 0, 3) == binom_sigma_cd(parikh(u, 3), 1, 0, 3)
    with pytest.raises(PreconditionError):
        binom_decorated(_w("02"), (1, 0, 0), 1, b"", 1, 0, 3)


def test_block_fragments():
    assert rotation_word(2, 3, 3) == _w("201")
    assert in_suffix_set(_w("12"), 3)
    assert in_prefix_set(b"", 3)
    assert not in_suffix_set(_w("21"), 3)
    assert not in_prefix_set(_w("012"), 3)
    for m in (3, 4, 5):
        assert block_fragments_abelian_rigid(m)


def test_decompose_aligned_prefix():
    f = tm_prefix(3, 9)[:9]
    assert decompose_factor(f, 3, tm_prefix(3, 81)[:81]) == {Decomposition(b"", _w("012"), b"")}
    assert decompose_factor(_w("012"), 3, _w("012")) == {Decomposition(b"", _w("0"), b"")}


def test_decompositions_of_length_15_are_unique_and_rebuild_the_factor():
    for f in thue_morse(3).factors(15):
        found = decompose_factor(f, 3)
        assert len(found) == 1
        (d,) = found
        assert d.expand(sigma(3)) == f
        assert in_suffix_set(d.alpha, 3) and in_prefix_set(d.beta, 3)


def test_decompose_errors():
    with pytest.raises(NotAFactorError):
        decompose_factor(_w("000"), 3)
    with pytest.raises(PreconditionError):
        decompose_factor(_w("01"), 3, _w("012"))


def test_decompose_refuses_unaligned_host():
    host = tm_prefix(3, 81)[1:81]
    with pytest.raises(PreconditionError, match="block-aligned"):
        decompose_factor(host[:15], 3, host)


def test_structural_criterion_agrees_with_oracle():
    fs = thue_morse(3).factors(15)
    decomp = {f: min(decompose_factor(f, 3)) for f in fs}
    psi = {f: extended_parikh(f, 2, 3).counts for f in fs}
    for u, v in combinations(fs, 2):
        assert equivalent2_structural(decomp[u], decomp[v], 3) == (psi[u] == psi[v])
    assert find_binomial_collision(sigma(3), 0, 15) is None


def test_structural_criterion_preconditions():
    short = Decomposition(b"", _w("01"), b"")
    with pytest.raises(PreconditionError):
        equivalent2_structural(short, short, 3)
    long = Decomposition(b"", _w("0110"), b"")
    with pytest.raises(PreconditionError):
        equivalent2_structural(long, long, 2)
    assert equivalent2_structural(long, long, 3)


def test_counterexample_morphism():
    phi = counterexample_morphism()
    assert phi.parikh_constant
    u = apply_morphism(phi, _w("01202")) + _w("21")
    v = apply_morphism(phi, _w("01201")) + _w("12")
    factors_17 = set(fixed_point_factors(phi, 0, 17))
    assert u in factors_17 and v in factors_17
    assert equivalent_k(u, v, 2, 3)
    assert u != v


def test_counterexample_check_reports_quoted_pair():
    report = counterexample_report()
    assert report.holds
    assert counterexample_check()
    assert not report.literal_equivalent
    assert not report.literal_u_is_factor
    assert report.witness_beta_u != report.witness_beta_v
    assert report.witness_u != report.witness_v


def test_boundary_parikh_counts():
    assert boundary_parikh_counts(3, 9, BoundaryMode.PREFIX_LETTER, 0) == 4
    assert boundary_parikh_counts(3, 10, "prefix_letter", 1) == 4
    assert boundary_parikh_counts(3, 10, BoundaryMode.BOTH_LETTERS, 0, 0) == 1
    assert boundary_parikh_counts(3, 10, BoundaryMode.BOTH_LETTERS, 0, 1) == 3
    assert boundary_parikh_counts(4, 11, BoundaryMode.SUFFIX_LETTER, 2) == boundary_parikh_closed(
        4, 11, BoundaryMode.SUFFIX_LETTER, 2
    )
    with pytest.raises(PreconditionError):
        boundary_parikh_counts(3, 10, BoundaryMode.BOTH_LETTERS, 0)
    with pytest.raises(PreconditionError):
        boundary_parikh_counts(3, 2, BoundaryMode.PREFIX_LETTER, 0)


def test_factor_complexity_of_thue_morse():
    assert [factor_complexity(2, n) for n in range(1, 6)] == [2, 4, 6, 10, 12]


def test_periodicity_check():
    assert periodicity_check(_table({n: 5 for n in range(3, 12)}), 2, 3).verdict == "consistent"
    values = {n: 49 if n % 3 == 0 else 45 for n in range(9, 30)}
    assert periodicity_check(_table(values), 3, 9).consistent
    values[20] = 44
    report = periodicity_check(_table(values), 3, 9)
    assert report.verdict == "violated"
    assert report.violated_at == 17
    with pytest.raises(PreconditionError):
        periodicity_check(_table({9: 1, 10: 1}), 3, 9)


def test_conjecture_scan_on_thue_morse():
    report = conjecture_scan(2, 3, 32)
    assert report.verdict == "consistent"
    assert report.period_tested == 8
    assert report.window == (8, 32)
    assert report.assumptions


def test_conjecture_scan_on_ternary_word():
    report = conjecture_scan(3, 3, 81)
    assert report.period_tested == 27
    assert report.offset == 27
    assert report.window == (27, 81)
    assert [r.n for r in report.values] == list(range(27, 82))
    assert report.pairs_compared == 81 - 27 - 27 + 1
    assert report.verdict in ("consistent", "violated")
    assert report.consistent == (report.violated_at is None)


def test_conjecture_scan_guards():
    with pytest.raises(BudgetExceededError):
        conjecture_scan(5, 4)
    with pytest.raises(PreconditionError):
        conjecture_scan(3, 2)
    with pytest.raises(PreconditionError):
        conjecture_scan(2, 3, 20)
