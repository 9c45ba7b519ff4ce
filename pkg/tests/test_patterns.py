import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from nzpatterns import patterns as pt
from nzpatterns.errors import InfeasibleError, InputError
from nzpatterns.patterns import PartialPattern, PermutationMatrix

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796]


def random_partial(rng, rows, cols, density=0.6):
    ones = []
    free_cols = list(range(cols))
    rng.shuffle(free_cols)
    for r in range(rows):
        if free_cols and rng.random() < density:
            ones.append((r, free_cols.pop()))
    return PartialPattern(rows, cols, ones)


def random_perm(rng, n):
    w = list(range(1, n + 1))
    rng.shuffle(w)
    return PermutationMatrix(w)


@st.composite
def partials(draw, max_rows=4, max_cols=4):
    rows = draw(st.integers(1, max_rows))
    cols = draw(st.integers(1, max_cols))
    cells = draw(st.permutations(range(cols)))
    mask = draw(st.lists(st.booleans(), min_size=rows, max_size=rows))
    ones = [(r, cells[r]) for r in range(min(rows, cols)) if mask[r]]
    return PartialPattern(rows, cols, ones)


# -- data types ----------------------------------------------------------------------


def test_partial_rejects_two_ones_in_a_row():
    with pytest.raises(InputError):
        PartialPattern.from_rows([[1, 1], [0, 0]])
    with pytest.raises(InputError):
        PartialPattern(2, 2, [(0, 5)])


def test_permutation_word_roundtrip():
    p = PermutationMatrix([2, 4, 1, 3])
    assert p.to_permutation().word == (2, 4, 1, 3)
    assert p.is_permutation() and len(p) == 4
    with pytest.raises(InputError):
        PermutationMatrix([1, 1, 2])


def test_pattern_set_dedupes():
    s = pt.PatternSet([PermutationMatrix([1, 2]), PermutationMatrix([1, 2]),
                       PermutationMatrix([2, 1])])
    assert len(s) == 2


def test_pattern_file_parse_and_format():
    text = "# comment\n1 2 3\n\n0 1 0\n1 0 0\n\n2 1\n"
    ps = pt.parse_patterns(text)
    assert [p.shape for p in ps] == [(3, 3), (2, 3), (2, 2)]
    assert pt.parse_patterns(pt.format_patterns(ps)).members == ps.members


def test_pattern_file_bad_entry():
    with pytest.raises(InputError):
        pt.parse_patterns("0 2\n1 0\n", "matrix")


# -- containment ---------------------------------------------------------------------


def test_trivial_containment():
    one = PartialPattern(1, 1, [(0, 0)])
    assert pt.contains(PermutationMatrix([3, 1, 2]), one)
    assert not pt.contains(PermutationMatrix([3, 2, 1]), PermutationMatrix([1, 2]))
    assert pt.contains(PermutationMatrix([1, 3, 2]), PermutationMatrix([1, 2]))


def test_zero_cells_are_constraints():
    # [1 0] needs a 1 with an empty column to its right in the chosen rows
    pat = PartialPattern.from_rows([[1, 0]])
    assert not pt.contains(PermutationMatrix([1]), pat)
    assert pt.contains(PermutationMatrix([1, 2]), pat)
    # all-zero 2x2 needs two rows and two columns with no 1 at their crossings
    z = PartialPattern(2, 2)
    assert not pt.contains(PermutationMatrix([1, 2, 3]), z)
    assert pt.contains(PermutationMatrix([1, 2, 3, 4]), z)


def test_containment_matches_bruteforce_random():
    rng = random.Random(11)
    for _ in range(600):
        host = random_perm(rng, rng.randint(4, 8))
        if rng.random() < 0.3:  # partial hosts too
            host = random_partial(rng, host.rows, rng.randint(3, 8), 0.7)
        pat = random_partial(rng, rng.randint(1, 4), rng.randint(1, 4), rng.random())
        assert pt.contains(host, pat) == pt.contains_bruteforce(host, pat), (host, pat)


@settings(max_examples=150, deadline=None)
@given(partials(), st.integers(0, 10**6))
def test_containment_is_monotone_under_deletion(pat, seed):
    rng = random.Random(seed)
    host = random_perm(rng, rng.randint(3, 7))
    rows = sorted(rng.sample(range(pat.rows), rng.randint(1, pat.rows)))
    cols = sorted(rng.sample(range(pat.cols), rng.randint(1, pat.cols)))
    sub = pat.submatrix(rows, cols)
    if pt.contains(host, pat):
        assert pt.contains(host, sub)


def test_occurrences_lists_every_embedding():
    host = PermutationMatrix([2, 1, 4, 3])
    occ = pt.occurrences(host, PermutationMatrix([1, 2]))
    assert len(occ) == 4


def test_pins_restrict_rows():
    host = PermutationMatrix([1, 2, 3])
    pat = PermutationMatrix([1, 2])
    assert pt.contains(host, pat, pins={0: 1})
    assert not pt.contains(host, pat, pins={1: 0})


# -- counting ------------------------------------------------------------------------


def test_counts_trivial():
    assert pt.count_avoiders([], 4) == 24
    for n in range(1, 7):
        assert pt.count_avoiders([PermutationMatrix([1, 2])], n) == 1


@pytest.mark.parametrize("n", range(1, 9))
def test_catalan(n):
    assert pt.count_avoiders([PermutationMatrix([1, 2, 3])], n) == CATALAN[n]
    assert pt.count_avoiders([PermutationMatrix([2, 1, 3])], n) == CATALAN[n]


def test_123_213_at_six():
    pats = [PermutationMatrix([1, 2, 3]), PermutationMatrix([2, 1, 3])]
    assert pt.count_avoiders(pats, 6) == pt.count_avoiders_filter(pats, 6) == 32


def test_count_guard():
    with pytest.raises(InfeasibleError):
        pt.count_avoiders([], 12)


def test_backtracking_matches_filter_random():
    rng = random.Random(5)
    for _ in range(25):
        pats = []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.5:
                pats.append(random_perm(rng, rng.randint(2, 4)))
            else:
                pats.append(random_partial(rng, rng.randint(1, 3), rng.randint(1, 3)))
        n = rng.randint(1, 7)
        assert pt.count_avoiders(pats, n) == pt.count_avoiders_filter(pats, n), (pats, n)


def test_backtracking_matches_filter_at_eight():
    pats = [PermutationMatrix([2, 4, 1, 3]), PartialPattern.from_rows([[0, 1], [0, 0]])]
    assert pt.count_avoiders(pats, 8) == pt.count_avoiders_filter(pats, 8)


@settings(max_examples=30, deadline=None)
@given(partials(max_rows=3, max_cols=3), st.integers(1, 6))
def test_reverse_complement_symmetry(pat, n):
    a = pt.count_avoiders([pat], n)
    assert a == pt.count_avoiders([pat.reverse_complement()], n)
    assert a == pt.count_avoiders_filter([pat.reverse_complement()], n)


def test_wilf_mod2_examples():
    assert pt.wilf_mod2([], [], 8).agree
    assert pt.wilf_mod2([PermutationMatrix([1, 2, 3])], [PermutationMatrix([2, 1, 3])], 8).agree
    res = pt.wilf_mod2([PermutationMatrix([1, 2, 3])], [PermutationMatrix([1, 2])], 3)
    # C_2 is 2 against 1, so the parities already split at n = 2
    assert not res.agree and res.first_divergence == 2


# -- expansion -----------------------------------------------------------------------


def test_expand_single_one():
    got = pt.expand_partial(PartialPattern(1, 1, [(0, 0)]))
    assert {p.to_permutation().word for p in got} == {(1,), (1, 2), (2, 1)}


def test_expand_one_by_two():
    pat = PartialPattern.from_rows([[1, 0]])
    exp = pt.expand_partial(pat)
    for n in range(1, 7):
        assert pt.count_avoiders([pat], n) == pt.count_avoiders_filter(exp, n)


def test_expand_random_two_by_three():
    rng = random.Random(3)
    for _ in range(6):
        pat = random_partial(rng, 2, 3)
        exp = pt.expand_partial(pat)
        for n in range(1, 8):
            assert pt.count_avoiders([pat], n) == pt.count_avoiders_filter(exp, n, limit=None)


# -- simple permutations and the alphabet --------------------------------------------


def brute_simple(w):
    n = len(w)
    for i, j in itertools.combinations(range(n + 1), 2):
        size = j - i
        if 2 <= size < n and max(w[i:j]) - min(w[i:j]) == size - 1:
            return False
    return True


def test_simple_examples():
    assert pt.is_simple((1,))
    assert pt.is_simple((2, 4, 1, 3))
    assert not pt.is_simple((1, 2, 3, 4))
    assert not pt.is_simple(pt.L_WORD)


@pytest.mark.parametrize("n", range(4, 9))
def test_simple_counts_match_bruteforce(n):
    fast = sum(1 for _ in pt.simple_permutations(n))
    slow = sum(1 for w in itertools.permutations(range(1, n + 1)) if brute_simple(w))
    assert fast == slow
    assert fast == {4: 2, 5: 6, 6: 46, 7: 338, 8: 2926}[n]


def test_small_alphabets_empty():
    for g in range(1, 8):
        assert pt.alphabet(g) == ()


def test_alphabet_ten():
    cache = pt.AlphabetCache()
    alpha = pt.alphabet(10, cache=cache)
    words = [m.word for m in alpha]
    assert len(set(words)) == len(words) == 990
    assert words == sorted(words)
    L = pt.L_matrix()
    for m in alpha[::37]:
        assert pt.is_simple(m) and pt.contains(m, L)
    members = set(words)
    ins = [w for w in pt.single_insertions(pt.L_PRIME_WORD) if pt.is_simple(w)]
    assert len(ins) == 60 and all(w in members for w in ins)
    assert pt.alphabet(10, cache=cache) is alpha


def test_alphabet_members_contain_L_exhaustively():
    # independent check over the raw definition at g = 9
    L = pt.L_matrix()
    found = {w for w in pt.permutations_containing(pt.L_WORD, 9) if pt.is_simple(w)}
    assert {m.word for m in pt.alphabet(9)} == found
    for w in found:
        assert pt.contains(PermutationMatrix(w), L)


def test_alphabet_density_bracket():
    # the stated bracket [0.10, 0.16] for |A_10| / 10! cannot hold: at most
    # C(10,7)^2 * 3! permutations of size 10 contain a fixed 7-pattern
    ratio = len(pt.alphabet(10)) / math.factorial(10)
    assert 0.10 <= ratio <= 0.16, f"|A_10|/10! = {ratio:.6f}"


def test_toy_alphabet_is_all_simple():
    assert len(pt.alphabet(4, toy=True)) == 2
    assert len(pt.alphabet(6, toy=True)) == 46
