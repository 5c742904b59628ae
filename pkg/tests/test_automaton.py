import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patmoments.automaton import (
    DNA,
    Alphabet,
    Pattern,
    build_dfa,
    count_occurrences_naive,
    dump_dfa,
    hopcroft_minimize,
    parse_dfa_dump,
    parse_pattern,
)

AB = Alphabet("AB")

# reference |Q'| (states reachable after the first letter) for the benchmark patterns
REFERENCE_L = {
    "GCTGGT": 9,
    "AGAGAG": 9,
    "GGGGGG": 9,
    "GCTGGTGG": 11,
    "GCTGGNGG": 14,
    "GNTGGNGG": 21,
    "GNTGNNGG": 28,
    "GNNGNNGG": 63,
}


def test_parse_simple_word():
    p = parse_pattern("GCTGGT")
    assert p.words == ("GCTGGT",)
    assert p.min_len == p.max_len == 6


def test_parse_degenerate_expansion():
    assert len(parse_pattern("GNNGNNGG")) == 4**4
    assert set(parse_pattern("GRT").words) == {"GAT", "GGT"}


def test_parse_word_list():
    assert parse_pattern("AB|BA", AB).words == ("AB", "BA")


def test_parse_custom_codes():
    p = parse_pattern("AX", AB, codes={"X": "AB"})
    assert p.words == ("AA", "AB")


@pytest.mark.parametrize("bad", ["", "GXT", "AC||GT"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_pattern(bad)


def test_alphabet_rejects_duplicates():
    with pytest.raises(ValueError):
        Alphabet("AAB")


def test_naive_count_overlaps_and_shared_ends():
    assert count_occurrences_naive("AAAA", ["AA"]) == 3
    # two words ending at the same position count once
    assert count_occurrences_naive("ABAB", ["AB", "B"]) == 2


def test_two_letter_word_automaton():
    dfa = build_dfa(parse_pattern("AB", AB), 0)
    assert dfa.num_states == 3
    assert dfa.is_final(dfa.run("AAB"))
    assert not dfa.is_final(dfa.run("ABA"))


@pytest.mark.parametrize("pattern,L", sorted(REFERENCE_L.items()))
def test_reference_state_counts(pattern, L):
    dfa = build_dfa(parse_pattern(pattern), 1)
    assert len(dfa.reachable_after(1)) == L
    # the start state is the only one that no letter leads back to
    assert dfa.num_states == L + 1


def test_word_not_longer_than_order_rejected():
    with pytest.raises(ValueError, match="not longer"):
        build_dfa(parse_pattern("AB", AB), 2)


def _random_texts(alphabet, n, length, rng):
    return ["".join(rng.choice(list(alphabet.symbols), length)) for _ in range(n)]


@settings(max_examples=60, deadline=None)
@given(
    words=st.lists(st.text(alphabet="AB", min_size=2, max_size=5), min_size=1, max_size=3),
    d=st.integers(0, 1),
    text=st.text(alphabet="AB", max_size=30),
)
def test_automaton_counts_like_naive(words, d, text):
    pat = Pattern.of(words, AB)
    dfa = build_dfa(pat, d)
    assert dfa.count(text) == count_occurrences_naive(text, pat)


@pytest.mark.parametrize("pattern,d", [("GCTGGT", 1), ("GNTGGNGG", 1), ("AGAG", 2), ("ACGT|CGTA", 3)])
def test_d_labels_are_unique_histories(pattern, d):
    dfa = build_dfa(parse_pattern(pattern), d)
    rng = np.random.default_rng(1)
    for text in _random_texts(DNA, 300, 12, rng):
        for i, q in enumerate(dfa.trace(text), start=1):
            if i >= d:
                assert dfa.d_label[q] == text[i - d : i]


def _observations(dfa, q, depth):
    """Marks and d-labels seen along every word of length <= depth from q."""
    out = []
    for n in range(depth + 1):
        for word in itertools.product(range(dfa.alphabet.size), repeat=n):
            r = q
            for b in word:
                r = int(dfa.delta[r, b])
            out.append((int(dfa.marks[r]), dfa.d_label[r]))
    return tuple(out)


@pytest.mark.parametrize("pattern,d", [("AB", 0), ("ABA|BB", 1), ("AAB", 2), ("ABAB", 1)])
def test_no_two_states_are_equivalent(pattern, d):
    dfa = build_dfa(parse_pattern(pattern, AB), d)
    obs = [_observations(dfa, q, dfa.num_states) for q in range(dfa.num_states)]
    assert len(set(obs)) == dfa.num_states


def test_hopcroft_merges_equivalent_states():
    # states 1 and 2 behave identically
    delta = np.array([[1, 2], [3, 3], [3, 3], [3, 3]])
    block = hopcroft_minimize(delta, [0, 0, 0, 1])
    assert block[1] == block[2]
    assert len(set(block.tolist())) == 3


def test_multi_pattern_marks():
    dfa = build_dfa([parse_pattern("AA", AB), parse_pattern("BA", AB)], 0)
    assert dfa.marks[dfa.run("AA")] == 0b01
    assert dfa.marks[dfa.run("BA")] == 0b10
    assert dfa.marks[dfa.run("AB")] == 0


def test_dump_round_trip():
    dfa = build_dfa(parse_pattern("AB|BA", AB), 0)
    text = dump_dfa(dfa)
    back = parse_dfa_dump(text)
    assert np.array_equal(back.delta, dfa.delta)
    assert np.array_equal(back.marks, dfa.marks)
    assert back.d_label == dfa.d_label
    assert back.finals and back.finals <= back.reachable_after(0)


def test_dump_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_dfa_dump("0\t0\n")
