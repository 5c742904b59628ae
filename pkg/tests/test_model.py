import itertools
import math

import numpy as np
import pytest

from patmoments.automaton import DNA, Alphabet
from patmoments.model import (
    MarkovModel,
    ModelFormatError,
    NormalizationWarning,
    ecoli_model,
    format_model,
    load_model,
    parse_model,
)

AB = Alphabet("AB")


def test_builtin_ecoli_warns_about_row_c():
    with pytest.warns(NormalizationWarning, match="1.01"):
        m = load_model("ecoli")
    assert m.order == 1 and m.is_homogeneous
    np.testing.assert_allclose(m.pi.sum(axis=1), 1.0, rtol=0, atol=1e-15)
    np.testing.assert_allclose(m.pi[1], np.array([0.23, 0.23, 0.33, 0.22]) / 1.01)
    assert m.nu_of("A") == 1.0 and m.nu_of("G") == 0.0


def test_ecoli_model_is_quiet(recwarn):
    ecoli_model()
    assert not [w for w in recwarn if issubclass(w.category, NormalizationWarning)]


def test_order_zero_ignores_nu():
    m = MarkovModel.uniform(DNA)
    assert m.nu.shape == (1,)
    assert m.text_probability("ACGT") == pytest.approx(0.25**4)


def test_text_probabilities_sum_to_one(ecoli):
    total = math.fsum(ecoli.text_probability("".join(t)) for t in itertools.product("ACGT", repeat=5))
    assert total == pytest.approx(1.0, abs=1e-14)


def test_schedule_blocks():
    p1 = [[0.9, 0.1], [0.5, 0.5]]
    p2 = [[0.2, 0.8], [0.4, 0.6]]
    m = MarkovModel(AB, 1, [0.5, 0.5], schedule=((2, 4, p1), (5, 9, p2)))
    assert not m.is_homogeneous
    blocks = m.blocks(6)
    assert [(f, l) for f, l, _ in blocks] == [(2, 4), (5, 6)]
    np.testing.assert_allclose(m.transition_at(5), p2)
    assert m.text_probability("AAB") == pytest.approx(0.5 * 0.9 * 0.1)
    assert m.text_probability("AAAAB") == pytest.approx(0.5 * 0.9**3 * 0.8)
    with pytest.raises(ValueError, match="schedule covers"):
        m.blocks(10)


@pytest.mark.parametrize(
    "kwargs,match",
    [
        (dict(order=-1, nu=[1.0], pi=[[0.5, 0.5]]), "order"),
        (dict(order=1, nu=[1.0], pi=[[0.5, 0.5], [0.5, 0.5]]), "nu must have"),
        (dict(order=0, nu=[1.0], pi=[[0.5, 0.5, 0.0]]), "shape"),
        (dict(order=0, nu=[1.0], pi=[[-0.5, 1.5]]), "negative"),
        (dict(order=0, nu=[1.0], pi=[[0.0, 0.0]]), "sums to zero"),
        (dict(order=0, nu=[1.0]), "exactly one"),
        (dict(order=0, nu=[1.0], schedule=((2, 3, [[0.5, 0.5]]),)), "continue"),
    ],
)
def test_model_validation(kwargs, match):
    with pytest.raises(ValueError, match=match):
        MarkovModel(AB, **kwargs)


def test_sequence_must_exceed_order(ecoli):
    with pytest.raises(ValueError, match="exceed"):
        ecoli.blocks(1)


def test_format_round_trip_homogeneous(ecoli):
    back = parse_model(format_model(ecoli))
    assert back.order == 1 and back.alphabet.symbols == "ACGT"
    np.testing.assert_array_equal(back.pi, ecoli.pi)
    np.testing.assert_array_equal(back.nu, ecoli.nu)


def test_format_round_trip_schedule():
    m = MarkovModel(AB, 0, [1.0], schedule=((1, 3, [[0.25, 0.75]]), (4, 8, [[0.6, 0.4]])))
    back = parse_model(format_model(m))
    assert [(f, l) for f, l, _ in back.schedule] == [(1, 3), (4, 8)]
    np.testing.assert_array_equal(back.schedule[1][2], m.schedule[1][2])


def test_parse_from_path(tmp_path, ecoli):
    path = tmp_path / "m.mm"
    path.write_text(format_model(ecoli))
    np.testing.assert_array_equal(load_model(path).pi, ecoli.pi)
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.mm")


@pytest.mark.parametrize(
    "text",
    [
        "order: 0\npi:\n0.5 0.5\n",
        "alphabet: AB\norder: x\npi:\n0.5 0.5\n",
        "alphabet: AB\norder: 0\n",
        "alphabet: AB\norder: 0\npi:\n0.5 oops\n",
        "alphabet: AB\norder: 1\nnu:\nA 1\nB 0\npi:\nA 0.5 0.5\nA 0.5 0.5\n",
        "junk before header\nalphabet: AB\norder: 0\npi:\n0.5 0.5\n",
        "alphabet: AB\norder: 0\npi:\n0.5 0.5\npi[1..2]:\n0.5 0.5\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ModelFormatError):
        parse_model(text)
