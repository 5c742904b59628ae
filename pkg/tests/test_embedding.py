import numpy as np
import pytest

from patmoments import build_dfa, embed, parse_pattern
from patmoments.automaton import DNA, Alphabet
from patmoments.embedding import RowCompressed
from patmoments.model import MarkovModel

from conftest import ecoli_chain

AB = Alphabet("AB")


def test_two_letter_word_uniform():
    chain = embed(build_dfa(parse_pattern("AB", AB), 0), MarkovModel.uniform(AB), 10)
    T = chain.T.toarray()
    assert T.shape == (3, 3)
    np.testing.assert_array_equal(T.sum(axis=1), 1.0)
    assert set(np.unique(T)) <= {0.0, 0.5}
    Q = chain.Q.toarray()
    # a single column (the state just after "AB") carries Q
    assert np.count_nonzero(Q.any(axis=0)) == 1
    assert chain.mu.sum() == 1.0 and chain.steps == 10


def test_ecoli_embedding_structure():
    chain = ecoli_chain("GCTGGT")
    T = chain.T.toarray()
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-15)
    np.testing.assert_array_equal(chain.P.toarray() + chain.Q.toarray(), T)
    assert (np.count_nonzero(T, axis=1) <= 4).all()
    assert chain.size == 9
    assert chain.mu.sum() == 1.0 and np.count_nonzero(chain.mu) == 1
    assert chain.steps == 400000 - 1


def test_flat_schedule_matches_homogeneous():
    pi = np.array([[0.1, 0.4, 0.3, 0.2], [0.25, 0.25, 0.25, 0.25], [0.5, 0.2, 0.2, 0.1], [0.3, 0.3, 0.2, 0.2]])
    nu = [0.4, 0.3, 0.2, 0.1]
    homog = MarkovModel(DNA, 1, nu, pi=pi)
    sched = MarkovModel(DNA, 1, nu, schedule=((2, 7, pi), (8, 20, pi)))
    dfa = build_dfa(parse_pattern("ACNT"), 1)
    a, b = embed(dfa, homog, 20), embed(dfa, sched, 20)
    np.testing.assert_array_equal(a.mu, b.mu)
    for blk in b.blocks:
        np.testing.assert_array_equal(blk.T.toarray(), a.T.toarray())
    assert [p for p, _ in b.positions()] == list(range(2, 21))
    assert [p for p, _ in b.positions(reverse=True)] == list(range(20, 1, -1))
    with pytest.raises(ValueError):
        b.T


def test_chain_follows_automaton(rng, ecoli):
    chain = ecoli_chain("GNTGGNGG")
    idx = {int(q): i for i, q in enumerate(chain.states)}
    T = chain.T.toarray()
    dfa = chain.dfa
    for _ in range(50):
        text = "A" + "".join(rng.choice(list("ACGT"), 30))
        trace = dfa.trace(text)
        assert chain.mu[idx[trace[0]]] == 1.0
        for p, q, letter in zip(trace, trace[1:], text[1:]):
            want = ecoli.pi_row(dfa.d_label[p])[ecoli.alphabet.index(letter)]
            assert T[idx[p], idx[q]] == pytest.approx(want)


def test_embed_rejects_mismatch(ecoli):
    with pytest.raises(ValueError, match="order"):
        embed(build_dfa(parse_pattern("GCTGGT"), 0), ecoli, 100)
    with pytest.raises(ValueError, match="exceed"):
        embed(build_dfa(parse_pattern("GCTGGT"), 1), ecoli, 1)


def test_with_length():
    chain = ecoli_chain("GCTGGT")
    short = chain.with_length(50)
    assert short.steps == 49 and short.T is chain.T


def test_sparse_products_match_dense(rng):
    n, w = 7, 3
    cols = rng.integers(0, n, size=(n, w))
    vals = rng.random((n, w))
    A = RowCompressed(cols, vals)
    dense = A.toarray()
    x = rng.standard_normal(n)
    X = rng.standard_normal((n, 4))
    X3 = rng.standard_normal((n, 2, 3))
    np.testing.assert_allclose(A.matvec(x), dense @ x)
    np.testing.assert_allclose(A.matvec(X), dense @ X)
    np.testing.assert_allclose(A.matvec(X3), np.einsum("pq,qab->pab", dense, X3))
    np.testing.assert_allclose(A.rmatvec(x), x @ dense)
    np.testing.assert_allclose(A.rmatvec(X), dense.T @ X)
    keep = np.arange(n) % 2 == 0
    np.testing.assert_allclose(A.masked(keep).toarray(), dense * keep)
