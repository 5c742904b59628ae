"""Shared builders and reference computations for the test suite."""

import mpmath

from patmoments import build_dfa, embed
from patmoments.automaton import Alphabet, Pattern
from patmoments.model import MarkovModel


def random_model(rng, alphabet: Alphabet, order: int, homogeneous=True, seq_len=None) -> MarkovModel:
    s = alphabet.size

    def mat():
        m = rng.random((s**order, s)) + 0.05
        return m / m.sum(axis=1, keepdims=True)

    nu = rng.random(s**order) + 0.05
    nu /= nu.sum()
    if homogeneous:
        return MarkovModel(alphabet, order, nu, pi=mat())
    cut = order + 1 + (seq_len - order) // 2
    return MarkovModel(alphabet, order, nu, schedule=((order + 1, cut, mat()), (cut + 1, seq_len, mat())))


def random_pattern(rng, alphabet: Alphabet, order: int, max_len: int = 4, max_words: int = 3) -> Pattern:
    words = set()
    for _ in range(rng.integers(1, max_words + 1)):
        n = int(rng.integers(order + 1, max(max_len, order + 1) + 1))
        words.add("".join(rng.choice(list(alphabet.symbols), n)))
    return Pattern.of(sorted(words), alphabet)


def chain_for(model: MarkovModel, patterns, seq_len: int):
    return embed(build_dfa(patterns, model.order), model, seq_len)


def mp_factorial_terms(chain, k: int, dps: int = 50) -> list:
    """g_0..g_k in extended precision from the exact binary values of T.

    Binary powering of the truncated polynomial matrix T + yQ.
    """
    with mpmath.workdps(dps):
        T = chain.T.toarray()
        L = chain.size
        fin = chain.final

        def poly_mat():
            return [mpmath.zeros(L, L) for _ in range(k + 1)]

        base = poly_mat()
        for p in range(L):
            for q in range(L):
                if T[p, q]:
                    base[0][p, q] = mpmath.mpf(float(T[p, q]))
                    if k >= 1 and fin[q]:
                        base[1][p, q] = mpmath.mpf(float(T[p, q]))

        def mul(a, b):
            out = poly_mat()
            for i in range(k + 1):
                for j in range(k + 1 - i):
                    out[i + j] += a[i] * b[j]
            return out

        result = poly_mat()
        result[0] = mpmath.eye(L)
        n = chain.steps
        sq = base
        while n:
            if n & 1:
                result = mul(result, sq)
            n >>= 1
            if n:
                sq = mul(sq, sq)
        mu = [mpmath.mpf(float(x)) for x in chain.mu]
        return [sum(mu[p] * sum(result[j][p, q] for q in range(L)) for p in range(L)) for j in range(k + 1)]
