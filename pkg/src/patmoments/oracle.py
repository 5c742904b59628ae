"""Reference computations used to validate the moment algorithms.

None of these is meant to be fast.  Exhaustive enumeration and Monte Carlo
count occurrences directly on the generated letters, without going through
the automaton; the dynamic program walks the embedded chain but keeps the
whole count distribution instead of truncated moments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .automaton import Pattern, count_occurrences_naive
from .embedding import EmbeddedChain
from .model import MarkovModel

__all__ = [
    "ExactPmf",
    "brute_force_moments",
    "brute_force_joint",
    "exact_pmf_dp",
    "MonteCarloResult",
    "monte_carlo",
    "monte_carlo_counts",
]

MAX_TEXTS = 2**24


@dataclass(frozen=True, eq=False)
class ExactPmf:
    """p[n] = P(N = n) for n = 0..n_max."""

    p: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.p) - 1

    def __call__(self, n):
        n = np.asarray(n)
        inside = (n >= 0) & (n <= self.n_max)
        out = np.where(inside, self.p[np.clip(n, 0, self.n_max)], 0.0)
        return float(out) if out.ndim == 0 else out

    def factorial_terms(self, k: int) -> np.ndarray:
        """g_j = E[C(N, j)] for j = 0..k."""
        n = np.arange(self.n_max + 1)
        return np.array([math.fsum(self.p * _comb_vec(n, j)) for j in range(k + 1)])

    @property
    def mean(self) -> float:
        return float(np.arange(self.n_max + 1) @ self.p)

    @property
    def mode(self) -> int:
        return int(np.argmax(self.p))


def _comb_vec(n: np.ndarray, j: int) -> np.ndarray:
    out = np.ones(len(n), dtype=float)
    for t in range(j):
        out *= (n - t) / (t + 1)
    return np.where(n >= j, out, 0.0)


def _words(pattern: Pattern | Iterable[str]) -> tuple[str, ...]:
    return pattern.words if isinstance(pattern, Pattern) else tuple(pattern)


def _enumerate(model: MarkovModel, seq_len: int):
    s = model.alphabet.size
    if s**seq_len > MAX_TEXTS:
        raise ValueError(f"{s}^{seq_len} texts exceed the enumeration limit {MAX_TEXTS}")
    letters = model.alphabet.symbols
    for tup in itertools.product(letters, repeat=seq_len):
        text = "".join(tup)
        p = model.text_probability(text)
        if p:
            yield text, p


def brute_force_moments(
    model: MarkovModel, pattern: Pattern | Iterable[str], seq_len: int, k: int
) -> tuple[np.ndarray, ExactPmf]:
    """g_0..g_k and the pmf of the count by enumerating every text of length ``seq_len``."""
    words = _words(pattern)
    mass: dict[int, list[float]] = {}
    for text, p in _enumerate(model, seq_len):
        mass.setdefault(count_occurrences_naive(text, words), []).append(p)
    n_max = max(mass)
    pmf = np.zeros(n_max + 1)
    for n, ps in mass.items():
        pmf[n] = math.fsum(ps)
    exact = ExactPmf(pmf)
    return exact.factorial_terms(k), exact


def brute_force_joint(
    model: MarkovModel, patterns: Sequence[Pattern | Iterable[str]], seq_len: int
) -> dict[tuple[int, ...], float]:
    """Joint pmf of the counts of several patterns, keyed by count tuples."""
    words = [_words(p) for p in patterns]
    mass: dict[tuple[int, ...], list[float]] = {}
    for text, p in _enumerate(model, seq_len):
        key = tuple(count_occurrences_naive(text, w) for w in words)
        mass.setdefault(key, []).append(p)
    return {key: math.fsum(ps) for key, ps in mass.items()}


def exact_pmf_dp(chain: EmbeddedChain, n_cap: int | None = None, tol: float = 1e-12) -> ExactPmf:
    """Count distribution by a forward sweep over positions.

    Keeps v_n(p) = P(count so far = n, state = p) for n <= n_cap and applies
    v_n <- v_n P + v_{n-1} Q at every letter.  ``n_cap`` defaults to the
    mean plus 20 standard deviations from the power (or full) algorithm.
    """
    if n_cap is None:
        from .moments import compute_moments

        ms = compute_moments(chain, 2, algorithm="power" if chain.homogeneous else "full")
        n_cap = int(math.ceil(ms.mean + 20 * (ms.std or 0.0))) + 10
    if n_cap < 0:
        raise ValueError("n_cap must be >= 0")
    L = chain.size
    final = chain.final
    v = np.zeros((L, n_cap + 1))
    v[:, 0] = chain.mu
    lost = 0.0
    for _, T in chain.positions():
        w = T.rmatvec(v)
        lost += float(w[final, -1].sum())
        w[final, 1:] = w[final, :-1]
        w[final, 0] = 0.0
        v = w
    if lost > tol:
        raise ValueError(f"mass {lost:.3g} above n_cap={n_cap}; raise the cap")
    return ExactPmf(v.sum(axis=0))


# -- Monte Carlo ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    """Sample statistics of the count with standard errors (normal approximation)."""

    counts: np.ndarray
    seed: int
    bit_generator: str

    @property
    def reps(self) -> int:
        return len(self.counts)

    def _central(self, r: int) -> float:
        x = self.counts.astype(float)
        return float(np.mean((x - x.mean()) ** r))

    @property
    def mean(self) -> float:
        return float(self.counts.mean())

    @property
    def mean_se(self) -> float:
        return math.sqrt(self.variance / self.reps)

    @property
    def variance(self) -> float:
        return float(self.counts.var(ddof=1)) if self.reps > 1 else 0.0

    @property
    def variance_se(self) -> float:
        m2, m4 = self._central(2), self._central(4)
        return math.sqrt(max(m4 - m2 * m2, 0.0) / self.reps)

    @property
    def skewness(self) -> float:
        m2 = self._central(2)
        return self._central(3) / m2**1.5 if m2 > 0 else float("nan")

    @property
    def skewness_se(self) -> float:
        return math.sqrt(6.0 / self.reps)

    @property
    def excess_kurtosis(self) -> float:
        m2 = self._central(2)
        return self._central(4) / m2**2 - 3.0 if m2 > 0 else float("nan")

    @property
    def excess_kurtosis_se(self) -> float:
        return math.sqrt(24.0 / self.reps)


def _rng(seed: int, bit_generator: str) -> np.random.Generator:
    try:
        bg = getattr(np.random, bit_generator)
    except AttributeError:
        raise ValueError(f"unknown bit generator {bit_generator!r}") from None
    return np.random.Generator(bg(np.random.SeedSequence(seed)))


def monte_carlo_counts(
    model: MarkovModel,
    patterns: Sequence[Pattern | Iterable[str]],
    seq_len: int,
    reps: int,
    seed: int,
    bit_generator: str = "PCG64",
) -> np.ndarray:
    """Simulated counts, shape (reps, len(patterns)).

    All replicates advance together one letter at a time.  Occurrences are
    detected from rolling integer codes of the last m letters, one lookup
    table per word length m.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    a, d, s = model.alphabet, model.order, model.alphabet.size
    rng = _rng(seed, bit_generator)

    lengths = sorted({len(w) for p in patterns for w in _words(p)})
    width = max(lengths)
    tables = {}
    for m in lengths:
        tab = np.zeros((s**m, len(patterns)), dtype=bool)
        for col, p in enumerate(patterns):
            for w in _words(p):
                if len(w) == m:
                    tab[a.word_index(w), col] = True
        tables[m] = tab
    keep = s ** max(width, d)

    code = np.zeros(reps, dtype=np.int64)
    counts = np.zeros((reps, len(patterns)), dtype=np.int64)

    def push(code: np.ndarray, letter: np.ndarray, pos: int) -> np.ndarray:
        code = (code * s + letter) % keep
        hits = np.zeros((reps, len(patterns)), dtype=bool)
        for m in lengths:
            if pos >= m:
                hits |= tables[m][code % s**m]
        counts[:] += hits
        return code

    if d:
        nu_cum = np.cumsum(model.nu)
        starts = np.minimum(np.searchsorted(nu_cum, rng.random(reps) * nu_cum[-1], side="right"), s**d - 1)
        for t in range(d):
            code = push(code, (starts // s ** (d - 1 - t)) % s, t + 1)
    for first, last, mat in model.blocks(seq_len):
        cum = np.cumsum(mat, axis=1)
        cum[:, -1] = np.inf
        for pos in range(first, last + 1):
            ctx = code % s**d if d else np.zeros(reps, dtype=np.int64)
            u = rng.random(reps)
            letter = (u[:, None] >= cum[ctx]).sum(axis=1)
            code = push(code, letter, pos)
    return counts


def monte_carlo(
    model: MarkovModel,
    pattern: Pattern | Iterable[str],
    seq_len: int,
    reps: int,
    seed: int,
    bit_generator: str = "PCG64",
) -> MonteCarloResult:
    """Sample moments of the count from ``reps`` simulated texts."""
    counts = monte_carlo_counts(model, [pattern], seq_len, reps, seed, bit_generator)[:, 0]
    return MonteCarloResult(counts, seed, bit_generator)
