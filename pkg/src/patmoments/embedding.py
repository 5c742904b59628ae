"""Markov chain embedding of a pattern problem.

The sequence of automaton states visited while reading an order-d text is
a first-order chain over Q' (states reachable by words of length >= d).
Its transition matrix T at letter position i+d is

    T(p, q) = sum of pi_{i+d}(label(p), b) over letters b with delta(p, b) = q

and it splits as T = P + Q where Q keeps the columns of final states.

Every row of T has at most s non-zeros (one per letter), so matrices are
stored row-compressed with fixed width s: ``cols[p, b]`` is the successor
of ``p`` by letter ``b`` and ``vals[p, b]`` its probability.  Repeated
columns in a row are summed by every kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .automaton import Dfa
from .model import MarkovModel

__all__ = ["RowCompressed", "TransitionBlock", "EmbeddedChain", "embed"]


@dataclass(frozen=True, eq=False)
class RowCompressed:
    """Square sparse matrix with a fixed number of stored entries per row."""

    cols: np.ndarray
    vals: np.ndarray

    @property
    def n(self) -> int:
        return self.cols.shape[0]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.vals))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``A @ x`` for ``x`` of shape (n,) or (n, m)."""
        g = x.take(self.cols, axis=0)
        if x.ndim == 1:
            return np.einsum("pb,pb->p", self.vals, g)
        if x.ndim == 2:
            return np.matmul(self.vals[:, None, :], g)[:, 0, :]
        return np.einsum("pb,pb...->p...", self.vals, g)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """``v @ A`` (i.e. ``A.T @ v``) for ``v`` of shape (n,) or (n, m)."""
        tr = self._transpose()
        contrib = tr["vals"].reshape((-1,) + (1,) * (v.ndim - 1)) * v[tr["rows"]]
        out = np.zeros((self.n,) + v.shape[1:], dtype=np.result_type(v, self.vals))
        out[tr["targets"]] = np.add.reduceat(contrib, tr["starts"], axis=0)
        return out

    def _transpose(self) -> dict[str, np.ndarray]:
        cached = self.__dict__.get("_tr")
        if cached is None:
            flat_cols = self.cols.ravel()
            order = np.argsort(flat_cols, kind="stable")
            sorted_cols = flat_cols[order]
            targets, starts = np.unique(sorted_cols, return_index=True)
            cached = {
                "rows": order // self.cols.shape[1],
                "vals": self.vals.ravel()[order],
                "targets": targets,
                "starts": starts,
            }
            object.__setattr__(self, "_tr", cached)
        return cached

    def masked(self, keep_cols: np.ndarray) -> "RowCompressed":
        """Same sparsity pattern with entries outside ``keep_cols`` zeroed."""
        return RowCompressed(self.cols, np.where(keep_cols[self.cols], self.vals, 0.0))

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (np.repeat(np.arange(self.n), self.cols.shape[1]), self.cols.ravel()), self.vals.ravel())
        return out

    def row_sums(self) -> np.ndarray:
        return self.vals.sum(axis=1)


@dataclass(frozen=True, eq=False)
class TransitionBlock:
    """Transition matrix shared by letter positions ``first..last``."""

    first: int
    last: int
    T: RowCompressed

    @property
    def steps(self) -> int:
        return self.last - self.first + 1


@dataclass(frozen=True, eq=False)
class EmbeddedChain:
    """Embedded first-order chain over Q'.

    ``states[i]`` is the automaton state behind chain index ``i``;
    ``marks`` holds the pattern bitmask of each chain state.
    """

    dfa: Dfa
    states: np.ndarray
    mu: np.ndarray
    marks: np.ndarray
    blocks: tuple[TransitionBlock, ...]
    seq_len: int
    order: int
    homogeneous: bool

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def final(self) -> np.ndarray:
        return self.marks != 0

    @property
    def steps(self) -> int:
        """Number of transitions, l - d."""
        return self.seq_len - self.order

    @property
    def T(self) -> RowCompressed:
        """The transition matrix of a homogeneous chain."""
        if len(self.blocks) != 1:
            raise ValueError("chain has several transition blocks")
        return self.blocks[0].T

    @property
    def Q(self) -> RowCompressed:
        return self.T.masked(self.final)

    @property
    def P(self) -> RowCompressed:
        return self.T.masked(~self.final)

    def mark_mask(self, bit: int) -> np.ndarray:
        return (self.marks >> bit) & 1 == 1

    def at(self, pos: int) -> RowCompressed:
        """T for the letter at 1-based position ``pos`` (d < pos <= l)."""
        for blk in self.blocks:
            if blk.first <= pos <= blk.last:
                return blk.T
        raise IndexError(f"position {pos} outside {self.order + 1}..{self.seq_len}")

    def positions(self, reverse: bool = False) -> Iterator[tuple[int, RowCompressed]]:
        blocks = reversed(self.blocks) if reverse else self.blocks
        for blk in blocks:
            rng = range(blk.last, blk.first - 1, -1) if reverse else range(blk.first, blk.last + 1)
            for pos in rng:
                yield pos, blk.T

    def with_length(self, seq_len: int) -> "EmbeddedChain":
        """Homogeneous chain of another sequence length."""
        if not self.homogeneous:
            raise ValueError("only a homogeneous chain can be re-lengthened")
        if seq_len <= self.order:
            raise ValueError("sequence length must exceed the order")
        blk = TransitionBlock(self.order + 1, seq_len, self.T)
        return EmbeddedChain(
            self.dfa, self.states, self.mu, self.marks, (blk,), seq_len, self.order, True
        )


def embed(dfa: Dfa, model: MarkovModel, seq_len: int) -> EmbeddedChain:
    """Embed ``model`` through ``dfa`` for sequences of length ``seq_len``."""
    d = model.order
    if dfa.order_d != d:
        raise ValueError(f"automaton built for order {dfa.order_d}, model has order {d}")
    if dfa.alphabet != model.alphabet:
        raise ValueError("automaton and model alphabets differ")
    if seq_len <= d:
        raise ValueError(f"sequence length {seq_len} must exceed the order {d}")
    blocks = model.blocks(seq_len)

    states = np.asarray(sorted(dfa.reachable_after(d)), dtype=np.int64)
    index = np.full(dfa.num_states, -1, dtype=np.int64)
    index[states] = np.arange(len(states))
    if d and any(dfa.d_label[q] == "" for q in states):
        raise ValueError("automaton is not non-d-ambiguous on Q'")

    # X~_d = delta(start, X_1^d), so mass nu(u) goes to the state reached by u
    mu = np.zeros(len(states))
    a = dfa.alphabet
    if d == 0:
        mu[index[dfa.start]] = 1.0
    else:
        for u in a.words(d):
            mu[index[dfa.run(u)]] += model.nu_of(u)

    cols = index[dfa.delta[states]]
    ctx = np.asarray([a.word_index(dfa.d_label[q]) if d else 0 for q in states])
    tblocks = tuple(
        TransitionBlock(first, last, RowCompressed(cols, np.ascontiguousarray(mat[ctx])))
        for first, last, mat in blocks
    )
    return EmbeddedChain(
        dfa=dfa,
        states=states,
        mu=mu,
        marks=dfa.marks[states],
        blocks=tblocks,
        seq_len=seq_len,
        order=d,
        homogeneous=model.is_homogeneous,
    )
