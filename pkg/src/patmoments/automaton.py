"""Pattern parsing and construction of the counting automaton.

A pattern is a finite set of words W.  The automaton recognises A*W (every
text that ends with an occurrence of some word of W) and is additionally
*non d-ambiguous*: every state reached after at least d letters determines
the last d letters read.  This is what lets an order-d Markov source be
embedded as a first-order chain over automaton states.

Construction pipeline::

    Aho-Corasick (failure closure)  ->  Hopcroft minimisation
        ->  product with a last-d-letters tracker
        ->  Hopcroft again, initial partition = (marks, d-label)

Several patterns can be tracked at once; each state then carries a bitmask
of the patterns whose occurrence ends there (used for mixed moments).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Alphabet",
    "DNA",
    "IUPAC_CODES",
    "Pattern",
    "Dfa",
    "parse_pattern",
    "build_dfa",
    "hopcroft_minimize",
    "count_occurrences_naive",
    "dump_dfa",
    "parse_dfa_dump",
]


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of single-character symbols."""

    symbols: str

    def __post_init__(self) -> None:
        if len(self.symbols) < 2:
            raise ValueError("alphabet needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbols in alphabet {self.symbols!r}")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, c: object) -> bool:
        return c in self._index  # type: ignore[attr-defined]

    def index(self, c: str) -> int:
        try:
            return self._index[c]  # type: ignore[attr-defined]
        except KeyError:
            raise ValueError(f"symbol {c!r} not in alphabet {self.symbols!r}") from None

    def encode(self, text: str) -> list[int]:
        return [self.index(c) for c in text]

    def words(self, n: int) -> Iterable[str]:
        """All words of length ``n`` in lexicographic (alphabet) order."""
        for tup in itertools.product(self.symbols, repeat=n):
            yield "".join(tup)

    def word_index(self, word: str) -> int:
        """Rank of ``word`` among ``words(len(word))``."""
        idx = 0
        for c in word:
            idx = idx * self.size + self.index(c)
        return idx


DNA = Alphabet("ACGT")

IUPAC_CODES: dict[str, str] = {
    "R": "AG",
    "Y": "CT",
    "S": "CG",
    "W": "AT",
    "K": "GT",
    "M": "AC",
    "B": "CGT",
    "D": "AGT",
    "H": "ACT",
    "V": "ACG",
    "N": "ACGT",
}


@dataclass(frozen=True)
class Pattern:
    """Finite set of words over an alphabet (sorted, no duplicates)."""

    words: tuple[str, ...]
    alphabet: Alphabet
    source: str = ""

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("pattern has no words")
        if any(not w for w in self.words):
            raise ValueError("pattern contains the empty word")
        for w in self.words:
            for c in w:
                self.alphabet.index(c)
        object.__setattr__(self, "words", tuple(sorted(set(self.words))))

    @classmethod
    def of(cls, words: Iterable[str], alphabet: Alphabet) -> "Pattern":
        words = tuple(words)
        return cls(words, alphabet, "|".join(words))

    @property
    def min_len(self) -> int:
        return min(len(w) for w in self.words)

    @property
    def max_len(self) -> int:
        return max(len(w) for w in self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __str__(self) -> str:
        return self.source or "|".join(self.words)


def parse_pattern(
    text: str,
    alphabet: Alphabet = DNA,
    codes: Mapping[str, str] | None = None,
) -> Pattern:
    """Expand a pattern string into its finite word set.

    ``text`` is either a single (possibly degenerate) word or a ``|``
    separated list of such words.  Degenerate characters are looked up in
    ``codes``; for the DNA alphabet the IUPAC table is used by default.

    >>> len(parse_pattern("GNNGNNGG"))
    256
    """
    text = text.strip()
    if not text:
        raise ValueError("empty pattern")
    if codes is None:
        codes = IUPAC_CODES if alphabet.symbols == DNA.symbols else {}
    words: set[str] = set()
    for part in text.split("|"):
        part = part.strip()
        if not part:
            raise ValueError(f"empty word in pattern {text!r}")
        choices = []
        for c in part:
            if c in alphabet:
                choices.append(c)
            elif c in codes:
                opts = "".join(x for x in codes[c] if x in alphabet)
                if not opts:
                    raise ValueError(f"code {c!r} expands to no symbol of {alphabet.symbols!r}")
                choices.append(opts)
            else:
                raise ValueError(f"unknown character {c!r} in pattern {text!r}")
        words.update("".join(t) for t in itertools.product(*choices))
    if not words:
        raise ValueError(f"pattern {text!r} expands to no word")
    return Pattern(tuple(words), alphabet, text)


def count_occurrences_naive(text: str, pattern: Pattern | Iterable[str]) -> int:
    """Number of end positions of ``text`` where some word of the pattern ends.

    Overlapping occurrences count; two words ending at the same position
    count once.
    """
    words = pattern.words if isinstance(pattern, Pattern) else tuple(pattern)
    return sum(
        1 for i in range(1, len(text) + 1) if any(text.endswith(w, 0, i) for w in words)
    )


@dataclass(frozen=True, eq=False)
class Dfa:
    """Complete DFA over ``alphabet`` with start state 0.

    ``marks[q]`` is a bitmask: bit ``b`` is set when reaching ``q`` completes
    an occurrence of pattern number ``b``.  Final states are those with a
    non-zero mark.  ``d_label[q]`` is the unique length-d word that can lead
    into ``q`` (empty string when ``q`` is only reachable by shorter words,
    and always empty when d = 0).
    """

    alphabet: Alphabet
    delta: np.ndarray
    marks: np.ndarray
    d_label: tuple[str, ...]
    order_d: int
    start: int = 0
    patterns: tuple[Pattern, ...] = field(default=(), repr=False)

    @property
    def num_states(self) -> int:
        return self.delta.shape[0]

    @property
    def finals(self) -> frozenset[int]:
        return frozenset(int(q) for q in np.flatnonzero(self.marks))

    def is_final(self, q: int) -> bool:
        return bool(self.marks[q])

    def run(self, text: str, state: int | None = None) -> int:
        q = self.start if state is None else state
        for c in text:
            q = int(self.delta[q, self.alphabet.index(c)])
        return q

    def trace(self, text: str) -> list[int]:
        """States visited after each letter of ``text``."""
        q = self.start
        out = []
        for c in text:
            q = int(self.delta[q, self.alphabet.index(c)])
            out.append(q)
        return out

    def count(self, text: str) -> int:
        """Occurrences of the pattern in ``text`` (entries into final states)."""
        return sum(1 for q in self.trace(text) if self.marks[q])

    def reachable_after(self, n: int) -> set[int]:
        """States reachable by words of length >= n (the embedding state space)."""
        level = {self.start}
        for _ in range(n):
            level = {int(self.delta[q, b]) for q in level for b in range(self.alphabet.size)}
        seen = set(level)
        stack = list(level)
        while stack:
            q = stack.pop()
            for b in range(self.alphabet.size):
                r = int(self.delta[q, b])
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return seen


# -- Aho-Corasick ------------------------------------------------------------


def _aho_corasick(groups: Sequence[Sequence[str]], alphabet: Alphabet):
    """Complete AC automaton: (delta, marks); node 0 is the root."""
    goto: list[dict[int, int]] = [{}]
    marks = [0]
    for bit, words in enumerate(groups):
        for w in words:
            node = 0
            for b in alphabet.encode(w):
                nxt = goto[node].get(b)
                if nxt is None:
                    nxt = len(goto)
                    goto[node][b] = nxt
                    goto.append({})
                    marks.append(0)
                node = nxt
            marks[node] |= 1 << bit

    s = alphabet.size
    n = len(goto)
    delta = np.zeros((n, s), dtype=np.int64)
    fail = [0] * n
    queue: deque[int] = deque()
    for b in range(s):
        child = goto[0].get(b)
        if child is None:
            delta[0, b] = 0
        else:
            delta[0, b] = child
            queue.append(child)
    # BFS order guarantees fail[node] is finished before node
    while queue:
        node = queue.popleft()
        marks[node] |= marks[fail[node]]
        for b in range(s):
            child = goto[node].get(b)
            if child is None:
                delta[node, b] = delta[fail[node], b]
            else:
                fail[child] = int(delta[fail[node], b])
                delta[node, b] = child
                queue.append(child)
    return delta, np.asarray(marks, dtype=np.int64)


# -- Hopcroft ----------------------------------------------------------------


def hopcroft_minimize(delta: np.ndarray, keys: Sequence[Hashable]) -> np.ndarray:
    """Coarsest partition compatible with ``keys`` and stable under ``delta``.

    Returns ``block[q]``, a block id per state (ids are arbitrary).  All
    states are assumed reachable; unreachable ones are simply partitioned
    along with the rest.
    """
    n, s = delta.shape
    inverse: list[list[list[int]]] = [[[] for _ in range(n)] for _ in range(s)]
    for p in range(n):
        for b in range(s):
            inverse[b][int(delta[p, b])].append(p)

    groups: dict[Hashable, set[int]] = {}
    for q, key in enumerate(keys):
        groups.setdefault(key, set()).add(q)
    blocks: list[set[int]] = list(groups.values())
    block_of = [0] * n
    for i, blk in enumerate(blocks):
        for q in blk:
            block_of[q] = i

    # all initial blocks but the largest are enough splitters
    largest = max(range(len(blocks)), key=lambda i: len(blocks[i]))
    waiting = {(i, b) for i in range(len(blocks)) if i != largest for b in range(s)}
    while waiting:
        splitter, b = waiting.pop()
        pre: set[int] = set()
        for q in blocks[splitter]:
            pre.update(inverse[b][q])
        touched: dict[int, set[int]] = {}
        for p in pre:
            touched.setdefault(block_of[p], set()).add(p)
        for y, inside in touched.items():
            if len(inside) == len(blocks[y]):
                continue
            outside = blocks[y] - inside
            blocks[y] = inside
            new = len(blocks)
            blocks.append(outside)
            for q in outside:
                block_of[q] = new
            for c in range(s):
                if (y, c) in waiting:
                    waiting.add((new, c))
                else:
                    waiting.add((y, c) if len(inside) <= len(outside) else (new, c))
    return np.asarray(block_of, dtype=np.int64)


def _quotient(delta: np.ndarray, block: np.ndarray, start: int):
    """Quotient automaton renumbered in BFS order from the start block.

    Returns (new_delta, rep) where rep[i] is one original state of block i.
    """
    s = delta.shape[1]
    rep_of_block: dict[int, int] = {}
    order: list[int] = []
    queue = deque([start])
    rep_of_block[int(block[start])] = 0
    order.append(start)
    while queue:
        q = queue.popleft()
        for b in range(s):
            r = int(delta[q, b])
            blk = int(block[r])
            if blk not in rep_of_block:
                rep_of_block[blk] = len(order)
                order.append(r)
                queue.append(r)
    new = np.empty((len(order), s), dtype=np.int64)
    for i, q in enumerate(order):
        for b in range(s):
            new[i, b] = rep_of_block[int(block[int(delta[q, b])])]
    return new, order


def build_dfa(patterns: Pattern | Sequence[Pattern], d: int) -> Dfa:
    """Minimal non d-ambiguous DFA recognising A*W.

    With several patterns the final states are split by a bitmask of the
    patterns completed there.
    """
    if isinstance(patterns, Pattern):
        patterns = (patterns,)
    patterns = tuple(patterns)
    if not patterns:
        raise ValueError("no pattern given")
    if d < 0:
        raise ValueError("order d must be >= 0")
    alphabet = patterns[0].alphabet
    for pat in patterns:
        if pat.alphabet != alphabet:
            raise ValueError("patterns use different alphabets")
        short = [w for w in pat.words if len(w) <= d]
        if short:
            raise ValueError(
                f"word {short[0]!r} is not longer than the model order d={d}"
            )

    delta, marks = _aho_corasick([p.words for p in patterns], alphabet)
    block = hopcroft_minimize(delta, [int(m) for m in marks])
    delta, order = _quotient(delta, block, 0)
    marks = marks[order]

    # product with the tracker of the last d letters
    s = alphabet.size
    symbols = alphabet.symbols
    index: dict[tuple[int, str], int] = {(0, ""): 0}
    pairs: list[tuple[int, str]] = [(0, "")]
    rows: list[list[int]] = []
    i = 0
    while i < len(pairs):
        q, u = pairs[i]
        row = []
        for b in range(s):
            nxt = (int(delta[q, b]), (u + symbols[b])[-d:] if d else "")
            j = index.get(nxt)
            if j is None:
                j = len(pairs)
                index[nxt] = j
                pairs.append(nxt)
            row.append(j)
        rows.append(row)
        i += 1
    pdelta = np.asarray(rows, dtype=np.int64)
    pmarks = np.asarray([marks[q] for q, _ in pairs], dtype=np.int64)
    plabel = [u if len(u) == d else "" for _, u in pairs]

    keys = [(int(m), lab) for m, lab in zip(pmarks, plabel)]
    block = hopcroft_minimize(pdelta, keys)
    fdelta, order = _quotient(pdelta, block, 0)
    return Dfa(
        alphabet=alphabet,
        delta=fdelta,
        marks=pmarks[order],
        d_label=tuple(plabel[q] for q in order),
        order_d=d,
        patterns=patterns,
    )


# -- dump format -------------------------------------------------------------


def dump_dfa(dfa: Dfa) -> str:
    """One line per state: ``id<TAB>mark<TAB>d_label<TAB>succ_0,...``."""
    lines = [
        f"# alphabet={dfa.alphabet.symbols} order={dfa.order_d} "
        f"start={dfa.start} states={dfa.num_states}"
    ]
    for q in range(dfa.num_states):
        succ = ",".join(str(int(r)) for r in dfa.delta[q])
        lines.append(f"{q}\t{int(dfa.marks[q])}\t{dfa.d_label[q]}\t{succ}")
    return "\n".join(lines) + "\n"


def parse_dfa_dump(text: str) -> Dfa:
    header: dict[str, str] = {}
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    header[k] = v
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"malformed DFA dump line: {line!r}")
        rows.append((int(fields[0]), int(fields[1]), fields[2], [int(x) for x in fields[3].split(",")]))
    if "alphabet" not in header or "order" not in header:
        raise ValueError("DFA dump lacks the alphabet/order header")
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError("DFA dump state ids are not dense")
    return Dfa(
        alphabet=Alphabet(header["alphabet"]),
        delta=np.asarray([r[3] for r in rows], dtype=np.int64),
        marks=np.asarray([r[1] for r in rows], dtype=np.int64),
        d_label=tuple(r[2] for r in rows),
        order_d=int(header["order"]),
        start=int(header.get("start", 0)),
    )
