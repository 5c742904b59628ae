"""Order-d Markov sources and their text file format.

File format (``#`` starts a comment)::

    alphabet: ACGT
    order: 1
    nu:
    A 1.0
    C 0
    G 0
    T 0
    pi:
    0.30 0.21 0.22 0.27
    ...

``pi:`` holds s**d rows of s probabilities, in lexicographic order of the
context word; a row may also be prefixed by its context word.  A
heterogeneous source replaces ``pi:`` with blocks ``pi[i..j]:`` giving the
transition matrix used for the letters at positions i..j (1-based).  The
``nu:`` block may be omitted, meaning uniform; for d = 0 it is ignored.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .automaton import Alphabet

__all__ = [
    "MarkovModel",
    "ModelFormatError",
    "NormalizationWarning",
    "parse_model",
    "load_model",
    "format_model",
    "ecoli_model",
]

NORMALIZATION_WARN = 1e-3


class ModelFormatError(ValueError):
    pass


class NormalizationWarning(UserWarning):
    pass


def _normalize(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: negative or non-finite probability")
    sums = arr.sum(axis=-1, keepdims=True)
    if np.any(sums <= 0):
        raise ValueError(f"{what}: a row sums to zero")
    dev = np.abs(sums - 1.0)
    if np.any(dev > NORMALIZATION_WARN):
        worst = int(np.argmax(dev.ravel()))
        warnings.warn(
            f"{what}: row {worst} sums to {sums.ravel()[worst]:.6g}, renormalized",
            NormalizationWarning,
            stacklevel=3,
        )
    return arr / sums


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """Order-d source over ``alphabet``.

    ``nu`` is indexed by the rank of the first d letters (length 1 when
    d = 0).  Exactly one of ``pi`` (homogeneous, shape ``(s**d, s)``) and
    ``schedule`` (tuple of ``(first, last, pi)`` blocks with 1-based,
    inclusive letter positions, starting at d + 1) is set.  Rows are
    renormalised on construction.
    """

    alphabet: Alphabet
    order: int
    nu: np.ndarray
    pi: np.ndarray | None = None
    schedule: tuple[tuple[int, int, np.ndarray], ...] | None = None

    def __post_init__(self) -> None:
        d, s = self.order, self.alphabet.size
        if d < 0:
            raise ValueError("order must be >= 0")
        nctx = s**d
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if d == 0:
            nu = np.ones(1)
        if nu.shape != (nctx,):
            raise ValueError(f"nu must have {nctx} entries, got {nu.shape}")
        object.__setattr__(self, "nu", _normalize(nu, "nu"))
        if (self.pi is None) == (self.schedule is None):
            raise ValueError("give exactly one of pi and schedule")
        if self.pi is not None:
            pi = np.asarray(self.pi, dtype=float)
            if pi.shape != (nctx, s):
                raise ValueError(f"pi must have shape {(nctx, s)}, got {pi.shape}")
            object.__setattr__(self, "pi", _normalize(pi, "pi"))
        else:
            blocks = []
            expect = d + 1
            for first, last, mat in self.schedule:  # type: ignore[union-attr]
                mat = np.asarray(mat, dtype=float)
                if mat.shape != (nctx, s):
                    raise ValueError(f"pi[{first}..{last}] must have shape {(nctx, s)}")
                if first != expect or last < first:
                    raise ValueError(
                        f"schedule block [{first}..{last}] does not continue at position {expect}"
                    )
                blocks.append((int(first), int(last), _normalize(mat, f"pi[{first}..{last}]")))
                expect = last + 1
            if not blocks:
                raise ValueError("empty schedule")
            object.__setattr__(self, "schedule", tuple(blocks))

    # constructors ---------------------------------------------------------

    @classmethod
    def iid(cls, alphabet: Alphabet, probs) -> "MarkovModel":
        probs = np.asarray(probs, dtype=float).reshape(1, -1)
        return cls(alphabet, 0, np.ones(1), pi=probs)

    @classmethod
    def uniform(cls, alphabet: Alphabet, order: int = 0) -> "MarkovModel":
        s = alphabet.size
        return cls(alphabet, order, np.full(s**order, 1.0 / s**order), pi=np.full((s**order, s), 1.0 / s))

    # queries --------------------------------------------------------------

    @property
    def is_homogeneous(self) -> bool:
        return self.pi is not None

    @property
    def last_position(self) -> int | None:
        """Last letter position covered by the schedule (None if homogeneous)."""
        return None if self.schedule is None else self.schedule[-1][1]

    def blocks(self, seq_len: int) -> list[tuple[int, int, np.ndarray]]:
        """Transition blocks covering positions d+1..seq_len."""
        d = self.order
        if seq_len <= d:
            raise ValueError(f"sequence length {seq_len} must exceed the order {d}")
        if self.pi is not None:
            return [(d + 1, seq_len, self.pi)]
        if self.last_position < seq_len:
            raise ValueError(
                f"schedule covers positions up to {self.last_position}, sequence length is {seq_len}"
            )
        out = []
        for first, last, mat in self.schedule:  # type: ignore[union-attr]
            if first > seq_len:
                break
            out.append((first, min(last, seq_len), mat))
        return out

    def transition_at(self, pos: int) -> np.ndarray:
        if self.pi is not None:
            return self.pi
        for first, last, mat in self.schedule:  # type: ignore[union-attr]
            if first <= pos <= last:
                return mat
        raise ValueError(f"position {pos} not covered by the schedule")

    def nu_of(self, word: str) -> float:
        if self.order == 0:
            return 1.0
        return float(self.nu[self.alphabet.word_index(word)])

    def pi_row(self, context: str, pos: int | None = None) -> np.ndarray:
        mat = self.pi if pos is None else self.transition_at(pos)
        return mat[self.alphabet.word_index(context) if self.order else 0]

    def text_probability(self, text: str) -> float:
        d = self.order
        p = self.nu_of(text[:d])
        for i in range(d, len(text)):
            p *= self.transition_at(i + 1)[
                self.alphabet.word_index(text[i - d : i]) if d else 0, self.alphabet.index(text[i])
            ]
        return p


# -- text format ---------------------------------------------------------------

_BLOCK = re.compile(r"^pi\[\s*(\d+)\s*\.\.\s*(\d+)\s*\]\s*:\s*$")


def parse_model(source: str | Path) -> MarkovModel:
    """Parse the model text format (``source`` is a path or the text itself)."""
    if isinstance(source, Path) or ("\n" not in source and Path(source).exists()):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    alphabet: Alphabet | None = None
    order: int | None = None
    nu_lines: list[list[str]] = []
    pi_rows: list[list[str]] | None = None
    blocks: list[tuple[int, int, list[list[str]]]] = []
    current: list[list[str]] | None = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("alphabet:"):
            alphabet = Alphabet(line.split(":", 1)[1].strip())
            current = None
        elif low.startswith("order:"):
            try:
                order = int(line.split(":", 1)[1])
            except ValueError:
                raise ModelFormatError(f"line {lineno}: bad order {line!r}") from None
            current = None
        elif low == "nu:":
            current = nu_lines
        elif low == "pi:":
            pi_rows = []
            current = pi_rows
        elif m := _BLOCK.match(line):
            rows: list[list[str]] = []
            blocks.append((int(m.group(1)), int(m.group(2)), rows))
            current = rows
        elif current is not None:
            current.append(line.split())
        else:
            raise ModelFormatError(f"line {lineno}: unexpected content {raw!r}")

    if alphabet is None or order is None:
        raise ModelFormatError("model file needs 'alphabet:' and 'order:' lines")
    if pi_rows is not None and blocks:
        raise ModelFormatError("model file mixes 'pi:' and 'pi[i..j]:' blocks")
    if pi_rows is None and not blocks:
        raise ModelFormatError("model file has no transition block")

    s, d = alphabet.size, order
    nctx = s**d
    contexts = list(alphabet.words(d))

    def floats(tokens: list[str], where: str) -> list[float]:
        try:
            return [float(t) for t in tokens]
        except ValueError:
            raise ModelFormatError(f"{where}: non-numeric entry in {tokens}") from None

    def matrix(rows: list[list[str]], where: str) -> np.ndarray:
        if len(rows) != nctx:
            raise ModelFormatError(f"{where}: expected {nctx} rows, got {len(rows)}")
        out = np.full((nctx, s), np.nan)
        for i, toks in enumerate(rows):
            idx = i
            if len(toks) == s + 1:
                if len(toks[0]) != d or any(c not in alphabet for c in toks[0]):
                    raise ModelFormatError(f"{where}: bad context label {toks[0]!r}")
                idx = alphabet.word_index(toks[0]) if d else 0
                toks = toks[1:]
            if len(toks) != s:
                raise ModelFormatError(f"{where}: row {i + 1} needs {s} probabilities")
            if not np.all(np.isnan(out[idx])):
                raise ModelFormatError(f"{where}: context {contexts[idx]!r} given twice")
            out[idx] = floats(toks, where)
        if np.any(out < 0):
            raise ModelFormatError(f"{where}: negative probability")
        return out

    if d == 0 or not nu_lines:
        nu = np.full(nctx, 1.0 / nctx)
    else:
        nu = np.zeros(nctx)
        seen = set()
        for toks in nu_lines:
            if len(toks) != 2 or toks[0] not in contexts:
                raise ModelFormatError(f"nu: bad entry {' '.join(toks)!r}")
            if toks[0] in seen:
                raise ModelFormatError(f"nu: context {toks[0]!r} given twice")
            seen.add(toks[0])
            nu[alphabet.word_index(toks[0])] = floats(toks[1:], "nu")[0]
        if np.any(nu < 0):
            raise ModelFormatError("nu: negative probability")

    try:
        if pi_rows is not None:
            return MarkovModel(alphabet, d, nu, pi=matrix(pi_rows, "pi"))
        sched = tuple((a, b, matrix(rows, f"pi[{a}..{b}]")) for a, b, rows in blocks)
        return MarkovModel(alphabet, d, nu, schedule=sched)
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def _fmt_row(row) -> str:
    return " ".join(f"{x:.17g}" for x in row)


def format_model(model: MarkovModel) -> str:
    """Inverse of :func:`parse_model`."""
    a, d = model.alphabet, model.order
    lines = [f"alphabet: {a.symbols}", f"order: {d}"]
    contexts = list(a.words(d))
    if d:
        lines.append("nu:")
        lines += [f"{c} {p:.17g}" for c, p in zip(contexts, model.nu)]
    mats = [("pi:", model.pi)] if model.pi is not None else [
        (f"pi[{f}..{l}]:", m) for f, l, m in model.schedule  # type: ignore[union-attr]
    ]
    for head, mat in mats:
        lines.append(head)
        for c, row in zip(contexts, mat):
            lines.append(f"{c} {_fmt_row(row)}" if d else _fmt_row(row))
    return "\n".join(lines) + "\n"


BUILTIN_MODELS = {"ecoli": "ecoli.mm"}


def load_model(name_or_path: str | Path) -> MarkovModel:
    """Load a model file, or a built-in model by name (``ecoli``)."""
    key = str(name_or_path)
    if key in BUILTIN_MODELS and not Path(key).exists():
        text = resources.files("patmoments.data").joinpath(BUILTIN_MODELS[key]).read_text("utf-8")
        return parse_model(text)
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    return parse_model(path)


def ecoli_model() -> MarkovModel:
    """Order-1 E. coli genome model; sequences start with ``A``.

    Row ``C`` sums to 1.01 as printed and is renormalised silently here.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormalizationWarning)
        return load_model("ecoli")

