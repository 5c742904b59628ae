"""Moments of pattern counts in Markov sequences."""

from .automaton import DNA, Alphabet, Dfa, Pattern, build_dfa, count_occurrences_naive, parse_pattern
from .embedding import EmbeddedChain, embed
from .model import MarkovModel, ecoli_model, load_model, parse_model
from .moments import (
    MomentSet,
    compute_moments,
    factorial_terms_full,
    factorial_terms_partial,
    factorial_terms_power,
    mixed_factorial_terms,
    moment_set,
)

__version__ = "0.1.0"

__all__ = [
    "DNA",
    "Alphabet",
    "Pattern",
    "Dfa",
    "parse_pattern",
    "build_dfa",
    "count_occurrences_naive",
    "MarkovModel",
    "parse_model",
    "load_model",
    "ecoli_model",
    "EmbeddedChain",
    "embed",
    "MomentSet",
    "moment_set",
    "compute_moments",
    "factorial_terms_full",
    "factorial_terms_power",
    "factorial_terms_partial",
    "mixed_factorial_terms",
]
