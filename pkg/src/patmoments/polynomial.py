"""Truncated polynomial arithmetic.

Polynomials in one or several variables are kept as coefficient arrays
with the degree axes first; every product drops the terms beyond the
requested degrees.  A polynomial matrix of size n x n in y truncated at
degree k is an array of shape ``(k + 1, n, n)``; with two variables
(y1, y2) truncated at (k1, k2) the shape is ``(k1 + 1, k2 + 1, n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncatedPoly",
    "truncated_matmul",
    "truncated_power",
    "poly_identity",
]


@dataclass(frozen=True, eq=False)
class TruncatedPoly:
    """Univariate polynomial in y with all terms above degree ``k`` dropped."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @classmethod
    def zeros(cls, k: int) -> "TruncatedPoly":
        return cls(np.zeros(k + 1))

    @property
    def k(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, j: int) -> float:
        return float(self.coeffs[j])

    def _check(self, other: "TruncatedPoly") -> None:
        if other.k != self.k:
            raise ValueError(f"truncation orders differ ({self.k} vs {other.k})")

    def __add__(self, other: "TruncatedPoly") -> "TruncatedPoly":
        self._check(other)
        return TruncatedPoly(self.coeffs + other.coeffs)

    def __sub__(self, other: "TruncatedPoly") -> "TruncatedPoly":
        self._check(other)
        return TruncatedPoly(self.coeffs - other.coeffs)

    def __mul__(self, other: "TruncatedPoly | float") -> "TruncatedPoly":
        if not isinstance(other, TruncatedPoly):
            return TruncatedPoly(self.coeffs * other)
        self._check(other)
        return TruncatedPoly(np.convolve(self.coeffs, other.coeffs)[: self.k + 1])

    __rmul__ = __mul__

    def __call__(self, y: float) -> float:
        return float(np.polynomial.polynomial.polyval(y, self.coeffs))

    def __repr__(self) -> str:
        return f"TruncatedPoly({self.coeffs.tolist()})"


def poly_identity(n: int, degrees: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(tuple(k + 1 for k in degrees) + (n, n))
    out[(0,) * len(degrees)] = np.eye(n)
    return out


def truncated_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two polynomial matrices, truncated to the operands' degrees.

    Entry (p, q) of the degree-c coefficient is the sum over a + b = c of
    ``sum_r A_a[p, r] * B_b[r, q]``.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim < 3 or a.shape[-1] != a.shape[-2]:
        raise ValueError("expected degree axes followed by a square matrix")
    degs = a.shape[:-2]
    out = np.zeros_like(a)
    nonzero_b = [idx for idx in np.ndindex(*degs) if b[idx].any()]
    for ia in np.ndindex(*degs):
        blk = a[ia]
        if not blk.any():
            continue
        for ib in nonzero_b:
            ic = tuple(x + y for x, y in zip(ia, ib))
            if all(c < n for c, n in zip(ic, degs)):
                out[ic] += blk @ b[ib]
    return out


def truncated_power(m: np.ndarray, exponent: int) -> np.ndarray:
    """``m ** exponent`` by binary decomposition of the exponent.

    The squares M_{2^j} are formed first, then multiplied together for the
    set bits, truncating after every product.
    """
    if exponent < 0:
        raise ValueError("negative exponent")
    degs = m.shape[:-2]
    n = m.shape[-1]
    squares = [m]
    for _ in range(1, max(exponent.bit_length(), 1)):
        squares.append(truncated_matmul(squares[-1], squares[-1]))
    result = poly_identity(n, tuple(k - 1 for k in degs))
    for j, sq in enumerate(squares):
        if exponent >> j & 1:
            result = truncated_matmul(result, sq)
    return result

