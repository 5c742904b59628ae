"""Moment-based approximations of a count distribution.

Two families are provided:

* Edgeworth expansion around the Gaussian, built from the cumulants;
* Gram-Charlier type B series around the Poisson pmf, built from the
  factorial terms g_j.

The Edgeworth series of order s for the standardized variable is

    q(x) = Z(x) * (1 + sum_{t=1..s} sigma^t sum_{k in K_t} H_{t+2r}(x)
                   prod_m (S_{m+2} / (m+2)!)^{k_m} / k_m!)

with S_j = kappa_j / sigma^(2j-2), K_t the non-negative solutions of
k_1 + 2 k_2 + ... + t k_t = t and r = k_1 + ... + k_t.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import poisson

from .moments import MomentSet, raw_from_factorial

__all__ = [
    "HermitePoly",
    "hermite",
    "PartitionSet",
    "diophantine_partitions",
    "EdgeworthSpec",
    "edgeworth_density",
    "edgeworth_pmf",
    "LambdaPoly",
    "lambda_poly_table",
    "GramCharlierSpec",
    "ReliabilityWarning",
    "gram_charlier_coeffs",
    "gram_charlier_pmf",
    "relative_error_curve",
]

MAX_HERMITE = 20
MAX_PARTITION = 12
MAX_LAMBDA = 16


class ReliabilityWarning(UserWarning):
    """Some series coefficients were dropped as numerically unreliable."""


# -- Hermite polynomials ----------------------------------------------------------


@dataclass(frozen=True)
class HermitePoly:
    """Probabilists' Hermite polynomial, coefficients in increasing powers of x."""

    degree: int
    coeffs: tuple[float, ...]

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


@lru_cache(maxsize=None)
def hermite(k: int) -> HermitePoly:
    """H_k from H_0 = 1 and H_k = x H_{k-1} - H'_{k-1}."""
    if not 0 <= k <= MAX_HERMITE:
        raise ValueError(f"Hermite degree must lie in 0..{MAX_HERMITE}, got {k}")
    if k == 0:
        return HermitePoly(0, (1.0,))
    prev = np.array(hermite(k - 1).coeffs)
    out = np.zeros(k + 1)
    out[1:] += prev
    out[: k - 1] -= np.polynomial.polynomial.polyder(prev) if k > 1 else 0.0
    return HermitePoly(k, tuple(float(c) for c in out))


# -- Diophantine partitions -------------------------------------------------------


@dataclass(frozen=True)
class PartitionSet:
    """Solutions (k_1..k_s) of sum_m m k_m = s; ``r[i]`` is the part count of solution i."""

    s: int
    solutions: tuple[tuple[int, ...], ...]

    @property
    def r(self) -> tuple[int, ...]:
        return tuple(sum(sol) for sol in self.solutions)

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)


def _partitions(n: int, largest: int):
    if n == 0:
        yield ()
        return
    for part in range(min(n, largest), 0, -1):
        for rest in _partitions(n - part, part):
            yield (part,) + rest


@lru_cache(maxsize=None)
def diophantine_partitions(s: int) -> PartitionSet:
    """All multiplicity vectors of the integer partitions of ``s``.

    Ordered by largest part, then by decreasing k_1, k_2, ...
    """
    if not 1 <= s <= MAX_PARTITION:
        raise ValueError(f"order must lie in 1..{MAX_PARTITION}, got {s}")
    sols = []
    for parts in _partitions(s, s):
        k = [0] * s
        for p in parts:
            k[p - 1] += 1
        sols.append(tuple(k))
    sols.sort(key=lambda k: (max(m + 1 for m, c in enumerate(k) if c), tuple(-c for c in k)))
    return PartitionSet(s, tuple(sols))


# -- Edgeworth expansion ------------------------------------------------------------


@dataclass(frozen=True)
class EdgeworthSpec:
    """Order-s Edgeworth expansion; ``S[j]`` holds kappa_j / sigma^(2j-2) for j >= 3."""

    order: int
    sigma: float
    S: dict[int, float]

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        missing = [j for j in range(3, self.order + 3) if j not in self.S]
        if missing:
            raise ValueError(f"missing scaled cumulants S_{missing}")

    @classmethod
    def from_cumulants(cls, cumulants, order: int) -> "EdgeworthSpec":
        """From kappa_0..kappa_m (entry 0 ignored); needs m >= order + 2."""
        kappa = np.asarray(cumulants, dtype=float)
        if len(kappa) < order + 3:
            raise ValueError(f"order {order} needs cumulants up to {order + 2}")
        if kappa[2] <= 0:
            raise ValueError("variance must be positive")
        sigma = math.sqrt(kappa[2])
        S = {j: float(kappa[j] / sigma ** (2 * j - 2)) for j in range(3, order + 3)}
        return cls(order, sigma, S)


def _gauss(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def edgeworth_density(x, spec: EdgeworthSpec):
    """Density q of the standardized variable at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    corr = np.ones_like(x)
    for t in range(1, spec.order + 1):
        inner = np.zeros_like(x)
        for k, r in zip(diophantine_partitions(t), diophantine_partitions(t).r):
            w = 1.0
            for m, km in enumerate(k, start=1):
                if km:
                    w *= (spec.S[m + 2] / math.factorial(m + 2)) ** km / math.factorial(km)
            inner += w * hermite(t + 2 * r)(x)
        corr += spec.sigma**t * inner
    out = _gauss(x) * corr
    return float(out) if out.ndim == 0 else out


def edgeworth_pmf(n, moments: MomentSet, s: int):
    """P(N = n) as (1/sigma) q((n - mean) / sigma), evaluated without a continuity correction."""
    spec = EdgeworthSpec.from_cumulants(moments.cumulants, s)
    n = np.asarray(n, dtype=float)
    return edgeworth_density((n - moments.cumulants[1]) / spec.sigma, spec) / spec.sigma


# -- Gram-Charlier type B ------------------------------------------------------------


@dataclass(frozen=True)
class LambdaPoly:
    """Polynomial in lambda, coefficients in increasing powers."""

    coeffs: tuple[float, ...]

    def __call__(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.coeffs)

    def derivative(self) -> "LambdaPoly":
        d = np.polynomial.polynomial.polyder(np.array(self.coeffs)) if len(self.coeffs) > 1 else [0.0]
        return LambdaPoly(tuple(float(c) for c in d))

    def times_lambda(self) -> "LambdaPoly":
        return LambdaPoly((0.0,) + self.coeffs)

    def __add__(self, other: "LambdaPoly") -> "LambdaPoly":
        return LambdaPoly(tuple(float(c) for c in np.polynomial.polynomial.polyadd(self.coeffs, other.coeffs)))

    def __neg__(self) -> "LambdaPoly":
        return LambdaPoly(tuple(-c for c in self.coeffs))


@lru_cache(maxsize=None)
def lambda_poly_table(K: int) -> tuple[tuple[LambdaPoly, ...], ...]:
    """``table[k][j]`` = P_k^j(lambda) = sum_i i^k (Delta^j psi)(i) for 0 <= k, j <= K."""
    if not 0 <= K <= MAX_LAMBDA:
        raise ValueError(f"K must lie in 0..{MAX_LAMBDA}, got {K}")
    rows: list[list[LambdaPoly]] = []
    p0 = LambdaPoly((1.0,))
    for k in range(K + 1):
        if k:
            prev = rows[-1][0]
            p0 = (prev + prev.derivative()).times_lambda()
        row = [p0]
        for _ in range(K):
            row.append(-row[-1].derivative())
        rows.append(row)
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class GramCharlierSpec:
    """Series sum_j c_j Delta^j psi around Poisson(lam); ``reliable[j]`` flags kept terms."""

    lam: float
    coeffs: tuple[float, ...]
    reliable: tuple[bool, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


def gram_charlier_coeffs(
    g,
    lam: float | None = None,
    s: int | None = None,
    rel_tol: float = 1e-6,
    max_cancellation: float = 1e8,
) -> GramCharlierSpec:
    """Coefficients c_0..c_s from the factorial terms ``g`` (g[0] is taken as 1).

    The direct route is c_k = sum_j (-1)^j g_j lam^(k-j) / (k-j)!.  Each
    c_k is also obtained by forward substitution in the moment system
    sum_j c_j P_k^j(lam) = E[N^k]; a coefficient is dropped (set to 0) if the
    two disagree beyond ``rel_tol`` or if its largest summand exceeds the
    result by more than ``max_cancellation``.  A coefficient that vanishes
    to within rounding of its summands is reported as an exact zero.
    """
    g = np.array(g, dtype=float)
    g[0] = 1.0
    if s is None:
        s = len(g) - 1
    if s > len(g) - 1:
        raise ValueError(f"order {s} needs g up to {s}, got {len(g) - 1}")
    if lam is None:
        lam = float(g[1]) if len(g) > 1 else 1.0
    if not lam > 0:
        raise ValueError("lambda must be positive")

    eps = np.finfo(float).eps
    direct = np.zeros(s + 1)
    scale = np.zeros(s + 1)
    for k in range(s + 1):
        terms = np.array([(-1) ** j * g[j] * lam ** (k - j) / math.factorial(k - j) for j in range(k + 1)])
        direct[k] = math.fsum(terms)
        scale[k] = np.abs(terms).max()

    raw = raw_from_factorial(g[: s + 1])
    table = lambda_poly_table(s)
    solved = np.zeros(s + 1)
    for k in range(s + 1):
        acc = raw[k] - math.fsum(solved[j] * table[k][j](lam) for j in range(k))
        solved[k] = acc / table[k][k](lam)

    coeffs = direct.copy()
    reliable = [True] * (s + 1)
    for k in range(1, s + 1):
        if abs(direct[k]) <= 16 * eps * scale[k] * (k + 1):
            coeffs[k] = 0.0
            continue
        disagree = abs(direct[k] - solved[k]) > rel_tol * abs(direct[k])
        if disagree or scale[k] / abs(direct[k]) > max_cancellation:
            reliable[k] = False
            coeffs[k] = 0.0
    if not all(reliable):
        dropped = [k for k, ok in enumerate(reliable) if not ok]
        warnings.warn(f"unreliable Gram-Charlier coefficients dropped: {dropped}", ReliabilityWarning, stacklevel=2)
    return GramCharlierSpec(float(lam), tuple(float(c) for c in coeffs), tuple(reliable))


def gram_charlier_pmf(n, spec: GramCharlierSpec):
    """sum_j c_j (Delta^j psi)(n), with Delta psi(i) = psi(i) - psi(i-1) and psi(-1) = 0."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    out = np.zeros(n.shape, dtype=float)
    for j, c in enumerate(spec.coeffs):
        if c == 0.0:
            continue
        diff = np.zeros(n.shape, dtype=float)
        for t in range(j + 1):
            diff += (-1) ** t * math.comb(j, t) * poisson.pmf(n - t, spec.lam)
        out += c * diff
    return float(out) if out.ndim == 0 else out


def relative_error_curve(exact, approx) -> np.ndarray:
    """log10 |approx - exact| / exact, pointwise; -inf where they coincide."""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log10(np.abs(approx - exact) / exact)
