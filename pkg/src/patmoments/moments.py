"""Factorial moments of a pattern count and derived statistics.

With ``g(y) = mu (prod_i (T_i + y Q_i)) 1`` the degree-j coefficient is
``g_j = E[N! / (N - j)!] / j!``.  Three routes compute g_0..g_k:

* :func:`factorial_terms_full`: backward recursion over all positions
  (any chain, time linear in the sequence length);
* :func:`factorial_terms_power`: truncated binary powering of T + yQ
  (homogeneous chains, logarithmic in the length, cubic in |Q'|);
* :func:`factorial_terms_partial`: finite differences of F_i(y) = (T+yQ)^i 1
  up to a pivot alpha, then polynomial extrapolation to l - d
  (homogeneous chains, logarithmic in the length, sparse products only).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from .embedding import EmbeddedChain, RowCompressed
from .polynomial import truncated_power

__all__ = [
    "AccuracyWarning",
    "MomentSet",
    "PartialTable",
    "PartialResult",
    "PartialRecursion",
    "factorial_terms_full",
    "factorial_terms_power",
    "partial_recursion_table",
    "factorial_terms_partial",
    "stability_scan",
    "mixed_factorial_terms",
    "raw_from_factorial",
    "centered_from_raw",
    "cumulants_from_raw",
    "moment_set",
    "compute_moments",
    "stirling2",
]

MAX_ORDER = 16

Rule = Literal["diff", "matrix", "combined"]


class AccuracyWarning(UserWarning):
    """A numerical result is returned with a degraded accuracy estimate."""


def _require_homogeneous(chain: EmbeddedChain, what: str) -> None:
    if not chain.homogeneous:
        raise ValueError(f"{what} requires homogeneous model")


def _apply(T: RowCompressed, final_idx: np.ndarray, e: np.ndarray) -> np.ndarray:
    """tau_k[(T + yQ) E] for a polynomial vector ``e`` of shape (L, k + 1).

    Q = T diag(1_F), so the y-shift is applied to the final rows of ``e``
    before the sparse product.
    """
    g = e.copy()
    g[final_idx, 1:] += e[final_idx, :-1]
    return T.matvec(g)


# -- algorithm 1: full recursion ------------------------------------------------


def factorial_terms_full(chain: EmbeddedChain, k: int) -> np.ndarray:
    """g_0..g_k by backward recursion E_j(i) = T E_j(i+1) + Q E_{j-1}(i+1).

    Works for heterogeneous chains.  Workspace is one (L, k+1) array.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    final_idx = np.flatnonzero(chain.final)
    e = np.zeros((chain.size, k + 1))
    e[:, 0] = 1.0
    # the first step from E = 1 yields E_0 = 1, E_1 = Q_l 1, E_j = 0 (j >= 2)
    for blk in reversed(chain.blocks):
        T = blk.T
        for _ in range(blk.steps):
            e = _apply(T, final_idx, e)
    return chain.mu @ e


# -- algorithm 2: truncated power -----------------------------------------------


def factorial_terms_power(chain: EmbeddedChain, k: int) -> np.ndarray:
    """g_0..g_k from M_{l-d}(y) = tau_k[(T + yQ)^(l-d)] by binary powering."""
    if k < 0:
        raise ValueError("k must be >= 0")
    _require_homogeneous(chain, "power")
    T = chain.T.toarray()
    m = np.zeros((k + 1, chain.size, chain.size))
    m[0] = T
    if k >= 1:
        m[1] = T * chain.final[None, :]
    mpow = truncated_power(m, chain.steps)
    return mpow.sum(axis=2) @ chain.mu


# -- algorithm 3: partial recursion ---------------------------------------------


@dataclass
class PartialTable:
    """Finite differences D[k, j] = D_k^j(alpha) for 0 <= k <= K, 0 <= j <= K+1.

    ``norms[k, i]`` is ``||D_k^{k+1}(i)||_inf`` as kept by the update rule;
    ``norms_diff`` and ``norms_matrix`` hold the two candidate values at the
    same step (NaN where that candidate was not computed).
    ``inconsistency[k, j]`` is the rounding indicator of D_k^j(alpha) (see
    :meth:`PartialRecursion.inconsistency`).
    """

    D: np.ndarray
    alpha: int
    rule: str
    norms: np.ndarray
    norms_diff: np.ndarray
    norms_matrix: np.ndarray
    inconsistency: np.ndarray

    @property
    def K(self) -> int:
        return self.D.shape[0] - 1

    def F(self, k: int) -> np.ndarray:
        return self.D[k, 0]

    def decay_rate(self, k: int, window: int = 10) -> float:
        """Empirical per-step decay factor of ``||D_k^{k+1}(i)||`` near alpha."""
        curve = self.norms[k, 1:]
        ok = np.flatnonzero(np.isfinite(curve) & (curve > 0))
        if len(ok) < 2:
            return float("nan")
        tail = ok[-window:] if len(ok) > window else ok
        x, y = tail.astype(float), np.log(curve[tail])
        slope = np.polyfit(x, y, 1)[0] if len(tail) > 1 else 0.0
        return float(np.exp(slope))


def _binom_float(n: float, j: int) -> float:
    """C(n, j) for real n >= 0 as a product (no factorial overflow)."""
    out = 1.0
    for t in range(j):
        out *= (n - t) / (t + 1)
    return out


class PartialRecursion:
    """Incremental evaluation of D_k^j(i) for i = 0, 1, 2, ...

    Initial conditions (i = 0): D_0^j = 1 for all j, D_k^j = 0 for k >= 1.
    For i >= 1 and k >= 1 the rows are updated either by differences,
    D_k^j(i) = D_k^{j-1}(i) - D_k^{j-1}(i-1), or by the matrix relation
    D_k^j(i) = T D_k^j(i-1) + Q D_{k-1}^j(i-1).  ``rule="combined"``
    computes both and keeps the one of smaller infinity norm.
    """

    def __init__(self, chain: EmbeddedChain, K: int, rule: Rule = "combined") -> None:
        _require_homogeneous(chain, "partial")
        if K < 0:
            raise ValueError("K must be >= 0")
        if rule not in ("diff", "matrix", "combined"):
            raise ValueError(f"unknown update rule {rule!r}")
        self.chain = chain
        self.K = K
        self.rule = rule
        self._T = chain.T
        self._final = chain.final.astype(float)
        L = chain.size
        self.i = 0
        self.D = np.zeros((K + 1, K + 2, L))
        self.D[0] = 1.0
        self._prev = self.D
        self._norms: list[np.ndarray] = [np.full(K + 1, np.nan)]
        self._nd: list[np.ndarray] = [np.full(K + 1, np.nan)]
        self._nm: list[np.ndarray] = [np.full(K + 1, np.nan)]

    def step(self) -> None:
        K, prev = self.K, self.D
        self.i += 1
        i = self.i
        new = np.empty_like(prev)
        new[0, 0] = 1.0
        for j in range(1, K + 2):
            new[0, j] = (-1) ** i * math.comb(j - 1, i) if i <= j - 1 else 0.0
        norms = np.full(K + 1, np.nan)
        nd = np.full(K + 1, np.nan)
        nm = np.full(K + 1, np.nan)
        if K >= 1:
            # matrix candidates for every (k >= 1, j) at once
            x = prev[1:] + self._final * prev[:-1]
            L = x.shape[-1]
            mat = self._T.matvec(x.reshape(-1, L).T).T.reshape(x.shape)
            rule = self.rule
            for k in range(1, K + 1):
                new[k, 0] = mat[k - 1, 0]
                for j in range(1, K + 2):
                    b = mat[k - 1, j]
                    if rule == "matrix":
                        new[k, j] = b
                        if j == k + 1:
                            nm[k] = np.abs(b).max()
                        continue
                    a = new[k, j - 1] - prev[k, j - 1]
                    na = np.abs(a).max()
                    if rule == "diff":
                        new[k, j] = a
                        if j == k + 1:
                            nd[k] = na
                        continue
                    nb = np.abs(b).max()
                    new[k, j] = a if na < nb else b
                    if j == k + 1:
                        nd[k], nm[k] = na, nb
                norms[k] = np.abs(new[k, k + 1]).max()
        self._prev = prev
        self.D = new
        self._norms.append(norms)
        self._nd.append(nd)
        self._nm.append(nm)

    def advance(self, steps: int) -> "PartialRecursion":
        for _ in range(steps):
            self.step()
        return self

    def advance_to(self, alpha: int) -> "PartialRecursion":
        if alpha < self.i:
            raise ValueError(f"already at i={self.i} > {alpha}")
        return self.advance(alpha - self.i)

    def inconsistency(self) -> np.ndarray:
        """Disagreement between the two update relations at the current step.

        Both relations hold exactly in exact arithmetic, so the size of
        ``new - other candidate`` measures the rounding carried by each row.
        Entry [k, j] is the larger of the two mismatches for D_k^j.
        """
        K, prev, cur = self.K, self._prev, self.D
        out = np.zeros((K + 1, K + 2))
        if self.i == 0 or K == 0:
            return out
        x = prev[1:] + self._final * prev[:-1]
        L = x.shape[-1]
        mat = self._T.matvec(x.reshape(-1, L).T).T.reshape(x.shape)
        out[1:] = np.abs(mat - cur[1:]).max(axis=-1)
        diff = cur[1:, :-1] - prev[1:, :-1]
        out[1:, 1:] = np.maximum(out[1:, 1:], np.abs(diff - cur[1:, 1:]).max(axis=-1))
        return out

    def residual(self, k: int) -> float:
        return float(np.abs(self.D[k, k + 1]).max())

    def table(self) -> PartialTable:
        return PartialTable(
            D=self.D.copy(),
            alpha=self.i,
            rule=self.rule,
            norms=np.array(self._norms).T,
            norms_diff=np.array(self._nd).T,
            norms_matrix=np.array(self._nm).T,
            inconsistency=self.inconsistency(),
        )


def partial_recursion_table(
    chain: EmbeddedChain, K: int, alpha: int, rule: Rule = "combined"
) -> PartialTable:
    """D_k^j(alpha) for 0 <= k <= K, 0 <= j <= K+1 with the decay diagnostics."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return PartialRecursion(chain, K, rule).advance_to(alpha).table()


def stability_scan(
    chain: EmbeddedChain, K: int, i_max: int, rule: Rule = "combined"
) -> np.ndarray:
    """``||D_k^{k+1}(i)||_inf`` for 1 <= k <= K (rows) and 0 <= i <= i_max."""
    return partial_recursion_table(chain, K, i_max, rule).norms


def extrapolation_weights(m: float, k: int) -> np.ndarray:
    """Weights w_j with F(alpha + m) = sum_j w_j D^j(alpha) for degree-k data.

    Newton's backward-difference formula: w_j = C(m + j - 1, j).
    """
    return np.array([1.0] + [_binom_float(m + j - 1, j) for j in range(1, k + 1)])


@dataclass
class PartialResult:
    """Outcome of :func:`factorial_terms_partial`.

    ``error[j]`` bounds |g_j(computed) - g_j(exact)| as estimated from the
    truncation residual and the rounding level of the table.
    """

    g: np.ndarray
    alpha: int
    residual: np.ndarray
    error: np.ndarray
    converged: bool
    table: PartialTable = field(repr=False)


def _extrapolate(table: PartialTable, chain: EmbeddedChain, k: int):
    m = chain.steps - table.alpha
    eps = np.finfo(float).eps
    L = chain.size
    F = np.zeros((k + 1, L))
    f_err = np.zeros(k + 1)
    res = np.zeros(k + 1)
    for j in range(k + 1):
        w = extrapolation_weights(m, j)
        F[j] = w @ table.D[j, : j + 1]
        res[j] = np.abs(table.D[j, j + 1]).max()
        if m == 0 or j == 0:
            continue
        # remainder of the Newton series, bounded by the error-bound factor
        trunc = _binom_float(m + j - 1, j) * res[j]
        # rounding: each D_j^{j'} is off by about its relation mismatch
        floor = eps * np.abs(table.D[j, : j + 1]).max(axis=-1)
        noise = np.maximum(table.inconsistency[j, : j + 1], floor)
        f_err[j] = trunc + float(w @ noise) + eps * np.abs(F[j]).max() * (j + 1)
    g = F @ chain.mu
    err = f_err * np.abs(chain.mu).sum()
    # F_0 = 1 is used exactly, while the stored rows of T may miss a sum of 1
    # by a fraction of an ulp; over l - d steps that shifts every g_j by
    drift = chain.steps * float(max(abs(sum(map(Fraction, row)) - 1) for row in chain.T.vals))
    err += drift * np.abs(g)
    return g, err, res


def factorial_terms_partial(
    chain: EmbeddedChain,
    k: int,
    alpha: int | Literal["auto"] = "auto",
    threshold: float = 1e-12,
    cap: int | None = None,
    rule: Rule = "combined",
) -> PartialResult:
    """g_0..g_k by partial recursion to ``alpha`` and extrapolation to l - d.

    In auto mode alpha starts at max(2k, 4L) and doubles until every
    relative residual ``||D_j^{j+1}(alpha)|| / ||D_j^j(alpha)||`` (j <= k)
    drops below ``threshold`` or ``cap`` (default 10 k L) is reached.
    """
    _require_homogeneous(chain, "partial")
    if k < 0:
        raise ValueError("k must be >= 0")
    n = chain.steps
    L = chain.size
    rec = PartialRecursion(chain, k, rule)

    def relres() -> float:
        worst = 0.0
        for j in range(1, k + 1):
            top = np.abs(rec.D[j, j]).max()
            r = rec.residual(j)
            worst = max(worst, r / top if top > 0 else (0.0 if r == 0 else np.inf))
        return worst

    if alpha == "auto":
        cap = min(cap if cap is not None else max(10 * k * L, 2 * k), n)
        a = min(max(2 * k, 4 * L), cap)
        rec.advance_to(a)
        while relres() >= threshold and a < cap:
            a = min(2 * a, cap)
            rec.advance_to(a)
    else:
        if alpha > n:
            raise ValueError(f"alpha={alpha} exceeds l - d = {n}")
        rec.advance_to(int(alpha))
    table = rec.table()
    g, err, res = _extrapolate(table, chain, k)
    converged = relres() < threshold or table.alpha == n
    if not converged:
        warnings.warn(
            f"partial recursion residual {relres():.3g} above threshold {threshold:g} "
            f"at alpha={table.alpha}; error estimate {err.max():.3g}",
            AccuracyWarning,
            stacklevel=2,
        )
    return PartialResult(g=g, alpha=table.alpha, residual=res, error=err, converged=converged, table=table)


# -- mixed moments ----------------------------------------------------------------


def mixed_factorial_terms(
    chain: EmbeddedChain, k1: int, k2: int, allow_overlap: bool = True, max_total: int = 8
) -> np.ndarray:
    """Coefficients G[a, b] of g(y1, y2) = mu (T + y1 Q1 + y2 Q2 + ...)^(l-d) 1.

    ``E[N1!/(N1-a)! * N2!/(N2-b)!] = a! b! G[a, b]``.  The chain must come
    from an automaton built on two patterns (mark bits 0 and 1).  A state
    completing both patterns at once contributes y1 + y2 + y1 y2 (the
    factorial generating function of a joint increment); with
    ``allow_overlap=False`` such states are rejected instead.
    """
    _require_homogeneous(chain, "mixed moments")
    if k1 < 0 or k2 < 0:
        raise ValueError("orders must be >= 0")
    if k1 + k2 > max_total:
        raise ValueError(f"k1 + k2 = {k1 + k2} exceeds the cap {max_total}")
    f1, f2 = chain.mark_mask(0), chain.mark_mask(1)
    both = f1 & f2
    if both.any() and not allow_overlap:
        raise ValueError("final states count both patterns; cannot partition F = F1 u F2")
    T = chain.T.toarray()
    L = chain.size
    m = np.zeros((k1 + 1, k2 + 1, L, L))
    m[0, 0] = T
    if k1 >= 1:
        m[1, 0] = T * f1[None, :]
    if k2 >= 1:
        m[0, 1] = T * f2[None, :]
    if k1 >= 1 and k2 >= 1:
        m[1, 1] = T * both[None, :]
    mpow = truncated_power(m, chain.steps)
    return mpow.sum(axis=3) @ chain.mu


# -- moment conversions ---------------------------------------------------------------


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling numbers of the second kind."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def raw_from_factorial(g) -> np.ndarray:
    """Raw moments m'_0..m'_k from g_0..g_k: m'_n = sum_j S(n, j) j! g_j."""
    g = np.asarray(g, dtype=float)
    k = len(g) - 1
    if k > MAX_ORDER:
        raise ValueError(f"order {k} above the supported maximum {MAX_ORDER}")
    return np.array(
        [sum(stirling2(n, j) * math.factorial(j) * g[j] for j in range(n + 1)) for n in range(k + 1)]
    )


def centered_from_raw(raw) -> np.ndarray:
    """Centred moments m_0..m_k from raw moments m'_0..m'_k."""
    raw = np.asarray(raw, dtype=float)
    mean = raw[1] if len(raw) > 1 else 0.0
    return np.array(
        [sum(math.comb(n, j) * raw[j] * (-mean) ** (n - j) for j in range(n + 1)) for n in range(len(raw))]
    )


def cumulants_from_raw(raw) -> np.ndarray:
    """kappa_1..kappa_k (index 0 unused, set to 0) by
    kappa_n = m'_n - sum_{l=1}^{n-1} C(n-1, l-1) kappa_l m'_{n-l}."""
    raw = np.asarray(raw, dtype=float)
    kappa = np.zeros(len(raw))
    for n in range(1, len(raw)):
        kappa[n] = raw[n] - sum(math.comb(n - 1, l - 1) * kappa[l] * raw[n - l] for l in range(1, n))
    return kappa


@dataclass(frozen=True)
class MomentSet:
    """Moments of order up to ``k`` derived from the factorial terms ``g``.

    Arrays are indexed by order (entry 0 is the trivial order-0 value).
    Statistics that need a higher order than available are ``None``.
    """

    g: np.ndarray
    raw: np.ndarray
    centered: np.ndarray
    cumulants: np.ndarray

    @property
    def k(self) -> int:
        return len(self.g) - 1

    @property
    def mean(self) -> float | None:
        return float(self.cumulants[1]) if self.k >= 1 else None

    @property
    def variance(self) -> float | None:
        return float(self.cumulants[2]) if self.k >= 2 else None

    @property
    def std(self) -> float | None:
        v = self.variance
        return None if v is None else math.sqrt(max(v, 0.0))

    @property
    def skewness(self) -> float | None:
        if self.k < 3:
            return None
        self._check_variance()
        return float(self.cumulants[3] / self.cumulants[2] ** 1.5)

    @property
    def excess_kurtosis(self) -> float | None:
        if self.k < 4:
            return None
        self._check_variance()
        return float(self.cumulants[4] / self.cumulants[2] ** 2)

    def _check_variance(self) -> None:
        if self.cumulants[2] <= 0:
            raise ValueError("degenerate distribution: variance is not positive")

    def summarize(self) -> tuple[float | None, float | None, float | None, float | None]:
        """(mean, std, skewness, excess kurtosis)."""
        return self.mean, self.std, self.skewness, self.excess_kurtosis


def moment_set(g) -> MomentSet:
    g = np.asarray(g, dtype=float)
    raw = raw_from_factorial(g)
    return MomentSet(g=g, raw=raw, centered=centered_from_raw(raw), cumulants=cumulants_from_raw(raw))


ALGORITHMS = ("auto", "full", "power", "partial")


def choose_algorithm(chain: EmbeddedChain, algorithm: str = "auto", cutoff: int = 200) -> str:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "auto":
        if not chain.homogeneous:
            return "full"
        return "partial" if chain.size > cutoff else "power"
    if algorithm in ("power", "partial"):
        _require_homogeneous(chain, algorithm)
    return algorithm


def compute_moments(
    chain: EmbeddedChain, k: int, algorithm: str = "auto", cutoff: int = 200, **partial_opts
) -> MomentSet:
    """Moments up to order ``k`` with the chosen (or automatically picked) algorithm."""
    algo = choose_algorithm(chain, algorithm, cutoff)
    if algo == "full":
        g = factorial_terms_full(chain, k)
    elif algo == "power":
        g = factorial_terms_power(chain, k)
    else:
        g = factorial_terms_partial(chain, k, **partial_opts).g
    return moment_set(g)
