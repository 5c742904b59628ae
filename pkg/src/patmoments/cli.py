"""Command-line front end.

Subcommands: ``moments``, ``approx``, ``stability-scan``, ``dfa``, ``pmf`` and
``simulate``.  Tabular output is either aligned text (``--format table``) or
TSV with ``#`` header comments; floats carry 12 significant digits.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
import warnings
from typing import Sequence, TextIO

import numpy as np

from . import __version__
from .approx import edgeworth_pmf, gram_charlier_coeffs, gram_charlier_pmf, relative_error_curve
from .automaton import build_dfa, dump_dfa, parse_pattern
from .embedding import embed
from .model import ecoli_model, load_model
from .moments import ALGORITHMS, choose_algorithm, compute_moments, partial_recursion_table
from .oracle import exact_pmf_dp, monte_carlo

RULES = ("diff", "matrix", "combined")


def fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.12g}"


def emit(out: TextIO, header: Sequence[str], rows: Sequence[Sequence], style: str, comments=()) -> None:
    cells = [[fmt(c) if not isinstance(c, str) else c for c in row] for row in rows]
    if style == "tsv":
        for line in comments:
            out.write(f"# {line}\n")
        out.write("#" + "\t".join(header) + "\n")
        for row in cells:
            out.write("\t".join(row) + "\n")
        return
    for line in comments:
        out.write(f"{line}\n")
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    for row in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _model(name: str):
    # the builtin model's row C is known to sum to 1.01; no need to warn each run
    return ecoli_model() if name == "ecoli" else load_model(name)


def _chain(args, pattern_text: str):
    model = _model(args.model)
    pattern = parse_pattern(pattern_text, model.alphabet)
    dfa = build_dfa(pattern, model.order)
    return model, pattern, embed(dfa, model, args.len)


def _partial_opts(args) -> dict:
    opts = {}
    if getattr(args, "alpha", None) is not None:
        opts["alpha"] = args.alpha
    if getattr(args, "threshold", None) is not None:
        opts["threshold"] = args.threshold
    return opts


# -- subcommands ------------------------------------------------------------------------


def cmd_moments(args, out: TextIO) -> None:
    rows = []
    comments = [f"model={args.model} len={args.len} k={args.k}"]
    for text in args.pattern:
        _, _, chain = _chain(args, text)
        algo = choose_algorithm(chain, args.algorithm, args.cutoff)
        t0 = time.perf_counter()
        ms = compute_moments(chain, args.k, algo, args.cutoff, **(_partial_opts(args) if algo == "partial" else {}))
        elapsed = time.perf_counter() - t0
        mean, std, skew, kurt = ms.summarize()
        rows.append([text, chain.size, mean, std, skew, kurt, algo, elapsed])
        if args.k == 0:
            comments.append(f"g_0={fmt(ms.g[0])} ({text})")
    header = ["pattern", "L", "expectation", "std_dev", "skewness", "excess_kurtosis", "algorithm", "time_s"]
    keep = {0: 2, 1: 3, 2: 4, 3: 5}.get(args.k, 6)
    cols = list(range(keep)) + [6, 7]
    emit(out, [header[c] for c in cols], [[r[c] for c in cols] for r in rows], args.format, comments)


def cmd_stability_scan(args, out: TextIO) -> None:
    _, _, chain = _chain(args, args.pattern)
    rules = RULES if args.rule == "all" else (args.rule,)
    rows = []
    for rule in rules:
        norms = partial_recursion_table(chain, args.K, args.imax, rule).norms
        for k in range(1, args.K + 1):
            for i in range(1, args.imax + 1):
                v = norms[k, i]
                rows.append([k, i, math.log10(v) if v > 0 else -math.inf, rule])
    emit(out, ["k", "i", "log10_norm", "rule"], rows, "tsv",
         [f"pattern={args.pattern} model={args.model} K={args.K} i_max={args.imax}"])


def _parse_range(text: str | None, default: tuple[int, int]) -> tuple[int, int]:
    if not text:
        return default
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ValueError(f"range must look like LO:HI, got {text!r}")
    lo_i, hi_i = int(lo), int(hi)
    if lo_i < 0 or hi_i < lo_i:
        raise ValueError(f"bad range {text!r}")
    return lo_i, hi_i


def cmd_approx(args, out: TextIO) -> None:
    user_range = _parse_range(args.range, (0, 0)) if args.range else None
    _, _, chain = _chain(args, args.pattern)
    orders = [int(o) for o in args.orders.split(",")]
    kmax = max(orders) + (2 if args.family == "gaussian" else 0)
    ms = compute_moments(chain, max(kmax, 2), args.algorithm, args.cutoff)
    exact = None if args.no_exact else exact_pmf_dp(chain)
    default_hi = int(math.ceil(ms.mean + 6 * ms.std)) + 1
    lo, hi = user_range or (0, default_hi)
    n = np.arange(lo, hi + 1)

    approx = {}
    for s in orders:
        if args.family == "gaussian":
            approx[s] = edgeworth_pmf(n, ms, s)
        else:
            approx[s] = gram_charlier_pmf(n, gram_charlier_coeffs(ms.g, s=s))
    header = ["n"] + ([] if exact is None else ["exact"])
    header += [f"approx_{s}" for s in orders]
    if exact is not None:
        header += [f"log10_relerr_{s}" for s in orders]
    rows = []
    ex = None if exact is None else exact(n)
    errs = {} if exact is None else {s: relative_error_curve(ex, approx[s]) for s in orders}
    for idx, nv in enumerate(n):
        row = [int(nv)] + ([] if exact is None else [ex[idx]])
        row += [approx[s][idx] for s in orders]
        row += [errs[s][idx] for s in errs]
        rows.append(row)
    emit(out, header, rows, "tsv",
         [f"family={args.family} pattern={args.pattern} model={args.model} len={args.len} "
          f"mean={fmt(ms.mean)} std={fmt(ms.std)}"])


def cmd_dfa(args, out: TextIO) -> None:
    if args.model is not None:
        model = _model(args.model)
        alphabet, d = model.alphabet, model.order
    else:
        from .automaton import Alphabet

        alphabet, d = Alphabet(args.alphabet), args.order
    dfa = build_dfa(parse_pattern(args.pattern, alphabet), d)
    out.write(dump_dfa(dfa))
    out.write(f"# Q' size={len(dfa.reachable_after(d))}\n")


def cmd_pmf(args, out: TextIO) -> None:
    _, _, chain = _chain(args, args.pattern)
    pmf = exact_pmf_dp(chain, args.ncap)
    rows = [[n, p] for n, p in enumerate(pmf.p)]
    emit(out, ["n", "p"], rows, "tsv", [f"pattern={args.pattern} model={args.model} len={args.len}"])


def cmd_simulate(args, out: TextIO) -> None:
    model = _model(args.model)
    pattern = parse_pattern(args.pattern, model.alphabet)
    res = monte_carlo(model, pattern, args.len, args.reps, args.seed, args.bit_generator)
    rows = [
        ["mean", res.mean, res.mean_se],
        ["variance", res.variance, res.variance_se],
        ["skewness", res.skewness, res.skewness_se],
        ["excess_kurtosis", res.excess_kurtosis, res.excess_kurtosis_se],
    ]
    emit(out, ["statistic", "estimate", "std_error"], rows, args.format,
         [f"pattern={args.pattern} len={args.len} reps={args.reps} seed={args.seed} rng={args.bit_generator}"])


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patmoments", description="Moments of pattern counts in Markov sequences.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, pattern_many=False):
        sp.add_argument("--model", default="ecoli", help="model file, or a builtin name (ecoli)")
        if pattern_many:
            sp.add_argument("--pattern", action="append", required=True, help="pattern; repeat for several rows")
        else:
            sp.add_argument("--pattern", required=True)
        sp.add_argument("--len", type=int, default=400000, help="sequence length")
        sp.add_argument("--algorithm", choices=ALGORITHMS, default="auto")
        sp.add_argument("--cutoff", type=int, default=200, help="state count above which auto uses partial recursion")

    sp = sub.add_parser("moments", help="first k moments of each pattern")
    common(sp, pattern_many=True)
    sp.add_argument("-k", type=int, default=4)
    sp.add_argument("--alpha", type=int, help="partial recursion pivot (default: automatic)")
    sp.add_argument("--threshold", type=float, help="relative residual target for the automatic pivot")
    sp.add_argument("--format", choices=("table", "tsv"), default="table")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("stability-scan", help="decay of ||D_k^{k+1}(i)|| per update rule")
    common(sp)
    sp.add_argument("--K", type=int, default=9)
    sp.add_argument("--imax", type=int, default=100)
    sp.add_argument("--rule", choices=RULES + ("all",), default="all")
    sp.set_defaults(func=cmd_stability_scan)

    sp = sub.add_parser("approx", help="Edgeworth or Gram-Charlier pmf against the exact pmf")
    common(sp)
    sp.add_argument("--family", choices=("gaussian", "poisson"), required=True)
    sp.add_argument("--orders", default="0,3", help="comma separated series orders")
    sp.add_argument("--range", help="n range LO:HI (default: 0 to mean + 6 sd)")
    sp.add_argument("--no-exact", action="store_true", help="skip the exact pmf")
    sp.set_defaults(func=cmd_approx)

    sp = sub.add_parser("dfa", help="dump the minimal non d-ambiguous automaton")
    sp.add_argument("--pattern", required=True)
    sp.add_argument("--model", help="take alphabet and order from this model")
    sp.add_argument("--alphabet", default="ACGT")
    sp.add_argument("--order", type=int, default=0)
    sp.set_defaults(func=cmd_dfa)

    sp = sub.add_parser("pmf", help="exact count distribution by dynamic programming")
    common(sp)
    sp.add_argument("--ncap", type=int, help="largest count tracked (default: mean + 20 sd)")
    sp.set_defaults(func=cmd_pmf)

    sp = sub.add_parser("simulate", help="Monte Carlo moments")
    sp.add_argument("--model", default="ecoli")
    sp.add_argument("--pattern", required=True)
    sp.add_argument("--len", type=int, default=400000)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bit-generator", default="PCG64")
    sp.add_argument("--format", choices=("table", "tsv"), default="table")
    sp.set_defaults(func=cmd_simulate)
    return p


def _show_warning(message, category, filename, lineno, file=None, line=None) -> None:
    print(f"patmoments: warning: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _show_warning
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    args.func(args, fh)
            else:
                args.func(args, sys.stdout)
    except (ValueError, OSError, KeyError) as exc:
        print(f"patmoments: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
