"""Command-line interface: ``llframe <subcommand> [options]``.

Every subcommand writes CSV or JSON to ``--out`` (stdout when omitted).
Exit status is 0 on success, 1 on a computation error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import experiments as ex
from .exceptions import LLFError
from .io import read_samples, write_samples
from .legendre import FrameConfig
from .offline import CACHE_ENV, cache_filename, export_factorization_csv, get_factorization, save_factorization
from .online import approximate, error_grid, node_residual, sample, save_approximant, write_error_csv
from .partition import global_nodes, total_nodes, uniform_partition
from .singularity import analyze, correct, summary, write_eta_csv, write_window_csv

log = logging.getLogger("llframe")


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _values(s):
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in s:
        a, b, step = (float(v) for v in s.split(":"))
        return ex.T_grid(a, b, step)
    return tuple(float(v) for v in s.split(","))


def _add_config(p, N=15):
    p.add_argument("--N", type=int, default=N, help="local degree (default %(default)s)")
    p.add_argument("--T", type=float, default=6.0, help="extension parameter")
    p.add_argument("--gamma", type=float, default=1.0, help="oversampling ratio")
    p.add_argument("--eps", type=float, default=1e-14, help="TSVD threshold")
    p.add_argument("--m", type=int, default=None, help="explicit samples per subinterval")


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", help="test function id (f1..f9, sin:<w>, pw:<xi>,<zeta>)")
    src.add_argument("--data", type=Path, help="CSV file with header x,f on an equispaced grid")
    p.add_argument("--K", type=int, default=None, help="number of subintervals")


def _config(args) -> FrameConfig:
    return FrameConfig(N=args.N, T=args.T, gamma=args.gamma, epsilon=args.eps, m=args.m)


def _problem(args, cfg):
    """(partition, samples, reference function or None) from --fn/--data and --K."""
    if args.data is not None:
        x, y = read_samples(args.data)
        if args.K is None:
            if (x.size - 1) % (cfg.m - 1):
                raise LLFError(f"{x.size} samples do not split into blocks of m={cfg.m}")
            K = (x.size - 1) // (cfg.m - 1)
        else:
            K = args.K
        part = uniform_partition(float(x[0]), float(x[-1]), K)
        if total_nodes(part, cfg.m) != x.size:
            raise LLFError(f"K={K}, m={cfg.m} needs {total_nodes(part, cfg.m)} samples, file has {x.size}")
        return part, y, None
    fn = ex.get_function(args.fn)
    part = uniform_partition(*fn.domain, args.K or 8)
    return part, sample(fn, part, cfg.m), fn


@contextmanager
def _sink(path):
    if path is None or str(path) == "-":
        buf = io.StringIO()
        yield buf
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(obj, path):
    with _sink(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _emit_rows(rows, path, columns=None):
    if path is None:
        tmp = io.StringIO()
        columns = list(columns or rows[0].keys())
        tmp.write(",".join(columns) + "\n")
        for r in rows:
            tmp.write(",".join(ex._fmt(r[c]) for c in columns) + "\n")
        sys.stdout.write(tmp.getvalue())
    else:
        ex.write_rows(rows, path, columns)


# -- subcommands ----------------------------------------------------------------------


def cmd_offline(args):
    cfg = _config(args)
    fact = get_factorization(cfg)
    out = args.out
    if out is None:
        base = Path(os.environ.get(CACHE_ENV, "."))
        base.mkdir(parents=True, exist_ok=True)
        out = base / cache_filename(cfg)
    save_factorization(fact, out)
    if args.csv_dir:
        export_factorization_csv(fact, args.csv_dir)
    print(f"m = {cfg.m}, N = {cfg.N}, T = {cfg.T:g}, eps = {cfg.epsilon:g}")
    print(f"C_delta = {fact.C_delta}")
    print(f"wrote {out}")


def cmd_sample(args):
    cfg = _config(args)
    fn = ex.get_function(args.fn)
    part = uniform_partition(*fn.domain, args.K or 8)
    x = global_nodes(part, cfg.m)
    y = sample(fn, part, cfg.m)
    if args.out:
        write_samples(args.out, x, y)
    else:
        sys.stdout.write("x,f\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(x, y)))


def cmd_approximate(args):
    cfg = _config(args)
    part, y, fn = _problem(args, cfg)
    fact = get_factorization(cfg)
    approx = approximate(y, part, fact)
    if args.save:
        save_approximant(approx, args.save)
    result = {"K": part.K, "M": total_nodes(part, cfg.m), "C_delta": fact.C_delta,
              "node_residual": node_residual(approx, y)}
    if fn is not None:
        x = error_grid(part, result["M"], args.grid_factor)
        fx = fn(x)
        result["E_M"] = float(np.max(np.abs(fx - approx(x))))
        if args.out:
            write_error_csv(args.out, x, fx, approx(x))
    elif args.out:
        x = error_grid(part, result["M"], args.grid_factor)
        write_error_csv(args.out, x, np.full(x.shape, np.nan), approx(x))
    _emit_json(result, args.summary)


def cmd_converge(args):
    cfg = _config(args)
    rows = ex.run_convergence(args.fn, cfg, _ints(args.K))
    _emit_rows(rows, args.out, ["K", "M", "E_M", "C_delta"])


def cmd_sweep(args):
    fixed = {"N": args.N, "T": args.T, "gamma": args.gamma, "K": args.K}
    spec = ex.SweepSpec(args.var, _values(args.values), args.fn, fixed, args.tol, args.eps)
    if args.var == "T":
        rows, T1, T2 = ex.run_T_sweep(spec)
        print(f"T1 = {T1}, T2 = {T2}", file=sys.stderr)
    else:
        rows = ex.run_sweep(spec)
    _emit_rows(rows, args.out, [args.var, "M", "E_M", "C_delta"])


def cmd_rank_table(args):
    rows = ex.run_rank_table(T=args.T, epsilon=args.eps)
    _emit_rows(rows, args.out, ["omega_delta", "m", "C_delta", "indicator"])


def _singularity_problem(args):
    cfg = _config(args)
    if args.fn is not None and args.K is None:
        args.K = 20
    part, y, fn = _problem(args, cfg)
    fact = get_factorization(cfg)
    approx = approximate(y, part, fact)
    return cfg, part, y, fn, fact, approx


def cmd_detect(args):
    if args.trials:
        res = ex.run_bracketing_trials(args.trials, args.seed, args.K or 20)
        _emit_json(res, args.out)
        return
    cfg, part, y, fn, fact, approx = _singularity_problem(args)
    report = analyze(approx, y, fact, args.tau)
    if args.out:
        write_eta_csv(report, args.out)
    else:
        _emit_rows([{"k": k, "eta": e, "flagged": int(k in report.flagged)}
                    for k, e in enumerate(report.etas)], None)
    if args.windows_dir:
        Path(args.windows_dir).mkdir(parents=True, exist_ok=True)
        for i, loc in enumerate(report.localizations):
            write_window_csv(loc, Path(args.windows_dir) / f"window{i}.csv")
    print(json.dumps({"flagged": report.flagged, "localized": report.localized_points}), file=sys.stderr)


def cmd_correct(args):
    cfg, part, y, fn, fact, approx = _singularity_problem(args)
    report = analyze(approx, y, fact, args.tau)
    corrected = correct(approx, report, fact, y)
    info = summary(report, corrected, fn)
    if args.errors:
        M = total_nodes(part, cfg.m)
        x = error_grid(part, M, 10)
        fx = fn(x) if fn is not None else np.full(x.shape, np.nan)
        write_error_csv(args.errors, x, fx, corrected(x))
    _emit_json(info, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="llframe", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for randomized trials")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("offline", help="build and store a reference factorization")
    _add_config(s)
    s.add_argument("--out", type=Path, help=f"file (default: ${CACHE_ENV} or cwd)")
    s.add_argument("--csv-dir", type=Path, help="also dump the factors as CSV")
    s.set_defaults(func=cmd_offline)

    s = sub.add_parser("sample", help="write equispaced samples of a test function (x,f CSV)")
    _add_config(s)
    s.add_argument("--fn", required=True)
    s.add_argument("--K", type=int, default=None)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("approximate", help="approximate a function or data file")
    _add_config(s)
    _add_source(s)
    s.add_argument("--out", type=Path, help="error CSV (x,f,approx,error)")
    s.add_argument("--save", type=Path, help="approximant file")
    s.add_argument("--summary", type=Path, help="JSON summary (default stdout)")
    s.add_argument("--grid-factor", type=int, default=10)
    s.set_defaults(func=cmd_approximate)

    s = sub.add_parser("converge", help="error versus K")
    _add_config(s)
    s.add_argument("--fn", required=True)
    s.add_argument("--K", default="1,2,4,8,16,32,64", help="comma list")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("sweep", help="error versus one parameter")
    _add_config(s, N=150)
    s.add_argument("--fn", default="sin:40")
    s.add_argument("--var", choices=["T", "N", "K", "gamma"], default="T")
    s.add_argument("--values", default="1:16:0.2", help="a:b:step or comma list")
    s.add_argument("--K", type=int, default=4)
    s.add_argument("--tol", type=float, default=ex.DEFAULT_TOL)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("rank-table", help="retained rank versus m at gamma=1")
    s.add_argument("--T", type=float, default=6.0)
    s.add_argument("--eps", type=float, default=1e-14)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_rank_table)

    for name, func, helptext in (("detect", cmd_detect, "flag and localize singular subintervals"),
                                 ("correct", cmd_correct, "detect, localize and correct")):
        s = sub.add_parser(name, help=helptext)
        _add_config(s)
        src = s.add_mutually_exclusive_group(required=(name == "correct"))
        src.add_argument("--fn")
        src.add_argument("--data", type=Path)
        s.add_argument("--K", type=int, default=None)
        s.add_argument("--tau", type=float, default=10.0)
        s.add_argument("--out", type=Path)
        if name == "detect":
            s.add_argument("--windows-dir", type=Path, help="per-window indicator CSVs")
            s.add_argument("--trials", type=int, default=0,
                           help="run N randomized localization trials instead")
        else:
            s.add_argument("--errors", type=Path, help="corrected error CSV")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "detect" and not args.trials and args.fn is None and args.data is None:
        parser.error("detect: one of --fn/--data is required unless --trials is given")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (LLFError, ValueError, KeyError, OSError) as exc:
        print(f"llframe {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
