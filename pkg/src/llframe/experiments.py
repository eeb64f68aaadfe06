"""Test-function corpus and the parameter-study / convergence harness."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erf

from .legendre import FrameConfig
from .offline import get_factorization
from .online import approximate, max_error, sample
from .partition import Partition, total_nodes, uniform_partition
from .singularity import DEFAULT_TAU, analyze, correct

DEFAULT_TOL = 5e-13

#: (omega_Delta, m) pairs of the observed-rank table at gamma = 1.
RANK_TABLE_PAIRS = (
    (0.1, 9), (0.25, 11), (0.5, 13), (1.0, 15),
    (2.0, 26), (4.0, 39), (8.0, 65), (16.0, 116),
)


@dataclass(frozen=True)
class TestFunction:
    id: str
    domain: tuple
    sampler: Callable
    description: str

    __test__ = False  # not a pytest class

    def __call__(self, x):
        return self.sampler(np.asarray(x, dtype=float))


def _piecewise_base(x):
    return np.exp(x) * np.cos(5 * x) + x / (1 + x * x)


def piecewise_function(xi: float, zeta: float) -> Callable:
    """Continuous function with a kink at ``xi`` and a curvature jump at ``zeta``."""
    if not xi < zeta:
        raise ValueError(f"need xi < zeta, got {xi!r}, {zeta!r}")

    def f(x):
        x = np.asarray(x, dtype=float)
        y = _piecewise_base(x)
        y = y + np.where(x >= xi, x - xi, 0.0)
        return y + np.where(x >= zeta, (x - zeta) ** 2, 0.0)

    return f


PIECEWISE_DOMAIN = (0.0, 1.0)

REGISTRY: dict = {}


def register(fn: TestFunction) -> TestFunction:
    REGISTRY[fn.id] = fn
    return fn


for _f in (
    TestFunction("f1", (1.0, 15.0), lambda x: np.sqrt(x) / (x**2 + x / 2 + 1), "sqrt(x)/(x^2+x/2+1)"),
    TestFunction("f2", (-1.0, 1.0), lambda x: 1.0 / (4 - x**2), "1/(4-x^2)"),
    TestFunction("f3", (-4.0, 4.0), lambda x: erf(x / 3), "erf(x/3)"),
    TestFunction("f4", (-1.0, 1.0), lambda x: np.cos(100 / (1 + 25 * x**2)), "cos(100/(1+25x^2))"),
    TestFunction("f5", (-1.0, 1.0), lambda x: np.cos(200 * x**2), "cos(200x^2)"),
    # stand-in for the Airy test: a second chirp
    TestFunction("f6", (-1.0, 1.0), lambda x: np.cos(150 * x**2 + 10 * x), "cos(150x^2+10x)"),
    TestFunction("f7", (-1.0, 1.0), lambda x: 1.0 / (1 + 25 * x**2), "1/(1+25x^2)"),
    TestFunction("f8", (-1.0, 1.0), lambda x: np.exp(np.sin(2.7 * np.pi * x) + np.cos(np.pi * x)),
                 "exp(sin(2.7 pi x)+cos(pi x))"),
    TestFunction("f9", (-1.0, 1.0), lambda x: x**2 * np.sin(20 * x), "x^2 sin(20x)"),
):
    register(_f)


def get_function(fn_id: str) -> TestFunction:
    """Look up a test function.

    Besides the registry, two parametric families are understood:
    ``sin:<omega>`` (``sin(omega x)`` on ``[-1, 1]``) and
    ``pw:<xi>,<zeta>`` (the piecewise family on ``[0, 1]``).
    """
    if fn_id in REGISTRY:
        return REGISTRY[fn_id]
    kind, _, arg = fn_id.partition(":")
    try:
        if kind == "sin":
            w = float(arg)
            return TestFunction(fn_id, (-1.0, 1.0), lambda x: np.sin(w * x), f"sin({w:g}x)")
        if kind == "pw":
            xi, zeta = (float(v) for v in arg.split(","))
            return TestFunction(fn_id, PIECEWISE_DOMAIN, piecewise_function(xi, zeta),
                                f"piecewise(xi={xi:g}, zeta={zeta:g})")
    except ValueError as exc:
        raise KeyError(f"malformed function id {fn_id!r}") from exc
    raise KeyError(f"unknown test function {fn_id!r}; known: {sorted(REGISTRY)}, sin:<w>, pw:<xi>,<zeta>")


# -- single runs ----------------------------------------------------------------------


def run_single(fn: TestFunction, config: FrameConfig, K: int, grid_factor: int = 10) -> dict:
    part = uniform_partition(*fn.domain, K)
    fact = get_factorization(config)
    approx = approximate(fn, part, fact)
    return {
        "K": K,
        "M": total_nodes(part, config.m),
        "E_M": max_error(approx, fn, grid_factor),
        "C_delta": fact.C_delta,
    }


def run_convergence(fn_id: str, config: FrameConfig, K_values: Iterable[int]) -> list:
    """One row ``(K, M, E_M, C_delta)`` per ``K``."""
    fn = get_function(fn_id)
    return [run_single(fn, config, int(K)) for K in K_values]


def is_monotone_to_floor(errors: Sequence[float], floor: float = DEFAULT_TOL,
                         uptick: float = 10.0) -> bool:
    """Non-increasing above ``floor``; isolated upticks up to ``uptick`` times are tolerated."""
    prev_up = False
    for a, b in zip(errors, errors[1:]):
        if b <= a or max(a, b) <= floor:
            prev_up = False
            continue
        if b > uptick * a or prev_up:
            return False
        prev_up = True
    return True


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    fn_id: str = "sin:40"
    fixed: dict = field(default_factory=lambda: {"N": 150, "T": 6.0, "gamma": 1.0, "K": 4})
    tol: float = DEFAULT_TOL
    epsilon: float = 1e-14

    def __post_init__(self):
        if self.variable not in ("T", "N", "K", "gamma"):
            raise ValueError(f"sweep variable must be one of T, N, K, gamma; got {self.variable!r}")
        vals = tuple(self.values)
        if not vals:
            raise ValueError("sweep range is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def point(self, value) -> tuple:
        p = {"N": 15, "T": 6.0, "gamma": 1.0, "K": 4}
        p.update(self.fixed)
        p[self.variable] = value
        cfg = FrameConfig(N=int(p["N"]), T=float(p["T"]), gamma=float(p["gamma"]), epsilon=self.epsilon)
        return cfg, int(p["K"])


def run_sweep(spec: SweepSpec) -> list:
    fn = get_function(spec.fn_id)
    rows = []
    for v in spec.values:
        cfg, K = spec.point(v)
        row = run_single(fn, cfg, K)
        rows.append({spec.variable: v, **{k: row[k] for k in ("M", "E_M", "C_delta")}})
    return rows


def run_T_sweep(spec: SweepSpec):
    """Errors per ``T`` plus the first and last ``T`` meeting ``spec.tol``.

    Returns
    -------
    rows : list of dict
    T1, T2 : float or None
    """
    if spec.variable != "T":
        raise ValueError("run_T_sweep needs a sweep over T")
    rows = run_sweep(spec)
    ok = [r["T"] for r in rows if r["E_M"] <= spec.tol]
    return rows, (ok[0] if ok else None), (ok[-1] if ok else None)


def T_grid(start=1.0, stop=16.0, step=0.2) -> tuple:
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


def run_rank_table(pairs=RANK_TABLE_PAIRS, T: float = 6.0, epsilon: float = 1e-14) -> list:
    """Retained rank at ``gamma = 1`` (``N = m - 1``) and the cost indicator ``m C / omega``."""
    rows = []
    for omega, m in pairs:
        fact = get_factorization(FrameConfig.from_m(int(m), T=T, epsilon=epsilon))
        rows.append({
            "omega_delta": omega,
            "m": int(m),
            "C_delta": fact.C_delta,
            "indicator": m * fact.C_delta / omega,
        })
    return rows


# -- piecewise pipeline ---------------------------------------------------------------


@dataclass(eq=False)
class PipelineResult:
    xi: float
    zeta: float
    approximant: object
    report: object
    corrected: object
    error_before: float
    error_after: float

    @property
    def improvement(self) -> float:
        return self.error_before / self.error_after if self.error_after > 0 else math.inf


def run_piecewise_pipeline(
    xi: float,
    zeta: float,
    partition: Partition | None = None,
    config: FrameConfig | None = None,
    tau_detect: float = DEFAULT_TAU,
) -> PipelineResult:
    """approximate -> detect -> localize -> correct on the piecewise family."""
    partition = partition or uniform_partition(*PIECEWISE_DOMAIN, 20)
    config = config or FrameConfig()
    if not partition.a < xi < zeta < partition.b:
        raise ValueError("need a < xi < zeta < b")
    f = piecewise_function(xi, zeta)
    fact = get_factorization(config)
    samples = sample(f, partition, config.m)
    approx = approximate(samples, partition, fact)
    report = analyze(approx, samples, fact, tau_detect)
    corrected = correct(approx, report, fact, samples)
    return PipelineResult(xi, zeta, approx, report, corrected,
                          max_error(approx, f), max_error(corrected, f))


# -- output ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    """CSV with a fixed column order and round-trip float text (byte-stable)."""
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def run_bracketing_trials(n_trials: int = 100, seed: int = 0, K: int = 20,
                          config: FrameConfig | None = None) -> dict:
    """Random singular points on the piecewise family; count brackets within one cell."""
    rng = np.random.default_rng(seed)
    config = config or FrameConfig()
    part = uniform_partition(*PIECEWISE_DOMAIN, K)
    h = (part.b - part.a) / (K * (config.m - 1))
    hits = total = 0
    rows = []
    for trial in range(n_trials):
        xi, zeta = float(rng.uniform(0.1, 0.4)), float(rng.uniform(0.6, 0.9))
        try:
            res = run_piecewise_pipeline(xi, zeta, part, config)
            est = res.report.localized_points
        except Exception as exc:  # a failed trial counts as a miss
            est = []
            rows.append({"trial": trial, "xi": xi, "zeta": zeta, "error": str(exc)})
        for true in (xi, zeta):
            total += 1
            ok = any(abs(p - true) <= h * (1 + 1e-9) for p in est)
            hits += ok
        rows.append({"trial": trial, "xi": xi, "zeta": zeta, "found": est})
    return {"trials": n_trials, "seed": seed, "hits": hits, "total": total,
            "rate": hits / total, "cell": h, "rows": rows}
