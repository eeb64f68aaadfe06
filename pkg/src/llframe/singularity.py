"""Detect, localize and correct derivative singularities in piecewise-smooth data.

Detection thresholds the coefficient energy ``eta_k = ||c_k||`` against the
median over all subintervals. Inside each flagged window, one-sided fits on
growing prefixes and suffixes of the samples give indicator traces whose jumps
bracket the singular point. Correction refits the window with two one-sided
patches that meet at the refined split point.
"""

from __future__ import annotations

import csv
import logging
import math
import threading
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .exceptions import LocalizationError, WindowTooNarrowError
from .legendre import FrameConfig, frame_values
from .offline import ReferenceFactorization, build_factorization
from .online import LocalCoefficients, PiecewiseApproximant, _combine, max_error, sample, solve_local
from .partition import locate, total_nodes

log = logging.getLogger(__name__)

DEFAULT_TAU = 10.0
MIN_SIDE_SAMPLES = 4


# -- one-sided fits -----------------------------------------------------------------


class OneSidedCache:
    """Lazily built factorizations keyed by sample count; safe for concurrent use.

    A fit on ``n`` equispaced samples uses degree ``min(N, n-1)`` with the
    base configuration's ``T`` and ``epsilon``.
    """

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()

    def get(self, base: FrameConfig, n: int) -> ReferenceFactorization:
        key = (base.N, base.T, base.epsilon, n)
        with self._lock:
            fact = self._store.get(key)
        if fact is None:
            deg = min(base.N, n - 1)
            cfg = FrameConfig(N=deg, T=base.T, gamma=n / (deg + 1), epsilon=base.epsilon, m=n)
            fact = build_factorization(cfg)
            with self._lock:
                fact = self._store.setdefault(key, fact)
        return fact

    def clear(self):
        with self._lock:
            self._store.clear()


_CACHE = OneSidedCache()


def one_sided_fit(values, base: FrameConfig, cache: OneSidedCache = _CACHE) -> LocalCoefficients:
    g = np.asarray(values, dtype=float)
    return solve_local(cache.get(base, g.size), g)


@dataclass(frozen=True, eq=False)
class Patch:
    """A one-sided reconstruction with its own affine map.

    ``x0, x1`` are the first and last sample it was fitted on (mapped to
    ``t = -1, 1``); ``lo, hi`` is the part of the window it is responsible
    for, which may reach a fraction of a cell past its last sample.
    """

    lo: float
    hi: float
    x0: float
    x1: float
    coefficients: LocalCoefficients
    T: float

    def __call__(self, x):
        c = self.coefficients.c
        t = (np.asarray(x, dtype=float) - 0.5 * (self.x0 + self.x1)) / (0.5 * (self.x1 - self.x0))
        scalar = np.ndim(t) == 0
        out = _combine(frame_values(c.size - 1, self.T, np.atleast_1d(t)), c)
        return float(out[0]) if scalar else out.reshape(np.shape(t))


def fit_patch(x, g, base: FrameConfig, lo: float, hi: float, cache=_CACHE) -> Patch:
    return Patch(lo, hi, float(x[0]), float(x[-1]), one_sided_fit(g, base, cache), base.T)


# -- detection ------------------------------------------------------------------------


def detect(approximant: PiecewiseApproximant, tau_detect: float = DEFAULT_TAU) -> list:
    """Indices ``k`` (0-based) with ``eta_k > tau_detect * median(eta)``."""
    if not tau_detect > 1:
        raise ValueError(f"tau_detect must exceed 1, got {tau_detect!r}")
    etas = approximant.etas
    if etas.size < 3:
        warnings.warn("detection needs at least 3 subintervals; nothing flagged", stacklevel=2)
        return []
    med = float(np.median(etas))
    return [int(k) for k in np.nonzero(etas > tau_detect * med)[0]]


def merge_windows(flagged: Sequence[int], K: int) -> list:
    """Group runs of adjacent flags and pad each by one neighbour per side.

    A window touching the domain boundary is padded on the other side instead,
    so every window spans at least three subintervals when ``K >= 3``.
    Overlapping windows are merged.
    """
    runs = []
    for k in sorted(set(flagged)):
        if runs and k == runs[-1][1] + 1:
            runs[-1][1] = k
        else:
            runs.append([k, k])
    windows = []
    for lo, hi in runs:
        lo, hi = lo - 1, hi + 1
        if lo < 0:
            lo, hi = 0, min(K - 1, hi - lo)
        if hi > K - 1:
            lo, hi = max(0, lo - (hi - K + 1)), K - 1
        if windows and lo <= windows[-1][1]:
            windows[-1] = (windows[-1][0], hi)
        else:
            windows.append((lo, hi))
    return windows


# -- localization ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Localization:
    """Outcome of one-sided localization inside a window.

    ``left_index`` is the last node whose prefix fit is still smooth and
    ``right_index`` the first node whose suffix fit is smooth. Equal indices
    put the singularity on that node; adjacent ones bracket a grid cell.
    """

    point: float
    kind: str
    left_index: int
    right_index: int
    nodes: np.ndarray
    eta_left: np.ndarray
    eta_right: np.ndarray
    ratio_left: float = math.nan
    ratio_right: float = math.nan
    window: tuple = None

    @property
    def bracket(self) -> tuple:
        return float(self.nodes[self.left_index]), float(self.nodes[self.right_index])


def side_indicators(g, base: FrameConfig, cache=_CACHE):
    """``eta_L[i] = ||fit(g[:i+1])||`` and ``eta_R[i] = ||fit(g[i:])||``; NaN where undefined."""
    g = np.asarray(g, dtype=float)
    n = g.size
    eta_l = np.full(n, np.nan)
    eta_r = np.full(n, np.nan)
    for i in range(1, n):
        eta_l[i] = one_sided_fit(g[: i + 1], base, cache).eta
    for i in range(0, n - 1):
        eta_r[i] = one_sided_fit(g[i:], base, cache).eta
    return eta_l, eta_r


def _jump(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / den, np.where(num > 0, np.inf, 1.0))
    return r


def localize(
    nodes,
    values,
    fact: ReferenceFactorization,
    tau_detect: float = DEFAULT_TAU,
    min_side: int = MIN_SIDE_SAMPLES,
    cache: OneSidedCache = _CACHE,
) -> Localization:
    """Locate a single derivative singularity from window samples.

    Parameters
    ----------
    nodes, values : array_like
        Equispaced sample locations and data covering the window.
    fact : ReferenceFactorization
        Supplies ``N``, ``T`` and ``epsilon`` for the one-sided fits.
    tau_detect : float
        Minimum successive-ratio jump accepted as a transition.
    min_side : int
        Each side of a split keeps at least this many samples.

    Raises
    ------
    WindowTooNarrowError
        Fewer than ``2 m - 1`` samples.
    LocalizationError
        Neither indicator trace jumps by more than ``tau_detect``.
    """
    x = np.asarray(nodes, dtype=float)
    g = np.asarray(values, dtype=float)
    n = g.size
    m = fact.m
    if x.shape != g.shape:
        raise ValueError("nodes and values must have the same length")
    if n < 2 * m - 1 or n < 2 * min_side + 1:
        raise WindowTooNarrowError(
            f"window has {n} samples; need at least {max(2 * m - 1, 2 * min_side + 1)} "
            "(use a larger K or m)"
        )
    eta_l, eta_r = side_indicators(g, fact.config, cache)

    # candidate splits keep >= min_side samples on each side
    first, last = min_side - 1, n - min_side
    i = np.arange(first, last)  # last plateau index i -> spike at i+1
    r_left = _jump(eta_l[i + 1], eta_l[i])
    j = np.arange(first + 1, last + 1)  # first plateau index j <- spike at j-1
    r_right = _jump(eta_r[j - 1], eta_r[j])
    il = int(i[np.argmax(r_left)])
    ir = int(j[np.argmax(r_right)])
    rl, rr = float(np.max(r_left)), float(np.max(r_right))

    if max(rl, rr) <= tau_detect:
        raise LocalizationError(
            f"no one-sided indicator jump above {tau_detect:g} (max ratios {rl:.3g}, {rr:.3g})"
        )
    if il == ir:
        kind, point = "node", float(x[il])
    elif ir == il + 1:
        kind, point = "cell", 0.5 * float(x[il] + x[ir])
    else:
        # traces disagree: trust the sharper jump
        log.info("one-sided transitions disagree (%d vs %d); using the sharper one", il, ir)
        if rl >= rr:
            ir = il + 1
        else:
            il = ir - 1
        kind, point = "cell", 0.5 * float(x[il] + x[ir])
    return Localization(point, kind, il, ir, x, eta_l, eta_r, rl, rr)


# -- report ---------------------------------------------------------------------------


@dataclass(eq=False)
class SingularityReport:
    etas: np.ndarray
    flagged: list
    windows: list
    localizations: list = field(default_factory=list)
    tau_detect: float = DEFAULT_TAU

    @property
    def localized_points(self) -> list:
        return [loc.point for loc in self.localizations]

    @property
    def side_indicators(self) -> list:
        return [(loc.eta_left, loc.eta_right) for loc in self.localizations]


def window_samples(approximant: PiecewiseApproximant, samples, window):
    """Nodes and values covering subintervals ``window[0] .. window[1]`` inclusive."""
    m = approximant.config.m
    lo, hi = window
    nodes = approximant.nodes()
    s = slice(lo * (m - 1), (hi + 1) * (m - 1) + 1)
    return nodes[s], np.asarray(samples, dtype=float)[s]


def analyze(
    approximant: PiecewiseApproximant,
    samples,
    fact: ReferenceFactorization,
    tau_detect: float = DEFAULT_TAU,
    cache: OneSidedCache = _CACHE,
) -> SingularityReport:
    """Run detection and localize every resulting window."""
    if callable(samples):
        samples = sample(samples, approximant.partition, approximant.config.m)
    flagged = detect(approximant, tau_detect)
    windows = merge_windows(flagged, approximant.partition.K)
    locs = []
    for w in windows:
        x, g = window_samples(approximant, samples, w)
        loc = localize(x, g, fact, tau_detect, cache=cache)
        locs.append(replace(loc, window=tuple(w)))
    return SingularityReport(approximant.etas, flagged, windows, locs, tau_detect)


# -- correction -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WindowPatch:
    """Replacement for the subinterval ``[lo, hi]``, split at ``split``."""

    lo: float
    hi: float
    split: float
    left: Patch
    right: Patch

    @property
    def mismatch(self) -> float:
        """``|left(split) - right(split)|``; no continuity is imposed, so this is measured."""
        return float(abs(self.left(self.split) - self.right(self.split)))


@dataclass(frozen=True, eq=False)
class CorrectedApproximant:
    """Base approximant with one-sided patches inside corrected windows."""

    base: PiecewiseApproximant
    patches: tuple = ()

    @property
    def partition(self):
        return self.base.partition

    @property
    def config(self):
        return self.base.config

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.atleast_1d(np.asarray(self.base(xa), dtype=float)).copy()
        flat = np.atleast_1d(xa)
        for p in self.patches:
            inside = (flat >= p.lo) & (flat <= p.hi)
            if not np.any(inside):
                continue
            xs = flat[inside]
            left = xs <= p.split
            vals = np.empty(xs.shape)
            if np.any(left):
                vals[left] = p.left(xs[left])
            if np.any(~left):
                vals[~left] = p.right(xs[~left])
            out[inside] = vals
        return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def _refine_split(left: Patch, right: Patch, a: float, b: float, n_probe: int = 257) -> float:
    """Point in ``[a, b]`` where the two one-sided predictions agree best."""
    z = np.linspace(a, b, n_probe)
    d = left(z) - right(z)
    sign_change = np.nonzero(np.signbit(d[:-1]) != np.signbit(d[1:]))[0]
    if sign_change.size:
        i = int(sign_change[0])
        if d[i] == 0.0:
            return float(z[i])
        return float(brentq(lambda u: float(left(u) - right(u)), z[i], z[i + 1], xtol=1e-15))
    return float(z[int(np.argmin(np.abs(d)))])


def correct(
    approximant: PiecewiseApproximant,
    report: SingularityReport,
    fact: ReferenceFactorization,
    data,
    cache: OneSidedCache = _CACHE,
) -> CorrectedApproximant:
    """Rebuild each singularity-containing subinterval from two one-sided fits.

    Only the subinterval holding the localized point is replaced; the rest of
    the window keeps the base approximant. The left patch is fitted on the
    ``m`` window samples ending at the left bracket node and the right patch
    on the ``m`` samples starting at the right bracket node, so each has the
    resolution of an ordinary subinterval. When the singularity sits inside a
    cell, the split is moved to where the two patches' extrapolations meet.
    """
    m = approximant.config.m
    part = approximant.partition
    samples = sample(data, part, m) if callable(data) else np.asarray(data, float)
    if samples.shape != (total_nodes(part, m),):
        raise ValueError("sample vector does not match the approximant's node count")
    patches = []
    for w, loc in zip(report.windows, report.localizations):
        x, g = window_samples(approximant, samples, w)
        il, ir = loc.left_index, loc.right_index
        if il + 1 < MIN_SIDE_SAMPLES or x.size - ir < MIN_SIDE_SAMPLES:
            raise WindowTooNarrowError(
                f"patch side has fewer than {MIN_SIDE_SAMPLES} samples; use a larger K or m"
            )
        k = int(locate(part, loc.point)[0])
        lo, hi = float(part.breakpoints[k]), float(part.breakpoints[k + 1])
        ls = slice(max(0, il - m + 1), il + 1)
        rs = slice(ir, min(x.size, ir + m))
        left = fit_patch(x[ls], g[ls], fact.config, lo, float(x[ir]), cache)
        right = fit_patch(x[rs], g[rs], fact.config, float(x[il]), hi, cache)
        split = float(x[il]) if il == ir else _refine_split(left, right, float(x[il]), float(x[ir]))
        left = Patch(lo, split, left.x0, left.x1, left.coefficients, left.T)
        right = Patch(split, hi, right.x0, right.x1, right.coefficients, right.T)
        patches.append(WindowPatch(lo, hi, split, left, right))
    return CorrectedApproximant(approximant, tuple(patches))


# -- export ---------------------------------------------------------------------------


def write_eta_csv(report: SingularityReport, path) -> None:
    flagged = set(report.flagged)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "eta", "flagged"])
        for k, eta in enumerate(report.etas):
            w.writerow([k, repr(float(eta)), int(k in flagged)])


def write_window_csv(loc: Localization, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "node", "eta_L", "eta_R"])
        for i, (xi, el, er) in enumerate(zip(loc.nodes, loc.eta_left, loc.eta_right)):
            w.writerow([i, repr(float(xi)), repr(float(el)), repr(float(er))])


def summary(report: SingularityReport, corrected: CorrectedApproximant | None = None,
            f: Callable | None = None) -> dict:
    """JSON-ready summary with localized points and, given ``f``, error statistics."""
    out = {
        "version": 1,
        "tau_detect": report.tau_detect,
        "flagged": list(report.flagged),
        "windows": [list(w) for w in report.windows],
        "localized": [
            {
                "point": loc.point,
                "kind": loc.kind,
                "bracket": list(loc.bracket),
                "ratio_left": loc.ratio_left,
                "ratio_right": loc.ratio_right,
            }
            for loc in report.localizations
        ],
    }
    if corrected is not None:
        out["splits"] = [p.split for p in corrected.patches]
        out["mismatch"] = [p.mismatch for p in corrected.patches]
        if f is not None:
            out["error_before"] = max_error(corrected.base, f)
            out["error_after"] = max_error(corrected, f)
    return out
