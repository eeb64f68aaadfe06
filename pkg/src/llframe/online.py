"""Online stage: per-subinterval TSVD solves, the piecewise approximant, and errors.

Approximant file layout (little-endian), version 1::

    magic     8 bytes  b"LLFAPPX\\x00"
    version   u32
    K, N, m   u32 x 3
    T, gamma, epsilon   f64 x 3
    breakpoints  f64[K+1]
    coefficients f64[K, N+1]  row-major
"""

from __future__ import annotations

import csv
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .exceptions import ConfigError, DimensionError, FormatError
from .legendre import FrameConfig, frame_values
from .offline import ReferenceFactorization
from .partition import Partition, global_nodes, locate, total_nodes

MAGIC = b"LLFAPPX\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIIIddd")


@dataclass(frozen=True, eq=False)
class LocalCoefficients:
    """Frame coefficients of one subinterval and their Euclidean norm ``eta``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def eta(self) -> float:
        return float(np.linalg.norm(self.c))


def solve_local(fact: ReferenceFactorization, samples) -> LocalCoefficients:
    """TSVD coefficients for one subinterval's ``m`` samples.

    Applied strictly in the order ``U^T b``, scale by ``1/sigma``, then ``V``.
    The dense pseudo-inverse is never formed; doing so injects the large
    reciprocals before projection and costs several digits.
    """
    g = np.asarray(samples, dtype=float)
    if g.shape != (fact.m,):
        raise DimensionError(f"expected {fact.m} samples, got shape {g.shape}")
    b = g / math.sqrt(fact.m)
    alpha = fact.U_eps.T @ b
    beta = fact.sigma_inv * alpha
    return LocalCoefficients(fact.V_eps @ beta)


def dense_pseudoinverse(fact: ReferenceFactorization) -> np.ndarray:
    """``V Sigma^+ U^T`` (scaled by ``1/sqrt(m)``) for diagnostics only.

    Exists to demonstrate the accuracy loss of the precomputed product; the
    solvers never use it.
    """
    return (fact.V_eps * fact.sigma_inv) @ fact.U_eps.T / math.sqrt(fact.m)


@dataclass(frozen=True, eq=False)
class PiecewiseApproximant:
    partition: Partition
    config: FrameConfig
    locals: tuple

    def __post_init__(self):
        locs = tuple(self.locals)
        if len(locs) != self.partition.K:
            raise DimensionError(f"need {self.partition.K} local solutions, got {len(locs)}")
        for loc in locs:
            if loc.c.shape != (self.config.N + 1,):
                raise DimensionError("local coefficient vector has the wrong length")
        object.__setattr__(self, "locals", locs)

    @property
    def coefficients(self) -> np.ndarray:
        return np.vstack([loc.c for loc in self.locals])

    @property
    def etas(self) -> np.ndarray:
        return np.array([loc.eta for loc in self.locals])

    @property
    def M(self) -> int:
        return total_nodes(self.partition, self.config.m)

    def nodes(self) -> np.ndarray:
        return global_nodes(self.partition, self.config.m)

    def __call__(self, x):
        return evaluate(self, x)


def _local_samples(values: np.ndarray, k: int, m: int) -> np.ndarray:
    return values[k * (m - 1):(k + 1) * (m - 1) + 1]


def sample(f: Callable, partition: Partition, m: int) -> np.ndarray:
    """Evaluate ``f`` once at every distinct node of the partition."""
    x = global_nodes(partition, m)
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.array([float(f(xi)) for xi in x])
    return y


def approximate(data, partition: Partition, fact: ReferenceFactorization) -> PiecewiseApproximant:
    """Build the piecewise approximant from equispaced data.

    Parameters
    ----------
    data : array_like or callable
        Either the ``K(m-1)+1`` sample values ordered left to right (shared
        breakpoint values appear once) or a function to sample at the nodes.
    partition : Partition
    fact : ReferenceFactorization
    """
    m = fact.m
    values = sample(data, partition, m) if callable(data) else np.asarray(data, dtype=float)
    M = total_nodes(partition, m)
    if values.shape != (M,):
        raise DimensionError(f"expected {M} samples for K={partition.K}, m={m}; got {values.shape}")
    locs = [solve_local(fact, _local_samples(values, k, m)) for k in range(partition.K)]
    return PiecewiseApproximant(partition, fact.config, tuple(locs))


def _combine(basis: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Sequential accumulation keeps each point's rounding independent of the
    # batch size; a BLAS matvec may pick different kernels for 1 and n rows.
    acc = np.zeros(basis.shape[0])
    for ell in range(c.shape[0]):
        acc += basis[:, ell] * c[ell]
    return acc


def evaluate(approximant: PiecewiseApproximant, x):
    """Value of the approximant at ``x`` (scalar or array)."""
    k, t = locate(approximant.partition, x)
    cfg = approximant.config
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(k)
    t = np.atleast_1d(t)
    out = np.empty(t.shape)
    coeffs = approximant.coefficients
    for kk in np.unique(k):
        sel = k == kk
        out[sel] = _combine(frame_values(cfg.N, cfg.T, t[sel]), coeffs[kk])
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def error_grid(partition: Partition, M: int, grid_factor: int = 10) -> np.ndarray:
    if int(grid_factor) != grid_factor or grid_factor < 1:
        raise ConfigError(f"grid_factor must be a positive integer, got {grid_factor!r}")
    return np.linspace(partition.a, partition.b, int(grid_factor) * M)


def max_error(approximant, f: Callable, grid_factor: int = 10) -> float:
    """``E_M``: max absolute error over ``grid_factor * M`` equispaced points, ends included.

    ``approximant`` may be anything with ``partition``, ``config`` and
    ``__call__`` (the corrected approximant qualifies).
    """
    M = total_nodes(approximant.partition, approximant.config.m)
    x = error_grid(approximant.partition, M, grid_factor)
    return float(np.max(np.abs(np.asarray(f(x), dtype=float) - approximant(x))))


def node_residual(approximant: PiecewiseApproximant, samples) -> float:
    """Max misfit at the sample nodes. Non-zero in general: TSVD does not interpolate.

    Each subinterval is checked against its own samples, so the value at a
    shared breakpoint is tested on both sides.
    """
    values = np.asarray(samples, dtype=float)
    cfg, part = approximant.config, approximant.partition
    t = np.linspace(-1.0, 1.0, cfg.m)
    B = frame_values(cfg.N, cfg.T, t)
    worst = 0.0
    for k, loc in enumerate(approximant.locals):
        worst = max(worst, float(np.max(np.abs(B @ loc.c - _local_samples(values, k, cfg.m)))))
    return worst


def write_error_csv(path, x, fx, approx) -> None:
    """Rows of ``x, f, approx, error`` with round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "approx", "error"])
        for xi, fi, ai in zip(x, fx, approx):
            w.writerow([repr(float(xi)), repr(float(fi)), repr(float(ai)), repr(float(abs(fi - ai)))])


def save_approximant(approximant: PiecewiseApproximant, path) -> None:
    cfg, part = approximant.config, approximant.partition
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, part.K, cfg.N, cfg.m, cfg.T, cfg.gamma, cfg.epsilon
    )
    body = part.breakpoints.astype("<f8").tobytes() + approximant.coefficients.astype("<f8").tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + body)
    os.replace(tmp, path)


def load_approximant(path) -> PiecewiseApproximant:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for an approximant header")
    magic, version, K, N, m, T, gamma, eps = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: not an approximant file (bad magic)")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + 8 * ((K + 1) + K * (N + 1))
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    try:
        cfg = FrameConfig(N=N, T=T, gamma=gamma, epsilon=eps, m=m)
        bp = np.frombuffer(raw, "<f8", K + 1, _HEADER.size).astype(float)
        part = Partition(bp)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    coeffs = np.frombuffer(raw, "<f8", K * (N + 1), _HEADER.size + 8 * (K + 1)).astype(float)
    coeffs = coeffs.reshape(K, N + 1)
    return PiecewiseApproximant(part, cfg, tuple(LocalCoefficients(c) for c in coeffs))


# -- piecewise Lagrange interpolation (comparison oracle) -------------------------------


def lagrange_interp_bound(n: int, h_I: float, C_f: float) -> float:
    """``h_I^{n+1} / n^{n+1} * C_f``, evaluated in log space to avoid overflow."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not h_I > 0:
        raise ValueError(f"h_I must be positive, got {h_I!r}")
    if C_f < 0:
        raise ValueError(f"C_f must be nonnegative, got {C_f!r}")
    if C_f == 0:
        return 0.0
    return math.exp((n + 1) * (math.log(h_I) - math.log(n)) + math.log(C_f))


def piecewise_lagrange(f: Callable, partition: Partition, n: int) -> Callable:
    """Degree-``n`` interpolation at ``n+1`` equispaced nodes on every subinterval.

    Returns a callable evaluating the piecewise interpolant (barycentric form).
    """
    j = np.arange(n + 1)
    tnodes = -1.0 + 2.0 * j / n
    w = np.array([(-1.0) ** i * math.comb(n, i) for i in j])
    vals = [np.asarray(f(partition.to_physical(k, tnodes)), float) for k in range(partition.K)]

    def interp(x):
        k, t = locate(partition, x)
        k, t = np.atleast_1d(k), np.atleast_1d(t)
        out = np.empty(t.shape)
        for i, (kk, tt) in enumerate(zip(k, t)):
            d = tt - tnodes
            hit = np.nonzero(d == 0.0)[0]
            if hit.size:
                out[i] = vals[kk][hit[0]]
            else:
                q = w / d
                out[i] = q @ vals[kk] / q.sum()
        return out if np.ndim(x) else float(out[0])

    return interp
