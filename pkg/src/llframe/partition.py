"""Interval partitions, affine maps to the reference interval, and node grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DomainError

LOCATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    """Breakpoints ``a_0 < a_1 < ... < a_K`` of a finite interval.

    Subinterval ``k`` (0-based) is ``[a_k, a_{k+1}]`` and is mapped onto
    ``[-1, 1]`` by ``x = centers[k] + half_widths[k] * t``.
    """

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ConfigError("a partition needs at least two breakpoints")
        if not np.all(np.isfinite(bp)):
            raise ConfigError("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise ConfigError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def K(self) -> int:
        return self.breakpoints.size - 1

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[1:] - self.breakpoints[:-1])

    @property
    def h_max(self) -> float:
        """Largest subinterval length."""
        return float(np.max(np.diff(self.breakpoints)))

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.breakpoints)
        return bool(np.allclose(d, d[0], rtol=1e-12, atol=0.0))

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(
            self.breakpoints, other.breakpoints
        )

    def __hash__(self):
        return hash(self.breakpoints.tobytes())

    def __repr__(self):
        return f"Partition(K={self.K}, a={self.a!r}, b={self.b!r})"

    def _check_index(self, k: int):
        if not 0 <= k < self.K:
            raise IndexError(f"subinterval index {k} out of range for K={self.K}")

    def to_reference(self, k: int, x):
        """Local coordinate ``t = (x - c_k) / s_k`` (not clamped)."""
        self._check_index(k)
        return (np.asarray(x, dtype=float) - self.centers[k]) / self.half_widths[k]

    def to_physical(self, k: int, t):
        self._check_index(k)
        return self.centers[k] + self.half_widths[k] * np.asarray(t, dtype=float)


def uniform_partition(a: float, b: float, K: int) -> Partition:
    """Split ``[a, b]`` into ``K`` equal subintervals."""
    if not a < b:
        raise ConfigError(f"need a < b, got a={a!r}, b={b!r}")
    if int(K) != K or K < 1:
        raise ConfigError(f"K must be a positive integer, got {K!r}")
    K = int(K)
    bp = a + np.arange(K + 1) * ((b - a) / K)
    bp[-1] = b
    return Partition(bp)


@dataclass(frozen=True, eq=False)
class ReferenceNodes:
    """Equispaced nodes ``t_j = -1 + 2j/(m-1)`` on ``[-1, 1]``."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError(f"need m >= 2 reference nodes, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def nodes(self) -> np.ndarray:
        t = -1.0 + 2.0 * np.arange(self.m) / (self.m - 1)
        t[0], t[-1] = -1.0, 1.0
        return t

    def __eq__(self, other):
        return isinstance(other, ReferenceNodes) and other.m == self.m

    def __hash__(self):
        return hash(("ReferenceNodes", self.m))


def physical_nodes(partition: Partition, k: int, ref_nodes: ReferenceNodes) -> np.ndarray:
    """Nodes ``c_k + s_k t_j`` of subinterval ``k``; the ends are the breakpoints exactly."""
    x = partition.to_physical(k, ref_nodes.nodes)
    x[0] = partition.breakpoints[k]
    x[-1] = partition.breakpoints[k + 1]
    return x


def global_nodes(partition: Partition, m: int) -> np.ndarray:
    """All distinct sample nodes, left to right, shared breakpoints counted once."""
    ref = ReferenceNodes(m)
    out = np.empty(total_nodes(partition, m))
    for k in range(partition.K):
        out[k * (m - 1):(k + 1) * (m - 1) + 1] = physical_nodes(partition, k, ref)
    return out


def locate(partition: Partition, x):
    """Find the subinterval containing ``x`` and the local coordinate there.

    Membership is left-closed, right-open, except that the last subinterval
    also owns ``b``. So a breakpoint belongs to the subinterval on its right.

    Returns
    -------
    k : int or ndarray of int
    t : float or ndarray, clamped to ``[-1, 1]``
    """
    xa = np.asarray(x, dtype=float)
    lo, hi = partition.a, partition.b
    bad = (xa < lo - LOCATE_TOL) | (xa > hi + LOCATE_TOL) | ~np.isfinite(xa)
    if np.any(bad):
        raise DomainError(f"x outside [{lo}, {hi}]: {np.atleast_1d(xa[bad])[:3]}")
    k = np.searchsorted(partition.breakpoints, xa, side="right") - 1
    k = np.clip(k, 0, partition.K - 1)
    t = (xa - partition.centers[k]) / partition.half_widths[k]
    t = np.clip(t, -1.0, 1.0)
    if xa.ndim == 0:
        return int(k), float(t)
    return k, t


def total_nodes(partition_or_K, m: int) -> int:
    """``K (m - 1) + 1``: sample count over the whole interval."""
    K = partition_or_K.K if isinstance(partition_or_K, Partition) else int(partition_or_K)
    return K * (m - 1) + 1
