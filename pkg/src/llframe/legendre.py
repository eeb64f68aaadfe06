"""Orthonormal Legendre polynomials and the scaled frame on an extended interval.

The frame functions are ``P_l(t) = p_l(t / T) / sqrt(T)`` where ``p_l`` is the
Legendre polynomial normalised so that ``int_{-1}^{1} p_l p_j = delta_lj``.
Restricted to ``[-1, 1]`` they are no longer orthogonal, which is what makes
the system a frame rather than a basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DomainError

#: Round-off slack accepted at the endpoints of ``[-1, 1]``.
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class FrameConfig:
    """Local discretization parameters shared by every subinterval.

    Parameters
    ----------
    N : int
        Local polynomial degree (the frame has ``N + 1`` functions).
    T : float
        Extension parameter; the Legendre system is orthonormal on ``[-T, T]``.
    gamma : float
        Oversampling ratio. The sample count is ``m = ceil(gamma * (N + 1))``.
    epsilon : float
        TSVD truncation threshold; singular values ``<= epsilon`` are dropped.
    m : int, optional
        Explicit sample count per subinterval. Derived from ``gamma`` when omitted.
    """

    N: int = 15
    T: float = 6.0
    gamma: float = 1.0
    epsilon: float = 1e-14
    m: int = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ConfigError(f"N must be a nonnegative integer, got {self.N!r}")
        if not self.T >= 1.0:
            raise ConfigError(f"T must be >= 1, got {self.T!r}")
        if not self.gamma >= 1.0:
            raise ConfigError(f"gamma must be >= 1, got {self.gamma!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if self.m is None:
            # guard against gamma*(N+1) landing a hair above an integer
            m = math.ceil(self.gamma * (self.N + 1) - 1e-9)
            object.__setattr__(self, "m", int(m))
        if int(self.m) != self.m:
            raise ConfigError(f"m must be an integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if self.m < 2:
            raise ConfigError(f"need at least 2 samples per subinterval, got m={self.m}")
        if self.m < self.N + 1:
            raise ConfigError(f"m={self.m} < N+1={self.N + 1}: system would be underdetermined")

    @classmethod
    def from_m(cls, m: int, T: float = 6.0, epsilon: float = 1e-14) -> "FrameConfig":
        """Square configuration (``gamma = 1``, ``N = m - 1``) with ``m`` samples."""
        return cls(N=m - 1, T=T, gamma=1.0, epsilon=epsilon, m=m)

    def with_(self, **changes) -> "FrameConfig":
        """Return a copy with some fields replaced; ``m`` is re-derived unless given."""
        params = dict(N=self.N, T=self.T, gamma=self.gamma, epsilon=self.epsilon)
        params.update(changes)
        return FrameConfig(**params)


def _check_unit(y: np.ndarray) -> np.ndarray:
    bad = np.abs(y) > 1.0 + ENDPOINT_TOL
    if np.any(bad):
        raise DomainError(f"argument outside [-1, 1]: {y[bad].ravel()[:3]}")
    return np.clip(y, -1.0, 1.0)


def legendre_orthonormal(ell_max: int, y) -> np.ndarray:
    """Evaluate ``p_0(y), ..., p_ell_max(y)``.

    Uses the three-term recurrence written directly for the normalised
    polynomials, so no large intermediate values are ever formed.

    Parameters
    ----------
    ell_max : int
        Highest degree, ``>= 0``.
    y : float or array_like
        Points in ``[-1, 1]`` (round-off of ``1e-12`` beyond is clamped).

    Returns
    -------
    ndarray
        Shape ``y.shape + (ell_max + 1,)``.
    """
    if int(ell_max) != ell_max or ell_max < 0:
        raise ValueError(f"ell_max must be a nonnegative integer, got {ell_max!r}")
    ell_max = int(ell_max)
    y = _check_unit(np.asarray(y, dtype=float))
    out = np.empty(y.shape + (ell_max + 1,))
    out[..., 0] = 1.0 / math.sqrt(2.0)
    if ell_max >= 1:
        out[..., 1] = math.sqrt(1.5) * y
    for ell in range(1, ell_max):
        a = math.sqrt((2 * ell + 1) * (2 * ell + 3)) / (ell + 1)
        b = ell / (ell + 1) * math.sqrt((2 * ell + 3) / (2 * ell - 1))
        out[..., ell + 1] = a * y * out[..., ell] - b * out[..., ell - 1]
    return out


def frame_values(N: int, T: float, t) -> np.ndarray:
    """``P_l^{(T)}(t)`` for ``l = 0..N`` and any ``|t| <= T``.

    Unlike :func:`scaled_frame_eval` this accepts points outside ``[-1, 1]``,
    which one-sided patches need when they extrapolate by a fraction of a cell.
    """
    t = np.asarray(t, dtype=float)
    return legendre_orthonormal(N, t / T) / math.sqrt(T)


def scaled_frame_eval(config: FrameConfig, t) -> np.ndarray:
    """Frame functions ``P_l^{(T)}(t) = p_l(t/T) / sqrt(T)`` for ``t`` in ``[-1, 1]``."""
    t = _check_unit(np.asarray(t, dtype=float))
    return frame_values(config.N, config.T, t)
