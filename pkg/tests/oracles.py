"""Independent extended-precision reference computations used by the tests."""

import math

import mpmath
import numpy as np

mpmath.mp.dps = 50


def legendre_mp(ell_max, y):
    """Orthonormal Legendre values via the classical (unnormalised) recurrence in 50 digits."""
    y = mpmath.mpf(y)
    P = [mpmath.mpf(1), y]
    for n in range(1, ell_max):
        P.append(((2 * n + 1) * y * P[n] - n * P[n - 1]) / (n + 1))
    return np.array([float(P[l] * mpmath.sqrt(mpmath.mpf(2 * l + 1) / 2)) for l in range(ell_max + 1)])


def lstsq_mp(A, b):
    """Full least-squares solution from the normal equations in 50-digit arithmetic."""
    Am = mpmath.matrix(A.tolist())
    bm = mpmath.matrix(list(b))
    AtA = Am.T * Am
    Atb = Am.T * bm
    x = mpmath.lu_solve(AtA, Atb)
    return np.array([float(v) for v in x])


def erf_series(x, terms=30):
    """Maclaurin series of erf truncated after ``terms`` terms, summed in 50 digits."""
    x = mpmath.mpf(x)
    s = mpmath.mpf(0)
    for n in range(terms):
        s += (-1) ** n * x ** (2 * n + 1) / (mpmath.factorial(n) * (2 * n + 1))
    return float(2 / mpmath.sqrt(mpmath.pi) * s)


def trapezoid_column_norms(N, m):
    """Trapezoid-rule approximation to int p_l^2 / 2 on [-1, 1] with m nodes (T = 1)."""
    t = np.linspace(-1, 1, m)
    w = np.full(m, 2.0 / (m - 1))
    w[[0, -1]] /= 2
    P = np.array([legendre_mp(N, ti) for ti in t])
    return (w[:, None] * P**2).sum(axis=0)
