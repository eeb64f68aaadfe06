"""scikit-learn compatible estimators wrapping the LLF pipeline.

``X`` is the 1-D equispaced sample grid (shape ``(M,)`` or ``(M, 1)``) and
``y`` the sampled values; ``predict`` evaluates the fitted approximant.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .exceptions import ConfigError
from .io import check_equispaced
from .legendre import FrameConfig
from .offline import get_factorization
from .online import approximate, node_residual
from .partition import uniform_partition
from .singularity import DEFAULT_TAU, analyze, correct


def _as_grid(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"X must have a single feature, got shape {X.shape}")
        X = X[:, 0]
    return X


class LocalLegendreFrame(RegressorMixin, BaseEstimator):
    """Local Legendre frame approximation of equispaced data.

    Parameters
    ----------
    n_intervals : int or None
        Number of subintervals ``K``. ``None`` infers it from the sample count
        via ``M = K (m - 1) + 1``.
    degree : int
        Local degree ``N``.
    extension : float
        Extension parameter ``T``.
    oversampling : float
        Oversampling ratio ``gamma``.
    epsilon : float
        TSVD truncation threshold.
    """

    def __init__(self, n_intervals=None, degree=15, extension=6.0, oversampling=1.0, epsilon=1e-14):
        self.n_intervals = n_intervals
        self.degree = degree
        self.extension = extension
        self.oversampling = oversampling
        self.epsilon = epsilon

    def _config(self) -> FrameConfig:
        return FrameConfig(N=self.degree, T=self.extension, gamma=self.oversampling,
                           epsilon=self.epsilon)

    def fit(self, X, y):
        x = _as_grid(X)
        y = column_or_1d(check_array(y, ensure_2d=False, dtype=np.float64), warn=True)
        if x.shape != y.shape:
            raise ValueError(f"X and y lengths differ: {x.shape[0]} vs {y.shape[0]}")
        check_equispaced(x)
        cfg = self._config()
        M = x.size
        if self.n_intervals is None:
            if (M - 1) % (cfg.m - 1):
                raise ConfigError(f"{M} samples cannot be split into blocks of m={cfg.m}")
            K = (M - 1) // (cfg.m - 1)
        else:
            K = int(self.n_intervals)
            if K * (cfg.m - 1) + 1 != M:
                raise ConfigError(f"K={K}, m={cfg.m} needs {K * (cfg.m - 1) + 1} samples, got {M}")
        self.partition_ = uniform_partition(float(x[0]), float(x[-1]), K)
        self.factorization_ = get_factorization(cfg)
        self.approximant_ = approximate(y, self.partition_, self.factorization_)
        self.samples_ = y
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "approximant_")
        return np.asarray(self._model()(_as_grid(X)), dtype=float)

    def _model(self):
        return self.approximant_

    @property
    def coef_(self) -> np.ndarray:
        """``(K, N+1)`` frame coefficients."""
        check_is_fitted(self, "approximant_")
        return self.approximant_.coefficients

    @property
    def etas_(self) -> np.ndarray:
        check_is_fitted(self, "approximant_")
        return self.approximant_.etas

    def node_residual(self) -> float:
        check_is_fitted(self, "approximant_")
        return node_residual(self.approximant_, self.samples_)


class SingularityCorrectedFrame(LocalLegendreFrame):
    """:class:`LocalLegendreFrame` followed by detect / localize / correct.

    Additional parameters
    ---------------------
    tau_detect : float
        Flag subintervals whose coefficient energy exceeds ``tau_detect``
        times the median.
    """

    def __init__(self, n_intervals=None, degree=15, extension=6.0, oversampling=1.0,
                 epsilon=1e-14, tau_detect=DEFAULT_TAU):
        super().__init__(n_intervals, degree, extension, oversampling, epsilon)
        self.tau_detect = tau_detect

    def fit(self, X, y):
        super().fit(X, y)
        self.report_ = analyze(self.approximant_, self.samples_, self.factorization_, self.tau_detect)
        self.corrected_ = correct(self.approximant_, self.report_, self.factorization_, self.samples_)
        return self

    def _model(self):
        return self.corrected_

    @property
    def singular_points_(self) -> list:
        check_is_fitted(self, "report_")
        return [p.split for p in self.corrected_.patches]
