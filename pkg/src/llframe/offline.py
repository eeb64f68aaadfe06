"""Offline stage: reference sampling matrix, truncated SVD, and its file format.

Binary layout (little-endian), version 1::

    magic      8 bytes   b"LLFFACT\\x00"
    version    u32
    m, N       u32, u32
    T, gamma, epsilon   f64 x 3
    C_delta    u32
    sigma_all  f64[min(m, N+1)]
    U_eps      f64[m, C_delta]        row-major
    sigma_inv  f64[C_delta]
    V_eps      f64[N+1, C_delta]      row-major
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FormatError, InvariantError, NumericalError
from .legendre import FrameConfig, scaled_frame_eval
from .partition import ReferenceNodes

MAGIC = b"LLFFACT\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIIdddI")
ORTHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SamplingMatrix:
    """``A[j, l] = P_l^{(T)}(t_j) / sqrt(m)`` on the reference nodes."""

    entries: np.ndarray
    config: FrameConfig
    ref_nodes: ReferenceNodes


@dataclass(frozen=True, eq=False)
class ReferenceFactorization:
    """Truncated SVD of the reference sampling matrix, reused on every subinterval.

    Attributes
    ----------
    U_eps : ndarray, shape (m, C_delta)
    sigma_inv : ndarray, shape (C_delta,)
        Reciprocals of the retained singular values, in descending-sigma order.
    V_eps : ndarray, shape (N+1, C_delta)
    sigma_all : ndarray
        The full singular spectrum, kept for diagnostics and rank tables.
    """

    config: FrameConfig
    ref_nodes: ReferenceNodes
    U_eps: np.ndarray
    sigma_inv: np.ndarray
    V_eps: np.ndarray
    sigma_all: np.ndarray

    def __post_init__(self):
        for name in ("U_eps", "sigma_inv", "V_eps", "sigma_all"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def C_delta(self) -> int:
        return int(self.sigma_inv.size)

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def N(self) -> int:
        return self.config.N

    def validate(self):
        """Raise :class:`InvariantError` if any structural or numerical invariant fails."""
        cfg, C = self.config, self.C_delta
        m, n = cfg.m, cfg.N + 1
        if self.ref_nodes.m != m:
            raise InvariantError("reference node count does not match config.m")
        if self.U_eps.shape != (m, C) or self.V_eps.shape != (n, C):
            raise InvariantError(
                f"factor shapes {self.U_eps.shape}, {self.V_eps.shape} inconsistent with "
                f"m={m}, N+1={n}, C_delta={C}"
            )
        if self.sigma_all.shape != (min(m, n),):
            raise InvariantError("sigma_all has the wrong length")
        if not 1 <= C <= min(m, n):
            raise InvariantError(f"retained rank {C} outside [1, {min(m, n)}]")
        s = self.sigma_all
        if not np.all(np.isfinite(s)) or np.any(np.diff(s) > 0):
            raise InvariantError("sigma_all must be finite and non-increasing")
        if int(np.count_nonzero(s > cfg.epsilon)) != C:
            raise InvariantError("C_delta does not equal the number of singular values > epsilon")
        retained = 1.0 / self.sigma_inv
        if not np.all(retained > cfg.epsilon):
            raise InvariantError("a retained singular value is <= epsilon")
        if not np.allclose(retained, s[:C], rtol=1e-12, atol=0.0):
            raise InvariantError("sigma_inv does not match the leading singular values")
        eye = np.eye(C)
        for name, M in (("U_eps", self.U_eps), ("V_eps", self.V_eps)):
            if np.max(np.abs(M.T @ M - eye)) > ORTHO_TOL:
                raise InvariantError(f"columns of {name} are not orthonormal")
        return self


def assemble_matrix(config: FrameConfig) -> SamplingMatrix:
    """Build the ``m x (N+1)`` reference sampling matrix."""
    ref = ReferenceNodes(config.m)
    A = scaled_frame_eval(config, ref.nodes) / math.sqrt(config.m)
    return SamplingMatrix(A, config, ref)


def factorize(matrix: SamplingMatrix, epsilon: float | None = None) -> ReferenceFactorization:
    """Full SVD, then keep the modes with ``sigma > epsilon`` (strict)."""
    cfg = matrix.config
    if epsilon is not None and epsilon != cfg.epsilon:
        cfg = cfg.with_(epsilon=epsilon, m=cfg.m)
    A = matrix.entries
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge for m={cfg.m}, N={cfg.N}") from exc
    keep = s > cfg.epsilon
    C = int(np.count_nonzero(keep))
    if C == 0:
        raise NumericalError(
            f"no singular value exceeds epsilon={cfg.epsilon:g} (sigma_max={s[0]:g})"
        )
    fact = ReferenceFactorization(
        config=cfg,
        ref_nodes=matrix.ref_nodes,
        U_eps=U[:, :C],
        sigma_inv=1.0 / s[:C],
        V_eps=Vt[:C].T,
        sigma_all=s,
    )
    return fact


def build_factorization(config: FrameConfig) -> ReferenceFactorization:
    """Assemble and factorize in one step."""
    return factorize(assemble_matrix(config))


def save_factorization(fact: ReferenceFactorization, path) -> None:
    cfg = fact.config
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, cfg.m, cfg.N, cfg.T, cfg.gamma, cfg.epsilon, fact.C_delta
    )
    blocks = (fact.sigma_all, fact.U_eps, fact.sigma_inv, fact.V_eps)
    payload = b"".join(np.ascontiguousarray(b, dtype="<f8").tobytes() for b in blocks)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + payload)
    os.replace(tmp, path)


def load_factorization(path) -> ReferenceFactorization:
    """Read a factorization file and revalidate every invariant."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a factorization header")
    magic, version, m, N, T, gamma, eps, C = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a factorization file (bad magic)")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    n_sigma = min(m, N + 1)
    sizes = (n_sigma, m * C, C, (N + 1) * C)
    expected = _HEADER.size + 8 * sum(sizes)
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    try:
        config = FrameConfig(N=N, T=T, gamma=gamma, epsilon=eps, m=m)
    except ValueError as exc:
        raise InvariantError(f"{path}: invalid config block: {exc}") from exc
    arrays, offset = [], _HEADER.size
    for n in sizes:
        arrays.append(np.frombuffer(raw, dtype="<f8", count=n, offset=offset).astype(float))
        offset += 8 * n
    sigma_all, U, sigma_inv, V = arrays
    fact = ReferenceFactorization(
        config=config,
        ref_nodes=ReferenceNodes(m),
        U_eps=U.reshape(m, C),
        sigma_inv=sigma_inv,
        V_eps=V.reshape(N + 1, C),
        sigma_all=sigma_all,
    )
    return fact.validate()


def export_factorization_csv(fact: ReferenceFactorization, directory) -> list[Path]:
    """Debug dump: one CSV per factor (``sigma_all``, ``U_eps``, ``sigma_inv``, ``V_eps``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("sigma_all", "U_eps", "sigma_inv", "V_eps"):
        p = directory / f"{name}.csv"
        np.savetxt(p, np.atleast_2d(getattr(fact, name)), delimiter=",", fmt="%.17g")
        written.append(p)
    return written


CACHE_ENV = "LLF_CACHE_DIR"
_memory_cache: dict = {}


def cache_filename(config: FrameConfig) -> str:
    return f"fact_m{config.m}_N{config.N}_T{config.T!r}_eps{config.epsilon!r}.llf"


def get_factorization(config: FrameConfig, cache_dir=None) -> ReferenceFactorization:
    """Factorization for ``config``, memoised in-process and optionally on disk.

    The disk cache lives in ``cache_dir`` or, if not given, the directory named
    by the ``LLF_CACHE_DIR`` environment variable.
    """
    key = (config.m, config.N, config.T, config.epsilon)
    fact = _memory_cache.get(key)
    if fact is not None:
        return fact
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = Path(cache_dir) / cache_filename(config) if cache_dir else None
    if path is not None and path.exists():
        fact = load_factorization(path)
    else:
        fact = build_factorization(config)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            save_factorization(fact, path)
    _memory_cache[key] = fact
    return fact
