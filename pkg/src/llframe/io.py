"""Equispaced data files: CSV with header ``x,f``."""

from __future__ import annotations

import csv

import numpy as np

from .exceptions import FormatError

SPACING_RTOL = 1e-10


def check_equispaced(x: np.ndarray, rtol: float = SPACING_RTOL) -> float:
    """Return the spacing of a strictly increasing uniform grid or raise ``FormatError``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise FormatError("need at least two sample locations")
    d = np.diff(x)
    if np.any(d <= 0):
        raise FormatError("x must be strictly increasing")
    h = (x[-1] - x[0]) / (x.size - 1)
    if np.max(np.abs(d - h)) > rtol * h:
        raise FormatError(f"x is not equispaced to relative tolerance {rtol:g}")
    return h


def write_samples(path, x, f) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f"])
        for xi, fi in zip(x, f):
            w.writerow([repr(float(xi)), repr(float(fi))])


def read_samples(path):
    """Load ``(x, f)`` arrays and validate uniform spacing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "f"]:
            raise FormatError(f"{path}: expected header 'x,f', got {header!r}")
        try:
            rows = [(float(a), float(b)) for a, b in reader]
        except ValueError as exc:
            raise FormatError(f"{path}: malformed row ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    arr = np.array(rows)
    check_equispaced(arr[:, 0])
    return arr[:, 0], arr[:, 1]
