"""Compensated (Neumaier) running sums along the last axis."""

import numpy as np


def compensated_cumsum(a: np.ndarray) -> np.ndarray:
    """Running sums of ``a`` along its last axis with error compensation.

    Accumulation is strictly left to right so the result never depends on
    how the caller partitions work.
    """
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    if a.shape[-1] == 0:
        return out
    s = np.zeros(a.shape[:-1])
    c = np.zeros(a.shape[:-1])
    for j in range(a.shape[-1]):
        x = a[..., j]
        t = s + x
        big = np.abs(s) >= np.abs(x)
        c = c + np.where(big, (s - t) + x, (x - t) + s)
        s = t
        out[..., j] = s + c
    return out


def compensated_sum(a: np.ndarray) -> np.ndarray:
    """Compensated total along the last axis (0 for empty rows)."""
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])
    return compensated_cumsum(a)[..., -1]
