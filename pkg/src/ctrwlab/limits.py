"""Samplers for the scaling limits of CTRWs.

Brownian motion B, alpha-stable Levy motion A, the inverse E(t) of a
beta-stable subordinator and the subordinated process B(E(t)), all on a
deterministic time grid.  Each sampler returns a :class:`GridPath`; the
``*_ensemble`` variants return (replicates, len(grid)) arrays.

E(t) is simulated in operational time: the subordinator D is advanced in
steps of ``op_step`` (increment ``op_step^(1/beta) tau`` with tau one-sided
beta-stable) and E(t) = op_step * #{k >= 1 : D(k op_step) <= t}, the
discrete left-continuous inverse.  E(0) = 0 exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf

from .engine import map_blocks
from .errors import DomainError, ParameterDomainError, ShapeError
from .paths import _renewal_epochs
from .stable_rng import RngStream, StableParams, one_sided_stable_variates, stable_variates

__all__ = [
    "GridPath",
    "default_op_step",
    "sample_brownian",
    "sample_stable_levy",
    "sample_inverse_subordinator",
    "sample_time_changed_bm",
    "brownian_ensemble",
    "stable_levy_ensemble",
    "inverse_subordinator_ensemble",
    "time_changed_bm_ensemble",
    "closed_form_bm_self_integral",
    "bm_self_integral_cdf",
    "grid_integral",
]


def _validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0 or g[0] != 0.0:
        raise ShapeError("grid must start at 0")
    if np.any(np.diff(g) <= 0.0) or not np.all(np.isfinite(g)):
        raise ShapeError("grid must be strictly increasing and finite")
    return g


@dataclass(frozen=True, eq=False)
class GridPath:
    """A process sampled at ``times`` (strictly increasing, starting at 0)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _validate_grid(self.times)
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != t.shape:
            raise ShapeError("times and values must have equal length")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    def value(self, t):
        """Step interpolation: the value at the last grid time <= t."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0):
            raise DomainError("negative time")
        i = np.searchsorted(self.times, t, side="right") - 1
        v = self.values[i]
        return float(v) if np.ndim(v) == 0 else v

    __call__ = value

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "value"])
            for t, x in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(x))])


def default_op_step(beta: float, horizon: float) -> float:
    """horizon^beta * 1e-3: about 10^3 operational steps per unit of E-range."""
    return (horizon**beta) * 1e-3 if horizon > 0 else 1e-3


def _check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")


def _check_op_step(op_step):
    if not (op_step > 0.0) or not math.isfinite(op_step):
        raise ParameterDomainError(f"op_step must be positive, got {op_step}")


def _check_replicates(replicates):
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")


# --- Brownian and stable Levy motion ---------------------------------------


def brownian_ensemble(grid, replicates: int, stream: RngStream, threads=None) -> np.ndarray:
    g = _validate_grid(grid)
    _check_replicates(replicates)
    sd = np.sqrt(np.diff(g))

    def block(s, m):
        z = s.generator().standard_normal((m, sd.size))
        out = np.zeros((m, g.size))
        out[:, 1:] = np.cumsum(z * sd, axis=1)
        return out

    return np.vstack(map_blocks(block, replicates, stream, threads))


def sample_brownian(grid, stream: RngStream) -> GridPath:
    """Standard Brownian motion on ``grid`` (increment variance = dt)."""
    g = _validate_grid(grid)
    return GridPath(g, brownian_ensemble(g, 1, stream)[0])


def stable_levy_ensemble(
    alpha: float, grid, replicates: int, stream: RngStream, scale: float = 1.0,
    skewness: float = 0.0, threads=None,
) -> np.ndarray:
    if not (1.0 < alpha <= 2.0):
        raise ParameterDomainError(f"alpha must lie in (1, 2], got {alpha}")
    g = _validate_grid(grid)
    _check_replicates(replicates)
    unit = StableParams(alpha, skewness, 1.0)
    step_scale = scale * np.diff(g) ** (1.0 / alpha)

    def block(s, m):
        x = stable_variates(s.generator(), unit, (m, step_scale.size))
        out = np.zeros((m, g.size))
        out[:, 1:] = np.cumsum(x * step_scale, axis=1)
        return out

    return np.vstack(map_blocks(block, replicates, stream, threads))


def sample_stable_levy(
    alpha: float, grid, stream: RngStream, scale: float = 1.0, skewness: float = 0.0
) -> GridPath:
    """alpha-stable Levy motion; the increment over dt is S_alpha(dt^(1/alpha) scale, skewness, 0)."""
    g = _validate_grid(grid)
    return GridPath(g, stable_levy_ensemble(alpha, g, 1, stream, scale, skewness)[0])


# --- inverse subordinator ---------------------------------------------------


def _operational_counts(beta, g, op_step, stream, rows):
    """(rows, len(g)) counts #{k >= 1 : D(k op_step) <= g_j}."""
    horizon = g[-1]
    if horizon == 0.0:
        return np.zeros((rows, g.size), dtype=np.int64)
    gen = stream.substream("subordinator").generator()
    # D(k h) <= t  <=>  tau_1 + ... + tau_k <= t / h^(1/beta)
    limit = horizon / op_step ** (1.0 / beta)
    mean_steps = (horizon**beta / math.gamma(1.0 + beta)) / op_step
    chunk = int(min(max(16, mean_steps + 2.0 * math.sqrt(mean_steps)), 1 << 20))
    epochs = _renewal_epochs(
        lambda size: one_sided_stable_variates(gen, beta, size), rows, limit, chunk
    )
    scaled_grid = g / op_step ** (1.0 / beta)
    counts = np.empty((rows, g.size), dtype=np.int64)
    for r in range(rows):
        counts[r] = np.searchsorted(epochs[r], scaled_grid, side="right")
    return counts


def inverse_subordinator_ensemble(
    beta: float, grid, replicates: int, stream: RngStream, op_step: Optional[float] = None,
    threads=None,
) -> np.ndarray:
    _check_beta(beta)
    g = _validate_grid(grid)
    _check_replicates(replicates)
    h = default_op_step(beta, g[-1]) if op_step is None else op_step
    _check_op_step(h)
    parts = map_blocks(
        lambda s, m: _operational_counts(beta, g, h, s, m) * h, replicates, stream, threads
    )
    return np.vstack(parts)


def sample_inverse_subordinator(
    beta: float, grid, stream: RngStream, op_step: Optional[float] = None
) -> GridPath:
    """E(t) = inf{x >= 0 : D(x) > t} on ``grid`` at operational resolution ``op_step``."""
    g = _validate_grid(grid)
    return GridPath(g, inverse_subordinator_ensemble(beta, g, 1, stream, op_step)[0])


def time_changed_bm_ensemble(
    beta: float, grid, replicates: int, stream: RngStream, op_step: Optional[float] = None,
    threads=None,
):
    """Return ``(E, BE)`` arrays; BE has Gaussian increments of variance dE given E."""
    _check_beta(beta)
    g = _validate_grid(grid)
    _check_replicates(replicates)
    h = default_op_step(beta, g[-1]) if op_step is None else op_step
    _check_op_step(h)

    def block(s, m):
        e = _operational_counts(beta, g, h, s, m) * h
        z = s.substream("brownian").generator().standard_normal((m, g.size - 1))
        be = np.zeros_like(e)
        be[:, 1:] = np.cumsum(np.sqrt(np.diff(e, axis=1)) * z, axis=1)
        return e, be

    parts = map_blocks(block, replicates, stream, threads)
    return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def sample_time_changed_bm(
    beta: float, grid, stream: RngStream, op_step: Optional[float] = None
) -> GridPath:
    """B(E(t)) by subordination: constant wherever E is flat."""
    g = _validate_grid(grid)
    _, be = time_changed_bm_ensemble(beta, g, 1, stream, op_step)
    return GridPath(g, be[0])


# --- closed forms and grid integrals ---------------------------------------


def closed_form_bm_self_integral(b_t, t):
    """int_0^t B dB = (B_t^2 - t) / 2 given B_t = b_t."""
    if np.any(np.asarray(t) < 0.0):
        raise DomainError("t must be nonnegative")
    r = (np.asarray(b_t, dtype=float) ** 2 - t) / 2.0
    return float(r) if r.ndim == 0 else r


def bm_self_integral_cdf(y, t: float = 1.0):
    """CDF of (B_t^2 - t)/2, i.e. P(chi2_1 <= (2y + t)/t)."""
    if not t > 0.0:
        raise DomainError("t must be positive")
    x = np.maximum(2.0 * np.asarray(y, dtype=float) + t, 0.0) / t
    return erf(np.sqrt(x / 2.0))


def grid_integral(H, times, values, t: float) -> np.ndarray:
    """Left-point sums sum_{t_{j+1} <= t} H(t_j) (V_{j+1} - V_j), one per row of ``values``.

    ``H`` is an :class:`~ctrwlab.calculus.IntegrandSpec`; for the functional
    kind it receives a :class:`GridPath` holding the row up to t_j.
    """
    g = _validate_grid(times)
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if v.shape[1] != g.size:
        raise ShapeError("values must have one column per grid time")
    k = int(np.searchsorted(g, t, side="right"))  # grid points <= t
    if k <= 1:
        return np.zeros(v.shape[0])
    dv = np.diff(v[:, :k], axis=1)
    left = g[: k - 1]
    if H.kind == "path":
        h = v[:, : k - 1]
    elif H.kind == "deterministic":
        h = np.broadcast_to(np.asarray(H.func(left), dtype=float), dv.shape)
    else:
        h = np.empty(dv.shape)
        for r in range(v.shape[0]):
            for j in range(k - 1):
                h[r, j] = H.func(GridPath(g[: j + 1], v[r, : j + 1]), g[j])
    return (h * dv).sum(axis=1)
