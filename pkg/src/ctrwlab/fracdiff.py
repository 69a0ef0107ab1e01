"""Particle tracking for the time-changed diffusion dX = a(X) dE + b(X) dB(E).

Particles are subordinated first: E is sampled on the output grid and the
state is advanced by one Euler step per grid interval in operational time,

    X_{k+1} = X_k + a(X_k) dE_k + b(X_k) sqrt(dE_k) Z_k,

so X is exactly constant wherever E is flat.  The ensemble feeds histogram
density estimates, mean squared displacement curves and a check of the
fractional moment equation D^beta m = b^2 through an L1 Caputo quadrature.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from numbers import Real
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn

from .engine import map_blocks
from .errors import DomainError, FitError, NumericError, ParameterDomainError, PreconditionError
from .lab import ExperimentReport
from .limits import GridPath, _operational_counts, _validate_grid, default_op_step
from .stable_rng import RngStream

__all__ = [
    "SdeCoeffs",
    "DensityEstimate",
    "MsdCurve",
    "simulate_sde",
    "sde_ensemble",
    "estimate_density",
    "msd_curve",
    "caputo_derivative",
    "verify_fractional_moment_equation",
]

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class SdeCoeffs:
    """Drift ``a``, diffusion ``b`` (numbers or vectorised callables), start ``x0``, index ``beta``."""

    a: Coefficient = 0.0
    b: Coefficient = 1.0
    x0: float = 0.0
    beta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ParameterDomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not math.isfinite(self.x0):
            raise ParameterDomainError("x0 must be finite")
        for name in ("a", "b"):
            c = getattr(self, name)
            if not callable(c) and not (isinstance(c, Real) and math.isfinite(c)):
                raise ParameterDomainError(f"{name} must be a finite number or a callable")

    @property
    def drift_is_zero(self) -> bool:
        return not callable(self.a) and self.a == 0.0

    @property
    def diffusion_is_constant(self) -> bool:
        return not callable(self.b)

    @staticmethod
    def _eval(c, x: np.ndarray) -> np.ndarray:
        if not callable(c):
            return np.full(x.shape, float(c))
        return np.broadcast_to(np.asarray(c(x), dtype=float), x.shape)

    def drift(self, x):
        return self._eval(self.a, np.asarray(x, dtype=float))

    def diffusion(self, x):
        return self._eval(self.b, np.asarray(x, dtype=float))


def _euler_block(coeffs: SdeCoeffs, g: np.ndarray, h: float, stream: RngStream, m: int):
    e = _operational_counts(coeffs.beta, g, h, stream, m) * h
    de = np.diff(e, axis=1)
    z = stream.substream("brownian").generator().standard_normal(de.shape)
    x = np.empty((m, g.size))
    x[:, 0] = coeffs.x0
    for k in range(de.shape[1]):
        cur = x[:, k]
        a = coeffs.drift(cur)
        b = coeffs.diffusion(cur)
        bad = ~(np.isfinite(a) & np.isfinite(b))
        if bad.any():
            r = int(np.argmax(bad))
            raise NumericError(
                "non-finite coefficient",
                state={"time": float(g[k]), "x": float(cur[r]), "a": float(a[r]), "b": float(b[r])},
            )
        step = a * de[:, k] + b * np.sqrt(de[:, k]) * z[:, k]
        # trapped particles keep their exact position
        x[:, k + 1] = np.where(de[:, k] > 0.0, cur + step, cur)
    return x


def _resolve(coeffs: SdeCoeffs, g: np.ndarray, op_step: Optional[float]) -> float:
    h = default_op_step(coeffs.beta, g[-1]) if op_step is None else op_step
    if not (h > 0.0) or not math.isfinite(h):
        raise ParameterDomainError(f"op_step must be positive, got {op_step}")
    return h


def sde_ensemble(
    coeffs: SdeCoeffs, grid, replicates: int, stream: RngStream,
    op_step: Optional[float] = None, threads=None,
) -> np.ndarray:
    """(replicates, len(grid)) particle positions."""
    g = _validate_grid(grid)
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")
    h = _resolve(coeffs, g, op_step)
    return np.vstack(map_blocks(lambda s, m: _euler_block(coeffs, g, h, s, m), replicates, stream, threads))


def simulate_sde(
    coeffs: SdeCoeffs, horizon: float, grid_points: int, op_step: Optional[float], stream: RngStream
) -> GridPath:
    """One particle path on ``grid_points`` equally spaced times in [0, horizon]."""
    if not isinstance(grid_points, (int, np.integer)) or grid_points < 2:
        raise ParameterDomainError("grid_points must be an integer >= 2")
    if not (horizon > 0.0) or not math.isfinite(horizon):
        raise ParameterDomainError("horizon must be positive")
    g = np.linspace(0.0, horizon, grid_points)
    return GridPath(g, sde_ensemble(coeffs, g, 1, stream, op_step)[0])


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    edges: np.ndarray
    masses: np.ndarray
    count: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def density(self) -> np.ndarray:
        return self.masses / np.diff(self.edges)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "mass"])
            for lo, hi, p in zip(self.edges[:-1], self.edges[1:], self.masses):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(p))])


def estimate_density(positions, bins: int = 100) -> DensityEstimate:
    """Equal-width histogram over [min, max] normalised to unit mass."""
    x = np.asarray(positions, dtype=float).reshape(-1)
    if x.size == 0:
        raise DomainError("empty sample")
    if not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ParameterDomainError("bins must be a positive integer")
    if not np.all(np.isfinite(x)):
        raise DomainError("positions must be finite")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return DensityEstimate(np.array([lo - 0.5, lo + 0.5]), np.array([1.0]), x.size)
    counts, edges = np.histogram(x, bins=int(bins), range=(lo, hi))
    return DensityEstimate(edges, counts / x.size, x.size)


@dataclass(frozen=True, eq=False)
class MsdCurve:
    times: np.ndarray
    msd: np.ndarray
    se: np.ndarray
    slope: Optional[float]
    intercept: Optional[float]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "msd", "se"])
            for row in zip(self.times, self.msd, self.se):
                w.writerow([repr(float(v)) for v in row])


def _moment_block(coeffs, g, h, stream, m):
    d = _euler_block(coeffs, g, h, stream, m) - coeffs.x0
    d2 = d * d
    return d2.sum(axis=0), (d2 * d2).sum(axis=0), d


def _msd_on_grid(coeffs, g, replicates, stream, op_step, threads, keep=False):
    h = _resolve(coeffs, g, op_step)
    parts = map_blocks(
        lambda s, m: _moment_block(coeffs, g, h, s, m), replicates, stream, threads
    )
    s2 = np.zeros(g.size)
    s4 = np.zeros(g.size)
    for p2, p4, _ in parts:  # fixed block order keeps the sums reproducible
        s2 += p2
        s4 += p4
    msd = s2 / replicates
    if replicates > 1:
        var = np.maximum(s4 - replicates * msd**2, 0.0) / (replicates - 1)
        se = np.sqrt(var / replicates)
    else:
        se = np.zeros(g.size)
    last = np.concatenate([p[2][:, -1] for p in parts]) if keep else None
    return msd, se, last


def msd_curve(
    coeffs: SdeCoeffs, times: Sequence[float], replicates: int, stream: RngStream,
    op_step: Optional[float] = None, threads=None, keep_final: bool = False,
):
    """Monte Carlo E[(X_t - x0)^2] with standard errors and a log-log slope.

    With ``keep_final`` the displacements at the last time are returned as
    well, as ``(curve, displacements)``.
    """
    if not coeffs.drift_is_zero:
        raise PreconditionError("msd_curve needs a zero drift")
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size < 3:
        raise FitError("at least 3 time points are needed for a slope fit")
    if np.any(t <= 0.0) or np.any(np.diff(t) <= 0.0):
        raise ParameterDomainError("times must be positive and strictly increasing")
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")
    g = np.concatenate([[0.0], t])
    msd, se, last = _msd_on_grid(coeffs, g, replicates, stream, op_step, threads, keep_final)
    msd, se = msd[1:], se[1:]
    slope = intercept = None
    if np.all(msd > 0.0):
        slope, intercept = (float(v) for v in np.polyfit(np.log(t), np.log(msd), 1))
    curve = MsdCurve(t, msd, se, slope, intercept)
    return (curve, last + coeffs.x0) if keep_final else curve


def caputo_derivative(values, beta: float, t: float, dt: float) -> float:
    """L1 approximation of the Caputo derivative of order ``beta`` at grid time t.

    ``values[k]`` holds g(k dt).  The derivative is replaced by forward
    differences on each cell and the kernel (t - u)^(-beta) is integrated
    exactly, which gives

        (dt^-beta / Gamma(2 - beta)) sum_k (g_{k+1} - g_k) w_{n-k},
        w_j = j^(1 - beta) - (j - 1)^(1 - beta).
    """
    if not (0.0 < beta < 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")
    if not (dt > 0.0) or not math.isfinite(dt):
        raise ParameterDomainError("dt must be positive")
    g = np.asarray(values, dtype=float).reshape(-1)
    pos = t / dt
    n = int(round(pos))
    if abs(pos - n) > 1e-9 * max(1.0, pos) or n < 0 or n >= g.size:
        raise DomainError(f"t = {t} is not a point of the grid")
    if n < 3:
        raise DomainError("at least 3 grid points are needed before t")
    j = np.arange(n, 0, -1, dtype=float)  # n - k for k = 0..n-1
    w = j ** (1.0 - beta) - (j - 1.0) ** (1.0 - beta)
    return float(np.dot(np.diff(g[: n + 1]), w) / (gamma_fn(2.0 - beta) * dt**beta))


def verify_fractional_moment_equation(
    beta: float,
    times: Sequence[float],
    replicates: int,
    stream: RngStream,
    *,
    diffusion: float = 1.0,
    dt: float = 1e-2,
    op_step: Optional[float] = None,
    tolerance: float = 0.1,
    threads=None,
) -> ExperimentReport:
    """Check D^beta m = b^2 for m(t) = E[X_t^2] of dX = b dB(E), x0 = 0.

    m is estimated on the uniform grid k dt up to max(times) and the L1
    Caputo derivative is taken at each requested time.
    """
    coeffs = SdeCoeffs(0.0, float(diffusion), 0.0, beta)
    ts = np.asarray(times, dtype=float).reshape(-1)
    if ts.size == 0 or np.any(ts <= 0.0):
        raise ParameterDomainError("times must be positive")
    if not (dt > 0.0):
        raise ParameterDomainError("dt must be positive")
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")
    steps = int(round(ts.max() / dt))
    g = np.arange(steps + 1) * dt
    # validate every time against the grid before sampling
    for t in ts:
        caputo_derivative(np.zeros(g.size), beta, float(t), dt)
    msd, se, _ = _msd_on_grid(coeffs, g, replicates, stream, op_step, threads)
    target = float(diffusion) ** 2
    report = ExperimentReport(
        "fracdiff_pde",
        {
            "beta": beta, "times": ts.tolist(), "replicates": replicates, "diffusion": diffusion,
            "dt": dt, "stream_id": stream.stream_id,
        },
        stream.seed,
    )
    ok = True
    for t in ts:
        d = caputo_derivative(msd, beta, float(t), dt)
        k = int(round(t / dt))
        resid = abs(d - target)
        ok &= resid < tolerance
        report.per_n.append(
            {"t": float(t), "msd": msd[k], "se": se[k], "caputo": d, "residual": resid}
        )
    report.checks["residual_within_tolerance"] = bool(ok)
    report.extras = {
        "target": target,
        "tolerance": tolerance,
        "op_step": default_op_step(beta, g[-1]) if op_step is None else op_step,
        "limit_msd_at_1": target / float(gamma_fn(1.0 + beta)),
    }
    return report
