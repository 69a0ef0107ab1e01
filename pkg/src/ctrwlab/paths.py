"""Continuous-time random walk sample paths.

A CTRW with waiting times tau_i and jumps xi_i has jump epochs
T(k) = tau_1 + ... + tau_k, counting process N(t) = max{k : T(k) <= t} and
position X(t) = S(N(t)) = xi_1 + ... + xi_N(t).  Paths are right
continuous: X(t) includes a jump that happens exactly at t.

Three scaled families are provided:

* ``stable``: jumps xi_k / n^(1/alpha) at the deterministic times k/n.
* ``subdiffusive``: jumps xi_i / (c n^(beta/2)) at T(k)/n, with strictly
  beta-stable waits.
* ``compound_poisson``: jumps xi_i / sqrt(n) at T(k)/n, with exponential waits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from ._summation import compensated_cumsum
from .engine import map_blocks
from .errors import DomainError, ParameterDomainError, PreconditionError, ShapeError
from .stable_rng import RngStream, one_sided_stable_variates

__all__ = [
    "JumpLaw",
    "JumpPath",
    "CtrwSpec",
    "CtrwEnsemble",
    "MartingaleReport",
    "build_ctrw",
    "count_jumps",
    "sample_scaled_ctrw",
    "sample_ctrw_ensemble",
    "martingale_diagnostic",
    "pareto_calibration",
]


def pareto_calibration(alpha: float) -> float:
    """Scale sigma0 with n^(-1/alpha) sum of symmetric Pareto(alpha) -> S_alpha(sigma0, 0, 0).

    The Pareto law here has P(|xi| > x) = x^(-alpha) for x >= 1, so the
    tail constant is 1 and sigma0^alpha = 1 / C_alpha with
    C_alpha = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)).
    """
    c_alpha = (1.0 - alpha) / (math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))
    return (1.0 / c_alpha) ** (1.0 / alpha)


@dataclass(frozen=True)
class JumpLaw:
    """Law of a single jump xi.

    ``kind`` is ``"normal"`` (unit variance), ``"rademacher"``, ``"pareto"``
    (symmetric, tail index ``alpha`` in (1, 2), divided by
    :func:`pareto_calibration` so normalised sums approach S_alpha(1, 0, 0))
    or ``"zero"``.  ``loc`` shifts every kind and exists so that
    non-centred laws can be rejected by the experiments.
    """

    kind: str = "normal"
    alpha: Optional[float] = None
    loc: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "rademacher", "pareto", "zero"):
            raise ParameterDomainError(f"unknown jump law {self.kind!r}")
        if self.kind == "pareto":
            if self.alpha is None or not (1.0 < self.alpha < 2.0):
                raise ParameterDomainError("pareto jumps need alpha in (1, 2)")

    @property
    def mean(self) -> float:
        return self.loc

    @property
    def second_moment(self) -> float:
        if self.kind == "pareto":
            return math.inf
        if self.kind == "zero":
            return self.loc**2
        return 1.0 + self.loc**2

    @property
    def calibration(self) -> float:
        """Divisor applied to raw Pareto draws (1 for other kinds)."""
        return pareto_calibration(self.alpha) if self.kind == "pareto" else 1.0

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            x = gen.standard_normal(size)
        elif self.kind == "rademacher":
            x = np.where(gen.random(size) < 0.5, -1.0, 1.0)
        elif self.kind == "zero":
            x = np.zeros(size)
        else:
            u = 1.0 - gen.random(size)  # (0, 1]
            sign = np.where(gen.random(size) < 0.5, -1.0, 1.0)
            x = sign * u ** (-1.0 / self.alpha) / self.calibration
        return x + self.loc if self.loc else x


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JumpPath:
    """Immutable cadlag step path given by its jump epochs and sizes."""

    jump_times: np.ndarray
    jump_sizes: np.ndarray
    horizon: float
    _prefix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = _readonly(self.jump_times)
        sizes = _readonly(self.jump_sizes)
        if times.ndim != 1 or sizes.shape != times.shape:
            raise ShapeError("jump_times and jump_sizes must be 1-d of equal length")
        if not (self.horizon > 0.0) or not math.isfinite(self.horizon):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        if times.size:
            if times[0] < 0.0 or np.any(np.diff(times) < 0.0):
                raise ShapeError("jump_times must be nonnegative and nondecreasing")
            if times[-1] > self.horizon:
                raise DomainError("jump_times must not exceed the horizon")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)
        prefix = np.concatenate(([0.0], compensated_cumsum(sizes)))
        prefix.setflags(write=False)
        object.__setattr__(self, "_prefix", prefix)

    def __len__(self) -> int:
        return self.jump_times.size

    @property
    def waits(self) -> np.ndarray:
        """Waiting times tau_i, the first differences of the jump epochs."""
        return np.diff(self.jump_times, prepend=0.0)

    @property
    def partial_sums(self) -> np.ndarray:
        """S(0), S(1), ..., S(len(path))."""
        return self._prefix

    @property
    def left_values(self) -> np.ndarray:
        """X(T_i-) for every jump, in storage order (coincident jumps see earlier ones)."""
        return self._prefix[:-1]

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.horizon) or np.any(np.isnan(t)):
            raise DomainError(f"time outside [0, {self.horizon}]")
        return t

    def count(self, t):
        """N(t); accepts scalars or arrays."""
        t = self._check_time(t)
        n = np.searchsorted(self.jump_times, t, side="right")
        return int(n) if n.ndim == 0 else n

    def value(self, t):
        """X(t) = S(N(t)); accepts scalars or arrays."""
        n = self.count(t)
        v = self._prefix[n]
        return float(v) if np.ndim(v) == 0 else v

    __call__ = value

    def left_limit(self, t):
        """X(t-) for t > 0 (X(0-) is taken as 0)."""
        t = self._check_time(t)
        n = np.searchsorted(self.jump_times, t, side="left")
        v = self._prefix[n]
        return float(v) if np.ndim(v) == 0 else v

    def truncated(self, k: int) -> "JumpPath":
        """Path made of the first ``k`` jumps only."""
        return JumpPath(self.jump_times[:k], self.jump_sizes[:k], self.horizon)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["jump_time", "jump_size"])
            for t, x in zip(self.jump_times, self.jump_sizes):
                w.writerow([repr(float(t)), repr(float(x))])

    @classmethod
    def from_csv(cls, path, horizon: float) -> "JumpPath":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [float(r["jump_time"]) for r in rows],
            [float(r["jump_size"]) for r in rows],
            horizon,
        )


def build_ctrw(waits: Sequence[float], jumps: Sequence[float], horizon: float) -> JumpPath:
    """Assemble a CTRW from waiting times and jump sizes, truncated at ``horizon``."""
    waits = np.asarray(waits, dtype=float).reshape(-1)
    jumps = np.asarray(jumps, dtype=float).reshape(-1)
    if waits.shape != jumps.shape:
        raise ShapeError(f"{waits.size} waits but {jumps.size} jumps")
    if np.any(waits < 0.0) or np.any(np.isnan(waits)):
        raise DomainError("waiting times must be nonnegative")
    times = np.cumsum(waits)
    keep = int(np.searchsorted(times, horizon, side="right"))
    return JumpPath(times[:keep], jumps[:keep], horizon)


def count_jumps(path: JumpPath, t: float) -> int:
    """N(t) = max{n >= 0 : T(n) <= t}."""
    return path.count(t)


_FAMILIES = ("stable", "subdiffusive", "compound_poisson")


@dataclass(frozen=True)
class CtrwSpec:
    """Which scaled CTRW to draw: family, scale index ``n`` and horizon."""

    family: str
    n: int
    horizon: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    rate: float = 1.0
    jump_law: JumpLaw = field(default_factory=JumpLaw)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterDomainError(f"family must be one of {_FAMILIES}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterDomainError(f"n must be a positive integer, got {self.n!r}")
        if not (self.horizon > 0.0) or not math.isfinite(self.horizon):
            raise ParameterDomainError("horizon must be positive")
        if self.family == "stable":
            if self.alpha is None or not (1.0 < self.alpha <= 2.0):
                raise ParameterDomainError("stable family needs alpha in (1, 2]")
            if self.alpha == 2.0 and self.jump_law.kind == "pareto":
                raise ParameterDomainError("alpha = 2 needs finite-variance jumps")
            if self.alpha < 2.0 and self.jump_law.kind in ("normal", "rademacher"):
                raise ParameterDomainError("alpha < 2 needs heavy-tailed (pareto) jumps")
            if self.jump_law.kind == "pareto" and self.jump_law.alpha != self.alpha:
                raise ParameterDomainError("pareto tail index must equal alpha")
        elif self.family == "subdiffusive":
            if self.beta is None or not (0.0 < self.beta < 1.0):
                raise ParameterDomainError("subdiffusive family needs beta in (0, 1)")
            if not math.isfinite(self.jump_law.second_moment):
                raise ParameterDomainError("subdiffusive family needs finite-variance jumps")
        else:
            if not (self.rate > 0.0) or not math.isfinite(self.rate):
                raise ParameterDomainError("compound_poisson needs a positive rate")

    @classmethod
    def stable(cls, alpha, n, horizon=1.0, jump_law=None):
        if jump_law is None:
            jump_law = JumpLaw("rademacher") if alpha == 2.0 else JumpLaw("pareto", alpha=alpha)
        return cls("stable", n, horizon, alpha=alpha, jump_law=jump_law)

    @classmethod
    def subdiffusive(cls, beta, n, horizon=1.0, jump_law=None):
        return cls("subdiffusive", n, horizon, beta=beta, jump_law=jump_law or JumpLaw("normal"))

    @classmethod
    def compound_poisson(cls, n, horizon=1.0, rate=1.0, jump_law=None):
        return cls("compound_poisson", n, horizon, rate=rate, jump_law=jump_law or JumpLaw("normal"))

    @property
    def jump_scale(self) -> float:
        """Divisor applied to raw jumps: a(n), c n^(beta/2) or sqrt(n)."""
        if self.family == "stable":
            return self.n ** (1.0 / self.alpha)
        if self.family == "subdiffusive":
            c2 = self.jump_law.second_moment
            c = math.sqrt(c2) if c2 > 0.0 else 1.0
            return c * self.n ** (self.beta / 2.0)
        return math.sqrt(self.n)

    def expected_jumps(self) -> float:
        """Rough mean number of jumps on [0, horizon], used to size buffers."""
        x = self.n * self.horizon
        if self.family == "stable":
            return x
        if self.family == "subdiffusive":
            return x**self.beta / gamma_fn(1.0 + self.beta)
        return self.rate * x


def _stable_grid_count(n: int, horizon: float) -> int:
    k = int(math.floor(n * horizon))
    while (k + 1) / n <= horizon:
        k += 1
    while k > 0 and k / n > horizon:
        k -= 1
    return k


class CtrwEnsemble:
    """Independent CTRW paths stored as padded 2-d arrays.

    Row ``r`` holds ``lengths[r]`` jumps; unused slots carry time ``inf`` and
    size 0, so masked reductions need no special casing.
    """

    def __init__(self, jump_times, jump_sizes, horizon: float, spec: Optional[CtrwSpec] = None):
        self.jump_times = _readonly(jump_times)
        self.jump_sizes = _readonly(jump_sizes)
        if self.jump_times.ndim != 2 or self.jump_times.shape != self.jump_sizes.shape:
            raise ShapeError("ensemble arrays must be 2-d and of equal shape")
        self.horizon = float(horizon)
        self.spec = spec
        self.lengths = _readonly(np.isfinite(self.jump_times).sum(axis=1), dtype=np.int64)
        self._prefix = None

    def __len__(self) -> int:
        return self.jump_times.shape[0]

    @property
    def prefix(self) -> np.ndarray:
        """(R, L + 1) partial sums S(0), ..., S(L) per row."""
        if self._prefix is None:
            p = np.zeros((len(self), self.jump_times.shape[1] + 1))
            p[:, 1:] = compensated_cumsum(self.jump_sizes)
            p.setflags(write=False)
            self._prefix = p
        return self._prefix

    def _check_time(self, t: float) -> float:
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"time {t} outside [0, {self.horizon}]")
        return float(t)

    def counts(self, t: float) -> np.ndarray:
        t = self._check_time(t)
        return (self.jump_times <= t).sum(axis=1)

    def values(self, t: float) -> np.ndarray:
        n = self.counts(t)
        return self.prefix[np.arange(len(self)), n]

    def path(self, i: int) -> JumpPath:
        k = int(self.lengths[i])
        return JumpPath(self.jump_times[i, :k], self.jump_sizes[i, :k], self.horizon)

    def __iter__(self):
        return (self.path(i) for i in range(len(self)))

    @classmethod
    def concatenate(cls, parts, horizon, spec=None) -> "CtrwEnsemble":
        width = max((p[0].shape[1] for p in parts), default=0)
        times, sizes = [], []
        for t, s in parts:
            pad = width - t.shape[1]
            times.append(np.pad(t, ((0, 0), (0, pad)), constant_values=np.inf))
            sizes.append(np.pad(s, ((0, 0), (0, pad)), constant_values=0.0))
        if not times:
            return cls(np.empty((0, 0)), np.empty((0, 0)), horizon, spec)
        return cls(np.vstack(times), np.vstack(sizes), horizon, spec)


def _renewal_epochs(draw, rows: int, limit: float, chunk: int) -> np.ndarray:
    """Partial sums of i.i.d. waits, per row, up to and including ``limit``.

    Waits are drawn lazily, ``chunk`` per row first and then quarter chunks
    for the rows that are still inside, until every row has passed ``limit``.
    """
    last = np.zeros(rows)
    pieces = []
    active = np.arange(rows)
    width = chunk
    while active.size:
        w = draw((active.size, width))
        block = np.full((rows, width), np.inf)
        block[active] = last[active, None] + np.cumsum(w, axis=1)
        pieces.append(block)
        last[active] = block[active, -1]
        active = active[last[active] <= limit]
        width = max(16, chunk // 4)
    epochs = np.hstack(pieces) if pieces else np.empty((rows, 0))
    inside = epochs <= limit
    width = int(inside.sum(axis=1).max()) if rows else 0
    epochs = epochs[:, :width]
    epochs[~inside[:, :width]] = np.inf
    return epochs


def _sample_block(spec: CtrwSpec, stream: RngStream, rows: int):
    jump_gen = stream.substream("jumps").generator()
    if spec.family == "stable":
        k = _stable_grid_count(spec.n, spec.horizon)
        times = np.broadcast_to(np.arange(1, k + 1) / spec.n, (rows, k)).copy()
    else:
        wait_gen = stream.substream("waits").generator()
        if spec.family == "subdiffusive":
            beta = spec.beta
            draw = lambda size: one_sided_stable_variates(wait_gen, beta, size)  # noqa: E731
        else:
            rate = spec.rate
            draw = lambda size: wait_gen.standard_exponential(size) / rate  # noqa: E731
        mean_count = spec.expected_jumps()
        chunk = int(min(max(16, mean_count + 2.0 * math.sqrt(mean_count)), 1 << 20))
        epochs = _renewal_epochs(draw, rows, spec.n * spec.horizon, chunk)
        times = epochs / spec.n
        # division can push an epoch <= n*h just past h
        times[times > spec.horizon] = np.inf
    sizes = spec.jump_law.sample(jump_gen, times.shape) / spec.jump_scale
    sizes[~np.isfinite(times)] = 0.0
    return times, sizes


def sample_ctrw_ensemble(
    spec: CtrwSpec, replicates: int, stream: RngStream, threads: Optional[int] = None
) -> CtrwEnsemble:
    """Draw ``replicates`` independent scaled CTRW paths.

    Waits and jumps come from disjoint substreams of each block stream, so
    the walk is uncoupled.
    """
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")
    parts = map_blocks(lambda s, m: _sample_block(spec, s, m), replicates, stream, threads)
    return CtrwEnsemble.concatenate(parts, spec.horizon, spec)


def sample_scaled_ctrw(spec: CtrwSpec, stream: RngStream) -> JumpPath:
    """Draw one path of the scaled family described by ``spec``."""
    times, sizes = _sample_block(spec, stream, 1)
    k = int(np.isfinite(times[0]).sum())
    return JumpPath(times[0, :k], sizes[0, :k], spec.horizon)


@dataclass(frozen=True, eq=False)
class MartingaleReport:
    times: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    # covariance of X(t_k) - X(t_{k-1}) with X(t_{k-1}), k = 1..len(times)-1
    increment_cov: np.ndarray
    increment_cov_se: np.ndarray

    def mean_zero(self, z: float = 4.0) -> bool:
        return bool(np.all(np.abs(self.mean) <= z * self.se))

    def increments_orthogonal(self, z: float = 4.0) -> bool:
        return bool(np.all(np.abs(self.increment_cov) <= z * self.increment_cov_se))


def martingale_diagnostic(
    spec: CtrwSpec, times: Sequence[float], replicates: int, stream: RngStream
) -> MartingaleReport:
    """Monte Carlo mean of X^n(t) and covariance of consecutive increments."""
    if spec.jump_law.mean != 0.0:
        raise PreconditionError("martingale diagnostic needs mean-zero jumps")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ShapeError("times must be a nonempty increasing sequence")
    ens = sample_ctrw_ensemble(spec, replicates, stream)
    x = np.column_stack([ens.values(t) for t in times])
    r = x.shape[0]
    mean = x.mean(axis=0)
    se = x.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros_like(mean)
    inc = np.diff(x, axis=1)
    prod = inc * (x[:, :-1] - x[:, :-1].mean(axis=0))
    cov = prod.mean(axis=0)
    cov_se = prod.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros_like(cov)
    return MartingaleReport(times, mean, se, cov, cov_se)
