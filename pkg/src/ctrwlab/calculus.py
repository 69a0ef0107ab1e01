"""Pathwise stochastic calculus for pure-jump step paths.

For a step integrator X with jumps xi_i at T_i the stochastic integral is a
finite sum,

    int_0^t H(s-) dX(s) = sum_{i <= N(t)} H(T_i-) xi_i,

the quadratic variation is [X, X]_t = sum_{T_i <= t} xi_i^2 and the
stochastic exponential (solution of Z = 1 + int Z(s-) dX(s)) is the product
of (1 + xi_i).  Every routine works on a single :class:`JumpPath` and has an
``*_ensemble`` twin that evaluates all rows of a :class:`CtrwEnsemble` at
once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._summation import compensated_sum
from .errors import DomainError, ParameterDomainError
from .paths import CtrwEnsemble, JumpPath

__all__ = [
    "IntegrandSpec",
    "integrate",
    "quadratic_variation",
    "stochastic_exponential",
    "integration_by_parts_check",
    "integrate_ensemble",
    "quadratic_variation_ensemble",
    "stochastic_exponential_ensemble",
]


@dataclass(frozen=True)
class IntegrandSpec:
    """Integrand H for int H(s-) dX(s).

    * ``deterministic``: ``func(times) -> values``, vectorised over numpy
      arrays and evaluated at the jump epochs (H must be continuous there).
    * ``path``: H = X itself, so H(T_i-) is the value just before jump i.
    * ``functional``: ``func(path, s) -> float``; H(T_i-) is computed as
      ``func(path_before_i, T_i)`` where ``path_before_i`` keeps only the
      jumps preceding i.  Works for any path type with ``.value``.
    """

    kind: str
    func: Optional[Callable] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("deterministic", "path", "functional"):
            raise ParameterDomainError(f"unknown integrand kind {self.kind!r}")
        if self.kind != "path" and not callable(self.func):
            raise ParameterDomainError(f"{self.kind} integrand needs a callable")

    @classmethod
    def deterministic(cls, f, label="f"):
        return cls("deterministic", f, label)

    @classmethod
    def constant(cls, c: float = 1.0):
        c = float(c)
        return cls("deterministic", lambda s: np.full(np.shape(s), c), f"const({c!r})")

    @classmethod
    def path_itself(cls):
        return cls("path", None, "path")

    @classmethod
    def functional(cls, g, label="g"):
        return cls("functional", g, label)

    def _deterministic_values(self, times: np.ndarray) -> np.ndarray:
        v = np.asarray(self.func(times), dtype=float)
        return np.broadcast_to(v, np.shape(times)) if v.shape != np.shape(times) else v

    def at_jumps(self, path: JumpPath) -> np.ndarray:
        """H(T_i-) for every jump of ``path``."""
        if self.kind == "path":
            return np.asarray(path.left_values)
        if self.kind == "deterministic":
            return self._deterministic_values(path.jump_times)
        return np.array(
            [float(self.func(path.truncated(i), path.jump_times[i])) for i in range(len(path))]
        )

    def at_jumps_ensemble(self, ens: CtrwEnsemble) -> np.ndarray:
        """(R, L) array of H(T_i-); padded slots hold 0."""
        finite = np.isfinite(ens.jump_times)
        if self.kind == "path":
            h = np.array(ens.prefix[:, :-1])
        elif self.kind == "deterministic":
            safe = np.where(finite, ens.jump_times, 0.0)
            h = np.array(self._deterministic_values(safe))
        else:
            h = np.zeros(ens.jump_times.shape)
            for r in range(len(ens)):
                k = int(ens.lengths[r])
                h[r, :k] = self.at_jumps(ens.path(r))
        h[~finite] = 0.0
        return h


def _check_t(t: float, horizon: float) -> float:
    if not (0.0 <= t <= horizon):
        raise DomainError(f"time {t} outside [0, {horizon}]")
    return float(t)


def _masked(times: np.ndarray, sizes: np.ndarray, t: float) -> np.ndarray:
    return np.where(times <= t, sizes, 0.0)


def integrate(H: IntegrandSpec, X: JumpPath, t: float) -> float:
    """sum_{i <= N(t)} H(T_i-) xi_i, accumulated in jump order."""
    t = _check_t(t, X.horizon)
    k = X.count(t)
    h = H.at_jumps(X.truncated(k)) if H.kind == "functional" else H.at_jumps(X)[:k]
    return float(compensated_sum(h * X.jump_sizes[:k]))


def quadratic_variation(X: JumpPath, t: float) -> float:
    """[X, X]_t = sum of squared jumps up to and including t."""
    t = _check_t(t, X.horizon)
    k = X.count(t)
    return float(compensated_sum(X.jump_sizes[:k] ** 2))


def _stochastic_exponential_rows(
    times: np.ndarray, sizes: np.ndarray, value: np.ndarray, t: float
) -> np.ndarray:
    xi = _masked(times, sizes, t)
    factor = 1.0 + xi
    nonpos = factor <= 0.0
    out = np.empty(xi.shape[0])
    pos_rows = ~nonpos.any(axis=1)
    if pos_rows.any():
        x = xi[pos_rows]
        qv = compensated_sum(x * x)
        corr = compensated_sum(np.log1p(x) - x + 0.5 * x * x)
        with np.errstate(over="ignore"):
            out[pos_rows] = np.exp(value[pos_rows] - 0.5 * qv + corr)
    bad = np.nonzero(~pos_rows)[0]
    for r in bad:
        f = factor[r]
        if np.any(f == 0.0):
            out[r] = 0.0
        else:
            sign = -1.0 if np.count_nonzero(f < 0.0) % 2 else 1.0
            out[r] = sign * np.exp(compensated_sum(np.log(np.abs(f))))
    return out


def stochastic_exponential(X: JumpPath, t: float) -> float:
    """Doleans-Dade exponential of X at t.

    Evaluated from exp{X_t - [X,X]_t / 2} prod (1 + dX) exp{-dX + dX^2 / 2}
    in log space; a factor 1 + dX <= 0 switches to the signed product (a zero
    factor absorbs the path at 0).
    """
    t = _check_t(t, X.horizon)
    out = _stochastic_exponential_rows(
        X.jump_times[None, :], X.jump_sizes[None, :], np.array([X.value(t)]), t
    )
    return float(out[0])


def integration_by_parts_check(X: JumpPath, t: float) -> float:
    """Residual X(t)^2 - 2 int X(s-) dX(s) - [X, X]_t (zero in exact arithmetic)."""
    x = X.value(t)
    return x * x - 2.0 * integrate(IntegrandSpec.path_itself(), X, t) - quadratic_variation(X, t)


def integrate_ensemble(H: IntegrandSpec, ens: CtrwEnsemble, t: float) -> np.ndarray:
    t = _check_t(t, ens.horizon)
    h = H.at_jumps_ensemble(ens)
    return compensated_sum(h * _masked(ens.jump_times, ens.jump_sizes, t))


def quadratic_variation_ensemble(ens: CtrwEnsemble, t: float) -> np.ndarray:
    t = _check_t(t, ens.horizon)
    xi = _masked(ens.jump_times, ens.jump_sizes, t)
    return compensated_sum(xi * xi)


def stochastic_exponential_ensemble(ens: CtrwEnsemble, t: float) -> np.ndarray:
    t = _check_t(t, ens.horizon)
    return _stochastic_exponential_rows(ens.jump_times, ens.jump_sizes, ens.values(t), t)
