"""Monte Carlo convergence experiments.

Each experiment draws an ensemble of scaled CTRWs for several scale indices
n, evaluates a functional at a fixed time t and measures the
Kolmogorov-Smirnov distance between its empirical law and the law of the
corresponding functional of the limit process.  Weak convergence shows up as
KS distances that shrink with n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kolmogi

from .calculus import (
    IntegrandSpec,
    integrate_ensemble,
    quadratic_variation_ensemble,
    stochastic_exponential_ensemble,
)
from .errors import DomainError, ParameterDomainError, PreconditionError
from .limits import (
    bm_self_integral_cdf,
    grid_integral,
    stable_levy_ensemble,
    time_changed_bm_ensemble,
)
from .paths import CtrwSpec, JumpLaw, sample_ctrw_ensemble
from .stable_rng import RngStream

__all__ = [
    "EmpiricalDistribution",
    "ExperimentReport",
    "ks_distance",
    "ks_tolerance",
    "run_theorem1_experiment",
    "run_theorem2_experiment",
    "run_germano_experiment",
    "check_counting_bound",
    "run_exponential_experiment",
]


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted Monte Carlo sample with ECDF(x) = #{samples <= x} / m."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).reshape(-1))
        if np.any(np.isnan(s)):
            raise DomainError("samples contain NaN")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size


def _as_empirical(x) -> EmpiricalDistribution:
    return x if isinstance(x, EmpiricalDistribution) else EmpiricalDistribution(x)


def ks_distance(
    emp, reference: Union[Callable, "EmpiricalDistribution", np.ndarray]
) -> float:
    """Sup distance between an ECDF and a CDF or a second ECDF.

    Against a CDF the ECDF is compared on both sides of each of its jumps;
    between two samples the distance is taken over the pooled points.
    """
    emp = _as_empirical(emp)
    m = len(emp)
    if m == 0:
        raise DomainError("empty sample")
    if callable(reference) and not isinstance(reference, EmpiricalDistribution):
        u, counts = np.unique(emp.samples, return_counts=True)
        hi = np.cumsum(counts) / m
        lo = hi - counts / m
        f = np.asarray(reference(u), dtype=float)
        return float(max(np.max(hi - f), np.max(f - lo)))
    ref = _as_empirical(reference)
    if len(ref) == 0:
        raise DomainError("empty reference sample")
    z = np.concatenate([emp.samples, ref.samples])
    return float(np.max(np.abs(emp.cdf(z) - ref.cdf(z))))


def ks_tolerance(m: int, m_ref: Optional[int] = None, level: float = 0.01, slack: float = 0.5) -> float:
    """KS critical value at ``level`` inflated by ``slack`` (one or two sample)."""
    eff = m if m_ref is None else m * m_ref / (m + m_ref)
    return float(kolmogi(level) / math.sqrt(eff) * (1.0 + slack))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass
class ExperimentReport:
    """Structured result of one experiment; ``to_json`` is deterministic."""

    experiment: str
    params: Dict
    seed: int
    per_n: List[Dict] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    extras: Dict = field(default_factory=dict)
    # raw samples keyed by label; written as CSV on request, never serialised
    samples: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> Dict:
        return _clean(
            {
                "experiment": self.experiment,
                "params": self.params,
                "seed": self.seed,
                "per_n": self.per_n,
                "checks": self.checks,
                "extras": self.extras,
                "pass": self.passed,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _summary(x: np.ndarray) -> Dict:
    m = x.size
    var = float(np.var(x, ddof=1)) if m > 1 else 0.0
    return {"mean": float(np.mean(x)), "variance": var, "se": math.sqrt(var / m)}


def _check_common(t, n_values, replicates):
    if not (t > 0.0) or not math.isfinite(t):
        raise ParameterDomainError(f"t must be positive, got {t}")
    if not isinstance(replicates, (int, np.integer)) or replicates < 1:
        raise ParameterDomainError("replicates must be a positive integer")
    ns = list(n_values)
    if not ns or any(not isinstance(n, (int, np.integer)) or n < 1 for n in ns):
        raise ParameterDomainError("n_values must be positive integers")
    if len(set(ns)) != len(ns):
        raise ParameterDomainError("n_values must be distinct")
    return sorted(int(n) for n in ns)


def _trend(per_n, key="ks") -> bool:
    # with a single n there is no trend to assert
    if len(per_n) < 2:
        return True
    return per_n[-1][key] < per_n[0][key]


def _integrand_label(H: IntegrandSpec) -> str:
    return H.kind if H.kind == "path" else f"{H.kind}:{H.label}"


def run_theorem1_experiment(
    alpha: float,
    H: IntegrandSpec,
    n_values: Sequence[int],
    t: float,
    replicates: int,
    stream: RngStream,
    *,
    jump_law: Optional[JumpLaw] = None,
    reference_replicates: Optional[int] = None,
    reference_steps: int = 2048,
    tolerance: Optional[float] = None,
) -> ExperimentReport:
    """int H^n(s-) dX^n(s) for X^n(t) = S(nt)/n^(1/alpha) against int H(s-) dA(s).

    Jumps default to Rademacher (alpha = 2) or calibrated symmetric Pareto
    (alpha < 2), so the limit A is standard Brownian motion or
    S_alpha(1, 0, 0) Levy motion.  For alpha = 2 and H = X the reference
    law (B_t^2 - t)/2 is analytic; otherwise it is a left-point grid
    integral over ``reference_steps`` steps.
    """
    ns = _check_common(t, n_values, replicates)
    if not (1.0 < alpha <= 2.0):
        raise ParameterDomainError(f"alpha must lie in (1, 2], got {alpha}")
    spec0 = CtrwSpec.stable(alpha, ns[0], t, jump_law)
    if spec0.jump_law.mean != 0.0:
        raise PreconditionError("jumps must have mean zero")
    ref_m = reference_replicates or replicates

    analytic = alpha == 2.0 and H.kind == "path"
    if analytic:
        reference = lambda y: bm_self_integral_cdf(y, t)  # noqa: E731
        tol = ks_tolerance(replicates) if tolerance is None else tolerance
    else:
        grid = np.linspace(0.0, t, reference_steps + 1)
        scale = 1.0 / math.sqrt(2.0) if alpha == 2.0 else 1.0
        a = stable_levy_ensemble(alpha, grid, ref_m, stream.substream("reference"), scale=scale)
        reference = EmpiricalDistribution(grid_integral(H, grid, a, t))
        tol = ks_tolerance(replicates, ref_m) if tolerance is None else tolerance

    report = ExperimentReport(
        "theorem1",
        {
            "alpha": alpha, "integrand": _integrand_label(H), "n_values": ns, "t": t,
            "replicates": replicates, "jump_law": spec0.jump_law.kind,
            "stream_id": stream.stream_id,
        },
        stream.seed,
    )
    for n in ns:
        spec = CtrwSpec.stable(alpha, n, t, spec0.jump_law)
        ens = sample_ctrw_ensemble(spec, replicates, stream.substream("ctrw", n))
        vals = integrate_ensemble(H, ens, t)
        report.per_n.append({"n": n, "ks": ks_distance(vals, reference), **_summary(vals)})
        report.samples[f"n{n}"] = vals
    last = report.per_n[-1]
    report.checks["ks_trend"] = _trend(report.per_n)
    report.checks["ks_within_tolerance"] = last["ks"] < tol
    if analytic:
        report.checks["mean_zero"] = abs(last["mean"]) <= 4.0 * last["se"]
    report.extras = {
        "reference": "analytic_chi2" if analytic else "grid_simulation",
        "reference_replicates": None if analytic else ref_m,
        "reference_steps": None if analytic else reference_steps,
        "tolerance": tol,
        "jump_calibration": spec0.jump_law.calibration,
    }
    return report


def run_theorem2_experiment(
    beta: float,
    H: IntegrandSpec,
    n_values: Sequence[int],
    t: float,
    replicates: int,
    stream: RngStream,
    *,
    jump_law: Optional[JumpLaw] = None,
    reference_replicates: Optional[int] = None,
    reference_steps: int = 256,
    op_step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> ExperimentReport:
    """int H^n(s-) dX^n(s) for X^n(t) = sum_{i <= N(nt)} xi_i / (c n^(beta/2)) against int H(s-) dB(E_s).

    Jumps default to standard normal.  The reference is simulated by
    subordination; for H = X it uses the pathwise identity
    int B(E) dB(E) = (B(E_t)^2 - E_t) / 2, otherwise a left-point grid sum.
    The scaled counts N(nt)/n^beta are compared with E(t) as well.
    """
    ns = _check_common(t, n_values, replicates)
    if not (0.0 < beta < 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")
    spec0 = CtrwSpec.subdiffusive(beta, ns[0], t, jump_law)
    if spec0.jump_law.mean != 0.0:
        raise PreconditionError("jumps must have mean zero")
    ref_m = reference_replicates or replicates
    grid = np.linspace(0.0, t, reference_steps + 1)
    e, be = time_changed_bm_ensemble(beta, grid, ref_m, stream.substream("reference"), op_step)
    if H.kind == "path":
        ref_vals = (be[:, -1] ** 2 - e[:, -1]) / 2.0
    else:
        ref_vals = grid_integral(H, grid, be, t)
    reference = EmpiricalDistribution(ref_vals)
    e_ref = EmpiricalDistribution(e[:, -1])
    tol = ks_tolerance(replicates, ref_m) if tolerance is None else tolerance

    report = ExperimentReport(
        "theorem2",
        {
            "beta": beta, "integrand": _integrand_label(H), "n_values": ns, "t": t,
            "replicates": replicates, "jump_law": spec0.jump_law.kind,
            "stream_id": stream.stream_id,
        },
        stream.seed,
    )
    for n in ns:
        spec = CtrwSpec.subdiffusive(beta, n, t, spec0.jump_law)
        ens = sample_ctrw_ensemble(spec, replicates, stream.substream("ctrw", n))
        vals = integrate_ensemble(H, ens, t)
        scaled_counts = ens.counts(t) / n**beta
        report.per_n.append(
            {
                "n": n,
                "ks": ks_distance(vals, reference),
                "ks_counting": ks_distance(scaled_counts, e_ref),
                **_summary(vals),
            }
        )
        report.samples[f"n{n}"] = vals
    report.checks["ks_trend"] = _trend(report.per_n)
    report.checks["ks_within_tolerance"] = report.per_n[-1]["ks"] < tol
    report.checks["counting_trend"] = _trend(report.per_n, "ks_counting")
    report.extras = {
        "reference": "subordinated_closed_form" if H.kind == "path" else "grid_simulation",
        "reference_replicates": ref_m,
        "reference_mean_E": float(np.mean(e[:, -1])),
        "tolerance": tol,
    }
    return report


def run_germano_experiment(
    n_values: Sequence[int],
    t: float,
    replicates: int,
    stream: RngStream,
    *,
    tolerance: Optional[float] = None,
) -> ExperimentReport:
    """Self-integral of the scaled compound Poisson walk against (B_t^2 - t)/2.

    Jumps are standard normal, waits exponential(1) and
    X^n(t) = sum_{i <= N(nt)} xi_i / sqrt(n).
    """
    ns = _check_common(t, n_values, replicates)
    tol = ks_tolerance(replicates) if tolerance is None else tolerance
    H = IntegrandSpec.path_itself()
    report = ExperimentReport(
        "germano",
        {"n_values": ns, "t": t, "replicates": replicates, "stream_id": stream.stream_id},
        stream.seed,
    )
    count_ok = True
    for n in ns:
        spec = CtrwSpec.compound_poisson(n, t, rate=1.0, jump_law=JumpLaw("normal"))
        ens = sample_ctrw_ensemble(spec, replicates, stream.substream("ctrw", n))
        vals = integrate_ensemble(H, ens, t)
        c = _summary(ens.counts(t) / n)
        count_ok &= abs(c["mean"] - t) <= 4.0 * c["se"]
        report.per_n.append(
            {
                "n": n,
                "ks": ks_distance(vals, lambda y: bm_self_integral_cdf(y, t)),
                **_summary(vals),
                "count_mean": c["mean"],
                "count_se": c["se"],
            }
        )
        report.samples[f"n{n}"] = vals
    ks = [r["ks"] for r in report.per_n]
    report.checks["ks_within_tolerance"] = ks[-1] < tol
    report.checks["ks_monotone"] = all(b < a for a, b in zip(ks, ks[1:]))
    report.checks["count_mean_equals_t"] = bool(count_ok)
    report.extras = {"tolerance": tol, "reference": "analytic_chi2"}
    return report


def check_counting_bound(
    beta: float,
    t: float,
    n_values: Sequence[int],
    replicates: int,
    stream: RngStream,
    *,
    t_scale: float = 4.0,
) -> ExperimentReport:
    """Monte Carlo E[N(nt)/n^beta] for strictly beta-stable waits.

    ``beta = 1`` switches to exponential(1) waits, for which the estimate
    must equal t.  Estimates at ``t * t_scale`` come from the same paths and
    give the t^beta scaling ratio.
    """
    ns = _check_common(t, n_values, replicates)
    if not (0.0 < beta <= 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1], got {beta}")
    if not t_scale > 1.0:
        raise ParameterDomainError("t_scale must exceed 1")
    poisson = beta == 1.0
    report = ExperimentReport(
        "counting_bound",
        {
            "beta": beta, "t": t, "t_scale": t_scale, "n_values": ns,
            "replicates": replicates, "stream_id": stream.stream_id,
        },
        stream.seed,
    )
    horizon = t * t_scale
    zero = JumpLaw("zero")
    for n in ns:
        if poisson:
            spec = CtrwSpec.compound_poisson(n, horizon, jump_law=zero)
        else:
            spec = CtrwSpec.subdiffusive(beta, n, horizon, jump_law=zero)
        ens = sample_ctrw_ensemble(spec, replicates, stream.substream("ctrw", n))
        a = _summary(ens.counts(t) / n**beta)
        b = _summary(ens.counts(horizon) / n**beta)
        report.per_n.append(
            {
                "n": n,
                "mean": a["mean"],
                "se": a["se"],
                "variance": a["variance"],
                "mean_scaled_t": b["mean"],
                "se_scaled_t": b["se"],
                "t_ratio": b["mean"] / a["mean"] if a["mean"] > 0 else None,
            }
        )
    est = np.array([r["mean"] for r in report.per_n])
    se = np.array([r["se"] for r in report.per_n])
    w = 1.0 / np.maximum(se, 1e-300) ** 2
    common = float(np.sum(w * est) / np.sum(w))
    rel_se = float(np.max(se / est)) if np.all(est > 0) else math.inf
    target_ratio = t_scale**beta
    ratio = report.per_n[-1]["t_ratio"]
    report.checks["within_3se_of_common_constant"] = bool(np.all(np.abs(est - common) <= 3.0 * se))
    report.checks["bounded_no_growth"] = bool(est.max() <= est.min() * (1.0 + 6.0 * rel_se))
    report.checks["t_scaling"] = ratio is not None and abs(ratio / target_ratio - 1.0) <= 0.05
    if poisson:
        report.checks["poisson_mean_equals_t"] = bool(np.all(np.abs(est - t) <= 4.0 * se))
    report.extras = {
        "common_constant": common,
        "empirical_sup": float(est.max()),
        "empirical_M": float(est.max() / t**beta),
        "limit_mean": t**beta / float(gamma_fn(1.0 + beta)),
        "target_t_ratio": target_ratio,
    }
    return report


def run_exponential_experiment(
    beta: float,
    n_values: Sequence[int],
    t: float,
    replicates: int,
    stream: RngStream,
    *,
    reference_replicates: Optional[int] = None,
    op_step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> ExperimentReport:
    """Stochastic exponential of Z^n (Rademacher jumps / n^(beta/2)) against exp{B(E_t) - E_t/2}.

    Every n must exceed 2^(2/beta) so that all factors 1 + dZ^n are positive.
    Two exact identities are checked on every path: [Z^n, Z^n]_t = N(nt)/n^beta
    and the product formula against prod (1 + dZ^n).
    """
    ns = _check_common(t, n_values, replicates)
    if not (0.0 < beta < 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")
    threshold = 2.0 ** (2.0 / beta)
    if ns[0] <= threshold:
        raise PreconditionError(f"n must exceed 2^(2/beta) = {threshold:g}")
    ref_m = reference_replicates or replicates
    e, be = time_changed_bm_ensemble(
        beta, np.array([0.0, t]), ref_m, stream.substream("reference"), op_step
    )
    reference = EmpiricalDistribution(np.exp(be[:, -1] - e[:, -1] / 2.0))
    tol = ks_tolerance(replicates, ref_m) if tolerance is None else tolerance
    report = ExperimentReport(
        "exponential",
        {
            "beta": beta, "n_values": ns, "t": t, "replicates": replicates,
            "stream_id": stream.stream_id,
        },
        stream.seed,
    )
    qv_ok = prod_ok = True
    for n in ns:
        spec = CtrwSpec.subdiffusive(beta, n, t, JumpLaw("rademacher"))
        ens = sample_ctrw_ensemble(spec, replicates, stream.substream("ctrw", n))
        vals = stochastic_exponential_ensemble(ens, t)
        qv = quadratic_variation_ensemble(ens, t)
        scaled_counts = ens.counts(t) / n**beta
        qv_err = float(np.max(np.abs(qv - scaled_counts) / np.maximum(1.0, scaled_counts)))
        factors = np.where(ens.jump_times <= t, 1.0 + ens.jump_sizes, 1.0)
        prod = np.prod(factors, axis=1)
        prod_err = float(np.max(np.abs(vals - prod) / np.abs(prod)))
        qv_ok &= qv_err <= 1e-12
        prod_ok &= prod_err <= 1e-10
        report.per_n.append(
            {
                "n": n,
                "ks": ks_distance(vals, reference),
                **_summary(vals),
                "qv_identity_error": qv_err,
                "product_identity_error": prod_err,
            }
        )
        report.samples[f"n{n}"] = vals
    report.checks["ks_trend"] = _trend(report.per_n)
    report.checks["ks_within_tolerance"] = report.per_n[-1]["ks"] < tol
    report.checks["qv_identity"] = bool(qv_ok)
    report.checks["product_identity"] = bool(prod_ok)
    report.extras = {"tolerance": tol, "reference_replicates": ref_m}
    return report
