"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict (echoed in the terminal
summary) before asserting, so a failing criterion still reports its numbers.
Run directly with ``python tests/test_acceptance.py`` to get just the lines.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from conftest import ACCEPTANCE_LINES
from ctrwlab import (
    CtrwSpec,
    IntegrandSpec,
    JumpLaw,
    RngStream,
    StableParams,
    caputo_derivative,
    check_counting_bound,
    integrate_ensemble,
    ks_distance,
    msd_curve,
    quadratic_variation_ensemble,
    run_exponential_experiment,
    run_germano_experiment,
    run_theorem2_experiment,
    sample_ctrw_ensemble,
    sample_one_sided_stable,
    sample_stable,
    SdeCoeffs,
    stochastic_exponential_ensemble,
    verify_fractional_moment_equation,
)
from ctrwlab import cli
from ctrwlab.paths import JumpPath
from oracles import levy_half_cdf

SEED = 20240917


def verdict(k, title, checks, started):
    ok = all(v for v, _ in checks.values())
    detail = "; ".join(f"{name}={'ok' if v else 'FAIL'} ({info})" for name, (v, info) in checks.items())
    line = f"criterion {k} [{'PASS' if ok else 'FAIL'}] {title}: {detail} [{time.time() - started:.1f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


FAMILIES = {
    "stable_a2": CtrwSpec.stable(2.0, 100),
    "stable_a1.5": CtrwSpec.stable(1.5, 100),
    "subdiffusive": CtrwSpec.subdiffusive(0.5, 1000, jump_law=JumpLaw("rademacher")),
    "compound_poisson": CtrwSpec.compound_poisson(100),
}


def test_criterion_1_exact_identities():
    t0 = time.time()
    checks = {}
    grid = np.linspace(0.0, 1.0, 100)
    worst_value = worst_inv = worst_ibp = worst_exp = 0.0
    for i, (name, spec) in enumerate(FAMILIES.items()):
        ens = sample_ctrw_ensemble(spec, 1000, RngStream(SEED, i))
        # (a) X(t) = S(N(t)) and {N(t) >= n} <=> {T(n) <= t} on every path
        for p in ens:
            s = np.concatenate([[0.0], np.cumsum(p.jump_sizes)])
            n_t = p.count(grid)
            worst_value = max(worst_value, float(np.max(np.abs(p.value(grid) - s[n_t]) / (1 + np.abs(s[n_t])))))
            ns = np.arange(1, len(p) + 1)
            inv = (n_t[:, None] >= ns[None, :]) == (p.jump_times[None, :] <= grid[:, None])
            worst_inv = max(worst_inv, float(np.count_nonzero(~inv)))
        # (b) integration by parts, (c) product formula
        x = ens.values(1.0)
        qv = quadratic_variation_ensemble(ens, 1.0)
        ibp = x**2 - 2 * integrate_ensemble(IntegrandSpec.path_itself(), ens, 1.0) - qv
        worst_ibp = max(worst_ibp, float(np.max(np.abs(ibp) / (1 + x**2 + qv))))
        factors = np.where(ens.jump_times <= 1.0, 1.0 + ens.jump_sizes, 1.0)
        prod = np.prod(factors, axis=1)
        se = stochastic_exponential_ensemble(ens, 1.0)
        nz = prod != 0
        worst_exp = max(worst_exp, float(np.max(np.abs(se[nz] - prod[nz]) / np.abs(prod[nz]))))
        worst_exp = max(worst_exp, float(np.max(np.abs(se[~nz]), initial=0.0)))
        # (d) [Z, Z]_t = N(nt)/n^beta for Rademacher jumps
        if name == "subdiffusive":
            d_err = float(np.max(np.abs(qv - ens.counts(1.0) / 1000**0.5)))
    checks["value_eq_partial_sum"] = (worst_value < 1e-12, f"max rel {worst_value:.1e}")
    checks["inversion"] = (worst_inv == 0, f"violations {worst_inv:.0f}")
    checks["integration_by_parts"] = (worst_ibp < 1e-10, f"max rel {worst_ibp:.1e}")
    checks["product_formula"] = (worst_exp < 1e-10, f"max rel {worst_exp:.1e}")
    checks["qv_counts"] = (d_err < 1e-12, f"max abs {d_err:.1e}")
    assert verdict(1, "exact pathwise identities", checks, t0)


def test_criterion_2_sampler_oracles():
    t0 = time.time()
    s = RngStream(SEED, 2)
    n = 100_000
    a2 = sample_stable(StableParams(2.0, 0.0, 1 / math.sqrt(2)), s.substream("a2"), n)
    ks_a2 = ks_distance(a2, norm.cdf)
    tau = sample_one_sided_stable(0.5, s.substream("half"), n)
    ks_half = ks_distance(tau, levy_half_cdf)
    four = sample_one_sided_stable(0.5, s.substream("sum"), 4 * n).reshape(n, 4).sum(axis=1) / 16.0
    ks_strict = ks_distance(four, np.asarray(tau))
    checks = {
        "alpha2_vs_normal": (ks_a2 < 0.01, f"KS {ks_a2:.4f} < 0.01"),
        "beta0.5_vs_erfc": (ks_half < 0.01, f"KS {ks_half:.4f} < 0.01"),
        "strict_stability_n4": (ks_strict < 0.015, f"KS {ks_strict:.4f} < 0.015"),
    }
    assert verdict(2, "sampler oracles", checks, t0)


def test_criterion_3_germano():
    t0 = time.time()
    r = run_germano_experiment([10, 100, 1000], 1.0, 10_000, RngStream.named(SEED, "germano"), tolerance=0.03)
    ks = [row["ks"] for row in r.per_n]
    last = r.per_n[-1]
    z = abs(last["count_mean"] - 1.0) / last["count_se"]
    checks = {
        "ks_n1000": (ks[-1] < 0.03, f"KS {ks[-1]:.4f} < 0.03"),
        "ks_monotone": (r.checks["ks_monotone"], " > ".join(f"{v:.4f}" for v in ks)),
        "count_mean": (z <= 4, f"E[N(n)]/n = {last['count_mean']:.5f}, {z:.2f} SE from 1"),
    }
    assert verdict(3, "compound Poisson self-integral", checks, t0)


def test_criterion_4_subdiffusive_integral():
    t0 = time.time()
    r = run_theorem2_experiment(
        0.5, IntegrandSpec.constant(1.0), [10, 100, 1000], 1.0, 10_000,
        RngStream.named(SEED, "theorem2"), reference_replicates=10_000, tolerance=0.04,
    )
    ks = [row["ks"] for row in r.per_n]
    checks = {
        "ks_n1000": (ks[-1] < 0.04, f"two-sample KS {ks[-1]:.4f} < 0.04"),
        "trend": (r.checks["ks_trend"], " > ".join(f"{v:.4f}" for v in ks)),
    }
    assert verdict(4, "integral against subdiffusive CTRW vs B(E_1)", checks, t0)


def test_criterion_5_counting_bound():
    t0 = time.time()
    r = check_counting_bound(0.5, 1.0, [10, 100, 1000], 100_000, RngStream.named(SEED, "counting_bound"))
    est = ", ".join(f"{row['mean']:.4f}+-{row['se']:.4f}" for row in r.per_n)
    ratio = r.per_n[-1]["t_ratio"]
    checks = {
        "within_3se": (r.checks["within_3se_of_common_constant"],
                       f"{est}; common {r.extras['common_constant']:.4f}"),
        "t_scaling": (r.checks["t_scaling"], f"ratio {ratio:.4f} within 5% of 2"),
    }
    assert verdict(5, "bounded scaled counting mean", checks, t0)


def test_criterion_6_stochastic_exponential():
    t0 = time.time()
    r = run_exponential_experiment(0.5, [100, 1000], 1.0, 10_000, RngStream.named(SEED, "exponential"), tolerance=0.04)
    ks = r.per_n[-1]["ks"]
    checks = {"ks_n1000": (ks < 0.04, f"two-sample KS {ks:.4f} < 0.04")}
    assert verdict(6, "stochastic exponential vs exp{B(E_1) - E_1/2}", checks, t0)


def test_criterion_7_fractional_diffusion():
    t0 = time.time()
    checks = {}
    times = 2.0 ** np.arange(-4, 5)
    for beta in (0.5, 0.8):
        c = msd_curve(SdeCoeffs(0.0, 1.0, 0.0, beta), times, 100_000, RngStream.named(SEED, f"msd{beta}"))
        checks[f"msd_slope_beta{beta}"] = (abs(c.slope - beta) < 0.05, f"slope {c.slope:.4f}")
    r = verify_fractional_moment_equation(0.5, [0.5, 1.0, 2.0], 100_000, RngStream.named(SEED, "fracdiff_pde"))
    res = [row["residual"] for row in r.per_n]
    checks["caputo_residual"] = (max(res) < 0.1, ", ".join(f"{v:.4f}" for v in res))
    dt = 1e-3
    t = np.arange(1001) * dt
    errs = []
    for p in (1, 2):
        want = math.gamma(p + 1) / math.gamma(p + 1 - 0.5)
        errs.append(abs(caputo_derivative(t**p, 0.5, 1.0, dt) / want - 1))
    checks["caputo_power_rule"] = (max(errs) < 1e-2, f"rel errors {errs[0]:.1e}, {errs[1]:.1e}")
    assert verdict(7, "fractional diffusion", checks, t0)


DETERMINISM_CONFIGS = {
    "theorem1": {"replicates": 3000, "n_values": [8, 64]},
    "theorem2": {"replicates": 3000, "n_values": [10, 100]},
    "germano": {"replicates": 3000, "n_values": [10, 100]},
    "counting_bound": {"replicates": 3000, "n_values": [10, 100]},
    "exponential": {"replicates": 3000, "n_values": [20, 100]},
    "fracdiff_msd": {"replicates": 3000, "times": [0.25, 0.5, 1.0, 2.0]},
    "fracdiff_pde": {"replicates": 3000, "times": [0.5, 1.0]},
}


def test_criterion_8_determinism(tmp_path):
    t0 = time.time()
    checks = {}
    for name, fields in DETERMINISM_CONFIGS.items():
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps({"experiment": name, "seed": 42, **fields}))
        blobs = []
        for k, threads in enumerate(("1", "4", "1")):
            out = tmp_path / f"{name}-{k}"
            status = cli.main(["run", "--config", str(cfg), "--out", str(out), "--threads", threads])
            assert status in (0, 1)
            blobs.append(sorted((f.name, f.read_bytes()) for f in out.iterdir()))
        same = blobs[0] == blobs[1] == blobs[2]
        checks[name] = (same, f"{len(blobs[0])} files")
    assert verdict(8, "byte-identical reruns across thread counts", checks, t0)


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]:
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
