from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctrwlab import (
    CtrwSpec,
    DomainError,
    IntegrandSpec,
    JumpLaw,
    JumpPath,
    ParameterDomainError,
    build_ctrw,
    integrate,
    integrate_ensemble,
    integration_by_parts_check,
    quadratic_variation,
    quadratic_variation_ensemble,
    sample_ctrw_ensemble,
    stochastic_exponential,
    stochastic_exponential_ensemble,
)

X_ID = IntegrandSpec.path_itself()


@st.composite
def paths(draw, max_jumps=25, lo=-3.0, hi=3.0):
    k = draw(st.integers(0, max_jumps))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))
    j = draw(st.lists(st.floats(lo, hi), min_size=k, max_size=k))
    return build_ctrw(w, j, float(max(sum(w), 1.0)))


class TestIntegrate:
    def test_constant_integrand_gives_path(self):
        p = build_ctrw([0.2, 0.3, 0.4], [1.0, -0.5, 2.0], 1.0)
        for t in (0.0, 0.2, 0.6, 1.0):
            assert integrate(IntegrandSpec.constant(1.0), p, t) == pytest.approx(p.value(t))

    def test_time_integrand(self):
        p = JumpPath([0.5, 1.0], [1.0, -2.0], 2.0)
        H = IntegrandSpec.deterministic(lambda s: s)
        assert integrate(H, p, 1.2) == pytest.approx(-1.5)

    def test_path_integrand_uses_left_limits(self):
        p = JumpPath([0.5, 1.0], [1.0, 1.0], 2.0)
        assert integrate(X_ID, p, 1.5) == 1.0

    def test_functional_integrand(self):
        p = JumpPath([0.5, 1.0, 1.5], [1.0, 2.0, -1.0], 2.0)
        # running maximum of the path before each jump
        H = IntegrandSpec.functional(lambda q, s: max(0.0, np.max(q.partial_sums)))
        assert integrate(H, p, 2.0) == pytest.approx(0 * 1 + 1 * 2 + 3 * -1)

    def test_domain(self):
        p = JumpPath([0.5], [1.0], 1.0)
        with pytest.raises(DomainError):
            integrate(X_ID, p, 1.5)
        with pytest.raises(ParameterDomainError):
            IntegrandSpec("bogus")

    @given(paths(), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, p, a, b):
        f1 = IntegrandSpec.deterministic(lambda s: np.sin(s))
        h = lambda s: a * np.sin(s) + b * s**2  # noqa: E731
        lhs = integrate(IntegrandSpec.deterministic(h), p, p.horizon)
        rhs = a * integrate(f1, p, p.horizon) + b * integrate(IntegrandSpec.deterministic(lambda s: s**2), p, p.horizon)
        scale = 1.0 + np.sum(np.abs(p.jump_sizes)) * (abs(a) + abs(b) * p.horizon**2)
        assert abs(lhs - rhs) <= 1e-12 * scale

    @given(paths(), st.floats(0, 1), st.floats(0, 1))
    def test_interval_additivity(self, p, u, v):
        s, t = sorted((u * p.horizon, v * p.horizon))
        whole = integrate(X_ID, p, t)
        part = integrate(X_ID, p, s)
        mask = (p.jump_times > s) & (p.jump_times <= t)
        rest = np.sum(p.left_values[mask] * p.jump_sizes[mask])
        assert whole == pytest.approx(part + rest, abs=1e-9)

    def test_exact_rational_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            k = rng.integers(1, 30)
            num = rng.integers(-50, 50, k)
            jumps = [Fraction(int(a), 8) for a in num]
            p = build_ctrw(np.ones(k), [float(x) for x in jumps], float(k))
            exact = Fraction(0)
            run = Fraction(0)
            for x in jumps:
                exact += run * x
                run += x
            assert integrate(X_ID, p, float(k)) == float(exact)
            assert integration_by_parts_check(p, float(k)) == 0.0


class TestQuadraticVariation:
    def test_sum_of_squares(self):
        p = build_ctrw([0.1, 0.1], [1.0, -2.0], 1.0)
        assert quadratic_variation(p, 1.0) == 5.0
        assert quadratic_variation(build_ctrw([], [], 1.0), 1.0) == 0.0

    @given(paths())
    def test_monotone(self, p):
        grid = np.linspace(0, p.horizon, 17)
        qv = [quadratic_variation(p, t) for t in grid]
        assert all(b >= a for a, b in zip(qv, qv[1:]))

    def test_rademacher_counts(self, stream):
        spec = CtrwSpec.subdiffusive(0.5, 400, jump_law=JumpLaw("rademacher"))
        ens = sample_ctrw_ensemble(spec, 500, stream)
        for t in (0.25, 1.0):
            np.testing.assert_allclose(quadratic_variation_ensemble(ens, t), ens.counts(t) / 20.0, rtol=1e-13)


class TestStochasticExponential:
    def test_examples(self):
        assert stochastic_exponential(build_ctrw([], [], 1.0), 1.0) == 1.0
        assert stochastic_exponential(JumpPath([0.5], [1.0], 1.0), 1.0) == pytest.approx(2.0)
        p = JumpPath([0.3, 0.6], [1.0, -1.0], 1.0)
        assert stochastic_exponential(p, 0.5) == pytest.approx(2.0)
        assert stochastic_exponential(p, 0.6) == 0.0
        assert stochastic_exponential(p, 1.0) == 0.0

    def test_signed_product(self):
        p = JumpPath([0.1, 0.2, 0.3], [-3.0, 0.5, -2.5], 1.0)
        assert stochastic_exponential(p, 1.0) == pytest.approx(-2.0 * 1.5 * -1.5)
        assert stochastic_exponential(p, 0.25) == pytest.approx(-3.0)

    @given(paths(lo=-0.9, hi=2.0))
    def test_equals_product(self, p):
        want = np.prod(1.0 + p.jump_sizes)
        got = stochastic_exponential(p, p.horizon)
        assert abs(got - want) <= 1e-10 * abs(want) + 1e-300

    def test_long_path_no_overflow(self):
        # 2^1500 overflows a running product; the log-space form recovers exactly 1
        k = 1500
        p = build_ctrw(np.full(2 * k, 1e-4), np.r_[np.full(k, 1.0), np.full(k, -0.5)], 1.0)
        with np.errstate(over="ignore"):
            assert not np.isfinite(np.cumprod(1.0 + p.jump_sizes)[k])
        assert stochastic_exponential(p, 1.0) == pytest.approx(1.0, rel=1e-10)

    def test_ensemble_matches_single(self, stream):
        spec = CtrwSpec.subdiffusive(0.5, 100, jump_law=JumpLaw("rademacher"))
        ens = sample_ctrw_ensemble(spec, 200, stream)
        single = [stochastic_exponential(p, 1.0) for p in ens]
        np.testing.assert_allclose(stochastic_exponential_ensemble(ens, 1.0), single, rtol=1e-14)


class TestIntegrationByParts:
    def test_deterministic(self):
        p = build_ctrw([1, 1, 1], [1.0, -2.0, 3.0], 3.0)
        assert abs(integration_by_parts_check(p, 3.0)) < 1e-14
        assert integration_by_parts_check(build_ctrw([], [], 1.0), 1.0) == 0.0

    @given(paths(max_jumps=60, lo=-1e3, hi=1e3))
    def test_residual_bound(self, p):
        x = p.value(p.horizon)
        assert abs(integration_by_parts_check(p, p.horizon)) <= 1e-10 * (1 + x * x + quadratic_variation(p, p.horizon))

    def test_random_subdiffusive_paths(self, stream):
        ens = sample_ctrw_ensemble(CtrwSpec.subdiffusive(0.5, 1000), 1000, stream)
        x = ens.values(1.0)
        res = x**2 - 2 * integrate_ensemble(X_ID, ens, 1.0) - quadratic_variation_ensemble(ens, 1.0)
        assert np.max(np.abs(res) / (1 + x**2)) < 1e-10
