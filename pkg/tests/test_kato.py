import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavelab.errors import InvalidIndexRange, InvalidParams
from wavelab.ics import Gaussian
from wavelab.kato import (SampleSpec, a2_operator_ratio, a2_ratio, accretivity_lower_bound,
                          accretivity_pairs, accretivity_terms, apply_B, b_bound_ratio,
                          b_difference_ratio, b_ratio, commutator_estimate_ratio,
                          commutator_ratio, commutator_term, continuous_dependence,
                          f_lipschitz_ratio, product_estimate_ratio, product_ratio,
                          random_sobolev_field)
from wavelab.model import FluxVariant, f_nonlocal
from wavelab.spectral import Field, Grid, sobolev_norm
from wavelab.timestep import StepperConfig

FAST = SampleSpec(n_samples=40)


@pytest.fixture
def grid128():
    return Grid(2 * np.pi, 128)


class TestSampling:
    def test_spec_validation(self):
        for kw in ({"s": 1.5}, {"radius": 0.0}, {"n_samples": 1}, {"spectral_decay_margin": 0.5}):
            with pytest.raises(InvalidParams):
                SampleSpec(**kw)

    def test_deterministic(self, grid64):
        a = random_sobolev_field(grid64, FAST, 7)
        b = random_sobolev_field(grid64, FAST, 7)
        c = random_sobolev_field(grid64, FAST, 8)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**63 - 1), st.integers(0, 10**6), st.floats(1.6, 4.0),
           st.floats(1e-3, 1e3))
    def test_inside_ball(self, seed, index, s, radius):
        g = Grid(2 * np.pi, 64)
        u = random_sobolev_field(g, SampleSpec(s=s, radius=radius, seed=seed), index)
        assert sobolev_norm(u, s) <= radius * (1 + 1e-10)

    def test_spectral_decay_slope(self, grid256):
        spec = SampleSpec(s=2.0)
        power = np.zeros(256)
        for i in range(100):
            u = random_sobolev_field(grid256, spec, i)
            c = np.fft.fft(u.values) / 256
            power += np.abs(c) ** 2 / sobolev_norm(u, 2.0) ** 2
        xi = np.abs(grid256.wavenumbers)
        keep = (xi >= 1) & (xi < 127)
        slope = np.polyfit(np.log1p(xi[keep] ** 2), np.log(power[keep]), 1)[0]
        assert abs(slope - (-(2.0 + 0.6))) <= 0.5


class TestAccretivity:
    def test_zero_u_skew(self, grid64):
        rep = accretivity_lower_bound(Field(grid64, np.zeros(64)), n_tests=50, seed=3)
        assert abs(rep.min_quotient) <= 1e-12
        assert rep.identity_holds and rep.bound_holds

    def test_constant_u(self, grid64):
        rep = accretivity_lower_bound(Field(grid64, np.full(64, 0.4)), n_tests=50)
        assert abs(rep.min_quotient) <= 1e-12 and rep.bound_holds

    def test_sine(self, grid64):
        rep = accretivity_lower_bound(grid64.sample(np.sin), n_tests=100)
        assert rep.min_quotient >= -0.5 - 1e-8
        assert rep.identity_holds

    def test_identity_over_pairs(self, grid128):
        rep = accretivity_pairs(grid128, SampleSpec(), n_pairs=100)
        assert rep.max_identity_residual <= 1e-10
        assert rep.bound_holds

    def test_terms_single_mode(self, grid64):
        # u = sin x, w = cos x: -1/2 int cos x cos^2 x = 0, and <(1+u) w_x, w> = -int sin x^2 cos x = 0
        ip, ident = accretivity_terms(grid64.sample(np.sin), grid64.sample(np.cos))
        assert abs(ip) < 1e-13 and abs(ident) < 1e-13


class TestA2:
    def test_degenerate_skipped(self, grid64):
        u = grid64.sample(np.sin)
        assert a2_ratio(u, u, grid64.sample(np.cos), 2.0) is None

    @pytest.mark.parametrize("s", [1.6, 2.0, 3.0])
    @pytest.mark.parametrize("length", [2 * np.pi, 4 * np.pi])
    def test_single_mode_closed_form(self, s, length):
        g = Grid(length, 64)
        k = 2 * np.pi / length
        u = Field(g, np.full(64, 0.7))
        w = g.sample(lambda x: np.cos(k * x))
        expected = k / (np.sqrt(length) * (1 + k**2) ** (s / 2))
        assert a2_ratio(u, Field(g, np.zeros(64)), w, s) == pytest.approx(expected, rel=1e-12)

    def test_estimator_deterministic(self, grid64):
        assert a2_operator_ratio(FAST, grid64) == a2_operator_ratio(FAST, grid64)


def dense_B(u, w, s):
    """Build B(u) as an n x n matrix from DFT, diagonal multipliers and pointwise products."""
    n = u.grid.n
    F = np.fft.fft(np.eye(n), axis=0) / n
    Finv = np.linalg.inv(F)
    xi = u.grid.wavenumbers
    ik = 1j * xi
    ik[n // 2] = 0.0
    lam = (1 + xi**2) ** 0.5
    op = lambda sym: Finv @ np.diag(sym) @ F
    Mu = np.diag(u.values)
    D = op(ik)
    B = op(lam**s) @ Mu @ D @ op(lam**-s) - Mu @ D
    return (B @ w.values).real


class TestApplyB:
    def test_constant_u_vanishes(self, grid64):
        w = random_sobolev_field(grid64, FAST, 0)
        assert np.max(np.abs(apply_B(Field(grid64, np.full(64, 2.0)), w, 2.0).values)) < 1e-11

    def test_zero_w(self, grid64):
        out = apply_B(grid64.sample(np.sin), Field(grid64, np.zeros(64)), 2.0)
        assert np.all(out.values == 0)

    def test_dense_oracle_single_modes(self):
        g = Grid(2 * np.pi, 32)
        u, w = g.sample(np.sin), g.sample(lambda x: np.cos(2 * x))
        np.testing.assert_allclose(apply_B(u, w, 2.0).values, dense_B(u, w, 2.0), atol=1e-12)

    @pytest.mark.parametrize("s", [1.6, 2.0, 2.5])
    def test_dense_oracle_random(self, s):
        g = Grid(2 * np.pi, 32)
        u = random_sobolev_field(g, SampleSpec(s=s), 0)
        w = random_sobolev_field(g, SampleSpec(s=s), 1)
        np.testing.assert_allclose(apply_B(u, w, s).values, dense_B(u, w, s), atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_w(self, index, a, b):
        g = Grid(2 * np.pi, 64)
        u, w1, w2 = (random_sobolev_field(g, FAST, index + r) for r in range(3))
        lhs = apply_B(u, w1 * a + w2 * b, 2.0).values
        rhs = (apply_B(u, w1, 2.0) * a + apply_B(u, w2, 2.0) * b).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-11

    def test_b_ratio_constant_zero(self, grid64):
        assert b_ratio(Field(grid64, np.full(64, 0.3)), grid64.sample(np.cos), 2.0) < 1e-12

    @pytest.mark.parametrize("s", [1.6, 2.0])
    def test_difference_bound_reuses_constant(self, grid128, s):
        spec = SampleSpec(s=s, n_samples=100)
        bound = b_bound_ratio(spec, grid128)
        diff = b_difference_ratio(spec, grid128)
        assert bound.stable and diff.stable
        # 1.25 is the stability tolerance on an empirical max
        assert diff.max_ratio <= 1.25 * bound.max_ratio


class TestFLipschitz:
    def test_degenerate_skipped_and_labels(self, grid64, params):
        rep = f_lipschitz_ratio(FAST, grid64, params, FluxVariant.REDERIVED, 0)
        assert rep.label == "f_lipschitz_rederived_L2"
        assert rep.n_samples == FAST.n_samples
        assert "M" in rep.extra
        with pytest.raises(InvalidIndexRange):
            f_lipschitz_ratio(FAST, grid64, params, norm_index=1.0)

    @pytest.mark.parametrize("v", list(FluxVariant))
    def test_bound_on_f_from_v_zero(self, grid128, params, v):
        # choosing the second argument as 0 turns the Lipschitz bound into a bound on ||f(u)||_s
        spec = SampleSpec(n_samples=60)
        ratios, m = [], 0.0
        for i in range(spec.n_samples):
            u = random_sobolev_field(grid128, spec, 2 * i)
            fu = sobolev_norm(f_nonlocal(u, params, v), spec.s)
            ratios.append(fu / sobolev_norm(u, spec.s))
            m = max(m, fu)
        rep = f_lipschitz_ratio(spec, grid128, params, v)
        assert rep.extra["M"] == pytest.approx(m, rel=1e-12)
        assert m <= max(ratios) * spec.radius * (1 + 1e-12)
        assert np.isfinite(rep.max_ratio)

    def test_max_ratio_grows_with_radius(self, grid128, params):
        maxima = [f_lipschitz_ratio(SampleSpec(radius=r, n_samples=60), grid128, params,
                                    FluxVariant.AS_PRINTED).max_ratio for r in (0.5, 1.0, 2.0)]
        assert maxima[0] < maxima[1] < maxima[2]

    def test_printed_l2_median_grows_with_radius(self, grid128, params):
        med = [f_lipschitz_ratio(SampleSpec(radius=r, n_samples=60), grid128, params,
                                 FluxVariant.AS_PRINTED, 0).median_ratio for r in (0.5, 1.0, 2.0)]
        assert med[0] < med[1] < med[2]

    @pytest.mark.parametrize("norm_index", [0, "s"])
    def test_rederived_median_nearly_flat_in_radius(self, grid128, params, norm_index):
        # the linear part dominates; nonlinear corrections shift the median by well under 1%
        med = [f_lipschitz_ratio(SampleSpec(radius=r, n_samples=60), grid128, params,
                                 FluxVariant.REDERIVED, norm_index).median_ratio
               for r in (0.5, 1.0, 2.0)]
        assert max(med) - min(med) <= 0.01 * min(med)


class TestProduct:
    def test_multiplication_by_one(self, grid64):
        one = Field(grid64, np.ones(64))
        g = random_sobolev_field(grid64, FAST, 3)
        for t in (-1.0, 0.0, 1.0, 2.0):
            assert product_ratio(one, g, 2.0, t) == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-12)

    def test_zero_skipped(self, grid64):
        assert product_ratio(grid64.sample(np.sin), Field(grid64, np.zeros(64)), 2.0, 0.0) is None

    @pytest.mark.parametrize("t", [-2.0, -2.5, 2.1])
    def test_range(self, grid64, t):
        with pytest.raises(InvalidIndexRange):
            product_estimate_ratio(FAST, grid64, t)


class TestCommutator:
    def test_constant_f(self, grid64):
        w = random_sobolev_field(grid64, FAST, 1)
        out = commutator_term(Field(grid64, np.full(64, 1.3)), w, 0.0, 1.0)
        assert np.max(np.abs(out.values)) < 1e-11

    def test_matches_b_operator(self, grid64):
        # with s~ = 0, t~ = s-1 the commutator is [Lambda^s, M_f] Lambda^(1-s); B(u)w applies it to Lambda^-1 d_x w
        f = random_sobolev_field(grid64, FAST, 0)
        w = random_sobolev_field(grid64, FAST, 1)
        from wavelab.spectral import bessel_potential, derivative
        z = bessel_potential(derivative(w, 1), -1.0)
        np.testing.assert_allclose(commutator_term(f, z, 0.0, 1.0).values,
                                   apply_B(f, w, 2.0).values, atol=1e-12)

    def test_cross_check_with_b_bound(self, grid128):
        spec = SampleSpec(n_samples=100)
        c = commutator_estimate_ratio(spec, grid128, 0.0, spec.s - 1)
        b = b_bound_ratio(spec, grid128)
        assert 0.5 <= c.max_ratio / b.max_ratio <= 2.0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.01, 100))
    def test_scaling_invariance(self, index, lam):
        g = Grid(2 * np.pi, 64)
        f, w = random_sobolev_field(g, FAST, index), random_sobolev_field(g, FAST, index + 1)
        r1 = commutator_ratio(f, w, 2.0, 0.5, -0.5)
        r2 = commutator_ratio(f * lam, w, 2.0, 0.5, -0.5)
        assert r2 == pytest.approx(r1, rel=1e-10)

    @pytest.mark.parametrize("st_,tt", [(2.0, 0.0), (0.0, 1.01), (-1.5, 0.0)])
    def test_range(self, grid64, st_, tt):
        with pytest.raises(InvalidIndexRange):
            commutator_estimate_ratio(FAST, grid64, st_, tt)


def test_reports_are_reproducible(grid64, params):
    for make in (lambda: b_bound_ratio(FAST, grid64),
                 lambda: product_estimate_ratio(FAST, grid64, 1.0),
                 lambda: commutator_estimate_ratio(FAST, grid64, 0.0, 1.0),
                 lambda: f_lipschitz_ratio(FAST, grid64, params)):
        a, b = make(), make()
        assert a == b and a.to_json() == b.to_json()
        assert a.max_ratio >= a.median_ratio >= 0


class TestContinuity:
    def test_zero_delta_and_zero_data(self, grid64, params):
        cfg = StepperConfig(dt=1e-2, t_end=0.2)
        rep = continuous_dependence(Field(grid64, np.zeros(64)), [0.0, 1e-3], params, cfg, T=0.2)
        assert np.isnan(rep.amplification[0]) and rep.sup_diff[0] == 0.0
        assert np.isfinite(rep.amplification[1])
        assert not rep.propagated_blowup

    def test_gaussian_ladder(self, grid64, params):
        u0 = Gaussian(amp=0.1).build(grid64)
        rep = continuous_dependence(u0, [1e-2, 1e-3, 1e-4], params,
                                    StepperConfig(dt=1e-2, t_end=1.0), T=1.0)
        assert rep.bounded and rep.converging
        assert 0.1 <= rep.amplification[1] / rep.amplification[2] <= 10
