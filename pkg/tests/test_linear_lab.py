import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nskgevrey import linear_lab as ll
from nskgevrey.spectral_core import SpectralField, State, divergence, leray_project, make_grid, random_field


def random_state(grid, rng, **kw):
    return State(random_field(grid, rng, **kw), random_field(grid, rng, ncomp=grid.d, **kw))


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestParams:
    def test_normalisation(self):
        p = ll.LinearParams(1.0, 0.3)
        assert p.lambda_bar == pytest.approx(0.4) and p.nu_bar == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [dict(kappa_bar=0.0), dict(kappa_bar=1.0, mu_bar=-1.0), dict(kappa_bar=1.0, mu_bar=0.5, lambda_bar=0.5)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ll.LinearParams(**kw)


class TestModeGenerator:
    def test_example(self):
        m = ll.mode_generator(1.0, ll.LinearParams(1.0))
        assert np.array_equal(m, [[0.0, -1.0], [2.0, -1.0]])

    @given(xi=st.floats(0.01, 20.0), k=st.floats(0.01, 10.0))
    def test_trace_det(self, xi, k):
        m = ll.mode_generator(xi, ll.LinearParams(k))
        assert np.trace(m) == pytest.approx(-(xi**2))
        assert np.linalg.det(m) == pytest.approx(xi**2 * (1 + k * xi**2), rel=1e-10)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            ll.mode_generator(0.0, ll.LinearParams(1.0))


class TestPropagator:
    def test_identity_at_zero(self):
        s = ll.ModeState(1.3, 0.2 + 1j, -0.5)
        out = ll.propagate_mode_exact(s, 0.0, ll.LinearParams(2.0))
        assert out == s

    def test_against_oracle(self, rng):
        params = ll.LinearParams(1.0)
        a0, v0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        out = ll.propagate_mode_exact(ll.ModeState(1.0, a0, v0), 1.0, params)
        ref = ll.mode_oracle(1.0, 1.0, a0, v0, [1.0])[0, -1]
        assert rel(np.array([out.a_hat, out.v_hat]), ref) < 1e-8

    def test_matches_scipy_expm(self):
        from scipy.linalg import expm

        for k in (0.1, 0.25, 1.0, 4.0):
            for xi in (0.3, 1 / np.sqrt(2), 2.5):
                e = np.array(ll.mode_propagator(np.array([xi]), k, 0.7)).reshape(2, 2)
                ref = expm(0.7 * ll.mode_generator(xi, ll.LinearParams(k)))
                assert np.allclose(e, ref, rtol=1e-12, atol=1e-14)

    def test_coalescence_branch(self):
        from scipy.linalg import expm

        xi = 1 / np.sqrt(2)
        e = np.array(ll.mode_propagator(np.array([xi]), 0.25, 3.0)).reshape(2, 2)
        assert np.allclose(e, expm(3.0 * ll.mode_generator(xi, ll.LinearParams(0.25))), rtol=1e-10)

    def test_sweep(self):
        rows = ll.lyapunov_sweep(xis=np.linspace(0.1, 8, 8), times=np.linspace(0, 10, 21))
        assert max(r.oracle_rel_err for r in rows) < 1e-8
        assert max(r.envelope_ratio for r in rows) <= 1.0
        assert ll.sweep_to_csv(rows).count("\n") == len(rows) + 1

    def test_negative_time(self):
        with pytest.raises(ValueError):
            ll.propagate_mode_exact(ll.ModeState(1.0, 1, 0), -1.0, ll.LinearParams(1.0))


class TestLyapunov:
    def test_value(self):
        assert ll.lyapunov(ll.ModeState(1.0, 1.0, 0.0), ll.LinearParams(1.0)) == pytest.approx(2.5)

    def test_zero(self):
        assert ll.lyapunov(ll.ModeState(2.0, 0, 0), ll.LinearParams(1.0)) == 0.0

    def test_beta_range(self):
        with pytest.raises(ValueError):
            ll.lyapunov(ll.ModeState(1.0, 1, 0), ll.LinearParams(1.0), beta=1.0)

    @given(xi=st.floats(0.05, 10.0), k=st.floats(0.05, 10.0), seed=st.integers(0, 2**31))
    def test_bracket(self, xi, k, seed):
        r = np.random.default_rng(seed)
        a, v = r.standard_normal(2) + 1j * r.standard_normal(2)
        s = ll.ModeState(xi, a, v)
        lo, hi = ll.lyapunov_bracket(k)
        L2 = ll.lyapunov(s, ll.LinearParams(k))
        n2 = s.triple_norm() ** 2
        assert lo * n2 * (1 - 1e-12) <= L2 <= hi * n2 * (1 + 1e-12)

    def test_dissipation(self, rng):
        for _ in range(50):
            k = float(np.exp(rng.uniform(np.log(0.1), np.log(4.0))))
            xi = float(rng.uniform(0.1, 8.0))
            a, v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            d = ll.lyapunov_dissipation(ll.ModeState(xi, a, v), ll.LinearParams(k), t=0.01 + rng.uniform(0, 1))
            assert d <= 1e-10


class TestEigen:
    @given(xi=st.floats(0.0, 10.0), k=st.floats(0.01, 10.0))
    def test_sum_product(self, xi, k):
        lp, lm = ll.eigenvalues(xi, k)
        assert complex(lp + lm) == pytest.approx(1 + xi**2)
        disc = (1 - 4 * k) * xi**4 - 2 * xi**2 + 1
        expected = 0.25 * ((1 + xi**2) ** 2 - disc)
        assert complex(lp * lm) == pytest.approx(expected, rel=1e-9, abs=1e-12)
        assert expected == pytest.approx(xi**2 * (1 + k * xi**2), rel=1e-9, abs=1e-12)

    def test_coalescence_quarter(self):
        pts = ll.coalescence_points(0.25)
        assert pts == [pytest.approx(1 / np.sqrt(2), rel=1e-15)]
        assert abs(ll.haspot_discriminant(pts[0], 0.25)) < 1e-15

    def test_two_coalescence_points(self):
        for x in ll.coalescence_points(0.1):
            assert abs(ll.haspot_discriminant(x, 0.1)) < 1e-12

    def test_matrix_consistency(self):
        for k in (0.1, 0.25, 1.0, 4.0):
            for xi in np.linspace(0.2, 6, 12):
                ev = np.sort_complex(-np.linalg.eigvals(ll.haspot_matrix(xi, k)))
                lp, lm = ll.eigenvalues(xi, k)
                assert np.allclose(ev, np.sort_complex([complex(lp), complex(lm)]), atol=1e-12 * (1 + xi**2))

    def test_alpha(self):
        assert ll.haspot_alpha(0.25) == pytest.approx(0.5)
        a = ll.haspot_alpha(1.0)
        assert a == pytest.approx(0.5 * (1 + 1j * np.sqrt(3)))
        assert (1 - a).real == pytest.approx(0.5)
        for k in (0.1, 0.25, 1.0, 4.0):
            a = ll.haspot_alpha(k)
            assert abs(a * (1 - a) - k) < 1e-14
        with pytest.raises(ValueError):
            ll.haspot_alpha(0.0)


class TestSemigroup:
    def test_identity(self, rng):
        g = make_grid(2, 16)
        s = random_state(g, rng)
        out = ll.apply_semigroup(s, 0.0, ll.LinearParams(1.0))
        assert np.array_equal(out.stacked(), s.stacked())

    def test_semigroup_property(self, rng):
        g = make_grid(2, 16)
        p = ll.LinearParams(0.7, 0.3)
        s = random_state(g, rng)
        two = ll.apply_semigroup(ll.apply_semigroup(s, 0.2, p), 0.3, p).stacked()
        one = ll.apply_semigroup(s, 0.5, p).stacked()
        assert rel(two, one) < 1e-10

    def test_heat_on_solenoidal(self, rng):
        g = make_grid(2, 16)
        p = ll.LinearParams(1.0, 0.4)
        u, _ = leray_project(random_field(g, rng, ncomp=2))
        s = State(SpectralField(g, np.zeros(g.shape, complex)), u)
        out = ll.apply_semigroup(s, 0.3, p)
        assert np.allclose(out.u.coeffs, u.coeffs * np.exp(-0.4 * g.xi_abs**2 * 0.3), atol=1e-15)
        assert np.max(np.abs(out.a.coeffs)) < 1e-15

    def test_mean_frozen(self, rng):
        g = make_grid(1, 16)
        s = random_state(g, rng)
        y = s.stacked()
        y[:, 0] = [0.3, -0.2]
        out = ll.apply_semigroup(State.from_stacked(g, y), 1.0, ll.LinearParams(1.0)).stacked()
        assert np.allclose(out[:, 0], [0.3, -0.2])

    @pytest.mark.parametrize("d", [1, 2])
    def test_against_rk4(self, d, rng):
        g = make_grid(d, 16 if d == 2 else 32)
        p = ll.LinearParams(1.0, 0.35)
        s = random_state(g, rng, gamma=3.0)
        exact = ll.apply_semigroup(s, 0.2, p).stacked()
        ref = ll.rk4_linear_pde(s, 0.2, p, steps=4000).stacked()
        assert rel(exact, ref) < 1e-8


class TestHaspot:
    @pytest.mark.parametrize("k", [0.1, 0.25, 1.0, 4.0])
    def test_residuals(self, k, rng):
        g = make_grid(2, 16)
        s = random_state(g, rng, gamma=3.0)
        res = ll.haspot_residuals(s, ll.LinearParams(k))
        assert res["w"] < 1e-6 and res["v"] < 1e-6
        assert res["div_v_defect"] < 1e-12

    def test_div_v(self, rng):
        g = make_grid(2, 16)
        s = random_state(g, rng)
        fr = ll.haspot_transform(s, ll.LinearParams(1.0))
        lhs = divergence(fr.v).coeffs
        rhs = divergence(s.u).coeffs - s.a.coeffs
        rhs[0, 0] += s.a.coeffs[0, 0]
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_w_definition(self, rng):
        g = make_grid(1, 16)
        s = random_state(g, rng)
        fr = ll.haspot_transform(s, ll.LinearParams(0.25))
        grad_a = 1j * g.xi * s.a.coeffs[None]
        assert np.allclose(fr.w.coeffs, fr.v.coeffs + 0.5 * grad_a)


class TestComplexHeat:
    def test_real_beta(self, rng):
        z = random_field(make_grid(1, 64), rng, gamma=0.5)
        C, c = ll.complex_heat_check(1.0, z, 3)
        assert c == 0.125 and C == pytest.approx(1.0, abs=1e-12)

    def test_haspot_beta(self, rng):
        z = random_field(make_grid(2, 32), rng, gamma=0.5)
        C, _ = ll.complex_heat_check(1 - ll.haspot_alpha(1.0), z, 2)
        assert np.isfinite(C) and C < 10

    def test_imaginary_beta(self, rng):
        z = random_field(make_grid(1, 32), rng)
        with pytest.raises(ValueError):
            ll.complex_heat_check(1j, z, 2)
