import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nskgevrey import gevrey_decay as gd
from nskgevrey.littlewood_paley import BesovSpec, besov_norm
from nskgevrey.spectral_core import SpectralField, make_grid, random_field


def synthetic(grid, rate):
    """Coefficients ``exp(-rate |xi|_1)`` (a real, even field)."""
    return SpectralField(grid, np.exp(-rate * grid.xi_l1).astype(complex))


class TestWeight:
    def test_zero_is_identity(self, rng):
        f = random_field(make_grid(2, 16), rng)
        assert np.array_equal(gd.gevrey_weight(f, 0.0).coeffs, f.coeffs)

    @given(seed=st.integers(0, 10_000), delta=st.floats(0.0, 1.0))
    def test_inverse(self, seed, delta):
        f = random_field(make_grid(2, 16), np.random.default_rng(seed))
        back = gd.gevrey_weight(gd.gevrey_weight(f, delta), -delta)
        np.testing.assert_allclose(back.coeffs, f.coeffs, rtol=1e-12, atol=1e-15)

    def test_damping_lowers_besov(self, rng):
        g = make_grid(2, 32)
        c = np.exp(-0.05 * g.xi_abs**2) * (g.xi_abs > 0)
        f = SpectralField(g, c.astype(complex))
        spec = BesovSpec(0.0)
        assert besov_norm(gd.gevrey_weight(f, -1.0), spec).value < besov_norm(f, spec).value

    def test_overflow(self, rng):
        f = random_field(make_grid(1, 256), rng, gamma=0.0)
        with pytest.raises(OverflowError, match="shell"):
            gd.gevrey_weight(f, 2.0)

    def test_amplifying_decaying_field_allowed(self):
        g = make_grid(1, 64)
        f = synthetic(g, 2.0)
        out = gd.gevrey_weight(f, 1.5)
        assert np.all(np.isfinite(out.coeffs))


class TestRadius:
    @pytest.mark.parametrize("d,N", [(1, 64), (2, 32)])
    def test_synthetic(self, d, N):
        fit = gd.estimate_radius(synthetic(make_grid(d, N), 2.0))
        assert fit.radius == pytest.approx(2.0, abs=0.05)
        assert fit.residual < 1e-10
        assert json.loads(fit.to_json())["radius"] == fit.radius

    def test_white_noise(self, rng):
        g = make_grid(1, 256)
        c = np.fft.fft(rng.standard_normal(256), norm="forward")
        fit = gd.estimate_radius(SpectralField(g, c))
        assert fit.radius < 0.02

    def test_heat_monotone(self, rng):
        g = make_grid(1, 256, L=8 * np.pi)
        f0 = random_field(g, rng, gamma=0.0)
        radii = [gd.estimate_radius(SpectralField(g, f0.coeffs * np.exp(-t * g.xi_abs**2))).radius for t in np.linspace(0.1, 2.0, 8)]
        assert np.all(np.diff(radii) > 0)

    def test_unresolved(self):
        g = make_grid(1, 32)
        c = np.zeros(32, complex)
        c[1] = c[-1] = 0.5
        with pytest.raises(ValueError, match="unresolved"):
            gd.estimate_radius(SpectralField(g, c))
        with pytest.raises(ValueError, match="unresolved"):
            gd.estimate_radius(SpectralField(g, np.zeros(32, complex)))

    def test_csv(self):
        fit = gd.estimate_radius(synthetic(make_grid(1, 64), 1.0))
        text = gd.radius_series_csv([0.0, 1.0], [fit, fit])
        assert text.splitlines()[0] == "t,radius,window_lo,window_hi,residual"
        assert len(text.splitlines()) == 3


class TestKernels:
    def test_h_alpha_1d_closed_form(self):
        g = make_grid(1, 256)
        rep = gd.kernel_h_alpha(1.0, g)
        vals = rep.kernel.to_physical()
        ref = gd.poisson_kernel_1d(1.0, g.x[0], g.L)
        np.testing.assert_allclose(vals, ref, rtol=1e-10)
        assert np.argmax(vals) == 0

    @pytest.mark.parametrize("d,N,alpha", [(1, 256, 1.0), (2, 256, 0.5), (1, 256, 0.2)])
    def test_h_alpha_mass_and_sign(self, d, N, alpha):
        rep = gd.kernel_h_alpha(alpha, make_grid(d, N))
        assert rep.l1_mass == pytest.approx(1.0, abs=1e-3)
        assert rep.min_value >= -1e-6 * rep.peak

    def test_h_alpha_rejects(self):
        with pytest.raises(ValueError):
            gd.kernel_h_alpha(0.0, make_grid(1, 16))

    def test_m1(self):
        g = make_grid(2, 64)
        for t in (0.5, 2.0, 8.0):
            chk = gd.operator_kernel_checks("M1", g, t=t, tau=t / 2)
            assert chk.extra["exponent"] == pytest.approx((np.sqrt(2) - 1) * np.sqrt(t))
            assert np.isfinite(chk.value) and chk.value <= 1.0 + 1e-3

    def test_m1_domain(self):
        with pytest.raises(ValueError):
            gd.operator_kernel_checks("M1", make_grid(1, 16), t=1.0, tau=1.0)

    def test_m2_identity(self):
        chk = gd.operator_kernel_checks("M2", make_grid(1, 64), a=0.0, samples=5)
        assert chk.value == pytest.approx(1.0, abs=1e-12)
        assert chk.extra["l2_norm"] == 1.0

    def test_m2_bounded_uniformly(self):
        g = make_grid(1, 64)
        vals = [gd.operator_kernel_checks("M2", g, a=a, samples=10).value for a in (0.01, 0.1, 1.0, 10.0)]
        assert all(np.isfinite(v) for v in vals) and max(vals) < 10

    def test_shell_decay_identity(self):
        chk = gd.operator_kernel_checks("shell_decay", make_grid(1, 64), s=0.0, alpha=0.0, samples=3)
        assert chk.value <= 1.0 + 1e-12

    def test_shell_decay_polynomial_in_s(self):
        g = make_grid(1, 128)
        vals = [gd.operator_kernel_checks("shell_decay", g, s=s, alpha=0.3, samples=3).value for s in (0, 1, 2, 4)]
        assert all(np.isfinite(v) for v in vals)
        assert vals[-1] < 100 * (1 + 4) ** 4

    def test_unknown(self):
        with pytest.raises(ValueError):
            gd.operator_kernel_checks("M3", make_grid(1, 16))
        with pytest.raises(ValueError):
            gd.operator_kernel_checks("M2", make_grid(1, 16), a=-1.0)


class TestFitDecay:
    t = np.linspace(0.5, 20.0, 60)

    def test_algebraic(self):
        fit = gd.fit_decay(self.t, 5.0 / self.t)
        assert fit.rate == pytest.approx(1.0, abs=0.01) and fit.r_squared > 0.999
        assert fit.window[0] == 1.0

    def test_stretched(self):
        fit = gd.fit_decay(self.t, 3.0 * np.exp(-2.0 * np.sqrt(self.t)), model="stretched")
        assert fit.gamma_or_c == pytest.approx(2.0, abs=0.02)
        assert fit.prefactor == pytest.approx(3.0, rel=1e-6)

    def test_constant(self):
        assert gd.fit_decay(self.t, np.full(self.t.size, 2.0)).rate == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            gd.fit_decay(self.t, -np.ones(self.t.size))
        with pytest.raises(ValueError):
            gd.fit_decay(self.t[:5], np.ones(5))
        with pytest.raises(ValueError):
            gd.fit_decay(self.t, np.ones(self.t.size), window=(3.0, 2.0))
        with pytest.raises(ValueError):
            gd.fit_decay(self.t, np.ones(self.t.size), model="exp")

    def test_json(self):
        fit = gd.fit_decay(self.t, 1.0 / self.t**2)
        assert json.loads(fit.to_json())["model"] == "algebraic"
