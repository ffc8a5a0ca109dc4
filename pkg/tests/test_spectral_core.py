import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nskgevrey.spectral_core import (
    Grid,
    SpectralField,
    State,
    apply_multiplier,
    dealiased_product,
    divergence,
    embed,
    forward,
    from_bytes,
    from_csv,
    gevrey_symbol,
    gradient,
    inverse_laplacian_gradient,
    lambda_symbol,
    leray_project,
    load_field,
    lp_norm,
    make_grid,
    random_field,
    save_field,
    to_bytes,
    to_csv,
    transform,
)


class TestGrid:
    def test_unit_lattice_1d(self):
        g = make_grid(1, 8)
        assert sorted(g.k1d.tolist()) == list(range(-4, 4))
        assert np.allclose(np.sort(g.xi[0].ravel()), np.arange(-4, 4))

    def test_axis_norms_2d(self):
        g = make_grid(2, 8)
        assert g.xi_l1[1, 1] == pytest.approx(2.0)
        assert g.xi_abs[1, 1] == pytest.approx(math.sqrt(2.0))

    def test_max_modulus_3d(self):
        g = make_grid(3, 16, 1.0)
        assert g.xi_abs.max() == pytest.approx(2 * math.pi * 8 * math.sqrt(3), rel=1e-14)

    def test_lattice_closed_under_negation_away_from_nyquist(self):
        g = make_grid(1, 16)
        k = set(g.k1d.tolist()) - {-8}
        assert all(-x in k for x in k)

    @pytest.mark.parametrize("args", [(4, 8, 1.0), (2, 7, 1.0), (2, 12, 1.0), (2, 4, 1.0), (2, 8, 0.0)])
    def test_invalid_grids(self, args):
        with pytest.raises(ValueError):
            Grid(*args)


class TestTransform:
    def test_cosine_coefficients(self):
        g = make_grid(1, 8)
        f = forward(g, np.cos(g.x[0]))
        expect = np.zeros(8, dtype=complex)
        expect[1] = expect[-1] = 0.5
        assert np.allclose(f.coeffs, expect, atol=1e-15)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_round_trip(self, d, rng):
        g = make_grid(d, 8 if d == 3 else 16)
        for _ in range(100):
            v = rng.standard_normal(g.shape)
            back = transform(transform(v, "forward", g), "inverse")
            assert np.max(np.abs(back - v)) <= 1e-12 * np.max(np.abs(v))

    def test_parseval(self, rng):
        g = make_grid(2, 32, 3.0)
        f = random_field(g, rng, gamma=1.0)
        phys = f.to_physical()
        direct = math.sqrt(np.sum(phys**2) * g.cell_volume)
        assert f.l2_norm() == pytest.approx(direct, rel=1e-12)

    def test_real_fields_are_hermitian(self, rng):
        g = make_grid(2, 16)
        f = forward(g, rng.standard_normal(g.shape))
        assert f.hermitian_defect() < 1e-12

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            transform(np.zeros(8), "sideways", make_grid(1, 8))
        with pytest.raises(ValueError):
            forward(make_grid(1, 8), np.zeros(16))


class TestMultipliers:
    def test_identity(self, rng):
        f = random_field(make_grid(2, 16), rng)
        assert np.array_equal(apply_multiplier(f, 1.0).coeffs, f.coeffs)

    def test_lambda2_on_cosine(self):
        g = make_grid(1, 16)
        f = forward(g, np.cos(g.x[0]))
        out = apply_multiplier(f, lambda_symbol(2.0))
        assert np.allclose(out.to_physical(), np.cos(g.x[0]), atol=1e-14)

    def test_gradient_recovered_from_divergence(self, rng):
        g = make_grid(2, 16)
        phi = random_field(g, rng)
        u = gradient(phi)
        back = inverse_laplacian_gradient(divergence(u))
        assert np.allclose(-back.coeffs, u.coeffs, atol=1e-14)

    def test_commuting_symbols(self, rng):
        f = random_field(make_grid(2, 16), rng)
        a, b = lambda_symbol(1.5), gevrey_symbol(0.3)
        ab = apply_multiplier(apply_multiplier(f, a), b).coeffs
        ba = apply_multiplier(apply_multiplier(f, b), a).coeffs
        # equal up to the rounding of one multiplication
        assert np.allclose(ab, ba, rtol=4e-16, atol=0)

    def test_singular_symbol_with_mean_needs_policy(self):
        g = make_grid(1, 8)
        f = forward(g, np.ones(8))
        with pytest.raises(ValueError):
            apply_multiplier(f, lambda_symbol(-1.0))
        assert apply_multiplier(f, lambda_symbol(-1.0), at_zero=0.0).l2_norm() == 0.0


class TestLeray:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_gradient_is_pure_q(self, d, rng):
        g = make_grid(d, 8)
        u = gradient(random_field(g, rng))
        p, q = leray_project(u)
        assert np.max(np.abs(p.coeffs)) < 1e-12 * np.max(np.abs(u.coeffs))
        assert np.allclose(q.coeffs, u.coeffs)

    def test_curl_field_is_pure_p(self, rng):
        g = make_grid(2, 16)
        psi = random_field(g, rng)
        gr = gradient(psi).coeffs
        u = SpectralField(g, np.stack([gr[1], -gr[0]]))
        _, q = leray_project(u)
        assert np.max(np.abs(q.coeffs)) < 1e-12

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_idempotent_and_orthogonal(self, d, rng):
        g = make_grid(d, 8)
        u = random_field(g, rng, ncomp=d)
        p, q = leray_project(u)
        pp, _ = leray_project(p)
        assert np.allclose(pp.coeffs, p.coeffs, atol=1e-14)
        assert np.allclose(p.coeffs + q.coeffs, u.coeffs)
        inner = np.sum(p.coeffs * np.conj(q.coeffs)) * g.volume
        assert abs(inner) < 1e-12


class TestLpNorm:
    def test_constant(self):
        g = make_grid(2, 8, 3.0)
        for p in (1, 2, 3.5):
            assert lp_norm(np.full(g.shape, -2.0), g, p) == pytest.approx(2.0 * 3.0 ** (2 / p))

    def test_sin_fourth_power(self):
        g = make_grid(1, 64)
        assert lp_norm(np.sin(g.x[0]), g, 4) == pytest.approx((3 * math.pi / 4) ** 0.25, rel=1e-12)

    def test_p2_matches_parseval(self, rng):
        f = random_field(make_grid(2, 16), rng)
        assert lp_norm(f.to_physical(), f.grid, 2) == pytest.approx(f.l2_norm(), rel=1e-12)

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm(np.ones(8), make_grid(1, 8), 0.5)

    @given(seed=st.integers(0, 10_000), p1=st.floats(2.0, 8.0))
    def test_holder(self, seed, p1):
        r = np.random.default_rng(seed)
        g = make_grid(1, 32)
        f, h = random_field(g, r).to_physical(), random_field(g, r).to_physical()
        p2 = p1  # 1/p = 2/p1
        p = p1 / 2
        assert lp_norm(f * h, g, p) <= lp_norm(f, g, p1) * lp_norm(h, g, p2) * (1 + 1e-12)


class TestProducts:
    def test_dealiased_product_of_modes(self):
        g = make_grid(1, 16)
        f = forward(g, np.cos(3 * g.x[0]))
        h = forward(g, np.cos(4 * g.x[0]))
        prod = dealiased_product(f, h).to_physical()
        assert np.allclose(prod, 0.5 * (np.cos(g.x[0]) + np.cos(7 * g.x[0])), atol=1e-14)

    def test_aliasing_is_removed(self):
        g = make_grid(1, 16)
        f = forward(g, np.cos(6 * g.x[0]))
        # cos(6x)^2 = (1 + cos 12x)/2; the k=12 part lies beyond the grid and must vanish
        prod = dealiased_product(f, f)
        assert np.allclose(prod.to_physical(), 0.5, atol=1e-14)


class TestStateAndEmbedding:
    def test_stack_round_trip(self, rng):
        g = make_grid(2, 8)
        s = State(random_field(g, rng), random_field(g, rng, ncomp=2))
        back = State.from_stacked(g, s.stacked())
        assert np.array_equal(back.a.coeffs, s.a.coeffs) and np.array_equal(back.u.coeffs, s.u.coeffs)

    def test_embed_keeps_the_function(self, rng):
        g = make_grid(2, 16)
        f = random_field(g, rng)
        fine = embed(f, g.refined())
        assert fine.l2_norm() == pytest.approx(f.l2_norm(), rel=1e-13)
        assert np.allclose(fine.to_physical()[::2, ::2], f.to_physical(), atol=1e-14)


class TestSerialization:
    def test_binary_round_trip(self, rng, tmp_path):
        f = random_field(make_grid(2, 16), rng, ncomp=2)
        back = from_bytes(to_bytes(f))
        assert back.grid == f.grid
        assert np.allclose(back.coeffs, f.coeffs, rtol=0, atol=1e-7 * np.abs(f.coeffs).max())
        save_field(tmp_path / "f.bin", f)
        assert np.array_equal(load_field(tmp_path / "f.bin").coeffs, back.coeffs)

    def test_bad_magic(self):
        with pytest.raises(ValueError):
            from_bytes(b"\0" * 64)

    def test_csv_round_trip(self, rng):
        f = random_field(make_grid(1, 16), rng)
        back = from_csv(to_csv(f))
        assert np.array_equal(back.coeffs, f.coeffs)

    def test_csv_refuses_large_grids(self, rng):
        with pytest.raises(ValueError):
            to_csv(random_field(make_grid(2, 128), rng))
