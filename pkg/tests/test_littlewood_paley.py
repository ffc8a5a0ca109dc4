import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nskgevrey.littlewood_paley import (
    BesovSpec,
    aggregate,
    besov_norm,
    block_lp_norms,
    build_partition,
    chemin_lerner_norm,
    chi,
    dyadic_block,
    lebesgue_besov_norm,
    phi,
    split_low_high,
    time_norm,
    validate_theorem_exponent,
)
from nskgevrey.spectral_core import SpectralField, forward, gradient, lp_norm, make_grid, random_field


def mode_field(grid, k, amp=1.0):
    """``amp cos(k . x)`` for an integer wave vector ``k``."""
    c = np.zeros(grid.shape, dtype=complex)
    c[tuple(ki % grid.N for ki in k)] += amp / 2
    c[tuple(-ki % grid.N for ki in k)] += amp / 2
    return SpectralField(grid, c)


class TestProfile:
    def test_plateau_and_support(self):
        r = np.array([0.0, 0.5, 0.75, 4 / 3, 2.0])
        assert np.allclose(chi(r), [1, 1, 1, 0, 0])
        assert phi(0.5) == 0.0
        assert phi(3.0) == 0.0 and phi(0.7) == 0.0

    def test_smoothstep_midpoint(self):
        mid = 0.5 * (0.75 + 4 / 3)
        assert chi(mid) == pytest.approx(0.5, abs=1e-12)

    @given(r=st.floats(1e-3, 1e3))
    def test_partition_of_unity(self, r):
        js = range(-15, 15)
        assert sum(phi(r * 2.0 ** (-j)) for j in js) == pytest.approx(1.0, abs=1e-12)

    @given(r=st.floats(0.0, 10.0))
    def test_block_support(self, r):
        if r < 0.75 or r > 8 / 3:
            assert phi(r) == 0.0
        assert 0.0 <= phi(r) <= 1.0


class TestPartition:
    @pytest.mark.parametrize("d,N,L", [(1, 64, 2 * math.pi), (2, 32, 10.0), (3, 16, 2 * math.pi)])
    def test_sum_is_one_off_the_mean(self, d, N, L):
        g = make_grid(d, N, L)
        s = build_partition(g).partition_sum()
        mask = g.xi_abs > 0
        assert np.max(np.abs(s[mask] - 1.0)) < 1e-12
        assert s[(0,) * d] == 0.0

    def test_cached(self):
        g = make_grid(2, 16)
        assert build_partition(g) is build_partition(g)

    def test_out_of_range_block(self):
        part = build_partition(make_grid(1, 16))
        with pytest.raises(ValueError):
            part.block_symbol(part.j_max + 5)


class TestBlocks:
    def test_single_mode_support(self):
        g = make_grid(1, 128)
        j0 = 4
        f = mode_field(g, (2**j0,))
        part = build_partition(g)
        for j in part.indices:
            blk = dyadic_block(f, j)
            if abs(j - j0) >= 2:
                assert np.max(np.abs(blk.coeffs)) == 0.0

    def test_telescoping(self, rng):
        g = make_grid(2, 32)
        f = random_field(g, rng) + 0.7
        part = build_partition(g)
        j = 0
        total = dyadic_block(f, j, kind="low_cutoff").coeffs.copy()
        for jj in part.indices:
            if jj >= j:
                total += dyadic_block(f, jj).coeffs
        # S_j f + sum_{j' >= j} D_j' f = f; removing the mean from S_j gives f - mean(f)
        assert np.max(np.abs(total - f.coeffs)) < 1e-12
        homogeneous = (SpectralField(g, total) - f.mean).coeffs
        assert np.max(np.abs(homogeneous - f.without_mean().coeffs)) < 1e-12

    def test_white_noise_reconstruction(self, rng):
        g = make_grid(2, 32)
        f = forward(g, rng.standard_normal(g.shape)).without_mean()
        part = build_partition(g)
        total = sum(dyadic_block(f, j).coeffs for j in part.indices)
        assert np.max(np.abs(total - f.coeffs)) < 1e-12 * np.max(np.abs(f.coeffs))

    def test_unknown_kind(self, rng):
        with pytest.raises(ValueError):
            dyadic_block(random_field(make_grid(1, 16), rng), 0, kind="other")


class TestBesov:
    def test_zero(self):
        g = make_grid(1, 16)
        assert besov_norm(SpectralField(g, np.zeros(16, complex)), BesovSpec(1.0)).value == 0.0

    def test_single_mode_bracket(self):
        g = make_grid(1, 256)
        j0, A, sigma, p = 3, 2.0, 0.5, 2.0
        f = mode_field(g, (2**j0,), A)
        val = besov_norm(f, BesovSpec(sigma, p, 1)).value
        # the mode sits where exactly the blocks j0 and j0 - 1 are active and sum to 1
        base = lp_norm(f.to_physical(), g, p)
        lo, hi = 2.0 ** ((j0 - 1) * sigma) * base, 2.0 ** (j0 * sigma) * base
        assert 0.5 * lo <= val <= hi * (1 + 1e-12)

    def test_scaling(self, rng):
        # f(2x) on the same torus moves every block up by one
        g = make_grid(1, 256)
        f = random_field(g, rng, xi_c=4.0)
        phys = f.to_physical()
        f2 = forward(g, np.concatenate([phys[::2], phys[::2]]))
        for sigma, p in ((0.5, 2.0), (1.0, 4.0), (-0.5, 3.0)):
            n1 = besov_norm(f, BesovSpec(sigma, p, 1)).value
            n2 = besov_norm(f2, BesovSpec(sigma, p, 1)).value
            ratio = (n2 / n1) / 2.0 ** (sigma - 1 / p)
            assert 0.5 <= ratio <= 2.0

    def test_needs_zero_mean(self, rng):
        f = random_field(make_grid(1, 32), rng) + 1.0
        with pytest.raises(ValueError):
            besov_norm(f, BesovSpec(0.0))
        assert besov_norm(f, BesovSpec(0.0), drop_mean=True).value > 0

    def test_report_json(self, rng):
        rep = besov_norm(random_field(make_grid(1, 32), rng), BesovSpec(0.5))
        parsed = json.loads(rep.to_json())
        assert parsed["value"] == pytest.approx(rep.value)
        assert "value=" in rep.bar_table()

    def test_embedding_monotone(self, rng):
        # l^1 dominates l^inf; L^2 blocks dominate L^4 blocks at shifted regularity up to a constant
        g = make_grid(1, 128)
        f = random_field(g, rng)
        assert besov_norm(f, BesovSpec(0.5, 2, 1)).value >= besov_norm(f, BesovSpec(0.5, 2, np.inf)).value
        big = besov_norm(f, BesovSpec(0.5, 2, 1)).value
        small = besov_norm(f, BesovSpec(0.5 - (1 / 2 - 1 / 4), 4, 1)).value
        assert small <= 3.0 * big

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            BesovSpec(0.0, p=0.5)

    def test_aggregate(self):
        assert aggregate([3.0, 4.0], 2) == pytest.approx(5.0)
        assert aggregate([3.0, 4.0], np.inf) == 4.0
        assert aggregate([], 1) == 0.0


class TestBernstein:
    def test_gradient_ratio_bounded(self, rng):
        g = make_grid(2, 64)
        part = build_partition(g)
        a, b = 2.0, 4.0
        ratios = []
        for _ in range(200):
            f = random_field(g, rng, gamma=rng.uniform(0, 2))
            for j in list(part.indices)[1:-1]:
                blk = dyadic_block(f, j, partition=part)
                den = 2.0 ** (j * (1 + g.d * (1 / a - 1 / b))) * lp_norm(blk.to_physical(), g, a)
                if den > 0:
                    ratios.append(lp_norm(gradient(blk).to_physical(), g, b) / den)
        assert np.isfinite(max(ratios)) and max(ratios) < 10.0


class TestLowHigh:
    def test_high_only(self):
        g = make_grid(1, 256)
        k0 = 0
        f = mode_field(g, (2 ** (k0 + 3),))
        low, high = split_low_high(f, k0)
        assert low == 0.0 and high > 0

    def test_overlap_block_counted_twice(self):
        g = make_grid(1, 256)
        k0 = 2
        # |xi| = 1.2 * 2^(k0-1) lies inside block k0-1 only
        f = SpectralField(g, np.zeros(256, complex))
        c = f.coeffs.copy()
        k = int(1.2 * 2 ** (k0 - 1))
        c[k] = c[-k] = 0.5
        f = SpectralField(g, c)
        low, high = split_low_high(f, k0)
        assert low > 0 and high > 0

    def test_sum_dominates_full_norm(self, rng):
        f = random_field(make_grid(1, 128), rng)
        low, high = split_low_high(f, 1)
        full = besov_norm(f, BesovSpec(0.0)).value
        assert low + high >= full * (1 - 1e-12)


class TestTimeNorms:
    def test_constant_in_time(self, rng):
        f = random_field(make_grid(1, 64), rng)
        spec = BesovSpec(0.5)
        val = chemin_lerner_norm([0.0, 1.0, 2.0], [f, f, f], np.inf, spec)
        assert val == pytest.approx(besov_norm(f, spec).value, rel=1e-13)

    def test_dominates_plain_norm(self, rng):
        g = make_grid(1, 64)
        f = random_field(g, rng)
        times = np.linspace(0, 1, 11)
        fields = [SpectralField(g, f.coeffs * np.exp(-t * g.xi_abs**2)) for t in times]
        spec = BesovSpec(0.5, 2, 1)
        assert chemin_lerner_norm(times, fields, np.inf, spec) >= lebesgue_besov_norm(times, fields, np.inf, spec)

    def test_single_block_exponential(self):
        g = make_grid(1, 256)
        j = 3
        base = mode_field(g, (10,))
        blk = dyadic_block(base, j)
        times = np.linspace(0, 1, 2001)
        fields = [blk * math.exp(-t) for t in times]
        spec = BesovSpec(0.7, 2, 1)
        got = chemin_lerner_norm(times, fields, 1, spec)
        norms = block_lp_norms(blk, 2)
        expect = (1 - math.exp(-1)) * sum(2.0 ** (k * 0.7) * v for k, v in norms.items())
        assert got == pytest.approx(expect, rel=1e-6)

    def test_bad_q(self, rng):
        f = random_field(make_grid(1, 16), rng)
        with pytest.raises(ValueError):
            chemin_lerner_norm([0, 1], [f, f], 3, BesovSpec(0.0))
        with pytest.raises(ValueError):
            time_norm([0.0], [1.0], 1)


class TestTheoremExponent:
    @pytest.mark.parametrize("p,d", [(2, 2), (3, 2), (3.9, 2), (4, 3), (2, 3), (3, 3)])
    def test_admitted(self, p, d):
        assert validate_theorem_exponent(p, d) == p

    @pytest.mark.parametrize("p,d", [(4, 2), (1.5, 2), (5, 3), (4.5, 2)])
    def test_rejected(self, p, d):
        with pytest.raises(ValueError):
            validate_theorem_exponent(p, d)
