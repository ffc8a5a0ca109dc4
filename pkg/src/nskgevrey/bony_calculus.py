"""Paraproducts, the Gevrey bilinear operator, analytic composition and product-law constants.

Gevrey-weighted quantities use capital letters: ``F = exp(delta Lambda_1) f``.
The weighted product ``B_delta(F, G) = exp(delta Lambda_1)(f g)`` is never formed
by damping and re-amplifying (that loses everything above ``exp(-delta|xi|_1) ~ eps``).
Instead, per coordinate ``|xi_i + eta_i| - |xi_i| - |eta_i|`` equals
``-2 (xi_i^- + eta_i^-)`` when the output coordinate is ``>= 0`` and
``-2 (xi_i^+ + eta_i^+)`` otherwise, so on each output orthant the Fourier weight
factorises into a damping of ``F`` times a damping of ``G``. Every factor is at most 1.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from ._accel import thread_count
from .littlewood_paley import BesovSpec, aggregate, block_lp_norms, build_partition
from .spectral_core import (
    Padder,
    SpectralField,
    embed,
    lp_norm,
    padder_for,
    random_field,
)

# ---------------------------------------------------------------------------
# Orthant-stable weighted products
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _orthant_tables(grid, delta):
    """Per orthant ``alpha``: (input damping on the N lattice, output indicator on the N lattice)."""
    out = []
    for alpha in itertools.product((1, -1), repeat=grid.d):
        damp = np.ones(grid.shape)
        mask = np.ones(grid.shape, dtype=bool)
        for i, a in enumerate(alpha):
            xi_i = grid.xi[i]
            wrong = np.maximum(-xi_i, 0.0) if a == 1 else np.maximum(xi_i, 0.0)
            damp = damp * np.exp(-2.0 * delta * wrong)
            mask &= (xi_i >= 0) if a == 1 else (xi_i < 0)
        out.append((damp, mask))
    return tuple(out)


def _product_sum(grid, pairs, delta, pad):
    """``sum_k B_delta(F_k, G_k)`` on coefficient arrays, one padded FFT round per orthant."""
    if delta == 0:
        acc = None
        for a, b in pairs:
            term = pad.to_physical(a) * pad.to_physical(b)
            acc = term if acc is None else acc + term
        return pad.from_physical(acc)
    total = np.zeros(grid.shape, dtype=np.complex128)
    for damp, mask in _orthant_tables(grid, float(delta)):
        acc = None
        for a, b in pairs:
            term = pad.to_physical(a * damp) * pad.to_physical(b * damp)
            acc = term if acc is None else acc + term
        total += np.where(mask, pad.from_physical(acc), 0.0)
    return total


def _check_delta(delta):
    if not delta >= 0:
        raise ValueError(f"Gevrey radius must be nonnegative, got {delta}")


def _check_pair(f, g):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if f.is_vector or g.is_vector:
        raise ValueError("scalar fields expected")


def gevrey_bilinear(F, G, delta):
    """``B_delta(F, G) = exp(delta Lambda_1)(exp(-delta Lambda_1) F * exp(-delta Lambda_1) G)``, dealiased."""
    _check_delta(delta)
    _check_pair(F, G)
    c = _product_sum(F.grid, [(F.coeffs, G.coeffs)], float(delta), padder_for(F.grid))
    return SpectralField(F.grid, c)


def gevrey_bilinear_naive(F, G, delta):
    """Damp, multiply, re-amplify. Only trustworthy while ``exp(-delta |xi|_1)`` stays well above eps."""
    _check_delta(delta)
    _check_pair(F, G)
    pad = padder_for(F.grid)
    w = np.exp(delta * F.grid.xi_l1)
    prod = pad.from_physical(pad.to_physical(F.coeffs / w) * pad.to_physical(G.coeffs / w))
    return SpectralField(F.grid, prod * w)


def gevrey_weight_factor(grid, delta):
    """``exp(delta (|xi+eta|_1 - |xi|_1 - |eta|_1))`` for every pair of lattice points, shape ``(n, n)``."""
    pts = np.stack([grid.xi[i].ravel() for i in range(grid.d)], axis=1)
    l1 = np.abs(pts).sum(axis=1)
    s = np.abs(pts[:, None, :] + pts[None, :, :]).sum(axis=2)
    return np.exp(delta * (s - l1[:, None] - l1[None, :]))


# ---------------------------------------------------------------------------
# Bony decomposition
# ---------------------------------------------------------------------------


@dataclass
class BonyParts:
    T_fg: SpectralField
    T_gf: SpectralField
    R_fg: SpectralField
    residual: float

    @property
    def total(self):
        return self.T_fg + self.T_gf + self.R_fg


def _paraproduct(F, G, delta, part, pad):
    pairs = []
    for j in part.indices:
        low = F.coeffs * part.low_symbol(j - 1)
        pairs.append((low, G.coeffs * part.block_symbol(j)))
    return _product_sum(F.grid, pairs, delta, pad)


def _remainder(F, G, delta, part, pad):
    js = list(part.indices)
    pairs = []
    for j in js:
        near = sum(part.block_symbol(k) for k in (j - 1, j, j + 1) if part.j_min <= k <= part.j_max)
        pairs.append((F.coeffs * part.block_symbol(j), G.coeffs * near))
    return _product_sum(F.grid, pairs, delta, pad)


def bony_decompose(f, g, delta=0.0, pad_factor=1.5):
    """``fg = T_f g + T_g f + R(f, g)`` with every product dealiased.

    ``T_f g`` uses ``S_{j-1}`` including the mean, so a constant ``f = c`` gives
    ``T_f g = c g``; the product of the two means is booked in ``R``. With
    ``delta > 0`` the inputs are read as weighted fields and every output is the
    weighted counterpart, e.g. ``exp(delta Lambda_1) T_f g``.
    """
    _check_delta(delta)
    _check_pair(f, g)
    if pad_factor < 1.5:
        raise ValueError("products need 3/2 padding; an unpadded grid aliases and breaks the identity")
    grid = f.grid
    pad = padder_for(grid) if pad_factor == 1.5 else Padder(grid, pad_factor)
    part = build_partition(grid)
    t_fg = _paraproduct(f, g, delta, part, pad)
    t_gf = _paraproduct(g, f, delta, part, pad)
    r = _remainder(f, g, delta, part, pad)
    zero = (0,) * grid.d
    r[zero] += f.coeffs[zero] * g.coeffs[zero]
    full = _product_sum(grid, [(f.coeffs, g.coeffs)], delta, pad)
    diff = SpectralField(grid, full - t_fg - t_gf - r)
    return BonyParts(SpectralField(grid, t_fg), SpectralField(grid, t_gf), SpectralField(grid, r), diff.l2_norm())


# ---------------------------------------------------------------------------
# Power series and analytic composition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerSeries:
    """``sum_n coeffs[n] z^n`` with convergence radius ``radius`` (``inf`` for polynomials)."""

    coeffs: tuple
    radius: float = np.inf

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c:
            c = (0.0,)
        object.__setattr__(self, "coeffs", c)
        if not self.radius > 0:
            raise ValueError(f"convergence radius must be positive, got {self.radius}")

    @classmethod
    def polynomial(cls, coeffs):
        return cls(tuple(coeffs), np.inf)

    @classmethod
    def geometric(cls, n_terms=64):
        """``1 / (1 + z)``."""
        return cls(tuple((-1.0) ** n for n in range(n_terms)), 1.0)

    @classmethod
    def rational_i(cls, n_terms=64):
        """``z / (1 + z)``."""
        return cls((0.0,) + tuple((-1.0) ** n for n in range(n_terms - 1)), 1.0)

    @property
    def array(self):
        return np.asarray(self.coeffs)

    @property
    def n_terms(self):
        return len(self.coeffs)

    def __call__(self, z, truncation=None):
        c = self.coeffs if truncation is None else self.coeffs[: truncation + 1]
        z = np.asarray(z)
        acc = np.zeros_like(z, dtype=np.result_type(z, np.float64)) + c[-1]
        for a in reversed(c[:-1]):
            acc = acc * z + a
        return acc

    def derivative(self):
        c = self.array
        if c.size <= 1:
            return PowerSeries((0.0,), self.radius)
        return PowerSeries(tuple(c[1:] * np.arange(1, c.size)), self.radius)

    def __add__(self, other):
        n = max(self.n_terms, other.n_terms)
        c = np.zeros(n)
        c[: self.n_terms] += self.array
        c[: other.n_terms] += other.array
        return PowerSeries(tuple(c), min(self.radius, other.radius))

    def scaled(self, factor):
        return PowerSeries(tuple(factor * self.array), self.radius)

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scaled(other)
        c = np.convolve(self.array, other.array)
        if not (np.isinf(self.radius) and np.isinf(other.radius)):
            # truncated series stay at the longer of the two lengths
            c = c[: max(self.n_terms, other.n_terms)]
        return PowerSeries(tuple(c), min(self.radius, other.radius))

    def without_constant(self):
        return PowerSeries((0.0,) + self.coeffs[1:], self.radius)

    def rescaled_argument(self, factor):
        """Series of ``z -> F(factor z)``."""
        return PowerSeries(tuple(self.array * factor ** np.arange(self.n_terms)), self.radius / abs(factor))

    def tail_bound(self, r, truncation):
        """``|sum_{truncation < n} a_n r^n|`` over the stored coefficients."""
        c = self.array[truncation + 1 :]
        if c.size == 0:
            return 0.0
        n = np.arange(truncation + 1, self.n_terms)
        return float(abs(np.sum(c * r**n)))

    def abs_series(self):
        """``bar F(z) = sum_n |a_n| z^{n-1}`` (the majorant used for composition constants)."""
        return PowerSeries(tuple(np.abs(self.array[1:])), self.radius)


@dataclass
class Composition:
    value: SpectralField
    tail_bound: float
    sup_norm: float
    truncation: int


def _sup_norm(A, delta):
    if delta == 0:
        return float(np.max(np.abs(padder_for(A.grid).to_physical(A.coeffs))))
    damped = A.coeffs * np.exp(-delta * A.grid.xi_l1)
    return float(np.max(np.abs(padder_for(A.grid).to_physical(damped))))


def compose_analytic(F, a, truncation=12, delta=0.0, report=False):
    """``F(a)`` from the truncated series of ``F`` (``F(0) = 0``).

    ``delta = 0``: Horner pointwise on the 3/2-padded grid, then truncated back.
    ``delta > 0``: ``a`` is read as the weighted field ``A`` and the weighted
    ``exp(delta Lambda_1) F(a)`` is built by Horner with ``B_delta`` products.
    """
    _check_delta(delta)
    if truncation < 2:
        raise ValueError("composition needs at least 2 series terms")
    if F.coeffs[0] != 0.0:
        raise ValueError("composition requires F(0) = 0")
    if a.is_vector:
        raise ValueError("scalar field expected")
    sup = _sup_norm(a, delta)
    if not sup < F.radius:
        raise ValueError(
            f"density outside analyticity domain: sup|a| = {sup:.4g} >= convergence radius {F.radius:.4g}"
        )
    c = F.coeffs[: truncation + 1]
    grid = a.grid
    pad = padder_for(grid)
    if delta == 0:
        z = pad.to_physical(a.coeffs)
        out = pad.from_physical(F(z, truncation))
    else:
        h = np.zeros(grid.shape, dtype=np.complex128)
        zero = (0,) * grid.d
        h[zero] = c[-1]
        for coef in reversed(c[1:-1]):
            h = _product_sum(grid, [(a.coeffs, h)], delta, pad)
            h[zero] += coef
        out = _product_sum(grid, [(a.coeffs, h)], delta, pad)
    field_out = SpectralField(grid, out)
    if report:
        return Composition(field_out, F.tail_bound(sup, truncation), sup, truncation)
    return field_out


# ---------------------------------------------------------------------------
# Product-law catalogue
# ---------------------------------------------------------------------------


def _inv(p):
    return 0.0 if np.isinf(p) else 1.0 / p


def _need(cond, msg):
    if not cond:
        raise ValueError(msg)


def _open_range(name, p):
    _need(1 < p < np.inf, f"{name}={p} must satisfy 1 < {name} < inf")


def _holder(p, p1, p2, label="p"):
    _need(abs(_inv(p) - _inv(p1) - _inv(p2)) < 1e-12, f"1/{label} = 1/{label}1 + 1/{label}2 is violated by ({p}, {p1}, {p2})")


def _r_from(r1, r2):
    inv = _inv(r1) + _inv(r2)
    _need(inv <= 1 + 1e-12, f"1/r1 + 1/r2 = {inv} exceeds 1")
    return np.inf if inv == 0 else 1.0 / inv


def _p_star_range(p, d):
    upper = 4.0 if d <= 2 else min(4.0, 2.0 * d / (d - 2))
    _need(2 <= p <= upper, f"p={p} violates 2 <= p <= min(4, 2d/(d-2)) = {upper} for d={d}")


class _Ctx:
    """Per-trial cache of block norms and Bony parts."""

    def __init__(self, grid, delta, k0):
        self.grid = grid
        self.delta = delta
        self.part = build_partition(grid)
        self.k0 = k0
        self._blocks = {}

    def norm(self, key, f, sigma, p, r, restrict=None):
        bk = (key, p)
        if bk not in self._blocks:
            self._blocks[bk] = block_lp_norms(f, p, self.part)
        raw = self._blocks[bk]
        js = sorted(raw)
        if restrict == "low":
            js = [j for j in js if j <= self.k0]
        return aggregate([2.0 ** (j * sigma) * raw[j] for j in js], r)


@dataclass(frozen=True)
class ProductLaw:
    law_id: str
    description: str
    defaults: dict
    validate: object
    evaluate: object
    kind: str = "product"


def _bony(ctx, F, G):
    key = ("bony", id(F), id(G))
    hit = ctx._blocks.get(key)
    if hit is None:
        hit = ctx._blocks[key] = bony_decompose(F, G, ctx.delta)
    return hit


def _prod(ctx, F, G):
    key = ("prod", id(F), id(G))
    hit = ctx._blocks.get(key)
    if hit is None:
        hit = ctx._blocks[key] = gevrey_bilinear(F, G, ctx.delta)
    return hit


# -- validators ---------------------------------------------------------------


def _v_prop34(q, d):
    p = q["p"]
    _open_range("p", p)
    _need(q["s1"] <= d / p + 1e-12 and q["s2"] <= d / p + 1e-12, f"s1, s2 must be <= d/p = {d / p}")
    bound = d * max(0.0, -1.0 + 2.0 / p)
    _need(q["s1"] + q["s2"] > bound, f"s1 + s2 must exceed d max(0, -1 + 2/p) = {bound}")


def _v_sigma(q):
    _need(q["sigma"] > 0 or (q["sigma"] >= 0 and q["r1"] == 1), "need sigma > 0, or sigma >= 0 when r1 = 1")


def _v_pl1T(q, d):
    for k in ("p", "p1", "p2"):
        _open_range(k, q[k])
    _holder(q["p"], q["p1"], q["p2"])
    _r_from(q["r1"], q["r2"])
    _v_sigma(q)


def _v_pl1R(q, d):
    for k in ("p", "p1", "p2"):
        _open_range(k, q[k])
    _holder(q["p"], q["p1"], q["p2"])
    _r_from(q["r1"], q["r2"])
    _need(q["s1"] + q["s2"] > 0, "need s1 + s2 > 0")


def _v_pl2T(q, d):
    _open_range("p", q["p"])
    _open_range("q", q["q"])
    _r_from(q["r1"], q["r2"])
    _v_sigma(q)


def _v_pl2R(q, d):
    _open_range("p", q["p"])
    _open_range("q", q["q"])
    _r_from(q["r1"], q["r2"])
    _need(q["s1"] + q["s2"] > 0, "need s1 + s2 > 0")


def _v_pl3(q, d):
    _p_star_range(q["p"], d)


def _v_pl4(q, d):
    _need(d >= 2, "this remainder law needs d >= 2")
    _need(2 <= q["p"] <= 4, f"p={q['p']} must lie in [2, 4]")
    bound = d * (0.5 - 2.0 / q["p"])
    _need(q["s1"] + q["s2"] > bound, f"s1 + s2 must exceed d (1/2 - 2/p) = {bound}")


def _v_pl5(q, d):
    _p_star_range(q["p"], d)
    _need(q["p"] < 2 * d, f"p={q['p']} must satisfy p < 2d = {2 * d}")


def _v_prop36(q, d):
    _v_prop34({"p": q["p"], "s1": q["s1"], "s2": q["s2"]}, d)
    _need(abs(_inv(q["q"]) - _inv(q["q1"]) - _inv(q["q2"])) < 1e-12, "1/q = 1/q1 + 1/q2 is violated")
    for k in ("q", "q1", "q2"):
        _need(q[k] in (1, 2) or np.isinf(q[k]), f"{k} must be 1, 2 or inf")


def _v_compo(q, d):
    p = q["p"]
    _open_range("p", p)
    pp = p / (p - 1.0)
    lo = -min(d / p, d / pp)
    _need(lo < q["s"] <= d / p + 1e-12, f"s={q['s']} must lie in ({lo}, {d / p}]")
    _need(0 < q["size"], "size must be positive")


# -- evaluators ---------------------------------------------------------------


def _e_prop34(ctx, q, F, G):
    d, p = ctx.grid.d, q["p"]
    fg = _prod(ctx, F, G)
    lhs = ctx.norm("fg", fg, q["s1"] + q["s2"] - d / p, p, 1)
    return lhs, ctx.norm("F", F, q["s1"], p, 1) * ctx.norm("G", G, q["s2"], p, 1)


def _e_pl1T(ctx, q, F, G):
    r = _r_from(q["r1"], q["r2"])
    t = _bony(ctx, F, G).T_fg
    lhs = ctx.norm("T", t, q["s"] - q["sigma"], q["p"], r)
    return lhs, ctx.norm("F", F, -q["sigma"], q["p1"], q["r1"]) * ctx.norm("G", G, q["s"], q["p2"], q["r2"])


def _e_pl1R(ctx, q, F, G):
    r = _r_from(q["r1"], q["r2"])
    rr = _bony(ctx, F, G).R_fg
    lhs = ctx.norm("R", rr, q["s1"] + q["s2"], q["p"], r)
    return lhs, ctx.norm("F", F, q["s1"], q["p1"], q["r1"]) * ctx.norm("G", G, q["s2"], q["p2"], q["r2"])


def _e_pl2T(ctx, q, F, G):
    d = ctx.grid.d
    r = _r_from(q["r1"], q["r2"])
    t = _bony(ctx, F, G).T_fg
    lhs = ctx.norm("T", t, q["s"] - q["sigma"], q["p"], r)
    return lhs, ctx.norm("F", F, d / q["q"] - q["sigma"], q["q"], q["r1"]) * ctx.norm("G", G, q["s"], q["p"], q["r2"])


def _e_pl2R(ctx, q, F, G):
    d = ctx.grid.d
    r = _r_from(q["r1"], q["r2"])
    rr = _bony(ctx, F, G).R_fg
    lhs = ctx.norm("R", rr, q["s1"] + q["s2"], q["p"], r)
    return lhs, ctx.norm("F", F, q["s1"] + d / q["q"], q["q"], q["r1"]) * ctx.norm("G", G, q["s2"], q["p"], q["r2"])


def _e_pl3(ctx, q, F, G):
    d, p, s = ctx.grid.d, q["p"], q["s"]
    t = _bony(ctx, F, G).T_fg
    lhs = ctx.norm("T", t, s, 2, 1)
    return lhs, ctx.norm("F", F, d / p - 1, p, 1) * ctx.norm("G", G, s + 1 - d / 2 + d / p, p, 1)


def _e_pl4(ctx, q, F, G):
    d, p = ctx.grid.d, q["p"]
    rr = _bony(ctx, F, G).R_fg
    lhs = ctx.norm("R", rr, q["s1"] + q["s2"], 2, 1)
    return lhs, ctx.norm("F", F, q["s1"] + d * (2 / p - 0.5), p, 1) * ctx.norm("G", G, q["s2"], p, 1)


def _e_pl5(which):
    def ev(ctx, q, F, G):
        d, p = ctx.grid.d, q["p"]
        fg = _prod(ctx, F, G)

        def n(key, f, s):
            return ctx.norm(key, f, s, p, 1)

        if which == 1:
            lhs = ctx.norm("fg2", fg, d / 2, 2, 1, restrict="low")
            rhs = n("F", F, d / p - 1) * n("G", G, d / p + 1) + n("F", F, d / p + 1) * n("G", G, d / p - 1)
        elif which == 2:
            lhs = ctx.norm("fg2", fg, d / 2 - 1, 2, 1, restrict="low")
            rhs = n("F", F, d / p - 1) * n("G", G, d / p) + n("F", F, d / p) * n("G", G, d / p - 1)
        else:
            lhs = ctx.norm("fg2", fg, d / 2 - 1, 2, 1, restrict="low")
            rhs = (n("F", F, d / p - 1) + n("F", F, d / p)) * n("G", G, d / p - 1)
        return lhs, rhs

    return ev


def _e_prop36(ctx, q, F, G):
    """Fields evolved by the heat flow on ``[0, T]``; per-block time norms before the l^1 sum."""
    from .littlewood_paley import chemin_lerner_from_blocks

    d, p = ctx.grid.d, q["p"]
    times = np.linspace(0.0, q["T"], 9)
    xi2 = ctx.grid.xi_abs**2
    part = ctx.part
    sF, sG, sFG = [], [], []
    for t in times:
        Ft = SpectralField(ctx.grid, F.coeffs * np.exp(-t * xi2))
        Gt = SpectralField(ctx.grid, G.coeffs * np.exp(-0.5 * t * xi2))
        sF.append(block_lp_norms(Ft, p, part))
        sG.append(block_lp_norms(Gt, p, part))
        sFG.append(block_lp_norms(gevrey_bilinear(Ft, Gt, ctx.delta), p, part))
    sigma = q["s1"] + q["s2"] - d / p
    lhs = chemin_lerner_from_blocks(times, sFG, q["q"], BesovSpec(sigma, p, 1))
    rhs = chemin_lerner_from_blocks(times, sF, q["q1"], BesovSpec(q["s1"], p, 1)) * chemin_lerner_from_blocks(
        times, sG, q["q2"], BesovSpec(q["s2"], p, 1)
    )
    return lhs, rhs


def _scale_to(ctx, Z, p, size):
    n = ctx.norm(("scale", id(Z)), Z, ctx.grid.d / p, p, 1)
    return Z * (size / n)


def _e_compo(ctx, q, F, G):
    p, s = q["p"], q["s"]
    Z = _scale_to(ctx, F, p, q["size"])
    FZ = compose_analytic(q["F"], Z, q["truncation"], ctx.delta)
    return ctx.norm("FZ", FZ, s, p, 1), ctx.norm("Z", Z, s, p, 1)


def _e_compo2(ctx, q, F, G):
    p, s = q["p"], q["s"]
    Z1 = _scale_to(ctx, F, p, q["size"])
    Z2 = Z1 + _scale_to(ctx, G, p, q["size"] * q["gap"])
    series = q["F"]
    diff = compose_analytic(series, Z2, q["truncation"], ctx.delta) - compose_analytic(series, Z1, q["truncation"], ctx.delta)
    return ctx.norm("dF", diff, s, p, 1), ctx.norm("dZ", Z2 - Z1, s, p, 1)


def _catalogue():
    inf = np.inf
    i_series = PowerSeries.rational_i(40)
    laws = [
        ProductLaw("prop3.4", "exp(dL1)(fg) in B^{s1+s2-d/p}_{p,1} <= C |F|_{B^{s1}_{p,1}} |G|_{B^{s2}_{p,1}}",
                   {"p": 2.0, "s1": None, "s2": None}, _v_prop34, _e_prop34),
        ProductLaw("prop3.6", "Chemin-Lerner product law over a heat-flow time slab",
                   {"p": 2.0, "s1": None, "s2": None, "q": 1.0, "q1": inf, "q2": 1.0, "T": 0.5}, _v_prop36, _e_prop36),
        ProductLaw("prodlaws1.T", "exp(dL1) T_f g in B^{s-sigma}_{p,r} <= C |F|_{B^{-sigma}_{p1,r1}} |G|_{B^s_{p2,r2}}",
                   {"s": 1.0, "sigma": 0.0, "p": 2.0, "p1": 4.0, "p2": 4.0, "r1": 1.0, "r2": inf}, _v_pl1T, _e_pl1T),
        ProductLaw("prodlaws1.R", "exp(dL1) R(f,g) in B^{s1+s2}_{p,r} <= C |F|_{B^{s1}_{p1,r1}} |G|_{B^{s2}_{p2,r2}}",
                   {"s1": 0.5, "s2": 0.5, "p": 2.0, "p1": 4.0, "p2": 4.0, "r1": 1.0, "r2": inf}, _v_pl1R, _e_pl1R),
        ProductLaw("prodlaws2.T", "exp(dL1) T_f g in B^{s-sigma}_{p,r} <= C |F|_{B^{d/q-sigma}_{q,r1}} |G|_{B^s_{p,r2}}",
                   {"s": 1.0, "sigma": 0.0, "p": 2.0, "q": 2.0, "r1": 1.0, "r2": inf}, _v_pl2T, _e_pl2T),
        ProductLaw("prodlaws2.R", "exp(dL1) R(f,g) in B^{s1+s2}_{p,r} <= C |F|_{B^{s1+d/q}_{q,r1}} |G|_{B^{s2}_{p,r2}}",
                   {"s1": 0.5, "s2": 0.5, "p": 2.0, "q": 2.0, "r1": 1.0, "r2": inf}, _v_pl2R, _e_pl2R),
        ProductLaw("prodlaws3", "exp(dL1) T_f g in B^s_{2,1} <= C |F|_{B^{d/p-1}_{p,1}} |G|_{B^{s+1-d/2+d/p}_{p,1}}",
                   {"p": 2.0, "s": 0.0}, _v_pl3, _e_pl3),
        ProductLaw("prodlaws4", "exp(dL1) R(f,g) in B^{s1+s2}_{2,1} <= C |F|_{B^{s1+d(2/p-1/2)}_{p,1}} |G|_{B^{s2}_{p,1}}",
                   {"p": 2.0, "s1": 0.5, "s2": 0.5}, _v_pl4, _e_pl4),
        ProductLaw("prodlaws5.1", "low part of exp(dL1)(fg) in B^{d/2}_{2,1}", {"p": 2.0}, _v_pl5, _e_pl5(1)),
        ProductLaw("prodlaws5.2", "low part of exp(dL1)(fg) in B^{d/2-1}_{2,1}", {"p": 2.0}, _v_pl5, _e_pl5(2)),
        ProductLaw("prodlaws5.3", "low part of exp(dL1)(fg) in B^{d/2-1}_{2,1}, one-sided", {"p": 2.0}, _v_pl5, _e_pl5(3)),
        ProductLaw("compo", "|exp(dL1) F(z)|_{B^s_{p,1}} <= D |Z|_{B^s_{p,1}} for small Z",
                   {"p": 2.0, "s": None, "size": 0.2, "F": i_series, "truncation": 24}, _v_compo, _e_compo, "composition"),
        ProductLaw("compo2", "|exp(dL1)(F(z2)-F(z1))|_{B^s_{p,1}} <= D |Z2-Z1|_{B^s_{p,1}}",
                   {"p": 2.0, "s": None, "size": 0.2, "gap": 0.3, "F": i_series, "truncation": 24}, _v_compo, _e_compo2, "composition"),
    ]
    return {law.law_id: law for law in laws}


LAWS = _catalogue()


def law_ids():
    return list(LAWS)


def resolve_params(law_id, d, params=None):
    """Defaults filled in (``None`` defaults become ``d/p``) and hypotheses checked."""
    if law_id not in LAWS:
        raise ValueError(f"unknown law {law_id!r}; known: {', '.join(LAWS)}")
    law = LAWS[law_id]
    q = dict(law.defaults)
    for k, v in (params or {}).items():
        if k not in q:
            raise ValueError(f"law {law_id} has no parameter {k!r}")
        q[k] = v
    for k, v in q.items():
        if v is None:
            q[k] = d / q["p"]
    law.validate(q, d)
    return q


@dataclass
class ConstantReport:
    law_id: str
    trials: int
    measured_C: float
    summary: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    delta: float = 0.0
    seed: int = 0

    def to_json(self):
        def clean(v):
            if isinstance(v, PowerSeries):
                return {"coeffs": list(v.coeffs[:8]), "radius": v.radius}
            if isinstance(v, float) and np.isinf(v):
                return "inf"
            return v

        d = asdict(self)
        d["params"] = {k: clean(v) for k, v in self.params.items()}
        return json.dumps(d, indent=2, sort_keys=True)


def _trial_fields(grid, seed):
    """Random smooth pair with random spectral slopes and decay rates."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        gamma = rng.uniform(1.0, 3.0)
        xi_c = grid.k0 * grid.N * rng.uniform(0.03, 0.12)
        out.append(random_field(grid, rng, gamma=gamma, xi_c=xi_c))
    return out


def _run_trial(law, q, grid, seed, delta, k0, base_grid):
    F, G = _trial_fields(base_grid, seed)
    if grid != base_grid:
        F, G = embed(F, grid), embed(G, grid)
    ctx = _Ctx(grid, delta, k0)
    lhs, rhs = law.evaluate(ctx, q, F, G)
    if not (np.isfinite(lhs) and np.isfinite(rhs)) or rhs <= 0:
        raise FloatingPointError(f"law {law.law_id}: non-finite or degenerate norms ({lhs}, {rhs})")
    return lhs / rhs


def measure_product_constant(law_id, trials, grid, delta=0.0, params=None, seed=0, k0=1, base_grid=None, workers=None):
    """Max over random trials of left side / right side for a catalogued law.

    ``base_grid`` (defaults to ``grid``) is where the random pair is drawn; it is
    then embedded into ``grid``, which makes refinement studies compare the same functions.
    """
    _check_delta(delta)
    q = resolve_params(law_id, grid.d, params)
    law = LAWS[law_id]
    base = base_grid or grid
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]
    nw = workers or min(thread_count(), 8)
    if nw > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            ratios = list(ex.map(lambda s: _run_trial(law, q, grid, s, delta, k0, base), seeds))
    else:
        ratios = [_run_trial(law, q, grid, s, delta, k0, base) for s in seeds]
    r = np.asarray(ratios)
    summary = {
        "min": float(r.min()),
        "median": float(np.median(r)),
        "mean": float(r.mean()),
        "q90": float(np.quantile(r, 0.9)),
        "max": float(r.max()),
    }
    return ConstantReport(
        law_id=law_id,
        trials=trials,
        measured_C=float(r.max()),
        summary=summary,
        params=q,
        grid={"d": grid.d, "N": grid.N, "L": grid.L},
        delta=float(delta),
        seed=int(seed),
    )


def bilinear_lp_constant(grid, deltas=(0.0, 0.5, 2.0, 10.0), trials=100, p=2.0, p1=4.0, p2=4.0, seed=0, base_grid=None):
    """``max ||B_delta(F, G)||_p / (||F||_p1 ||G||_p2)`` per delta over random pairs."""
    _holder(p, p1, p2)
    base = base_grid or grid
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]
    out = {}
    for delta in deltas:
        worst = 0.0
        for s in seeds:
            F, G = _trial_fields(base, s)
            if grid != base:
                F, G = embed(F, grid), embed(G, grid)
            b = gevrey_bilinear(F, G, delta)
            num = lp_norm(b.to_physical(), grid, p)
            den = lp_norm(F.to_physical(), grid, p1) * lp_norm(G.to_physical(), grid, p2)
            worst = max(worst, num / den)
        out[float(delta)] = worst
    return out


__all__ = [
    "BonyParts",
    "Composition",
    "ConstantReport",
    "LAWS",
    "PowerSeries",
    "ProductLaw",
    "bilinear_lp_constant",
    "bony_decompose",
    "compose_analytic",
    "gevrey_bilinear",
    "gevrey_bilinear_naive",
    "gevrey_weight_factor",
    "law_ids",
    "measure_product_constant",
    "resolve_params",
]
