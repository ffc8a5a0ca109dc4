"""Nonlinear NSK simulator in normalised variables.

The state ``(a, u)`` with ``a = rho - 1`` solves

    d_t a + div u = f
    d_t u - A u + grad a - kappa grad Lap a = g

and is advanced by an integrating-factor (Lawson) RK4 whose linear part is the
exact semigroup from ``linear_lab``. In Gevrey-weighted mode the evolved
variable is ``Y = exp(sqrt(c0 t) Lambda_1) y`` and every product in the
nonlinear terms is a stable weighted product ``B_delta``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bony_calculus import PowerSeries, _orthant_tables
from .gevrey_decay import estimate_radius
from .linear_lab import LinearParams, LinearPropagator, decay_constants
from .littlewood_paley import (
    block_lp_norms,
    build_partition,
    validate_theorem_exponent,
)
from .spectral_core import Grid, SpectralField, State, forward, padder_for, random_field

BLOWUP = 1e6


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParameters:
    """Coefficient functions as series in ``rho - rho_bar``; references are their values at ``rho_bar``."""

    rho_bar: float
    mu: PowerSeries
    lam: PowerSeries
    kappa: PowerSeries
    pressure: PowerSeries

    @property
    def mu_ref(self):
        return self.mu.coeffs[0]

    @property
    def lam_ref(self):
        return self.lam.coeffs[0]

    @property
    def kappa_ref(self):
        return self.kappa.coeffs[0]

    @property
    def p_ref(self):
        return self.pressure.coeffs[1] if self.pressure.n_terms > 1 else 0.0


@dataclass(frozen=True)
class ScalingMaps:
    """``t_phys = T t``, ``x_phys = X x``, ``rho_phys = rho_bar rho``, ``u_phys = U u``."""

    rho_bar: float
    nu_bar: float
    p_bar: float

    @property
    def T(self):
        return self.nu_bar / (self.rho_bar * self.p_bar)

    @property
    def X(self):
        return self.nu_bar / (self.rho_bar * math.sqrt(self.p_bar))

    @property
    def U(self):
        return math.sqrt(self.p_bar)

    def time_to_physical(self, t):
        return self.T * np.asarray(t)

    def time_to_normalized(self, t):
        return np.asarray(t) / self.T

    def length_to_physical(self, x):
        return self.X * np.asarray(x)

    def length_to_normalized(self, x):
        return np.asarray(x) / self.X

    def density_to_physical(self, rho):
        return self.rho_bar * np.asarray(rho)

    def density_to_normalized(self, rho):
        return np.asarray(rho) / self.rho_bar

    def velocity_to_physical(self, u):
        return self.U * np.asarray(u)

    def velocity_to_normalized(self, u):
        return np.asarray(u) / self.U


def _rescale_series(s, rho_bar, divisor):
    """Series in ``rho - rho_bar`` to a series in ``a`` with ``rho = rho_bar (1 + a)``, divided by ``divisor``."""
    return PowerSeries(tuple(s.array * rho_bar ** np.arange(s.n_terms) / divisor), s.radius / rho_bar)


def _unscale_series(s, rho_bar, factor):
    return PowerSeries(tuple(s.array * factor / rho_bar ** np.arange(s.n_terms)), s.radius * rho_bar)


@dataclass(frozen=True)
class CoefficientModel:
    """Normalised coefficient functions as series in ``a``; ``mu(0)=lam(0)=kappa(0)=P'(0)=1``.

    ``active=False`` switches the whole nonlinearity off (pure linear dynamics).
    """

    mu: PowerSeries = PowerSeries((1.0,))
    lam: PowerSeries = PowerSeries((1.0,))
    kappa: PowerSeries = PowerSeries((1.0,))
    pressure: PowerSeries = PowerSeries((0.0, 1.0))
    truncation: int = 12
    active: bool = True
    n_terms: int = 48

    def __post_init__(self):
        for name, s, at in (("mu", self.mu, 0), ("lambda", self.lam, 0), ("kappa", self.kappa, 0)):
            if abs(s.coeffs[0] - 1.0) > 1e-12:
                raise ValueError(f"normalised {name} must equal 1 at rho = 1, got {s.coeffs[0]}")
        if self.pressure.n_terms < 2 or abs(self.pressure.coeffs[1] - 1.0) > 1e-12:
            raise ValueError("normalised pressure must satisfy P'(1) = 1")
        if self.truncation < 2:
            raise ValueError("series truncation must be >= 2")

    @classmethod
    def linear(cls):
        return cls(active=False)

    def _pad(self, s):
        c = np.zeros(max(self.n_terms, s.n_terms))
        c[: s.n_terms] = s.array
        return PowerSeries(tuple(c), s.radius)

    @property
    def mu_t(self):
        return self.mu.without_constant()

    @property
    def lam_t(self):
        return self.lam.without_constant()

    @property
    def kappa_t(self):
        return self.kappa.without_constant()

    @property
    def kappa_t_prime(self):
        return self.kappa.derivative()

    @property
    def I(self):  # noqa: E743 - matches the notation of the equations
        return PowerSeries.rational_i(self.n_terms)

    @property
    def J(self):
        """``1 - P'(1+a)/(1+a)``."""
        ratio = self._pad(self.pressure.derivative()) * PowerSeries.geometric(self.n_terms)
        return (PowerSeries((1.0,)) + ratio.scaled(-1.0)).without_constant()

    def series(self):
        return {
            "I": self.I,
            "J": self.J,
            "mu_t": self.mu_t,
            "lam_t": self.lam_t,
            "kappa_t": self.kappa_t,
            "kappa_t_prime": self.kappa_t_prime,
        }


def normalize(raw):
    """Return ``(LinearParams, CoefficientModel, ScalingMaps)`` for physical input."""
    rho_bar = float(raw.rho_bar)
    if not rho_bar > 0:
        raise ValueError(f"reference density must be positive, got {rho_bar}")
    mu_ref, lam_ref, kappa_ref, p_ref = raw.mu_ref, raw.lam_ref, raw.kappa_ref, raw.p_ref
    if not p_ref > 0:
        raise ValueError(f"P'(rho_bar) = {p_ref} <= 0: the pressure law is not hyperbolic at the reference state")
    if not mu_ref > 0:
        raise ValueError(f"shear viscosity must be positive at rho_bar, got {mu_ref}")
    nu = 2.0 * mu_ref + lam_ref
    if not nu > 0:
        raise ValueError(f"nu = 2 mu + lambda must be positive, got {nu}")
    if not kappa_ref > 0:
        raise ValueError(f"capillarity must be positive at rho_bar, got {kappa_ref}")
    params = LinearParams(kappa_bar=kappa_ref * rho_bar**2 / nu**2, mu_bar=mu_ref / nu, lambda_bar=lam_ref / nu)
    if lam_ref == 0:
        if np.any(raw.lam.array != 0):
            raise ValueError("lambda vanishes at rho_bar but not identically; no unit normalisation exists")
        lam = PowerSeries((1.0,))
    else:
        lam = _rescale_series(raw.lam, rho_bar, lam_ref)
    model = CoefficientModel(
        mu=_rescale_series(raw.mu, rho_bar, mu_ref),
        lam=lam,
        kappa=_rescale_series(raw.kappa, rho_bar, kappa_ref),
        pressure=_rescale_series(raw.pressure, rho_bar, rho_bar * p_ref),
    )
    return params, model, ScalingMaps(rho_bar, nu, p_ref)


def denormalize(params, model, maps):
    nu, rho_bar = maps.nu_bar, maps.rho_bar
    mu_ref = params.mu_bar * nu
    lam_ref = params.lambda_bar * nu
    kappa_ref = params.kappa_bar * nu**2 / rho_bar**2
    lam = PowerSeries((0.0,)) if lam_ref == 0 else _unscale_series(model.lam, rho_bar, lam_ref)
    return PhysicalParameters(
        rho_bar=rho_bar,
        mu=_unscale_series(model.mu, rho_bar, mu_ref),
        lam=lam,
        kappa=_unscale_series(model.kappa, rho_bar, kappa_ref),
        pressure=_unscale_series(model.pressure, rho_bar, rho_bar * maps.p_bar),
    )


# ---------------------------------------------------------------------------
# Product engine: plain dealiased products, or weighted B_delta products
# ---------------------------------------------------------------------------


class ProductEngine:
    """Lifts coefficient arrays to the padded grid (per orthant when ``delta > 0``) and multiplies there."""

    def __init__(self, grid, delta=0.0):
        self.grid = grid
        self.delta = float(delta)
        self.pad = padder_for(grid)
        self.tables = None if self.delta == 0 else _orthant_tables(grid, self.delta)

    def lift(self, c):
        if self.tables is None:
            return [self.pad.to_physical(c)]
        return [self.pad.to_physical(c * damp) for damp, _ in self.tables]

    def lower(self, parts):
        if self.tables is None:
            return self.pad.from_physical(parts[0])
        out = np.zeros(self.grid.shape, dtype=np.complex128)
        for p, (_, mask) in zip(parts, self.tables):
            out += np.where(mask, self.pad.from_physical(p), 0.0)
        return out

    def mul(self, x, y):
        """Product of two lifted fields, returned as coefficients."""
        return self.lower([a * b for a, b in zip(x, y)])

    def dot(self, xs, ys):
        """``sum_i x_i y_i`` of lifted fields in one lowering."""
        parts = [sum(a[k] * b[k] for a, b in zip(xs, ys)) for k in range(len(xs[0]))]
        return self.lower(parts)

    def sup_unweighted(self, c):
        damped = c if self.delta == 0 else c * np.exp(-self.delta * self.grid.xi_l1)
        return float(np.max(np.abs(self.pad.to_physical(damped))))

    def compose(self, series, c, truncation, lifted=None):
        """``series(a)`` as coefficients (weighted when ``delta > 0``); constant terms land on the mean."""
        coeffs = series.coeffs[: truncation + 1]
        zero = (0,) * self.grid.d
        if all(x == 0.0 for x in coeffs[1:]):
            out = np.zeros(self.grid.shape, dtype=np.complex128)
            out[zero] = coeffs[0]
            return out
        if self.tables is None:
            z = lifted[0] if lifted is not None else self.pad.to_physical(c)
            return self.pad.from_physical(series(z, truncation))
        a_l = lifted if lifted is not None else self.lift(c)
        h = np.zeros(self.grid.shape, dtype=np.complex128)
        h[zero] = coeffs[-1]
        for coef in reversed(coeffs[1:-1]):
            h = self.mul(a_l, self.lift(h))
            h[zero] += coef
        out = self.mul(a_l, self.lift(h))
        out[zero] += coeffs[0]
        return out


# ---------------------------------------------------------------------------
# Nonlinear terms
# ---------------------------------------------------------------------------


@dataclass
class NonlinearTerms:
    f: SpectralField
    g: SpectralField
    parts: dict


def _check_radius(model, sup):
    radius = min(model.I.radius, model.J.radius, model.mu.radius, model.lam.radius, model.kappa.radius)
    if not sup < radius:
        raise ValueError(
            f"density out of analyticity domain: sup|a| = {sup:.4g} >= composition radius {radius:.4g}"
        )


def _nonlinear_coeffs(y, grid, params, model, engine):
    """``(f, g, parts)`` as coefficient arrays for stacked ``y = [a, u]``."""
    d = grid.d
    a, u = y[0], y[1:]
    xi = grid.xi
    D = 1j * xi  # D[i] = d/dx_i symbol
    xi2 = grid.xi_abs**2
    mu, lam, kap = params.mu_bar, params.lambda_bar, params.kappa_bar
    zeros = np.zeros((d,) + grid.shape, dtype=np.complex128)
    if not model.active:
        return np.zeros(grid.shape, dtype=np.complex128), zeros, {f"g{k}": zeros for k in range(1, 6)}

    _check_radius(model, engine.sup_unweighted(a))
    M = model.truncation
    ser = model.series()

    a_l = engine.lift(a)
    u_l = [engine.lift(u[i]) for i in range(d)]
    grad_a = D * a[None]
    grad_a_l = [engine.lift(grad_a[i]) for i in range(d)]
    lap_a = -xi2 * a
    div_u = np.sum(D * u, axis=0)

    # f = -div(a u)
    au = np.stack([engine.mul(a_l, u_l[i]) for i in range(d)])
    f = -np.sum(D * au, axis=0)

    # g1 = -u . grad u
    du_l = [[engine.lift(D[j] * u[i]) for j in range(d)] for i in range(d)]
    g1 = np.stack([-engine.dot(u_l, du_l[i]) for i in range(d)])

    I_c = engine.compose(ser["I"], a, M, a_l)
    I_l = engine.lift(I_c)

    # g2 = (1 - I)(2 mu div(mu_t Du) + lam grad(lam_t div u))
    mu_t = engine.compose(ser["mu_t"], a, M, a_l)
    lam_t = engine.compose(ser["lam_t"], a, M, a_l)
    inner = np.zeros_like(zeros)
    if np.any(mu_t != 0):
        mu_t_l = engine.lift(mu_t)
        for i in range(d):
            acc = np.zeros(grid.shape, dtype=np.complex128)
            for j in range(d):
                sym = 0.5 * (D[j] * u[i] + D[i] * u[j])
                acc += D[j] * engine.mul(mu_t_l, engine.lift(sym))
            inner[i] += 2.0 * mu * acc
    if lam != 0 and np.any(lam_t != 0):
        lt_div = engine.mul(engine.lift(lam_t), engine.lift(div_u))
        inner += lam * D * lt_div[None]
    if np.any(inner != 0):
        g2 = np.stack([inner[i] - engine.mul(I_l, engine.lift(inner[i])) for i in range(d)])
    else:
        g2 = zeros.copy()

    # g3 = -I A u with A u = mu Lap u + (mu + lam) grad div u
    Au = -mu * xi2[None] * u + (mu + lam) * D * div_u[None]
    g3 = np.stack([-engine.mul(I_l, engine.lift(Au[i])) for i in range(d)])

    # g4 = J grad a
    J_c = engine.compose(ser["J"], a, M, a_l)
    if np.any(J_c != 0):
        J_l = engine.lift(J_c)
        g4 = np.stack([engine.mul(J_l, grad_a_l[i]) for i in range(d)])
    else:
        g4 = zeros.copy()

    # g5 = kappa grad(kappa_t Lap a + 1/2 kappa_t' |grad a|^2)
    kt = engine.compose(ser["kappa_t"], a, M, a_l)
    ktp = engine.compose(ser["kappa_t_prime"], a, M, a_l)
    if np.any(kt != 0) or np.any(ktp != 0):
        w = engine.mul(engine.lift(kt), engine.lift(lap_a))
        if np.any(ktp != 0):
            q = engine.dot(grad_a_l, grad_a_l)
            w = w + 0.5 * engine.mul(engine.lift(ktp), engine.lift(q))
        g5 = kap * D * w[None]
    else:
        g5 = zeros.copy()

    parts = {"g1": g1, "g2": g2, "g3": g3, "g4": g4, "g5": g5}
    return f, g1 + g2 + g3 + g4 + g5, parts


def nonlinear_rhs(state, params, model, delta=0.0):
    """``f`` and ``g = g1 + ... + g5``; with ``delta > 0`` the input is weighted and so are the outputs."""
    grid = state.grid
    f, g, parts = _nonlinear_coeffs(state.stacked(), grid, params, model, ProductEngine(grid, delta))
    return NonlinearTerms(
        SpectralField(grid, f),
        SpectralField(grid, g),
        {k: SpectralField(grid, v) for k, v in parts.items()},
    )


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


def gevrey_delta(c0, t):
    return math.sqrt(c0 * t) if c0 > 0 else 0.0


def step_certificate(grid, params, c0, t, h):
    """``max_xi [(delta(t+h) - delta(t)) |xi|_1 - c1 |xi|^2 h]`` and its bound ``c0 d / (4 c1)``."""
    c1, _ = decay_constants(params.kappa_bar)
    dd = gevrey_delta(c0, t + h) - gevrey_delta(c0, t)
    val = float(np.max(dd * grid.xi_l1 - c1 * grid.xi_abs**2 * h))
    return val, c0 * grid.d / (4.0 * c1)


class Stepper:
    """Lawson RK4 on the stacked spectral array; ``mode`` is ``plain`` or ``gevrey_weighted``."""

    def __init__(self, grid, params, model, mode="plain", c0=0.0):
        if mode not in ("plain", "gevrey_weighted"):
            raise ValueError(f"unknown stepping mode {mode!r}")
        c1, _ = decay_constants(params.kappa_bar)
        if mode == "gevrey_weighted" and c0 > c1 / grid.d * (1 + 1e-12):
            raise ValueError(f"c0 = {c0} exceeds c1/d = {c1 / grid.d}")
        self.grid = grid
        self.params = params
        self.model = model
        self.mode = mode
        self.c0 = float(c0) if mode == "gevrey_weighted" else 0.0
        self.prop = LinearPropagator(grid, params)
        self._engines = {}

    def _engine(self, t):
        delta = gevrey_delta(self.c0, t)
        e = self._engines.get(delta)
        if e is None:
            if len(self._engines) > 8:
                self._engines.clear()
            e = self._engines[delta] = ProductEngine(self.grid, delta)
        return e

    def E(self, y, t2, t1):
        out = self.prop.apply(y, t2 - t1)
        if self.c0 > 0:
            out = out * np.exp((gevrey_delta(self.c0, t2) - gevrey_delta(self.c0, t1)) * self.grid.xi_l1)[None]
        return out

    def N(self, y, t):
        f, g, _ = _nonlinear_coeffs(y, self.grid, self.params, self.model, self._engine(t))
        return np.concatenate([f[None], g], axis=0)

    def step(self, y, t, h):
        if not h > 0:
            raise ValueError("time step must be positive")
        if self.c0 > 0:
            val, bound = step_certificate(self.grid, self.params, self.c0, t, h)
            if val > bound * (1 + 1e-9) + 1e-14:
                raise RuntimeError(f"Gevrey growth certificate violated: {val} > {bound}")
        if not self.model.active:
            return self.E(y, t + h, t)
        th, t1 = t + 0.5 * h, t + h
        k1 = self.N(y, t)
        k2 = self.N(self.E(y + 0.5 * h * k1, th, t), th)
        k3 = self.N(self.E(y, th, t) + 0.5 * h * k2, th)
        k4 = self.N(self.E(y, t1, t) + h * self.E(k3, t1, th), t1)
        return self.E(y + (h / 6.0) * k1, t1, t) + (h / 3.0) * self.E(k2 + k3, t1, th) + (h / 6.0) * k4

    def unweight(self, y, t):
        if self.c0 == 0:
            return y
        return y * np.exp(-gevrey_delta(self.c0, t) * self.grid.xi_l1)[None]

    def weight(self, y, t):
        if self.c0 == 0:
            return y
        return y * np.exp(gevrey_delta(self.c0, t) * self.grid.xi_l1)[None]


def step(state, dt, params, model, mode="plain", c0=0.0, t=0.0):
    """One IFRK4 step from time ``t``. In Gevrey mode ``state`` holds the weighted variables."""
    st = Stepper(state.grid, params, model, mode, c0)
    return State.from_stacked(state.grid, st.step(state.stacked(), t, dt))


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticSpec:
    p: float = 2.0
    k0: int = 0
    radius: bool = True

    def validated(self, d):
        validate_theorem_exponent(self.p, d)
        return self


def _low(blocks, sigma, k0):
    return sum(2.0 ** (j * sigma) * v for j, v in blocks.items() if j <= k0)


def _high(blocks, sigma, k0):
    return sum(2.0 ** (j * sigma) * v for j, v in blocks.items() if j >= k0 - 1)


def _block_set(state, p):
    part = build_partition(state.grid)
    out = {"a2": block_lp_norms(state.a, 2, part), "u2": block_lp_norms(state.u, 2, part)}
    if p == 2:
        out["ap"], out["up"] = out["a2"], out["u2"]
    else:
        out["ap"] = block_lp_norms(state.a, p, part)
        out["up"] = block_lp_norms(state.u, p, part)
    return out


def data_smallness(state, spec=DiagnosticSpec()):
    """``X_{p,0} = |(a,u)|^l_{B^{d/2-1}_{2,1}} + |a|^h_{B^{d/p}_{p,1}} + |u|^h_{B^{d/p-1}_{p,1}}``."""
    d = state.grid.d
    spec.validated(d)
    b = _block_set(state, spec.p)
    s_low = d / 2 - 1
    low = _low(b["a2"], s_low, spec.k0) + _low(b["u2"], s_low, spec.k0)
    high = _high(b["ap"], d / spec.p, spec.k0) + _high(b["up"], d / spec.p - 1, spec.k0)
    return float(low + high)


class XpAccumulator:
    """Running ``X_p(t)``: per-block running max (sup in time) and trapezoid integrals (L^1 in time)."""

    def __init__(self, d, spec):
        self.d = d
        self.spec = spec
        self.t = None
        self.prev = None
        self.sup = {}
        self.int = {}

    def _terms(self, b):
        d, p = self.d, self.spec.p
        return {
            ("a2", d / 2 - 1, "sup", "low"): b["a2"],
            ("u2", d / 2 - 1, "sup", "low"): b["u2"],
            ("a2", d / 2 + 1, "int", "low"): b["a2"],
            ("u2", d / 2 + 1, "int", "low"): b["u2"],
            ("ap", d / p, "sup", "high"): b["ap"],
            ("ap", d / p + 2, "int", "high"): b["ap"],
            ("up", d / p - 1, "sup", "high"): b["up"],
            ("up", d / p + 1, "int", "high"): b["up"],
        }

    def add(self, t, blocks):
        terms = self._terms(blocks)
        for key, vals in terms.items():
            kind = key[2]
            if kind == "sup":
                cur = self.sup.setdefault(key, {})
                for j, v in vals.items():
                    cur[j] = max(cur.get(j, 0.0), v)
            else:
                cur = self.int.setdefault(key, {})
                if self.prev is not None:
                    dt = t - self.t
                    for j, v in vals.items():
                        cur[j] = cur.get(j, 0.0) + 0.5 * dt * (v + self.prev[key][j])
                else:
                    for j in vals:
                        cur.setdefault(j, 0.0)
        self.prev = terms
        self.t = t

    def value(self):
        k0 = self.spec.k0
        total = 0.0
        for store in (self.sup, self.int):
            for (_, sigma, _, side), blocks in store.items():
                total += _low(blocks, sigma, k0) if side == "low" else _high(blocks, sigma, k0)
        return float(total)


# ---------------------------------------------------------------------------
# Configuration and runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialData:
    """``kind``: ``random`` (spectrum ``|xi|^-gamma e^{-|xi|/xi_c}``), ``band`` (random within ``band``), ``mode``.

    ``amplitude`` is the root-mean-square value of ``a`` and of each velocity component.
    """

    kind: str = "random"
    amplitude: float = 1e-3
    gamma: float = 2.0
    xi_c: float | None = None
    band: tuple | None = None
    velocity: bool = True
    mode: tuple | None = None

    def build(self, grid, rng):
        if self.kind not in ("random", "band", "mode"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        scale = self.amplitude * math.sqrt(grid.volume)
        if self.kind == "mode":
            k = tuple(self.mode or (1,) + (0,) * (grid.d - 1))
            phase = sum(ki * grid.k0 * grid.x[i] for i, ki in enumerate(k))
            a_phys = self.amplitude * math.sqrt(2.0) * np.cos(phase)
            a = forward(grid, a_phys)
            u = SpectralField(grid, np.zeros((grid.d,) + grid.shape, dtype=np.complex128))
            return State(a, u)
        band = self.band if self.kind == "band" else None
        if self.kind == "band" and band is None:
            band = (grid.k0, grid.k0 * 4)
        a = random_field(grid, rng, gamma=self.gamma, xi_c=self.xi_c, amplitude=scale, band=band)
        if self.velocity:
            u = random_field(grid, rng, gamma=self.gamma, xi_c=self.xi_c, ncomp=grid.d, amplitude=scale, band=band)
        else:
            u = SpectralField(grid, np.zeros((grid.d,) + grid.shape, dtype=np.complex128))
        return State(a, u)


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    params: LinearParams
    model: CoefficientModel = CoefficientModel()
    dt: float = 0.05
    t_end: float = 1.0
    output_interval: float | None = None
    dt_min: float = 1e-6
    cfl: float = 0.5
    initial: InitialData = InitialData()
    mode: str = "plain"
    c0: float | None = None
    diagnostics: DiagnosticSpec = DiagnosticSpec()
    seed: int = 0
    keep_states: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.mode not in ("plain", "gevrey_weighted"):
            raise ValueError(f"mode must be plain or gevrey_weighted, got {self.mode!r}")
        self.diagnostics.validated(self.grid.d)
        c1, _ = decay_constants(self.params.kappa_bar)
        if self.c0 is not None and self.c0 > c1 / self.grid.d * (1 + 1e-12):
            raise ValueError(f"c0 = {self.c0} exceeds c1/d = {c1 / self.grid.d}")

    @property
    def gevrey_rate(self):
        if self.mode != "gevrey_weighted":
            return 0.0
        if self.c0 is None:
            c1, _ = decay_constants(self.params.kappa_bar)
            return c1 / self.grid.d
        return float(self.c0)

    @property
    def interval(self):
        return self.output_interval or self.dt

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    healthy: bool = True
    message: str = ""
    x_p0: float = 0.0
    last_healthy_state: State | None = None
    last_healthy_row: dict | None = None

    COLUMNS = ("t", "mass", "energy", "sup_a", "a_low", "a_high", "u_low", "u_high", "X_p", "radius", "dt")

    def column(self, name):
        return np.array([row[name] for row in self.diagnostics])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.diagnostics:
            w.writerow([f"{row[c]:.12e}" if isinstance(row[c], float) else row[c] for c in self.COLUMNS])
        return buf.getvalue()


def _diagnose(state, t, spec, acc, dt):
    g = state.grid
    d = g.d
    b = _block_set(state, spec.p)
    acc.add(t, b)
    a_phys = state.a.to_physical()
    row = {
        "t": float(t),
        "mass": float(state.a.coeffs[(0,) * d].real),
        "energy": float(math.sqrt(state.a.l2_norm() ** 2 + state.u.l2_norm() ** 2)),
        "sup_a": float(np.max(np.abs(a_phys))),
        "a_low": float(_low(b["a2"], d / 2 - 1, spec.k0)),
        "a_high": float(_high(b["ap"], d / spec.p, spec.k0)),
        "u_low": float(_low(b["u2"], d / 2 - 1, spec.k0)),
        "u_high": float(_high(b["up"], d / spec.p - 1, spec.k0)),
        "X_p": acc.value(),
        "radius": float("nan"),
        "dt": float(dt),
    }
    if spec.radius:
        try:
            row["radius"] = estimate_radius(state.a).radius
        except ValueError:
            pass
    return row


def _sanity(row):
    for k in ("energy", "X_p", "sup_a"):
        v = row[k]
        if not np.isfinite(v) or v > BLOWUP:
            return f"DIVERGED at t={row['t']:.6g}: {k}={v:.3e}"
    return ""


def run(config, initial_state=None, progress=None):
    """Integrate to ``t_end`` recording diagnostics at every output time."""
    grid = config.grid
    rng = np.random.default_rng(config.seed)
    state0 = initial_state or config.initial.build(grid, rng)
    if state0.grid != grid:
        raise ValueError("initial state lives on a different grid")
    stepper = Stepper(grid, config.params, config.model, config.mode, config.gevrey_rate)
    spec = config.diagnostics
    acc = XpAccumulator(grid.d, spec)
    traj = Trajectory(x_p0=data_smallness(state0, spec))
    row = _diagnose(state0, 0.0, spec, acc, 0.0)
    traj.times.append(0.0)
    traj.diagnostics.append(row)
    if config.keep_states:
        traj.states.append(state0)
    traj.last_healthy_state = state0
    traj.last_healthy_row = row

    y = stepper.weight(state0.stacked(), 0.0)
    t = 0.0
    dx = grid.dx
    interval = config.interval
    n_out = int(round(config.t_end / interval))
    if abs(n_out * interval - config.t_end) > 1e-9 * config.t_end:
        raise ValueError("t_end must be a multiple of the output interval")
    for k in range(1, n_out + 1):
        t_next = k * interval
        umax = float(np.max(np.abs(padder_for(grid).to_physical(stepper.unweight(y, t)[1:]))))
        h = config.dt if umax == 0 else min(config.dt, config.cfl * dx / umax)
        if h < config.dt_min:
            traj.healthy = False
            traj.message = f"DIVERGED at t={t:.6g}: CFL step {h:.3e} below dt_min"
            break
        n_sub = max(1, int(math.ceil((t_next - t) / h - 1e-12)))
        h = (t_next - t) / n_sub
        try:
            for i in range(n_sub):
                y = stepper.step(y, t + i * h, h)
        except (ValueError, FloatingPointError, RuntimeError) as exc:
            traj.healthy = False
            traj.message = f"DIVERGED at t={t:.6g}: {exc}"
            break
        t = t_next
        state = State.from_stacked(grid, stepper.unweight(y, t))
        row = _diagnose(state, t, spec, acc, h)
        msg = _sanity(row)
        traj.times.append(t)
        traj.diagnostics.append(row)
        if msg:
            traj.healthy = False
            traj.message = msg
            break
        traj.last_healthy_state = state
        traj.last_healthy_row = row
        if config.keep_states:
            traj.states.append(state)
        if progress:
            progress(t, row)
    return traj
