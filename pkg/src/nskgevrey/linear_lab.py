"""Fourier-side analysis of the linearised NSK system.

Per mode the compressible part obeys

    d/dt a_hat = -|xi| v_hat
    d/dt v_hat = |xi| (1 + kappa |xi|^2) a_hat - |xi|^2 v_hat

with ``v = Lambda^{-1} div u``; the solenoidal part is a heat flow with rate
``mu_bar |xi|^2``. Everything here is exact per mode (closed-form 2x2
exponentials), so it doubles as the linear half of the nonlinear stepper.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .littlewood_paley import build_partition, dyadic_block
from .spectral_core import SpectralField, State, lp_norm


@dataclass(frozen=True)
class LinearParams:
    kappa_bar: float
    mu_bar: float = 0.5
    lambda_bar: float | None = None

    def __post_init__(self):
        if not self.kappa_bar > 0:
            raise ValueError(f"capillarity kappa_bar must be positive, got {self.kappa_bar}")
        if not self.mu_bar > 0:
            raise ValueError(f"shear viscosity mu_bar must be positive, got {self.mu_bar}")
        lam = 1.0 - 2.0 * self.mu_bar if self.lambda_bar is None else float(self.lambda_bar)
        object.__setattr__(self, "lambda_bar", lam)
        if abs(2.0 * self.mu_bar + lam - 1.0) > 1e-12:
            raise ValueError(f"normalisation requires 2 mu_bar + lambda_bar = 1, got {2 * self.mu_bar + lam}")

    @property
    def nu_bar(self):
        return 2.0 * self.mu_bar + self.lambda_bar


@dataclass(frozen=True)
class ModeState:
    xi: float
    a_hat: complex
    v_hat: complex

    def triple_norm(self):
        """``|(a, |xi| a, v)|``."""
        return float(np.sqrt((1.0 + self.xi**2) * abs(self.a_hat) ** 2 + abs(self.v_hat) ** 2))


def decay_constants(kappa_bar):
    """``(c1, C)`` for the mode-wise envelope ``C exp(-c1 xi^2 t)``."""
    c1 = 0.5 * min(1.0, kappa_bar)
    C = max(1.5, kappa_bar + 1.0) / min(0.5, kappa_bar)
    return c1, C


def lyapunov_bracket(kappa_bar):
    """Constants with ``lo |X|^2 <= L^2 <= hi |X|^2`` at beta = 1/2, ``X = (a, |xi| a, v)``."""
    return min(0.5, kappa_bar), max(1.5, kappa_bar + 1.0)


def mode_generator(xi, params):
    if np.any(np.asarray(xi) <= 0):
        raise ValueError("mode generator needs |xi| > 0")
    k = params.kappa_bar
    return np.array([[0.0, -xi], [xi * (1.0 + k * xi**2), -(xi**2)]], dtype=np.float64)


def mode_propagator(xi, kappa_bar, t):
    """Entries of ``exp(t M(xi))`` for an array of ``|xi|`` (``xi = 0`` gives the identity)."""
    xi = np.asarray(xi, dtype=np.float64)
    return kernels.expm2(
        np.zeros_like(xi),
        -xi,
        xi * (1.0 + kappa_bar * xi**2),
        -(xi**2),
        t,
    )


def propagate_mode_exact(state, t, params):
    if t < 0:
        raise ValueError("time must be nonnegative")
    e11, e12, e21, e22 = mode_propagator(np.array([state.xi]), params.kappa_bar, t)
    a = e11[0] * state.a_hat + e12[0] * state.v_hat
    v = e21[0] * state.a_hat + e22[0] * state.v_hat
    return ModeState(state.xi, complex(a), complex(v))


def lyapunov(state, params, beta=0.5):
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    xi, a, v = state.xi, state.a_hat, state.v_hat
    k = params.kappa_bar
    return float(
        (1.0 + k * xi**2) * abs(a) ** 2
        + abs(v) ** 2
        + beta * (xi**2 * abs(a) ** 2 - 2.0 * xi * (a * np.conj(v)).real)
    )


def lyapunov_dissipation(state, params, t, h=None, beta=0.5):
    """``(dL^2/dt + c1 xi^2 L^2) / L^2`` at time ``t`` of the exact flow, by a fourth-order central difference.

    The step defaults to a fixed fraction of the fastest rate of the mode, keeping the
    truncation error near ``1e-12`` relative.
    """
    xi, k = state.xi, params.kappa_bar
    h = 2e-3 / (1.0 + xi**2 * (1.0 + k)) if h is None else h
    if t < 2 * h:
        raise ValueError(f"need t >= 2h = {2 * h} for a central difference")
    c1, _ = decay_constants(k)

    def L(s):
        return lyapunov(propagate_mode_exact(state, s, params), params, beta)

    dL = (-L(t + 2 * h) + 8 * L(t + h) - 8 * L(t - h) + L(t - 2 * h)) / (12.0 * h)
    L0 = L(t)
    return float((dL + c1 * xi**2 * L0) / L0)


def eigenvalues(xi, kappa_bar):
    """``lambda_pm = (1 + xi^2 +- sqrt(D)) / 2`` with ``D = (1-4k) xi^4 - 2 xi^2 + 1``, ``sqrt(r<0) = i sqrt|r|``."""
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(xi < 0):
        raise ValueError("xi must be nonnegative")
    disc = haspot_discriminant(xi, kappa_bar)
    root = np.where(disc >= 0, np.sqrt(np.abs(disc)) + 0j, 1j * np.sqrt(np.abs(disc)))
    lam_p = 0.5 * (1.0 + xi**2 + root)
    lam_m = 0.5 * (1.0 + xi**2 - root)
    return lam_p, lam_m


def haspot_discriminant(xi, kappa_bar):
    xi = np.asarray(xi, dtype=np.float64)
    return (1.0 - 4.0 * kappa_bar) * xi**4 - 2.0 * xi**2 + 1.0


def coalescence_points(kappa_bar):
    """Positive roots of the discriminant: ``xi^2 = 1/(1 +- 2 sqrt(kappa))`` (second only if kappa < 1/4)."""
    s = np.sqrt(kappa_bar)
    roots = [1.0 / np.sqrt(1.0 + 2.0 * s)]
    if kappa_bar < 0.25:
        roots.append(1.0 / np.sqrt(1.0 - 2.0 * s))
    return roots


def haspot_matrix(xi, kappa_bar, lower_order=False):
    """Generator of ``(grad a, v)`` along ``xi`` (Haspot variables).

    Principal part: ``d/dt grad a = -grad a - Delta v``, ``d/dt v = Delta v + kappa Delta grad a``;
    its eigenvalues are ``-lambda_pm``. ``lower_order`` adds the ``v - (-Delta)^{-1} grad a`` terms.
    """
    m = np.array([[-1.0, xi**2], [-kappa_bar * xi**2, -(xi**2)]], dtype=np.float64)
    if lower_order:
        m[1, 0] -= 1.0 / xi**2
        m[1, 1] += 1.0
    return m


def haspot_alpha(kappa_bar):
    """``alpha = (1 + sqrt(1 - 4 kappa)) / 2`` (complex when kappa > 1/4); ``alpha (1 - alpha) = kappa``."""
    if kappa_bar == 0:
        raise ValueError("kappa_bar = 0 makes alpha degenerate (alpha = 1)")
    return 0.5 * (1.0 + np.sqrt(complex(1.0 - 4.0 * kappa_bar)))


# ---------------------------------------------------------------------------
# Whole-field semigroup
# ---------------------------------------------------------------------------


class LinearPropagator:
    """Exact linear flow on a grid; caches the per-mode exponentials by time step."""

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        xi = grid.xi_abs
        with np.errstate(invalid="ignore", divide="ignore"):
            self.xhat = np.where(xi > 0, grid.xi / np.where(xi > 0, xi, 1.0), 0.0)
        self._cache = {}

    def entries(self, t):
        key = float(t)
        hit = self._cache.get(key)
        if hit is None:
            e = mode_propagator(self.grid.xi_abs, self.params.kappa_bar, key)
            heat = np.exp(-self.params.mu_bar * self.grid.xi_abs**2 * key)
            hit = self._cache[key] = e + (heat,)
            if len(self._cache) > 16:
                self._cache.pop(next(iter(self._cache)))
        return hit

    def split(self, y):
        """``(a, v, Pu)`` from the stacked array ``[a, u]``; ``v_hat = i xhat . u_hat``."""
        u = y[1:]
        v = 1j * np.sum(self.xhat * u, axis=0)
        pu = u + 1j * self.xhat * v[None]
        return y[0], v, pu

    def join(self, a, v, pu):
        return np.concatenate([a[None], pu - 1j * self.xhat * v[None]], axis=0)

    def apply(self, y, t):
        if t < 0:
            raise ValueError("time must be nonnegative")
        if t == 0:
            return np.array(y, dtype=np.complex128, copy=True)
        e11, e12, e21, e22, heat = self.entries(t)
        a, v, pu = self.split(y)
        return self.join(e11 * a + e12 * v, e21 * a + e22 * v, heat[None] * pu)

    def rhs(self, y):
        """Linear generator applied to ``y`` (independent route: straight from the PDE)."""
        g = self.grid
        k = self.params.kappa_bar
        mu, lam = self.params.mu_bar, self.params.lambda_bar
        a, u = y[0], y[1:]
        xi2 = g.xi_abs**2
        xi_dot_u = np.sum(g.xi * u, axis=0)
        da = -1j * xi_dot_u
        du = -mu * xi2[None] * u - (mu + lam) * g.xi * xi_dot_u[None] - 1j * g.xi * ((1.0 + k * xi2) * a)[None]
        return np.concatenate([da[None], du], axis=0)


def apply_semigroup(state, t, params, propagator=None):
    prop = propagator or LinearPropagator(state.grid, params)
    return State.from_stacked(state.grid, prop.apply(state.stacked(), t))


def rk4_linear_pde(state, t, params, steps):
    """Fixed-step RK4 of the full linear PDE in Fourier space (oracle for ``apply_semigroup``)."""
    prop = LinearPropagator(state.grid, params)
    y = state.stacked()
    h = t / steps
    for _ in range(steps):
        k1 = prop.rhs(y)
        k2 = prop.rhs(y + 0.5 * h * k1)
        k3 = prop.rhs(y + 0.5 * h * k2)
        k4 = prop.rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return State.from_stacked(state.grid, y)


# ---------------------------------------------------------------------------
# Mode sweeps
# ---------------------------------------------------------------------------


def mode_oracle(xi, kappa_bar, a0, v0, times, rtol=1e-13):
    """Adaptive RK4 integration of the mode system; arrays broadcast over cases."""
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    n = xi.size
    mats = np.zeros((n, 2, 2), dtype=np.complex128)
    mats[:, 0, 1] = -xi
    mats[:, 1, 0] = xi * (1.0 + np.broadcast_to(kappa_bar, n) * xi**2)
    mats[:, 1, 1] = -(xi**2)
    y0 = np.stack([np.broadcast_to(a0, n), np.broadcast_to(v0, n)], axis=1)
    return kernels.rk4_oracle(mats, y0, np.asarray(times, dtype=np.float64), rtol)


@dataclass
class SweepRow:
    kappa_bar: float
    xi: float
    envelope_ratio: float
    oracle_rel_err: float
    lambda_plus: complex
    lambda_minus: complex


def envelope_ratios(xi, kappa_bar, times):
    """Worst case over initial data of ``|X(t)| / (C e^{-c1 xi^2 t} |X(0)|)`` for each ``(xi, t)``.

    ``|X| = |(a, xi a, v)|`` is the norm induced by ``S = diag-ish(1, xi; 1)``; the worst case is the
    spectral norm of ``S E(t) S^+`` computed exactly for the 2x2 system.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    times = np.asarray(times, dtype=np.float64)
    c1, C = decay_constants(kappa_bar)
    out = np.empty((xi.size, times.size))
    w = np.sqrt(1.0 + xi**2)  # |X| = |(w a, v)|
    for it, t in enumerate(times):
        e11, e12, e21, e22 = mode_propagator(xi, kappa_bar, t)
        # similarity by diag(w, 1): B = D E D^{-1}
        b = np.empty((xi.size, 2, 2), dtype=np.complex128)
        b[:, 0, 0] = e11
        b[:, 0, 1] = w * e12
        b[:, 1, 0] = e21 / w
        b[:, 1, 1] = e22
        norms = np.linalg.norm(b, ord=2, axis=(1, 2))
        out[:, it] = norms / (C * np.exp(-c1 * xi**2 * t))
    return out


def lyapunov_sweep(kappas=(0.1, 0.25, 1.0, 4.0), xis=None, times=None, rng=None, oracle=True):
    """One row per (kappa, xi): worst envelope ratio, oracle error, eigenvalues."""
    xis = np.linspace(0.1, 8.0, 40) if xis is None else np.asarray(xis)
    times = np.linspace(0.0, 20.0, 201) if times is None else np.asarray(times)
    rng = rng or np.random.default_rng(0)
    rows = []
    for k in kappas:
        ratios = envelope_ratios(xis, k, times).max(axis=1)
        errs = np.full(xis.size, np.nan)
        if oracle:
            a0 = rng.standard_normal(xis.size) + 1j * rng.standard_normal(xis.size)
            v0 = rng.standard_normal(xis.size) + 1j * rng.standard_normal(xis.size)
            ref = mode_oracle(xis, k, a0, v0, times, rtol=1e-13)
            exact = np.empty((xis.size, times.size, 2), dtype=np.complex128)
            for it, t in enumerate(times):
                f11, f12, f21, f22 = mode_propagator(xis, k, t)
                exact[:, it, 0] = f11 * a0 + f12 * v0
                exact[:, it, 1] = f21 * a0 + f22 * v0
            diff = np.linalg.norm(exact - ref, axis=2)
            scale = np.linalg.norm(exact, axis=2)
            # fully underflowed states carry no relative information
            rel = np.where(scale > 1e-250, diff / np.maximum(scale, 1e-250), 0.0)
            errs = rel.max(axis=1)
        lp, lm = eigenvalues(xis, k)
        for i, x in enumerate(xis):
            rows.append(SweepRow(k, float(x), float(ratios[i]), float(errs[i]), complex(lp[i]), complex(lm[i])))
    return rows


def sweep_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa_bar", "xi", "envelope_ratio", "oracle_rel_err", "lambda_plus_re", "lambda_plus_im", "lambda_minus_re", "lambda_minus_im"])
    for r in rows:
        w.writerow(
            [
                repr(r.kappa_bar),
                repr(r.xi),
                f"{r.envelope_ratio:.12e}",
                f"{r.oracle_rel_err:.6e}",
                f"{r.lambda_plus.real:.15e}",
                f"{r.lambda_plus.imag:.15e}",
                f"{r.lambda_minus.real:.15e}",
                f"{r.lambda_minus.imag:.15e}",
            ]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Haspot effective velocity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HaspotFrame:
    alpha: complex
    v: SpectralField
    w: SpectralField


def _qu(u):
    g = u.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(g.xi_abs > 0, 1.0 / g.xi_abs**2, 0.0)
    return g.xi * (inv * np.sum(g.xi * u.coeffs, axis=0))[None]


def _inv_lap_grad(a):
    g = a.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(g.xi_abs > 0, 1.0 / g.xi_abs**2, 0.0)
    return 1j * g.xi * (inv * a.coeffs)[None]


def haspot_transform(state, params):
    """``v = Q u + (-Delta)^{-1} grad a`` and ``w = v + alpha grad a``."""
    alpha = haspot_alpha(params.kappa_bar)
    g = state.grid
    v = _qu(state.u) + _inv_lap_grad(state.a)
    grad_a = 1j * g.xi * state.a.coeffs[None]
    return HaspotFrame(alpha, SpectralField(g, v), SpectralField(g, v + alpha * grad_a))


def _fd_derivative(fn, t0, h):
    """Fourth-order central difference."""
    return (-fn(t0 + 2 * h) + 8 * fn(t0 + h) - 8 * fn(t0 - h) + fn(t0 - 2 * h)) / (12.0 * h)


def haspot_residuals(state, params, t0=0.5, h=1e-3):
    """Relative L2 residuals of the diagonalised w- and v-equations along the exact linear flow."""
    g = state.grid
    k = params.kappa_bar
    prop = LinearPropagator(g, params)
    alpha = haspot_alpha(k)
    xi2 = g.xi_abs**2

    def frame(t):
        return haspot_transform(State.from_stacked(g, prop.apply(state.stacked(), t)), params)

    def w_of(t):
        return frame(t).w.coeffs

    def v_of(t):
        return frame(t).v.coeffs

    s = State.from_stacked(g, prop.apply(state.stacked(), t0))
    fr = haspot_transform(s, params)
    grad_a = 1j * g.xi * s.a.coeffs[None]
    ilg = _inv_lap_grad(s.a)
    dw = _fd_derivative(w_of, t0, h)
    dv = _fd_derivative(v_of, t0, h)
    lap_w = -xi2[None] * fr.w.coeffs
    lap_v = -xi2[None] * fr.v.coeffs
    res_w = dw - (1.0 - alpha) * lap_w - (-alpha * grad_a + fr.v.coeffs - ilg)
    res_v = dv - (k / (1.0 - alpha)) * lap_v - ((k / alpha) * lap_w + fr.v.coeffs - ilg)
    scale = np.sqrt(np.sum(np.abs(s.stacked()) ** 2))
    # scale by the size of the terms being balanced, not only the state
    scale_w = max(scale, np.sqrt(np.sum(np.abs(dw) ** 2)))
    scale_v = max(scale, np.sqrt(np.sum(np.abs(dv) ** 2)))
    return {
        "w": float(np.sqrt(np.sum(np.abs(res_w) ** 2)) / scale_w),
        "v": float(np.sqrt(np.sum(np.abs(res_v) ** 2)) / scale_v),
        "div_v_defect": float(
            np.max(np.abs(np.sum(1j * g.xi * fr.v.coeffs, axis=0) - (np.sum(1j * g.xi * s.u.coeffs, axis=0) - _nomean(s.a.coeffs, g))))
            / max(scale, 1e-300)
        ),
    }


def _nomean(c, g):
    c = c.copy()
    c[(0,) * g.d] = 0.0
    return c


# ---------------------------------------------------------------------------
# Complex-diffusion block bound
# ---------------------------------------------------------------------------


def complex_heat_check(beta, z, j, times=None, p=2.0, c=0.125):
    """Smallest ``C`` with ``||D_j e^{beta t Delta} z||_p <= C e^{-c Re(beta) t 4^j} ||D_j z||_p`` on a time grid."""
    beta = complex(beta)
    if not beta.real > 0:
        raise ValueError(f"Re(beta) must be positive, got {beta}")
    times = np.linspace(0.0, 4.0 / (beta.real * 4.0**j), 81) if times is None else np.asarray(times)
    g = z.grid
    block = dyadic_block(z, j, partition=build_partition(g))
    base = lp_norm(block.to_physical(), g, p)
    if base == 0:
        raise ValueError(f"block {j} of the test field is empty")
    worst = 0.0
    for t in times:
        evolved = SpectralField(g, block.coeffs * np.exp(-beta * t * g.xi_abs**2))
        num = lp_norm(evolved.to_physical(), g, p)
        worst = max(worst, num / (np.exp(-c * beta.real * t * 4.0**j) * base))
    return float(worst), c
