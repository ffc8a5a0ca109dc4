"""Gevrey weights, analyticity-radius estimates, multiplier-kernel checks and decay-rate fits."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import kernels
from .littlewood_paley import build_partition, dyadic_block
from .spectral_core import SpectralField, lp_norm, random_field

GAIN_CAP = 30.0


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


def _l1_shells(grid):
    """Integer l1 shell ``n = sum |k_i|`` per lattice point, and a mask of the modes below Nyquist."""
    k = np.abs(grid.kvec)
    inside = np.all(k < grid.N // 2, axis=0)
    return k.sum(axis=0), inside


def shell_profile(f):
    """``max |f_hat|`` on every l1 shell (all components pooled)."""
    n, inside = _l1_shells(f.grid)
    mag = np.abs(f.coeffs)
    if f.is_vector:
        mag = mag.max(axis=0)
    mag = np.where(inside, mag, 0.0)
    nshell = int(n.max()) + 1
    return kernels.shell_max(mag, n, nshell)


def gevrey_weight(f, delta, cap=GAIN_CAP):
    """``coeffs <- exp(delta |xi|_1) coeffs``.

    Amplification (``delta > 0``) is refused when a shell whose gain exceeds
    ``exp(cap)`` would end up above the field's unweighted peak: that shell's
    content is amplified noise, not signal.
    """
    delta = float(delta)
    g = f.grid
    gain = delta * g.xi_l1
    if delta > 0 and gain.max() > cap:
        prof = shell_profile(f)
        peak = prof.max()
        shells = np.arange(prof.size)
        w = prof * np.exp(delta * g.k0 * shells)
        bad = (delta * g.k0 * shells > cap) & (w > peak)
        if np.any(bad) or not np.all(np.isfinite(w)):
            first = int(shells[bad][0]) if np.any(bad) else int(np.argmax(~np.isfinite(w)))
            raise OverflowError(
                f"Gevrey weight exp({delta:.4g} |xi|_1) exceeds exp({cap}) and overflows the signal on l1 shell {first}"
            )
    return SpectralField(g, f.coeffs * np.exp(gain))


# ---------------------------------------------------------------------------
# Radius estimate
# ---------------------------------------------------------------------------


@dataclass
class GevreyFit:
    radius: float
    window: tuple
    residual: float
    slope: float = 0.0
    intercept: float = 0.0
    n_shells: int = 0

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def _usable_window(prof, lo=1e-13, hi=1e-2):
    peak_at = int(np.argmax(prof[1:])) + 1
    peak = prof[peak_at]
    rel = prof / peak
    idx = np.arange(prof.size)
    # contiguous run below hi (and above lo) after the peak
    start = next((i for i in range(peak_at, prof.size) if rel[i] <= hi), None)
    run = []
    if start is not None:
        for i in range(start, prof.size):
            if rel[i] < lo:
                break
            run.append(i)
    if len(run) >= 4:
        return np.array(run)
    fallback = idx[(idx >= peak_at) & (rel >= lo)]
    return fallback


def estimate_radius(f, lo=1e-13, hi=1e-2):
    """Slope of ``log(shell max |f_hat|)`` against ``|xi|_1``; the radius is ``-slope`` clamped at 0."""
    prof = shell_profile(f)
    if prof.size < 2 or prof[1:].max() == 0:
        raise ValueError("unresolved radius: the field has no nonzero shells")
    shells = _usable_window(prof, lo, hi)
    if shells.size < 4:
        raise ValueError(f"unresolved radius: only {shells.size} usable l1 shells (need 4)")
    x = shells * f.grid.k0
    y = np.log(prof[shells])
    fit = stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    return GevreyFit(
        radius=float(max(0.0, -fit.slope)),
        window=(float(x[0]), float(x[-1])),
        residual=float(np.sqrt(np.mean(resid**2))),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        n_shells=int(shells.size),
    )


def radius_series_csv(times, fits):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "radius", "window_lo", "window_hi", "residual"])
    for t, fit in zip(times, fits):
        w.writerow([f"{t:.10g}", f"{fit.radius:.12e}", f"{fit.window[0]:.6g}", f"{fit.window[1]:.6g}", f"{fit.residual:.6e}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Kernels and multipliers
# ---------------------------------------------------------------------------


@dataclass
class KernelReport:
    kernel: SpectralField
    l1_mass: float
    min_value: float
    peak: float


def _kernel_report(grid, symbol):
    _, inside = _l1_shells(grid)
    coeffs = np.where(inside, symbol, 0.0) / grid.volume
    k = SpectralField(grid, coeffs)
    vals = k.to_physical()
    return KernelReport(k, lp_norm(vals, grid, 1), float(vals.min()), float(vals.max()))


def kernel_h_alpha(alpha, grid):
    """Periodic kernel with Fourier symbol ``exp(-alpha |xi|_1)``; nonnegative with unit mass."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return _kernel_report(grid, np.exp(-alpha * grid.xi_l1))


def poisson_kernel_1d(alpha, x, L=2.0 * np.pi):
    """Closed form of the 1D periodised kernel: ``sinh(a) / (L (cosh a - cos(2 pi x / L)))``, ``a = 2 pi alpha / L``."""
    a = 2.0 * np.pi * alpha / L
    return np.sinh(a) / (L * (np.cosh(a) - np.cos(2.0 * np.pi * np.asarray(x) / L)))


def m1_exponent(t, tau):
    return np.sqrt(t - tau) + np.sqrt(tau) - np.sqrt(t)


def m2_symbol(grid, a):
    return np.exp(-0.5 * a * grid.xi_abs**2 + np.sqrt(a) * grid.xi_l1)


@dataclass
class KernelCheck:
    which: str
    params: dict
    value: float
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def operator_kernel_checks(which, grid, rng=None, **params):
    """Measured bound for one multiplier lemma.

    ``M1`` (``t``, ``tau``): discrete L1 norm of the kernel of ``exp(-(sqrt(t-tau)+sqrt(tau)-sqrt(t)) Lambda_1)``.
    ``M2`` (``a``, ``p``, ``samples``): max L^p gain of ``exp(a Delta/2 + sqrt(a) Lambda_1)`` over random fields;
    ``extra['l2_norm']`` is the exact L2 operator norm (sup of the symbol on the lattice).
    ``shell_decay`` (``s``, ``alpha``, ``js``, ``p``, ``c``, ``samples``): smallest ``C_s`` with
    ``||Lambda^s exp(-alpha Lambda_1) D_j u||_p <= C_s 2^{js} exp(-c alpha 2^j) ||D_j u||_p``.
    """
    rng = rng or np.random.default_rng(0)
    if which == "M1":
        t, tau = float(params["t"]), float(params["tau"])
        if not 0 < tau < t:
            raise ValueError(f"M1 needs 0 < tau < t, got tau={tau}, t={t}")
        c = m1_exponent(t, tau)
        rep = _kernel_report(grid, np.exp(-c * grid.xi_l1))
        return KernelCheck("M1", {"t": t, "tau": tau}, rep.l1_mass, {"exponent": float(c), "min": rep.min_value})
    if which == "M2":
        a = float(params["a"])
        p = float(params.get("p", 2.0))
        samples = int(params.get("samples", 50))
        if a < 0:
            raise ValueError(f"M2 needs a >= 0, got {a}")
        sym = m2_symbol(grid, a)
        worst = 0.0
        for _ in range(samples):
            f = random_field(grid, rng, gamma=rng.uniform(0.0, 2.0), xi_c=grid.k0 * grid.N * rng.uniform(0.02, 0.2))
            num = lp_norm(SpectralField(grid, f.coeffs * sym).to_physical(), grid, p)
            worst = max(worst, num / lp_norm(f.to_physical(), grid, p))
        _, inside = _l1_shells(grid)
        exact = float(np.max(np.where(inside, sym, 0.0)))
        return KernelCheck("M2", {"a": a, "p": p, "samples": samples}, worst, {"l2_norm": exact})
    if which == "shell_decay":
        s = float(params["s"])
        alpha = float(params["alpha"])
        p = float(params.get("p", 2.0))
        c = float(params.get("c", 0.25))
        samples = int(params.get("samples", 10))
        if s < 0 or alpha < 0:
            raise ValueError("shell_decay needs s >= 0 and alpha >= 0")
        part = build_partition(grid)
        js = params.get("js") or [j for j in part.indices if j >= 0]
        weight = grid.xi_abs**s * np.exp(-alpha * grid.xi_l1)
        worst = 0.0
        for _ in range(samples):
            f = random_field(grid, rng, gamma=rng.uniform(0.0, 2.0), xi_c=grid.k0 * grid.N)
            for j in js:
                blk = dyadic_block(f, j, partition=part)
                base = lp_norm(blk.to_physical(), grid, p)
                if base == 0:
                    continue
                num = lp_norm(SpectralField(grid, blk.coeffs * weight).to_physical(), grid, p)
                worst = max(worst, num / (2.0 ** (j * s) * np.exp(-c * alpha * 2.0**j) * base))
        return KernelCheck("shell_decay", {"s": s, "alpha": alpha, "p": p, "c": c, "js": list(js)}, worst)
    raise ValueError(f"unknown check {which!r}; expected M1, M2 or shell_decay")


# ---------------------------------------------------------------------------
# Decay fits
# ---------------------------------------------------------------------------


@dataclass
class DecayFit:
    model: str
    rate: float
    prefactor: float
    r_squared: float
    window: tuple
    n_samples: int

    @property
    def gamma_or_c(self):
        return self.rate

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def fit_decay(times, values, model="algebraic", window=None):
    """``algebraic``: ``y ~ A t^-gamma`` via log-log slope. ``stretched``: ``y ~ A exp(-c sqrt t)``."""
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if t.shape != y.shape:
        raise ValueError("times and values differ in shape")
    if window is None:
        window = (1.0, 0.9 * float(t.max()))
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"degenerate fit window {window}")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 8:
        raise ValueError(f"need >= 8 samples in the fit window, got {int(sel.sum())}")
    if np.any(y[sel] <= 0):
        raise ValueError("decay fits need positive norms")
    ly = np.log(y[sel])
    if model == "algebraic":
        x = np.log(t[sel])
    elif model == "stretched":
        x = np.sqrt(t[sel])
    else:
        raise ValueError(f"unknown model {model!r}")
    if np.ptp(ly) == 0:
        return DecayFit(model, 0.0, float(y[sel][0]), 1.0, (float(lo), float(hi)), int(sel.sum()))
    fit = stats.linregress(x, ly)
    return DecayFit(model, float(-fit.slope), float(np.exp(fit.intercept)), float(fit.rvalue**2), (float(lo), float(hi)), int(sel.sum()))
