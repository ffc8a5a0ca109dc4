"""Per-mode numeric kernels.

Every kernel exists twice: a loop version compiled with numba and a vectorised
numpy version. The public names at the bottom of the module pick one according
to ``_accel.ENABLED``; ``benchmarks/bench_kernels.py`` times both.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

# |s t| below this uses the cosh/sinh power series (covers eigenvalue coalescence)
SERIES_SWITCH = 0.1
_SERIES_TERMS = 9


# ---------------------------------------------------------------------------
# exp(t M) for a field of 2x2 matrices
# ---------------------------------------------------------------------------


@njit
def _expm2_numba(m11, m12, m21, m22, t):
    n = m11.shape[0]
    e11 = np.empty(n, dtype=np.complex128)
    e12 = np.empty(n, dtype=np.complex128)
    e21 = np.empty(n, dtype=np.complex128)
    e22 = np.empty(n, dtype=np.complex128)
    for i in range(n):
        a = m11[i]
        b = m12[i]
        c = m21[i]
        d = m22[i]
        half_tr = 0.5 * (a + d)
        s2 = (0.5 * (a - d)) ** 2 + b * c
        s = np.sqrt(s2 + 0j)
        if s.real < 0.0:
            s = -s
        if abs(s) * t < SERIES_SWITCH:
            z = s2 * t * t
            ch = 0j
            sh = 0j
            term_c = 1.0 + 0j
            term_s = 1.0 + 0j
            for k in range(_SERIES_TERMS):
                ch += term_c
                sh += term_s
                term_c = term_c * z / ((2 * k + 1) * (2 * k + 2))
                term_s = term_s * z / ((2 * k + 2) * (2 * k + 3))
            g = np.exp(half_tr * t)
            c0 = g * ch
            c1 = g * sh * t
        else:
            ep = np.exp((half_tr + s) * t)
            em = np.exp((half_tr - s) * t)
            c0 = 0.5 * (ep + em)
            c1 = (ep - em) / (2.0 * s)
        e11[i] = c0 + c1 * (a - half_tr)
        e12[i] = c1 * b
        e21[i] = c1 * c
        e22[i] = c0 + c1 * (d - half_tr)
    return e11, e12, e21, e22


def _expm2_numpy(m11, m12, m21, m22, t):
    m11, m12, m21, m22 = (np.asarray(x, dtype=np.complex128) for x in (m11, m12, m21, m22))
    half_tr = 0.5 * (m11 + m22)
    s2 = (0.5 * (m11 - m22)) ** 2 + m12 * m21
    s = np.sqrt(s2)
    s = np.where(s.real < 0.0, -s, s)
    small = np.abs(s) * t < SERIES_SWITCH

    c0 = np.empty_like(half_tr)
    c1 = np.empty_like(half_tr)

    if np.any(small):
        z = s2[small] * t * t
        ch = np.zeros_like(z)
        sh = np.zeros_like(z)
        term_c = np.ones_like(z)
        term_s = np.ones_like(z)
        for k in range(_SERIES_TERMS):
            ch += term_c
            sh += term_s
            term_c = term_c * z / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * z / ((2 * k + 2) * (2 * k + 3))
        g = np.exp(half_tr[small] * t)
        c0[small] = g * ch
        c1[small] = g * sh * t
    big = ~small
    if np.any(big):
        sb = s[big]
        ep = np.exp((half_tr[big] + sb) * t)
        em = np.exp((half_tr[big] - sb) * t)
        c0[big] = 0.5 * (ep + em)
        c1[big] = (ep - em) / (2.0 * sb)

    return (
        c0 + c1 * (m11 - half_tr),
        c1 * m12,
        c1 * m21,
        c0 + c1 * (m22 - half_tr),
    )


# ---------------------------------------------------------------------------
# Radial smoothstep cut-off
# ---------------------------------------------------------------------------

CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0


@njit
def _chi_numba(r):
    out = np.empty(r.shape[0], dtype=np.float64)
    width = CHI_OUTER - CHI_INNER
    for i in range(r.shape[0]):
        x = r[i]
        if x <= CHI_INNER:
            out[i] = 1.0
        elif x >= CHI_OUTER:
            out[i] = 0.0
        else:
            s = (x - CHI_INNER) / width
            out[i] = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    return out


def _chi_numpy(r):
    r = np.asarray(r, dtype=np.float64)
    s = np.clip((r - CHI_INNER) / (CHI_OUTER - CHI_INNER), 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


# ---------------------------------------------------------------------------
# Max |value| per integer shell
# ---------------------------------------------------------------------------


@njit
def _shell_max_numba(values, shell, nshell):
    out = np.zeros(nshell, dtype=np.float64)
    for i in range(values.shape[0]):
        k = shell[i]
        v = values[i]
        if v > out[k]:
            out[k] = v
    return out


def _shell_max_numpy(values, shell, nshell):
    out = np.zeros(nshell, dtype=np.float64)
    np.maximum.at(out, shell, values)
    return out


# ---------------------------------------------------------------------------
# Adaptive RK4 (step doubling) for y' = A y, one 2x2 system per case
# ---------------------------------------------------------------------------


@njit
def _rk4_step(a, y, h):
    k1 = a @ y
    k2 = a @ (y + 0.5 * h * k1)
    k3 = a @ (y + 0.5 * h * k2)
    k4 = a @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def _rk4_oracle_numba(mats, y0, times, rtol):
    ncase = mats.shape[0]
    nt = times.shape[0]
    out = np.empty((ncase, nt, 2), dtype=np.complex128)
    for c in range(ncase):
        a = mats[c]
        y = y0[c].copy()
        t = 0.0
        scale = 0.0
        for i in range(2):
            for j in range(2):
                scale = max(scale, abs(a[i, j]))
        h = 0.1 / max(scale, 1e-12)
        for it in range(nt):
            target = times[it]
            while t < target:
                step = min(h, target - t)
                full = _rk4_step(a, y, step)
                half = _rk4_step(a, y, 0.5 * step)
                half = _rk4_step(a, half, 0.5 * step)
                ynorm = math.sqrt(abs(half[0]) ** 2 + abs(half[1]) ** 2)
                diff = half - full
                err = math.sqrt(abs(diff[0]) ** 2 + abs(diff[1]) ** 2) / 15.0
                tol = rtol * max(ynorm, 1e-300)
                if err <= tol or step < 1e-14:
                    y = half + diff / 15.0
                    t += step
                if err == 0.0:
                    fac = 4.0
                else:
                    fac = min(4.0, max(0.2, 0.9 * (tol / err) ** 0.2))
                if step == h or err > tol:
                    h = step * fac
            out[c, it, 0] = y[0]
            out[c, it, 1] = y[1]
    return out


def _rk4_oracle_numpy(mats, y0, times, rtol):
    mats = np.asarray(mats, dtype=np.complex128)
    y = np.array(y0, dtype=np.complex128)
    times = np.asarray(times, dtype=np.float64)
    ncase = mats.shape[0]
    out = np.empty((ncase, times.size, 2), dtype=np.complex128)
    t = np.zeros(ncase)
    scale = np.abs(mats).reshape(ncase, -1).max(axis=1)
    h = 0.1 / np.maximum(scale, 1e-12)

    def rk4(yy, hh):
        hh = hh[:, None]
        k1 = np.einsum("nij,nj->ni", mats, yy)
        k2 = np.einsum("nij,nj->ni", mats, yy + 0.5 * hh * k1)
        k3 = np.einsum("nij,nj->ni", mats, yy + 0.5 * hh * k2)
        k4 = np.einsum("nij,nj->ni", mats, yy + hh * k3)
        return yy + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    for it, target in enumerate(times):
        while True:
            active = t < target
            if not np.any(active):
                break
            step = np.where(active, np.minimum(h, target - t), 0.0)
            full = rk4(y, step)
            half = rk4(rk4(y, 0.5 * step), 0.5 * step)
            diff = half - full
            err = np.linalg.norm(diff, axis=1) / 15.0
            tol = rtol * np.maximum(np.linalg.norm(half, axis=1), 1e-300)
            accept = active & ((err <= tol) | (step < 1e-14))
            y[accept] = half[accept] + diff[accept] / 15.0
            t[accept] += step[accept]
            with np.errstate(divide="ignore"):
                fac = np.where(err == 0.0, 4.0, np.clip(0.9 * (tol / err) ** 0.2, 0.2, 4.0))
            adapt = active & ((step == h) | (err > tol))
            h = np.where(adapt, step * fac, h)
        out[:, it, :] = y
    return out


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def expm2(m11, m12, m21, m22, t):
    """Entries of exp(t M) for arrays of 2x2 matrices ``[[m11, m12], [m21, m22]]``."""
    shape = np.shape(m11)
    args = [np.ascontiguousarray(np.broadcast_to(x, shape), dtype=np.complex128).ravel() for x in (m11, m12, m21, m22)]
    if _accel.ENABLED:
        res = _expm2_numba(*args, float(t))
    else:
        res = _expm2_numpy(*args, float(t))
    return tuple(r.reshape(shape) for r in res)


def chi_profile(r):
    r = np.asarray(r, dtype=np.float64)
    if _accel.ENABLED:
        return _chi_numba(np.ascontiguousarray(r).ravel()).reshape(r.shape)
    return _chi_numpy(r)


def shell_max(values, shell, nshell):
    values = np.ascontiguousarray(values, dtype=np.float64).ravel()
    shell = np.ascontiguousarray(shell, dtype=np.int64).ravel()
    if _accel.ENABLED:
        return _shell_max_numba(values, shell, int(nshell))
    return _shell_max_numpy(values, shell, int(nshell))


def rk4_oracle(mats, y0, times, rtol=1e-13):
    """Adaptive step-doubling RK4 for ``y' = A y``; returns ``y`` at each output time."""
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    times = np.ascontiguousarray(times, dtype=np.float64)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("output times must be sorted and nonnegative")
    if _accel.ENABLED:
        return _rk4_oracle_numba(mats, y0, times, float(rtol))
    return _rk4_oracle_numpy(mats, y0, times, float(rtol))
