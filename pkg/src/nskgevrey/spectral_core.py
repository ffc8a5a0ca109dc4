"""Periodic-box spectral substrate.

Coefficients are stored in numpy FFT order along every axis and the forward
transform divides by ``N**d``, so ``coeffs[k]`` is the Fourier-series amplitude
of ``exp(i xi.x)`` with ``xi = 2 pi k / L``. Homogeneous multipliers act as zero
on the mean mode unless told otherwise.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from ._accel import thread_count

_WORKERS = thread_count()

Symbol = Union[Callable[["Grid"], np.ndarray], np.ndarray, float, complex]


def _fftn(x, axes):
    return sfft.fftn(x, axes=axes, norm="forward", workers=_WORKERS)


def _ifftn(x, axes):
    return sfft.ifftn(x, axes=axes, norm="forward", workers=_WORKERS)


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[0, L)^d`` sampled with ``N`` points per side."""

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension d must be 1, 2 or 3, got {self.d}")
        if self.N % 2:
            raise ValueError(f"N must be even, got {self.N}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"box length L must be positive, got {self.L}")

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def axes(self):
        return tuple(range(-self.d, 0))

    @property
    def dx(self):
        return self.L / self.N

    @property
    def cell_volume(self):
        return self.dx**self.d

    @property
    def volume(self):
        return self.L**self.d

    @property
    def k0(self):
        """Lattice spacing ``2 pi / L``."""
        return 2.0 * np.pi / self.L

    @cached_property
    def k1d(self):
        """Integer wavenumbers along one axis, FFT order."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    @cached_property
    def frequencies(self):
        """Sorted integer wavenumbers ``-N/2 .. N/2-1``."""
        return np.sort(self.k1d)

    @cached_property
    def kvec(self):
        """Integer multi-indices, shape ``(d, N, ..., N)``."""
        return np.stack(np.meshgrid(*([self.k1d] * self.d), indexing="ij"))

    @cached_property
    def xi(self):
        """Frequency vectors ``2 pi k / L``, shape ``(d, N, ..., N)``."""
        return self.k0 * self.kvec.astype(np.float64)

    @cached_property
    def xi_abs(self):
        return np.sqrt(np.sum(self.xi**2, axis=0))

    @cached_property
    def xi_l1(self):
        return np.sum(np.abs(self.xi), axis=0)

    @cached_property
    def l1_shell(self):
        """Integer ``sum |k_i|`` per lattice point."""
        return np.sum(np.abs(self.kvec), axis=0)

    @cached_property
    def nyquist_mask(self):
        """True where some component sits on ``k = -N/2``."""
        return np.any(self.kvec == -self.N // 2, axis=0)

    @cached_property
    def x(self):
        """Physical coordinates, shape ``(d, N, ..., N)``."""
        x1 = np.arange(self.N) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.d), indexing="ij"))

    def refined(self, factor=2):
        return Grid(self.d, self.N * factor, self.L)


def make_grid(d, N, L=2.0 * np.pi):
    return Grid(int(d), int(N), float(L))


def _check_coeff_shape(grid, coeffs):
    if coeffs.shape[-grid.d :] != grid.shape or coeffs.ndim not in (grid.d, grid.d + 1):
        raise ValueError(f"coefficient array of shape {coeffs.shape} does not match grid {grid.shape}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a (scalar or vector) field on ``grid``.

    Vector fields carry a leading component axis.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        _check_coeff_shape(self.grid, c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def is_vector(self):
        return self.coeffs.ndim == self.grid.d + 1

    @property
    def ncomp(self):
        return self.coeffs.shape[0] if self.is_vector else 1

    @property
    def mean(self):
        idx = (0,) * self.grid.d
        if self.is_vector:
            return self.coeffs[(slice(None),) + idx].copy()
        return complex(self.coeffs[idx])

    def component(self, i):
        if not self.is_vector:
            raise ValueError("scalar field has no components")
        return SpectralField(self.grid, self.coeffs[i])

    def to_physical(self, real=True):
        vals = _ifftn(self.coeffs, self.grid.axes)
        return vals.real if real else vals

    def with_coeffs(self, coeffs):
        return SpectralField(self.grid, coeffs)

    def without_mean(self):
        c = self.coeffs.copy()
        c[(Ellipsis,) + (0,) * self.grid.d] = 0.0
        return SpectralField(self.grid, c)

    def hermitian_defect(self):
        """Relative size of ``c(-xi) - conj(c(xi))``; zero for real fields."""
        c = self.coeffs
        flipped = c
        for ax in self.grid.axes:
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(flipped - np.conj(c))) / scale)

    def l2_norm(self):
        """Continuum L2 norm via Parseval: ``L^{d/2} * ||c||_2``."""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + _coeffs_of(other, self))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - _coeffs_of(other, self))

    __radd__ = __add__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise TypeError("use dealiased_product for field products")
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def _coeffs_of(x, like):
    """Coefficients of ``x``; a scalar is the constant function, i.e. it sits on the mean mode only."""
    if isinstance(x, SpectralField):
        return x.coeffs
    if np.isscalar(x):
        c = np.zeros_like(like.coeffs)
        c[(Ellipsis,) + (0,) * like.grid.d] = x
        return c
    return x


@dataclass(frozen=True, eq=False)
class State:
    """Density fluctuation ``a`` and velocity ``u`` (``d`` components)."""

    a: SpectralField
    u: SpectralField

    def __post_init__(self):
        g = self.a.grid
        if self.a.is_vector:
            raise ValueError("density fluctuation must be a scalar field")
        if self.u.grid != g or not self.u.is_vector or self.u.ncomp != g.d:
            raise ValueError("velocity must be a d-component field on the density grid")

    @property
    def grid(self):
        return self.a.grid

    def stacked(self):
        """``(1 + d, N, ..., N)`` coefficient array ``[a, u_1, ..., u_d]``."""
        return np.concatenate([self.a.coeffs[None], self.u.coeffs], axis=0)

    @classmethod
    def from_stacked(cls, grid, y):
        return cls(SpectralField(grid, y[0]), SpectralField(grid, y[1:]))

    @classmethod
    def zeros(cls, grid):
        return cls.from_stacked(grid, np.zeros((1 + grid.d,) + grid.shape, dtype=np.complex128))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def forward(grid, values):
    values = np.asarray(values)
    if values.shape[-grid.d :] != grid.shape:
        raise ValueError(f"physical array of shape {values.shape} does not match grid {grid.shape}")
    return SpectralField(grid, _fftn(values, grid.axes))


def inverse(field, real=True):
    return field.to_physical(real=real)


def transform(obj, direction="forward", grid=None):
    """``forward``: physical array -> SpectralField (needs ``grid``); ``inverse``: the reverse."""
    if direction == "forward":
        if grid is None:
            raise ValueError("forward transform needs the grid")
        return forward(grid, obj)
    if direction == "inverse":
        if not isinstance(obj, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        return inverse(obj)
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------


def evaluate_symbol(grid, m, at_zero=None, mean_nonzero=False):
    """Evaluate a symbol on the lattice and apply the zero-mode policy."""
    if callable(m):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(m(grid))
    else:
        vals = np.asarray(m)
    vals = np.broadcast_to(vals, grid.shape).astype(np.complex128)
    zero = (0,) * grid.d
    nonzero = np.ones(grid.shape, dtype=bool)
    nonzero[zero] = False
    if not np.all(np.isfinite(vals[nonzero])):
        raise ValueError("symbol is not finite on the nonzero lattice points")
    if at_zero is not None:
        vals[zero] = at_zero
    elif not np.isfinite(vals[zero]):
        if mean_nonzero:
            raise ValueError(
                "symbol is singular at xi=0 and the field has a nonzero mean; pass at_zero explicitly"
            )
        vals[zero] = 0.0
    return vals


def apply_multiplier(f, m, at_zero=None):
    """``coeffs(xi) <- m(xi) coeffs(xi)``, applied componentwise for vector fields."""
    mean = np.atleast_1d(f.mean)
    vals = evaluate_symbol(f.grid, m, at_zero=at_zero, mean_nonzero=bool(np.any(np.abs(mean) > 0)))
    return SpectralField(f.grid, f.coeffs * vals)


def lambda_symbol(s):
    """``|xi|^s``; singular at 0 for ``s < 0``."""

    def m(grid):
        if s < 0:
            with np.errstate(divide="ignore"):
                return np.where(grid.xi_abs > 0, grid.xi_abs**s, np.inf)
        if s == 0:
            return np.where(grid.xi_abs > 0, 1.0, 0.0)
        return grid.xi_abs**s

    return m


def gevrey_symbol(delta):
    """``exp(delta |xi|_1)``."""
    return lambda grid: np.exp(delta * grid.xi_l1)


def heat_symbol(beta_t):
    """``exp(-beta t |xi|^2)`` with complex ``beta`` allowed."""
    return lambda grid: np.exp(-beta_t * grid.xi_abs**2)


def gradient(f):
    if f.is_vector:
        raise ValueError("gradient of a vector field is not supported here")
    return SpectralField(f.grid, 1j * f.grid.xi * f.coeffs[None])


def divergence(u):
    if not u.is_vector or u.ncomp != u.grid.d:
        raise ValueError("divergence needs a d-component field")
    return SpectralField(u.grid, np.sum(1j * u.grid.xi * u.coeffs, axis=0))


def laplacian(f):
    return SpectralField(f.grid, -(f.grid.xi_abs**2) * f.coeffs)


def inverse_laplacian_gradient(f):
    """``(-Delta)^{-1} grad f`` with zero on the mean mode."""
    g = f.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(g.xi_abs > 0, 1.0 / g.xi_abs**2, 0.0)
    return SpectralField(g, 1j * g.xi * (inv * f.coeffs)[None])


def leray_project(u):
    """Return ``(P u, Q u)``; ``Q u = grad Delta^{-1} div u``, ``P`` is identity on the mean."""
    g = u.grid
    if not u.is_vector or u.ncomp != g.d:
        raise ValueError("Leray projection needs a d-component field")
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(g.xi_abs > 0, 1.0 / g.xi_abs**2, 0.0)
    xi_dot_u = np.sum(g.xi * u.coeffs, axis=0)
    q = g.xi * (inv * xi_dot_u)[None]
    return SpectralField(g, u.coeffs - q), SpectralField(g, q)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def lp_norm(values, grid, p):
    """Discrete L^p norm with cell weight ``(L/N)^d``; vector arrays use the pointwise Euclidean length."""
    p = float(p)
    if p < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    values = np.asarray(values)
    if values.ndim == grid.d + 1:
        mag = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    else:
        mag = np.abs(values)
    if np.isinf(p):
        return float(np.max(mag))
    if p == 2.0:
        return float(np.sqrt(grid.cell_volume * np.sum(mag * mag)))
    return float((grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def field_lp_norm(f, p):
    return lp_norm(f.to_physical(), f.grid, p)


# ---------------------------------------------------------------------------
# Dealiased products (3/2 zero padding; the Nyquist plane is dropped)
# ---------------------------------------------------------------------------


class Padder:
    """Moves coefficients between the ``N`` lattice and the ``3N/2`` padded lattice."""

    def __init__(self, grid, factor=1.5):
        self.grid = grid
        M = int(round(grid.N * factor))
        if M < grid.N or M % 2:
            raise ValueError(f"bad padding factor {factor}")
        self.M = M
        keep = np.abs(grid.k1d) < grid.N // 2
        self._src = np.nonzero(keep)[0]
        self._dst = np.mod(grid.k1d[keep], M)
        self.padded_shape = (M,) * grid.d

    def pad(self, coeffs):
        lead = coeffs.shape[: coeffs.ndim - self.grid.d]
        out = np.zeros(lead + self.padded_shape, dtype=np.complex128)
        src = np.ix_(*([self._src] * self.grid.d))
        dst = np.ix_(*([self._dst] * self.grid.d))
        out[(Ellipsis,) + dst] = coeffs[(Ellipsis,) + src]
        return out

    def truncate(self, coeffs):
        lead = coeffs.shape[: coeffs.ndim - self.grid.d]
        out = np.zeros(lead + self.grid.shape, dtype=np.complex128)
        src = np.ix_(*([self._src] * self.grid.d))
        dst = np.ix_(*([self._dst] * self.grid.d))
        out[(Ellipsis,) + src] = coeffs[(Ellipsis,) + dst]
        return out

    def to_physical(self, coeffs):
        return _ifftn(self.pad(coeffs), self.grid.axes)

    def from_physical(self, values):
        return self.truncate(_fftn(values, self.grid.axes))


_PADDERS: dict = {}


def padder_for(grid):
    p = _PADDERS.get(grid)
    if p is None:
        p = _PADDERS[grid] = Padder(grid)
    return p


def dealiased_product(f, g):
    """Product of two fields computed on the 3/2-padded grid and truncated back."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    pad = padder_for(f.grid)
    prod = pad.to_physical(f.coeffs) * pad.to_physical(g.coeffs)
    return SpectralField(f.grid, pad.from_physical(prod))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_MAGIC = b"NSKF"
_HEADER = struct.Struct("<4sIIIdI")  # magic, version, d, N, L, ncomp
_VERSION = 1


def to_bytes(f):
    """Binary container: header then little-endian complex64 coefficients (FFT order)."""
    c = f.coeffs if f.is_vector else f.coeffs[None]
    head = _HEADER.pack(_MAGIC, _VERSION, f.grid.d, f.grid.N, f.grid.L, c.shape[0])
    return head + c.astype("<c8").tobytes(order="C")


def from_bytes(blob):
    magic, version, d, N, L, ncomp = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise ValueError("not a field container (bad magic)")
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    grid = Grid(d, N, L)
    payload = np.frombuffer(blob, dtype="<c8", offset=_HEADER.size)
    expected = ncomp * N**d
    if payload.size != expected:
        raise ValueError(f"payload has {payload.size} coefficients, expected {expected}")
    c = payload.astype(np.complex128).reshape((ncomp,) + grid.shape)
    return SpectralField(grid, c if ncomp > 1 else c[0])


def save_field(path, f):
    with open(path, "wb") as fh:
        fh.write(to_bytes(f))


def load_field(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def to_csv(f, max_points=4096):
    """CSV rows ``comp,k1..kd,re,im``; refuses large grids."""
    g = f.grid
    if g.N**g.d > max_points:
        raise ValueError(f"grid has {g.N ** g.d} points, CSV export is limited to {max_points}")
    c = f.coeffs if f.is_vector else f.coeffs[None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# d", g.d, "N", g.N, "L", repr(g.L)])
    w.writerow(["comp"] + [f"k{i + 1}" for i in range(g.d)] + ["re", "im"])
    ks = g.kvec.reshape(g.d, -1).T
    for comp in range(c.shape[0]):
        flat = c[comp].ravel()
        for kk, val in zip(ks, flat):
            w.writerow([comp, *kk.tolist(), repr(float(val.real)), repr(float(val.imag))])
    return buf.getvalue()


def from_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    head = rows[0]
    d, N, L = int(head[1]), int(head[3]), float(head[5])
    grid = Grid(d, N, L)
    body = rows[2:]
    ncomp = 1 + max(int(r[0]) for r in body)
    c = np.zeros((ncomp,) + grid.shape, dtype=np.complex128)
    for r in body:
        comp = int(r[0])
        idx = tuple(int(k) % N for k in r[1 : 1 + d])
        c[(comp,) + idx] = complex(float(r[-2]), float(r[-1]))
    return SpectralField(grid, c if ncomp > 1 else c[0])


# ---------------------------------------------------------------------------
# Random test fields
# ---------------------------------------------------------------------------


def random_field(grid, rng, gamma=2.0, xi_c=None, ncomp=None, amplitude=1.0, band=None):
    """Real random field with spectrum ``|xi|^-gamma exp(-|xi|/xi_c)`` and random phases.

    Zero mean, Nyquist plane empty. ``band=(lo, hi)`` restricts ``|xi|`` to a window.
    The result is scaled to unit L2 norm per component, times ``amplitude``.
    """
    if xi_c is None:
        xi_c = grid.k0 * grid.N / 8.0
    shape = ((ncomp,) if ncomp else ()) + grid.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    with np.errstate(divide="ignore"):
        env = np.where(grid.xi_abs > 0, grid.xi_abs ** (-gamma) * np.exp(-grid.xi_abs / xi_c), 0.0)
    env = np.where(grid.nyquist_mask, 0.0, env)
    if band is not None:
        env = np.where((grid.xi_abs >= band[0]) & (grid.xi_abs <= band[1]), env, 0.0)
    c = noise * env
    # project onto real fields: symmetrise c(-k) = conj c(k)
    phys = _ifftn(c, grid.axes).real
    c = _fftn(phys, grid.axes)
    c = np.where(grid.nyquist_mask, 0.0, c)
    c[(Ellipsis,) + (0,) * grid.d] = 0.0
    f = SpectralField(grid, c)
    if f.is_vector:
        norms = np.sqrt(grid.volume * np.sum(np.abs(c) ** 2, axis=tuple(range(1, c.ndim))))
        c = c * (amplitude / np.where(norms > 0, norms, 1.0))[(slice(None),) + (None,) * grid.d]
        return SpectralField(grid, c)
    n = f.l2_norm()
    return f * (amplitude / n if n > 0 else 0.0)


def embed(f, grid):
    """Zero-pad ``f`` onto a finer lattice with the same box (same function)."""
    if grid.d != f.grid.d or grid.L != f.grid.L or grid.N < f.grid.N:
        raise ValueError("target grid must refine the source grid")
    src = f.grid
    keep = np.abs(src.k1d) < src.N // 2
    i_src = np.nonzero(keep)[0]
    i_dst = np.mod(src.k1d[keep], grid.N)
    lead = f.coeffs.shape[: f.coeffs.ndim - src.d]
    out = np.zeros(lead + grid.shape, dtype=np.complex128)
    out[(Ellipsis,) + np.ix_(*([i_dst] * src.d))] = f.coeffs[(Ellipsis,) + np.ix_(*([i_src] * src.d))]
    return SpectralField(grid, out)
