"""Dyadic decomposition on the periodic lattice and Besov / Chemin-Lerner norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .spectral_core import SpectralField, lp_norm


def chi(r):
    """Radial cut-off: 1 on ``|xi| <= 3/4``, 0 on ``|xi| >= 4/3``, smoothstep in between."""
    return kernels.chi_profile(r)


def phi(r):
    return chi(np.asarray(r) / 2.0) - chi(r)


class DyadicPartition:
    """Blocks ``j_min .. j_max`` cover every nonzero lattice frequency exactly once in sum."""

    def __init__(self, grid):
        self.grid = grid
        xi = grid.xi_abs
        xi_min = grid.k0
        xi_max = float(xi.max())
        # chi(2^{-j_min} xi) = 0 and chi(2^{-j_max-1} xi) = 1 on all nonzero lattice points
        self.j_min = math.floor(math.log2(0.75 * xi_min))
        self.j_max = math.ceil(math.log2(xi_max / 0.75)) - 1
        if self.j_max - self.j_min + 1 < 3:
            raise ValueError(f"grid {grid} hosts fewer than 3 dyadic shells")
        self._cache = {}

    @property
    def indices(self):
        return range(self.j_min, self.j_max + 1)

    def _check_j(self, j):
        if not (self.j_min - 1 <= j <= self.j_max + 1):
            raise ValueError(f"block index {j} outside [{self.j_min - 1}, {self.j_max + 1}]")

    def block_symbol(self, j):
        self._check_j(j)
        key = ("phi", j)
        if key not in self._cache:
            self._cache[key] = phi(self.grid.xi_abs * 2.0 ** (-j))
        return self._cache[key]

    def low_symbol(self, j):
        """``chi(2^{-j} xi)``; includes the mean mode."""
        key = ("chi", j)
        if key not in self._cache:
            self._cache[key] = chi(self.grid.xi_abs * 2.0 ** (-j))
        return self._cache[key]

    def partition_sum(self):
        total = np.zeros(self.grid.shape)
        for j in self.indices:
            total += self.block_symbol(j)
        return total


_PARTITIONS: dict = {}


def build_partition(grid):
    p = _PARTITIONS.get(grid)
    if p is None:
        p = _PARTITIONS[grid] = DyadicPartition(grid)
    return p


def dyadic_block(f, j, kind="block", partition=None):
    """``block``: phi(2^{-j} D) f.  ``low_cutoff``: chi(2^{-j} D) f (the operator S_j)."""
    part = partition or build_partition(f.grid)
    if kind == "block":
        sym = part.block_symbol(j)
    elif kind == "low_cutoff":
        part._check_j(j)
        sym = part.low_symbol(j)
    else:
        raise ValueError(f"unknown block kind {kind!r}")
    return SpectralField(f.grid, f.coeffs * sym)


@dataclass(frozen=True)
class BesovSpec:
    sigma: float
    p: float = 2.0
    r: float = 1.0
    k0: int = 2

    def __post_init__(self):
        for name in ("p", "r"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must be in [1, inf], got {v}")

    def with_sigma(self, sigma):
        return BesovSpec(sigma, self.p, self.r, self.k0)


def validate_theorem_exponent(p, d):
    """Lebesgue range admitted by the L^p global result: ``2 <= p <= min(4, 2d/(d-2))``, ``p != 4`` in 2D."""
    upper = 4.0 if d <= 2 else min(4.0, 2.0 * d / (d - 2))
    if not (2.0 <= p <= upper):
        raise ValueError(f"p={p} violates 2 <= p <= min(4, 2d/(d-2)) = {upper} for d={d}")
    if d == 2 and p == 4.0:
        raise ValueError("p=4 is excluded when d=2 (p != 4 if d=2)")
    return p


@dataclass
class NormReport:
    value: float
    per_block: dict = field(default_factory=dict)
    tail_mass: float = 0.0

    def to_json(self):
        return json.dumps(
            {
                "value": self.value,
                "per_block": {str(j): v for j, v in sorted(self.per_block.items())},
                "tail_mass": self.tail_mass,
            },
            indent=2,
        )

    def bar_table(self, width=40):
        top = max(self.per_block.values(), default=0.0) or 1.0
        lines = [f"{'j':>4}  {'2^(j sigma)|D_j f|_p':>22}"]
        for j, v in sorted(self.per_block.items()):
            bar = "#" * int(round(width * v / top))
            lines.append(f"{j:>4}  {v:22.6e}  {bar}")
        lines.append(f"value={self.value:.6e}  tail_mass={self.tail_mass:.3e}")
        return "\n".join(lines)


def aggregate(values, r):
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        return 0.0
    if np.isinf(r):
        return float(v.max())
    if r == 1:
        return float(v.sum())
    return float(np.sum(v**r) ** (1.0 / r))


def block_lp_norms(f, p, partition=None, indices=None):
    """``{j: ||Delta_j f||_{L^p}}`` over the requested blocks."""
    part = partition or build_partition(f.grid)
    out = {}
    for j in indices if indices is not None else part.indices:
        out[j] = lp_norm(dyadic_block(f, j, partition=part).to_physical(), f.grid, p)
    return out


def _check_mean(f, drop_mean):
    if drop_mean:
        return
    mean = np.atleast_1d(f.mean)
    scale = float(np.max(np.abs(f.coeffs))) or 1.0
    if np.any(np.abs(mean) > 1e-12 * scale):
        raise ValueError("homogeneous Besov norm needs a zero-mean field (or drop_mean=True)")


def besov_norm(f, spec, partition=None, drop_mean=False, block_norms=None):
    _check_mean(f, drop_mean)
    part = partition or build_partition(f.grid)
    raw = block_norms if block_norms is not None else block_lp_norms(f, spec.p, part)
    per_block = {j: 2.0 ** (j * spec.sigma) * v for j, v in raw.items()}
    value = aggregate(per_block.values(), spec.r)
    tails = [per_block[j] for j in (part.j_min, part.j_max) if j in per_block]
    if value == 0:
        tail = 0.0
    elif np.isinf(spec.r):
        tail = max(tails) / value
    else:
        tail = aggregate(tails, spec.r) ** spec.r / value**spec.r
    return NormReport(value=value, per_block=per_block, tail_mass=float(tail))


def split_low_high(f, k0, sigma=0.0, p=2.0, partition=None, block_norms=None, drop_mean=True):
    """``(sum_{k<=k0}, sum_{k>=k0-1})`` of ``2^{k sigma} ||Delta_k f||_p``; block ``k0-1 .. k0`` counted twice."""
    _check_mean(f, drop_mean)
    part = partition or build_partition(f.grid)
    raw = block_norms if block_norms is not None else block_lp_norms(f, p, part)
    low = sum(2.0 ** (k * sigma) * v for k, v in raw.items() if k <= k0)
    high = sum(2.0 ** (k * sigma) * v for k, v in raw.items() if k >= k0 - 1)
    return float(low), float(high)


def time_norm(times, values, q):
    """L^q over time of sampled nonnegative values (trapezoid; max for q = inf)."""
    values = np.asarray(values, dtype=np.float64)
    if np.isinf(q):
        return float(values.max())
    times = np.asarray(times, dtype=np.float64)
    if times.size < 2:
        raise ValueError("need at least 2 time samples for q < inf")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time samples must be strictly increasing")
    return float(np.trapezoid(values**q, times) ** (1.0 / q))


def _check_q(q):
    if q not in (1, 2) and not np.isinf(q):
        raise ValueError(f"time exponent q must be 1, 2 or inf, got {q}")


def chemin_lerner_norm(times, fields, q, spec, partition=None, drop_mean=False, restrict=None):
    """``|| 2^{j sigma} ||Delta_j f||_{L^q_T(L^p)} ||_{l^r}``.

    ``restrict`` may be ``"low"`` (blocks ``<= k0``) or ``"high"`` (blocks ``>= k0 - 1``).
    """
    _check_q(q)
    if len(fields) < 2 and not np.isinf(q):
        raise ValueError("need at least 2 time samples for q < inf")
    if len(times) != len(fields):
        raise ValueError("times and fields differ in length")
    part = partition or build_partition(fields[0].grid)
    for f in fields:
        _check_mean(f, drop_mean)
    series = [block_lp_norms(f, spec.p, part) for f in fields]
    return chemin_lerner_from_blocks(times, series, q, spec, restrict=restrict)


def chemin_lerner_from_blocks(times, series, q, spec, restrict=None):
    """Same as ``chemin_lerner_norm`` from precomputed per-time ``{j: ||Delta_j f||_p}`` maps."""
    _check_q(q)
    js = sorted(series[0])
    if restrict == "low":
        js = [j for j in js if j <= spec.k0]
    elif restrict == "high":
        js = [j for j in js if j >= spec.k0 - 1]
    elif restrict is not None:
        raise ValueError(f"unknown restriction {restrict!r}")
    per_block = [2.0 ** (j * spec.sigma) * time_norm(times, [s[j] for s in series], q) for j in js]
    return aggregate(per_block, spec.r)


def lebesgue_besov_norm(times, fields, q, spec, partition=None, drop_mean=False):
    """Plain ``L^q_T(B^sigma_{p,r})``: Besov norm first, then time."""
    _check_q(q)
    vals = [besov_norm(f, spec, partition, drop_mean=drop_mean).value for f in fields]
    return time_norm(times, vals, q)
