"""Discrete Fourier restriction norms and empirical bilinear ratios.

A :class:`SpaceTimeTrace` is a uniformly sampled stack of snapshots. Norms
are computed from the space-time DFT of the tapered trace with the Plancherel
normalization, so that with all exponents zero they reduce to the Riemann-sum
space-time L2 norm of the tapered data. The taper stands in for a smooth
time cutoff; every number below depends on it, so ratios built from these
norms are qualitative probes, not certified constants.

Sign convention: a free wave ``exp(i(xi.x - |xi|^2 t / 2))`` has its
space-time spectrum at ``tau = -|xi|^2/2``, i.e. on the zero set of the
modulation ``tau + |xi|^2/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

import numpy as np
import scipy.fft as sfft

from .errors import RegionError
from .spectral import Grid, bracket

__all__ = [
    "BourgainParams",
    "region_w_violations",
    "check_region_w",
    "in_region_w",
    "SpaceTimeTrace",
    "taper_window",
    "bourgain_norm_u",
    "restriction_norm_v",
    "RatioStats",
    "bilinear_ratio_uv",
    "bilinear_ratio_uw",
    "random_trace",
    "random_uv_ensemble",
    "random_uw_ensemble",
    "resonance_gap",
]


def _exact(x):
    # Fractions keep boundary cases like ell == 2s exact for decimal input
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def region_w_violations(s, ell) -> list[str]:
    """Names of the violated inequalities of ``max{0, s-1} <= ell <= min{2s, s+1}``."""
    s_, l_ = _exact(s), _exact(ell)
    bad = []
    if l_ < 0:
        bad.append("ell >= 0")
    if l_ < s_ - 1:
        bad.append("ell >= s - 1")
    if l_ > 2 * s_:
        bad.append("ell <= 2s")
    if l_ > s_ + 1:
        bad.append("ell <= s + 1")
    return bad


def in_region_w(s, ell) -> bool:
    return not region_w_violations(s, ell)


def check_region_w(s, ell) -> None:
    bad = region_w_violations(s, ell)
    if bad:
        raise RegionError(f"(s, ell) = ({s}, {ell}) violates: {', '.join(bad)}")


@dataclass(frozen=True)
class BourgainParams:
    s: float
    ell: float
    b: float = 0.55
    c: float = 0.55

    def __post_init__(self):
        check_region_w(self.s, self.ell)


def taper_window(n: int, kind: str = "raised-cosine") -> np.ndarray:
    """Temporal taper. ``raised-cosine`` is the periodic Hann window."""
    if kind == "raised-cosine":
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))
    if kind == "none":
        return np.ones(n)
    raise ValueError(f"unknown taper {kind!r}")


@dataclass
class SpaceTimeTrace:
    grid: Grid
    dt: float
    snapshots: np.ndarray  # (n_times, *grid.shape)
    taper: str = "raised-cosine"
    t0: float = 0.0

    def __post_init__(self):
        self.snapshots = np.asarray(self.snapshots)
        if self.snapshots.shape[1:] != self.grid.shape:
            raise ValueError(
                f"snapshot shape {self.snapshots.shape[1:]} does not match grid {self.grid.shape}"
            )
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def n_times(self) -> int:
        return self.snapshots.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_times)

    def tapered(self) -> np.ndarray:
        w = taper_window(self.n_times, self.taper)
        return self.snapshots * w.reshape((-1,) + (1,) * self.grid.dim)

    def frequencies(self):
        """``(tau, |xi|)`` broadcastable against the space-time spectrum."""
        tau = 2.0 * np.pi * np.fft.fftfreq(self.n_times, d=self.dt)
        return tau.reshape((-1,) + (1,) * self.grid.dim), self.grid.xi_abs[None]

    def spectrum(self) -> np.ndarray:
        return sfft.fftn(self.tapered())

    def scaled(self, c) -> "SpaceTimeTrace":
        return SpaceTimeTrace(self.grid, self.dt, self.snapshots * c, self.taper, self.t0)

    def _weighted_l2(self, weight, spectrum=None) -> float:
        if self.n_times < 2:
            raise ValueError("a space-time norm needs at least two snapshots")
        F = self.spectrum() if spectrum is None else spectrum
        g = self.grid
        norm = g.cell_volume * self.dt / (self.n_times * g.size)
        return float(np.sqrt(norm * np.sum(np.abs(weight * F) ** 2)))


def bourgain_norm_u(trace: SpaceTimeTrace, s: float, b: float) -> float:
    """``|| <xi>^s <tau + |xi|^2/2>^b  u^(xi, tau) ||_2`` of the tapered trace."""
    tau, xi = trace.frequencies()
    return trace._weighted_l2(bracket(xi) ** s * bracket(tau + 0.5 * xi ** 2) ** b)


def restriction_norm_v(trace: SpaceTimeTrace, ell: float, c: float) -> float:
    """``|| <xi>^ell <tau>^c  v^(xi, tau) ||_2`` of the tapered trace."""
    tau, xi = trace.frequencies()
    return trace._weighted_l2(bracket(xi) ** ell * bracket(tau) ** c)


@dataclass
class RatioStats:
    ratios: np.ndarray
    skipped: int
    max: float = field(init=False)
    mean: float = field(init=False)
    histogram: tuple = field(init=False)

    def __post_init__(self):
        self.ratios = np.asarray(self.ratios, dtype=float)
        if self.ratios.size:
            self.max = float(self.ratios.max())
            self.mean = float(self.ratios.mean())
            self.histogram = np.histogram(self.ratios, bins=10)
        else:
            self.max = self.mean = float("nan")
            self.histogram = (np.zeros(0), np.zeros(0))

    @property
    def used(self) -> int:
        return int(self.ratios.size)


def _tapered_product(a: SpaceTimeTrace, b: np.ndarray) -> SpaceTimeTrace:
    # the factors are tapered individually; the product is not tapered again
    return SpaceTimeTrace(a.grid, a.dt, a.tapered() * b, "none", a.t0)


def bilinear_ratio_uv(
    ensemble: Iterable[tuple[SpaceTimeTrace, SpaceTimeTrace]],
    p: BourgainParams,
    eps1: float = 0.05,
    eps2: float = 0.05,
    eps: float = 0.05,
) -> RatioStats:
    """``||uv||_{X^{s,-b1}} / (||u||_{X^{s,b2}} ||v||_{H^{ell,c}})`` over an ensemble.

    ``b1 = 1/2 - eps1``, ``b2 = 1/2 + eps2``, ``c = 1/2 + eps``. Members with
    a zero factor norm are skipped and counted.
    """
    b1, b2, c = 0.5 - eps1, 0.5 + eps2, 0.5 + eps
    out, skipped = [], 0
    for u, v in ensemble:
        nu = bourgain_norm_u(u, p.s, b2)
        nv = restriction_norm_v(v, p.ell, c)
        if nu == 0 or nv == 0:
            skipped += 1
            continue
        prod = _tapered_product(u, v.tapered())
        out.append(bourgain_norm_u(prod, p.s, -b1) / (nu * nv))
    return RatioStats(np.array(out), skipped)


def bilinear_ratio_uw(
    ensemble: Iterable[tuple[SpaceTimeTrace, SpaceTimeTrace]],
    p: BourgainParams,
    eps3: float = 0.05,
    eps: float = 0.05,
) -> RatioStats:
    """``||u conj(w)||_{H^{ell,-b}} / (||u||_{X^{s,b3}} ||w||_{X^{s,b3}})``.

    ``b = 1/2 - eps``, ``b3 = 1/2 + eps3``.
    """
    b, b3 = 0.5 - eps, 0.5 + eps3
    out, skipped = [], 0
    for u, w in ensemble:
        nu = bourgain_norm_u(u, p.s, b3)
        nw = bourgain_norm_u(w, p.s, b3)
        if nu == 0 or nw == 0:
            skipped += 1
            continue
        prod = _tapered_product(u, np.conj(w.tapered()))
        out.append(restriction_norm_v(prod, p.ell, -b) / (nu * nw))
    return RatioStats(np.array(out), skipped)


def random_trace(
    rng: np.random.Generator,
    grid: Grid,
    n_times: int,
    dt: float,
    band: float,
    modulation: float,
    dispersive: bool,
    real: bool = False,
) -> SpaceTimeTrace:
    """Random band-limited trace with spectrum near a prescribed surface.

    Spectral support is ``|xi| <= band`` and ``|tau + |xi|^2/2| <= modulation``
    for ``dispersive`` traces (u-like), ``|tau| <= modulation`` otherwise
    (v-like). Coefficients are complex Gaussian with a mild ``<xi>^-1`` decay.
    """
    tau = 2.0 * np.pi * np.fft.fftfreq(n_times, d=dt)
    tau = tau.reshape((-1,) + (1,) * grid.dim)
    xi = grid.xi_abs[None]
    sigma = tau + 0.5 * xi ** 2 if dispersive else tau
    support = (xi <= band) & (np.abs(sigma) <= modulation)
    shape = (n_times,) + grid.shape
    coeff = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    spec = np.where(support, coeff / bracket(xi), 0.0)
    data = sfft.ifftn(spec) * (n_times * grid.size) ** 0.5
    if real:
        data = data.real
    return SpaceTimeTrace(grid, dt, data)


def _ensemble_grid() -> Grid:
    return Grid(2, 32, 8.0 * np.pi)


def random_uv_ensemble(
    n: int,
    seed: int = 0,
    grid: Optional[Grid] = None,
    n_times: int = 64,
    dt: float = 0.1,
    band: float = 1.75,
    modulation: float = 2.0,
) -> Iterator[tuple[SpaceTimeTrace, SpaceTimeTrace]]:
    """``n`` independent (u, v) pairs; v is real.

    The defaults keep both factors under a quarter of the spatial Nyquist
    band so that the pointwise product is alias free.
    """
    grid = grid or _ensemble_grid()
    rng = np.random.default_rng(seed)
    for _ in range(n):
        u = random_trace(rng, grid, n_times, dt, band, modulation, dispersive=True)
        v = random_trace(rng, grid, n_times, dt, band, modulation, dispersive=False, real=True)
        yield u, v


def random_uw_ensemble(
    n: int,
    seed: int = 0,
    grid: Optional[Grid] = None,
    n_times: int = 64,
    dt: float = 0.1,
    band: float = 1.75,
    modulation: float = 2.0,
) -> Iterator[tuple[SpaceTimeTrace, SpaceTimeTrace]]:
    grid = grid or _ensemble_grid()
    rng = np.random.default_rng(seed)
    for _ in range(n):
        u = random_trace(rng, grid, n_times, dt, band, modulation, dispersive=True)
        w = random_trace(rng, grid, n_times, dt, band, modulation, dispersive=True)
        yield u, w


def resonance_gap(xi1, xi2) -> float:
    """``(|xi1|^2 - |xi2|^2) / 2``, the forced modulation gap for ``xi = xi1 - xi2``."""
    a = np.asarray(xi1, dtype=float)
    b = np.asarray(xi2, dtype=float)
    return 0.5 * float(np.sum(a * a) - np.sum(b * b))
