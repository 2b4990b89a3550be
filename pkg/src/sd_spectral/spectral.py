"""Periodic grids, discrete Fourier transforms and norms.

Transform normalization
-----------------------
``forward_transform`` is the unnormalized DFT (numpy's default), and
``inverse_transform`` carries the ``1/n**dim`` factor. The discrete L2 norm
of a physical field is the Riemann sum ``(h**dim * sum |f|**2) ** 0.5`` with
``h = extent / points``; the matching spectral norm is
``(h**dim / n**dim * sum |fhat|**2) ** 0.5`` where ``n = points``. These two
agree exactly (Parseval), and every spectral norm below (Sobolev, gradient)
uses the same constant.

The bracket weight used by ``sobolev_norm`` is ``1 + |xi|``, not the
Japanese bracket ``(1 + |xi|**2) ** 0.5``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import AliasingError, FieldError, GridError, MultiplierError

__all__ = [
    "Grid",
    "ComplexField",
    "RealField",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "spectral_l2",
    "apply_multiplier",
    "lp_norm",
    "sobolev_norm",
    "gradient_l2",
    "bracket",
    "resample",
]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box ``[0, extent)**dim``."""

    dim: int
    points: int
    extent: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"invalid dimension {self.dim!r}; expected 1, 2 or 3")
        if not isinstance(self.points, (int, np.integer)) or self.points < 8 or not _is_power_of_two(int(self.points)):
            raise GridError(
                f"points_per_axis={self.points!r} must be a power of two >= 8"
            )
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise GridError(f"extent must be positive, got {self.extent!r}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Per-axis wavenumbers ``2*pi*k/extent`` in standard DFT order."""
        k = np.fft.fftfreq(self.points, d=1.0 / self.points)
        xi = (2.0 * np.pi / self.extent) * k
        xi.flags.writeable = False
        return xi

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) wavenumber mesh, one array per axis."""
        mesh = np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij", sparse=True)
        for m in mesh:
            m.flags.writeable = False
        return tuple(mesh)

    @cached_property
    def xi_squared(self) -> np.ndarray:
        out = sum(m ** 2 for m in self.xi) * np.ones(self.shape)
        out.flags.writeable = False
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        out = np.sqrt(self.xi_squared)
        out.flags.writeable = False
        return out

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sparse physical coordinate mesh ``x_j = j * spacing``."""
        x = np.arange(self.points) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True))

    def centered_coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinates shifted so the box centre sits at the origin."""
        return tuple(c - self.extent / 2 for c in self.coordinates())


def make_grid(dim: int, points_per_axis: int, extent: float) -> Grid:
    return Grid(dim, points_per_axis, extent)


class _Field:
    kind = ""
    dtype: type = np.complex128

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=self.dtype, copy=True)
        if arr.size != grid.size:
            raise FieldError(
                f"field has {arr.size} samples, grid needs {grid.size}"
            )
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise FieldError("field contains non-finite samples")
        arr.flags.writeable = False
        self._grid = grid
        self._values = arr

    @property
    def grid(self) -> Grid:
        return self._grid

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __mul__(self, c):
        return type(self)(self.grid, self.values * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and other.grid == self.grid
            and np.array_equal(other.values, self.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid!r})"


class ComplexField(_Field):
    """Complex samples of u on a grid, stored with the grid's shape."""

    kind = "complex"
    dtype = np.complex128

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape))


class RealField(_Field):
    """Real samples of v on a grid."""

    kind = "real"
    dtype = np.float64

    def __init__(self, grid: Grid, values):
        if np.iscomplexobj(values):
            raise FieldError("RealField requires real-valued samples")
        super().__init__(grid, values)

    @classmethod
    def zeros(cls, grid: Grid) -> "RealField":
        return cls(grid, np.zeros(grid.shape))


Field = Union[ComplexField, RealField]


def forward_transform(f: Field) -> ComplexField:
    """Unnormalized DFT of ``f`` (spectrum stored as a ComplexField)."""
    return ComplexField(f.grid, np.fft.fftn(f.values))


def inverse_transform(fhat: ComplexField) -> ComplexField:
    return ComplexField(fhat.grid, np.fft.ifftn(fhat.values))


def spectral_l2(fhat: ComplexField) -> float:
    """L2 norm of a field computed from its spectrum."""
    g = fhat.grid
    return float(np.sqrt(g.cell_volume / g.size * np.sum(np.abs(fhat.values) ** 2)))


Multiplier = Union[Callable[..., np.ndarray], np.ndarray, complex, float]


def _evaluate_multiplier(grid: Grid, m: Multiplier) -> np.ndarray:
    if callable(m):
        vals = m(*grid.xi)
    else:
        vals = m
    vals = np.broadcast_to(np.asarray(vals), grid.shape)
    if not np.all(np.isfinite(vals)):
        raise MultiplierError("multiplier is non-finite at some grid wavenumber")
    return vals


def apply_multiplier(f: Field, m: Multiplier) -> ComplexField:
    """Multiply the spectrum of ``f`` pointwise by ``m(xi_1, ..., xi_dim)``.

    ``m`` is either a callable receiving one broadcastable wavenumber array
    per axis, or an array/scalar already sampled on the wavenumber mesh.
    """
    vals = _evaluate_multiplier(f.grid, m)
    return ComplexField(f.grid, np.fft.ifftn(np.fft.fftn(f.values) * vals))


def lp_norm(f: Field, p: float = 2.0) -> float:
    """Riemann-sum L^p norm; ``p=np.inf`` gives the max modulus."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1 or inf, got {p!r}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    if p == 2:
        return float(np.sqrt(f.grid.cell_volume * np.sum(a * a)))
    return float((f.grid.cell_volume * np.sum(a ** p)) ** (1.0 / p))


def bracket(x):
    """The weight ``1 + |x|``."""
    return 1.0 + np.abs(x)


def _weighted_spectral_l2(f: Field, weight: np.ndarray) -> float:
    g = f.grid
    fhat = np.fft.fftn(f.values)
    return float(np.sqrt(g.cell_volume / g.size * np.sum((weight * np.abs(fhat)) ** 2)))


def sobolev_norm(f: Field, s: float) -> float:
    """``|| (1+|xi|)**s fhat ||_2``."""
    if s == 0:
        return _weighted_spectral_l2(f, 1.0)
    return _weighted_spectral_l2(f, bracket(f.grid.xi_abs) ** s)


def gradient_l2(f: Field) -> float:
    """``||grad f||_2`` evaluated spectrally as ``|| |xi| fhat ||_2``."""
    return _weighted_spectral_l2(f, f.grid.xi_abs)


def resample(f: Field, grid: Grid) -> Field:
    """Spectral interpolation of ``f`` onto ``grid`` (same dim).

    Only the point count matters here; the extent of ``grid`` is taken as a
    relabelling of the same periodic box. Raises
    :class:`~sd_spectral.errors.AliasingError` when the discarded modes carry
    more than ``1e-12`` of the field's spectral L2 norm.
    """
    src = f.grid
    if grid.dim != src.dim:
        raise FieldError("resample cannot change dimension")
    n, m = src.points, grid.points
    fhat = np.fft.fftn(f.values)
    if m == n:
        out = fhat
    else:
        k_src = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        # the source Nyquist mode is dropped in both directions (keeps real fields real)
        keep = np.abs(k_src) < min(n, m) // 2
        mask = keep
        for _ in range(src.dim - 1):
            mask = np.multiply.outer(mask, keep)
        total = np.sum(np.abs(fhat) ** 2)
        lost = np.sum(np.abs(fhat[~mask]) ** 2)
        if total > 0 and np.sqrt(lost / total) > 1e-12:
            raise AliasingError(
                f"resampling {n} -> {m} points discards a fraction "
                f"{np.sqrt(lost / total):.3e} of the spectrum"
            )
        out = np.zeros(grid.shape, dtype=complex)
        k_dst = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        half = min(n, m) // 2
        src_idx = np.nonzero(np.abs(k_src) < half)[0]
        dst_idx = np.array([int(np.nonzero(k_dst == k)[0][0]) for k in k_src[src_idx]])
        ix_src = np.ix_(*([src_idx] * src.dim))
        ix_dst = np.ix_(*([dst_idx] * src.dim))
        out[ix_dst] = fhat[ix_src]
        out *= (m / n) ** src.dim
    vals = np.fft.ifftn(out)
    if isinstance(f, RealField):
        return RealField(grid, vals.real)
    return ComplexField(grid, vals)
