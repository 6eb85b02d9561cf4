"""Periodic Fourier collocation grids and exact exponentials of diagonal operators.

Functions on a tensor-product periodic box are sampled at
``x_j = lower + j * dx`` (right endpoint excluded).  Derivatives are Fourier
multipliers: ``d/dx`` has symbol ``i*pi*m/L`` and ``d^2/dx^2`` has symbol
``-(pi*m/L)**2`` where ``L`` is the half-width of the axis and ``m`` the signed
integer frequency of the FFT bin.

The first-derivative symbol is zeroed at the Nyquist bin so that the discrete
gradient stays real and skew-symmetric; the second-derivative symbol keeps its
full value there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

_FFT_WORKERS = 1
_FFT_CALLS = 0


def set_fft_workers(n: int) -> None:
    """Set the number of threads used by every FFT in the package."""
    global _FFT_WORKERS
    if n < 1:
        raise ValueError("need at least one FFT worker")
    _FFT_WORKERS = int(n)


def fft_workers() -> int:
    return _FFT_WORKERS


def fft_count() -> int:
    """Number of full-grid transforms (forward or inverse) performed so far."""
    return _FFT_CALLS


def fftn(values: np.ndarray, axes=None) -> np.ndarray:
    global _FFT_CALLS
    _FFT_CALLS += 1
    return sfft.fftn(values, axes=axes, workers=_FFT_WORKERS)


def ifftn(values: np.ndarray, axes=None) -> np.ndarray:
    global _FFT_CALLS
    _FFT_CALLS += 1
    return sfft.ifftn(values, axes=axes, workers=_FFT_WORKERS)


class SpectralGrid:
    """Tensor-product periodic grid in one to three dimensions.

    Parameters
    ----------
    bounds : sequence of (lower, upper)
        One interval per axis.
    points : sequence of int
        Number of collocation points per axis (at least 4).

    Attributes
    ----------
    coords : list of ndarray
        1-D coordinate vector for each axis.
    c1, c2 : list of ndarray
        Fourier symbols of the first and second derivative per axis, in FFT
        bin order.
    """

    def __init__(self, bounds: Sequence[Sequence[float]], points: Sequence[int]):
        bounds = [tuple(map(float, b)) for b in bounds]
        points = [int(m) for m in points]
        if len(bounds) != len(points):
            raise ValueError("bounds and points must have one entry per axis")
        if not 1 <= len(points) <= 3:
            raise ValueError(f"only 1 to 3 dimensions are supported, got {len(points)}")
        for (lo, hi), m in zip(bounds, points):
            if not hi > lo:
                raise ValueError(f"non-positive interval [{lo}, {hi}]")
            if m < 4:
                raise ValueError(f"need at least 4 points per axis, got {m}")

        self.bounds = bounds
        self.points = points
        self.dims = len(points)
        self.shape = tuple(points)
        self.spacing = [(hi - lo) / m for (lo, hi), m in zip(bounds, points)]
        self.coords = [lo + dx * np.arange(m) for (lo, _), dx, m in zip(bounds, self.spacing, points)]

        self.c1 = []
        self.c2 = []
        for (lo, hi), m in zip(bounds, points):
            half = (hi - lo) / 2
            k = np.pi * sfft.fftfreq(m, d=1.0 / m) / half
            c1 = 1j * k
            if m % 2 == 0:
                c1[m // 2] = 0.0
            self.c1.append(c1)
            self.c2.append(-(k**2))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays broadcast to the full grid shape ("ij" indexing)."""
        return np.meshgrid(*self.coords, indexing="ij")

    def axis_view(self, vec: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a per-axis vector so that it broadcasts along ``axis``."""
        shape = [1] * self.dims
        shape[axis] = -1
        return np.reshape(vec, shape)

    def laplacian_symbol(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ax in range(self.dims):
            out = out + self.axis_view(self.c2[ax], ax)
        return out

    def _check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.dims:
            raise IndexError(f"axis {axis} out of range for a {self.dims}-D grid")

    def __repr__(self) -> str:
        return f"SpectralGrid(bounds={self.bounds}, points={self.points})"


def make_grid(bounds: Sequence[Sequence[float]], points: Sequence[int] | int) -> SpectralGrid:
    """Build a :class:`SpectralGrid`; a scalar ``points`` is used on every axis."""
    if np.isscalar(points):
        points = [int(points)] * len(bounds)
    return SpectralGrid(bounds, points)


@dataclass
class WaveFunction:
    """Complex state sampled on a grid; ``values`` has shape ``grid.shape``."""

    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            self.values = self.values.reshape(self.grid.shape)

    def norm(self) -> float:
        return norm(self.grid, self.values)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / self.norm())

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values.copy())

    def distance(self, other: "WaveFunction") -> float:
        """Grid-weighted L2 distance, no phase alignment."""
        return norm(self.grid, self.values - other.values)


def norm(grid: SpectralGrid, values: np.ndarray) -> float:
    return float(np.sqrt(grid.cell_volume * np.vdot(values, values).real))


def sample(grid: SpectralGrid, fn: Callable[..., np.ndarray]) -> np.ndarray:
    """Evaluate ``fn(x1, ..., xd)`` on the full grid."""
    return np.asarray(fn(*grid.mesh()))


def apply_diag_fourier(u: WaveFunction, axis: int, symbol_fn) -> WaveFunction:
    """Apply ``F^-1 D F`` along a single axis.

    ``symbol_fn`` is either an array of per-bin values or a callable taking
    the signed integer frequencies of that axis and returning the symbol.
    """
    grid = u.grid
    grid._check_axis(axis)
    if callable(symbol_fn):
        m = grid.points[axis]
        symbol = np.asarray(symbol_fn(sfft.fftfreq(m, d=1.0 / m)))
    else:
        symbol = np.asarray(symbol_fn)
    hat = sfft.fft(u.values, axis=axis, workers=_FFT_WORKERS)
    hat *= grid.axis_view(symbol, axis)
    return WaveFunction(grid, sfft.ifft(hat, axis=axis, workers=_FFT_WORKERS))


def kinetic_symbol(grid: SpectralGrid, a: complex, drift=None) -> np.ndarray:
    """Full-grid symbol of ``exp(a*Laplacian - drift . grad)``."""
    expo = a * grid.laplacian_symbol()
    if drift is not None:
        drift = np.broadcast_to(np.asarray(drift, dtype=float), (grid.dims,))
        for ax in range(grid.dims):
            if drift[ax] != 0.0:
                expo = expo - drift[ax] * grid.axis_view(grid.c1[ax], ax)
    return np.exp(expo)


def _kinetic_values(grid: SpectralGrid, values: np.ndarray, a: complex, drift) -> np.ndarray:
    return ifftn(fftn(values) * kinetic_symbol(grid, a, drift))


def exp_kinetic(u: WaveFunction, a: complex, drift=None, inplace: bool = False) -> WaveFunction:
    """Return ``exp(a * Laplacian - drift . grad) u``.

    The caller folds any ``i h eps`` factor into ``a``; e.g. the kinetic
    stage with splitting weight ``w`` uses ``a = 1j * w * h * eps``.
    """
    out = _kinetic_values(u.grid, u.values, a, drift)
    if inplace:
        u.values[...] = out
        return u
    return WaveFunction(u.grid, out)


def exp_potential(u: WaveFunction, phase: np.ndarray, inplace: bool = False) -> WaveFunction:
    """Return ``exp(phase) * u`` pointwise."""
    phase = np.asarray(phase)
    if phase.shape != u.grid.shape and phase.shape != ():
        raise ValueError(f"phase shape {phase.shape} does not match grid {u.grid.shape}")
    if inplace:
        u.values *= np.exp(phase)
        return u
    return WaveFunction(u.grid, np.exp(phase) * u.values)


def laplacian(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    return ifftn(fftn(values) * grid.laplacian_symbol())


def gradient(grid: SpectralGrid, values: np.ndarray) -> list[np.ndarray]:
    """Spectral gradient, one array per axis."""
    hat = fftn(values)
    return [ifftn(hat * grid.axis_view(grid.c1[ax], ax)) for ax in range(grid.dims)]


def dense_derivative(grid: SpectralGrid, order: int, axis: int = 0) -> np.ndarray:
    """Dense matrix of the spectral derivative along one axis of a 1-D grid.

    Intended for small verification problems only.
    """
    if grid.dims != 1:
        raise ValueError("dense matrices are only provided for 1-D grids")
    m = grid.points[axis]
    symbol = grid.c1[axis] if order == 1 else grid.c2[axis]
    eye = np.eye(m)
    return sfft.ifft(symbol[:, None] * sfft.fft(eye, axis=0), axis=0)
