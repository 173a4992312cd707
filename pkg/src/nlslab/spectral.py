"""Periodic grid, physical/spectral transforms, Fourier multipliers, dealiasing.

Conventions (fixed once, asserted by the Parseval tests):

* coordinates are centered, x_j = -L/2 + j*h, so 0 lies on the grid;
* wavenumbers are xi_m = (2*pi/L)*m with integer m in [-n/2, n/2) in standard
  DFT order (0, 1, ..., n/2-1, -n/2, ..., -1);
* the forward transform carries 1/n^d (physical mean convention), and the
  coefficients are true amplitudes against e^{i xi·x} with the *centered* x.
  The centering enters as an exact factor (-1)^(m1+...+md), so no phase
  rounding accumulates.

With this normalization ||u||_L2^2 = L^d * sum |c_m|^2 (Parseval).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._fft import fftn, ifftn


@dataclass(frozen=True)
class Grid:
    """Cubic periodic lattice in 1, 2 or 3 dimensions."""

    dim: int
    points_per_axis: int
    box_length: float

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def num_points(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        """Centered physical coordinates along one axis."""
        n = self.points_per_axis
        return -self.box_length / 2 + self.spacing * np.arange(n)

    def axis_modes(self) -> np.ndarray:
        """Integer mode numbers along one axis, DFT order."""
        n = self.points_per_axis
        return np.rint(np.fft.fftfreq(n) * n).astype(np.int64)

    def axis_wavenumbers(self) -> np.ndarray:
        return (2 * np.pi / self.box_length) * self.axis_modes()

    def coordinate_arrays(self) -> tuple:
        """Meshgrid of physical coordinates, one array per axis."""
        return _coordinate_arrays(self)

    def wavenumber_arrays(self) -> tuple:
        """Meshgrid of wavenumbers, one array per axis."""
        return _wavenumber_arrays(self)

    def wavenumber_sq(self) -> np.ndarray:
        """|xi|^2 on the full mode lattice."""
        return _wavenumber_sq(self)


def _is_3_smooth_even(n: int) -> bool:
    if n < 4 or n % 2:
        return False
    while n % 2 == 0:
        n //= 2
    while n % 3 == 0:
        n //= 3
    return n == 1


def make_grid(dim: int, points_per_axis: int, box_length: float) -> Grid:
    # even sizes with no prime factor beyond 3 (fast transforms, symmetric
    # mode range); powers of two are the common case, 48 = 2^4*3 also allowed
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be in {{1,2,3}}, got {dim}")
    n = points_per_axis
    if not _is_3_smooth_even(n):
        raise ValueError(
            f"points_per_axis must be even, >= 4, with prime factors in {{2,3}}, got {n}"
        )
    if not box_length > 0:
        raise ValueError(f"box_length must be positive, got {box_length}")
    return Grid(dim=dim, points_per_axis=n, box_length=float(box_length))


@lru_cache(maxsize=64)
def _coordinate_arrays(grid: Grid) -> tuple:
    x = grid.axis_coordinates()
    mesh = np.meshgrid(*([x] * grid.dim), indexing="ij")
    for a in mesh:
        a.setflags(write=False)
    return tuple(mesh)


@lru_cache(maxsize=64)
def _wavenumber_arrays(grid: Grid) -> tuple:
    xi = grid.axis_wavenumbers()
    mesh = np.meshgrid(*([xi] * grid.dim), indexing="ij")
    for a in mesh:
        a.setflags(write=False)
    return tuple(mesh)


@lru_cache(maxsize=64)
def _wavenumber_sq(grid: Grid) -> np.ndarray:
    out = sum(k**2 for k in _wavenumber_arrays(grid))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _centering_signs(grid: Grid) -> np.ndarray:
    # (-1)^m per axis: exact phase e^{i pi m} relating index-space DFT to
    # coefficients against the centered coordinates.
    m = grid.axis_modes()
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    out = sign
    for _ in range(grid.dim - 1):
        out = np.multiply.outer(out, sign)
    out.setflags(write=False)
    return out


def _lock(values: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.complex128)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitudes on the physical lattice. Values are read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"value shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _lock(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex coefficients per wavenumber (mean convention). Read-only."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        if self.coefficients.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} does not match grid "
                f"{self.grid.shape}"
            )
        object.__setattr__(self, "coefficients", _lock(self.coefficients))


def forward_raw(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Physical values -> coefficients, on raw arrays (hot-loop path)."""
    return fftn(values) * (_centering_signs(grid) / grid.num_points)


def inverse_raw(grid: Grid, coefficients: np.ndarray) -> np.ndarray:
    """Coefficients -> physical values, on raw arrays (hot-loop path)."""
    return ifftn(coefficients * _centering_signs(grid)) * grid.num_points


def to_spectral(field: ComplexField) -> SpectralField:
    return SpectralField(field.grid, forward_raw(field.grid, field.values))


def to_physical(spec: SpectralField) -> ComplexField:
    return ComplexField(spec.grid, inverse_raw(spec.grid, spec.coefficients))


def apply_multiplier(spec: SpectralField, m) -> SpectralField:
    """Coefficientwise product with m(xi).

    `m` is called with the tuple of wavenumber meshes, one array per axis,
    e.g. ``lambda xi: 1j * xi[0]`` (d/dx) or
    ``lambda xi: np.sqrt(sum(k**2 for k in xi))`` (|grad|).
    """
    values = np.asarray(m(spec.grid.wavenumber_arrays()))
    if not np.all(np.isfinite(values)):
        raise ValueError("multiplier is not finite on the grid's wavenumbers")
    return SpectralField(spec.grid, spec.coefficients * values)


def dealias_keep(grid: Grid, ratio: float) -> np.ndarray:
    """0/1 mask keeping modes with every |m| <= ratio * n/2."""
    if not 0 < ratio <= 1:
        raise ValueError(f"dealias ratio must be in (0, 1], got {ratio}")
    cutoff = ratio * grid.points_per_axis / 2 + 1e-9  # guard 2/3*3 = 1.99..
    m = np.abs(grid.axis_modes()).astype(float)
    keep1 = (m <= cutoff).astype(float)
    out = keep1
    for _ in range(grid.dim - 1):
        out = np.multiply.outer(out, keep1)
    return out


def dealias_mask(grid: Grid, ratio: float) -> SpectralField:
    return SpectralField(grid, dealias_keep(grid, ratio).astype(np.complex128))
