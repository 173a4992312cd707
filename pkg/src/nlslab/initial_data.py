"""Initial-data descriptors: gaussian, plane-modulated gaussian, or a stored
snapshot. "width" is the sigma of the amplitude profile,
u0 = A exp(-|x-c|^2 / (2 w^2))."""

from dataclasses import dataclass, field

import numpy as np

from .solver import load_snapshots
from .spectral import ComplexField, Grid

DATA_KINDS = ("gaussian", "plane-modulated", "file")


@dataclass(frozen=True)
class DataDescriptor:
    kind: str = "gaussian"
    amplitude: float = 0.2
    width: float = 1.0
    center: tuple = ()
    mod_modes: tuple = ()  # integer modes per axis (plane-modulated)
    path: str = ""  # snapshot container (file)
    snapshot_index: int = -1

    def __post_init__(self):
        if self.kind not in DATA_KINDS:
            raise ValueError(f"unknown data kind {self.kind!r}")
        if self.kind != "file":
            if not self.amplitude > 0:
                raise ValueError("amplitude must be positive")
            if not self.width > 0:
                raise ValueError("width must be positive")
        if self.kind == "file" and not self.path:
            raise ValueError("file data needs a path")


def realize(descriptor: DataDescriptor, grid: Grid) -> ComplexField:
    if descriptor.kind == "file":
        store = load_snapshots(descriptor.path)
        if store.grid != grid:
            raise ValueError(
                f"stored grid {store.grid} does not match requested {grid}"
            )
        return ComplexField(grid, store.snapshot_values[descriptor.snapshot_index])

    center = descriptor.center or (0.0,) * grid.dim
    if len(center) != grid.dim:
        raise ValueError(f"center needs {grid.dim} components")
    xs = grid.coordinate_arrays()
    r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
    vals = descriptor.amplitude * np.exp(-r2 / (2.0 * descriptor.width**2))
    vals = vals.astype(np.complex128)
    if descriptor.kind == "plane-modulated":
        modes = descriptor.mod_modes or (1,) * grid.dim
        if len(modes) != grid.dim:
            raise ValueError(f"mod_modes needs {grid.dim} components")
        phase = sum(
            (2 * np.pi / grid.box_length) * m * x for m, x in zip(modes, xs)
        )
        vals = vals * np.exp(1j * phase)
    return ComplexField(grid, vals)
