"""Dispersion/nonlinearity family: i u_t = -omega(grad/i) u + mu |u|^{p-1} u.

Supported symbols: omega(xi) = |xi|^2 (schrodinger), |xi|^4 (biharmonic),
|xi|^(2*alpha) with alpha in (1/2, 1) (fractional, omega(0)=0 by continuity).
"""

from dataclasses import dataclass

import numpy as np

from .spectral import Grid

SYMBOL_KINDS = ("schrodinger", "biharmonic", "fractional")


@dataclass(frozen=True)
class ModelSpec:
    symbol_kind: str = "schrodinger"
    alpha: float | None = None  # only for fractional
    nonlinearity_power: int = 3  # p in |u|^{p-1} u
    mu: int = 1  # +1 defocusing, 0 linear

    def __post_init__(self):
        if self.symbol_kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.symbol_kind!r}")
        if self.symbol_kind == "fractional":
            if self.alpha is None or not 0.5 < self.alpha < 1.0:
                raise ValueError("fractional symbol needs alpha in (1/2, 1)")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for the fractional symbol")
        if self.nonlinearity_power not in (3, 5):
            raise ValueError("nonlinearity power p must be 3 or 5")
        if self.mu not in (0, 1):
            raise ValueError("mu must be 0 (linear) or +1 (defocusing)")


CUBIC_NLS_3D = ModelSpec()


def dispersion_phase(model: ModelSpec, xi_sq):
    """omega(xi) evaluated from |xi|^2 (scalar or array)."""
    xi_sq = np.asarray(xi_sq, dtype=float)
    if model.symbol_kind == "schrodinger":
        return xi_sq
    if model.symbol_kind == "biharmonic":
        return xi_sq**2
    # |xi|^(2 alpha); the zero mode gets omega(0)=0 by continuity
    out = np.zeros_like(xi_sq)
    nz = xi_sq > 0
    out[nz] = xi_sq[nz] ** model.alpha
    return out


def symbol_on_grid(model: ModelSpec, grid: Grid) -> np.ndarray:
    """omega(xi) on the grid's mode lattice, computed from integer modes."""
    return dispersion_phase(model, grid.wavenumber_sq())
