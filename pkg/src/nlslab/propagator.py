"""Exact free evolution e^{-i t omega(grad/i)} and the linear-decay harness."""

from dataclasses import dataclass

import numpy as np

from . import observables
from .models import ModelSpec, symbol_on_grid
from .observables import DecayFit, ObservableSeries
from .spectral import ComplexField, Grid, forward_raw, inverse_raw


def free_evolve_raw(grid: Grid, values: np.ndarray, t: float, model: ModelSpec):
    omega = symbol_on_grid(model, grid)
    c = forward_raw(grid, values)
    return inverse_raw(grid, c * np.exp(-1j * t * omega))


def free_evolve(u0: ComplexField, t: float, model: ModelSpec) -> ComplexField:
    """Spectral multiplication by e^{-i t omega(xi)}; preserves the L2 norm."""
    return ComplexField(u0.grid, free_evolve_raw(u0.grid, u0.values, t, model))


def shell_mask(grid: Grid, shell_fraction: float) -> np.ndarray:
    """Boolean mask of the outermost `shell_fraction` of the box per axis."""
    edge = (1.0 - shell_fraction) * grid.box_length / 2.0
    mask = np.zeros(grid.shape, dtype=bool)
    for x in grid.coordinate_arrays():
        mask |= np.abs(x) > edge
    return mask


def shell_mass_fraction(values: np.ndarray, mask: np.ndarray) -> float:
    power = np.abs(values) ** 2
    total = float(np.sum(power))
    return float(np.sum(power[mask])) / total if total > 0 else 0.0


@dataclass(frozen=True)
class LinearDecayResult:
    series: ObservableSeries
    fit: DecayFit
    horizon: float
    past_horizon: np.ndarray  # per-sample flag


def linear_decay_experiment(
    u0: ComplexField,
    model: ModelSpec,
    t_samples,
    p,
    fit_window: tuple | None = None,
    shell_fraction: float = 0.1,
    shell_tol: float = 1e-6,
) -> LinearDecayResult:
    """||e^{-it omega} u0||_Lp over t_samples with a power-law fit.

    Samples past the truncation-validity horizon (first time the boundary
    shell holds more than shell_tol of the mass) are flagged and excluded
    from the fit rather than silently fitted.
    """
    t_samples = np.asarray(t_samples, dtype=float)
    if t_samples.size and not np.all(np.diff(t_samples) > 0):
        raise ValueError("t_samples must be increasing")
    grid = u0.grid
    omega = symbol_on_grid(model, grid)
    c0 = forward_raw(grid, u0.values)
    mask = shell_mask(grid, shell_fraction)

    values = np.empty_like(t_samples)
    flags = np.zeros(t_samples.shape, dtype=bool)
    horizon = float(t_samples[-1]) if t_samples.size else 0.0
    crossed = False
    for i, t in enumerate(t_samples):
        u = inverse_raw(grid, c0 * np.exp(-1j * t * omega))
        if not crossed and shell_mass_fraction(u, mask) > shell_tol:
            crossed = True
            horizon = float(t_samples[i - 1]) if i > 0 else 0.0
        flags[i] = crossed
        values[i] = observables.lp_norm(ComplexField(grid, u), p)

    name = f"l{'inf' if p in (np.inf, 'inf') else p}"
    series = ObservableSeries(name=name, times=t_samples, values=values)
    if fit_window is None:
        window = (5.0 * observables.dispersion_time(u0), horizon)
    else:
        lo, hi = fit_window
        window = (lo, horizon if hi is None else hi)
    fit = observables.fit_decay(t_samples, values, window, horizon=horizon)
    return LinearDecayResult(
        series=series, fit=fit, horizon=horizon, past_horizon=flags
    )
