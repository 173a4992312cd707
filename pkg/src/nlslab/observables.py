"""Norms and decay functionals measured on fields and trajectories.

Includes the L^p / H^s / Hdot^s norms, the running decay envelope
A(t) = sup_{tau<=t} tau^{3/2} ||u(tau)||_inf, the weighted vector field
J(t) = x + 2 i t grad, the monotone quantity
V(t) = ||J(t)u||_2^2 + (8/(p+1)) t^2 ||u||_{p+1}^{p+1},
power-law fitting on log-log axes, and the time-inverting rescaling
u(t) -> (-s)^{-d/2} u(-1/s, x/(-s)) e^{-i|x|^2 s / 4} with s = -1/t.
"""

import math
from dataclasses import dataclass

import numpy as np

from .spectral import ComplexField, Grid, forward_raw, inverse_raw


@dataclass(frozen=True)
class ObservableSeries:
    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape:
            raise ValueError("times and values must have equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit value ~ C * t^(-exponent) over a time window."""

    exponent: float
    log_constant: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        lo, hi = self.window
        if not lo < hi:
            raise ValueError("fit window must satisfy t_min < t_max")


@dataclass(frozen=True)
class DecayEnvelope:
    times: np.ndarray
    A_values: np.ndarray


@dataclass(frozen=True)
class DataProfile:
    """Size functional of the initial data controlling the decay constants."""

    m1: float

    def __post_init__(self):
        if not self.m1 > 0:
            raise ValueError("M1 must be positive")

    @classmethod
    def basic(cls, u0: ComplexField) -> "DataProfile":
        """||u0||_L1 + (||u0||_H1 + 1)^2."""
        return cls(lp_norm(u0, 1) + (hs_norm(u0, 1.0) + 1.0) ** 2)

    @classmethod
    def finite_variance(cls, u0: ComplexField) -> "DataProfile":
        """(1 + ||u0||_H1)^2 + ||x u0||_L2 + ||u0||_L1."""
        return cls(
            (1.0 + hs_norm(u0, 1.0)) ** 2 + weighted_x_norm(u0) + lp_norm(u0, 1)
        )


# ---------------------------------------------------------------------------
# norms


def lp_norm(field: ComplexField, p) -> float:
    """Quadrature-weighted L^p norm; sup of modulus for p = inf."""
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(field.values)))
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(field.values)
    return float((np.sum(a**p) * field.grid.cell_volume) ** (1.0 / p))


def _spectral_l2(grid: Grid, weighted_sq_coeffs) -> float:
    return float(np.sqrt(grid.box_length**grid.dim * np.sum(weighted_sq_coeffs)))


def hs_norm(field: ComplexField, s: float) -> float:
    """||<grad>^s u||_L2 via the multiplier (1+|xi|^2)^(s/2)."""
    c = forward_raw(field.grid, field.values)
    w = (1.0 + field.grid.wavenumber_sq()) ** s
    return _spectral_l2(field.grid, w * np.abs(c) ** 2)


def hdot_norm(field: ComplexField, s: float) -> float:
    """|| |grad|^s u ||_L2; the zero mode contributes nothing for s > 0."""
    c = forward_raw(field.grid, field.values)
    xi2 = field.grid.wavenumber_sq()
    w = np.zeros_like(xi2)
    nz = xi2 > 0
    w[nz] = xi2[nz] ** s
    if s <= 0:
        w[~nz] = 1.0 if s == 0 else 0.0
    return _spectral_l2(field.grid, w * np.abs(c) ** 2)


def weighted_x_norm(field: ComplexField) -> float:
    """||x u||_L2 with the centered coordinate weight."""
    r2 = sum(x**2 for x in field.grid.coordinate_arrays())
    return float(
        np.sqrt(np.sum(r2 * np.abs(field.values) ** 2) * field.grid.cell_volume)
    )


def strichartz_admissible(q: float, r: float, dim: int = 3) -> bool:
    """(q, r) with 2/q + d/r = d/2, both in [2, inf]."""
    if not (2 <= q <= np.inf and 2 <= r <= np.inf):
        return False
    lhs = (2.0 / q if q != np.inf else 0.0) + (dim / r if r != np.inf else 0.0)
    return math.isclose(lhs, dim / 2.0, rel_tol=0, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# decay envelope and fits


def decay_envelope(linf_series: ObservableSeries) -> DecayEnvelope:
    """Running sup of t^{3/2} * ||u(t)||_inf. Series must start at t > 0."""
    t = linf_series.times
    if t.size == 0 or t[0] <= 0:
        raise ValueError("envelope weight vanishes at t=0; series must start at t>0")
    weighted = t**1.5 * linf_series.values
    return DecayEnvelope(times=t, A_values=np.maximum.accumulate(weighted))


def fit_decay(times, values, window, horizon: float | None = None) -> DecayFit:
    """Least squares on (log t, log value); slope magnitude is the exponent."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("fit window must satisfy t_min < t_max")
    if horizon is not None and hi > horizon + 1e-12:
        raise ValueError(
            f"fit window [{lo}, {hi}] crosses the validity horizon {horizon}"
        )
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if np.count_nonzero(sel) < 8:
        raise ValueError(f"need >= 8 samples in window, got {np.count_nonzero(sel)}")
    t, v = times[sel], values[sel]
    if np.any(v <= 0):
        raise ValueError("values must be positive for a log-log fit")
    lt, lv = np.log(t), np.log(v)
    slope, intercept = np.polyfit(lt, lv, 1)
    pred = slope * lt + intercept
    ss_res = float(np.sum((lv - pred) ** 2))
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(
        exponent=float(-slope),
        log_constant=float(intercept),
        r_squared=r2,
        window=(lo, hi),
    )


def dispersion_time(u0: ComplexField) -> float:
    """Characteristic spreading time w_eff^2 / 2 with w_eff from <x^2>.

    For a Gaussian A e^{-|x|^2/(2 w^2)} this returns w^2/2; fits default to
    windows starting at 5x this value.
    """
    mass = lp_norm(u0, 2) ** 2
    if mass == 0:
        raise ValueError("zero field has no dispersion time")
    w_eff_sq = 2.0 * weighted_x_norm(u0) ** 2 / (u0.grid.dim * mass)
    return w_eff_sq / 2.0


# ---------------------------------------------------------------------------
# vector field J(t) = x + 2 i t grad and the monotone quantity


def j_component(u: ComplexField, t: float, axis: int) -> ComplexField:
    """(x_a + 2 i t d/dx_a) u along one axis."""
    grid = u.grid
    x = grid.coordinate_arrays()[axis]
    xi = grid.wavenumber_arrays()[axis]
    c = forward_raw(grid, u.values)
    grad = inverse_raw(grid, 1j * xi * c)
    return ComplexField(grid, x * u.values + 2j * t * grad)


def j_norm(u: ComplexField, t: float) -> float:
    """(sum_a ||x_a u + 2 i t d_a u||_L2^2)^(1/2)."""
    grid = u.grid
    c = forward_raw(grid, u.values)
    xs = grid.coordinate_arrays()
    xis = grid.wavenumber_arrays()
    total = 0.0
    for x, xi in zip(xs, xis):
        grad = inverse_raw(grid, 1j * xi * c)
        total += np.sum(np.abs(x * u.values + 2j * t * grad) ** 2)
    return float(np.sqrt(total * grid.cell_volume))


def pseudoconformal_V(u: ComplexField, t: float, p: int = 3) -> float:
    """||J(t)u||^2 + (8/(p+1)) t^2 ||u||_{p+1}^{p+1}; nonincreasing for the
    defocusing cubic in 3D. At t=0 it equals ||x u||_L2^2."""
    return j_norm(u, t) ** 2 + (8.0 / (p + 1)) * t**2 * lp_norm(u, p + 1) ** (p + 1)


def weighted_l6_check(u: ComplexField, t: float) -> tuple:
    """Return (||u||_L6, t^{-1} ||J(t)u||_L2); lhs <~ rhs with an O(1) constant."""
    if not t > 0:
        raise ValueError("t must be positive")
    return lp_norm(u, 6), j_norm(u, t) / t


def morawetz_accumulate(trajectory) -> tuple:
    """Spacetime L^4 accumulation against the mass x H^{1/2}-sup bound.

    Returns (int ||u(t)||_L4^4 dt, mass * sup_t ||grad^{1/2} u||^2), both over
    the trajectory's recorded series (trapezoid in time).
    """
    series = trajectory.observable_series
    t = trajectory.times
    l4 = series["l4"]
    lhs = float(np.trapezoid(l4**4, t))
    bound = float(series["mass"][0] * np.max(series["h_half_dot"] ** 2))
    return lhs, bound


# ---------------------------------------------------------------------------
# pseudo-conformal transform


def _dilated_evaluation(grid: Grid, coefficients: np.ndarray, scale: float):
    """Evaluate the trig series at the dilated points scale * x_j (exact
    periodized trig interpolation; separable matrix contraction per axis)."""
    x = grid.axis_coordinates()
    xi = grid.axis_wavenumbers()
    E = np.exp(1j * np.outer(scale * x, xi))
    vals = coefficients
    for _ in range(grid.dim):
        # contract the leading mode axis, cycling it to the back
        vals = np.tensordot(E, vals, axes=(1, 0))
        vals = np.moveaxis(vals, 0, grid.dim - 1)
    return vals


def _band_fraction(grid: Grid, values: np.ndarray, ratio: float) -> float:
    from .spectral import dealias_keep

    c = forward_raw(grid, values)
    power = np.abs(c) ** 2
    total = float(np.sum(power))
    if total == 0:
        return 0.0
    kept = float(np.sum(power * dealias_keep(grid, ratio)))
    return 1.0 - kept / total


def pseudoconformal_transform(
    u_at_t: ComplexField,
    t: float,
    band_ratio: float = 2.0 / 3.0,
    band_tol: float = 1e-6,
) -> tuple:
    """Map the snapshot at time t > 0 to (u_tilde, s) with s = -1/t.

    u_tilde(x) = t^(d/2) u(t, t x) e^{i |x|^2/(4t)}, realized by resampling the
    trig series onto the dilated grid. L2-isometric up to interpolation error.
    Rejects results whose spectral mass leaks into the dealiased band.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    grid = u_at_t.grid
    c = forward_raw(grid, u_at_t.values)
    dilated = _dilated_evaluation(grid, c, t)
    r2 = sum(x**2 for x in grid.coordinate_arrays())
    vals = t ** (grid.dim / 2.0) * dilated * np.exp(1j * r2 / (4.0 * t))
    leak = _band_fraction(grid, vals, band_ratio)
    if leak > band_tol:
        raise ValueError(
            f"dilated support leaks {leak:.2e} of spectral mass past the "
            f"{band_ratio:.3f} band (tol {band_tol:.1e})"
        )
    return ComplexField(grid, vals), -1.0 / t


def pseudoconformal_inverse(u_tilde: ComplexField, s: float) -> ComplexField:
    """Invert the transform: recover u(t, .) with t = -1/s."""
    if not s < 0:
        raise ValueError("s must be negative")
    t = -1.0 / s
    grid = u_tilde.grid
    c = forward_raw(grid, u_tilde.values)
    compressed = _dilated_evaluation(grid, c, 1.0 / t)
    r2 = sum(x**2 for x in grid.coordinate_arrays())
    vals = t ** (-grid.dim / 2.0) * compressed * np.exp(-1j * r2 / (4.0 * t**3))
    return ComplexField(grid, vals)
