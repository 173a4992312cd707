"""Physical-space randomization: partition of unity on the unit-ish lattice,
Gaussian-modulated data u0^w = sum_n phi_n g_n u0, moment checks, weighted
time-averaged linear norms, and ensemble simulation with empirical tails.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._fft import fftn, ifftn
from .models import ModelSpec, symbol_on_grid
from .observables import fit_decay
from .solver import DEFAULT_OBSERVERS, SolverConfig, evolve
from .spectral import ComplexField, Grid, forward_raw, inverse_raw, make_grid


class OverflowGuard(RuntimeError):
    """The t^100 weight factor left the representable log range."""


def default_bump(r: np.ndarray, radius: float) -> np.ndarray:
    """Radial C-infinity bump exp(-1/(1-(r/radius)^2)) supported on r < radius."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < radius
    q = (r[inside] / radius) ** 2
    out[inside] = np.exp(-1.0 / (1.0 - q))
    return out


@dataclass(frozen=True)
class PartitionOfUnity:
    """Normalized pieces phi_n(x) = psi(x-n)/sum_m psi(x-m) on the cell
    lattice h*Z^d (periodic wrap); exact partition by construction."""

    grid: Grid
    h: float
    support_radius: float
    psi: object  # callable radius-array -> values, supported on r < radius
    centers: np.ndarray  # (num_cells, dim) physical centers
    kernel: np.ndarray  # psi sampled at index displacements (grid shape)
    denominator: np.ndarray  # sum_m psi(x - m) on the grid

    @property
    def num_cells(self) -> int:
        return len(self.centers)

    def piece(self, cell_index: int) -> np.ndarray:
        """Materialize phi_n for one cell (tests / small lattices)."""
        grid = self.grid
        center = self.centers[cell_index]
        r2 = np.zeros(grid.shape)
        for axis, x in enumerate(grid.coordinate_arrays()):
            delta = np.mod(x - center[axis] + grid.box_length / 2, grid.box_length)
            delta -= grid.box_length / 2
            r2 = r2 + delta**2
        return self.psi(np.sqrt(r2)) / self.denominator

    def modulate(self, g: np.ndarray) -> np.ndarray:
        """sum_n g_n phi_n(x), assembled by exact circular convolution."""
        grid = self.grid
        impulses = np.zeros(grid.shape)
        per_axis = round(grid.box_length / self.h)
        stride = round(self.h / grid.spacing)
        idx = np.unravel_index(np.arange(self.num_cells), (per_axis,) * grid.dim)
        impulses[tuple(i * stride for i in idx)] = g
        conv = ifftn(fftn(impulses) * fftn(self.kernel)).real
        return conv / self.denominator


def build_partition(
    grid: Grid,
    h: float = 1.0,
    psi=None,
    support_radius: float | None = None,
) -> PartitionOfUnity:
    """Partition from a radial bump profile (default: the stock C-infinity
    bump of radius 1.5h); h must be a multiple of the grid spacing, divide the
    box, and put 0 on the cell lattice."""
    if support_radius is None:
        support_radius = 1.5 * h
    if not h / 2 < support_radius < 2 * h:
        raise ValueError("support radius must lie in (h/2, 2h)")
    if psi is None:
        radius = support_radius
        psi = lambda r: default_bump(r, radius)  # noqa: E731
    if not np.all(psi(np.array([0.0, support_radius / 4])) > 0):
        raise ValueError("psi must be positive on a neighborhood of 0")
    per_axis = grid.box_length / h
    if abs(per_axis - round(per_axis)) > 1e-9:
        raise ValueError("box_length must be an integer multiple of h")
    per_axis = round(per_axis)
    stride = h / grid.spacing
    if abs(stride - round(stride)) > 1e-9:
        raise ValueError("h must be an integer multiple of the grid spacing")
    if per_axis % 2 != 0:
        raise ValueError("need an even number of cells per axis (0 on the lattice)")

    axis_centers = -grid.box_length / 2 + h * np.arange(per_axis)
    mesh = np.meshgrid(*([axis_centers] * grid.dim), indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)

    # kernel: psi at the min-image distance of every grid index offset
    r2 = np.zeros(grid.shape)
    for x in grid.coordinate_arrays():
        off = x + grid.box_length / 2  # index offset * spacing, in [0, L)
        r2 = r2 + np.minimum(off, grid.box_length - off) ** 2
    kernel = psi(np.sqrt(r2))

    partition = PartitionOfUnity(
        grid=grid,
        h=h,
        support_radius=support_radius,
        psi=psi,
        centers=centers,
        kernel=kernel,
        denominator=np.ones(grid.shape),
    )
    denom = partition.modulate(np.ones(per_axis**grid.dim))
    if np.min(denom) <= 0:
        raise ValueError(
            "bump translates leave grid points uncovered (zero denominator)"
        )
    return PartitionOfUnity(
        grid=grid,
        h=h,
        support_radius=support_radius,
        psi=psi,
        centers=centers,
        kernel=kernel,
        denominator=denom,
    )


@dataclass(frozen=True)
class RandomDataSample:
    seed: int  # derived 64-bit seed of this sample's stream
    master_seed: int
    index: int
    gaussians: np.ndarray
    field: ComplexField


def derived_seed(master_seed: int, index: int) -> int:
    return int(
        np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0]
    )


def cell_gaussians(partition: PartitionOfUnity, master_seed: int, index: int):
    """i.i.d. standard normals per cell from a counter-based (Philox) stream
    keyed by (master_seed, index); canonical cell order, so the draw is
    independent of execution order and parallelism."""
    key = np.random.SeedSequence((master_seed, index)).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(
        partition.num_cells
    )


def sample_random_data(
    u0: ComplexField,
    partition: PartitionOfUnity,
    master_seed: int,
    index: int,
    debug_ones: bool = False,
) -> RandomDataSample:
    """u0^w = (sum_n g_n phi_n) * u0, reproducible from (master_seed, index)."""
    if partition.grid != u0.grid:
        raise ValueError("partition and data live on different grids")
    g = (
        np.ones(partition.num_cells)
        if debug_ones
        else cell_gaussians(partition, master_seed, index)
    )
    field = ComplexField(u0.grid, partition.modulate(g) * u0.values)
    return RandomDataSample(
        seed=derived_seed(master_seed, index),
        master_seed=master_seed,
        index=index,
        gaussians=g,
        field=field,
    )


# ---------------------------------------------------------------------------
# Gaussian moment bound


def exact_gaussian_moment_ratio(rho: float) -> float:
    """(E|g|^rho)^(1/rho) / sqrt(rho) for g ~ N(0,1), from the Gamma formula
    E|g|^rho = 2^(rho/2) Gamma((rho+1)/2) / sqrt(pi)."""
    log_moment = (rho / 2) * math.log(2) + math.lgamma((rho + 1) / 2) - 0.5 * math.log(
        math.pi
    )
    return math.exp(log_moment / rho) / math.sqrt(rho)


def gaussian_moment_check(c_vector, rho: float, n_samples: int, master_seed: int = 0):
    """Empirical (E|sum c_n g_n|^rho)^(1/rho) / (sqrt(rho) ||c||_2)."""
    if not 2 <= rho <= 20:
        raise ValueError("rho must be in [2, 20]")
    if n_samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    c = np.asarray(c_vector, dtype=float)
    rng = np.random.Generator(
        np.random.Philox(
            key=np.random.SeedSequence((master_seed, 0xC0FFEE)).generate_state(
                2, np.uint64
            )
        )
    )
    total = 0.0
    done = 0
    chunk = max(1, min(n_samples, 2**22 // max(len(c), 1)))
    while done < n_samples:
        m = min(chunk, n_samples - done)
        sums = rng.standard_normal((m, len(c))) @ c
        total += float(np.sum(np.abs(sums) ** rho))
        done += m
    moment = (total / n_samples) ** (1.0 / rho)
    return moment / (math.sqrt(rho) * float(np.linalg.norm(c)))


# ---------------------------------------------------------------------------
# weighted time-averaged linear norms (Lemma-style check)


@dataclass(frozen=True)
class WeightedNormResult:
    value: float
    last_decade_fraction: float  # contribution of t in [t_max/10, t_max]


def log_weight(t: float, p: float, eps: float) -> float:
    """log of t^100/(1+t^100) * t^(3(1/2-1/p)-eps), stable for all t > 0."""
    w = 100.0 * math.log(t)
    if w > 600.0:
        raise OverflowGuard(f"t^100 term overflows at t={t:.6g} (log={w:.1f})")
    if w <= 0:
        bracket = w - math.log1p(math.exp(w)) if w > -600.0 else w
    else:
        bracket = -math.log1p(math.exp(-w))
    return bracket + (3.0 * (0.5 - 1.0 / p) - eps) * math.log(t)


def weighted_linear_norm(
    u0_sample: ComplexField,
    model: ModelSpec,
    p: float,
    eps1: float,
    eps2: float,
    t_grid,
) -> WeightedNormResult:
    """|| gamma_{p,eps1}(t) ||e^{-it omega} u0||_Lp ||_{L^{1/eps2}_t} over the
    given t grid (trapezoid, log-domain accumulation). Defaults elsewhere use
    eps1=0.2, eps2=0.1, p in {3, 6, 12}."""
    if not 2 < p < np.inf:
        raise ValueError("need 2 < p < inf")
    if not eps1 > eps2 > 0:
        raise ValueError("need eps1 > eps2 > 0")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2 or not np.all(np.diff(t_grid) > 0) or t_grid[0] <= 0:
        raise ValueError("t_grid must be increasing and positive")

    grid = u0_sample.grid
    omega = symbol_on_grid(model, grid)
    c0 = forward_raw(grid, u0_sample.values)
    power = 1.0 / eps2

    logs = np.full(t_grid.shape, -np.inf)
    for i, t in enumerate(t_grid):
        u = inverse_raw(grid, c0 * np.exp(-1j * t * omega))
        norm = float(
            (np.sum(np.abs(u) ** p) * grid.cell_volume) ** (1.0 / p)
        )
        if norm > 0:
            logs[i] = power * (log_weight(t, p, eps1) + math.log(norm))

    # trapezoid weights in log domain
    w = np.empty_like(t_grid)
    w[0] = (t_grid[1] - t_grid[0]) / 2
    w[-1] = (t_grid[-1] - t_grid[-2]) / 2
    w[1:-1] = (t_grid[2:] - t_grid[:-2]) / 2
    terms = logs + np.log(w)
    peak = np.max(terms)
    if peak == -np.inf:
        return WeightedNormResult(value=0.0, last_decade_fraction=0.0)
    total = float(np.sum(np.exp(terms - peak)))
    value = math.exp(eps2 * (peak + math.log(total)))
    late = t_grid >= t_grid[-1] / 10.0
    late_mass = float(np.sum(np.exp(terms[late] - peak)))
    return WeightedNormResult(
        value=value, last_decade_fraction=late_mass / total
    )


# ---------------------------------------------------------------------------
# ensemble runs


@dataclass(frozen=True)
class EnsembleReport:
    n_samples: int
    n_failed: int
    master_seed: int
    sample_summaries: tuple  # one dict per sample, in index order
    sup_values: np.ndarray  # sup_t t^{3/2} ||u_nl^w||_inf, nan for failures
    fit_exponents: np.ndarray
    lambda_grid: np.ndarray
    tail_probs: np.ndarray  # P(sup > lambda)
    h1_values: np.ndarray
    h1_tail_probs: np.ndarray
    median_sup: float
    weighted_values: np.ndarray
    weighted_median: float
    weighted_iqr: float

    def __post_init__(self):
        if np.any(np.diff(self.tail_probs) > 1e-12):
            raise ValueError("tails must be nonincreasing in lambda")


def _ensemble_worker(payload):
    (
        dim,
        n,
        box,
        model,
        config,
        u0_bytes,
        h,
        master_seed,
        index,
        fit_window,
        debug_ones,
        weighted_p,
        eps1,
        eps2,
    ) = payload
    import warnings

    grid = make_grid(dim, n, box)
    u0 = ComplexField(grid, np.frombuffer(u0_bytes, dtype=np.complex128).reshape(grid.shape))
    partition = build_partition(grid, h)
    sample = sample_random_data(u0, partition, master_seed, index, debug_ones)
    summary = {
        "index": index,
        "seed": sample.seed,
        "status": "ok",
        "h1": _h1_norm(sample.field),
    }
    try:
        observers = DEFAULT_OBSERVERS + ("unl_linf",)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = evolve(sample.field, model, config, observers=observers)
    except Exception as exc:  # solver failures recorded, not fatal
        summary["status"] = f"failed: {exc}"
        return summary
    t = traj.times
    unl = traj.observable_series["unl_linf"]
    valid = (t > 0) & (t <= traj.validity_horizon + 1e-12)
    summary["horizon"] = traj.validity_horizon
    summary["sup_stat"] = float(np.max(t[valid] ** 1.5 * unl[valid]))
    lo = max(fit_window[0], t[1])
    hi = min(fit_window[1], traj.validity_horizon)
    try:
        fit = fit_decay(t[valid], unl[valid], (lo, hi), horizon=traj.validity_horizon)
        summary["fit_exponent"] = fit.exponent
        summary["fit_r2"] = fit.r_squared
    except ValueError as exc:
        summary["fit_exponent"] = float("nan")
        summary["fit_note"] = str(exc)
    wn = weighted_linear_norm(
        sample.field,
        model,
        weighted_p,
        eps1,
        eps2,
        np.linspace(0.25, max(traj.validity_horizon, 0.5), 40),
    )
    summary["weighted_norm"] = wn.value
    summary["weighted_last_decade"] = wn.last_decade_fraction
    summary["series"] = {k: v.tolist() for k, v in traj.observable_series.items()}
    summary["times"] = t.tolist()
    return summary


def _h1_norm(field: ComplexField) -> float:
    grid = field.grid
    c = forward_raw(grid, field.values)
    w = 1.0 + grid.wavenumber_sq()
    return float(
        np.sqrt(grid.box_length**grid.dim * np.sum(w * np.abs(c) ** 2))
    )


def ensemble_run(
    u0: ComplexField,
    model: ModelSpec,
    solver_config: SolverConfig,
    n_samples: int,
    lambda_grid=None,
    master_seed: int = 0,
    partition_h: float = 1.0,
    fit_window: tuple = (1.0, np.inf),
    jobs: int = 1,
    debug_ones: bool = False,
    weighted_p: float = 6.0,
    eps1: float = 0.2,
    eps2: float = 0.1,
) -> EnsembleReport:
    """Run n_samples randomized trajectories (identical configs except the
    seed), collect sup_t t^{3/2}||u_nl^w||_inf over valid windows, empirical
    tails on the lambda grid, and H1-size statistics of the samples."""
    grid = u0.grid
    build_partition(grid, partition_h)  # validate before spawning workers
    payloads = [
        (
            grid.dim,
            grid.points_per_axis,
            grid.box_length,
            model,
            solver_config,
            np.ascontiguousarray(u0.values, dtype=np.complex128).tobytes(),
            partition_h,
            master_seed,
            index,
            fit_window,
            debug_ones,
            weighted_p,
            eps1,
            eps2,
        )
        for index in range(n_samples)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ensemble_worker, payloads))
    else:
        results = [_ensemble_worker(p) for p in payloads]
    results.sort(key=lambda r: r["index"])  # fixed-order reduction

    ok = [r for r in results if r["status"] == "ok"]
    n_failed = n_samples - len(ok)
    sup_values = np.array(
        [r.get("sup_stat", np.nan) for r in results], dtype=float
    )
    fit_exponents = np.array(
        [r.get("fit_exponent", np.nan) for r in results], dtype=float
    )
    h1_values = np.array([r["h1"] for r in results], dtype=float)
    weighted_values = np.array(
        [r.get("weighted_norm", np.nan) for r in results], dtype=float
    )

    sup_ok = sup_values[~np.isnan(sup_values)]
    median_sup = float(np.median(sup_ok)) if sup_ok.size else float("nan")
    if lambda_grid is None:
        lambda_grid = median_sup * np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    tail_probs = np.array(
        [float(np.mean(sup_ok > lam)) if sup_ok.size else np.nan for lam in lambda_grid]
    )
    h1_med = float(np.median(h1_values))
    h1_tail_probs = np.array(
        [float(np.mean(h1_values > mult * h1_med)) for mult in (1.0, 2.0, 4.0, 8.0, 16.0)]
    )
    w_ok = weighted_values[~np.isnan(weighted_values)]
    w_med = float(np.median(w_ok)) if w_ok.size else float("nan")
    w_iqr = (
        float(np.percentile(w_ok, 75) - np.percentile(w_ok, 25))
        if w_ok.size
        else float("nan")
    )
    return EnsembleReport(
        n_samples=n_samples,
        n_failed=n_failed,
        master_seed=master_seed,
        sample_summaries=tuple(results),
        sup_values=sup_values,
        fit_exponents=fit_exponents,
        lambda_grid=lambda_grid,
        tail_probs=tail_probs,
        h1_values=h1_values,
        h1_tail_probs=h1_tail_probs,
        median_sup=median_sup,
        weighted_values=weighted_values,
        weighted_median=w_med,
        weighted_iqr=w_iqr,
    )
