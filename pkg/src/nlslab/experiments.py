"""Experiment runners: every config kind produces CSVs, fit JSONs, SVG
plots, and a run manifest with pass/fail verdicts against its thresholds.

Exit-code contract (used by the CLI): 0 pass, 2 acceptance failure,
3 config error, 4 numerical abort.
"""

import json
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .initial_data import realize
from .observables import (
    DataProfile,
    dispersion_time,
    fit_decay,
    lp_norm,
    morawetz_accumulate,
    weighted_x_norm,
)
from .propagator import linear_decay_experiment
from .randomization import ensemble_run
from .scattering import (
    default_duhamel_M,
    duhamel_split,
    extract_scattering_state,
    scattering_rate,
    spacetime_tail,
)
from .solver import (
    DEFAULT_OBSERVERS,
    NumericalAbort,
    Trajectory,
    evolve,
    save_snapshots,
)
from .spectral import ComplexField
from .svgplot import write_loglog

CONTRACT_COLUMNS = (
    "t",
    "linf",
    "l2",
    "l3",
    "l4",
    "l5",
    "l6",
    "h_half_dot",
    "h1",
    "mass",
    "energy",
    "A_env",
    "V_pc",
    "horizon_flag",
)


@dataclass
class Verdict:
    name: str
    passed: bool
    value: float
    threshold: str


class RunError(RuntimeError):
    pass


def _sig(x) -> str:
    """12 significant digits, the printed-precision contract."""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_sig(v) for v in row])


def write_trajectory_csv(path, trajectory: Trajectory):
    series = trajectory.observable_series
    extras = [k for k in series if k not in CONTRACT_COLUMNS and k != "t"]
    header = list(CONTRACT_COLUMNS) + extras
    rows = []
    for i, t in enumerate(trajectory.times):
        row = [t] + [series[c][i] for c in CONTRACT_COLUMNS[1:]]
        row += [series[c][i] for c in extras]
        rows.append(row)
    _write_csv(path, header, rows)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not serializable: {type(o)}")


def _write_json(path, payload):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    os.replace(tmp, path)


def _bounds_verdict(name, value, lo, hi) -> Verdict | None:
    if lo == 0.0 and hi == 0.0:
        return None  # check disabled
    return Verdict(
        name=name,
        passed=bool(lo <= value <= hi),
        value=float(value),
        threshold=f"[{lo}, {hi}]",
    )


def _upper_verdict(name, value, bound) -> Verdict | None:
    if bound == 0.0:
        return None
    return Verdict(
        name=name, passed=bool(value <= bound), value=float(value), threshold=f"<= {bound}"
    )


class _Run:
    """Shared context for one experiment run."""

    def __init__(self, config: ExperimentConfig, out_dir=None, jobs=None):
        self.config = config
        self.jobs = jobs if jobs is not None else config["jobs"]
        self.run_id = config.run_id()
        base = out_dir if out_dir is not None else config["out"]
        self.dir = os.path.join(base, f"{config.kind}-{self.run_id}")
        os.makedirs(self.dir, exist_ok=True)
        self.verdicts: list[Verdict] = []
        self.artifacts: list[str] = []
        self.extra: dict = {}
        self.horizon = None

    def path(self, name):
        self.artifacts.append(name)
        return os.path.join(self.dir, name)

    def check(self, verdict: Verdict | None):
        if verdict is not None:
            self.verdicts.append(verdict)

    def fit_window(self, u0: ComplexField, horizon: float):
        lo = self.config["fit.t_min"]
        if lo == 0.0:
            lo = 5.0 * dispersion_time(u0)
        hi = self.config["fit.t_max"]
        if hi == 0.0:
            hi = horizon
        return (lo, hi)


def run_experiment(config: ExperimentConfig, out_dir=None, jobs=None):
    """Execute one experiment; returns (manifest dict, run directory)."""
    run = _Run(config, out_dir=out_dir, jobs=jobs)
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    runner = _RUNNERS[config.kind]
    status = "pass"
    error = None
    try:
        runner(run)
        if any(not v.passed for v in run.verdicts):
            status = "fail"
    except NumericalAbort as exc:
        status, error = "numerical-abort", str(exc)
    except RunError as exc:
        status, error = "error", str(exc)
    finished = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    with open(os.path.join(run.dir, "config.txt"), "w", encoding="utf-8") as f:
        f.write(config.serialize())
    manifest = {
        "run_id": run.run_id,
        "kind": config.kind,
        "config_hash": run.run_id,
        "code_version": __version__,
        "started": started,
        "finished": finished,
        "validity_horizon": run.horizon,
        "verdicts": [asdict(v) for v in run.verdicts],
        "status": status,
        "error": error,
        "artifacts": sorted(set(run.artifacts)) + ["config.txt"],
        **run.extra,
    }
    _write_json(os.path.join(run.dir, "manifest.json"), manifest)
    return manifest, run.dir


def exit_code(manifest) -> int:
    return {"pass": 0, "fail": 2, "error": 2, "numerical-abort": 4}[manifest["status"]]


def _evolve_from_config(run: _Run, observers=None) -> Trajectory:
    import warnings

    config = run.config
    u0 = realize(config.data(), config.grid())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = evolve(u0, config.model(), config.solver(), observers=observers)
    run.horizon = traj.validity_horizon
    return traj


# ---------------------------------------------------------------------------
# runners


def _run_linear_decay(run: _Run):
    config = run.config
    grid = config.grid()
    u0 = realize(config.data(), grid)
    model = config.model()
    solver = config.solver()
    t_samples = np.arange(
        config["samples.t_start"], solver.t_end + 1e-12, config["samples.t_step"]
    )
    results = {}
    for p, label in ((np.inf, "linf"), (6, "l6"), (2, "l2")):
        window = None
        if label != "l2":
            window = run.fit_window(u0, np.inf)
        try:
            res = linear_decay_experiment(
                u0,
                model,
                t_samples,
                p,
                fit_window=(window[0], None if config["fit.t_max"] == 0 else window[1])
                if window
                else (0.0, None),
                shell_fraction=solver.boundary_shell_fraction,
                shell_tol=solver.boundary_mass_tol,
            )
        except ValueError as exc:
            raise RunError(f"linear decay fit failed for {label}: {exc}") from exc
        results[label] = res
    run.horizon = results["linf"].horizon
    rows = zip(
        t_samples,
        results["linf"].series.values,
        results["l2"].series.values,
        results["l6"].series.values,
        results["linf"].past_horizon.astype(float),
    )
    _write_csv(
        run.path("linear_decay.csv"),
        ["t", "linf", "l2", "l6", "horizon_flag"],
        rows,
    )
    fits = {k: asdict(v.fit) for k, v in results.items() if k != "l2"}
    fits["horizon"] = run.horizon
    _write_json(run.path("fits.json"), fits)
    write_loglog(
        run.path("decay.svg"),
        "free evolution decay",
        "t",
        "norm",
        [
            (t_samples, results["linf"].series.values, "Linf"),
            (t_samples, results["l6"].series.values, "L6"),
        ],
        fits=[results["linf"].fit, results["l6"].fit],
    )
    run.check(
        _bounds_verdict(
            "linf_exponent",
            results["linf"].fit.exponent,
            config["check.linf_lo"],
            config["check.linf_hi"],
        )
    )
    run.check(
        _bounds_verdict(
            "l6_exponent",
            results["l6"].fit.exponent,
            config["check.l6_lo"],
            config["check.l6_hi"],
        )
    )
    run.extra["fits"] = fits


def _decay_common(run: _Run, fit_column: str):
    config = run.config
    observers = DEFAULT_OBSERVERS + ("unl_linf",)
    traj = _evolve_from_config(run, observers=observers)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    u0 = ComplexField(traj.grid, traj.u0)
    window = run.fit_window(u0, traj.validity_horizon)
    t = traj.times
    fits = {"horizon": traj.validity_horizon, "window": window}
    for column in (fit_column, "unl_linf"):
        values = traj.observable_series[column]
        sel = t > 0
        try:
            fit = fit_decay(t[sel], values[sel], window, horizon=traj.validity_horizon)
            fits[column] = asdict(fit)
        except ValueError as exc:
            fits[column] = {"error": str(exc)}
    _write_json(run.path("fits.json"), fits)
    series = traj.observable_series
    sel = t > 0
    write_loglog(
        run.path("decay.svg"),
        f"defocusing evolution: {fit_column}",
        "t",
        fit_column,
        [(t[sel], series[fit_column][sel], fit_column)],
        fits=[
            fit_decay(t[sel], series[fit_column][sel], window, horizon=traj.validity_horizon)
            if "exponent" in fits.get(fit_column, {})
            else None
        ],
    )
    run.extra["fits"] = fits
    return traj, fits


def _conservation_verdicts(run: _Run, traj: Trajectory):
    config = run.config
    mass = traj.observable_series["mass"]
    energy = traj.observable_series["energy"]
    mass_drift = float(np.max(np.abs(mass - mass[0])) / mass[0])
    energy_drift = (
        float(np.max(np.abs(energy - energy[0])) / abs(energy[0]))
        if energy[0] != 0
        else 0.0
    )
    run.extra["mass_drift"] = mass_drift
    run.extra["energy_drift"] = energy_drift
    run.check(_upper_verdict("mass_drift", mass_drift, config["check.mass_drift"]))
    run.check(
        _upper_verdict("energy_drift", energy_drift, config["check.energy_drift"])
    )


def _run_nonlinear_decay(run: _Run):
    config = run.config
    traj, fits = _decay_common(run, "linf")
    _conservation_verdicts(run, traj)
    if "exponent" in fits.get("linf", {}):
        run.check(
            _bounds_verdict(
                "linf_exponent",
                fits["linf"]["exponent"],
                config["check.linf_lo"],
                config["check.linf_hi"],
            )
        )
    elif config["check.linf_lo"] or config["check.linf_hi"]:
        run.check(Verdict("linf_exponent", False, float("nan"), fits["linf"]["error"]))
    # bounded envelope: final over median of the running sup
    a_env = traj.observable_series["A_env"]
    t = traj.times
    valid = (t > 0) & (t <= traj.validity_horizon + 1e-12)
    ratio = float(a_env[valid][-1] / np.median(a_env[valid]))
    run.extra["envelope_final_over_median"] = ratio
    run.check(_upper_verdict("envelope_ratio", ratio, config["check.envelope_ratio"]))


def _run_l6_decay(run: _Run):
    config = run.config
    _, fits = _decay_common(run, "l6")
    if "exponent" in fits.get("l6", {}):
        run.check(
            _bounds_verdict(
                "l6_exponent",
                fits["l6"]["exponent"],
                config["check.l6_lo"],
                config["check.l6_hi"],
            )
        )
    elif config["check.l6_lo"] or config["check.l6_hi"]:
        run.check(Verdict("l6_exponent", False, float("nan"), fits["l6"]["error"]))


def _run_pc_energy(run: _Run):
    config = run.config
    traj = _evolve_from_config(run)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    t = traj.times
    V = traj.observable_series["V_pc"]
    u0 = ComplexField(traj.grid, traj.u0)
    x_norm_sq = weighted_x_norm(u0) ** 2
    v0_err = abs(V[0] - x_norm_sq) / x_norm_sq
    run.extra["V0"] = float(V[0])
    run.extra["x_u0_sq"] = x_norm_sq
    run.check(_upper_verdict("v0_relative_error", v0_err, config["check.v0_rtol"]))

    valid = t <= traj.validity_horizon + 1e-12
    increments = np.diff(V[valid])
    worst = float(np.max(increments)) if increments.size else 0.0
    slack = config["check.v_monotone_slack"]
    run.extra["max_V_increment"] = worst
    if slack:
        run.check(
            Verdict(
                "v_monotone",
                bool(worst <= slack * V[0]),
                worst,
                f"<= {slack} * V(0) = {slack * V[0]:.6g}",
            )
        )

    # dV/dt central difference vs (4t/(p+1)) (4 - d(p-1)) ||u||_{p+1}^{p+1}
    p = config.model().nonlinearity_power
    d = traj.grid.dim
    lp1 = traj.observable_series[f"l{p + 1}"]
    ks = [k for k in range(1, len(t) - 1) if t[k] >= 0.2 * t[valid][-1] and valid[k + 1]]
    probes = ks[:: max(1, len(ks) // 12)]
    rels = []
    dt = traj.config.dt
    for k in probes:
        fd = (V[k + 1] - V[k - 1]) / (2 * dt)
        rhs = (4 * t[k] / (p + 1)) * (4 - d * (p - 1)) * lp1[k] ** (p + 1)
        if rhs != 0:
            rels.append(abs(fd - rhs) / abs(rhs))
    worst_rel = float(np.max(rels)) if rels else float("nan")
    run.extra["dvdt_worst_rel_error"] = worst_rel
    run.check(_upper_verdict("dvdt_identity", worst_rel, config["check.dvdt_rtol"]))
    _write_json(
        run.path("pc_energy.json"),
        {
            "V0": float(V[0]),
            "x_u0_sq": x_norm_sq,
            "max_increment": worst,
            "dvdt_worst_rel_error": worst_rel,
        },
    )


def _run_scattering(run: _Run):
    config = run.config
    traj = _evolve_from_config(run)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    T_list = config["scattering.T_list"]
    if not T_list:
        hz = traj.validity_horizon
        T_list = (hz / 8, hz / 4, hz / 2)
    try:
        state = extract_scattering_state(
            traj, T_list, gap_tol=config["scattering.gap_tol"]
        )
    except (RuntimeError, ValueError, KeyError) as exc:
        raise RunError(str(exc)) from exc
    u0 = ComplexField(traj.grid, traj.u0)
    window = run.fit_window(u0, traj.validity_horizon)
    (times, values), fit = scattering_rate(traj, state.u_plus, window)
    _write_csv(
        run.path("scattering.csv"),
        ["t", "hdot_half_diff"],
        zip(times, values),
    )
    gaps = list(state.gaps)
    ratios = [gaps[i][1] / gaps[i + 1][1] for i in range(len(gaps) - 1)]
    payload = {
        "extraction_time": state.extraction_time,
        "cauchy_gap": state.cauchy_gap,
        "gaps": gaps,
        "gap_ratios_per_doubling": ratios,
        "rate_fit": asdict(fit) if fit else "exact",
        "window": window,
        "horizon": traj.validity_horizon,
    }
    _write_json(run.path("fits.json"), payload)
    run.extra["scattering"] = payload
    if fit is not None:
        write_loglog(
            run.path("rate.svg"),
            "distance to the free profile",
            "t",
            "Hdot^1/2 difference",
            [(times, values, "||u(t) - free(u+)||")],
            fits=[fit],
        )
        run.check(
            _bounds_verdict(
                "rate_exponent",
                fit.exponent,
                config["check.rate_lo"],
                config["check.rate_hi"],
            )
        )
    if ratios:
        run.check(
            _bounds_verdict(
                "gap_ratio_last",
                ratios[-1],
                config["check.gap_ratio_lo"],
                config["check.gap_ratio_hi"],
            )
        )


def _run_spacetime_tail(run: _Run):
    config = run.config
    traj = _evolve_from_config(run)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    s_list = config["tail.s_list"]
    if not s_list:
        hz = traj.validity_horizon
        s_list = tuple(np.round(np.linspace(hz / 4, hz / 2, 10), 6))
    (s_arr, tails, proxies), fit = spacetime_tail(traj, s_list)
    _write_csv(
        run.path("tail.csv"),
        ["s", "l5_tail", "truncation_proxy"],
        zip(s_arr, tails, proxies),
    )
    payload = {
        "fit": asdict(fit) if fit else None,
        "max_proxy": float(np.max(proxies)) if len(proxies) else 0.0,
        "horizon": traj.validity_horizon,
    }
    _write_json(run.path("fits.json"), payload)
    run.extra["tail"] = payload
    if fit is not None:
        write_loglog(
            run.path("tail.svg"),
            "spacetime L5 tail",
            "s",
            "||u||_L5(t>=s)",
            [(s_arr, tails, "tail")],
            fits=[fit],
        )
        run.check(
            _bounds_verdict(
                "tail_exponent",
                fit.exponent,
                config["check.tail_lo"],
                config["check.tail_hi"],
            )
        )
    run.check(
        _upper_verdict("truncation_proxy", payload["max_proxy"], config["check.tail_proxy"])
    )


def _thinned(traj: Trajectory, factor: int) -> Trajectory:
    return Trajectory(
        grid=traj.grid,
        model=traj.model,
        config=traj.config,
        times=traj.times,
        observable_series=traj.observable_series,
        snapshot_steps=traj.snapshot_steps[::factor],
        snapshot_values=traj.snapshot_values[::factor],
        validity_horizon=traj.validity_horizon,
    )


def _run_duhamel(run: _Run):
    config = run.config
    traj = _evolve_from_config(run)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    if config["duhamel.save_snapshots"]:
        save_snapshots(run.path("snapshots.bin"), traj, seed=config["seed"])
    u0 = ComplexField(traj.grid, traj.u0)
    m1 = DataProfile.basic(u0).m1
    t_list = config["duhamel.t_list"]
    if not t_list:
        hz = traj.validity_horizon
        t_list = (hz / 2, 0.8 * hz)
    a_env = traj.observable_series["A_env"]
    snap_times = traj.snapshot_times()
    ds = float(snap_times[1] - snap_times[0])

    def to_lattice(value, rounder=np.round):
        return float(max(ds, ds * rounder(value / ds)))

    records = []
    for t_probe in t_list:
        t_probe = to_lattice(t_probe)
        M_default = (
            config["duhamel.M"]
            if config["duhamel.M"] > 0
            else default_duhamel_M(t_probe, m1, config["duhamel.c"])
        )
        for tag, M in (
            ("default", to_lattice(M_default, np.floor)),
            ("quarter", to_lattice(t_probe / 4, np.floor)),
        ):
            split = duhamel_split(traj, t_probe, M)
            k = int(np.argmin(np.abs(traj.times - split.t)))
            bound = 0.5 * a_env[k] * split.t**-1.5
            records.append(
                {
                    "t": split.t,
                    "M": split.M,
                    "M_choice": tag,
                    "F1_linf": lp_norm(split.F1, np.inf),
                    "F2_linf": lp_norm(split.F2, np.inf),
                    "F3_linf": lp_norm(split.F3, np.inf),
                    "F1_l2": lp_norm(split.F1, 2),
                    "F2_l2": lp_norm(split.F2, 2),
                    "F3_l2": lp_norm(split.F3, 2),
                    "residual": split.residual,
                    "f2_bound": bound,
                    "f2_ok": bool(lp_norm(split.F2, np.inf) <= bound),
                }
            )
    _write_json(run.path("duhamel.json"), {"records": records})
    run.extra["duhamel_records"] = records

    # second-order residual convergence under snapshot-stride coarsening;
    # probe and M live on the coarsest (4x) lattice so every thinning shares them
    ds4 = 4 * ds
    t_r = float(ds4 * max(2, np.round(records[0]["t"] / ds4)))
    M_r = float(ds4 * max(1, np.floor(t_r / 2 / ds4)))
    res = {}
    for factor in (1, 2, 4):
        res[factor] = duhamel_split(_thinned(traj, factor), t_r, M_r).residual
    ratio_coarse = res[4] / res[2] if res[2] else float("inf")
    ratio_fine = res[2] / res[1] if res[1] else float("inf")
    run.extra["residual_by_stride"] = res
    run.extra["residual_ratios"] = [ratio_coarse, ratio_fine]
    run.check(
        _bounds_verdict(
            "residual_stride_ratio",
            ratio_coarse,
            config["check.residual_ratio_lo"],
            config["check.residual_ratio_hi"],
        )
    )

    # window additivity: the F-sum must not depend on the interior M
    t_add = records[0]["t"]
    split_a = duhamel_split(traj, t_add, records[0]["M"])
    split_b = duhamel_split(traj, t_add, records[1]["M"])
    sum_a = split_a.F1.values + split_a.F2.values + split_a.F3.values
    sum_b = split_b.F1.values + split_b.F2.values + split_b.F3.values
    scale = lp_norm(ComplexField(traj.grid, sum_a), 2)
    diff = float(
        np.sqrt(np.sum(np.abs(sum_a - sum_b) ** 2) * traj.grid.cell_volume)
    )
    rel = diff / scale if scale else 0.0
    run.extra["m_additivity_rel"] = rel
    run.check(
        Verdict("m_additivity", bool(rel <= 1e-10), rel, "<= 1e-10 (quadrature tol)")
    )
    f2_default = [r for r in records if r["M_choice"] == "default"]
    run.check(
        Verdict(
            "f2_absorb_bound",
            all(r["f2_ok"] for r in f2_default),
            float(max(r["F2_linf"] for r in f2_default)),
            "F2_linf <= 0.5 A(t) t^-3/2 at the default M",
        )
    )


def _run_morawetz(run: _Run):
    config = run.config
    traj = _evolve_from_config(run)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    lhs, bound = morawetz_accumulate(traj)
    ratio = lhs / bound if bound else float("inf")
    payload = {"spacetime_l4_4th": lhs, "bound": bound, "ratio": ratio}
    _write_json(run.path("morawetz.json"), payload)
    run.extra["morawetz"] = payload
    limit = config["check.morawetz_C"]
    if limit:
        run.check(
            Verdict(
                "morawetz_bound",
                bool(lhs <= limit * bound),
                ratio,
                f"lhs <= {limit} * bound",
            )
        )


def _run_ensemble(run: _Run):
    config = run.config
    grid = config.grid()
    u0 = realize(config.data(), grid)
    lam = config["ensemble.lambda_grid"] or None
    fit_lo = config["fit.t_min"] or 5.0 * dispersion_time(u0)
    fit_hi = config["fit.t_max"] or np.inf
    report = ensemble_run(
        u0,
        config.model(),
        config.solver(),
        config["ensemble.n_samples"],
        lambda_grid=lam,
        master_seed=config["seed"],
        partition_h=config["ensemble.h"],
        fit_window=(fit_lo, fit_hi),
        jobs=run.jobs,
        debug_ones=config["ensemble.debug_ones"],
    )
    for summary in report.sample_summaries:
        if "series" not in summary:
            continue
        series = summary.pop("series")
        times = summary.pop("times")
        extras = [k for k in series if k not in CONTRACT_COLUMNS and k != "t"]
        header = list(CONTRACT_COLUMNS) + extras
        rows = []
        for i, t in enumerate(times):
            rows.append(
                [t]
                + [series[c][i] for c in CONTRACT_COLUMNS[1:]]
                + [series[c][i] for c in extras]
            )
        _write_csv(
            os.path.join(run.dir, f"sample_{summary['index']:04d}.csv"),
            header,
            rows,
        )
        run.artifacts.append(f"sample_{summary['index']:04d}.csv")
    manifest = {
        "master_seed": report.master_seed,
        "n_samples": report.n_samples,
        "n_failed": report.n_failed,
        "samples": [
            {k: v for k, v in s.items() if k not in ("series", "times")}
            for s in report.sample_summaries
        ],
        "median_sup": report.median_sup,
        "lambda_grid": report.lambda_grid,
        "tail_probs": report.tail_probs,
        "h1_tail_probs": report.h1_tail_probs,
        "weighted_median": report.weighted_median,
        "weighted_iqr": report.weighted_iqr,
    }
    _write_json(run.path("ensemble_manifest.json"), manifest)
    run.extra["ensemble"] = {
        k: manifest[k]
        for k in (
            "median_sup",
            "lambda_grid",
            "tail_probs",
            "n_failed",
            "weighted_median",
        )
    }
    nonincreasing = bool(np.all(np.diff(report.tail_probs) <= 1e-12))
    run.check(
        Verdict(
            "tails_nonincreasing",
            nonincreasing,
            float(np.max(np.diff(report.tail_probs))) if len(report.tail_probs) > 1 else 0.0,
            "tail(lambda) nonincreasing",
        )
    )
    lam4 = 4.0 * report.median_sup
    idx = int(np.argmin(np.abs(report.lambda_grid - lam4)))
    run.check(
        _upper_verdict(
            "tail_at_4x_median", float(report.tail_probs[idx]), config["check.tail_prob"]
        )
    )


def _run_amplitude_sweep(run: _Run):
    import warnings

    config = run.config
    grid = config.grid()
    model = config.model()
    solver = config.solver()
    rows = []
    for amplitude in config["sweep.amplitudes"]:
        data = config.data()
        u0 = realize(
            type(data)(
                kind=data.kind,
                amplitude=amplitude,
                width=data.width,
                center=data.center,
                mod_modes=data.mod_modes,
            ),
            grid,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = evolve(u0, model, solver)
        t = traj.times
        valid = (t > 0) & (t <= traj.validity_horizon + 1e-12)
        sup_stat = float(
            np.max(t[valid] ** 1.5 * traj.observable_series["linf"][valid])
        )
        lhs, bound = morawetz_accumulate(traj)
        rows.append(
            [amplitude, sup_stat, traj.validity_horizon, lhs, bound, lhs / bound]
        )
    _write_csv(
        run.path("amplitude_sweep.csv"),
        ["amplitude", "sup_t32_linf", "horizon", "morawetz_lhs", "morawetz_bound", "ratio"],
        rows,
    )
    run.extra["sweep_rows"] = rows  # trend table, no pass/fail


def _run_convergence_gate(run: _Run):
    import warnings

    config = run.config
    grid = config.grid()
    u0 = realize(config.data(), grid)
    model = config.model()
    base = config.solver()
    dt_c = config["gate.dt_coarse"]
    refinement = config["gate.refinement"]

    def terminal(dt):
        cfg = type(base)(
            dt=dt,
            t_end=base.t_end,
            dealias_ratio=base.dealias_ratio,
            snapshot_stride=10**9,
            boundary_shell_fraction=base.boundary_shell_fraction,
            boundary_mass_tol=base.boundary_mass_tol,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return evolve(u0, model, cfg).snapshot_values[-1]

    ref = terminal(dt_c / refinement)
    errs = {}
    for dt in (dt_c, dt_c / 2):
        diff = terminal(dt) - ref
        errs[dt] = float(np.sqrt(np.sum(np.abs(diff) ** 2) * grid.cell_volume))
    ratio = errs[dt_c] / errs[dt_c / 2]
    _write_csv(
        run.path("convergence.csv"),
        ["dt", "terminal_l2_error"],
        sorted(errs.items()),
    )
    run.extra["richardson_ratio"] = ratio
    run.check(
        _bounds_verdict(
            "order2_ratio", ratio, config["check.order_lo"], config["check.order_hi"]
        )
    )


_RUNNERS = {
    "linear-decay": _run_linear_decay,
    "nonlinear-decay": _run_nonlinear_decay,
    "l6-decay": _run_l6_decay,
    "pc-energy": _run_pc_energy,
    "scattering-rate": _run_scattering,
    "spacetime-tail": _run_spacetime_tail,
    "duhamel": _run_duhamel,
    "morawetz": _run_morawetz,
    "ensemble": _run_ensemble,
    "amplitude-sweep": _run_amplitude_sweep,
    "convergence-gate": _run_convergence_gate,
}
