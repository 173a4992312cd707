"""Experiment configuration: a flat documented key=value format.

Lines are `key = value`; `#` starts a comment. Unknown keys are errors (typo
safety) and validation reports every violation, not just the first. Configs
serialize with all defaults filled, so parse(serialize(c)) == c and the
sha256 of the canonical text is a stable run id.
"""

import hashlib
from dataclasses import dataclass, field

from .initial_data import DATA_KINDS, DataDescriptor
from .models import SYMBOL_KINDS, ModelSpec
from .solver import SolverConfig
from .spectral import Grid, _is_3_smooth_even, make_grid

EXPERIMENT_KINDS = (
    "linear-decay",
    "nonlinear-decay",
    "scattering-rate",
    "spacetime-tail",
    "duhamel",
    "pc-energy",
    "l6-decay",
    "morawetz",
    "ensemble",
    "amplitude-sweep",
    "convergence-gate",
)


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _parse_bool(s):
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip()) if s else ()


def _parse_ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip()) if s else ()


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: object
    default: object
    admissible: str
    check: object = None  # value -> bool


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


KEYS = {
    "kind": Key(str, None, f"one of {EXPERIMENT_KINDS}", lambda v: v in EXPERIMENT_KINDS),
    "grid.dim": Key(int, 3, "integer in {1,2,3}", lambda v: v in (1, 2, 3)),
    "grid.n": Key(int, 64, "even, >= 4, prime factors in {2,3}", _is_3_smooth_even),
    "grid.box": Key(float, 64.0, "positive real", _pos),
    "model.symbol": Key(str, "schrodinger", f"one of {SYMBOL_KINDS}", lambda v: v in SYMBOL_KINDS),
    "model.alpha": Key(float, 0.75, "real in (1/2, 1)", lambda v: 0.5 < v < 1.0),
    "model.p": Key(int, 3, "3 or 5", lambda v: v in (3, 5)),
    "model.mu": Key(int, 1, "0 (linear) or 1 (defocusing)", lambda v: v in (0, 1)),
    "solver.dt": Key(float, 0.004, "real in (0,1)", lambda v: 0 < v < 1),
    "solver.t_end": Key(float, 5.0, "positive real", _pos),
    "solver.dealias_ratio": Key(float, 2.0 / 3.0, "real in (0,1]", lambda v: 0 < v <= 1),
    "solver.snapshot_stride": Key(int, 10, "integer >= 1", lambda v: v >= 1),
    "solver.shell_fraction": Key(float, 0.1, "real in (0,0.5)", lambda v: 0 < v < 0.5),
    "solver.shell_tol": Key(float, 1e-6, "positive real", _pos),
    "data.kind": Key(str, "gaussian", f"one of {DATA_KINDS}", lambda v: v in DATA_KINDS),
    "data.amplitude": Key(float, 0.2, "positive real", _pos),
    "data.width": Key(float, 1.0, "positive real", _pos),
    "data.center": Key(_parse_floats, (), "comma-separated reals"),
    "data.modes": Key(_parse_ints, (), "comma-separated integers"),
    "data.file": Key(str, "", "path to a snapshot container"),
    "data.snapshot_index": Key(int, -1, "snapshot index"),
    "seed": Key(int, 0, "integer >= 0", _nonneg),
    "out": Key(str, "runs", "output directory"),
    "jobs": Key(int, 1, "integer >= 1", lambda v: v >= 1),
    # sampling / fitting
    "samples.t_start": Key(float, 0.25, "positive real", _pos),
    "samples.t_step": Key(float, 0.05, "positive real", _pos),
    "fit.t_min": Key(float, 0.0, "real >= 0 (0: 5x dispersion time)", _nonneg),
    "fit.t_max": Key(float, 0.0, "real >= 0 (0: validity horizon)", _nonneg),
    # scattering
    "scattering.T_list": Key(_parse_floats, (), "comma-separated increasing reals"),
    "scattering.gap_tol": Key(float, 5e-3, "positive real", _pos),
    # spacetime tail
    "tail.s_list": Key(_parse_floats, (), "comma-separated increasing reals"),
    # duhamel
    "duhamel.t_list": Key(_parse_floats, (), "comma-separated probe times"),
    "duhamel.M": Key(float, 0.0, "real >= 0 (0: min(t/2, c*M1^4))", _nonneg),
    "duhamel.c": Key(float, 1.0, "positive real", _pos),
    "duhamel.save_snapshots": Key(_parse_bool, False, "true/false"),
    # ensemble
    "ensemble.n_samples": Key(int, 8, "integer >= 1", lambda v: v >= 1),
    "ensemble.h": Key(float, 1.0, "positive real", _pos),
    "ensemble.lambda_grid": Key(_parse_floats, (), "comma-separated reals"),
    "ensemble.debug_ones": Key(_parse_bool, False, "true/false"),
    # amplitude sweep
    "sweep.amplitudes": Key(
        _parse_floats,
        (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
        "comma-separated positive reals",
    ),
    # convergence gate
    "gate.dt_coarse": Key(float, 0.008, "real in (0,1)", lambda v: 0 < v < 1),
    "gate.refinement": Key(int, 8, "reference refinement factor >= 4", lambda v: v >= 4),
    # acceptance thresholds (0 disables a check unless noted)
    "check.linf_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.linf_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.l6_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.l6_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.mass_drift": Key(float, 0.0, "real >= 0", _nonneg),
    "check.energy_drift": Key(float, 0.0, "real >= 0", _nonneg),
    "check.envelope_ratio": Key(float, 0.0, "real >= 0", _nonneg),
    "check.order_lo": Key(float, 3.5, "real > 0", _pos),
    "check.order_hi": Key(float, 4.5, "real > 0", _pos),
    "check.rate_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.rate_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.gap_ratio_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.gap_ratio_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.tail_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.tail_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.tail_proxy": Key(float, 0.0, "real >= 0", _nonneg),
    "check.residual_ratio_lo": Key(float, 0.0, "real >= 0", _nonneg),
    "check.residual_ratio_hi": Key(float, 0.0, "real >= 0", _nonneg),
    "check.v_monotone_slack": Key(float, 0.0, "real >= 0", _nonneg),
    "check.v0_rtol": Key(float, 0.0, "real >= 0", _nonneg),
    "check.dvdt_rtol": Key(float, 0.0, "real >= 0", _nonneg),
    "check.tail_prob": Key(float, 0.0, "real >= 0", _nonneg),
    "check.morawetz_C": Key(float, 0.0, "real >= 0", _nonneg),
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) pairs, defaults filled

    def __getitem__(self, key):
        return dict(self.values)[key]

    @property
    def kind(self) -> str:
        return self["kind"]

    def grid(self) -> Grid:
        return make_grid(self["grid.dim"], self["grid.n"], self["grid.box"])

    def model(self) -> ModelSpec:
        kind = self["model.symbol"]
        return ModelSpec(
            symbol_kind=kind,
            alpha=self["model.alpha"] if kind == "fractional" else None,
            nonlinearity_power=self["model.p"],
            mu=self["model.mu"],
        )

    def solver(self) -> SolverConfig:
        return SolverConfig(
            dt=self["solver.dt"],
            t_end=self["solver.t_end"],
            dealias_ratio=self["solver.dealias_ratio"],
            snapshot_stride=self["solver.snapshot_stride"],
            boundary_shell_fraction=self["solver.shell_fraction"],
            boundary_mass_tol=self["solver.shell_tol"],
        )

    def data(self) -> DataDescriptor:
        return DataDescriptor(
            kind=self["data.kind"],
            amplitude=self["data.amplitude"],
            width=self["data.width"],
            center=self["data.center"],
            mod_modes=self["data.modes"],
            path=self["data.file"],
            snapshot_index=self["data.snapshot_index"],
        )

    def serialize(self) -> str:
        lines = [f"{k} = {_fmt(v)}" for k, v in self.values]
        return "\n".join(lines) + "\n"

    def run_id(self) -> str:
        return hashlib.sha256(self.serialize().encode()).hexdigest()[:12]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        mapping = dict(self.values)
        for key, value in overrides.items():
            if key not in KEYS:
                raise KeyError(key)
            mapping[key] = value
        return ExperimentConfig(values=tuple(sorted(mapping.items())))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError carrying *all* violations."""
    violations = []
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            violations.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KEYS:
            violations.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in raw:
            violations.append(f"line {lineno}: duplicate key {key!r}")
            continue
        raw[key] = (lineno, value)

    mapping = {}
    for key, spec in KEYS.items():
        if key in raw:
            lineno, text_value = raw[key]
            try:
                value = spec.parse(text_value)
            except (ValueError, TypeError):
                violations.append(
                    f"line {lineno}: {key} = {text_value!r} is not parseable; "
                    f"admissible: {spec.admissible}"
                )
                continue
            if spec.check is not None and not spec.check(value):
                violations.append(
                    f"line {lineno}: {key} = {text_value!r} out of range; "
                    f"admissible: {spec.admissible}"
                )
                continue
            mapping[key] = value
        elif spec.default is None:
            violations.append(f"missing required key {key!r} ({spec.admissible})")
        else:
            mapping[key] = spec.default

    if violations:
        raise ConfigError(violations)

    config = ExperimentConfig(values=tuple(sorted(mapping.items())))
    # cross-field validation through the constructors
    for build in (config.grid, config.model, config.solver, config.data):
        try:
            build()
        except ValueError as exc:
            violations.append(str(exc))
    if violations:
        raise ConfigError(violations)
    return config


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())
