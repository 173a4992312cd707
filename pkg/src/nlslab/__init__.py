"""nlslab: a pseudospectral laboratory for quantitative NLS decay."""

__version__ = "0.1.0"

from .models import CUBIC_NLS_3D, ModelSpec, dispersion_phase
from .observables import (
    DataProfile,
    DecayEnvelope,
    DecayFit,
    ObservableSeries,
    decay_envelope,
    fit_decay,
    hdot_norm,
    hs_norm,
    j_norm,
    lp_norm,
    morawetz_accumulate,
    pseudoconformal_inverse,
    pseudoconformal_transform,
    pseudoconformal_V,
    strichartz_admissible,
    weighted_l6_check,
)
from .propagator import free_evolve, linear_decay_experiment
from .solver import (
    ConservedPair,
    NumericalAbort,
    SolverConfig,
    Trajectory,
    conserved,
    evolve,
    load_snapshots,
    nonlinear_substep,
    save_snapshots,
    strang_step,
)
from .spectral import (
    ComplexField,
    Grid,
    SpectralField,
    apply_multiplier,
    dealias_mask,
    make_grid,
    to_physical,
    to_spectral,
)
