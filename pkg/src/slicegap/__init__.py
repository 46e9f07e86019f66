"""Exact simple slice sampling for radial and annular targets, with numerical
checks of its Wasserstein contraction and spectral gap."""

from slicegap.geometry import (
    Annulus,
    radius_from_volume,
    sample_annulus_radius,
    sample_uniform_ball,
    unit_ball_volume,
)
from slicegap.targets import (
    LevelSetFunction,
    RadialProfile,
    TargetDensity,
    level_set_inverse_numeric,
    make_bimodal,
    make_exponential,
    make_gaussian,
    make_gen_exponential,
    make_target,
    make_volcano,
)
from slicegap.sampler import (
    ChainTrace,
    CoupledStats,
    CoupledTrace,
    coupled_draws,
    coupled_step,
    kernel_draws,
    level_step,
    run_chain,
    run_coupled,
    run_level_chain,
    run_coupled_path,
    sample_level_stationary,
    slice_step,
)

__version__ = "0.1.0"
