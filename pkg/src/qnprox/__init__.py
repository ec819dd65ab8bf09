"""Quasi-Newton proximal solvers for wavelet/TV regularized CS-MRI."""

from .operators import (
    ForwardModel,
    fidelity_grad,
    make_radial_trajectory,
    make_spiral_trajectory,
    nudft_adjoint,
    nudft_forward,
)
from .transforms import (
    DualTriple,
    WaveletSpec,
    l_adjoint,
    l_apply,
    proj_pair,
    proj_unit_ball,
    smoothed_l1,
    tv_value,
    wavelet_adjoint,
    wavelet_forward,
)
from .metric import NotPositiveDefiniteError, Rank1Metric, sr1_update
from .wpm import (
    RootConvergenceError,
    WpmProblem,
    WpmSettings,
    dual_gradient,
    dual_lipschitz,
    prox_l1_diag,
    solve_dual_fista,
    solve_rank1_root,
    w_of,
)
from .solvers import (
    BacktrackError,
    IterationRecord,
    SolverConfig,
    cost,
    estimate_gram_lipschitz,
    psnr,
    run_apm,
    run_cqnpm,
    run_partial_smoothing,
)
from .bench import (
    ConfigError,
    ExperimentConfig,
    RunArtifact,
    emit_config,
    make_phantom,
    make_sensitivities,
    parse_config,
    run_experiment,
    simulate,
)

__version__ = "0.1.0"
