"""Sparse function-on-scalar regression.

Penalized regression of functional outcomes on large numbers of scalar
predictors: a group-lasso ADMM solver over arbitrary Hilbert geometries, an
adaptive reweighted variant with exact screening, B-spline/FPCA
preprocessing, information-criterion tuning, and simulation benchmarks.
"""

__version__ = "0.1.0"

from .basis import (
    Basis,
    CoefficientMatrix,
    FunctionalVector,
    group_penalty,
    identity_basis,
    inner,
    load_basis,
    norm,
    raw_grid_basis,
    save_basis,
)
from .bench import (
    AssumptionDiagnostics,
    BenchMetrics,
    CampaignResult,
    diagnostics,
    prepare_scores,
    rmsp,
    run_campaign,
    selection_metrics,
    train_test_rmse,
)
from .bsplines import bspline_basis, bspline_gram_penalty, evaluate_bsplines
from .estimators import AdaptiveFunctionalLasso, FunctionalLasso, FunctionalLassoIC
from .prep import (
    BSplineSmoother,
    FpcaResult,
    FunctionalPCA,
    SmoothingConfig,
    build_bspline_basis,
    fpca,
    fpca_back_project,
    smooth_curves,
)
from .simulate import (
    MaternParams,
    ScenarioConfig,
    SimulatedDataset,
    generate_scenario,
    matern_cov,
    matern_cov_matrix,
    sample_design,
    sample_gp,
)
from .solver import (
    FitConfig,
    FitResult,
    GroupLassoWorkspace,
    KktReport,
    adaptive_weights,
    closed_form_orthogonal,
    fit_afsl,
    fit_fsl,
    fit_group_lasso,
    fit_with_weights,
    kkt_check,
    lambda_max,
    oracle_estimator,
    residual_sum_squares,
)
from .tuning import (
    PathConfig,
    PathResult,
    SelectionResult,
    criterion_value,
    lambda_path,
    select_fsl_afsl,
    select_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
