"""Sparse high-dimensional VAR estimation and connectedness networks.

Estimation couples sure-independence screening with Lasso/SCAD penalized
regression so systems with many more candidate regressors than observations
stay tractable; the fitted models feed generalized forecast-error variance
decompositions, directional connectedness tables, and rolling network series.
"""
__version__ = "0.1.0"

from .connectedness import (
    ConnectednessSummary,
    FevdTable,
    GroupTable,
    RollingConfig,
    RollingSeries,
    RollingWindow,
    aggregate,
    decompose_within_cross,
    fevd,
    fevd_at,
    group_table_to_csv,
    normalize_rows,
    pairwise,
    rolling_connectedness,
    summarize,
    table_from_csv,
    table_to_csv,
)
from .dataset import (
    ContractCatalog,
    ImputationReport,
    PricePanel,
    ReturnPanel,
    difference,
    group_labels,
    group_map,
    impute,
    load_catalog,
    load_panel,
    write_panel_csv,
)
from .errors import (
    ConfigError,
    InputError,
    InsufficientDataError,
    NumericError,
    PanelFormatError,
    SparseVarError,
)
from .penalty import (
    LambdaPath,
    PenalizedFit,
    PenaltySpec,
    fit_penalized,
    kkt_residual,
    lambda_path,
    scad_penalty_derivative,
    scad_threshold,
    select_lambda,
    soft_threshold,
)
from .screening import (
    IterationTrace,
    ScreeningResult,
    VarFit,
    default_d_keep,
    fit_var,
    iterated_sis,
    ridge_scores,
    screen,
    sis_scores,
)
from .selection import (
    CriteriaRow,
    FmseReport,
    LagSelection,
    criteria_to_csv,
    fmse_to_csv,
    information_criteria,
    rolling_fmse,
    select_lag,
    welch_t_test,
)
from .varcore import (
    MACoefficients,
    ResidualSet,
    VarCoefficients,
    VarSpec,
    build_design,
    companion_matrix,
    forecast_one_step,
    is_stable,
    ma_coefficients,
    residual_covariance,
    residuals,
    simulate,
)

__all__ = [
    "__version__",
    "SparseVarError", "InputError", "PanelFormatError", "ConfigError",
    "InsufficientDataError", "NumericError",
    "VarSpec", "VarCoefficients", "ResidualSet", "MACoefficients",
    "build_design", "residuals", "residual_covariance", "ma_coefficients",
    "companion_matrix", "is_stable", "simulate", "forecast_one_step",
    "PricePanel", "ReturnPanel", "ContractCatalog", "ImputationReport",
    "load_panel", "load_catalog", "difference", "impute", "group_map",
    "group_labels", "write_panel_csv",
    "PenaltySpec", "LambdaPath", "PenalizedFit", "soft_threshold",
    "scad_threshold", "scad_penalty_derivative", "fit_penalized",
    "lambda_path", "select_lambda", "kkt_residual",
    "ScreeningResult", "IterationTrace", "VarFit", "sis_scores",
    "ridge_scores", "screen", "default_d_keep", "iterated_sis", "fit_var",
    "CriteriaRow", "LagSelection", "FmseReport", "information_criteria",
    "select_lag", "rolling_fmse", "welch_t_test", "criteria_to_csv",
    "fmse_to_csv",
    "FevdTable", "ConnectednessSummary", "GroupTable", "RollingConfig",
    "RollingWindow", "RollingSeries", "fevd", "fevd_at", "normalize_rows",
    "summarize", "aggregate", "decompose_within_cross", "pairwise",
    "rolling_connectedness", "table_to_csv", "table_from_csv",
    "group_table_to_csv",
]
