"""forecastlab: train, compare, and explain forecasting models on monthly panels."""

from .arima import ArimaOrder, difference, fit_css, forecast, select_order
from .dataset import (
    ColumnSchema,
    SeriesFrame,
    SplitSpec,
    chrono_split,
    default_schema,
    load_frame,
    log_transform,
    standardize_fit_apply,
    synth_generate,
)
from .evaluation import dm_test, mae, rmse, rmse_reduction
from .linear import PenaltySpec, fit_linear, predict_linear
from .shapley import BackgroundSet, exact_shapley, explain_matrix, global_importance, tree_shap
from .svr import KernelSpec, fit_svr, predict_svr
from .trees import (
    BoostParams,
    ForestParams,
    fit_gradient_boosting,
    fit_random_forest,
    fit_regression_tree,
    predict_ensemble,
)
from .tuning import CvPlan, ParamGrid, grid_search, kfold_indices

__version__ = "0.1.0"
