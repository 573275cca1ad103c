"""Next-day stock index forecasting with four connectionist models.

The package bundles a damped second-order perceptron trainer, kernel
support-vector machines, a grid Takagi-Sugeno fuzzy system with hybrid
learning, and a boosted discretized-Bayes network behind one data pipeline,
metric set, and experiment harness.
"""

from .anfis import (
    AnfisModel,
    AnfisOnlineState,
    AnfisRegressor,
    GaussianMF,
    TriangularMF,
    build_grid_rules,
    consequent_lse,
    hybrid_epoch,
    online_init,
    online_update,
    premise_gradient,
)
from .dataio import (
    MinMaxScaler,
    SupervisedDataset,
    TimeSeriesFrame,
    chrono_split,
    load_ohlc_csv,
    make_supervised,
    split_index,
    write_ohlc_csv,
)
from .dbnn import AttributeBins, DbnnClassifier, DbnnRegressor
from .harness import (
    EvalReport,
    ExperimentConfig,
    ModelSpec,
    emit_predictions,
    emit_report,
    emit_trace,
    load_config,
    load_model,
    make_synthetic_ohlc,
    model_predict,
    parse_config,
    run_experiment,
    save_model,
    write_outputs,
)
from .linalg import LsqSolution, RlsState, lsq_solve, psd_check, rls_init, rls_update
from .lm import LmConfig, LmResult, LmStep, lm_step, lm_train
from .metrics import (
    EvalStats,
    evaluate,
    max_abs_percent_error,
    mean_abs_percent_error,
    pearson_corr,
    rmse,
)
from .mlp import MlpNetwork, MlpRegressor
from .svm import (
    Kernel,
    KernelSVC,
    KernelSVR,
    SvmModel,
    dual_objective,
    mercer_gram_check,
    smo_solve,
    svc_train,
    svr_train,
)

__version__ = "0.1.0"

__all__ = [
    "AnfisModel",
    "AnfisOnlineState",
    "AnfisRegressor",
    "GaussianMF",
    "TriangularMF",
    "build_grid_rules",
    "consequent_lse",
    "hybrid_epoch",
    "online_init",
    "online_update",
    "premise_gradient",
    "MinMaxScaler",
    "SupervisedDataset",
    "TimeSeriesFrame",
    "chrono_split",
    "load_ohlc_csv",
    "make_supervised",
    "split_index",
    "write_ohlc_csv",
    "AttributeBins",
    "DbnnClassifier",
    "DbnnRegressor",
    "EvalReport",
    "ExperimentConfig",
    "ModelSpec",
    "emit_predictions",
    "emit_report",
    "emit_trace",
    "load_config",
    "load_model",
    "make_synthetic_ohlc",
    "model_predict",
    "parse_config",
    "run_experiment",
    "save_model",
    "write_outputs",
    "LsqSolution",
    "RlsState",
    "lsq_solve",
    "psd_check",
    "rls_init",
    "rls_update",
    "LmConfig",
    "LmResult",
    "LmStep",
    "lm_step",
    "lm_train",
    "EvalStats",
    "evaluate",
    "max_abs_percent_error",
    "mean_abs_percent_error",
    "pearson_corr",
    "rmse",
    "MlpNetwork",
    "MlpRegressor",
    "Kernel",
    "KernelSVC",
    "KernelSVR",
    "SvmModel",
    "dual_objective",
    "mercer_gram_check",
    "smo_solve",
    "svc_train",
    "svr_train",
    "__version__",
]
