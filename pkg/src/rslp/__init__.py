"""Random subspace local projections.

Impulse response estimation for high-dimensional time series: ensembles
of small-subspace regressions with weighted aggregation, category-aware
sampling, adaptive subspace-size selection and moving-block bootstrap
inference, plus benchmarks and a rolling-window evaluation harness.
"""

from .benchmarks import (BenchmarkSpec, estimate_base_rslp, estimate_elastic_net_lp,
                         estimate_factor_lp, estimate_oracle_lp, estimate_ridge_lp,
                         run_estimator)
from .ensemble import (AdaptiveKConfig, IrfEstimate, RslpSettings, WeightScheme,
                       aggregate_fits, compute_weights, estimate_rslp, select_k)
from .errors import (ConfigError, DataError, EstimationError, InferenceError,
                     ParseError, RslpError, TransformError)
from .evaluation import (EvalReport, MonteCarloResult, RollingWindowSpec, irf_error,
                         run_ablation, run_monte_carlo, run_rolling_eval)
from .inference import (BootstrapConfig, ConfidenceInterval, auto_block_length,
                        block_resample, bootstrap_irf, percentile_interval)
from .linalg import (DesignMatrix, RegressionFit, elastic_net_fit, ols_fit,
                     principal_components, ridge_fit)
from .panel import (ScaleStats, TimeSeriesPanel, VariableRoles, apply_transforms,
                    handle_missing, load_fredmd_csv, standardize)
from .projection import LpProblem, Subspace, SubspaceFit, build_lp_design, fit_subspace
from .sampling import CategoryScheme, draw_stratified_subspaces, draw_uniform_subspaces
from .synthetic import SyntheticSpec, SyntheticTruth, generate_synthetic

__version__ = "0.1.0"
