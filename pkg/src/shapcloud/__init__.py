"""Shapley variable importance clouds for logistic models.

Fits an optimal logistic regression, samples nearly-optimal models from its
Rashomon set, scores each model's variables with loss-based Shapley values
(VIF-gated), pools the scores with random-effects meta-analysis, and renders
bar/violin/SHAP-summary figures.
"""

from .data import Dataset, SplitSpec, load_csv, split, write_csv
from .errors import ConfigError, DataError, NumericError, ShapcloudError
from .logistic import (
    FittedModel,
    compute_vif,
    fit_logistic,
    load_model,
    log_loss,
    predict_proba,
    save_model,
)
from .pooling import PooledImportance, pool_all, pool_random_effects
from .ranking import (
    GREATER,
    LESS,
    TIE,
    ModelRanking,
    RankFrequency,
    filter_models_by_rank,
    pairwise_significance,
    rank_frequency,
    rank_variables,
)
from .reliance import (
    ModelReliance,
    PermutationReliance,
    apply_vif_gate,
    compute_shapley_vic,
    compute_vic_permutation,
)
from .report import (
    BarDatum,
    ViolinSlice,
    ViolinSummary,
    build_violin,
    export_shap_summary,
    render_bar_svg,
    render_violin_svg,
)
from .sampling import (
    ModelSample,
    RashomonSample,
    SamplerConfig,
    loss_bound,
    sample_rashomon,
)
from .shapley import (
    GlobalSage,
    LocalShap,
    ShapleyConfig,
    ShapleyEstimate,
    ShapSummary,
    exact_shapley_from_game,
    mean_abs_shap,
    shapley_exact,
    shapley_sample,
    value_of_subset,
)
from .synthetic import make_benchmark, make_logistic_dataset

__version__ = "0.1.0"
