"""profileiq: trait estimation from social-network profile images.

The pipeline: extract computational-aesthetics features from images,
turn stranger ratings into reliability statistics and perceived scores,
condition the feature matrix (PCA + F-test selection), regress measured
or perceived scores with an epsilon-SVR under leave-one-out
cross-validation, and report rank correlations and errors against random
and mean baselines.
"""

from .analysis import (
    BaselineBlock,
    EvaluationReport,
    FeatureCorrelationTable,
    GroupedAnalysis,
    evaluate_predictions,
    feature_correlation_table,
    grouped_trait_analysis,
    mean_baseline,
    nrmse,
    random_baseline,
    rmse,
    spearman,
)
from .errors import AnalysisError, InputError, ProfileIqError
from .features import (
    FaceBodyAnnotation,
    FeatureExtractor,
    TOTAL_LENGTH,
    body_face_features,
    colour_features,
    composition_features,
    extract_all,
    feature_names,
    group_slices,
    local_features,
    texture_features,
)
from .images import load_image, validate_image
from .reliability import (
    IccResult,
    RatingsTable,
    aggregate_pi,
    classify_icc,
    icc_one_way,
    rating_summary,
    variance_components,
    znormalize_raters,
)
from .selection import (
    MiCategory,
    PcaModel,
    SelectionModel,
    TraitFeatureSelector,
    f_test_anova,
    f_test_regression,
    fit_pca,
    mi_category,
    select_features_mi,
    select_features_pi,
)
from .svm import (
    CvPlan,
    GridSpec,
    HyperParams,
    LoocvResult,
    SmoSvr,
    SvrModel,
    grid_search,
    loocv,
    plan_cv,
    svr_train,
)

__version__ = "0.1.0"
