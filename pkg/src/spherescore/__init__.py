"""Exact beta tests for scores whose weights depend on the data only
through a total sums-of-products matrix."""

__version__ = "0.1.0"

from .beta import BetaParams, beta_cdf, beta_critical, beta_pdf, beta_pvalue, beta_quantile, beta_sf
from .design import Design, ProjectionPair, make_design_projections
from .errors import (
    ConfigError,
    DegenerateScore,
    DegenerateTarget,
    DesignError,
    DimensionError,
    DomainError,
    EigenError,
    EmptyInput,
    InvalidData,
    InvalidScore,
    NumericalError,
    ParseError,
    ShapeError,
    SingularError,
    SphereScoreError,
)
from .linalg import (
    CenteredMatrix,
    DataMatrix,
    EigenPair,
    RankDeficiencyWarning,
    SumsOfProducts,
    center,
    dual_eigen_scores,
    eigh_descending,
    sums_of_products,
    symmetric_eigen,
)
from .model_choice import (
    GeneSet,
    OrderingKey,
    ScoreSelection,
    SequentialOutcome,
    WeightMatrix,
    build_gene_sets,
    column_sum_order,
    gene_set_weights,
    indicator_weights,
    kropf_diagonal_order,
    pca_weights,
    run_sequential,
    select_scores,
    sequential_from_pvalues,
    sequential_rule,
)
from .scoretests import (
    BetaTestResult,
    ClassicalResult,
    ScoreVector,
    TargetVector,
    WilksResult,
    classical_one_group,
    pc_mean_test,
    regression_score,
    score_statistics,
    score_test,
    score_test_correlation,
    score_test_general,
    score_test_one_group,
    score_test_two_group,
    spherical_mean_test,
    wilks_test,
)
