"""driftadapt: adversarial train/test drift detection and adaptation
for tabular binary-outcome models.

The library detects distribution shift between a labeled training table
and an unlabeled test table by fitting a classifier to separate the two
(its held-out AUC is the drift signal), and adapts outcome-model
training in three ways: dropping the features that enable the
separation, holding out a propensity-matched validation slice, or
weighting training rows by p/(1-p) of their test-membership propensity.
"""

from .data_model import (
    Column,
    ColumnKind,
    Dataset,
    EncodedMatrix,
    EncodingPolicy,
    IMPUTE_ZERO,
    KEEP_MISSING,
    align_codebooks,
    encode,
    extract_label,
    load_csv,
    load_schema,
    vstack_encoded,
    write_csv,
)
from .errors import ConfigError, DataError, DriftAdaptError, FitError
from .metrics import BalanceRow, auc, mean_ci, smd
from .trees import (
    DTParams,
    GBDTParams,
    RFParams,
    TreeEnsembleModel,
    fit_decision_tree,
    fit_gbdt,
    fit_random_forest,
    gain_importance,
    load_model,
    model_from_json,
    model_to_json,
    predict_proba,
    ranked_features,
    save_model,
)
from .adversarial import (
    DriftVerdict,
    PropensityScores,
    default_learner,
    detect_drift,
    propensity_oof,
    stack_adversarial,
)
from .methods import (
    FeatureSelectionConfig,
    MatchResult,
    OutcomeModel,
    SelectionTrace,
    WeightVector,
    auto_feature_selection,
    ipw_weights,
    psm_validation_select,
    train_outcome,
)
from .synthgen import (
    Distribution,
    DriftSpec,
    FeatureSpec,
    SynthData,
    categorical,
    generate,
    no_drift_spec,
    normal,
    oracle_auc,
    oracle_best_split,
    single_shift_spec,
    uniform,
)
from .harness import RunConfig, run
from .reports import Report, compare, load_report, report_from_json, save_report

__version__ = "0.1.0"
