"""Detection of flagged (problem) gamblers from tabular behavioral features.

A from-scratch numpy stack: the PGN4 1-D convolutional detector with exact
manual backpropagation, correlation-based feature selection and adjacency
arrangement, five classical baselines, a four-metric evaluation protocol,
a planted-signal synthetic data generator, and a reproducible experiment
runner (``pgn4`` on the command line).
"""

from .baselines import (
    AdaBoostModel,
    DecisionTreeModel,
    LinearSvmModel,
    MlpModel,
    RandomForestModel,
    build_mlp,
    load_classifier,
    save_classifier,
    train_adaboost,
    train_decision_tree,
    train_linear_svm,
    train_mlp,
    train_random_forest,
)
from .container import ChecksumError, ContainerError, VersionError
from .data import (
    CsvFormatError,
    DatasetTable,
    StandardizeStats,
    apply_standardize,
    load_csv,
    save_csv,
    split_train_valid,
    standardize,
)
from .features import (
    CorrelationReport,
    FeatureArrangement,
    correlation_report,
    pearson,
    project,
    select_and_arrange,
)
from .metrics import (
    EvalReport,
    SingleClassError,
    accuracy_f1,
    confusion_at,
    evaluate,
    pr_auc,
    roc_auc,
)
from .model import Pgn4Model, build_pgn4, load_model, save_model
from .rng import Rng
from .synth import (
    PRESETS,
    REASON_DISTRIBUTION,
    InfeasibleSignalError,
    SynthResult,
    SynthSpec,
    a_like_spec,
    b_like_spec,
    generate,
    reason_histogram,
    sample_reasons,
)
from .tensor import ShapeError, matmul, matrix, tensor3
from .training import (
    AdamState,
    GradientCheckReport,
    TrainConfig,
    TrainHistory,
    adam_step,
    bce_loss,
    gradient_check,
    train,
)

__version__ = "0.1.0"
