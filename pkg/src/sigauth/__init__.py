"""Dynamic-signature biometric authentication engine.

Pipeline: synthetic capture -> quality gate -> fixed-length features ->
partitioned map-reduce covariance -> correlation PCA -> per-user RPROP
ensembles -> priority-thresholded verification, plus the biometric metric
suite (FAR/FRR/EER, sensitivity/specificity) and a speedup benchmark harness.
"""

from .auth import (
    Decision,
    ModelStore,
    Priority,
    ThresholdPolicy,
    UserRecord,
    enroll,
    security_check,
    threshold_for_priority,
    verify,
)
from .config import RunConfig
from .errors import SigAuthError
from .features import (
    FEATURE_DIM,
    FEATURE_NAMES,
    FeatureMatrix,
    FeatureVector,
    assemble_matrix,
    extract_features,
    write_feature_csv,
)
from .mapreduce import (
    PartialStats,
    Partition,
    covariance_mapper,
    covariance_reducer,
    covariance_stats,
    finalize_covariance,
    partition_rows,
    run_mapreduce,
)
from .metrics import (
    Confusion,
    ScoredProbe,
    Timing,
    confusion_at,
    eer,
    far,
    far_frr_curve,
    frr,
    sensitivity,
    specificity,
    specificity_paper_eq2,
    speedup,
)
from .nnet import (
    Gradient,
    Network,
    RpropConfig,
    RpropState,
    TrainStop,
    backprop_gradient,
    forward,
    netcreate,
    rprop_step,
    sigtrain,
)
from .pca import (
    PcaModel,
    build_model,
    correlation_from_covariance,
    fit_pca,
    pca_model_id,
    project,
    project_rows,
)
from .sigdata import (
    QualityReport,
    SampleKind,
    SignatureSample,
    UserPrototype,
    check_quality,
    load_samples,
    make_prototype,
    save_samples,
    synth_sample,
)
from .training import (
    EnsembleNet,
    TrainConfig,
    WorkerPool,
    build_target_vector,
    ensemble_score,
    train_many,
    train_user,
)

__version__ = "0.1.0"
