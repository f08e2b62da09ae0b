from semsurv._assessment import (
    ComparisonRow,
    DicResult,
    EtaMode,
    FitReport,
    KaplanMeierCurve,
    LpmlResult,
    MseResult,
    ResidualDiagnostics,
    SubjectRow,
    SurvivalCurve,
    assess,
    check_draws_match,
    compare_reports,
    compute_dic,
    compute_lpml,
    compute_mse,
    kaplan_meier,
    residual_diagnostics,
    survival_curve,
)
from semsurv._baseline import BaselineHyperparameters, run_chain_baseline, survival_loglik_baseline
from semsurv._chain import ProgressEvent
from semsurv._config import McmcConfig, resolve_settings
from semsurv._gibbs import gibbs_step, initial_state, run_chain
from semsurv._hash import dataset_fingerprint
from semsurv._io import (
    DatasetFileSpec,
    read_dataset,
    read_draws,
    read_fit_report,
    write_dataset,
    write_draws,
    write_fit_report,
)
from semsurv._model import (
    BaselineState,
    Dataset,
    Hyperparameters,
    IdentifiabilityReport,
    IntegratedState,
    ModelKind,
    PosteriorDraws,
    check_identifiability,
    full_loglik_integrated,
    survival_loglik_integrated,
)
from semsurv._rng import RngStream
from semsurv._simulation import (
    DataGenerator,
    GroundTruth,
    Scenario,
    StudyConfig,
    StudyReport,
    calibrate_censoring,
    evaluate_orderings,
    generate,
    preset_study,
    run_study,
)
