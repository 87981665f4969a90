"""Evidential uncertainty for active domain adaptation.

Classifier outputs are treated as evidence for a Dirichlet over class
probabilities.  The predictive uncertainty splits into a distributional
part (disagreement across the simplex) and a data part (expected
entropy); the split drives a two-round acquisition rule that first
shortlists by distributional uncertainty, then queries labels for the
most ambiguous shortlisted points.
"""

from .backend import BACKEND_NAME
from .dirichlet import (
    DirichletParams,
    SimplexPoint,
    dirichlet_log_pdf,
    digamma,
    expected_probs,
    expected_probs_batch,
    log_gamma,
    sample_dirichlet,
    sample_dirichlet_batch,
    standard_gamma,
    trigamma,
)
from .uncertainty import (
    DEFAULT_EVIDENCE_MAP,
    EvidenceMapConfig,
    UncertaintyReport,
    data_uncertainty,
    distribution_uncertainty,
    logits_to_alpha,
    logits_to_alpha_batch,
    predict,
    predict_batch,
    total_entropy,
    uncertainty_batch,
    uncertainty_report,
    uncertainty_reports_batch,
)
from .losses import (
    LossWeights,
    dirichlet_kl_vs_uniform,
    kl_loss,
    loss_gradients,
    loss_value_and_logit_gradients,
    nll_loss,
    one_hot,
    total_loss,
    total_loss_from_logits,
    uncertainty_loss,
)
from .network import (
    MomentumState,
    NetworkParams,
    TrainConfig,
    backward,
    fit_epoch,
    forward,
    init_network,
    load_checkpoint,
    make_lr_schedule,
    save_checkpoint,
    sgd_momentum_step,
    train_source_only,
)
from .data import (
    DomainDataset,
    ParseError,
    ShiftBenchmarkConfig,
    gen_shifted_gaussians,
    load_features_csv,
    save_features_csv,
)
from .metrics import (
    EceConfig,
    accuracy,
    expected_calibration_error,
    summarize_uncertainty_arrays,
    uncertainty_summary,
    write_histogram_csv,
)
from .active import (
    ActiveState,
    LabelOracle,
    Pools,
    QueryStrategy,
    RunReport,
    ScheduleConfig,
    STRATEGY_KINDS,
    baseline_select,
    budget_schedule,
    duc_select,
    make_pools,
    run_active_da,
    select_for_strategy,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "__version__",
    # dirichlet
    "DirichletParams",
    "SimplexPoint",
    "dirichlet_log_pdf",
    "digamma",
    "expected_probs",
    "expected_probs_batch",
    "log_gamma",
    "sample_dirichlet",
    "sample_dirichlet_batch",
    "standard_gamma",
    "trigamma",
    # uncertainty
    "DEFAULT_EVIDENCE_MAP",
    "EvidenceMapConfig",
    "UncertaintyReport",
    "data_uncertainty",
    "distribution_uncertainty",
    "logits_to_alpha",
    "logits_to_alpha_batch",
    "predict",
    "predict_batch",
    "total_entropy",
    "uncertainty_batch",
    "uncertainty_report",
    "uncertainty_reports_batch",
    # losses
    "LossWeights",
    "dirichlet_kl_vs_uniform",
    "kl_loss",
    "loss_gradients",
    "loss_value_and_logit_gradients",
    "nll_loss",
    "one_hot",
    "total_loss",
    "total_loss_from_logits",
    "uncertainty_loss",
    # network
    "MomentumState",
    "NetworkParams",
    "TrainConfig",
    "backward",
    "fit_epoch",
    "forward",
    "init_network",
    "load_checkpoint",
    "make_lr_schedule",
    "save_checkpoint",
    "sgd_momentum_step",
    "train_source_only",
    # data
    "DomainDataset",
    "ParseError",
    "ShiftBenchmarkConfig",
    "gen_shifted_gaussians",
    "load_features_csv",
    "save_features_csv",
    # metrics
    "EceConfig",
    "accuracy",
    "expected_calibration_error",
    "summarize_uncertainty_arrays",
    "uncertainty_summary",
    "write_histogram_csv",
    # active
    "ActiveState",
    "LabelOracle",
    "Pools",
    "QueryStrategy",
    "RunReport",
    "ScheduleConfig",
    "STRATEGY_KINDS",
    "baseline_select",
    "budget_schedule",
    "duc_select",
    "make_pools",
    "run_active_da",
    "select_for_strategy",
]
