"""Python bindings for the boolattn C++ core."""

from ._core import (
    Batch,
    ConcentrationReport,
    HardnessReport,
    InvalidArgument,
    RecoveryReport,
    TaskSpec,
    analytic_gradient,
    check_interaction_concentration,
    fd_gradient,
    forward,
    hardness_floor,
    kappa,
    label_degeneracy,
    learning_rate,
    make_task,
    run_majority,
    run_teacher_forced,
    sample_batch,
    softmax_columns,
    support_loss,
    surrogate_loss,
)

__version__ = "0.1.0"
