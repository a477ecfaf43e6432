"""One-step Huber training for COMET and finite-difference gradient checks."""
from .trainer import (
    CometGradient,
    TrainConfig,
    TrainReport,
    huber,
    huber_derivative,
    loss_gradient,
    one_step_loss,
    one_step_mae,
    train,
)
from .gradcheck import (
    central_difference,
    check_comet_gradient,
    preflight_gradient_check,
    relative_error,
)

__all__ = [
    'CometGradient',
    'TrainConfig',
    'TrainReport',
    'huber',
    'huber_derivative',
    'loss_gradient',
    'one_step_loss',
    'one_step_mae',
    'train',
    'central_difference',
    'check_comet_gradient',
    'preflight_gradient_check',
    'relative_error',
]
