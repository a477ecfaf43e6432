"""COMET behind the Forecaster interface."""
from typing import Optional

from src.config import DEFAULT_K, DEFAULT_LATENT_DIM
from src.core.comet import parameter_count, predict_step
from src.core.models import BehaviorState, CometModel
from src.core.series import WindowSpec, as_values
from src.training.trainer import TrainConfig, TrainReport, train
from .forecaster import Forecaster


class CometForecaster(Forecaster):
    """COMET behind the Forecaster interface.

    The output does not depend on the behaviour state, so every prediction
    starts from the zero state.
    """

    name = "comet"

    def __init__(self, window_spec: WindowSpec = None, config: TrainConfig = None,
                 latent_dim: int = DEFAULT_LATENT_DIM, k: int = DEFAULT_K,
                 model: Optional[CometModel] = None):
        self.window_spec = model.window_spec if model is not None else (window_spec or WindowSpec())
        self.config = config or TrainConfig()
        self.latent_dim = model.latent_dim if model is not None else latent_dim
        self.k = model.k if model is not None else k
        self.model = model
        self.report: Optional[TrainReport] = None

    @classmethod
    def from_model(cls, model: CometModel) -> "CometForecaster":
        return cls(model=model)

    @property
    def min_history(self) -> int:
        return self.window_spec.long_len

    @property
    def is_fitted(self) -> bool:
        return self.model is not None

    def fit(self, train_series, validation=None, verbose=True):
        self.model, self.report = train(train_series, self.window_spec, self.config,
                                        self.latent_dim, self.k, validation=validation, verbose=verbose)
        return self

    def predict_next(self, history):
        values = as_values(history)
        self.check_history(values.size)
        return predict_step(self.model, values, BehaviorState.zeros(self.latent_dim))[0]

    def parameter_bytes(self):
        self.check_history(self.min_history)
        return parameter_count(self.model).param_bytes

    def memory_bytes(self):
        self.check_history(self.min_history)
        return parameter_count(self.model).memory_bytes

    def step_bound(self):
        self.check_history(self.min_history)
        return self.model.memory.max_abs_dx()
