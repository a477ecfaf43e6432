"""Forecasters evaluated side by side: COMET, kNN, MLP, LSTM and a persistence reference.

Every model implements the Forecaster interface so the evaluation harness
drives all of them through the same rollout loop.
"""
from .forecaster import Forecaster, PersistenceForecaster, rollout_forecaster, supervised_windows
from .knn import KnnConfig, KnnForecaster, KnnStore, knn_predict
from .mlp import MlpConfig, MlpForecaster, mlp_forward, mlp_train
from .lstm import LstmConfig, LstmForecaster, lstm_forward, lstm_train
from .comet_forecaster import CometForecaster

__all__ = [
    'Forecaster',
    'PersistenceForecaster',
    'CometForecaster',
    'rollout_forecaster',
    'supervised_windows',
    'KnnConfig',
    'KnnForecaster',
    'KnnStore',
    'knn_predict',
    'MlpConfig',
    'MlpForecaster',
    'mlp_forward',
    'mlp_train',
    'LstmConfig',
    'LstmForecaster',
    'lstm_forward',
    'lstm_train',
]
