import numpy as np
import pytest

from src.baselines import (
    CometForecaster,
    KnnConfig,
    KnnForecaster,
    LstmConfig,
    LstmForecaster,
    MlpConfig,
    MlpForecaster,
    PersistenceForecaster,
    knn_predict,
    lstm_forward,
    mlp_forward,
    rollout_forecaster,
    supervised_windows,
)
from src.baselines.knn import KnnStore, fit_knn_store
from src.baselines.lstm import lstm_layout
from src.baselines.mlp import mlp_layout
from src.core.comet import parameter_count
from src.core.errors import InsufficientHistoryError, MemoryTooSmallError
from src.core.series import TimeSeries, WindowSpec
from src.training import TrainConfig
from src.training.gradcheck import check_lstm_gradient, check_mlp_gradient


def test_supervised_windows_targets_are_next_increments():
    values = np.array([1.0, 2.0, 4.0, 7.0, 11.0])
    windows, increments = supervised_windows(values, 2)
    np.testing.assert_array_equal(windows, [[1, 2], [2, 4], [4, 7]])
    np.testing.assert_array_equal(increments, [2, 3, 4])
    with pytest.raises(InsufficientHistoryError):
        supervised_windows(values, 5)


def test_knn_on_constant_store_predicts_last_value():
    config = KnnConfig(window_len=4, k=3)
    store = fit_knn_store(np.full(50, 2.0), config)
    assert knn_predict(np.array([0.1, 0.4, -0.3, 0.9, 1.7]), store, config) == 1.7


def test_knn_exact_match_with_one_neighbour():
    values = np.random.default_rng(0).normal(size=80).cumsum()
    config = KnnConfig(window_len=6, k=1)
    store = fit_knn_store(values, config)
    history = values[:31]
    assert knn_predict(history, store, config) == pytest.approx(values[31], abs=1e-12)


def test_knn_matches_brute_force_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        count = int(rng.integers(1, 101))
        length = int(rng.integers(1, 13))
        k = int(rng.integers(1, count + 1))
        store = KnnStore(rng.normal(size=(count, length)), rng.normal(size=count))
        config = KnnConfig(window_len=length, k=k)
        history = rng.normal(size=length + int(rng.integers(0, 10)))
        query = history[-length:]
        distances = [(float(np.sum(np.abs(store.windows[i] - query))), i) for i in range(count)]
        nearest = [i for _, i in sorted(distances)[:k]]
        expected = history[-1] + np.mean(store.increments[nearest])
        assert knn_predict(history, store, config) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_knn_errors():
    config = KnnConfig(window_len=4, k=10)
    store = fit_knn_store(np.arange(8.0), config)
    with pytest.raises(MemoryTooSmallError):
        knn_predict(np.arange(8.0), store, config)
    with pytest.raises(InsufficientHistoryError):
        knn_predict(np.arange(3.0), store, KnnConfig(window_len=4, k=1))


def test_knn_footprint():
    model = KnnForecaster(KnnConfig(window_len=24, k=8)).fit(TimeSeries(np.arange(100.0)), verbose=False)
    assert model.parameter_bytes() == 0
    assert model.memory_bytes() == 76 * 25 * 4
    assert model.step_bound() == 1.0


def test_mlp_and_lstm_parameter_counts():
    assert mlp_layout(24, (64, 64)).size == 5825
    assert MlpForecaster().parameter_bytes() == 5825 * 4
    assert lstm_layout(32).size == 4385
    assert LstmForecaster().parameter_bytes() == 4385 * 4


def test_zero_weight_mlp_outputs_bias():
    layout = mlp_layout(4, (3, 2))
    theta, views = layout.zeros()
    views["b2"][0] = 0.75
    np.testing.assert_array_equal(mlp_forward(theta, np.random.default_rng(2).normal(size=(5, 4)), layout),
                                  np.full(5, 0.75))


def test_zero_lstm_outputs_readout_bias():
    layout = lstm_layout(3)
    theta, views = layout.zeros()
    views["b_out"][0] = -0.4
    outputs, h_last, _ = lstm_forward(theta, np.random.default_rng(3).normal(size=(4, 6)), layout,
                                      keep_cache=True)
    np.testing.assert_array_equal(h_last, np.zeros((4, 3)))
    np.testing.assert_array_equal(outputs, np.full(4, -0.4))


@pytest.mark.parametrize("seed", range(20))
def test_neural_gradients_match_finite_differences(seed):
    assert check_mlp_gradient(seed) <= 1e-4
    assert check_lstm_gradient(seed) <= 1e-4


def test_batch_prediction_matches_single(generated_series):
    train = TimeSeries(generated_series.values[:300])
    histories = np.stack([generated_series.values[s:s + 30] for s in (300, 350, 400)])
    models = [
        KnnForecaster(KnnConfig(window_len=10, k=4)),
        MlpForecaster(MlpConfig(input_len=10, hidden=(8,), epochs=1)),
        LstmForecaster(LstmConfig(hidden_size=4, sequence_len=10, epochs=1)),
        PersistenceForecaster(),
    ]
    for model in models:
        model.fit(train, verbose=False)
        batch = model.predict_batch(histories)
        single = [model.predict_next(row) for row in histories]
        np.testing.assert_allclose(batch, single, rtol=1e-12, atol=1e-12)


def test_rollout_forecaster_feeds_back_predictions(generated_series):
    model = MlpForecaster(MlpConfig(input_len=6, hidden=(5,), epochs=1))
    model.fit(TimeSeries(generated_series.values[:200]), verbose=False)
    seed = generated_series.values[200:220]
    predictions = rollout_forecaster(model, seed, 4)
    assert predictions.shape == (4,)
    extended = np.concatenate([seed, predictions[:3]])
    assert predictions[3] == pytest.approx(model.predict_next(extended), rel=1e-12)

    batch = rollout_forecaster(model, np.stack([seed, seed]), 4)
    assert batch.shape == (2, 4)
    np.testing.assert_allclose(batch[1], predictions, rtol=1e-12)


def test_persistence_rollout_is_flat():
    predictions = rollout_forecaster(PersistenceForecaster(), np.array([1.0, 2.0, 3.0]), 5)
    np.testing.assert_array_equal(predictions, np.full(5, 3.0))


def test_unfitted_models_refuse_to_predict():
    for model in (KnnForecaster(), MlpForecaster(), LstmForecaster(), CometForecaster()):
        with pytest.raises(ValueError, match="not fitted"):
            model.predict_next(np.zeros(100))


def test_neural_training_is_seed_deterministic(generated_series):
    train = TimeSeries(generated_series.values[:200])
    config = LstmConfig(hidden_size=3, sequence_len=8, epochs=1, seed=4)
    first = LstmForecaster(config).fit(train, verbose=False)
    second = LstmForecaster(config).fit(train, verbose=False)
    assert np.array_equal(first.theta, second.theta)
    other = LstmForecaster(LstmConfig(hidden_size=3, sequence_len=8, epochs=1, seed=5)).fit(train, verbose=False)
    assert not np.array_equal(first.theta, other.theta)


def test_comet_forecaster_wraps_training(generated_series):
    spec = WindowSpec(3, 5, 8)
    model = CometForecaster(spec, TrainConfig(epochs=1), latent_dim=2, k=3)
    model.fit(TimeSeries(generated_series.values[:200]),
              TimeSeries(generated_series.values[200:260]), verbose=False)
    assert model.report.best_epoch == 1
    footprint = parameter_count(model.model)
    assert model.parameter_bytes() == footprint.param_bytes
    assert model.memory_bytes() == footprint.memory_bytes
    assert model.min_history == 8

    history = generated_series.values[260:300]
    prediction = model.predict_next(history)
    assert abs(prediction - history[-1]) <= model.step_bound()

    again = CometForecaster.from_model(model.model)
    assert again.predict_next(history) == prediction
