import numpy as np
import pytest

from src.config import STATE_LIMIT
from src.core.comet import (
    bound_state,
    correction_term,
    init_model,
    parameter_count,
    predict_step,
    rollout,
)
from src.core.errors import (
    ConfigError,
    DimensionMismatchError,
    InsufficientHistoryError,
    TrainingDivergedError,
)
from src.core.models import (
    BehaviorEncoding,
    BehaviorState,
    CometModel,
    CorrectionParams,
    EncoderParams,
    RetrievalParams,
)
from src.core.memory import build_memory
from src.core.rng import SplitMix64
from src.core.series import TimeSeries, WindowSpec
from src.datagen import GenConfig, generate


def test_correction_examples():
    params = CorrectionParams(np.array([[1.0, 2.0, 3.0, 4.0]]))
    encoding = BehaviorEncoding([1.0], [1.0], [1.0])
    np.testing.assert_allclose(correction_term(BehaviorState([1.0]), encoding, params), [10.0])

    zero = CorrectionParams(np.zeros((2, 8)))
    enc2 = BehaviorEncoding([1.0, 2.0], [3.0, 4.0], [5.0, 6.0])
    np.testing.assert_array_equal(correction_term(BehaviorState([7.0, 8.0]), enc2, zero), np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        correction_term(BehaviorState([1.0]), enc2, zero)


def test_parameter_count_defaults():
    model = init_model(TimeSeries(np.full(2661, 1.0)), WindowSpec(), latent_dim=8, k=8)
    footprint = parameter_count(model)
    assert model.memory.count == 2600
    assert footprint.param_count == 1028
    assert footprint.param_bytes == 4112
    assert footprint.memory_bytes == 343200


def test_parameter_count_one_dimension():
    model = init_model(TimeSeries(np.full(100, 1.0)), WindowSpec(), latent_dim=1, k=2)
    assert parameter_count(model).param_count == 104


def test_constant_memory_predicts_last_value(constant_series, small_spec):
    model = init_model(constant_series, small_spec, latent_dim=3, k=4)
    history = np.random.default_rng(0).normal(size=40)
    x_next, _, diagnostics = predict_step(model, history, BehaviorState.zeros(3))
    assert diagnostics.dx_mem == 0.0
    assert x_next == history[-1]

    result = rollout(model, history, 100)
    np.testing.assert_array_equal(result.predictions.values, np.full(100, history[-1]))


def test_ramp_memory_continues_ramp(ramp_series, small_spec):
    model = init_model(ramp_series, small_spec, latent_dim=2, k=5)
    x_next, _, _ = predict_step(model, np.arange(200.0, 260.0), BehaviorState.zeros(2))
    assert x_next == 260.0

    result = rollout(model, np.arange(100.0), 10)
    np.testing.assert_allclose(result.predictions.values, np.arange(100.0, 110.0), atol=1e-9)


def test_single_neighbour_adds_that_increment(small_spec):
    values = np.concatenate([np.zeros(9), [0.5]])
    model = init_model(TimeSeries(values), small_spec, latent_dim=1, k=1)
    assert model.memory.count == 1
    x_next, _, _ = predict_step(model, np.full(12, 2.0), BehaviorState.zeros(1))
    assert x_next == 2.5


@pytest.mark.parametrize("seed", range(20))
def test_output_ignores_state_and_correction(tiny_model, generated_series, seed):
    rng = np.random.default_rng(seed)
    start = int(rng.integers(300, 700))
    history = generated_series.values[start:start + 60]
    baseline, _, _ = predict_step(tiny_model, history, BehaviorState.zeros(2))

    random_state = BehaviorState(rng.normal(scale=10.0, size=2))
    shifted, state, _ = predict_step(tiny_model, history, random_state)
    assert shifted == baseline

    rewired = CometModel(tiny_model.encoder, CorrectionParams(rng.normal(size=(2, 8))),
                         tiny_model.retrieval, tiny_model.memory, tiny_model.window_spec)
    other, other_state, _ = predict_step(rewired, history, random_state)
    assert other == baseline
    assert not np.array_equal(state.z, other_state.z)


def test_rollout_of_one_step_equals_predict_step(tiny_model, generated_series):
    history = generated_series.values[300:340]
    x_next, state, diagnostics = predict_step(tiny_model, history, BehaviorState.zeros(2))
    result = rollout(tiny_model, history, 1, trace_states=True)
    assert result.predictions.values[0] == x_next
    assert result.per_step_dx[0] == diagnostics.dx_mem
    np.testing.assert_array_equal(result.states[0], state.z)


def test_rollout_feeds_back_predictions(tiny_model, generated_series):
    history = generated_series.values[300:340]
    result = rollout(tiny_model, history, 5)
    extended = np.concatenate([history, result.predictions.values[:4]])
    x_fifth, _, _ = predict_step(tiny_model, extended, BehaviorState.zeros(2))
    assert result.predictions.values[4] == x_fifth


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_rollout_steps_are_bounded_by_memory(small_spec, seed):
    values = generate(GenConfig(seed=seed, length=800)).values
    model = init_model(TimeSeries(values[:300]), small_spec, latent_dim=2, k=3, rng=SplitMix64(seed))
    history = values[500:560]
    result = rollout(model, history, 300)
    bound = model.memory.max_abs_dx()

    steps = np.diff(np.concatenate([history[-1:], result.predictions.values]))
    assert np.all(np.abs(steps) <= bound + 1e-12)
    assert np.all(np.abs(result.per_step_dx) <= bound)

    horizons = np.arange(1, 301)
    deviation = np.abs(result.predictions.values - history[-1])
    assert np.all(deviation <= horizons * bound + 1e-9)


def test_rollout_is_deterministic(tiny_model, generated_series):
    history = generated_series.values[400:450]
    first = rollout(tiny_model, history, 50, trace_states=True)
    second = rollout(tiny_model, history, 50, trace_states=True)
    assert np.array_equal(first.predictions.values, second.predictions.values)
    assert np.array_equal(first.states, second.states)


def test_rollout_errors(tiny_model):
    with pytest.raises(ConfigError):
        rollout(tiny_model, np.zeros(20), 0)
    with pytest.raises(InsufficientHistoryError):
        rollout(tiny_model, np.zeros(7), 3)


def test_model_rejects_mismatched_parts(tiny_model):
    with pytest.raises(DimensionMismatchError):
        CometModel(tiny_model.encoder, CorrectionParams(np.zeros((3, 12))), RetrievalParams(k=3),
                   tiny_model.memory, tiny_model.window_spec)
    with pytest.raises(DimensionMismatchError):
        CometModel(tiny_model.encoder, tiny_model.correction, RetrievalParams(k=3),
                   tiny_model.memory, WindowSpec(3, 5, 9))


def test_init_model_is_seed_deterministic(generated_series, small_spec):
    train = TimeSeries(generated_series.values[:200])
    a = init_model(train, small_spec, latent_dim=2, k=3, rng=SplitMix64(9))
    b = init_model(train, small_spec, latent_dim=2, k=3, rng=SplitMix64(9))
    for x, y in zip(a.encoder.matrices(), b.encoder.matrices()):
        assert np.array_equal(x, y)
    assert np.array_equal(a.correction.weights, b.correction.weights)
    assert np.array_equal(a.memory.dx, b.memory.dx)
    assert a.retrieval.gamma == 1.0


def test_memory_built_with_custom_encoder_matches_model(small_spec, ramp_series):
    encoder = EncoderParams(np.ones((1, 3)), np.ones((1, 5)), np.ones((1, 8)))
    store = build_memory(ramp_series, encoder, small_spec)
    np.testing.assert_allclose(store.dz[:, 0], 3.0)


def test_bound_state_rescales_large_entries():
    np.testing.assert_array_equal(bound_state(np.array([0.5, -2.0])), [0.5, -2.0])
    np.testing.assert_allclose(bound_state(np.array([2.0e6, -1.0e6])), [1.0e6, -5.0e5])
    np.testing.assert_allclose(bound_state(np.array([4.0, 1.0]), limit=2.0), [2.0, 0.5])
    with pytest.raises(TrainingDivergedError):
        bound_state(np.array([1.0, np.inf]))


def _expanding(model):
    """Same model with W_f acting as the identity on the state block (z roughly doubles each step)."""
    dim = model.latent_dim
    weights = np.zeros((dim, 4 * dim))
    weights[:, :dim] = np.eye(dim)
    return CometModel(model.encoder, CorrectionParams(weights), model.retrieval,
                      model.memory, model.window_spec)


def test_long_rollout_keeps_state_finite(tiny_model, generated_series):
    history = generated_series.values[500:560]
    expanding = _expanding(tiny_model)
    result = rollout(expanding, history, 1500, trace_states=True)
    assert np.all(np.isfinite(result.states))
    assert np.max(np.abs(result.states)) <= STATE_LIMIT
    assert np.max(np.abs(result.states[-1])) == pytest.approx(STATE_LIMIT)

    reference = rollout(tiny_model, history, 1500)
    np.testing.assert_array_equal(result.predictions.values, reference.predictions.values)


def test_overflowing_state_raises_divergence(tiny_model, generated_series):
    history = generated_series.values[500:560]
    with pytest.raises(TrainingDivergedError) as excinfo:
        predict_step(_expanding(tiny_model), history, BehaviorState(np.full(2, 1e308)))
    assert excinfo.value.code == "numeric_divergence"
    assert excinfo.value.exit_code == 4


@pytest.mark.slow
def test_default_model_survives_very_long_rollout():
    values = generate(GenConfig(seed=0, length=1000)).values
    model = init_model(TimeSeries(values[:900]), WindowSpec(), rng=SplitMix64(0))
    result = rollout(model, values[900:], 25000, trace_states=True)
    assert np.all(np.isfinite(result.predictions.values))
    assert np.all(np.isfinite(result.states))
    assert np.max(np.abs(result.states)) <= STATE_LIMIT
