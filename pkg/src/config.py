"""Configuration settings for the COMET project."""
from pathlib import Path

# Project root directory
PROJECT_ROOT = Path(__file__).parent.parent

# Data and output directories (created on demand by the CLI, never at import)
DATA_DIR = PROJECT_ROOT / "data"
OUTPUT_DIR = PROJECT_ROOT / "output"
BENCH_OUTPUT = OUTPUT_DIR / "bench"
EVAL_OUTPUT = OUTPUT_DIR / "eval"

# Model files
DEFAULT_MODEL_FILE = DATA_DIR / "comet_model.bin"
MODEL_MAGIC = b"CSG1"
MODEL_VERSION = 1

# Windows (short / medium / long)
DEFAULT_SHORT_LEN = 12
DEFAULT_MEDIUM_LEN = 24
DEFAULT_LONG_LEN = 60

# Splits
DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_VALIDATION_FRACTION = 0.1

# Model
DEFAULT_LATENT_DIM = 8
DEFAULT_K = 8
MIX_SOFTMAX = 0.7
MIX_UNIFORM = 0.3
BYTES_PER_PARAM = 4
# Largest |z| entry the behaviour state may reach before it is rescaled
STATE_LIMIT = 1e6

# Training
DEFAULT_EPOCHS = 20
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_HUBER_DELTA = 1.0
DEFAULT_BATCH_SIZE = 32
DEFAULT_SEED = 0
GRADCHECK_SEEDS = tuple(range(20))

# Baselines
DEFAULT_KNN_WINDOW = 24
DEFAULT_KNN_K = 8
DEFAULT_MLP_INPUT = 24
DEFAULT_MLP_HIDDEN = (64, 64)
DEFAULT_LSTM_HIDDEN = 32
DEFAULT_LSTM_SEQUENCE = 60

# Data generation
DEFAULT_GEN_LENGTH = 5000
DEFAULT_REGIME_DURATION = 400
DEFAULT_DRIFT_RANGE = (-0.002, 0.002)
DEFAULT_VOLATILITY_RANGE = (0.005, 0.02)
DEFAULT_MEAN_REVERSION = 0.05
DEFAULT_CYCLE_AMPLITUDE = 0.01
DEFAULT_CYCLE_PERIOD = 150
DEFAULT_ANCHOR_SPREAD = 0.05
DEFAULT_START_VALUE = 1.0

# Evaluation
DEFAULT_SHORT_HORIZONS = (1, 5)
DEFAULT_DRIFT_HORIZONS = (1,) + tuple(range(10, 201, 10))
DEFAULT_ROLLOUT_HORIZON = 300
DEFAULT_ANCHOR_STRIDE = 10
DEFAULT_SEEDS = (0, 1, 2, 3)
BENCH_MODELS = ("knn", "mlp", "lstm", "comet")

# Qualitative bench limits
COMET_DRIFT_RATIO_LIMIT = 3.0        # drift(200) / drift(10), every seed
COMET_MAE1_RATIO_LIMIT = 2.5         # one-step MAE against the best baseline
BASELINE_DRIFT_RATIO_MIN = 3.0       # drift(200) / drift(20) of an unstable baseline

# Output formatting
CSV_FLOAT_FORMAT = "%.9g"
