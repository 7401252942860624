"""tempolearn: how the temporal ordering of training data interacts with
leaky-memory networks — smoothness-controlled sampling schedules, leaky
hidden units with memory gating trained without backpropagation through
time, an LSTM baseline, and multi-timescale autoencoder analyses, all
deterministic and CSV-first.
"""
from .backend import available_backends, default_backend, get_kernels
from .config import ConfigError, load_config, run_config, validate_config
from .datasets import (Dataset, IdxFormatError, MultiScaleStream,
                       gen_low_overlap, gen_multiscale,
                       gen_non_overlapping_stream, load_idx, write_idx)
from .lstm import LstmSpec, LstmState, evaluate_lstm, init_lstm, lstm_step, train_lstm
from .metrics import (BootstrapSummary, SelectivityReport, bootstrap_mean_std,
                      ce_loss, memory_interference_scan, moving_average,
                      mse_loss, pearson_r, per_feature_error,
                      timescale_selectivity)
from .models import (ForwardTrace, ModelSpec, ModelState,
                     backward_leak_unaware, forward, init_state, input_gate,
                     label_gate, load_checkpoint, multiscale_autoencoder,
                     predict, reset_matrix, save_checkpoint)
from .numerics import Rng, relu, sigmoid, softmax, xavier_init
from .optim import GradientAccumulator, OptimizerState, rmsprop_step, sgd_step
from .presets import PRESET_IDS, PresetResult, preset_descriptions, run_preset
from .sampling import (SMOOTHNESS_PRESETS, Schedule, k_repetition_schedule,
                       random_schedule, shared_within_category_orders)
from .training import (EvalResult, TrainConfig, TrainCurve, evaluate,
                       train_incremental, train_minibatch)

__version__ = "0.1.0"
