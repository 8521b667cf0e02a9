"""Raw-waveform genre classifier and activation-maximizing audio modification."""

from .audio import AudioClip, PcmWave, clip_to_wave, resample_to_8k, segment, to_mono, wav_decode, wav_encode
from .checkpoint import checkpoint_load, checkpoint_save
from .dreamer import DreamConfig, DreamTrace, dream, dream_objective, dream_step
from .genre_net import GENRES, FULL_ARCH, Architecture, GenreNet, forward, init_parameters
from .layers import Mode
from .tensor import GradTape, Tensor, backward
from .trainer import EvalReport, TrainConfig, TrainState, evaluate, nesterov_step, train, train_epoch

__version__ = "0.1.0"
