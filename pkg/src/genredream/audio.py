"""WAV ingestion and emission, mono mixdown, 8 kHz decimation and clip segmentation."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    ContractError,
    NotRiffError,
    TruncatedWavError,
    UnsupportedBitDepthError,
    UnsupportedFormatError,
    UnsupportedRateError,
    WavDecodeError,
)

TARGET_RATE = 8000
CLIP_SECONDS = 5
CLIP_LENGTH = TARGET_RATE * CLIP_SECONDS  # 40,000 samples
FILTER_TAPS = 127
CUTOFF_HZ = 0.45 * TARGET_RATE
PEAK_TARGET = 0.95

INT16_MIN, INT16_MAX = -32768, 32767
PCM_FORMAT = 1


@dataclass(frozen=True, eq=False)
class PcmWave:
    """16-bit linear PCM audio; ``samples`` has shape ``[channels, frames]``."""

    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ContractError(f"samples must be [channels, frames], got shape {arr.shape}")
        if arr.size and (arr.min() < INT16_MIN or arr.max() > INT16_MAX):
            raise ContractError("sample values must lie in the 16-bit range")
        if int(self.sample_rate) < 1:
            raise ContractError(f"sample rate must be positive, got {self.sample_rate}")
        arr = arr.astype(np.int16)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def frames(self) -> int:
        return self.samples.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PcmWave):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    def __repr__(self) -> str:
        return f"PcmWave(rate={self.sample_rate}, channels={self.channels}, frames={self.frames})"


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Exactly ``CLIP_LENGTH`` float samples, nominally in [-1, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64).reshape(-1)
        if arr.shape != (CLIP_LENGTH,):
            raise ContractError(f"a clip holds exactly {CLIP_LENGTH} samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("clip samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)


def wav_decode(data: bytes) -> PcmWave:
    """Parse a RIFF/WAVE byte stream holding 16-bit PCM.

    Chunks other than ``fmt `` and ``data`` are skipped.
    """
    data = bytes(data)
    if len(data) < 12:
        raise TruncatedWavError(f"stream of {len(data)} bytes is too short for a RIFF header")
    if data[:4] != b"RIFF":
        raise NotRiffError(f"expected RIFF magic, got {data[:4]!r}")
    if data[8:12] != b"WAVE":
        raise NotRiffError(f"expected WAVE form type, got {data[8:12]!r}")

    pos = 12
    fmt = None
    while pos < len(data):
        if pos + 8 > len(data):
            raise TruncatedWavError(f"chunk header at byte {pos} is cut short")
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if body + size > len(data):
            raise TruncatedWavError(f"chunk {chunk_id!r} claims {size} bytes, {len(data) - body} remain")
        if chunk_id == b"fmt ":
            if size < 16:
                raise TruncatedWavError(f"fmt chunk has only {size} bytes")
            code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, body)
            if code != PCM_FORMAT:
                raise UnsupportedFormatError(f"audio format {code} is not linear PCM (1)")
            if bits != 16:
                raise UnsupportedBitDepthError(f"{bits}-bit samples are not supported, need 16")
            if channels < 1:
                raise WavDecodeError("fmt chunk declares zero channels")
            fmt = (channels, rate)
        elif chunk_id == b"data":
            if fmt is None:
                raise WavDecodeError("data chunk precedes fmt chunk")
            channels, rate = fmt
            if size % (2 * channels):
                raise TruncatedWavError(f"data chunk of {size} bytes ends mid-frame")
            pcm = np.frombuffer(data, dtype="<i2", count=size // 2, offset=body)
            return PcmWave(rate, pcm.reshape(-1, channels).T)
        pos = body + size + (size & 1)
    raise WavDecodeError("no data chunk found" if fmt else "no fmt chunk found")


def wav_encode(wave: PcmWave) -> bytes:
    """Canonical 44-byte-header RIFF/WAVE encoding."""
    channels, rate = wave.channels, wave.sample_rate
    payload = np.ascontiguousarray(wave.samples.T).astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        PCM_FORMAT,
        channels,
        rate,
        rate * channels * 2,
        channels * 2,
        16,
        b"data",
        len(payload),
    )
    return header + payload


def read_wav(path) -> PcmWave:
    with open(path, "rb") as fh:
        return wav_decode(fh.read())


def write_wav(path, wave: PcmWave) -> None:
    with open(path, "wb") as fh:
        fh.write(wav_encode(wave))


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _to_int16(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(x), INT16_MIN, INT16_MAX).astype(np.int16)


def to_mono(wave: PcmWave) -> PcmWave:
    """Average the channels, rounding half away from zero."""
    if wave.channels == 1:
        return wave
    n = wave.channels
    total = wave.samples.astype(np.int64).sum(axis=0)
    mean = np.sign(total) * ((2 * np.abs(total) + n) // (2 * n))
    return PcmWave(wave.sample_rate, np.clip(mean, INT16_MIN, INT16_MAX)[None, :])


def lowpass_taps(source_rate: int, taps: int = FILTER_TAPS, cutoff: float = CUTOFF_HZ) -> np.ndarray:
    """Hann-windowed sinc low-pass kernel with unit DC gain."""
    fc = cutoff / source_rate
    n = np.arange(taps) - (taps - 1) / 2
    h = 2 * fc * np.sinc(2 * fc * n) * np.hanning(taps)
    return h / h.sum()


def lowpass(x: np.ndarray, source_rate: int) -> np.ndarray:
    """Zero-phase anti-alias filtering of ``x`` with zero padding at both edges."""
    h = lowpass_taps(source_rate)
    return np.convolve(np.asarray(x, dtype=np.float64), h, mode="same")


def resample_to_8k(wave: PcmWave) -> PcmWave:
    """Low-pass filter and decimate a mono wave to 8 kHz by an integer factor."""
    if wave.channels != 1:
        raise ContractError("resampling expects a mono wave")
    rate = wave.sample_rate
    if rate == TARGET_RATE:
        return wave
    if rate < TARGET_RATE or rate % TARGET_RATE:
        raise UnsupportedRateError(f"{rate} Hz is not an integer multiple of {TARGET_RATE} Hz")
    factor = rate // TARGET_RATE
    x = wave.samples[0].astype(np.float64)
    n_out = x.size // factor
    if n_out == 0:
        return PcmWave(TARGET_RATE, np.zeros((1, 0), dtype=np.int16))
    h = lowpass_taps(rate)
    half = FILTER_TAPS // 2
    padded = np.concatenate([np.zeros(half), x, np.zeros(half)])
    # only the output samples that survive decimation are computed
    windows = sliding_window_view(padded, FILTER_TAPS)[::factor][:n_out]
    y = windows @ h[::-1]
    return PcmWave(TARGET_RATE, _to_int16(y)[None, :])


def segment(wave: PcmWave) -> list:
    """Split an 8 kHz mono wave into consecutive 40,000-sample clips, dropping the remainder."""
    if wave.channels != 1 or wave.sample_rate != TARGET_RATE:
        raise ContractError("segment expects an 8000 Hz mono wave")
    x = wave.samples[0].astype(np.float64) / 32768.0
    count = x.size // CLIP_LENGTH
    return [AudioClip(x[i * CLIP_LENGTH : (i + 1) * CLIP_LENGTH]) for i in range(count)]


def clip_to_wave(clip, peak_target: float = PEAK_TARGET) -> PcmWave:
    """Peak-normalize to ``peak_target`` of full scale and quantize to 16-bit at 8 kHz."""
    x = np.asarray(clip.samples if isinstance(clip, AudioClip) else clip, dtype=np.float64).reshape(-1)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak > 0:
        x = x * (peak_target / peak)
    return PcmWave(TARGET_RATE, _to_int16(x * INT16_MAX)[None, :])
