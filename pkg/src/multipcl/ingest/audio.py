"""MFCC features from a mono waveform."""

import numpy as np
import numpy.typing as npt
import torch
import torchaudio.functional as AF

from multipcl.errors import DomainError

# log(max(energy, LOG_FLOOR)); keeps silent frames finite
LOG_FLOOR = 1e-10


def frame_geometry(sample_rate: int, window_ms: float, hop_ms: float) -> tuple[int, int]:
    """Window and hop length in samples."""
    win = int(round(sample_rate * window_ms / 1000.0))
    hop = int(round(sample_rate * hop_ms / 1000.0))
    if win < 1 or hop < 1:
        raise DomainError(f"window ({win}) and hop ({hop}) must span at least one sample")
    return win, hop


def frame_count(n_samples: int, win: int, hop: int) -> int:
    """Number of full windows: 1 + (N - win) // hop, or 0 if N < win."""
    if n_samples < win:
        return 0
    return 1 + (n_samples - win) // hop


def mfcc(
    waveform: npt.ArrayLike,
    sample_rate: int,
    n_coeff: int = 13,
    window_ms: float = 25.0,
    hop_ms: float = 10.0,
    *,
    n_mels: int = 40,
    pre_emphasis: float = 0.97,
) -> npt.NDArray[np.float64]:
    """Mel-frequency cepstral coefficients, one row per analysis window.

    Pipeline: pre-emphasis, Hamming-windowed frames without padding, power
    spectrum, HTK mel filterbank, log with a floor, orthonormal DCT-II.

    Args:
        waveform: Mono samples.
        sample_rate: Samples per second.
        n_coeff: Coefficients kept per frame.
        window_ms: Window length in milliseconds.
        hop_ms: Hop length in milliseconds.
        n_mels: Mel filterbank size (>= n_coeff).
        pre_emphasis: First-order pre-emphasis coefficient.

    Returns:
        Array of shape (l, n_coeff), l = 1 + (N - win) // hop.

    Raises:
        DomainError: If the waveform is shorter than one window or parameters are invalid.
    """
    if sample_rate <= 0:
        raise DomainError(f"sample_rate must be positive, got {sample_rate}")
    if not 0 < n_coeff <= n_mels:
        raise DomainError(f"n_coeff must be in [1, n_mels={n_mels}], got {n_coeff}")

    signal = torch.as_tensor(np.asarray(waveform, dtype=np.float64)).flatten()
    win, hop = frame_geometry(sample_rate, window_ms, hop_ms)
    if signal.numel() < win:
        raise DomainError(f"waveform has {signal.numel()} samples, shorter than one window ({win})")

    emphasized = torch.cat([signal[:1], signal[1:] - pre_emphasis * signal[:-1]])
    frames = emphasized.unfold(0, win, hop)

    n_fft = max(512, 1 << (win - 1).bit_length())
    window = torch.hamming_window(win, periodic=False, dtype=torch.float64)
    power = torch.fft.rfft(frames * window, n=n_fft).abs().pow(2) / n_fft

    fbanks = AF.melscale_fbanks(
        n_freqs=n_fft // 2 + 1,
        f_min=0.0,
        f_max=sample_rate / 2.0,
        n_mels=n_mels,
        sample_rate=sample_rate,
        mel_scale="htk",
    ).to(torch.float64)
    log_mel = torch.log(torch.clamp(power @ fbanks, min=LOG_FLOOR))

    dct = AF.create_dct(n_coeff, n_mels, norm="ortho").to(torch.float64)
    return (log_mel @ dct).numpy()
