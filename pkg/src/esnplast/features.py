"""Dyadic wavelet decomposition and band-power feature vectors.

Channel signals are decomposed with a 10-tap Daubechies filter pair
(5 vanishing moments) under periodic boundary extension, so coefficient
counts halve exactly per level and the transform is orthogonal: total
coefficient energy equals signal energy. Band powers are taken from four
detail levels; the finest detail level (treated as noise) and the final
approximation (delta band, removed by the standard EEG band-pass) are
excluded.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "DB5_DEC_LO",
    "DB5_DEC_HI",
    "filter_identity_residuals",
    "dwt_decompose",
    "PowerKind",
    "band_power",
    "Band",
    "BandTable",
    "DEFAULT_BAND_TABLE",
    "extract_trial_features",
]

# Daubechies 5-vanishing-moment analysis pair, derived by spectral
# factorization of the degree-4 half-band polynomial (roots inside the unit
# circle retained, i.e. the extremal-phase filter). Identities that pin these
# values down: sum = sqrt(2), unit norm, double-shift orthogonality, and five
# vanishing moments of the high-pass; see filter_identity_residuals().
DB5_DEC_LO = np.array([
    0.16010239797419293,
    0.6038292697971895,
    0.7243085284377714,
    0.13842814590131747,
    -0.24229488706638586,
    -0.032244869584640935,
    0.07757149384004461,
    -0.006241490212798612,
    -0.01258075199908206,
    0.003335725285473771,
])

# Quadrature mirror: g[k] = (-1)^k * h[L-1-k].
DB5_DEC_HI = ((-1.0) ** np.arange(DB5_DEC_LO.size)) * DB5_DEC_LO[::-1]


def filter_identity_residuals() -> dict:
    """Residuals of the identities the embedded filter pair must satisfy."""
    h = DB5_DEC_LO
    shifts = {
        f"double_shift_{m}": float(np.abs(np.sum(h[: h.size - 2 * m] * h[2 * m:])))
        for m in range(1, h.size // 2)
    }
    return {
        "sum_minus_sqrt2": float(abs(h.sum() - np.sqrt(2.0))),
        "norm_minus_one": float(abs(np.sum(h * h) - 1.0)),
        "highpass_sum": float(abs(DB5_DEC_HI.sum())),
        **shifts,
    }


def _analysis_step(signal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One periodized filter-bank level: (approximation, detail), each half length."""
    n = signal.size
    taps = DB5_DEC_LO.size
    extended = np.concatenate([signal, signal[: taps - 1]])
    if extended.size < taps:  # signal shorter than the filter: wrap more
        reps = int(np.ceil(taps / n)) + 1
        extended = np.concatenate([np.tile(signal, reps), signal[: taps - 1]])[: n + taps - 1]
    windows = np.lib.stride_tricks.sliding_window_view(extended, taps)[:n:2]
    return windows @ DB5_DEC_LO, windows @ DB5_DEC_HI


def dwt_decompose(signal: np.ndarray, levels: int = 5) -> list[np.ndarray]:
    """Multilevel periodized wavelet decomposition of a 1-D signal.

    Returns coefficient vectors ordered finest detail first:
    [D1, D2, ..., D_levels, A_levels]. Lengths halve per level. Signals
    whose length is not divisible by 2**levels are right-padded
    periodically (repeating the signal from its start) before decomposing.
    """
    signal = np.asarray(signal, dtype=float).ravel()
    if levels < 1:
        raise ConfigError(f"levels must be positive, got {levels}")
    block = 2 ** levels
    if signal.size < block:
        raise DataError(
            f"signal length {signal.size} is shorter than 2^levels = {block}"
        )
    if signal.size % block != 0:
        padded_len = ((signal.size + block - 1) // block) * block
        reps = int(np.ceil(padded_len / signal.size))
        signal = np.tile(signal, reps)[:padded_len]
    details = []
    approx = signal
    for _ in range(levels):
        approx, detail = _analysis_step(approx)
        details.append(detail)
    details.append(approx)
    return details


class PowerKind(str, Enum):
    """How coefficient vectors collapse to one scalar per band."""

    MEAN_SQUARE = "mean_square"
    SUM_SQUARE = "sum_square"
    LOG_MEAN_SQUARE = "log_mean_square"


def band_power(coefficients: np.ndarray, kind: PowerKind = PowerKind.MEAN_SQUARE) -> float:
    """Power of one coefficient vector.

    Mean-square is the default: unlike a straight sum it is comparable
    across levels whose coefficient counts differ. The log variant adds a
    small floor so silent bands stay finite.
    """
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    if coefficients.size == 0:
        raise ConfigError("cannot take the power of an empty coefficient vector")
    ms = float(np.mean(coefficients * coefficients))
    if kind == PowerKind.MEAN_SQUARE:
        return ms
    if kind == PowerKind.SUM_SQUARE:
        return ms * coefficients.size
    return float(np.log(ms + 1e-30))


@dataclass(frozen=True)
class Band:
    """One frequency band and the decomposition level that carries it."""

    name: str
    low_hz: float
    high_hz: float
    level: int  # 1-based detail level (D<level>)

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.low_hz + self.high_hz)


@dataclass(frozen=True)
class BandTable:
    """Ordered set of bands included in the feature vector."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        levels = [b.level for b in self.bands]
        if len(set(levels)) != len(levels):
            raise ConfigError("band decomposition levels must be distinct")
        if not self.bands:
            raise ConfigError("band table must contain at least one band")

    def __len__(self) -> int:
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)

    @property
    def max_level(self) -> int:
        return max(b.level for b in self.bands)


# Included bands, ordered high to low frequency. D1 (the top half-band,
# dominated by acquisition noise) and the A5 approximation (delta band,
# removed by the usual 4-45 Hz preprocessing band-pass) are left out.
# The Hz edges are nominal for a 256 Hz Nyquist ladder (D1 = 64-128 Hz).
DEFAULT_BAND_TABLE = BandTable(bands=(
    Band("gamma", 32.0, 64.0, level=2),
    Band("beta", 16.0, 32.0, level=3),
    Band("alpha", 8.0, 16.0, level=4),
    Band("theta", 4.0, 8.0, level=5),
))


def extract_trial_features(
    signals: np.ndarray,
    bands: BandTable = DEFAULT_BAND_TABLE,
    levels: int = 5,
    kind: PowerKind = PowerKind.MEAN_SQUARE,
) -> np.ndarray:
    """Band-power feature vector for one trial.

    ``signals`` is (channels, samples). Each channel is decomposed to
    ``levels`` levels and one power per included band is kept; features are
    concatenated channel-major (all bands of channel 0, then channel 1, ...)
    giving a vector of length len(bands) * channels.
    """
    signals = np.asarray(signals, dtype=float)
    if signals.ndim != 2 or signals.shape[0] == 0:
        raise ConfigError(f"expected a (channels, samples) matrix, got {signals.shape}")
    if bands.max_level > levels:
        raise ConfigError(
            f"band table needs level {bands.max_level} but only {levels} are decomposed"
        )
    out = np.empty(len(bands) * signals.shape[0])
    pos = 0
    for channel in signals:
        coeffs = dwt_decompose(channel, levels=levels)
        for band in bands:
            out[pos] = band_power(coeffs[band.level - 1], kind=kind)
            pos += 1
    return out
