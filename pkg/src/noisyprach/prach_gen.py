"""Synthetic PRACH detection candidates.

Each record is one correlation candidate at the receiver: a window of
``zc_length`` complex baseband samples is correlated against a Zadoff-Chu
replica and four features are read off the correlation profile. Peak records
carry a cyclically delayed preamble (delay below ``ncs``) in AWGN, FalsePeak
records carry noise only.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import gcd, log, sqrt

import numpy as np

from .data import FALSE_PEAK, PEAK, Dataset, mean_normalize, round_half_up


class ConfigError(ValueError):
    """Invalid generator / experiment parameters."""


@dataclass(frozen=True, eq=False)
class ZcSequence:
    root: int
    length: int
    samples: np.ndarray


def generate_zc(root: int, length: int) -> ZcSequence:
    """Zadoff-Chu sequence ``exp(-j*pi*u*n*(n+1)/N)`` for odd ``N``."""
    if int(length) != length or length < 3 or length % 2 == 0:
        raise ValueError(f"ZC length must be an odd integer >= 3, got {length}")
    if int(root) != root or not 1 <= root < length:
        raise ValueError(f"ZC root must satisfy 1 <= root < length, got {root}")
    if gcd(int(root), int(length)) != 1:
        raise ValueError(f"root {root} is not coprime with length {length}")
    n = np.arange(length, dtype=np.float64)
    # reduce the phase modulo 2N before scaling to keep it small and exact
    phase_num = np.mod(root * n * (n + 1), 2 * length)
    samples = np.exp(-1j * np.pi * phase_num / length)
    samples.setflags(write=False)
    return ZcSequence(int(root), int(length), samples)


@dataclass(frozen=True)
class GenConfig:
    """Generator parameters.

    ``snr_db``, ``ncs`` and ``n_sequences`` default to the collection setup
    (10 dB, Ncs 13, 1000 sequences). ``snr_db`` is the mean per-sample SNR of
    a preamble; each device's SNR is spread uniformly over
    ``snr_db +/- snr_spread_db`` to mimic differing path loss, and each
    record's noise floor rises by a uniform ``[0, interference_db]`` dB
    (other-cell interference; the signal level does not move). The detection
    threshold is ``threshold_scale * sqrt(floor variance)``; when
    ``threshold_scale`` is ``None`` it is set from ``false_alarm`` so that a
    noise-only window crosses it with that probability.
    """

    n_records: int = 10_000
    peak_fraction: float = 0.08
    snr_db: float = 10.0
    ncs: int = 13
    n_sequences: int = 1000
    seed: int = 0
    zc_length: int = 139
    snr_spread_db: float = 12.0
    interference_db: float = 7.0
    false_alarm: float = 1e-3
    threshold_scale: float | None = None

    def __post_init__(self):
        if int(self.n_records) != self.n_records or self.n_records < 2:
            raise ConfigError("n_records must be an integer >= 2")
        if not 0.0 < self.peak_fraction < 1.0:
            raise ConfigError("peak_fraction must lie in (0, 1)")
        if self.zc_length < 3 or self.zc_length % 2 == 0:
            raise ConfigError("zc_length must be odd and >= 3")
        if not 1 <= self.ncs <= self.zc_length // 2:
            raise ConfigError("ncs must be in [1, zc_length // 2]")
        if self.n_sequences < 1:
            raise ConfigError("n_sequences must be positive")
        if self.snr_spread_db < 0:
            raise ConfigError("snr_spread_db must be nonnegative")
        if self.interference_db < 0:
            raise ConfigError("interference_db must be nonnegative")
        if not 0.0 < self.false_alarm < 1.0:
            raise ConfigError("false_alarm must lie in (0, 1)")
        if self.threshold_scale is not None and self.threshold_scale <= 0:
            raise ConfigError("threshold_scale must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n_peaks(self) -> int:
        return round_half_up(self.n_records * self.peak_fraction)

    @property
    def resolved_threshold_scale(self) -> float:
        if self.threshold_scale is not None:
            return float(self.threshold_scale)
        # noise-only |corr|^2 / floor is ~Exp(1) per lag; max over ncs lags
        return sqrt(log(self.ncs / self.false_alarm))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "GenConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown generator fields: {sorted(unknown)}")
        return cls(**d)


def _root_for(config: GenConfig, index: int) -> int:
    # sequences cycle through the coprime roots of the ZC length
    roots = _valid_roots(config.zc_length)
    return roots[(index % config.n_sequences) % len(roots)]


_ROOT_CACHE: dict[int, list[int]] = {}


def _valid_roots(length: int) -> list[int]:
    if length not in _ROOT_CACHE:
        _ROOT_CACHE[length] = [u for u in range(1, length) if gcd(u, length) == 1]
    return _ROOT_CACHE[length]


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Per-record stream derived from (seed, record index)."""
    return np.random.default_rng([int(seed), int(index)])


def _received_window(config: GenConfig, zc: np.ndarray, is_peak: bool, rng) -> np.ndarray:
    n = config.zc_length
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / sqrt(2.0)
    snr_db = config.snr_db + rng.uniform(-config.snr_spread_db, config.snr_spread_db)
    noise = noise * 10.0 ** (rng.uniform(0.0, config.interference_db) / 20.0)
    delay = int(rng.integers(0, config.ncs))
    if not is_peak:
        return noise
    gain = 10.0 ** (snr_db / 20.0)
    return gain * np.roll(zc, delay) + noise


def _features(config: GenConfig, zc: np.ndarray, window: np.ndarray) -> np.ndarray:
    n = config.zc_length
    # circular cross-correlation with the replica, normalised by N
    corr = np.fft.ifft(np.fft.fft(window) * np.conj(np.fft.fft(zc)))
    mag2 = np.abs(corr) ** 2
    amplitude = sqrt(mag2[: config.ncs].max())
    floor = mag2[config.ncs:].mean()
    threshold = config.resolved_threshold_scale * sqrt(floor)
    snr = 10.0 * np.log10(amplitude**2 / floor)
    return np.array([amplitude / sqrt(n), floor / n, threshold / sqrt(n), snr])


def simulate_candidate(config: GenConfig, is_peak: bool, rng: np.random.Generator):
    """One raw (unnormalised) feature row ``[amplitude, variance, threshold, snr]``.

    The label of the record is ``is_peak`` regardless of whether the
    amplitude clears the threshold.
    """
    zc = generate_zc(_root_for(config, int(rng.integers(0, config.n_sequences))),
                     config.zc_length).samples
    window = _received_window(config, zc, bool(is_peak), rng)
    return _features(config, zc, window), (PEAK if is_peak else FALSE_PEAK)


def peak_indices(config: GenConfig) -> np.ndarray:
    rng = np.random.default_rng([int(config.seed), 2**32])
    return np.sort(rng.permutation(config.n_records)[: config.n_peaks])


def generate_raw(config: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised features and labels in generation order."""
    labels = np.full(config.n_records, FALSE_PEAK, dtype=np.int8)
    labels[peak_indices(config)] = PEAK
    n = config.zc_length
    zc_cache: dict[int, np.ndarray] = {}
    windows = np.empty((config.n_records, n), dtype=np.complex128)
    replicas = np.empty((config.n_records, n), dtype=np.complex128)
    for i in range(config.n_records):
        rng = record_rng(config.seed, i)
        root = _root_for(config, int(rng.integers(0, config.n_sequences)))
        if root not in zc_cache:
            zc_cache[root] = generate_zc(root, n).samples
        zc = zc_cache[root]
        replicas[i] = zc
        windows[i] = _received_window(config, zc, labels[i] == PEAK, rng)
    # batched version of _features
    corr = np.fft.ifft(np.fft.fft(windows, axis=1) * np.conj(np.fft.fft(replicas, axis=1)), axis=1)
    mag2 = np.abs(corr) ** 2
    amplitude = np.sqrt(mag2[:, : config.ncs].max(axis=1))
    floor = mag2[:, config.ncs:].mean(axis=1)
    threshold = config.resolved_threshold_scale * np.sqrt(floor)
    snr = 10.0 * np.log10(amplitude**2 / floor)
    feats = np.column_stack([amplitude / sqrt(n), floor / n, threshold / sqrt(n), snr])
    return feats, labels


def generate_dataset(config: GenConfig) -> Dataset:
    """Mean-normalised synthetic dataset; a pure function of ``config``."""
    feats, labels = generate_raw(config)
    meta = {"generator": config.to_dict(), "normalization": "mean", "noise": None}
    return Dataset(mean_normalize(feats), labels, meta)
