"""Baseband waveforms, the signal seen by a target, and ambiguity functions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_model import ArrayGeometry, DomainError, steering
from .link_metrics import Precoder


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=complex).ravel()
        if x.size == 0:
            raise DomainError("waveform must have at least one sample")
        if not self.sample_rate > 0:
            raise DomainError("sample rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    def normalized(self) -> "SampledWaveform":
        nrm = np.linalg.norm(self.samples)
        if nrm == 0:
            raise DomainError("cannot normalize an all-zero waveform")
        return SampledWaveform(self.samples / nrm, self.sample_rate)


@dataclass(frozen=True)
class CommSignalingSpec:
    constellation: str = "QPSK"
    pulse_len: int = 7
    rolloff: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.constellation.upper() != "QPSK":
            raise DomainError(f"unsupported constellation {self.constellation!r}")
        if int(self.pulse_len) != self.pulse_len or self.pulse_len < 1:
            raise DomainError("pulse_len must be a positive integer")
        if not 0 < self.rolloff <= 1:
            raise DomainError("rolloff must lie in (0, 1]")


QPSK_POINTS = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


def lfm_chirp(duration_s: float, f_start_hz: float, f_end_hz: float,
              sample_rate_hz: float) -> SampledWaveform:
    """Unit-norm linear FM sweep with ``floor(duration * rate) + 1`` samples."""
    if not (duration_s > 0 and sample_rate_hz > 0):
        raise DomainError("chirp duration and sample rate must be positive")
    n = int(np.floor(duration_s * sample_rate_hz + 1e-9)) + 1
    t = np.arange(n) / sample_rate_hz
    k = (f_end_hz - f_start_hz) / duration_s
    x = np.exp(2j * np.pi * (f_start_hz * t + 0.5 * k * t ** 2))
    return SampledWaveform(x / np.linalg.norm(x), sample_rate_hz)


def rrc_taps(times, rolloff: float) -> np.ndarray:
    """Root-raised-cosine impulse response at times in symbol periods."""
    if not 0 < rolloff <= 1:
        raise DomainError("rolloff must lie in (0, 1]")
    t = np.asarray(times, dtype=float)
    b = rolloff
    h = np.empty_like(t)
    at0 = np.isclose(t, 0.0, atol=1e-12)
    atq = np.isclose(np.abs(t), 1.0 / (4 * b), atol=1e-12)
    reg = ~(at0 | atq)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))) / \
        (np.pi * tr * (1 - (4 * b * tr) ** 2))
    h[at0] = 1 + b * (4 / np.pi - 1)
    h[atq] = b / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
                               + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b)))
    return h


def rrc_pulse(pulse_len: int, rolloff: float) -> SampledWaveform:
    """Unit-norm RRC pulse confined to one symbol interval.

    Samples sit at ``t/T in {-(L-1)/2, ..., (L-1)/2} / L`` so that consecutive
    symbol pulses never overlap. The returned sample rate is ``L`` samples per
    unit symbol period.
    """
    if int(pulse_len) != pulse_len or pulse_len < 1:
        raise DomainError("pulse_len must be a positive integer")
    t = (np.arange(pulse_len) - (pulse_len - 1) / 2) / pulse_len
    h = rrc_taps(t, rolloff)
    return SampledWaveform(h / np.linalg.norm(h), float(pulse_len))


def qpsk_stream(spec: CommSignalingSpec, num_samples: int, rng=None,
                sample_rate: float = 1.0) -> SampledWaveform:
    """Back-to-back QPSK symbols, each carried by one copy of the RRC pulse.

    Samples left over after the last whole symbol are zero. The pulse is
    scaled so the average power over the occupied span is one.
    """
    if num_samples < 1:
        raise DomainError("num_samples must be positive")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    L = spec.pulse_len
    nsym = num_samples // L
    pulse = rrc_pulse(L, spec.rolloff).samples * np.sqrt(L)
    symbols = QPSK_POINTS[rng.integers(0, 4, size=nsym)]
    x = np.zeros(num_samples, dtype=complex)
    x[:nsym * L] = np.outer(symbols, pulse).ravel()
    return SampledWaveform(x, sample_rate)


def incident_waveform(W: Precoder, target_angle: float, radar, comm_streams: Sequence,
                      phase: float, geometry: ArrayGeometry) -> SampledWaveform:
    """Baseband signal arriving at ``target_angle`` (zero propagation delay).

    ``radar`` is one waveform or a sequence with one entry per radar column.
    Every stream is treated as unit power, so radar waveforms are rescaled to
    unit mean power per sample before precoding.
    """
    radar = [radar] if isinstance(radar, SampledWaveform) else list(radar)
    if W.W_r.shape[1] not in (len(radar), 0):
        raise DomainError(f"{W.W_r.shape[1]} radar columns but {len(radar)} radar waveforms")
    if len(comm_streams) != W.W_c.shape[1]:
        raise DomainError(f"{W.W_c.shape[1]} comm columns but {len(comm_streams)} streams")
    n = len(radar[0])
    fs = radar[0].sample_rate
    if any(len(s) != n for s in list(radar) + list(comm_streams)):
        raise DomainError("all streams must have the radar waveform length")
    a = steering(geometry, target_angle)
    x = np.zeros(n, dtype=complex)
    gains_r = a.conj() @ W.W_r
    for g, r in zip(gains_r, radar):
        x += g * r.samples * np.sqrt(n) / np.linalg.norm(r.samples)
    gains_c = a.conj() @ W.W_c
    for g, c in zip(gains_c, comm_streams):
        x += g * np.asarray(c.samples if isinstance(c, SampledWaveform) else c)
    return SampledWaveform(np.exp(1j * phase) * x, fs)


def ambiguity(x: SampledWaveform, delays, dopplers_hz) -> np.ndarray:
    """``|sum_n xh[n] conj(xh[n+d]) exp(j 2 pi n f / Fs)|`` for unit-norm ``xh``.

    Rows follow ``delays`` (samples), columns ``dopplers_hz``.
    """
    xh = x.normalized().samples
    N = xh.size
    delays = np.asarray(delays, dtype=int)
    if np.any(np.abs(delays) >= N):
        raise DomainError(f"delays must lie strictly within (-{N}, {N})")
    n = np.arange(N)
    E = np.exp(2j * np.pi * np.outer(n, np.asarray(dopplers_hz, dtype=float)) / x.sample_rate)
    out = np.empty((delays.size, E.shape[1]))
    for i, d in enumerate(delays):
        lo, hi = max(0, -d), min(N, N - d)
        prod = xh[lo:hi] * np.conj(xh[lo + d:hi + d])
        out[i] = np.abs(prod @ E[lo:hi])
    return out


def default_grid():
    """Delays of +-100 samples and Dopplers of +-200 kHz in 2 kHz steps."""
    delays = np.arange(-100, 101)
    dopplers = np.arange(-200e3, 200e3 + 1, 2e3)
    return delays, dopplers


def monte_carlo_ambiguity(W: Precoder, target_angle: float, radar, spec: CommSignalingSpec,
                          trials: int, delays, dopplers, geometry: ArrayGeometry) -> np.ndarray:
    """Mean of ``|X|^2`` over fresh comm symbols and a fresh carrier phase per trial."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    n = len(radar if isinstance(radar, SampledWaveform) else radar[0])
    fs = (radar if isinstance(radar, SampledWaveform) else radar[0]).sample_rate
    acc = np.zeros((len(delays), len(dopplers)))
    for child in np.random.SeedSequence(spec.seed).spawn(trials):
        rng = np.random.default_rng(child)
        streams = [qpsk_stream(spec, n, rng, fs) for _ in range(W.W_c.shape[1])]
        phase = rng.uniform(0.0, 2 * np.pi)
        x = incident_waveform(W, target_angle, radar, streams, phase, geometry)
        acc += ambiguity(x, delays, dopplers) ** 2
    return acc / trials


def chirp_similarity(avg_sq: np.ndarray, reference_sq: np.ndarray) -> float:
    """Normalized Frobenius distance to the reference; 0 means identical."""
    ref = np.asarray(reference_sq)
    return float(np.linalg.norm(np.asarray(avg_sq) - ref) / np.linalg.norm(ref))


def write_ambiguity_csv(path, matrix, delays, dopplers_hz) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delay_samples"] + [f"{f:.6g}" for f in dopplers_hz])
        for d, row in zip(delays, np.asarray(matrix)):
            w.writerow([int(d)] + [f"{v:.12e}" for v in row])
