"""Self-interference cancellation budgets and a tapped-delay canceller.

Closed forms
------------
Post-cancellation SINR of a full-duplex receive chain:

    SINR = sigma_d^2 / (sigma_s^2 * alpha_a * alpha_d + sigma_e^2 + sigma_n^2)
    sigma_e^2 = PAPR * (sigma_s^2 * alpha_a + sigma_d^2 + sigma_n^2)
                * 10^(-6.02 * ENoB / 10)

where the quantization noise sees the signal left after analog cancellation
only.  Component-level cancellation bounds: a relative amplitude estimation
error eps caps cancellation at -20*log10|eps|; a timing error tau on a
bandwidth-B reference biases the estimated weight to sinc(B*tau), capping
cancellation at -20*log10(1 - sinc(B*tau)).

Simulation
----------
The tapped-delay canceller synthesizes brick-wall bandlimited Gaussian noise,
passes it through a sparse coupling channel, fits complex tap weights by
least squares (the steady-state point of LMS-family adaptation; an iterative
LMS mode is available for convergence studies) and reports the ratio of
received interference power to residual power.  A timing offset can be
applied to the reference used during weight estimation to reproduce the
sinc-bound scenario above.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class InfeasibleError(ValueError):
    """Requested operating point cannot be reached for any interference level."""


@dataclass(frozen=True)
class FdBudget:
    sigma_d2: float
    sigma_n2: float
    sigma_s2: float
    papr: float
    enob: float
    alpha_a: float
    alpha_d: float

    def __post_init__(self):
        for name in ("sigma_d2", "sigma_n2", "sigma_s2", "papr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("alpha_a", "alpha_d"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1]")


def _quant_factor(enob: float) -> float:
    return 10.0 ** (-6.02 * enob / 10.0)


def quantization_noise(b: FdBudget) -> float:
    """ADC quantization noise power after analog cancellation."""
    return b.papr * (b.sigma_s2 * b.alpha_a + b.sigma_d2 + b.sigma_n2) * _quant_factor(b.enob)


def sinr_after_cancellation(b: FdBudget) -> float:
    """Linear SINR once analog and digital cancellation have been applied."""
    denom = b.sigma_s2 * b.alpha_a * b.alpha_d + quantization_noise(b) + b.sigma_n2
    return b.sigma_d2 / denom


def required_passive_attenuation(b: FdBudget, tx_power: float, target_sinr: float) -> float:
    """Passive isolation (dB below tx_power) keeping SINR at or above target.

    The budget's sigma_s2 field is ignored; the largest admissible
    interference power is solved for in closed form (SINR is decreasing and
    linear in sigma_s2).  Raises InfeasibleError when even zero interference
    cannot reach the target.
    """
    if tx_power <= 0 or target_sinr <= 0:
        raise ValueError("tx_power and target_sinr must be positive")
    q = b.papr * _quant_factor(b.enob)
    ceiling = b.sigma_d2 / (q * (b.sigma_d2 + b.sigma_n2) + b.sigma_n2)
    numer = b.sigma_d2 / target_sinr - b.sigma_n2 - q * (b.sigma_d2 + b.sigma_n2)
    if target_sinr > ceiling or numer <= 0.0:
        raise InfeasibleError(
            f"target SINR {10 * math.log10(target_sinr):.2f} dB at or above the "
            f"zero-interference ceiling {10 * math.log10(ceiling):.2f} dB"
        )
    denom = b.alpha_a * b.alpha_d + q * b.alpha_a
    sigma_s2_max = numer / denom
    return 10.0 * math.log10(tx_power / sigma_s2_max)


def cancellation_from_amplitude_error(epsilon: float) -> float:
    """Cancellation bound (dB) from a relative amplitude estimation error."""
    if epsilon == 0.0:
        return math.inf
    return -20.0 * math.log10(abs(epsilon))


def _sinc(x: float, normalized: bool) -> float:
    if x == 0.0:
        return 1.0
    arg = math.pi * x if normalized else x
    return math.sin(arg) / arg


def cancellation_from_delay_error(bandwidth_hz: float, tau_s: float,
                                  normalized_sinc: bool = True) -> float:
    """Cancellation bound (dB) from a timing error on the reference copy."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    if tau_s < 0:
        raise ValueError("timing error must be nonnegative")
    if tau_s == 0.0:
        return math.inf
    s = _sinc(bandwidth_hz * tau_s, normalized_sinc)
    return -20.0 * math.log10(1.0 - s)


# ---------------------------------------------------------------------------
# Tapped-delay canceller simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CancellerConfig:
    tap_delays_s: tuple
    signal_bandwidth_hz: float
    sample_rate_hz: float
    training_len: int
    train_timing_error_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        delays = tuple(float(t) for t in self.tap_delays_s)
        object.__setattr__(self, "tap_delays_s", delays)
        if not delays:
            raise ValueError("need at least one tap")
        if any(t < 0 for t in delays) or list(delays) != sorted(delays):
            raise ValueError("tap delays must be nonnegative and sorted")
        if self.signal_bandwidth_hz <= 0 or self.sample_rate_hz < 2 * self.signal_bandwidth_hz:
            raise ValueError("need sample_rate_hz >= 2 * signal_bandwidth_hz")
        if self.training_len < len(delays) + 1:
            raise ValueError("training_len too short for the tap count")

    @property
    def num_taps(self) -> int:
        return len(self.tap_delays_s)


@dataclass(frozen=True)
class CancellerResult:
    achieved_db: float
    papr_db: float
    weights: np.ndarray
    input_power: float
    residual_power: float


def _bandlimited_noise(n: int, bandwidth_hz: float, fs: float, rng) -> np.ndarray:
    """Unit-power complex Gaussian noise with a brick-wall spectrum."""
    freqs = np.fft.fftfreq(n, d=1.0 / fs)
    mask = np.abs(freqs) <= bandwidth_hz / 2.0
    spec = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * mask
    x = np.fft.ifft(spec)
    return x / math.sqrt(float(np.mean(np.abs(x) ** 2)))


def _delay(x: np.ndarray, tau_s: float, fs: float) -> np.ndarray:
    """Exact (circular) fractional delay via a frequency-domain phase ramp."""
    if tau_s == 0.0:
        return x
    freqs = np.fft.fftfreq(x.size, d=1.0 / fs)
    return np.fft.ifft(np.fft.fft(x) * np.exp(-2j * np.pi * freqs * tau_s))


def simulate_analog_canceller(cfg: CancellerConfig, coupling_channel,
                              samples: int, method: str = "ls",
                              lms_step: float = 0.1) -> CancellerResult:
    """Achieved cancellation of a tapped-delay canceller against a coupling
    channel given as ((delay_s, complex_gain), ...) path pairs.

    Weights are fitted on the first training_len samples (least squares by
    default), then applied over the whole record; the timing error, when
    configured, offsets only the reference seen by the estimator.
    """
    if samples < cfg.training_len:
        raise ValueError("samples must cover the training span")
    paths = [(float(t), complex(g)) for t, g in coupling_channel]
    if not paths:
        raise ValueError("empty coupling channel")
    rng = np.random.default_rng(cfg.seed)
    fs = cfg.sample_rate_hz
    x = _bandlimited_noise(samples, cfg.signal_bandwidth_hz, fs, rng)
    papr_db = 10.0 * math.log10(
        float(np.max(np.abs(x) ** 2)) / float(np.mean(np.abs(x) ** 2))
    )

    rx = np.zeros(samples, dtype=complex)
    for tau, gain in paths:
        rx += gain * _delay(x, tau, fs)

    refs = np.column_stack([_delay(x, tau, fs) for tau in cfg.tap_delays_s])
    if cfg.train_timing_error_s:
        refs_train = np.column_stack(
            [_delay(x, tau + cfg.train_timing_error_s, fs) for tau in cfg.tap_delays_s]
        )
    else:
        refs_train = refs

    A = refs_train[: cfg.training_len]
    b = rx[: cfg.training_len]
    if method == "ls":
        w, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
        if rank < cfg.num_taps:
            warnings.warn("rank-deficient tap matrix: minimum-norm regularized solve",
                          stacklevel=2)
    elif method == "lms":
        w = np.zeros(cfg.num_taps, dtype=complex)
        norm = float(np.mean(np.abs(A) ** 2)) * cfg.num_taps
        for k in range(cfg.training_len):
            err = b[k] - A[k] @ w
            w = w + lms_step / norm * np.conj(A[k]) * err
    else:
        raise ValueError(f"unknown fit method {method!r}")

    residual = rx - refs @ w
    p_in = float(np.mean(np.abs(rx) ** 2))
    p_res = float(np.mean(np.abs(residual) ** 2))
    achieved = math.inf if p_res == 0.0 else 10.0 * math.log10(p_in / p_res)
    return CancellerResult(
        achieved_db=achieved,
        papr_db=papr_db,
        weights=w,
        input_power=p_in,
        residual_power=p_res,
    )
