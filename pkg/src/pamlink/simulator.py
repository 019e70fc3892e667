"""Time-domain Monte Carlo reference for the analytical model.

Synthesizes the M-PAM optical waveform, injects the power-dependent noise
sample by sample, propagates through the dispersive channel (true field
propagation or the small-signal shortcut), band-limits to the equalizer
rate, trains least-squares FFE/DFE taps, and measures unbiased MSE-based
SNR plus error-counted BER.

A run is fully determined by its configuration and seed: identical inputs
give bit-identical results.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps_signal
from scipy.linalg import LinAlgError, solve

from .params import (ELECTRON_CHARGE, SPEED_OF_LIGHT, ModulationSpec,
                     NoiseSpec, PhotodiodeSpec, level_powers, pam_alphabet,
                     symbol_variance)
from .spectra import FiberSpec, TransferFunction

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)

# Counted BER below this is dominated by the finite bit count and flagged.
BER_FLOOR_RELIABLE = 1e-5


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run geometry and equalizer settings."""

    samples_per_symbol: int = 8
    n_symbols: int = 250_000
    rng_seed: int = 1
    ffe_taps: int = 200
    dfe_feedback_taps: int = 30
    training_fraction: float = 0.5
    cd_mode: str = "field"  # "field" | "small-signal" | "off"
    full_training: bool = True  # known-symbol DFE feedback during evaluation
    tap_spacing: str = "half"  # "half" | "symbol"
    delay_span: Optional[int] = None  # +- tap-index search range; None = auto
    ridge_scale: float = 1e-8
    dump_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.samples_per_symbol < 4 or self.samples_per_symbol % 2:
            raise ValueError("samples_per_symbol must be an even integer >= 4")
        if self.n_symbols < 64:
            raise ValueError("n_symbols too small for meaningful statistics")
        if not 0.0 < self.training_fraction < 1.0:
            raise ValueError("training_fraction must lie in (0, 1)")
        if self.ffe_taps < 1:
            raise ValueError("need at least one feedforward tap")
        if self.dfe_feedback_taps < 0:
            raise ValueError("feedback tap count must be >= 0")
        if self.cd_mode not in ("field", "small-signal", "off"):
            raise ValueError(f"unknown cd_mode {self.cd_mode!r}")
        if self.tap_spacing not in ("half", "symbol"):
            raise ValueError(f"unknown tap_spacing {self.tap_spacing!r}")


@dataclass(frozen=True, eq=False)
class SimResult:
    """Measured post-equalizer performance of one Monte Carlo run."""

    snr_mse_db: float
    snr_mse: float
    mse: float
    ber_counted: float
    per_eye_ber: np.ndarray
    per_eye_errors: np.ndarray
    n_errors: int
    n_eval_bits: int
    n_eval_symbols: int
    ffe_taps: np.ndarray
    dfe_taps: np.ndarray
    bias: float
    delay: int
    clamp_fraction: float
    ber_floor_unreliable: bool
    warnings: Tuple[str, ...] = ()
    seed: int = 0


def synthesize_tx(mod: ModulationSpec, n_symbols: int, samples_per_symbol: int,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw a symbol sequence and build the rectangular-NRZ power waveform.

    Returns ``(symbol_indices, waveform)``; the waveform takes exactly the
    M ladder values and time-averages to the configured mean power.
    """
    powers = level_powers(mod)
    if np.any(powers < 0):
        raise ValueError("negative level power: ER/OMA configuration is inconsistent")
    idx = rng.integers(0, mod.m, size=n_symbols)
    waveform = np.repeat(powers[idx], samples_per_symbol)
    return idx, waveform


def add_rin(waveform: np.ndarray, noise: NoiseSpec, fs: float,
            rng: np.random.Generator) -> np.ndarray:
    """Add laser intensity noise with per-sample variance RIN * P(t)^2 * fs/2.

    The variance tracks the instantaneous power, which is exactly what the
    analytical model replaces by the mean-square power.
    """
    sigma = np.abs(waveform) * math.sqrt(0.5 * noise.rin_coeff * fs)
    return waveform + sigma * rng.standard_normal(len(waveform))


def _apply_response(x: np.ndarray, fs: float, tf: TransferFunction) -> np.ndarray:
    """Filter a real waveform by a response evaluated on the run's FFT grid."""
    n = len(x)
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(n, d=1.0 / fs)
    spec *= tf.at(f)
    return np.fft.irfft(spec, n=n)


def propagate(waveform: np.ndarray, fs: float, channel: TransferFunction,
              fiber: Optional[FiberSpec] = None,
              cd_mode: str = "off") -> Tuple[np.ndarray, float]:
    """Propagate the optical power waveform to the photodiode.

    ``field``: square-root to a chirpless field, apply the fiber's quadratic
    phase, square-law detect, then apply the electrical channel response.
    ``small-signal``: apply the cosine dispersion fading as a linear filter
    together with the channel. ``off``: channel response only. Returns the
    received power waveform and the fraction of samples clamped before the
    square root (nonzero only in field mode under extreme intensity noise).
    """
    dispersive = (fiber is not None and fiber.length > 0
                  and fiber.accumulated_dispersion != 0.0)
    if cd_mode == "field" and dispersive:
        neg = waveform < 0
        clamp_fraction = float(np.mean(neg))
        amplitude = np.sqrt(np.where(neg, 0.0, waveform))
        spec = np.fft.fft(amplitude)
        f = np.fft.fftfreq(len(amplitude), d=1.0 / fs)
        k = np.pi * SPEED_OF_LIGHT * fiber.accumulated_dispersion
        spec *= np.exp(1j * k * (f / fiber.carrier_frequency) ** 2)
        detected = np.abs(np.fft.ifft(spec)) ** 2
        return _apply_response(detected, fs, channel), clamp_fraction
    if cd_mode == "small-signal" and dispersive:
        n = len(waveform)
        spec = np.fft.rfft(waveform)
        f = np.fft.rfftfreq(n, d=1.0 / fs)
        k = np.pi * SPEED_OF_LIGHT * fiber.accumulated_dispersion
        spec *= channel.at(f) * np.cos(k * (f / fiber.carrier_frequency) ** 2)
        return np.fft.irfft(spec, n=n), 0.0
    return _apply_response(waveform, fs, channel), 0.0


def add_rx_noise(waveform: np.ndarray, pd: PhotodiodeSpec, noise: NoiseSpec,
                 fs: float, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """Detect and add receiver noise: i(t) = G R P(t) + shot + thermal.

    Shot noise uses the instantaneous received power (clamped at zero where
    filter undershoot drove it negative; the clamp fraction is returned).
    Per-sample variances: 2 G^2 F q R P(t) fs/2 and N0 fs/2.
    """
    clamp_fraction = float(np.mean(waveform < 0.0))
    p_shot = np.maximum(waveform, 0.0)
    sigma_shot = np.sqrt(ELECTRON_CHARGE * pd.gain ** 2 * pd.excess_noise
                         * pd.responsivity * fs * p_shot)
    current = pd.gain * pd.responsivity * waveform
    current = current + sigma_shot * rng.standard_normal(len(waveform))
    sigma_th = math.sqrt(0.5 * noise.thermal_n0 * fs)
    current = current + sigma_th * rng.standard_normal(len(waveform))
    return current, clamp_fraction


def to_equalizer_rate(current: np.ndarray, samples_per_symbol: int,
                      out_per_symbol: int, fs: float,
                      h_rx: Optional[TransferFunction] = None,
                      phase: int = 0) -> np.ndarray:
    """Band-limit to the equalizer Nyquist band and decimate.

    A brick-wall low-pass at out_per_symbol * Rs / 2 precedes the decimation
    so the retained samples keep the in-band noise density instead of
    folding the full receiver band on top of it.
    """
    step = samples_per_symbol // out_per_symbol
    if step * out_per_symbol != samples_per_symbol:
        raise ValueError("samples_per_symbol must be a multiple of the output rate")
    n = len(current)
    spec = np.fft.rfft(current)
    f = np.fft.rfftfreq(n, d=1.0 / fs)
    if h_rx is not None:
        spec *= h_rx.at(f)
    rs = fs / samples_per_symbol
    spec[f > 0.5 * out_per_symbol * rs] = 0.0
    filtered = np.fft.irfft(spec, n=n)
    return filtered[phase::step]


@dataclass(frozen=True, eq=False)
class EqualizerTaps:
    """Trained tap set: feedforward, symbol-spaced feedback, bias, alignment."""

    ffe: np.ndarray
    dfe: np.ndarray
    bias: float
    delay: int
    rate: int  # feedforward samples per symbol (2 = half-symbol spacing)
    phase: int  # full-rate decimation offset (symbol-spaced mode only)
    mse_train: float
    ridge_escalations: int = 0


def _window_rows(rx_eq: np.ndarray, n_symbols: int, rate: int, n_taps: int,
                 delay: int, lead: int) -> np.ndarray:
    """Rows of feedforward samples for every symbol, via a circular extension."""
    win = sliding_window_view(rx_eq, n_taps)
    start = lead + delay - n_taps // 2 + (rate // 2)
    idx = start + rate * np.arange(n_symbols)
    return win[idx]


def _extend_circular(rx_eq: np.ndarray, margin: int) -> Tuple[np.ndarray, int]:
    n = len(rx_eq)
    idx = np.arange(-margin, n + margin) % n
    return rx_eq[idx], margin


def _solve_normal_equations(gram: np.ndarray, rhs: np.ndarray,
                            ridge_scale: float) -> Tuple[np.ndarray, int]:
    lam = ridge_scale * np.trace(gram)
    escalations = 0
    while True:
        try:
            g = gram.copy()
            g[np.diag_indices_from(g)] += lam
            return solve(g, rhs, assume_a="pos"), escalations
        except LinAlgError:
            escalations += 1
            if escalations > 3:
                raise
            lam = (lam if lam > 0 else np.trace(gram) * 1e-12) * 100.0


def train_equalizer(rx_eq: np.ndarray, sym_idx: np.ndarray, mod: ModulationSpec,
                    sim: SimConfig, n_feedback: int) -> EqualizerTaps:
    """Least-squares MMSE tap solution over the training block.

    Jointly fits the feedforward window, ``n_feedback`` past (known) symbols
    and a bias against the transmitted alphabet, with a small trace-scaled
    ridge for conditioning. The window alignment is searched over a few
    candidate delays when the feedforward filter is short.
    """
    rate = 2 if sim.tap_spacing == "half" else 1
    n_sym = len(sym_idx)
    n_train = int(n_sym * sim.training_fraction)
    n_cols = sim.ffe_taps + n_feedback + 1
    if n_train < 4 * n_cols:
        raise ValueError(
            f"training block of {n_train} symbols is too short for {n_cols} unknowns")

    alpha = pam_alphabet(mod.m)[sym_idx]
    if sim.delay_span is not None:
        span = sim.delay_span
    else:
        span = 2 * rate if sim.ffe_taps <= 32 else 0
    delays = range(-span, span + 1)

    margin = sim.ffe_taps + rate * (span + 2) + 2
    ext, lead = _extend_circular(rx_eq, margin)

    fb_cols = None
    if n_feedback:
        fb_cols = _past_symbol_windows(alpha, n_feedback)[:n_train]

    target = alpha[:n_train]
    best = None
    for delay in delays:
        rows = _window_rows(ext, n_train, rate, sim.ffe_taps, delay, lead)
        blocks = [rows]
        if fb_cols is not None:
            blocks.append(fb_cols)
        blocks.append(np.ones((n_train, 1)))
        a = np.hstack(blocks)
        gram = a.T @ a
        rhs = a.T @ target
        w, escal = _solve_normal_equations(gram, rhs, sim.ridge_scale)
        mse = float(np.mean((a @ w - target) ** 2))
        if best is None or mse < best[0]:
            best = (mse, delay, w, escal)

    mse, delay, w, escal = best
    ffe = w[:sim.ffe_taps]
    dfe = w[sim.ffe_taps:sim.ffe_taps + n_feedback]
    bias = float(w[-1])
    return EqualizerTaps(ffe=ffe, dfe=dfe, bias=bias, delay=delay, rate=rate,
                         phase=0, mse_train=mse, ridge_escalations=escal)


def _ffe_output(rx_eq: np.ndarray, taps: EqualizerTaps, n_sym: int) -> np.ndarray:
    """Feedforward filter output at every symbol instant (bias included)."""
    n_taps = len(taps.ffe)
    margin = n_taps + taps.rate * (abs(taps.delay) + 2) + 2
    ext, lead = _extend_circular(rx_eq, margin)
    corr = sps_signal.fftconvolve(ext, taps.ffe[::-1], mode="valid")
    start = lead + taps.delay - n_taps // 2 + (taps.rate // 2)
    return corr[start + taps.rate * np.arange(n_sym)] + taps.bias


def _past_symbol_windows(alpha: np.ndarray, n_fb: int) -> np.ndarray:
    """Row k holds the n_fb symbols preceding symbol k (circularly at the start)."""
    ext, _ = _extend_circular(alpha, n_fb)
    return sliding_window_view(ext, n_fb)[:len(alpha)]


def _feedback_sum(alpha: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Contribution of the past-symbol taps for a known symbol stream."""
    return _past_symbol_windows(alpha, len(fb)) @ fb


def _decision_thresholds(y_train: np.ndarray, idx_train: np.ndarray,
                         m: int) -> np.ndarray:
    """Midpoints of the per-level output means, estimated on the training block."""
    means = np.empty(m)
    for lvl in range(m):
        sel = idx_train == lvl
        if not np.any(sel):
            raise ValueError(f"training block never exercises level {lvl}")
        means[lvl] = y_train[sel].mean()
    means.sort()
    return 0.5 * (means[:-1] + means[1:])


def _decide(y: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return np.searchsorted(thresholds, y)


def _decision_directed_dfe(y_ffe: np.ndarray, taps: EqualizerTaps,
                           alphabet: np.ndarray, thresholds: np.ndarray,
                           warmup_alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sequential DFE with decisions feeding the feedback taps."""
    n_fb = len(taps.dfe)
    n = len(y_ffe)
    y = np.empty(n)
    dec_idx = np.empty(n, dtype=np.int64)
    history = list(warmup_alpha[-n_fb:])
    fb = taps.dfe
    for k in range(n):
        acc = y_ffe[k]
        for j in range(n_fb):
            acc += fb[n_fb - 1 - j] * history[-1 - j]
        i = int(np.searchsorted(thresholds, acc))
        y[k] = acc
        dec_idx[k] = i
        history.append(alphabet[i])
        del history[0]
    return y, dec_idx


@dataclass(frozen=True, eq=False)
class EvalStats:
    mse: float
    snr: float
    ber: float
    n_bit_errors: int
    n_bits: int
    n_symbols: int
    per_eye_errors: np.ndarray
    per_eye_ber: np.ndarray


def evaluate(equalized: np.ndarray, reference_idx: np.ndarray,
             mod: ModulationSpec, decided_idx: np.ndarray) -> EvalStats:
    """Error statistics of an equalized block against the transmitted symbols.

    The SNR is the unbiased MMSE form (constellation energy over MSE, minus
    one). Bit errors use Gray labelling; each symbol error is attributed to
    every eye between the transmitted and decided levels, and the per-eye
    BER is scaled so the aggregate BER is the plain mean of the per-eye
    values.
    """
    n = len(equalized)
    if n == 0:
        raise ValueError("no symbols to evaluate")
    m = mod.m
    alphabet = pam_alphabet(m)
    err = equalized - alphabet[reference_idx]
    mse = float(np.mean(err ** 2))
    snr = symbol_variance(m) / mse - 1.0 if mse > 0 else math.inf

    gray_ref = reference_idx ^ (reference_idx >> 1)
    gray_dec = decided_idx ^ (decided_idx >> 1)
    bit_errors = int(_POPCOUNT[gray_ref ^ gray_dec].sum())
    bits_per_symbol = mod.bits_per_symbol
    n_bits = n * bits_per_symbol

    per_eye_errors = np.empty(m - 1, dtype=np.int64)
    for eye in range(1, m):
        per_eye_errors[eye - 1] = int(np.sum((reference_idx >= eye) != (decided_idx >= eye)))
    per_eye_ber = per_eye_errors * (m - 1) / n_bits

    return EvalStats(
        mse=mse,
        snr=snr,
        ber=bit_errors / n_bits,
        n_bit_errors=bit_errors,
        n_bits=n_bits,
        n_symbols=n,
        per_eye_errors=per_eye_errors,
        per_eye_ber=per_eye_ber,
    )


def dump_waveform(path, fs: float, waveform: np.ndarray) -> None:
    """Write a waveform as little-endian float64 with an (fs, length) header."""
    arr = np.asarray(waveform, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<dQ", float(fs), len(arr)))
        fh.write(arr.tobytes())


def load_waveform(path) -> Tuple[float, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.read(16)
        fs, n = struct.unpack("<dQ", header)
        data = np.frombuffer(fh.read(8 * n), dtype="<f8")
    if len(data) != n:
        raise ValueError(f"waveform file {path} is truncated")
    return fs, data.astype(float)


def run_simulation(mod: ModulationSpec, pd: PhotodiodeSpec, noise: NoiseSpec,
                   sim: SimConfig, channel: TransferFunction,
                   fiber: Optional[FiberSpec] = None,
                   h_rx: Optional[TransferFunction] = None,
                   scheme: str = "ffe") -> SimResult:
    """One full Monte Carlo run for the requested equalizer scheme.

    ``scheme="ffe"`` trains the feedforward filter alone; ``"dfe"`` adds the
    configured number of symbol-spaced feedback taps. In full-training mode
    the feedback sees the true symbols during evaluation as well (the ideal
    feedback the infinite-length analytical bound assumes); otherwise
    evaluation runs decision-directed.
    """
    if scheme not in ("ffe", "dfe"):
        raise ValueError(f"unknown equalizer scheme {scheme!r}")
    n_feedback = sim.dfe_feedback_taps if scheme == "dfe" else 0
    if scheme == "dfe" and n_feedback == 0:
        raise ValueError("dfe scheme requires dfe_feedback_taps > 0")

    fs = sim.samples_per_symbol * mod.symbol_rate
    rng = np.random.default_rng(sim.rng_seed)
    warnings = []

    sym_idx, p_tx = synthesize_tx(mod, sim.n_symbols, sim.samples_per_symbol, rng)
    p_tx = add_rin(p_tx, noise, fs, rng)
    p_rx, field_clamp = propagate(p_tx, fs, channel, fiber, sim.cd_mode)
    current, shot_clamp = add_rx_noise(p_rx, pd, noise, fs, rng)
    clamp_fraction = max(field_clamp, shot_clamp)
    if clamp_fraction > 0.01:
        warnings.append(
            f"clamped {clamp_fraction:.1%} of samples at zero power; "
            "noise statistics are distorted at this operating point")

    if sim.dump_path:
        dump_waveform(sim.dump_path, fs, current)

    rate = 2 if sim.tap_spacing == "half" else 1
    phases = [0] if rate == 2 else list(range(sim.samples_per_symbol))
    best = None
    for phase in phases:
        rx_eq = to_equalizer_rate(current, sim.samples_per_symbol, rate, fs,
                                  h_rx=h_rx, phase=phase)
        # The tap solution is scale-invariant; normalizing to the alphabet
        # scale keeps the normal equations well conditioned against the
        # symbol-valued feedback and bias columns.
        scale = float(np.std(rx_eq))
        if scale > 0:
            rx_eq = rx_eq / scale
        taps = train_equalizer(rx_eq, sym_idx, mod, sim, n_feedback)
        if best is None or taps.mse_train < best[0].mse_train:
            best = (taps, rx_eq, phase)
    taps, rx_eq, phase = best
    if rate == 1:
        taps = EqualizerTaps(taps.ffe, taps.dfe, taps.bias, taps.delay, taps.rate,
                             phase, taps.mse_train, taps.ridge_escalations)
    if taps.ridge_escalations:
        warnings.append(
            f"normal equations required {taps.ridge_escalations} ridge escalation(s)")

    alphabet = pam_alphabet(mod.m)
    alpha = alphabet[sym_idx]
    n_train = int(sim.n_symbols * sim.training_fraction)

    y_ffe = _ffe_output(rx_eq, taps, sim.n_symbols)
    if n_feedback:
        y_train = y_ffe[:n_train] + _feedback_sum(alpha, taps.dfe)[:n_train]
    else:
        y_train = y_ffe[:n_train]
    thresholds = _decision_thresholds(y_train, sym_idx[:n_train], mod.m)

    if n_feedback and not sim.full_training:
        y_eval, dec_idx = _decision_directed_dfe(
            y_ffe[n_train:], taps, alphabet, thresholds, alpha[:n_train])
    else:
        if n_feedback:
            y_eval = y_ffe[n_train:] + _feedback_sum(alpha, taps.dfe)[n_train:]
        else:
            y_eval = y_ffe[n_train:]
        dec_idx = _decide(y_eval, thresholds)

    stats = evaluate(y_eval, sym_idx[n_train:], mod, dec_idx)

    return SimResult(
        snr_mse_db=(10.0 * math.log10(stats.snr) if stats.snr > 0 else -math.inf),
        snr_mse=stats.snr,
        mse=stats.mse,
        ber_counted=stats.ber,
        per_eye_ber=stats.per_eye_ber,
        per_eye_errors=stats.per_eye_errors,
        n_errors=stats.n_bit_errors,
        n_eval_bits=stats.n_bits,
        n_eval_symbols=stats.n_symbols,
        ffe_taps=taps.ffe,
        dfe_taps=taps.dfe,
        bias=taps.bias,
        delay=taps.delay,
        clamp_fraction=clamp_fraction,
        ber_floor_unreliable=stats.ber < BER_FLOOR_RELIABLE,
        warnings=tuple(warnings),
        seed=sim.rng_seed,
    )
