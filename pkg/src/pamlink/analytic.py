"""Folded-spectrum SNR model for infinite-length MMSE FFE/DFE equalization.

The chain is: spectral SNR at the equalizer input -> alias folding onto the
symbol-rate band -> the harmonic-mean (FFE) or geometric-mean (DFE) integral
-> per-eye BER. Everything is closed-form except two one-dimensional
integrals evaluated by the trapezoidal rule on the shared grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import erfc, erfcinv

from .noise import NoisePsdBreakdown, build_noise_breakdown
from .params import (ModulationSpec, NoiseSpec, PhotodiodeSpec,
                     eye_center_powers, mean_square_power, symbol_variance)
from .spectra import FrequencyGrid, TransferFunction

# Cap applied inside the DFE log-integral where the noise density is exactly
# zero; keeps the integral finite without visibly perturbing realistic links.
SNR_CLAMP = 1e18

_FOLD_TAIL_TOL = 1e-6


def spectral_snr(mod: ModulationSpec, pd: PhotodiodeSpec,
                 h_t: TransferFunction, h_ch: TransferFunction,
                 noise: NoisePsdBreakdown) -> np.ndarray:
    """Spectral SNR(f) of the detected M-PAM signal against the noise total.

    The signal density is sigma_a^2/(2(M-1))^2 * T * (G R OMA)^2
    * |H_T|^2 |H_ch|^2; for 4-PAM the level-geometry prefactor is exactly
    5/36. Points where the noise density vanishes but the signal does not
    are returned as +inf (the folding and integration handle them).
    """
    if h_t.grid != h_ch.grid or h_t.grid != noise.grid:
        raise ValueError("signal and noise must share one frequency grid")
    prefactor = symbol_variance(mod.m) / (2.0 * (mod.m - 1)) ** 2
    amp = pd.gain * pd.responsivity * mod.oma_outer
    signal = (prefactor * mod.symbol_period * amp ** 2
              * np.abs(h_t.values) ** 2 * np.abs(h_ch.values) ** 2)
    if noise.rx_shaping is not None:
        signal = signal * noise.rx_shaping
    psd = noise.total
    snr = np.full_like(signal, np.inf)
    np.divide(signal, psd, out=snr, where=psd > 0)
    snr[(psd == 0) & (signal == 0)] = 0.0
    return snr


def fold_snr(snr_f: np.ndarray, grid: FrequencyGrid,
             symbol_period: float) -> Tuple[np.ndarray, np.ndarray]:
    """Alias-fold the spectral SNR onto [-1/(2T), +1/(2T)].

    Returns ``(frequencies, folded)`` with both band edges included (the
    folded spectrum is periodic, so the edge values are equal). The grid
    must align with the symbol rate (an even integer number of grid steps
    per 1/T) and must extend far enough that the outermost alias ring
    contributes less than 1e-6 of the folded total.
    """
    if len(snr_f) != grid.n_points:
        raise ValueError("spectral SNR must be sampled on the grid")
    rs = 1.0 / symbol_period
    if grid.f_max < 0.5 * rs:
        raise ValueError("grid too narrow: f_max must reach half the symbol rate")
    m_exact = rs / grid.df
    m = int(round(m_exact))
    if abs(m_exact - m) > 1e-9 * m_exact or m % 2:
        raise ValueError(
            "grid spacing must divide the symbol rate an even number of times; "
            f"got 1/T = {m_exact} grid steps")

    half = (grid.n_points - 1) // 2
    k = np.arange(grid.n_points) - half
    bins = (k + m // 2) % m
    acc = np.zeros(m)
    np.add.at(acc, bins, snr_f)

    # Outermost alias ring: everything beyond f_max - Rs/2 belongs to the
    # last (partial) fold; if it still matters, truncation is not safe.
    ring = np.abs(grid.frequencies) > grid.f_max - 0.5 * rs
    if np.any(ring):
        ring_acc = np.zeros(m)
        np.add.at(ring_acc, bins[ring], snr_f[ring])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(acc > 0, ring_acc / acc, 0.0)
        rel = np.nan_to_num(rel, nan=0.0, posinf=0.0)
        if rel.max() >= _FOLD_TAIL_TOL:
            raise ValueError(
                "grid too narrow for alias folding: outermost fold contributes "
                f"{rel.max():.2e} of the folded SNR; enlarge f_max")

    folded = np.concatenate([acc, acc[:1]])
    freqs = (np.arange(m + 1) - m // 2) * grid.df
    return freqs, folded


def snr_ffe(folded: np.ndarray, freqs: np.ndarray, symbol_period: float) -> float:
    """Unbiased post-equalizer SNR of the infinite-length linear MMSE equalizer.

    1/(T * integral of 1/(folded+1)) - 1; a flat folded spectrum S maps to S.
    """
    integrand = np.zeros_like(folded)
    finite = np.isfinite(folded)
    integrand[finite] = 1.0 / (folded[finite] + 1.0)
    mmse = symbol_period * np.trapezoid(integrand, freqs)
    if mmse <= 0:
        return math.inf
    return 1.0 / mmse - 1.0


def snr_dfe(folded: np.ndarray, freqs: np.ndarray, symbol_period: float) -> float:
    """Unbiased SNR of the infinite-length MMSE decision-feedback equalizer.

    exp(T * integral of log(folded+1)) - 1: the geometric-mean counterpart
    of the FFE's harmonic mean, so it can never be smaller.
    """
    capped = np.minimum(folded, SNR_CLAMP)
    integral = symbol_period * np.trapezoid(np.log1p(capped), freqs)
    return float(np.expm1(integral))


def equalizer_snrs(snr_f: np.ndarray, grid: FrequencyGrid,
                   symbol_period: float) -> Tuple[float, float]:
    """Fold once, then evaluate both equalizer bounds."""
    freqs, folded = fold_snr(snr_f, grid, symbol_period)
    return (snr_ffe(folded, freqs, symbol_period),
            snr_dfe(folded, freqs, symbol_period))


def ber_from_snr(snr_linear: float, m: int) -> float:
    """Gray-coded M-PAM bit error ratio at a given post-equalizer SNR.

    (M-1)/(M log2 M) * erfc(sqrt(3 SNR / (2(M^2-1)))); clipped away from
    exact zero so log-scale consumers stay finite.
    """
    if snr_linear < 0:
        snr_linear = 0.0
    k = symbol_variance(m)  # (M^2-1)/3
    arg = math.sqrt(snr_linear / (2.0 * k))
    ber = (m - 1) / (m * math.log2(m)) * float(erfc(arg))
    return max(ber, 1e-300)


def snr_from_ber(ber: float, m: int) -> float:
    """Inverse of ``ber_from_snr`` (useful for consistency checks)."""
    coeff = (m - 1) / (m * math.log2(m))
    if not 0 < ber < coeff:
        raise ValueError(f"BER must lie in (0, {coeff}) for M={m}")
    arg = float(erfcinv(ber / coeff))
    return 2.0 * symbol_variance(m) * arg ** 2


def _to_db(snr_linear: float) -> float:
    if snr_linear <= 0:
        return -math.inf
    if math.isinf(snr_linear):
        return math.inf
    return 10.0 * math.log10(snr_linear)


@dataclass(frozen=True, eq=False)
class LinkResult:
    """Analytical prediction: aggregate and per-eye SNR plus converted BER."""

    snr_ffe_db: float
    snr_dfe_db: float
    per_eye_snr_ffe_db: np.ndarray
    per_eye_snr_dfe_db: np.ndarray
    ber_ffe: float
    ber_dfe: float
    breakdown: NoisePsdBreakdown


def per_eye_results(mod: ModulationSpec, pd: PhotodiodeSpec, noise: NoiseSpec,
                    h_t: TransferFunction, h_ch: TransferFunction,
                    h_rx: Optional[TransferFunction] = None) -> LinkResult:
    """Full model evaluation with per-eye noise referencing.

    The aggregate SNR uses the average received power for shot noise and the
    mean-square transmitted power for intensity noise. Each of the M-1 eyes
    is then re-evaluated with the shot and intensity densities referenced to
    the midpoint power of its two adjacent levels (the power where that
    eye's decisions are made), and the aggregate BER is the arithmetic mean
    of the per-eye BERs. With level-independent noise all eyes coincide.
    """
    grid = h_ch.grid
    t_sym = mod.symbol_period
    dc = h_ch.dc_gain  # power-domain DC transfer, includes any flat loss

    aggregate = build_noise_breakdown(
        noise, pd, p_rx_avg=mod.p_avg * dc,
        p_tx_mean_square=mean_square_power(mod), h_ch=h_ch, h_rx=h_rx)
    snr_f = spectral_snr(mod, pd, h_t, h_ch, aggregate)
    agg_ffe, agg_dfe = equalizer_snrs(snr_f, grid, t_sym)

    eye_ffe = np.empty(mod.m - 1)
    eye_dfe = np.empty(mod.m - 1)
    for i, p_eye in enumerate(eye_center_powers(mod)):
        eye_noise = build_noise_breakdown(
            noise, pd, p_rx_avg=p_eye * dc,
            p_tx_mean_square=p_eye ** 2, h_ch=h_ch, h_rx=h_rx)
        eye_snr_f = spectral_snr(mod, pd, h_t, h_ch, eye_noise)
        eye_ffe[i], eye_dfe[i] = equalizer_snrs(eye_snr_f, grid, t_sym)

    ber_ffe = float(np.mean([ber_from_snr(s, mod.m) for s in eye_ffe]))
    ber_dfe = float(np.mean([ber_from_snr(s, mod.m) for s in eye_dfe]))

    return LinkResult(
        snr_ffe_db=_to_db(agg_ffe),
        snr_dfe_db=_to_db(agg_dfe),
        per_eye_snr_ffe_db=np.array([_to_db(s) for s in eye_ffe]),
        per_eye_snr_dfe_db=np.array([_to_db(s) for s in eye_dfe]),
        ber_ffe=ber_ffe,
        ber_dfe=ber_dfe,
        breakdown=aggregate,
    )
