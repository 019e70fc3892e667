"""Noise power spectral densities seen at the equalizer input, in current units.

Every density here is two-sided over the symmetric baseband grid. The
time-domain simulator injects the matching per-sample variances
sigma^2 = PSD_one_sided * fs / 2 = PSD_two_sided * fs, so the two halves of
the package share one convention by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import ELECTRON_CHARGE, NoiseSpec, PhotodiodeSpec
from .spectra import FrequencyGrid, TransferFunction


@dataclass(frozen=True, eq=False)
class NoisePsdBreakdown:
    """Per-frequency noise composition at the equalizer input (A^2/Hz, two-sided).

    ``rx_shaping`` holds |H_RX(f)|^2 when a receiver filter was applied; the
    SNR code must multiply the signal by the same factor so the MMSE result
    is unchanged by any invertible common filtering.
    """

    grid: FrequencyGrid
    thermal: np.ndarray
    shot: np.ndarray
    rin: np.ndarray
    rx_shaping: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for comp in (self.thermal, self.shot, self.rin):
            if len(comp) != self.grid.n_points:
                raise ValueError("noise components must share the breakdown grid")
            if np.any(comp < 0):
                raise ValueError("noise PSDs must be non-negative")

    @property
    def total(self) -> np.ndarray:
        return self.thermal + self.shot + self.rin


def thermal_psd(noise: NoiseSpec, grid: FrequencyGrid) -> np.ndarray:
    """Flat two-sided thermal density N0/2 at every grid point."""
    return np.full(grid.n_points, 0.5 * noise.thermal_n0)


def shot_psd(pd: PhotodiodeSpec, p_rx_avg: float) -> float:
    """Two-sided shot-noise current density q G^2 F R P (flat).

    The simulator's per-sample variance 2 G^2 F q R P(t) fs/2 averages to
    exactly this density times fs. With G = F = 1 it reduces to PIN shot
    noise at mean photocurrent R*P.
    """
    if p_rx_avg < 0:
        raise ValueError("received power must be >= 0")
    return ELECTRON_CHARGE * pd.gain ** 2 * pd.excess_noise * pd.responsivity * p_rx_avg


def rin_psd_at_equalizer(noise: NoiseSpec, pd: PhotodiodeSpec,
                         p_tx_mean_square: float,
                         h_ch: TransferFunction) -> np.ndarray:
    """Laser intensity noise after detection and channel filtering.

    (RIN/2) * <P_TX^2> * (G R)^2 * |H_ch(f)|^2 per point, two-sided.
    ``p_tx_mean_square`` is the time-average of the squared instantaneous
    transmitted power (equal to P_avg^2 only for an unmodulated carrier);
    the intensity noise rides the signal, so the channel shapes it too.
    """
    if p_tx_mean_square < 0:
        raise ValueError("mean-square power must be >= 0")
    scale = 0.5 * noise.rin_coeff * p_tx_mean_square * (pd.gain * pd.responsivity) ** 2
    return scale * np.abs(h_ch.values) ** 2


def total_noise_psd(grid: FrequencyGrid, thermal: np.ndarray, shot: float,
                    rin: np.ndarray,
                    h_rx: Optional[TransferFunction] = None) -> NoisePsdBreakdown:
    """Componentwise noise total, optionally shaped by a receiver filter.

    When ``h_rx`` is given, |H_RX|^2 multiplies every component and is
    recorded in the breakdown so the signal path can apply the same factor.
    """
    if len(thermal) != grid.n_points or len(rin) != grid.n_points:
        raise ValueError("noise components must be sampled on the shared grid")
    shot_arr = np.full(grid.n_points, float(shot))
    rx_shaping = None
    if h_rx is not None:
        if h_rx.grid != grid:
            raise ValueError("receiver filter grid does not match the noise grid")
        rx_shaping = np.abs(h_rx.values) ** 2
        thermal = thermal * rx_shaping
        shot_arr = shot_arr * rx_shaping
        rin = rin * rx_shaping
    return NoisePsdBreakdown(grid, thermal, shot_arr, rin, rx_shaping)


def build_noise_breakdown(noise: NoiseSpec, pd: PhotodiodeSpec,
                          p_rx_avg: float, p_tx_mean_square: float,
                          h_ch: TransferFunction,
                          h_rx: Optional[TransferFunction] = None) -> NoisePsdBreakdown:
    """Assemble the full breakdown for given average/mean-square power references."""
    grid = h_ch.grid
    return total_noise_psd(
        grid,
        thermal_psd(noise, grid),
        shot_psd(pd, p_rx_avg),
        rin_psd_at_equalizer(noise, pd, p_tx_mean_square, h_ch),
        h_rx=h_rx,
    )
