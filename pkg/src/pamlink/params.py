"""Scalar link parameters: M-PAM level bookkeeping, photodiode and noise specs.

All optical powers are stored in watts. Conversion to electrical (current)
units happens only in the noise/SNR computations via responsivity and gain,
because optical dB and electrical dB differ by a factor of two and mixing
them is the classic IMDD bookkeeping mistake.

Symbols are assumed equiprobable and independent throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ELECTRON_CHARGE = 1.602176634e-19  # C
SPEED_OF_LIGHT = 299792458.0  # m/s


def db_to_lin(x_db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (x_db / 10.0)


def lin_to_db(x: float) -> float:
    """dB from a positive power ratio."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError("dB conversion requires a positive ratio")
    return 10.0 * np.log10(x)


def dbm_to_watt(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_watt / 1e-3)


def oma_from_power_er(p_avg: float, er_db: float) -> float:
    """Outer optical modulation amplitude from average power and extinction ratio.

    OMA = 2 P_avg (er - 1)/(er + 1) with er the linear extinction ratio
    between the outermost levels. er_db = inf is allowed and means the
    lowest level sits at zero power (OMA = 2 P_avg).
    """
    if p_avg <= 0:
        raise ValueError(f"average power must be positive, got {p_avg}")
    if er_db < 0:
        raise ValueError(f"extinction ratio must be >= 0 dB, got {er_db}")
    if math.isinf(er_db):
        return 2.0 * p_avg
    er = db_to_lin(er_db)
    return 2.0 * p_avg * (er - 1.0) / (er + 1.0)


def pam_alphabet(m: int) -> np.ndarray:
    """Symmetric odd-integer PAM alphabet {-(M-1), -(M-3), ..., +(M-1)}."""
    if int(m) != m or m < 2:
        raise ValueError(f"alphabet size must be an integer >= 2, got {m}")
    return np.arange(-(m - 1), m, 2, dtype=float)


def symbol_variance(m: int) -> float:
    """Variance (M^2 - 1)/3 of the equiprobable odd-integer alphabet."""
    if int(m) != m or m < 2:
        raise ValueError(f"alphabet size must be an integer >= 2, got {m}")
    return (m * m - 1) / 3.0


@dataclass(frozen=True)
class ModulationSpec:
    """M-PAM intensity modulation: cardinality, rate, and optical level ladder.

    Levels are equally spaced in optical power (P_k = P_avg + OMA/(2(M-1)) * a_k
    for the odd-integer alphabet a_k), so the ladder averages exactly to
    ``p_avg`` and spans exactly ``oma_outer``.
    """

    m: int
    symbol_rate: float  # symbols/s
    p_avg: float  # W, mean optical power
    extinction_ratio_db: float  # outer-level power ratio, dB; inf = lowest level at 0
    pulse_shape: str = "nrz"

    def __post_init__(self) -> None:
        if self.m < 2 or (self.m & (self.m - 1)) != 0:
            raise ValueError(f"cardinality must be a power of two >= 2, got {self.m}")
        if self.symbol_rate <= 0:
            raise ValueError("symbol rate must be positive")
        if self.p_avg <= 0:
            raise ValueError("average power must be positive")
        if self.extinction_ratio_db < 0:
            raise ValueError("extinction ratio must be >= 0 dB")
        if self.pulse_shape != "nrz":
            raise ValueError(f"unsupported pulse shape {self.pulse_shape!r}")

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def oma_outer(self) -> float:
        return oma_from_power_er(self.p_avg, self.extinction_ratio_db)

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.m)))


def level_powers(mod: ModulationSpec) -> np.ndarray:
    """Optical power of each PAM level, ascending (W)."""
    step = mod.oma_outer / (2.0 * (mod.m - 1))
    levels = mod.p_avg + step * pam_alphabet(mod.m)
    if levels[0] < -1e-18 * mod.p_avg:
        raise ValueError("level ladder has negative power; check ER/OMA consistency")
    return np.maximum(levels, 0.0)


def eye_center_powers(mod: ModulationSpec) -> np.ndarray:
    """Midpoints of adjacent level powers: the M-1 decision-threshold powers (W)."""
    p = level_powers(mod)
    return 0.5 * (p[:-1] + p[1:])


def mean_square_power(mod: ModulationSpec) -> float:
    """Time-average of the squared instantaneous optical power (W^2).

    For rectangular NRZ the waveform always sits exactly on a level, so this
    is the mean of the squared level powers. It exceeds p_avg^2 by the level
    variance and is the correct scale for intensity-noise terms that grow
    with the square of the instantaneous power.
    """
    return float(np.mean(level_powers(mod) ** 2))


@dataclass(frozen=True)
class PhotodiodeSpec:
    """Photodiode front end: responsivity plus avalanche gain/excess noise."""

    responsivity: float  # A/W
    gain: float = 1.0  # linear; 1 for PIN
    excess_noise: float = 1.0  # linear; 1 for PIN

    def __post_init__(self) -> None:
        if self.responsivity <= 0:
            raise ValueError("responsivity must be positive")
        if self.gain < 1.0:
            raise ValueError("avalanche gain must be >= 1")
        if self.excess_noise < 1.0:
            raise ValueError("excess noise factor must be >= 1")

    @classmethod
    def from_db(cls, responsivity: float, gain_db: float = 0.0,
                excess_noise_db: float = 0.0) -> "PhotodiodeSpec":
        return cls(responsivity, db_to_lin(gain_db), db_to_lin(excess_noise_db))


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver/transmitter noise levels.

    thermal_n0 is the one-sided input-referred current PSD of the TIA in
    A^2/Hz. rin_db_hz is the laser relative-intensity-noise coefficient in
    dB/Hz; -inf switches the RIN source off.
    """

    thermal_n0: float
    rin_db_hz: float = -math.inf

    def __post_init__(self) -> None:
        if self.thermal_n0 < 0:
            raise ValueError("thermal PSD must be non-negative")

    @property
    def rin_coeff(self) -> float:
        """Linear RIN coefficient in 1/Hz (0 when RIN is off)."""
        if math.isinf(self.rin_db_hz) and self.rin_db_hz < 0:
            return 0.0
        return db_to_lin(self.rin_db_hz)
