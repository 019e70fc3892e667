"""Named configurations for the validation studies and the PON budget analysis."""

from __future__ import annotations

from .config import LinkConfig

# Pre-FEC BER thresholds of the hard- and soft-decision codes used in the
# access-network study.
HD_FEC_BER = 1e-2
SD_FEC_BER = 1.9e-2

# Minimum optical power budget required of an N1-class access link.
N1_CLASS_OPB_DB = 29.0

# Input-referred TIA current PSD (one-sided, A^2/Hz) of the 50G-class APD
# receiver assumed in the access-network preset: ~20 pA/rtHz.
PON_TIA_N0 = 4e-22

PON_TX_POWER_DBM = 11.0
PON_DISPERSION_PS_NM_KM = 3.85  # upper O-band edge of the 50G access grid
PON_WAVELENGTH_NM = 1310.0


def baseline_25g() -> LinkConfig:
    """25 GBaud 4-PAM reference link: the default validation operating point."""
    return LinkConfig()  # the dataclass defaults are exactly this preset


def stress_56g() -> LinkConfig:
    """56 GBaud 4-PAM with deep modulation, for intensity-noise stress grids."""
    cfg = LinkConfig()
    cfg.modulation.symbol_rate_gbaud = 56.0
    cfg.modulation.er_db = 12.0
    cfg.modulation.p_avg_dbm = 0.0
    return cfg


def cd_56g(er_db: float = 3.0, dl_ps_nm: float = 0.0) -> LinkConfig:
    """56 GBaud dispersion study: O-band fiber, narrow 0.4 Rs channel."""
    cfg = LinkConfig()
    cfg.modulation.symbol_rate_gbaud = 56.0
    cfg.modulation.er_db = er_db
    cfg.channel.b3db_over_rs = 0.4
    cfg.fiber.wavelength_nm = PON_WAVELENGTH_NM
    cfg.fiber.d_ps_nm_km = PON_DISPERSION_PS_NM_KM
    cfg.fiber.length_km = dl_ps_nm / PON_DISPERSION_PS_NM_KM
    return cfg


def apd_56g(er_db: float = 6.0) -> LinkConfig:
    """56 GBaud link on a 50G-class APD receiver (10 dB gain, 4.3 dB excess)."""
    cfg = LinkConfig()
    cfg.modulation.symbol_rate_gbaud = 56.0
    cfg.modulation.er_db = er_db
    cfg.channel.b3db_over_rs = 0.7
    cfg.pd.responsivity = 0.7
    cfg.pd.gain_db = 10.0
    cfg.pd.excess_noise_db = 4.3
    return cfg


def tap_study_56g() -> LinkConfig:
    """Strongly band-limited 56 GBaud link for equalizer-memory studies."""
    cfg = LinkConfig()
    cfg.modulation.symbol_rate_gbaud = 56.0
    cfg.modulation.er_db = 6.0
    cfg.channel.b3db_over_rs = 0.25
    return cfg


def pon(er_db: float = 6.0, length_km: float = 25.0) -> LinkConfig:
    """100 Gb/s-class access link: 50 GBaud 4-PAM, O-band fiber, APD receiver."""
    cfg = apd_56g(er_db=er_db)
    cfg.modulation.symbol_rate_gbaud = 50.0
    cfg.modulation.p_avg_dbm = PON_TX_POWER_DBM
    cfg.noise.n0_a2_hz = PON_TIA_N0
    cfg.fiber.wavelength_nm = PON_WAVELENGTH_NM
    cfg.fiber.d_ps_nm_km = PON_DISPERSION_PS_NM_KM
    cfg.fiber.length_km = length_km
    return cfg
