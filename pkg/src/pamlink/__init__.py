"""Analytical SNR/BER prediction and Monte Carlo validation for band-limited
M-PAM IMDD optical links with MMSE FFE/DFE equalization."""

from .analytic import (LinkResult, ber_from_snr, equalizer_snrs, fold_snr,
                       per_eye_results, snr_dfe, snr_ffe, snr_from_ber,
                       spectral_snr)
from .config import (ConfigError, LinkConfig, config_keys, evaluate_model,
                     get_param, load_config, set_param, simulate)
from .noise import (NoisePsdBreakdown, build_noise_breakdown,
                    rin_psd_at_equalizer, shot_psd, thermal_psd,
                    total_noise_psd)
from .params import (ModulationSpec, NoiseSpec, PhotodiodeSpec, db_to_lin,
                     dbm_to_watt, eye_center_powers, level_powers, lin_to_db,
                     mean_square_power, oma_from_power_er, pam_alphabet,
                     symbol_variance, watt_to_dbm)
from .simulator import (SimConfig, SimResult, add_rin, add_rx_noise,
                        dump_waveform, evaluate, load_waveform, propagate,
                        run_simulation, synthesize_tx, to_equalizer_rate,
                        train_equalizer)
from .spectra import (FiberSpec, FrequencyGrid, TransferFunction, brickwall,
                      cascade, cd_small_signal, flat, identity, load_tabulated,
                      pulse_shaping, smf_field_transfer, supergaussian)
from .sweep import (BracketError, SweepRecord, SweepSpec, emit,
                    optical_power_budget_db, parse_axis, run_sweep,
                    sensitivity_search)

__version__ = "0.1.0"
