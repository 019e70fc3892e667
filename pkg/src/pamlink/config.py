"""Link configuration: one dataclass tree, dotted-path access, file and env input.

A configuration file is plain ``key = value`` lines with ``#`` comments,
where keys are dotted paths like ``noise.rin_db_hz`` or
``channel.b3db_over_rs``. Any key can also be overridden through the
environment with the ``PAMLINK_`` prefix and ``__`` standing in for the dot
(e.g. ``PAMLINK_NOISE__RIN_DB_HZ=-130``).
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .analytic import LinkResult, per_eye_results
from .params import (ModulationSpec, NoiseSpec, PhotodiodeSpec, db_to_lin,
                     dbm_to_watt)
from .simulator import SimConfig, SimResult, run_simulation
from .spectra import (FiberSpec, FrequencyGrid, TransferFunction, brickwall,
                      cascade, cd_small_signal, flat, load_tabulated,
                      pulse_shaping, supergaussian)

ENV_PREFIX = "PAMLINK_"


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values, or inconsistent settings."""


@dataclass
class ModulationConfig:
    m: int = 4
    symbol_rate_gbaud: float = 25.0
    p_avg_dbm: float = 0.0
    er_db: float = 6.0


@dataclass
class ChannelConfig:
    b3db_over_rs: float = 0.8
    order: int = 1
    attenuation_db: float = 0.0  # flat optical loss between TX and RX
    response_file: Optional[str] = None  # tabulated response replacing the supergaussian
    rx_b3db_over_rs: Optional[float] = None  # optional receiver filter
    rx_order: int = 1


@dataclass
class NoiseConfig:
    n0_a2_hz: float = 2e-19  # one-sided TIA input-referred current PSD
    rin_db_hz: float = -140.0


@dataclass
class PhotodiodeConfig:
    responsivity: float = 1.0
    gain_db: float = 0.0
    excess_noise_db: float = 0.0


@dataclass
class FiberConfig:
    d_ps_nm_km: float = 0.0
    length_km: float = 0.0
    wavelength_nm: float = 1310.0


@dataclass
class EqualizerConfig:
    ffe_taps: int = 200
    dfe_feedback_taps: int = 30
    schemes: str = "ffe,dfe"  # which equalizers sweeps evaluate


@dataclass
class SimulationConfig:
    samples_per_symbol: int = 8
    n_symbols: int = 250_000
    training_fraction: float = 0.5
    cd_mode: str = "auto"  # auto -> field when dispersion is present
    full_training: bool = True
    tap_spacing: str = "half"
    delay_span: Optional[int] = None
    dump_path: Optional[str] = None


@dataclass
class GridConfig:
    # Wide enough that the outermost alias fold is negligible even for
    # channels broader than the symbol rate; spacing keeps an even integer
    # number of grid steps per symbol rate so folding never interpolates.
    f_max_over_rs: float = 8.0
    n_points: int = 2 ** 15 + 1


@dataclass
class LinkConfig:
    """Complete description of one link evaluation point."""

    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    pd: PhotodiodeConfig = field(default_factory=PhotodiodeConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    eq: EqualizerConfig = field(default_factory=EqualizerConfig)
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    grid: GridConfig = field(default_factory=GridConfig)

    # -- spec builders -------------------------------------------------

    def modulation_spec(self) -> ModulationSpec:
        return ModulationSpec(
            m=self.modulation.m,
            symbol_rate=self.modulation.symbol_rate_gbaud * 1e9,
            p_avg=dbm_to_watt(self.modulation.p_avg_dbm),
            extinction_ratio_db=self.modulation.er_db,
        )

    def photodiode_spec(self) -> PhotodiodeSpec:
        return PhotodiodeSpec.from_db(self.pd.responsivity, self.pd.gain_db,
                                      self.pd.excess_noise_db)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(thermal_n0=self.noise.n0_a2_hz,
                         rin_db_hz=self.noise.rin_db_hz)

    def fiber_spec(self) -> Optional[FiberSpec]:
        if self.fiber.length_km <= 0 or self.fiber.d_ps_nm_km == 0:
            return None
        return FiberSpec.from_practical(self.fiber.d_ps_nm_km,
                                        self.fiber.length_km,
                                        self.fiber.wavelength_nm)

    def frequency_grid(self) -> FrequencyGrid:
        rs = self.modulation.symbol_rate_gbaud * 1e9
        return FrequencyGrid(self.grid.f_max_over_rs * rs, self.grid.n_points)

    def base_channel(self, grid: FrequencyGrid) -> TransferFunction:
        """Dispersion-free channel: band limit plus flat loss (power domain)."""
        rs = self.modulation.symbol_rate_gbaud * 1e9
        if self.channel.response_file:
            band = load_tabulated(self.channel.response_file, grid)
        else:
            band = supergaussian(grid, self.channel.b3db_over_rs * rs,
                                 self.channel.order)
        loss = db_to_lin(-abs(self.channel.attenuation_db))
        if loss != 1.0:
            band = cascade(band, flat(grid, loss))
        return band

    def full_channel(self, grid: FrequencyGrid) -> TransferFunction:
        """Channel including the small-signal dispersion fading, for the model."""
        band = self.base_channel(grid)
        fiber = self.fiber_spec()
        if fiber is not None:
            band = cascade(band, cd_small_signal(grid, fiber))
        return band

    def rx_filter(self, grid: FrequencyGrid) -> Optional[TransferFunction]:
        if self.channel.rx_b3db_over_rs is None:
            return None
        rs = self.modulation.symbol_rate_gbaud * 1e9
        return supergaussian(grid, self.channel.rx_b3db_over_rs * rs,
                             self.channel.rx_order)

    def equalizer_input_band(self) -> float:
        """One-sided bandwidth (Hz) the sampled equalizer can represent."""
        rs = self.modulation.symbol_rate_gbaud * 1e9
        per_symbol = 2 if self.sim.tap_spacing == "half" else 1
        return 0.5 * per_symbol * rs

    def model_rx_filter(self, grid: FrequencyGrid) -> TransferFunction:
        """Receiver filtering as the model sees it, equalizer band edge included.

        The simulator band-limits signal and noise to the equalizer Nyquist
        band before decimating; the model applies the same ideal low-pass to
        both (it cancels in-band and removes aliases the sampled equalizer
        cannot separate).
        """
        limit = brickwall(grid, self.equalizer_input_band())
        user = self.rx_filter(grid)
        return limit if user is None else cascade(limit, user)

    def sim_config(self, seed: int, scheme: str = "ffe") -> SimConfig:
        cd_mode = self.sim.cd_mode
        if cd_mode == "auto":
            cd_mode = "field" if self.fiber_spec() is not None else "off"
        return SimConfig(
            samples_per_symbol=self.sim.samples_per_symbol,
            n_symbols=self.sim.n_symbols,
            rng_seed=seed,
            ffe_taps=self.eq.ffe_taps,
            dfe_feedback_taps=self.eq.dfe_feedback_taps,
            training_fraction=self.sim.training_fraction,
            cd_mode=cd_mode,
            full_training=self.sim.full_training,
            tap_spacing=self.sim.tap_spacing,
            delay_span=self.sim.delay_span,
            dump_path=self.sim.dump_path,
        )


def evaluate_model(cfg: LinkConfig) -> LinkResult:
    """Analytical model evaluation of one configuration point."""
    grid = cfg.frequency_grid()
    mod = cfg.modulation_spec()
    h_t = pulse_shaping(grid, mod.symbol_period)
    h_ch = cfg.full_channel(grid)
    return per_eye_results(mod, cfg.photodiode_spec(), cfg.noise_spec(),
                           h_t, h_ch, h_rx=cfg.model_rx_filter(grid))


def simulate(cfg: LinkConfig, seed: int, scheme: str = "ffe") -> SimResult:
    """Time-domain Monte Carlo evaluation of one configuration point."""
    grid = cfg.frequency_grid()
    return run_simulation(
        cfg.modulation_spec(), cfg.photodiode_spec(), cfg.noise_spec(),
        cfg.sim_config(seed, scheme), cfg.base_channel(grid),
        fiber=cfg.fiber_spec(), h_rx=cfg.rx_filter(grid), scheme=scheme)


# -- dotted-path plumbing ----------------------------------------------


def _section_names(cfg: LinkConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def config_keys(cfg: Optional[LinkConfig] = None) -> list[str]:
    """Every recognized dotted parameter path."""
    cfg = cfg or LinkConfig()
    keys = []
    for name, section in _section_names(cfg).items():
        keys.extend(f"{name}.{f.name}" for f in fields(section))
    return keys


def get_param(cfg: LinkConfig, path: str):
    section, _, leaf = path.partition(".")
    sections = _section_names(cfg)
    if section not in sections or not leaf:
        raise ConfigError(f"unknown parameter path {path!r}")
    obj = sections[section]
    if leaf not in {f.name for f in fields(obj)}:
        raise ConfigError(f"unknown parameter path {path!r}; known keys: "
                          + ", ".join(config_keys(cfg)))
    return getattr(obj, leaf)


def _coerce(raw, current):
    """Parse a raw string (or pass through a literal) against the field's type."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    low = text.lower()
    if low in ("none", "null"):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if isinstance(current, bool):
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        try:
            return int(text)
        except ValueError:
            f = float(text)  # tolerate 2e5-style integers
            if f != int(f):
                raise ConfigError(f"expected an integer, got {raw!r}") from None
            return int(f)
    if isinstance(current, float):
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"expected a number, got {raw!r}") from exc
    if current is None:
        # untyped optional: try number, else keep the string
        try:
            return float(text) if ("." in text or "e" in low or low in ("inf", "-inf")) else int(text)
        except ValueError:
            return text
    return text


def set_param(cfg: LinkConfig, path: str, value) -> None:
    section, _, leaf = path.partition(".")
    sections = _section_names(cfg)
    if section not in sections or not leaf:
        raise ConfigError(f"unknown parameter path {path!r}; known keys: "
                          + ", ".join(config_keys(cfg)))
    obj = sections[section]
    if leaf not in {f.name for f in fields(obj)}:
        raise ConfigError(f"unknown parameter path {path!r}; known keys: "
                          + ", ".join(config_keys(cfg)))
    setattr(obj, leaf, _coerce(value, getattr(obj, leaf)))


def copy_config(cfg: LinkConfig) -> LinkConfig:
    return dataclasses.replace(
        cfg, **{f.name: dataclasses.replace(getattr(cfg, f.name))
                for f in fields(cfg)})


def parse_config_text(text: str, base: Optional[LinkConfig] = None) -> LinkConfig:
    cfg = copy_config(base) if base is not None else LinkConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        set_param(cfg, key.strip(), value.strip())
    return cfg


def apply_env_overrides(cfg: LinkConfig, environ=None) -> LinkConfig:
    environ = os.environ if environ is None else environ
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().replace("__", ".")
        set_param(cfg, path, value)
    return cfg


def load_config(path: Optional[str] = None, base: Optional[LinkConfig] = None,
                environ=None) -> LinkConfig:
    """Read a config file (optional), then apply environment overrides."""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = parse_config_text(fh.read(), base=base)
    else:
        cfg = copy_config(base) if base is not None else LinkConfig()
    return apply_env_overrides(cfg, environ=environ)
