"""Frequency grids and the link's linear frequency responses.

Every response carries a closed-form callable alongside its sampled values,
so the analytical model can fold aliases without interpolation error and the
time-domain simulator can evaluate the same response on its own FFT grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .params import SPEED_OF_LIGHT


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric baseband grid [-f_max, +f_max] containing f = 0."""

    f_max: float
    n_points: int

    def __post_init__(self) -> None:
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("n_points must be an odd integer >= 3 so the grid contains f = 0")

    @property
    def df(self) -> float:
        return 2.0 * self.f_max / (self.n_points - 1)

    @cached_property
    def frequencies(self) -> np.ndarray:
        half = (self.n_points - 1) // 2
        return np.arange(-half, half + 1) * self.df


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Complex response sampled on a shared grid, with its generating closed form."""

    grid: FrequencyGrid
    values: np.ndarray
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        if len(self.values) != self.grid.n_points:
            raise ValueError("values must cover every grid point")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("transfer function magnitude must be finite everywhere")

    def at(self, f: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary frequencies (closed form, else linear interpolation)."""
        if self.fn is not None:
            return np.asarray(self.fn(np.asarray(f, dtype=float)))
        fg = self.grid.frequencies
        fa = np.asarray(f, dtype=float)
        re = np.interp(fa, fg, self.values.real, left=0.0, right=0.0)
        im = np.interp(fa, fg, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    @property
    def dc_gain(self) -> float:
        """|H(0)|, the power-domain DC transfer."""
        return float(np.abs(self.at(np.array([0.0]))[0]))


@dataclass(frozen=True)
class FiberSpec:
    """Dispersive single-mode fiber segment (dispersion-only description)."""

    dispersion: float  # s/m^2
    length: float  # m
    wavelength: float  # m, carrier

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("fiber length must be >= 0")
        if self.wavelength <= 0:
            raise ValueError("carrier wavelength must be positive")

    @classmethod
    def from_practical(cls, d_ps_nm_km: float, length_km: float,
                       wavelength_nm: float) -> "FiberSpec":
        # ps/(nm km) -> s/m^2 is a factor 1e-6
        return cls(d_ps_nm_km * 1e-6, length_km * 1e3, wavelength_nm * 1e-9)

    @property
    def carrier_frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def accumulated_dispersion(self) -> float:
        """D*L in s/m (multiply by 1e12*1e-9... i.e. 1e3 for ps/nm)."""
        return self.dispersion * self.length

    @property
    def accumulated_dispersion_ps_nm(self) -> float:
        return self.accumulated_dispersion * 1e3


def _sample(grid: FrequencyGrid, fn: Callable[[np.ndarray], np.ndarray]) -> TransferFunction:
    return TransferFunction(grid, np.asarray(fn(grid.frequencies)), fn)


def supergaussian(grid: FrequencyGrid, b3db: float, order: int = 1) -> TransferFunction:
    """Zero-phase supergaussian low-pass: |H(f)|^2 = 2^(-(f/B)^(2 order)).

    The 3 dB point sits at B for every order; large orders approach a
    brick wall of width 2B. Phase is identically zero, which leaves the
    equalized-SNR model untouched since only |H|^2 enters it.
    """
    if b3db <= 0:
        raise ValueError("3 dB bandwidth must be positive")
    if order < 1 or int(order) != order:
        raise ValueError("order must be an integer >= 1")
    expo = 2 * int(order)

    def fn(f: np.ndarray) -> np.ndarray:
        return np.asarray(2.0 ** (-0.5 * np.abs(f / b3db) ** expo), dtype=complex)

    return _sample(grid, fn)


def pulse_shaping(grid: FrequencyGrid, symbol_period: float) -> TransferFunction:
    """Spectrum of the rectangular NRZ symbol pulse: sin(pi f T)/(pi f T)."""
    if symbol_period <= 0:
        raise ValueError("symbol period must be positive")

    def fn(f: np.ndarray) -> np.ndarray:
        return np.asarray(np.sinc(f * symbol_period), dtype=complex)

    return _sample(grid, fn)


def cd_small_signal(grid: FrequencyGrid, fiber: FiberSpec) -> TransferFunction:
    """Small-signal power-fading response of chirpless intensity modulation.

    After square-law detection, dispersion turns into the real, even
    cos(pi c D L (f/f_c)^2) transfer on the detected waveform; nulls appear
    where the quadratic phase reaches pi/2.
    """
    k = np.pi * SPEED_OF_LIGHT * fiber.accumulated_dispersion
    fc = fiber.carrier_frequency

    def fn(f: np.ndarray) -> np.ndarray:
        return np.asarray(np.cos(k * (f / fc) ** 2), dtype=complex)

    return _sample(grid, fn)


def smf_field_transfer(grid: FrequencyGrid, fiber: FiberSpec) -> TransferFunction:
    """All-pass quadratic-phase field response of the fiber at baseband offsets.

    Used only by the time-domain propagation path; frequencies are offsets
    from the optical carrier.
    """
    k = np.pi * SPEED_OF_LIGHT * fiber.accumulated_dispersion
    fc = fiber.carrier_frequency

    def fn(f: np.ndarray) -> np.ndarray:
        return np.exp(1j * k * (f / fc) ** 2)

    return _sample(grid, fn)


def flat(grid: FrequencyGrid, gain: float = 1.0) -> TransferFunction:
    """Frequency-independent gain (e.g. an ODN loss in the power domain)."""
    if gain < 0:
        raise ValueError("flat gain must be >= 0")

    def fn(f: np.ndarray) -> np.ndarray:
        return np.full(np.shape(f), gain, dtype=complex)

    return _sample(grid, fn)


def identity(grid: FrequencyGrid) -> TransferFunction:
    return flat(grid, 1.0)


def brickwall(grid: FrequencyGrid, cutoff: float) -> TransferFunction:
    """Ideal low-pass: unity for |f| <= cutoff, zero beyond.

    Models the band limitation in front of a sampled equalizer; applied to
    signal and noise alike it leaves the in-band SNR untouched and removes
    spectral content the equalizer's sampling rate cannot represent.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")

    def fn(f: np.ndarray) -> np.ndarray:
        return np.where(np.abs(f) <= cutoff, 1.0, 0.0).astype(complex)

    return _sample(grid, fn)


def cascade(*tfs: TransferFunction) -> TransferFunction:
    """Pointwise product of responses defined on the same grid."""
    if not tfs:
        raise ValueError("cascade needs at least one transfer function")
    grid = tfs[0].grid
    for tf in tfs[1:]:
        if tf.grid != grid:
            raise ValueError("cascade requires identical grids")
    values = tfs[0].values.copy()
    for tf in tfs[1:]:
        values = values * tf.values
    fns = [tf.fn for tf in tfs]
    if all(fn is not None for fn in fns):
        def fn(f: np.ndarray) -> np.ndarray:
            out = fns[0](f)
            for g in fns[1:]:
                out = out * g(f)
            return out
    else:
        fn = None
    return TransferFunction(grid, values, fn)


def load_tabulated(path, grid: FrequencyGrid) -> TransferFunction:
    """Import a measured two-column response (frequency, complex value).

    The file holds one ``frequency value`` pair per line; the value column may
    be real or a Python complex literal like ``0.31-0.12j``. Values are
    linearly interpolated onto the grid and set to zero outside the measured
    range (a band-limited measurement carries no energy beyond its edges).
    """
    data = np.loadtxt(path, dtype=complex, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"expected two columns (frequency, value) in {path}")
    f_tab = data[:, 0].real
    v_tab = data[:, 1]
    order = np.argsort(f_tab)
    f_tab, v_tab = f_tab[order], v_tab[order]

    def fn(f: np.ndarray) -> np.ndarray:
        re = np.interp(f, f_tab, v_tab.real, left=0.0, right=0.0)
        im = np.interp(f, f_tab, v_tab.imag, left=0.0, right=0.0)
        return re + 1j * im

    return _sample(grid, fn)
