"""Parameter-grid execution, receiver-sensitivity search, and result emission.

A sweep is a Cartesian grid over dotted config paths evaluated in ``model``,
``sim`` or ``compare`` mode. Points are independent and deterministic: the
per-point seed is the master seed XOR the grid index, so parallel and serial
runs produce identical records.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import (ConfigError, LinkConfig, copy_config, evaluate_model,
                     set_param, simulate)
from .params import dbm_to_watt, watt_to_dbm

_METRIC_ORDER = (
    "snr_ffe_db", "snr_dfe_db", "ber_ffe", "ber_dfe",
    "snr_sim_ffe_db", "snr_sim_dfe_db", "ber_sim_ffe", "ber_sim_dfe",
    "delta_snr_ffe_db", "delta_snr_dfe_db",
    "seed", "runtime_s",
)


class BracketError(ValueError):
    """The BER target is not bracketed by the requested power range."""


@dataclass
class SweepRecord:
    """One grid point: swept parameter values plus whatever the mode produced."""

    params: dict
    snr_ffe_db: Optional[float] = None
    snr_dfe_db: Optional[float] = None
    ber_ffe: Optional[float] = None
    ber_dfe: Optional[float] = None
    snr_sim_ffe_db: Optional[float] = None
    snr_sim_dfe_db: Optional[float] = None
    ber_sim_ffe: Optional[float] = None
    ber_sim_dfe: Optional[float] = None
    delta_snr_ffe_db: Optional[float] = None
    delta_snr_dfe_db: Optional[float] = None
    seed: Optional[int] = None
    runtime_s: float = 0.0


@dataclass
class SweepSpec:
    """Base configuration plus the grid axes and execution mode."""

    base: LinkConfig = field(default_factory=LinkConfig)
    axes: List[Tuple[str, list]] = field(default_factory=list)
    mode: str = "model"  # model | sim | compare
    seed: int = 0
    jobs: int = 1
    max_points: int = 200_000

    def __post_init__(self) -> None:
        if self.mode not in ("model", "sim", "compare"):
            raise ConfigError(f"unknown sweep mode {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def parse_axis(text: str) -> Tuple[str, list]:
    """Parse ``key=start:stop:step`` or ``key=v1,v2,...`` into an axis."""
    key, sep, rhs = text.partition("=")
    key, rhs = key.strip(), rhs.strip()
    if not sep or not key or not rhs:
        raise ConfigError(f"malformed sweep axis {text!r}; expected key=values")
    if ":" in rhs:
        parts = rhs.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range axis must be start:stop:step, got {rhs!r}")
        start, stop, step = (float(p) for p in parts)
        if step == 0:
            raise ConfigError("axis step must be nonzero")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigError(f"axis {text!r} produces no values")
        values = [round(start + i * step, 12) for i in range(n)]
    else:
        values = [float(v) for v in rhs.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"axis {text!r} produces no values")
    return key, values


def expand_grid(spec: SweepSpec) -> List[dict]:
    """Parameter dictionaries for every grid point, in deterministic order."""
    if not spec.axes:
        return [{}]
    keys = [k for k, _ in spec.axes]
    combos = itertools.product(*(vals for _, vals in spec.axes))
    grid = [dict(zip(keys, combo)) for combo in combos]
    if len(grid) > spec.max_points:
        raise ConfigError(
            f"sweep grid has {len(grid)} points, above the cap of {spec.max_points}")
    return grid


def _point_config(base: LinkConfig, params: dict) -> LinkConfig:
    cfg = copy_config(base)
    for key, value in params.items():
        set_param(cfg, key, value)
    return cfg


def _schemes(cfg: LinkConfig) -> List[str]:
    names = [s.strip().lower() for s in cfg.eq.schemes.split(",") if s.strip()]
    for name in names:
        if name not in ("ffe", "dfe"):
            raise ConfigError(f"unknown equalizer scheme {name!r} in eq.schemes")
    return names or ["ffe"]


def evaluate_point(base: LinkConfig, params: dict, mode: str,
                   seed: int) -> SweepRecord:
    """Evaluate one grid point in the requested mode."""
    cfg = _point_config(base, params)
    rec = SweepRecord(params=dict(params), seed=seed)
    t0 = time.perf_counter()
    if mode in ("model", "compare"):
        res = evaluate_model(cfg)
        rec.snr_ffe_db = res.snr_ffe_db
        rec.snr_dfe_db = res.snr_dfe_db
        rec.ber_ffe = res.ber_ffe
        rec.ber_dfe = res.ber_dfe
    if mode in ("sim", "compare"):
        for scheme in _schemes(cfg):
            sim_res = simulate(cfg, seed=seed, scheme=scheme)
            if scheme == "ffe":
                rec.snr_sim_ffe_db = sim_res.snr_mse_db
                rec.ber_sim_ffe = sim_res.ber_counted
            else:
                rec.snr_sim_dfe_db = sim_res.snr_mse_db
                rec.ber_sim_dfe = sim_res.ber_counted
    if mode == "compare":
        if rec.snr_sim_ffe_db is not None:
            rec.delta_snr_ffe_db = rec.snr_ffe_db - rec.snr_sim_ffe_db
        if rec.snr_sim_dfe_db is not None:
            rec.delta_snr_dfe_db = rec.snr_dfe_db - rec.snr_sim_dfe_db
    rec.runtime_s = time.perf_counter() - t0
    return rec


def _evaluate_args(args) -> SweepRecord:
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec) -> List[SweepRecord]:
    """Evaluate every grid point; order and content are independent of jobs."""
    grid = expand_grid(spec)
    tasks = [(spec.base, params, spec.mode, spec.seed ^ index)
             for index, params in enumerate(grid)]
    if spec.jobs == 1 or len(tasks) == 1:
        return [_evaluate_args(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
        return list(pool.map(_evaluate_args, tasks))


# -- sensitivity / power budget -----------------------------------------


def sensitivity_search(cfg: LinkConfig, target_ber: float,
                       p_rx_min_dbm: float = -40.0,
                       p_rx_max_dbm: Optional[float] = None,
                       scheme: str = "ffe", tol_db: float = 0.01) -> float:
    """Received power (W) at which the analytic BER crosses the target.

    Bisects on received power in dB, assuming BER decreases monotonically
    with power over the bracket (true for every in-scope configuration).
    Raises :class:`BracketError` when the target is not enclosed.
    """
    if not 0 < target_ber < 0.5:
        raise ValueError("target BER must lie in (0, 0.5)")
    if scheme not in ("ffe", "dfe"):
        raise ValueError(f"unknown equalizer scheme {scheme!r}")
    p_tx_dbm = cfg.modulation.p_avg_dbm
    if p_rx_max_dbm is None:
        p_rx_max_dbm = p_tx_dbm
    if p_rx_max_dbm <= p_rx_min_dbm:
        raise ValueError("empty received-power bracket")

    def ber_at(p_rx_dbm: float) -> float:
        point = copy_config(cfg)
        point.channel.attenuation_db = p_tx_dbm - p_rx_dbm
        res = evaluate_model(point)
        return res.ber_ffe if scheme == "ffe" else res.ber_dfe

    ber_lo = ber_at(p_rx_min_dbm)  # weakest signal -> highest BER
    ber_hi = ber_at(p_rx_max_dbm)
    if not (ber_hi <= target_ber <= ber_lo):
        raise BracketError(
            f"target BER {target_ber:g} not bracketed: BER({p_rx_min_dbm} dBm) = "
            f"{ber_lo:.3g}, BER({p_rx_max_dbm} dBm) = {ber_hi:.3g}")

    lo, hi = p_rx_min_dbm, p_rx_max_dbm
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if ber_at(mid) > target_ber:
            lo = mid
        else:
            hi = mid
    return dbm_to_watt(0.5 * (lo + hi))


def optical_power_budget_db(cfg: LinkConfig, target_ber: float,
                            scheme: str = "ffe", **kwargs) -> float:
    """Transmitted minus minimum received power (dB) at the target BER."""
    sens = sensitivity_search(cfg, target_ber, scheme=scheme, **kwargs)
    return cfg.modulation.p_avg_dbm - watt_to_dbm(sens)


# -- emission ------------------------------------------------------------


def _format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.9g}"
    return str(value)


def record_columns(records: Sequence[SweepRecord]) -> List[str]:
    """Stable column order: axis parameters first, then populated metrics."""
    param_cols: List[str] = []
    for rec in records:
        for key in rec.params:
            if key not in param_cols:
                param_cols.append(key)
    metric_cols = [name for name in _METRIC_ORDER
                   if any(getattr(rec, name) is not None for rec in records)]
    return param_cols + metric_cols


def _row_value(rec: SweepRecord, col: str):
    if col in rec.params:
        return rec.params[col]
    return getattr(rec, col)


def emit_csv(records: Sequence[SweepRecord], stream) -> None:
    cols = record_columns(records)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        writer.writerow([_format_number(_row_value(rec, c)) for c in cols])


def emit_json(records: Sequence[SweepRecord], stream) -> None:
    cols = record_columns(records)
    rows = []
    for rec in records:
        row = {}
        for col in cols:
            value = _row_value(rec, col)
            if value is not None and isinstance(value, (float, np.floating)):
                value = float(f"{value:.9g}")
            row[col] = value
        rows.append(row)
    json.dump(rows, stream, indent=2)
    stream.write("\n")


def emit(records: Sequence[SweepRecord], fmt: str = "csv",
         path: Optional[str] = None) -> None:
    """Write records as CSV or JSON to a file (or stdout when path is None)."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    writer = emit_csv if fmt == "csv" else emit_json
    if path is None:
        writer(records, sys.stdout)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer(records, fh)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
