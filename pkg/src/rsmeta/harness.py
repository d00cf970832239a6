"""Sweep runner: many channel estimates per operating point, reported flat.

A sweep walks an SNR grid; at each point it draws several independent
channel estimates, runs the requested optimizers on each (all methods see
the same ensemble, so comparisons are paired), and aggregates the achieved
average sum rates into an effective sum rate per method and SNR.

Config files are flat ``key = value`` text with dotted keys; see
:data:`KEYMAP` for the full vocabulary. Reports land as one CSV of
aggregates plus one JSON of every individual cell. Seeding is hierarchical
(master seed, SNR index, estimate index), so any single cell can be
reproduced in isolation and adding SNR points never reshuffles the others.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import run_direct_adam, run_fixed_direction
from .channel import IidCsitModel, OneRingModel
from .layout import StreamLayout
from .linalg import RngStream
from .metaopt import MetaOptConfig, run_meta_opt
from .rates import saf_report

__all__ = ["ExperimentConfig", "CellResult", "SweepResult",
           "load_config", "validate_config", "run_sweep", "write_reports"]

SCHEMA_VERSION = 1

ENV_OUT_DIR = "RSMETA_OUT_DIR"
ENV_THREADS = "RSMETA_THREADS"


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; field names mirror the config-file keys."""

    scenario: str = "iid"            # "iid" (single layer) or "one_ring" (grouped)
    n_tx: int = 4
    n_users: int = 4
    n_groups: int = 2                # one_ring only
    snr_db: tuple = (10.0, 20.0)
    n_csit: int = 4                  # channel estimates per SNR point
    n_realizations: int = 200        # realizations averaged per estimate
    master_seed: int = 1234
    methods: tuple = ("meta", "direct")

    alpha: float = 0.6               # iid error exponent
    error_power: float = None        # iid override; None tracks SNR

    azimuths: tuple = None           # one_ring, radians, one per group
    spread: float = 0.3927           # one_ring angular half-spread
    tau2: float = 0.4                # one_ring estimation error fraction
    spacing: float = 0.5             # antenna spacing in wavelengths

    meta_iters: int = 300
    meta_lr: float = 1e-3
    meta_hidden: tuple = (50, 50)
    meta_smooth_temp: float = None
    meta_splits: tuple = None

    direct_iters: int = 1000
    direct_lr: float = 0.02

    fixed_step: float = 0.05
    fixed_rank: int = None

    redraw_eval: bool = False        # score on a held-out realization batch
    out_dir: str = "results"
    n_threads: int = 1


# config-file key -> dataclass field
KEYMAP = {
    "scenario": "scenario",
    "n_tx": "n_tx",
    "n_users": "n_users",
    "n_groups": "n_groups",
    "snr_db": "snr_db",
    "csit_draws": "n_csit",
    "realizations": "n_realizations",
    "master_seed": "master_seed",
    "methods": "methods",
    "iid.alpha": "alpha",
    "iid.error_power": "error_power",
    "ring.azimuths": "azimuths",
    "ring.spread": "spread",
    "ring.tau2": "tau2",
    "ring.spacing": "spacing",
    "meta.iters": "meta_iters",
    "meta.lr": "meta_lr",
    "meta.hidden": "meta_hidden",
    "meta.smooth_temp": "meta_smooth_temp",
    "meta.splits": "meta_splits",
    "direct.iters": "direct_iters",
    "direct.lr": "direct_lr",
    "fixed.step": "fixed_step",
    "fixed.rank": "fixed_rank",
    "eval.redraw": "redraw_eval",
    "out.dir": "out_dir",
    "threads": "n_threads",
}

_TUPLE_FIELDS = {"snr_db", "methods", "azimuths", "meta_hidden", "meta_splits"}


def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_scalar(p.strip()) for p in text.split(",")
                     if p.strip() != "")
    return _parse_scalar(text)


def load_config(path) -> ExperimentConfig:
    """Parse a flat key-value config file and validate the result."""
    cfg = ExperimentConfig()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', "
                                 f"got {raw.strip()!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in KEYMAP:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            value = _parse_value(text)
            name = KEYMAP[key]
            if name in _TUPLE_FIELDS and value is not None \
                    and not isinstance(value, tuple):
                value = (value,)
            setattr(cfg, name, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.scenario not in ("iid", "one_ring"):
        raise ValueError(f"scenario must be 'iid' or 'one_ring', "
                         f"got {cfg.scenario!r}")
    if not cfg.snr_db:
        raise ValueError("snr_db must list at least one point")
    if cfg.n_csit < 1 or cfg.n_realizations < 1:
        raise ValueError("csit_draws and realizations must be >= 1")
    bad = [m for m in cfg.methods if m not in ("meta", "direct", "fixed")]
    if bad:
        raise ValueError(f"unknown methods {bad}; choose from meta, direct, fixed")
    if not cfg.methods:
        raise ValueError("methods must list at least one optimizer")
    if cfg.scenario == "iid":
        if "fixed" in cfg.methods:
            raise ValueError("the fixed-direction search needs the one_ring "
                             "scenario")
    else:
        if cfg.azimuths is None:
            raise ValueError("one_ring scenario needs ring.azimuths")
        if len(cfg.azimuths) != cfg.n_groups:
            raise ValueError(f"ring.azimuths lists {len(cfg.azimuths)} angles "
                             f"for {cfg.n_groups} groups")
        if cfg.n_users % cfg.n_groups != 0:
            raise ValueError("n_users must split evenly across n_groups")
    if cfg.n_threads < 1:
        raise ValueError("threads must be >= 1")


@dataclass
class CellResult:
    """One optimizer on one channel estimate at one SNR point."""

    method: str
    snr_idx: int
    snr_db: float
    csit_idx: int
    asr: float
    wall_time_s: float
    q_common: float
    q_group: float
    q_private: float
    start_asr: float = None


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list
    schema_version: int = SCHEMA_VERSION

    def summary_rows(self):
        """Aggregate cells into one row per (method, SNR point)."""
        rows = []
        for method in self.config.methods:
            for idx, snr in enumerate(self.config.snr_db):
                sel = [c for c in self.cells
                       if c.method == method and c.snr_idx == idx]
                if not sel:
                    continue
                asr = np.array([c.asr for c in sel])
                rows.append({
                    "method": method,
                    "snr_db": float(snr),
                    "esr_mean": float(np.mean(asr)),
                    "esr_std": float(np.std(asr, ddof=1)) if len(sel) > 1 else 0.0,
                    "time_mean_s": float(np.mean([c.wall_time_s for c in sel])),
                    "q_common": float(np.mean([c.q_common for c in sel])),
                    "q_group": float(np.mean([c.q_group for c in sel])),
                    "q_private": float(np.mean([c.q_private for c in sel])),
                })
        return rows


def _build_layout(cfg: ExperimentConfig) -> StreamLayout:
    if cfg.scenario == "iid":
        return StreamLayout.one_layer(cfg.n_tx, cfg.n_users)
    return StreamLayout.hierarchical(cfg.n_tx, cfg.n_users, cfg.n_groups)


def _effective_splits(cfg: ExperimentConfig, layout: StreamLayout) -> tuple:
    if cfg.meta_splits is not None:
        return tuple(float(s) for s in cfg.meta_splits)
    if layout.mode == "one_layer":
        return (0.9, 0.0, 0.1)
    return (0.45, 0.45, 0.10)


def _run_cell(cfg: ExperimentConfig, layout: StreamLayout,
              snr_idx: int, csit_idx: int) -> list:
    """All requested methods on one freshly drawn estimate."""
    p_t = 10.0 ** (cfg.snr_db[snr_idx] / 10.0)
    ss = np.random.SeedSequence([cfg.master_seed, snr_idx, csit_idx])
    cell = RngStream(int(ss.generate_state(1, np.uint64)[0]))
    ens_rng = cell.child(0)
    net_seed = cell.child(1).seed

    n_eval = cfg.n_realizations if cfg.redraw_eval else 0
    if cfg.scenario == "iid":
        model = IidCsitModel(n_tx=cfg.n_tx, n_users=cfg.n_users,
                             alpha=cfg.alpha, error_power=cfg.error_power)
        ens, eval_ens = model.draw_pair(ens_rng, p_t, cfg.n_realizations,
                                        n_eval)
    else:
        model = OneRingModel(n_tx=cfg.n_tx, azimuths=cfg.azimuths,
                             spread=cfg.spread, tau2=cfg.tau2,
                             spacing=cfg.spacing)
        ens, eval_ens = model.draw_pair(ens_rng, layout, cfg.n_realizations,
                                        n_eval)

    def scored(best_asr, precoder):
        if eval_ens is None:
            return float(best_asr)
        return float(saf_report(precoder, eval_ens, layout).avg_sum_rate)

    out = []
    snr = float(cfg.snr_db[snr_idx])
    for method in cfg.methods:
        if method == "meta":
            mc = MetaOptConfig(n_iters=cfg.meta_iters, lr=cfg.meta_lr,
                               hidden=tuple(cfg.meta_hidden), seed=net_seed,
                               smooth_temp=cfg.meta_smooth_temp,
                               splits=cfg.meta_splits, track_history=False)
            r = run_meta_opt(layout, ens, p_t, mc)
            qc, qg, qp = _effective_splits(cfg, layout)
            out.append(CellResult(method, snr_idx, snr, csit_idx,
                                  scored(r.best_asr, r.best_precoder),
                                  r.wall_time_s, qc, qg, qp,
                                  start_asr=r.start_asr))
        elif method == "direct":
            r = run_direct_adam(layout, ens, p_t, n_iters=cfg.direct_iters,
                                lr=cfg.direct_lr, splits=cfg.meta_splits,
                                track_history=False)
            qc, qg, qp = _effective_splits(cfg, layout)
            out.append(CellResult(method, snr_idx, snr, csit_idx,
                                  scored(r.best_asr, r.best_precoder),
                                  r.wall_time_s, qc, qg, qp,
                                  start_asr=r.start_asr))
        elif method == "fixed":
            r = run_fixed_direction(layout, ens, model, p_t,
                                    step=cfg.fixed_step, rank=cfg.fixed_rank)
            out.append(CellResult(method, snr_idx, snr, csit_idx,
                                  scored(r.best_asr, r.best_precoder),
                                  r.wall_time_s, r.best_split.common,
                                  r.best_split.group, r.best_split.private))
    return out


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run every (SNR point, estimate) cell, optionally across threads."""
    validate_config(cfg)
    layout = _build_layout(cfg)
    n_threads = int(os.environ.get(ENV_THREADS, cfg.n_threads))
    jobs = [(s, c) for s in range(len(cfg.snr_db)) for c in range(cfg.n_csit)]
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            chunks = list(pool.map(
                lambda sc: _run_cell(cfg, layout, sc[0], sc[1]), jobs))
    else:
        chunks = [_run_cell(cfg, layout, s, c) for s, c in jobs]
    cells = [cell for chunk in chunks for cell in chunk]
    cells.sort(key=lambda c: (c.snr_idx, c.csit_idx,
                              cfg.methods.index(c.method)))
    return SweepResult(config=cfg, cells=cells)


def write_reports(result: SweepResult, out_dir=None) -> dict:
    """Write results.csv (aggregates) and results.json (all cells).

    Returns the paths written. ``out_dir`` falls back to the config value;
    the RSMETA_OUT_DIR environment variable overrides both.
    """
    out_dir = os.environ.get(ENV_OUT_DIR, out_dir or result.config.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "results.json")

    rows = result.summary_rows()
    fields = ["method", "snr_db", "esr_mean", "esr_std", "time_mean_s",
              "q_common", "q_group", "q_private"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)

    payload = {
        "schema_version": result.schema_version,
        "config": dataclasses.asdict(result.config),
        "cells": [dataclasses.asdict(c) for c in result.cells],
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return {"csv": csv_path, "json": json_path}
