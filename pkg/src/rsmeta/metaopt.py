"""Training-free network-driven precoder optimization.

One run owns one channel estimate: the update network starts from scratch,
proposes a precoder update from the frozen start-point gradient, and its
parameters (not the precoder) take Adam steps against the averaged-rate
objective. The start-point gradient is computed once and reused every
iteration, so each iteration costs one recorded forward/backward pass
through network and objective. The best candidate ever evaluated, the
start point included, is what a run returns.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .adam import AdamState, adam_step
from .channel import ChannelEnsemble
from .gradients import (grad_wrt_precoder, grad_wrt_theta, loss_from_view,
                        precoder_to_view, view_length, view_to_precoder)
from .layout import StreamLayout
from .linalg import RngStream, svd_dominant
from .network import MetaNetParams, init_meta_net
from .rates import PrecoderMatrix

__all__ = ["MetaOptConfig", "RunResult", "init_precoder", "project",
           "run_meta_opt"]


@dataclass
class MetaOptConfig:
    """Knobs for one optimization run.

    ``lr`` is the Adam rate on network parameters; the precoder itself is
    never stepped directly. ``smooth_temp`` switches the minima inside the
    objective to a smooth log-sum-exp surrogate for training gradients
    (reported rates always use the hard minimum); None keeps the hard
    minimum with its lowest-index subgradient everywhere.
    """

    n_iters: int = 500
    lr: float = 1e-3
    hidden: tuple = (50, 50)
    seed: int = 0
    smooth_temp: float = None
    splits: tuple = None
    track_history: bool = True


@dataclass
class RunResult:
    """Outcome of one optimizer run on one channel estimate."""

    best_asr: float
    best_precoder: PrecoderMatrix
    start_asr: float
    asr_history: np.ndarray
    wall_time_s: float
    n_iters: int
    params: MetaNetParams = None


def project(p, p_t: float):
    """Scale a precoder back onto the power ball if it exceeds the budget.

    Inside the budget the precoder is returned unchanged, not normalized up.
    """
    if not p_t > 0:
        raise ValueError(f"p_t must be positive, got {p_t}")
    if isinstance(p, PrecoderMatrix):
        tr = p.total_power
        if tr > p_t:
            return p.with_matrix(p.matrix * np.sqrt(p_t / tr))
        return p
    mat = np.asarray(p, dtype=complex)
    tr = float(np.sum(np.abs(mat) ** 2))
    if tr > p_t:
        return mat * np.sqrt(p_t / tr)
    return mat


def init_precoder(layout: StreamLayout, estimate: np.ndarray, p_t: float,
                  splits: tuple = None) -> PrecoderMatrix:
    """Matched-direction starting point from the channel estimate.

    The common column points along the dominant left singular direction of
    the whole estimate; each group column (hierarchical only) along the
    dominant direction of that group's columns; each private column along
    the user's own estimate. Power fractions ``splits = (common, group,
    private)`` share ``p_t``, the group share splitting equally across
    groups and the private share equally across users.
    """
    est = np.asarray(estimate, dtype=complex)
    if est.shape != (layout.n_tx, layout.n_users):
        raise ValueError(f"estimate shape {est.shape} does not match layout")
    if not p_t > 0:
        raise ValueError(f"p_t must be positive, got {p_t}")
    if splits is None:
        splits = (0.9, 0.0, 0.1) if layout.mode == "one_layer" \
            else (0.45, 0.45, 0.10)
    q_c, q_g, q_p = (float(s) for s in splits)
    if min(q_c, q_g, q_p) < 0 or q_c + q_g + q_p > 1.0 + 1e-12:
        raise ValueError(f"splits must be nonnegative with sum <= 1, "
                         f"got {splits}")
    if layout.mode == "one_layer" and q_g != 0.0:
        raise ValueError("one-layer mode cannot put power on group streams")
    if not np.any(est):
        raise ValueError("cannot build a starting precoder from a zero estimate")
    mat = np.zeros((layout.n_tx, layout.n_streams), dtype=complex)
    mat[:, layout.col_common] = svd_dominant(est) * np.sqrt(q_c * p_t)
    if layout.mode == "hierarchical" and q_g > 0:
        per_group = q_g * p_t / layout.n_groups
        for g in range(layout.n_groups):
            sub = est[:, list(layout.group_members(g))]
            mat[:, layout.col_group(g)] = svd_dominant(sub) * np.sqrt(per_group)
    per_user = q_p * p_t / layout.n_users
    for k in range(layout.n_users):
        hk = est[:, k]
        nrm = np.linalg.norm(hk)
        if nrm == 0:
            raise ValueError(f"user {k} has a zero channel estimate")
        mat[:, layout.col_private(k)] = (hk / nrm) * np.sqrt(per_user)
    return PrecoderMatrix(matrix=mat, layout=layout)


def run_meta_opt(layout: StreamLayout, ens: ChannelEnsemble, p_t: float,
                 config: MetaOptConfig = None) -> RunResult:
    """Optimize one precoder for one channel estimate.

    The candidate at iteration i is the projected network proposal under the
    current parameters; with the zero-initialized output layer the very
    first candidate equals the start point, and parameters move only as the
    objective rewards it. Reported rates always use the hard minimum even
    when training runs on the smooth surrogate.
    """
    cfg = config or MetaOptConfig()
    if cfg.n_iters < 1:
        raise ValueError(f"n_iters must be >= 1, got {cfg.n_iters}")
    t0 = time.perf_counter()

    p0 = init_precoder(layout, ens.estimate, p_t, cfg.splits)
    p0_view = precoder_to_view(p0, layout)
    loss0, g0 = grad_wrt_precoder(p0, ens, layout, cfg.smooth_temp)
    if cfg.smooth_temp is None:
        start_asr = -loss0
    else:
        start_asr = -loss_from_view(p0_view, ens, layout, None)

    dim = view_length(layout)
    params = init_meta_net(RngStream(cfg.seed), dim, cfg.hidden)
    dims = params.dims
    theta = params.to_vector()
    opt = AdamState.zeros(theta.size)

    best_asr = start_asr
    best_view = p0_view
    history = [start_asr] if cfg.track_history else None

    for _ in range(cfg.n_iters):
        params = MetaNetParams.from_vector(theta, dims)
        loss_i, g_theta, cand = grad_wrt_theta(
            params, p0_view, g0, ens, layout, p_t, cfg.smooth_temp)
        if cfg.smooth_temp is None:
            asr_i = -loss_i
        else:
            asr_i = -loss_from_view(cand, ens, layout, None)
        if asr_i > best_asr:
            best_asr = asr_i
            best_view = cand
        if history is not None:
            history.append(asr_i)
        theta = theta + adam_step(opt, g_theta, cfg.lr)

    wall = time.perf_counter() - t0
    best = PrecoderMatrix(matrix=view_to_precoder(best_view, layout),
                          layout=layout)
    return RunResult(best_asr=float(best_asr), best_precoder=best,
                     start_asr=float(start_asr),
                     asr_history=np.asarray(history if history is not None
                                            else [start_asr]),
                     wall_time_s=wall, n_iters=cfg.n_iters,
                     params=MetaNetParams.from_vector(theta, dims))
