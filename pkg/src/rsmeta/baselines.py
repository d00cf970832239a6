"""Reference optimizers the network-driven method is measured against.

* Direct first-order search: Adam on the precoder entries themselves,
  gradient recomputed every iteration, power projection after every step.
  Same objective, same start point, same Adam constants as the
  network-driven run, so any gap between them is the method and not the
  plumbing.

* Fixed-direction beamforming with an exhaustive power-split search:
  column directions are built once from second-order statistics and the
  channel estimate, and only the power partition across layers is searched
  on a lattice. This is the cheap statistics-only approach for the grouped
  scenario; it needs no per-realization gradients at all.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .adam import AdamState, adam_step
from .channel import ChannelEnsemble, OneRingModel
from .gradients import grad_wrt_precoder, loss_from_view, project_view, \
    precoder_to_view, view_length, view_to_precoder
from .layout import StreamLayout
from .linalg import herm_eig, svd_dominant
from .metaopt import RunResult, init_precoder
from .rates import PrecoderMatrix

__all__ = ["PowerSplit", "power_split_grid", "run_direct_adam",
           "FixedDirectionResult", "run_fixed_direction"]

_LN2 = float(np.log(2.0))


# ---------------------------------------------------------------------------
# direct Adam on the precoder
# ---------------------------------------------------------------------------

def run_direct_adam(layout: StreamLayout, ens: ChannelEnsemble, p_t: float,
                    n_iters: int = 2000, lr: float = 0.02,
                    splits: tuple = None, smooth_temp: float = None,
                    track_history: bool = True) -> RunResult:
    """Adam directly on the precoder view, projected after every step."""
    if n_iters < 1:
        raise ValueError(f"n_iters must be >= 1, got {n_iters}")
    t0 = time.perf_counter()
    p0 = init_precoder(layout, ens.estimate, p_t, splits)
    v = precoder_to_view(p0, layout)
    opt = AdamState.zeros(view_length(layout))

    def hard_asr(view, loss):
        if smooth_temp is None:
            return -loss
        return -loss_from_view(view, ens, layout, None)

    loss0, g = grad_wrt_precoder(p0, ens, layout, smooth_temp)
    start_asr = hard_asr(v, loss0)
    best_asr, best_view = start_asr, v
    history = [start_asr] if track_history else None

    for i in range(n_iters):
        v = project_view(v + adam_step(opt, g, lr), p_t)
        loss_i, g = grad_wrt_precoder(view_to_precoder(v, layout), ens,
                                      layout, smooth_temp)
        asr_i = hard_asr(v, loss_i)
        if asr_i > best_asr:
            best_asr, best_view = asr_i, v
        if history is not None:
            history.append(asr_i)

    wall = time.perf_counter() - t0
    best = PrecoderMatrix(matrix=view_to_precoder(best_view, layout),
                          layout=layout)
    return RunResult(best_asr=float(best_asr), best_precoder=best,
                     start_asr=float(start_asr),
                     asr_history=np.asarray(history if history is not None
                                            else [start_asr]),
                     wall_time_s=wall, n_iters=n_iters, params=None)


# ---------------------------------------------------------------------------
# fixed directions with exhaustive power-split search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerSplit:
    """Fractions of the power budget per layer; private splits per user."""

    common: float
    group: float

    @property
    def private(self) -> float:
        # clamp: on lattice points with common + group == 1 the float
        # remainder can land a few ulp below zero
        return max(0.0, 1.0 - self.common - self.group)

    def __post_init__(self):
        if self.common < -1e-12 or self.group < -1e-12 \
                or self.common + self.group > 1.0 + 1e-12:
            raise ValueError(f"invalid split ({self.common}, {self.group})")


def power_split_grid(step: float = 0.05, with_group: bool = True):
    """All lattice splits with the given step, in canonical order.

    Canonical order is ascending common fraction, then ascending group
    fraction; exhaustive searches keep the first maximizer, so ties resolve
    to the smallest split in this order. Fractions are built on an integer
    lattice so the step never accumulates rounding.
    """
    n = round(1.0 / step)
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step must divide 1 evenly, got {step}")
    grid = []
    for i in range(n + 1):
        j_max = (n - i) if with_group else 0
        for j in range(j_max + 1):
            grid.append(PowerSplit(common=i / n, group=j / n))
    return grid


def _asr_of_powers(powers: np.ndarray, layout: StreamLayout,
                   noise: float) -> float:
    """Averaged sum rate from precomputed |h^H p|^2 values (m, k, streams)."""
    g = layout.n_groups
    k = layout.n_users
    rows = np.arange(k)
    t_com = powers[:, :, 0]
    t_grp = np.sum(powers[:, :, 1:1 + g], axis=2)
    t_prv = np.sum(powers[:, :, 1 + g:], axis=2)
    den_c = t_grp + t_prv + noise
    own_g = powers[:, rows, 1 + np.asarray(layout.group_of)]
    den_g = den_c - own_g
    own_p = powers[:, rows, 1 + g + rows]
    den_p = den_g - own_p
    rc = np.mean(np.log1p(t_com / den_c) * (1.0 / _LN2), axis=0)
    rg = np.mean(np.log1p(own_g / den_g) * (1.0 / _LN2), axis=0)
    rp = np.mean(np.log1p(own_p / den_p) * (1.0 / _LN2), axis=0)
    asr = float(np.min(rc)) + float(np.sum(rp))
    for gi in range(g):
        asr += float(np.min(rg[np.asarray(layout.group_members(gi))]))
    return asr


@dataclass
class FixedDirectionResult:
    best_asr: float
    best_precoder: PrecoderMatrix
    best_split: PowerSplit
    wall_time_s: float
    n_evaluated: int


def run_fixed_direction(layout: StreamLayout, ens: ChannelEnsemble,
                        model: OneRingModel, p_t: float, step: float = 0.05,
                        rank: int = None) -> FixedDirectionResult:
    """Statistics-based directions plus exhaustive power-split search.

    Directions, built once: the global common column along the dominant
    singular direction of the estimate; each group column along the top
    eigenvector of that group's antenna correlation; private columns by
    regularized zero-forcing inside each group on a rank-limited effective
    channel (the estimate compressed onto the top ``rank`` eigenvectors of
    the group correlation). Then every lattice power split is scored on the
    ensemble and the best one wins; per-stream powers scale precomputed
    unit-direction gains, so each split costs a few elementwise ops.
    """
    if layout.mode != "hierarchical":
        raise ValueError("fixed-direction search needs a hierarchical layout")
    if layout.n_groups != model.n_groups:
        raise ValueError("model ring count does not match layout groups")
    t0 = time.perf_counter()
    n_grp = layout.n_groups
    n_usr = layout.n_users
    if rank is None:
        rank = int(np.ceil(layout.n_tx / (2 * n_grp)))
    if not 1 <= rank <= layout.n_tx:
        raise ValueError(f"rank must lie in [1, {layout.n_tx}], got {rank}")

    est = ens.estimate
    if not np.any(est):
        raise ValueError("cannot build directions from a zero estimate")
    dirs = np.zeros((layout.n_tx, layout.n_streams), dtype=complex)
    dirs[:, layout.col_common] = svd_dominant(est)
    reg = n_usr / p_t
    for g in range(n_grp):
        w, vecs = herm_eig(model.correlation(g))
        dirs[:, layout.col_group(g)] = vecs[:, 0]
        members = list(layout.group_members(g))
        u_r = vecs[:, :rank]                       # (n_tx, r)
        f = u_r.conj().T @ est[:, members]         # (r, |members|)
        m = np.linalg.solve(f @ f.conj().T + reg * np.eye(rank), f)
        for col, k in enumerate(members):
            d = u_r @ m[:, col]
            nrm = np.linalg.norm(d)
            if nrm < 1e-12:
                raise ValueError(
                    f"zero-forcing direction degenerated for user {k}")
            dirs[:, layout.col_private(k)] = d / nrm

    # unit-direction gains once; each split only rescales them
    z = np.einsum("mik,is->mks", np.conj(ens.realizations), dirs)
    unit_gain = z.real ** 2 + z.imag ** 2

    best_asr = -np.inf
    best_split = None
    n_eval = 0
    for split in power_split_grid(step, with_group=True):
        w = np.empty(layout.n_streams)
        w[0] = split.common * p_t
        w[1:1 + n_grp] = split.group * p_t / n_grp
        w[1 + n_grp:] = split.private * p_t / n_usr
        asr = _asr_of_powers(unit_gain * w[None, None, :], layout,
                             ens.noise_power)
        n_eval += 1
        if asr > best_asr:
            best_asr = asr
            best_split = split
    wall = time.perf_counter() - t0

    w = np.empty(layout.n_streams)
    w[0] = best_split.common * p_t
    w[1:1 + n_grp] = best_split.group * p_t / n_grp
    w[1 + n_grp:] = best_split.private * p_t / n_usr
    best = PrecoderMatrix(matrix=dirs * np.sqrt(w)[None, :], layout=layout)
    return FixedDirectionResult(best_asr=float(best_asr), best_precoder=best,
                                best_split=best_split, wall_time_s=wall,
                                n_evaluated=n_eval)
