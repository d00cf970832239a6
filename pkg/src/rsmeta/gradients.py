"""Objective gradients and their finite-difference verification.

Two gradients drive everything downstream:

* the gradient of the averaged-rate loss with respect to the precoder,
  taken in a flattened real view of the active columns; and
* the gradient of the same loss, evaluated at the network-proposed and
  power-projected candidate, with respect to the network parameters.

The view convention is fixed package-wide: active columns only, column by
column, real and imaginary parts interleaved (even slots real, odd slots
imaginary). The squared view norm then equals the precoder power, which is
what makes the power projection a one-line rescale in view space.

Every gradient here is checkable against central differences of the plain
(non-recorded) evaluation path; :func:`gradcheck_suite` packages that with
instance guards against minimum ties and the projection branch boundary,
the two places the objective is only piecewise smooth.
"""
from __future__ import annotations

import numpy as np

from .autodiff import (Var, affine, backward, constant, csq_project,
                       index_pairs, log1p_v, min_over, relu_v, reshape_v,
                       slice_strided, softmin_over, sqrt_v, square_v,
                       take_last, transpose2d, vmean, vsum)
from .channel import ChannelEnsemble, IidCsitModel
from .layout import StreamLayout
from .linalg import RngStream, gaussian_matrix
from .network import MetaNetParams, init_meta_net, mlp_forward
from .rates import PrecoderMatrix

__all__ = ["view_length", "precoder_to_view", "view_to_precoder",
           "loss_from_view", "candidate_view", "project_view",
           "grad_wrt_precoder", "grad_wrt_theta",
           "finite_diff_check", "gradcheck_suite"]

_LN2 = float(np.log(2.0))


# ---------------------------------------------------------------------------
# real view of the active precoder columns
# ---------------------------------------------------------------------------

def view_length(layout: StreamLayout) -> int:
    """Real degrees of freedom: 2 per complex entry of each active column."""
    return 2 * layout.n_tx * len(layout.active_streams)


def _matrix_of(p) -> np.ndarray:
    if isinstance(p, PrecoderMatrix):
        return p.matrix
    return np.asarray(p, dtype=complex)


def _interleave(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    flat_re = re.T.ravel()
    flat_im = im.T.ravel()
    v = np.empty(2 * flat_re.size)
    v[0::2] = flat_re
    v[1::2] = flat_im
    return v


def _deinterleave(v: np.ndarray, n_tx: int) -> np.ndarray:
    flat = v[0::2] + 1j * v[1::2]
    return flat.reshape(-1, n_tx).T


def precoder_to_view(p, layout: StreamLayout) -> np.ndarray:
    """Flatten the active columns into the package-wide real view."""
    mat = _matrix_of(p)
    sub = mat[:, list(layout.active_streams)]
    return _interleave(sub.real, sub.imag)


def view_to_precoder(v: np.ndarray, layout: StreamLayout) -> np.ndarray:
    """Inverse of :func:`precoder_to_view`; inactive columns come back zero."""
    v = np.asarray(v, dtype=float)
    if v.size != view_length(layout):
        raise ValueError(f"view length {v.size} does not match layout "
                         f"(expected {view_length(layout)})")
    full = np.zeros((layout.n_tx, layout.n_streams), dtype=complex)
    full[:, list(layout.active_streams)] = _deinterleave(v, layout.n_tx)
    return full


def project_view(v: np.ndarray, p_t: float) -> np.ndarray:
    """Scale the view back onto the power ball if it exceeds the budget."""
    tr = float(v @ v)
    if tr > p_t:
        return v * np.sqrt(p_t / tr)
    return v


# ---------------------------------------------------------------------------
# plain evaluation path (mirrors the recorded path operation for operation)
# ---------------------------------------------------------------------------

def _avg_rate_arrays(mat_act: np.ndarray, ens: ChannelEnsemble,
                     layout: StreamLayout):
    """Averaged per-user rates (common, group or None, private) for the
    active-column matrix. Same arithmetic order as the recorded path."""
    h = ens.realizations
    z = np.einsum("mik,is->mks", np.conj(h), mat_act)
    powers = z.real ** 2 + z.imag ** 2
    k = layout.n_users
    g = layout.n_groups
    hier = layout.mode == "hierarchical"
    rows = np.arange(k)
    if hier:
        prv_cols = np.arange(1 + g, 1 + g + k)
        t_grp = np.sum(powers[:, :, 1:1 + g], axis=2)
        t_prv = np.sum(powers[:, :, 1 + g:1 + g + k], axis=2)
        den_c = t_grp + t_prv + ens.noise_power
        own_g = powers[:, rows, 1 + np.asarray(layout.group_of)]
        den_g = den_c - own_g
    else:
        prv_cols = np.arange(1, 1 + k)
        t_prv = np.sum(powers[:, :, 1:1 + k], axis=2)
        den_c = t_prv + ens.noise_power
    own_p = powers[:, rows, prv_cols]
    t_com = np.sum(powers[:, :, 0:1], axis=2)
    sinr_c = t_com / den_c
    rc = np.mean(np.log1p(sinr_c) * (1.0 / _LN2), axis=0)
    if hier:
        sinr_g = own_g / den_g
        den_p = den_g - own_p
        rg = np.mean(np.log1p(sinr_g) * (1.0 / _LN2), axis=0)
    else:
        den_p = den_c - own_p
        rg = None
    sinr_p = own_p / den_p
    rp = np.mean(np.log1p(sinr_p) * (1.0 / _LN2), axis=0)
    return rc, rg, rp


def _softmin(x: np.ndarray, temperature: float) -> float:
    m0 = np.min(x)
    return float(m0 - temperature * np.log(np.sum(np.exp(-(x - m0) / temperature))))


def loss_from_view(v: np.ndarray, ens: ChannelEnsemble, layout: StreamLayout,
                   smooth_temp: float = None) -> float:
    """Negative averaged sum rate of the precoder encoded by the view."""
    mat_act = _deinterleave(np.asarray(v, dtype=float), layout.n_tx)
    rc, rg, rp = _avg_rate_arrays(mat_act, ens, layout)
    red = (lambda x: _softmin(x, smooth_temp)) if smooth_temp else \
        (lambda x: float(np.min(x)))
    asr = red(rc) + float(np.sum(rp))
    if rg is not None:
        for g in range(layout.n_groups):
            asr += red(rg[np.asarray(layout.group_members(g))])
    return -asr


def candidate_view(params: MetaNetParams, p0_view: np.ndarray,
                   g0_view: np.ndarray, p_t: float) -> np.ndarray:
    """Network proposal applied to the start point, then power-projected."""
    delta = mlp_forward(params, g0_view)
    return project_view(np.asarray(p0_view, dtype=float) + delta, p_t)


# ---------------------------------------------------------------------------
# recorded evaluation path
# ---------------------------------------------------------------------------

def _tape_loss(pre: Var, pim: Var, ens: ChannelEnsemble,
               layout: StreamLayout, smooth_temp: float = None) -> Var:
    k = layout.n_users
    g = layout.n_groups
    hier = layout.mode == "hierarchical"
    powers = csq_project(pre, pim, ens.realizations)
    rows = np.arange(k)
    t_com = vsum(take_last(powers, np.arange(0, 1)), axis=2)
    if hier:
        prv_cols = np.arange(1 + g, 1 + g + k)
        t_grp = vsum(take_last(powers, np.arange(1, 1 + g)), axis=2)
        t_prv = vsum(take_last(powers, prv_cols), axis=2)
        den_c = t_grp + t_prv + ens.noise_power
        own_g = index_pairs(powers, rows, 1 + np.asarray(layout.group_of))
        den_g = den_c - own_g
    else:
        prv_cols = np.arange(1, 1 + k)
        t_prv = vsum(take_last(powers, prv_cols), axis=2)
        den_c = t_prv + ens.noise_power
    own_p = index_pairs(powers, rows, prv_cols)
    sinr_c = t_com / den_c
    rc = vmean(log1p_v(sinr_c) * (1.0 / _LN2), axis=0)
    if hier:
        sinr_g = own_g / den_g
        den_p = den_g - own_p
        rg = vmean(log1p_v(sinr_g) * (1.0 / _LN2), axis=0)
    else:
        den_p = den_c - own_p
        rg = None
    sinr_p = own_p / den_p
    rp = vmean(log1p_v(sinr_p) * (1.0 / _LN2), axis=0)
    red = (lambda x: softmin_over(x, 0, smooth_temp)) if smooth_temp else \
        (lambda x: min_over(x, 0))
    asr = red(rc) + vsum(rp)
    if rg is not None:
        for gi in range(layout.n_groups):
            asr = asr + red(take_last(rg, np.asarray(layout.group_members(gi))))
    return -asr


def grad_wrt_precoder(p, ens: ChannelEnsemble, layout: StreamLayout,
                      smooth_temp: float = None):
    """Loss and its gradient with respect to the precoder view.

    Returns ``(loss, grad)`` with ``grad`` in view coordinates, so it can be
    fed straight into the update network or a first-order step.
    """
    mat = _matrix_of(p)
    sub = mat[:, list(layout.active_streams)]
    pre = Var(sub.real.copy())
    pim = Var(sub.imag.copy())
    loss = _tape_loss(pre, pim, ens, layout, smooth_temp)
    backward(loss)
    gre = pre.grad if pre.grad is not None else np.zeros_like(pre.value)
    gim = pim.grad if pim.grad is not None else np.zeros_like(pim.value)
    return float(loss.value), _interleave(gre, gim)


def _tape_forward_net(w_vars, b_vars, x: Var) -> Var:
    h = x
    last = len(w_vars) - 1
    for i, (w, b) in enumerate(zip(w_vars, b_vars)):
        h = affine(w, h, b)
        if i != last:
            h = relu_v(h)
    return h


def grad_wrt_theta(params: MetaNetParams, p0, g0_view: np.ndarray,
                   ens: ChannelEnsemble, layout: StreamLayout, p_t: float,
                   smooth_temp: float = None):
    """Differentiate the full pipeline with respect to network parameters.

    Pipeline: frozen gradient view in, network proposal out, add to the
    start point, project onto the power ball, evaluate the loss. The start
    point and the input gradient are constants here; only the network
    parameters carry gradient.

    Returns ``(loss, grad_theta, cand_view)`` where ``loss`` is the loss at
    the projected candidate, ``grad_theta`` is flattened in parameter-vector
    order, and ``cand_view`` is the candidate in view coordinates.
    """
    p0_view = p0 if np.asarray(p0).ndim == 1 else precoder_to_view(p0, layout)
    w_vars = [Var(w) for w in params.weights]
    b_vars = [Var(b) for b in params.biases]
    delta = _tape_forward_net(w_vars, b_vars, constant(np.asarray(g0_view, float)))
    v = constant(np.asarray(p0_view, dtype=float)) + delta
    tr = vsum(square_v(v))
    if float(tr.value) > p_t:
        v = v * sqrt_v(constant(float(p_t)) / tr)
    n_tx, s_act = layout.n_tx, len(layout.active_streams)
    pre = transpose2d(reshape_v(slice_strided(v, 0, 2), (s_act, n_tx)))
    pim = transpose2d(reshape_v(slice_strided(v, 1, 2), (s_act, n_tx)))
    loss = _tape_loss(pre, pim, ens, layout, smooth_temp)
    backward(loss)
    parts = []
    for w, b in zip(w_vars, b_vars):
        parts.append((w.grad if w.grad is not None else
                      np.zeros_like(w.value)).ravel())
        parts.append(b.grad if b.grad is not None else np.zeros_like(b.value))
    return float(loss.value), np.concatenate(parts), v.value.copy()


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def finite_diff_check(f, x0: np.ndarray, analytic: np.ndarray, step: float):
    """Central-difference check of a gradient vector.

    Returns ``(max_relerr, fd)``. The per-coordinate relative error uses a
    floor built from the largest gradient entry, so coordinates that are
    tiny compared to the overall gradient scale cannot dominate the score
    through pure roundoff.
    """
    x0 = np.asarray(x0, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    if x0.shape != analytic.shape:
        raise ValueError("analytic gradient shape does not match the point")
    fd = np.empty_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        fd[i] = (f(xp) - f(xm)) / (2.0 * step)
    gmax = max(np.max(np.abs(analytic)), np.max(np.abs(fd)), 0.0)
    den = np.maximum(np.abs(analytic), np.abs(fd)) + 1e-3 * gmax + 1e-12
    relerr = np.abs(analytic - fd) / den
    return float(np.max(relerr)), fd


# ---------------------------------------------------------------------------
# packaged verification battery
# ---------------------------------------------------------------------------

def _min_gap(x: np.ndarray) -> float:
    if x.size < 2:
        return np.inf
    s = np.sort(x)
    return float(s[1] - s[0])


def _tie_gaps_ok(v, ens, layout, gap=1e-3) -> bool:
    mat_act = _deinterleave(np.asarray(v, float), layout.n_tx)
    rc, rg, _ = _avg_rate_arrays(mat_act, ens, layout)
    if _min_gap(rc) < gap:
        return False
    if rg is not None:
        for g in range(layout.n_groups):
            if _min_gap(rg[np.asarray(layout.group_members(g))]) < gap:
                return False
    return True


def _random_instance(rng: RngStream, hierarchical: bool, p_t: float = 4.0):
    """Small random problem: sizes up to 4 antennas, 4 users, 2 groups,
    8 realizations."""
    n_tx = rng.integers(2, 5)
    if hierarchical:
        n_users = 2 * rng.integers(1, 3)       # even, so groups split evenly
        layout = StreamLayout.hierarchical(n_tx=n_tx, n_users=n_users,
                                           n_groups=2)
    else:
        layout = StreamLayout.one_layer(n_tx=n_tx, n_users=rng.integers(2, 5))
    n_draws = rng.integers(4, 9)
    model = IidCsitModel(n_tx=layout.n_tx, n_users=layout.n_users,
                         error_power=0.25)
    ens = model.draw(rng, p_t, n_draws)
    mat = gaussian_matrix(rng, layout.n_tx, layout.n_streams, 1.0)
    if layout.mode == "one_layer":
        mat[:, 1:1 + layout.n_groups] = 0.0
    mat *= np.sqrt(0.8 * p_t / np.sum(np.abs(mat) ** 2))
    return layout, ens, mat


def gradcheck_suite(seed: int = 0, n_instances: int = 50,
                    smooth_temp: float = None,
                    precoder_tol: float = 1e-5, precoder_step: float = 1e-6,
                    theta_tol: float = 1e-4, theta_step: float = 1e-5,
                    max_tries: int = 64) -> dict:
    """Finite-difference battery over small random instances.

    Each instance draws random sizes, channels, a precoder, and a small
    update network, then checks both the precoder gradient and the
    network-parameter gradient against central differences. Single-layer
    and grouped modes alternate. Instances that land too close to a
    minimum tie or to the projection branch boundary are redrawn, since
    central differences straddle the kink there and the comparison would
    be meaningless rather than wrong.
    """
    if n_instances < 1:
        raise ValueError(f"n_instances must be >= 1, got {n_instances}")
    root = RngStream(seed)
    p_t = 4.0
    report = {"precoder": [], "theta": [],
              "precoder_tol": precoder_tol, "theta_tol": theta_tol}

    for inst in range(n_instances):
        hier = inst % 2 == 1
        for attempt in range(max_tries):
            rng = root.child(inst, attempt)
            layout, ens, mat = _random_instance(rng, hier, p_t)
            v0 = precoder_to_view(mat, layout)
            if smooth_temp is None and not _tie_gaps_ok(v0, ens, layout):
                continue
            _, g0 = grad_wrt_precoder(mat, ens, layout, smooth_temp)

            params = init_meta_net(rng, view_length(layout), hidden=(8,))
            # the zero output layer would zero every hidden-layer gradient,
            # so give it small random weights for a meaningful check
            bound = 0.1 / np.sqrt(params.weights[-1].shape[1])
            params.weights[-1] = rng.uniform(-bound, bound,
                                             params.weights[-1].shape)
            params.biases[-1] = rng.uniform(-bound, bound,
                                            params.biases[-1].shape)
            raw = v0 + mlp_forward(params, g0)
            # branch-boundary guard on the unprojected power: differences
            # must not straddle the point where the projection kicks in
            if abs(float(raw @ raw) - p_t) / p_t < 1e-3:
                continue
            cand = project_view(raw, p_t)
            if smooth_temp is None and not _tie_gaps_ok(cand, ens, layout):
                continue

            err_p, _ = finite_diff_check(
                lambda x: loss_from_view(x, ens, layout, smooth_temp),
                v0, g0, precoder_step)
            report["precoder"].append(err_p)

            _, gt, _ = grad_wrt_theta(params, v0, g0, ens, layout, p_t,
                                      smooth_temp)

            def f_theta(vec, _d=params.dims, _p0=v0, _g0=g0,
                        _e=ens, _l=layout):
                trial = MetaNetParams.from_vector(vec, _d)
                return loss_from_view(candidate_view(trial, _p0, _g0, p_t),
                                      _e, _l, smooth_temp)

            err_t, _ = finite_diff_check(f_theta, params.to_vector(), gt,
                                         theta_step)
            report["theta"].append(err_t)
            break
        else:
            raise RuntimeError("could not draw a well-conditioned instance")

    report["n_instances"] = n_instances
    report["precoder_max_relerr"] = float(np.max(report["precoder"]))
    report["theta_max_relerr"] = float(np.max(report["theta"]))
    report["passed"] = bool(
        report["precoder_max_relerr"] <= precoder_tol
        and report["theta_max_relerr"] <= theta_tol)
    return report
