import numpy as np
import pytest

from rsmeta.channel import IidCsitModel
from rsmeta.gradients import (candidate_view, finite_diff_check,
                              grad_wrt_precoder, grad_wrt_theta,
                              gradcheck_suite, loss_from_view, precoder_to_view,
                              project_view, view_length, view_to_precoder)
from rsmeta.layout import StreamLayout
from rsmeta.linalg import RngStream, gaussian_matrix
from rsmeta.network import init_meta_net
from rsmeta.rates import avg_sum_rate_loss, saf_report


def _instance(seed=21, n_tx=3, n_users=None, hierarchical=False, n_draws=6,
              p_t=4.0):
    if hierarchical:
        n_users = 4 if n_users is None else n_users
        lay = StreamLayout.hierarchical(n_tx, n_users, 2)
    else:
        n_users = 3 if n_users is None else n_users
        lay = StreamLayout.one_layer(n_tx, n_users)
    model = IidCsitModel(n_tx=n_tx, n_users=n_users, error_power=0.25)
    ens = model.draw(RngStream(seed), p_t, n_draws)
    mat = np.zeros((n_tx, lay.n_streams), complex)
    raw = gaussian_matrix(RngStream(seed + 50), n_tx, len(lay.active_streams),
                          1.0)
    mat[:, list(lay.active_streams)] = raw
    mat *= np.sqrt(0.8 * p_t / np.sum(np.abs(mat) ** 2))
    return lay, ens, mat


class TestViewConvention:
    def test_frozen_interleave_layout(self):
        # one active column after another, each column's antennas in order,
        # real part immediately before its imaginary part
        lay = StreamLayout.one_layer(2, 1)
        mat = np.zeros((2, 3), complex)
        mat[:, 0] = [1 + 2j, 3 + 4j]
        mat[:, 2] = [5 + 6j, 7 + 8j]
        v = precoder_to_view(mat, lay)
        np.testing.assert_array_equal(v, np.arange(1.0, 9.0))
        assert view_length(lay) == 8

    def test_roundtrip_exact(self):
        lay, _, mat = self._any()
        back = view_to_precoder(precoder_to_view(mat, lay), lay)
        np.testing.assert_array_equal(back, mat)

    def _any(self):
        return _instance(seed=30, hierarchical=True)

    def test_view_norm_is_precoder_power(self):
        lay, _, mat = self._any()
        v = precoder_to_view(mat, lay)
        assert np.dot(v, v) == pytest.approx(np.sum(np.abs(mat) ** 2),
                                             rel=1e-14)

    def test_one_layer_view_skips_group_block(self):
        lay = StreamLayout.one_layer(4, 3)
        assert view_length(lay) == 2 * 4 * 4   # common + 3 privates


class TestProjectView:
    def test_halves_when_four_over_budget(self):
        v = np.array([2.0, 0.0, 0.0, 0.0])
        out = project_view(v, 1.0)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0, 0.0], rtol=1e-15)

    def test_identity_inside_ball(self):
        v = np.array([0.5, 0.5])
        np.testing.assert_array_equal(project_view(v, 10.0), v)

    def test_boundary_untouched(self):
        v = np.array([1.0, 1.0])
        np.testing.assert_array_equal(project_view(v, 2.0), v)


class TestLossFromView:
    def test_agrees_with_rate_module(self):
        for hier in (False, True):
            lay, ens, mat = _instance(seed=41, hierarchical=hier)
            v = precoder_to_view(mat, lay)
            assert loss_from_view(v, ens, lay) == pytest.approx(
                avg_sum_rate_loss(mat, ens, lay), rel=1e-12)

    def test_smooth_loss_upper_bounds_hard(self):
        # soft minimum sits below the hard minimum, so the smoothed rate is
        # lower and the (negated) loss is higher
        lay, ens, mat = _instance(seed=42, hierarchical=True)
        v = precoder_to_view(mat, lay)
        assert loss_from_view(v, ens, lay, smooth_temp=0.3) >= \
            loss_from_view(v, ens, lay)


class TestPrecoderGradient:
    def test_loss_value_matches_plain_path(self):
        lay, ens, mat = _instance(seed=51, hierarchical=True)
        loss, _ = grad_wrt_precoder(mat, ens, lay)
        assert loss == pytest.approx(avg_sum_rate_loss(mat, ens, lay),
                                     rel=1e-12)

    def test_fd_agreement(self):
        for hier, seed in ((False, 61), (True, 62)):
            lay, ens, mat = _instance(seed=seed, hierarchical=hier)
            v = precoder_to_view(mat, lay)
            _, g = grad_wrt_precoder(mat, ens, lay)
            err, _ = finite_diff_check(
                lambda x: loss_from_view(x, ens, lay), v, g, step=1e-6)
            assert err <= 1e-5

    def test_fd_agreement_smoothed(self):
        lay, ens, mat = _instance(seed=63, hierarchical=True)
        v = precoder_to_view(mat, lay)
        _, g = grad_wrt_precoder(mat, ens, lay, smooth_temp=0.4)
        err, _ = finite_diff_check(
            lambda x: loss_from_view(x, ens, lay, smooth_temp=0.4), v, g,
            step=1e-6)
        assert err <= 1e-5

    def test_gradient_view_length(self):
        lay, ens, mat = _instance(seed=64)
        _, g = grad_wrt_precoder(mat, ens, lay)
        assert g.shape == (view_length(lay),)


class TestThetaGradient:
    def _setup(self, seed=71, small_out=True):
        lay, ens, mat = _instance(seed=seed, hierarchical=True)
        p0_view = precoder_to_view(mat, lay)
        _, g0 = grad_wrt_precoder(mat, ens, lay)
        params = init_meta_net(RngStream(seed + 1), view_length(lay),
                               hidden=(6,))
        if small_out:
            # a zero output layer would make every hidden-layer gradient
            # vanish identically; seed it with small values instead
            w_out = params.weights[-1]
            w_out[...] = RngStream(seed + 2).uniform(
                -0.05, 0.05, w_out.shape)
        return lay, ens, p0_view, g0, params

    def test_zero_net_reproduces_start(self):
        lay, ens, mat = _instance(seed=72, hierarchical=True)
        p0_view = precoder_to_view(mat, lay)
        _, g0 = grad_wrt_precoder(mat, ens, lay)
        params = init_meta_net(RngStream(5), view_length(lay), hidden=(6,))
        p_t = 4.0
        cand = candidate_view(params, p0_view, g0, p_t)
        np.testing.assert_array_equal(cand, p0_view)
        loss, gt, cand2 = grad_wrt_theta(params, p0_view, g0, ens, lay, p_t)
        np.testing.assert_array_equal(cand2, p0_view)
        assert loss == pytest.approx(loss_from_view(p0_view, ens, lay),
                                     rel=1e-12)

    def test_fd_agreement(self):
        lay, ens, p0_view, g0, params = self._setup()
        p_t = 4.0
        theta0 = params.to_vector()
        _, gt, _ = grad_wrt_theta(params, p0_view, g0, ens, lay, p_t)

        def f(vec):
            cand = candidate_view(params.from_vector(vec, params.dims),
                                  p0_view, g0, p_t)
            return loss_from_view(cand, ens, lay)

        err, _ = finite_diff_check(f, theta0, gt, step=1e-5)
        assert err <= 1e-4

    def test_candidate_matches_plain_path(self):
        lay, ens, p0_view, g0, params = self._setup(seed=73)
        p_t = 2.0   # tight budget so projection actually fires
        loss, _, cand = grad_wrt_theta(params, p0_view, g0, ens, lay, p_t)
        np.testing.assert_allclose(
            cand, candidate_view(params, p0_view, g0, p_t), rtol=1e-12)
        assert np.dot(cand, cand) <= p_t * (1 + 1e-12)
        assert loss == pytest.approx(loss_from_view(cand, ens, lay),
                                     rel=1e-12)


class TestFiniteDiffCheck:
    def test_accepts_true_gradient(self):
        q = np.array([1.0, 2.0, 3.0])

        def f(x):
            return 0.5 * float(x @ (q * x))

        x0 = np.array([0.4, -0.2, 0.9])
        err, fd = finite_diff_check(f, x0, q * x0, step=1e-6)
        assert err < 1e-8
        np.testing.assert_allclose(fd, q * x0, atol=1e-8)

    def test_flags_corrupted_gradient(self):
        q = np.array([1.0, 2.0, 3.0])

        def f(x):
            return 0.5 * float(x @ (q * x))

        x0 = np.array([0.4, -0.2, 0.9])
        bad = q * x0
        bad[1] *= 1.05
        err, _ = finite_diff_check(f, x0, bad, step=1e-6)
        assert err > 1e-3

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            finite_diff_check(lambda x: 0.0, np.ones(3), np.ones(4), 1e-6)


class TestGradcheckSuite:
    def test_small_battery_passes(self):
        report = gradcheck_suite(seed=123, n_instances=6)
        assert report["passed"]
        assert report["n_instances"] == 6
        assert len(report["precoder"]) == 6
        assert len(report["theta"]) == 6
        assert report["precoder_max_relerr"] <= 1e-5
        assert report["theta_max_relerr"] <= 1e-4

    def test_smoothed_battery_passes(self):
        report = gradcheck_suite(seed=321, n_instances=4, smooth_temp=0.3)
        assert report["passed"]
