"""Tests for the reflected Metropolis driver and its kernel backends."""

import numpy as np
import pytest

from singular_bound import _kernels
from singular_bound._kernels import fallback
from singular_bound.errors import ConstraintError, DiagnosticError
from singular_bound.mcmc import (CallbackTarget, ChainResult, batch_means_stderr,
                                 effective_sample_size, run_reflected_rwm)
from singular_bound.models import (CompletionModel, MatrixCompletionTruth,
                                   ReluNetwork, ReluRegressionModel)


def completion_target(n=300, seed=9):
    model = CompletionModel(MatrixCompletionTruth.canonical(2, 2, 1, 2, sigma1=0.5))
    return model.empirical_target(model.sample_dataset(n, seed))


def relu_target(n=200, seed=3):
    rng = np.random.default_rng(1)
    net = ReluNetwork((2, 2, 1),
                      (0.5 * rng.standard_normal((2, 2)), 0.5 * rng.standard_normal((1, 2))),
                      (np.zeros(2), np.zeros(1)), b2=10.0)
    model = ReluRegressionModel((2, 3, 1), net, sigma2=0.1)
    return model.empirical_target(model.sample_dataset(n, seed))


def run_segment_pair(target, runner_a, runner_b, dim, steps=2500, gamma=20.0):
    rng = np.random.default_rng(0)
    theta_a = rng.uniform(-0.9, 0.9, dim)
    theta_b = theta_a.copy()
    normals = rng.standard_normal((steps, dim))
    log_unifs = np.log(rng.random(steps))
    lo = np.full(dim, -1.0)
    hi = np.full(dim, 1.0)
    scale = np.full(dim, 0.12)
    outs = [(np.empty((steps, dim)), np.empty(steps)) for _ in range(2)]
    risk0 = target.evaluate(theta_a)
    acc_a, _ = runner_a(theta_a, risk0, gamma, lo, hi, scale, normals, log_unifs, *outs[0])
    acc_b, _ = runner_b(theta_b, risk0, gamma, lo, hi, scale, normals, log_unifs, *outs[1])
    return acc_a, acc_b, outs


@pytest.mark.skipif(not _kernels.HAVE_COMPILED, reason="compiled kernels unavailable")
class TestBackendParity:
    def test_completion_trajectories_match(self):
        t = completion_target()
        from singular_bound._kernels import _speedups

        def compiled(*args):
            return _speedups.rwm_segment_completion(t.m_star, t.a_coef, t.b_coef,
                                                    t.h_dim, *args)

        def python(*args):
            return fallback.rwm_segment_completion(t.m_star, t.a_coef, t.b_coef,
                                                   t.h_dim, *args)

        acc_a, acc_b, outs = run_segment_pair(t, compiled, python, t.dim)
        assert acc_a == acc_b
        np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-12)
        np.testing.assert_allclose(outs[0][1], outs[1][1], atol=1e-12)

    def test_relu_trajectories_match(self):
        t = relu_target()
        widths = np.ascontiguousarray(t.widths, dtype=np.int64)
        from singular_bound._kernels import _speedups

        def compiled(*args):
            return _speedups.rwm_segment_relu(t.x_mat, t.y_mat, t.baseline,
                                              widths, *args)

        def python(*args):
            return fallback.rwm_segment_relu(t.x_mat, t.y_mat, t.baseline,
                                             widths, *args)

        acc_a, acc_b, outs = run_segment_pair(t, compiled, python, t.dim,
                                              steps=600, gamma=50.0)
        assert acc_a == acc_b
        np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-12)


class TestReflection:
    def test_fold_stays_inside_any_distance(self):
        lo = np.array([0.0])
        hi = np.array([1.0])
        ys = np.linspace(-17.3, 23.1, 2001)[:, None]
        folded = np.array([fallback._reflect(y, lo, hi) for y in ys])
        assert np.all(folded >= 0.0) and np.all(folded <= 1.0)

    def test_fold_is_identity_inside(self):
        lo = np.array([-1.0, 0.0])
        hi = np.array([1.0, 2.0])
        y = np.array([0.3, 1.7])
        np.testing.assert_allclose(fallback._reflect(y, lo, hi), y)

    def test_fold_mirrors_at_boundary(self):
        lo = np.array([0.0])
        hi = np.array([1.0])
        np.testing.assert_allclose(fallback._reflect(np.array([-0.2]), lo, hi), [0.2])
        np.testing.assert_allclose(fallback._reflect(np.array([1.3]), lo, hi), [0.7])


class TestDriver:
    def test_deterministic_given_seed(self):
        t = completion_target()
        kwargs = dict(gamma=30.0, box_lo=np.full(t.dim, -1.0), box_hi=np.full(t.dim, 1.0),
                      chain_length=3000, burn_in=500, seed=4)
        a = run_reflected_rwm(t, **kwargs)
        b = run_reflected_rwm(t, **kwargs)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert a.acceptance_rate == b.acceptance_rate

    def test_stream_keys_decorrelate(self):
        t = completion_target()
        kwargs = dict(gamma=30.0, box_lo=np.full(t.dim, -1.0), box_hi=np.full(t.dim, 1.0),
                      chain_length=2000, burn_in=500, seed=4)
        a = run_reflected_rwm(t, stream_key=(0,), **kwargs)
        b = run_reflected_rwm(t, stream_key=(1,), **kwargs)
        assert not np.array_equal(a.samples, b.samples)

    def test_samples_respect_box(self):
        t = completion_target()
        res = run_reflected_rwm(t, gamma=10.0, box_lo=np.full(t.dim, -0.5),
                                box_hi=np.full(t.dim, 0.75), chain_length=2000,
                                burn_in=200, seed=0)
        assert np.all(res.samples >= -0.5) and np.all(res.samples <= 0.75)

    def test_zero_gamma_accepts_everything(self):
        res = run_reflected_rwm(CallbackTarget(lambda th: 1.0), gamma=0.0,
                                box_lo=[0.0], box_hi=[1.0], chain_length=1500,
                                burn_in=100, seed=8)
        assert res.acceptance_rate == 1.0

    def test_adaptation_restores_acceptance(self):
        # steep target: default scale would accept almost nothing without adaptation
        target = CallbackTarget(lambda th: float(np.sum(th ** 2)))
        res = run_reflected_rwm(target, gamma=5e4, box_lo=np.full(3, -1.0),
                                box_hi=np.full(3, 1.0), chain_length=8000,
                                burn_in=4000, seed=2)
        assert 0.05 <= res.acceptance_rate <= 0.95

    def test_nonfinite_risk_rejected(self):
        target = CallbackTarget(lambda th: float("nan"))
        with pytest.raises(DiagnosticError):
            run_reflected_rwm(target, gamma=1.0, box_lo=[0.0], box_hi=[1.0],
                              chain_length=100, burn_in=10, seed=0)

    def test_bad_config_rejected(self):
        t = CallbackTarget(lambda th: 0.0)
        with pytest.raises(ConstraintError):
            run_reflected_rwm(t, gamma=1.0, box_lo=[0.0], box_hi=[0.0],
                              chain_length=100, burn_in=10, seed=0)
        with pytest.raises(ConstraintError):
            run_reflected_rwm(t, gamma=1.0, box_lo=[0.0], box_hi=[1.0],
                              chain_length=100, burn_in=100, seed=0)

    def test_thinning_counts(self):
        t = CallbackTarget(lambda th: 0.0)
        res = run_reflected_rwm(t, gamma=0.0, box_lo=[0.0], box_hi=[1.0],
                                chain_length=1100, burn_in=100, thinning=10, seed=0)
        assert isinstance(res, ChainResult)
        assert len(res.samples) == 100 and len(res.risks) == 100


class TestSummaries:
    def test_batch_means_iid_scale(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(20_000)
        se = batch_means_stderr(x)
        assert se == pytest.approx(1.0 / np.sqrt(len(x)), rel=0.35)

    def test_ess_iid_near_n(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(5000)
        assert effective_sample_size(x) > 2500

    def test_ess_correlated_small(self):
        rng = np.random.default_rng(2)
        steps = rng.standard_normal(5000)
        ar = np.empty(5000)
        ar[0] = 0.0
        for i in range(1, 5000):
            ar[i] = 0.95 * ar[i - 1] + steps[i]
        assert effective_sample_size(ar) < 1000
