"""Benchmark: compiled sampler kernels vs the pure NumPy fallback.

Runs identical reflected Metropolis segments (same pre-drawn innovations)
through both backends and reports steps/second.  Usage:

    python benchmarks/kernel_bench.py [--steps 20000]
"""

import argparse
import time

import numpy as np

from singular_bound import _kernels
from singular_bound._kernels import fallback
from singular_bound.models import (CompletionModel, MatrixCompletionTruth,
                                   ReluNetwork, ReluRegressionModel)


def bench(name, runner_compiled, runner_python, target, dim, steps, gamma):
    rng = np.random.default_rng(0)
    theta0 = rng.uniform(-0.9, 0.9, dim)
    normals = rng.standard_normal((steps, dim))
    log_unifs = np.log(rng.random(steps))
    lo, hi = np.full(dim, -1.0), np.full(dim, 1.0)
    scale = np.full(dim, 0.1)
    out_s, out_r = np.empty((steps, dim)), np.empty(steps)
    risk0 = target.evaluate(theta0)

    rows = []
    for label, runner in (("compiled", runner_compiled), ("python", runner_python)):
        if runner is None:
            rows.append((label, None, None))
            continue
        theta = theta0.copy()
        t0 = time.perf_counter()
        accepts, _ = runner(theta, risk0, gamma, lo, hi, scale, normals,
                            log_unifs, out_s, out_r)
        dt = time.perf_counter() - t0
        rows.append((label, steps / dt, accepts))
    print(f"\n{name} ({dim}-dimensional, {steps} steps)")
    for label, rate, accepts in rows:
        if rate is None:
            print(f"  {label:9s}  unavailable")
            continue
        print(f"  {label:9s}  {rate:12,.0f} steps/s  accepts={accepts}")
    if rows[0][1] and rows[1][1]:
        print(f"  speedup    {rows[0][1] / rows[1][1]:.1f}x compiled over python")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000)
    args = parser.parse_args()

    print(f"active backend at import: {_kernels.BACKEND} "
          f"(compiled available: {_kernels.HAVE_COMPILED})")

    truth = MatrixCompletionTruth.canonical(2, 2, 1, 2, sigma1=0.5)
    model = CompletionModel(truth)
    target = model.empirical_target(model.sample_dataset(500, seed=1))
    compiled = None
    if _kernels.HAVE_COMPILED:
        from singular_bound._kernels import _speedups

        def compiled(*a, _t=target):
            return _speedups.rwm_segment_completion(_t.m_star, _t.a_coef,
                                                    _t.b_coef, _t.h_dim, *a)

    def python(*a, _t=target):
        return fallback.rwm_segment_completion(_t.m_star, _t.a_coef, _t.b_coef,
                                               _t.h_dim, *a)

    bench("matrix completion empirical risk", compiled, python, target,
          target.dim, args.steps, gamma=25.0)

    rng = np.random.default_rng(3)
    net = ReluNetwork((2, 2, 1),
                      (0.5 * rng.standard_normal((2, 2)),
                       0.5 * rng.standard_normal((1, 2))),
                      (np.zeros(2), np.zeros(1)), b2=10.0)
    rmodel = ReluRegressionModel((2, 4, 4, 1), net, sigma2=0.1)
    rtarget = rmodel.empirical_target(rmodel.sample_dataset(2000, seed=2))
    widths = np.ascontiguousarray(rtarget.widths, dtype=np.int64)
    rcompiled = None
    if _kernels.HAVE_COMPILED:
        from singular_bound._kernels import _speedups

        def rcompiled(*a, _t=rtarget):
            return _speedups.rwm_segment_relu(_t.x_mat, _t.y_mat, _t.baseline,
                                              widths, *a)

    def rpython(*a, _t=rtarget):
        return fallback.rwm_segment_relu(_t.x_mat, _t.y_mat, _t.baseline,
                                         widths, *a)

    bench("ReLU network empirical risk (n=2000)", rcompiled, rpython, rtarget,
          rtarget.dim, max(args.steps // 10, 500), gamma=100.0)


if __name__ == "__main__":
    main()
