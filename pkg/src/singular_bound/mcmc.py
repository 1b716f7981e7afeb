"""Reflected random-walk Metropolis over box-uniform priors.

The target density is ``exp(-gamma * risk(theta))`` times a uniform prior on
a coordinate box.  Proposals are coordinatewise Gaussian steps folded back
into the box; the fold map is symmetric, so detailed balance holds for the
truncated target.  Innovations are pre-drawn from a counter-based stream,
which makes trajectories reproducible and lets the compiled and NumPy
kernel backends produce identical chains.

Burn-in runs in short segments during which the proposal scale adapts
toward a healthy acceptance rate (and, optionally, ``gamma`` anneals up
from zero).  Adaptation stops at the sampling phase, which is therefore a
fixed, valid Metropolis kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConstraintError, DiagnosticError
from .rng import stream

Array = np.ndarray

_SEGMENT_CAP = 32768


@dataclass(eq=False)
class CompletionQuadraticTarget:
    """Risk of the per-cell quadratic form ``sum_c a_c D_c^2 + b_c D_c``.

    ``D = U V - m_star`` where theta packs U (d1 x h) and V (h x d2).  Both
    the empirical and the population completion risks have this shape.
    """

    m_star: Array
    a_coef: Array
    b_coef: Array
    h_dim: int

    def __post_init__(self):
        self.m_star = np.ascontiguousarray(self.m_star, dtype=float)
        self.a_coef = np.ascontiguousarray(self.a_coef, dtype=float)
        self.b_coef = np.ascontiguousarray(self.b_coef, dtype=float)
        if not (self.m_star.shape == self.a_coef.shape == self.b_coef.shape):
            raise ConstraintError("coefficient grids must share the m_star shape")

    @property
    def dim(self) -> int:
        d1, d2 = self.m_star.shape
        return self.h_dim * (d1 + d2)

    def evaluate(self, theta: Array) -> float:
        return _kernels.fallback._completion_risk(
            np.asarray(theta, dtype=float), self.m_star, self.a_coef,
            self.b_coef, self.h_dim)

    def segment_runner(self):
        def run(theta, risk0, gamma, lo, hi, scale, normals, log_unifs, out_s, out_r):
            return _kernels.rwm_segment_completion(
                self.m_star, self.a_coef, self.b_coef, self.h_dim, theta, risk0,
                gamma, lo, hi, scale, normals, log_unifs, out_s, out_r)
        return run


@dataclass(eq=False)
class ReluSseTarget:
    """Mean excess squared error of a ReLU network over a fixed dataset."""

    x_mat: Array
    y_mat: Array
    baseline: Array
    widths: tuple

    def __post_init__(self):
        self.x_mat = np.ascontiguousarray(self.x_mat, dtype=float)
        y = np.asarray(self.y_mat, dtype=float)
        self.y_mat = np.ascontiguousarray(y[:, None] if y.ndim == 1 else y)
        self.baseline = np.ascontiguousarray(self.baseline, dtype=float)
        self.widths = tuple(int(w) for w in self.widths)
        self._widths_arr = np.ascontiguousarray(self.widths, dtype=np.int64)

    @property
    def dim(self) -> int:
        w = self.widths
        return sum(w[k] * (w[k - 1] + 1) for k in range(1, len(w)))

    def evaluate(self, theta: Array) -> float:
        return _kernels.fallback._relu_risk(
            np.asarray(theta, dtype=float), self.x_mat, self.y_mat,
            self.baseline, self.widths)

    def segment_runner(self):
        def run(theta, risk0, gamma, lo, hi, scale, normals, log_unifs, out_s, out_r):
            return _kernels.rwm_segment_relu(
                self.x_mat, self.y_mat, self.baseline, self._widths_arr, theta,
                risk0, gamma, lo, hi, scale, normals, log_unifs, out_s, out_r)
        return run


@dataclass(eq=False)
class CallbackTarget:
    """Arbitrary Python risk function; always runs on the NumPy backend."""

    fn: object

    def evaluate(self, theta: Array) -> float:
        return float(self.fn(np.asarray(theta, dtype=float)))

    def segment_runner(self):
        def run(theta, risk0, gamma, lo, hi, scale, normals, log_unifs, out_s, out_r):
            return _kernels.rwm_segment_callback(
                self.evaluate, theta, risk0, gamma, lo, hi, scale, normals,
                log_unifs, out_s, out_r)
        return run


@dataclass(eq=False)
class ChainResult:
    samples: Array          # (kept, dim), post burn-in, thinned
    risks: Array            # (kept,)
    acceptance_rate: float  # sampling phase only
    scale: Array            # proposal std per coordinate after adaptation
    ess: float              # effective sample size of the risk series


def default_scale(lo: Array, hi: Array) -> Array:
    """Default proposal std: 0.2 x box width / sqrt(dimension)."""
    width = hi - lo
    return 0.2 * width / np.sqrt(len(width))


def run_reflected_rwm(target, gamma: float, box_lo, box_hi, *, chain_length: int,
                      burn_in: int, thinning: int = 1, seed: int = 0,
                      stream_key: tuple = (), init=None, base_scale=None,
                      adapt: bool = True, anneal: bool = True) -> ChainResult:
    """Run one chain and return the thinned post-burn-in draws.

    ``chain_length`` counts total Metropolis steps, of which the first
    ``burn_in`` are discarded.  ``stream_key`` extends the RNG stream path so
    concurrent chains with the same seed stay independent.
    """
    lo = np.ascontiguousarray(box_lo, dtype=float)
    hi = np.ascontiguousarray(box_hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ConstraintError("box bounds must be equal-length vectors")
    if np.any(hi <= lo):
        raise ConstraintError("box is empty: need lo < hi per coordinate")
    if gamma < 0:
        raise ConstraintError("gamma must be nonnegative")
    if not 0 <= burn_in < chain_length:
        raise ConstraintError("need 0 <= burn_in < chain_length")
    if thinning < 1:
        raise ConstraintError("thinning must be a positive integer")

    dim = len(lo)
    width = hi - lo
    rng = stream(seed, *stream_key)
    if init is None:
        theta = rng.uniform(lo, hi)
    else:
        theta = np.array(init, dtype=float)
        if theta.shape != (dim,) or np.any(theta < lo) or np.any(theta > hi):
            raise ConstraintError("init must lie inside the box")
    theta = np.ascontiguousarray(theta)

    if base_scale is None:
        scale = default_scale(lo, hi)
    else:
        scale = np.broadcast_to(np.asarray(base_scale, dtype=float), (dim,)).copy()
        if np.any(scale <= 0):
            raise ConstraintError("proposal scale must be positive")
    scale = np.ascontiguousarray(np.minimum(scale, width))

    runner = target.segment_runner()
    risk = float(target.evaluate(theta))
    if not np.isfinite(risk):
        raise DiagnosticError("risk is not finite at the chain start point")

    def run_segment(n_steps, g, out_s, out_r):
        normals = rng.standard_normal((n_steps, dim))
        log_unifs = np.log(rng.random(n_steps))
        return runner(theta, risk, g, lo, hi, scale, normals, log_unifs, out_s, out_r)

    # burn-in: adapt the scale (and optionally anneal gamma) over short segments
    if burn_in > 0:
        n_seg = max(1, min(20, burn_in // 100))
        bounds = np.linspace(0, burn_in, n_seg + 1).astype(int)
        scratch_s = np.empty((int(np.max(np.diff(bounds))), dim))
        scratch_r = np.empty(scratch_s.shape[0])
        for i in range(n_seg):
            n_steps = int(bounds[i + 1] - bounds[i])
            if n_steps == 0:
                continue
            g = gamma * (i + 1) / n_seg if anneal else gamma
            accepts, risk = run_segment(n_steps, g, scratch_s[:n_steps], scratch_r[:n_steps])
            if not np.all(np.isfinite(scratch_r[:n_steps])):
                raise DiagnosticError("non-finite risk encountered during burn-in")
            if adapt:
                rate = accepts / n_steps
                if rate < 0.12:
                    factor = 0.5
                elif rate < 0.22:
                    factor = 0.8
                elif rate > 0.55:
                    factor = 1.6
                elif rate > 0.42:
                    factor = 1.25
                else:
                    factor = 1.0
                scale = np.ascontiguousarray(
                    np.clip(scale * factor, 1e-9 * width, width))

    keep = chain_length - burn_in
    samples = np.empty((keep, dim))
    risks = np.empty(keep)
    accepts = 0
    pos = 0
    while pos < keep:
        n_steps = min(_SEGMENT_CAP, keep - pos)
        seg_accepts, risk = run_segment(
            n_steps, gamma, samples[pos: pos + n_steps], risks[pos: pos + n_steps])
        accepts += seg_accepts
        pos += n_steps
    if not np.all(np.isfinite(risks)):
        raise DiagnosticError("non-finite risk encountered during sampling")

    samples = samples[::thinning].copy()
    risks = risks[::thinning].copy()
    return ChainResult(samples, risks, accepts / keep, scale,
                       effective_sample_size(risks))


def batch_means_stderr(x: Array, n_batches: int = 32) -> float:
    """Standard error of the mean of a correlated series via batch means."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 0.0
    n_batches = max(2, min(n_batches, n // 2))
    m = n // n_batches
    means = x[: n_batches * m].reshape(n_batches, m).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(n_batches))


def effective_sample_size(x: Array) -> float:
    """ESS from the autocovariance with Geyer's initial positive sequence."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4:
        return float(n)
    centered = x - x.mean()
    var = float(np.dot(centered, centered) / n)
    if var <= 0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real / n
    rho = acov / var
    # sum consecutive lag pairs while they stay positive
    tail = 0.0
    for k in range(1, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tail += pair
    return float(min(n, n / (1.0 + 2.0 * tail)))
