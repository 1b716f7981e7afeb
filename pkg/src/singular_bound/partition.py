"""Laplace-type partition integrals and scaling fits.

``Z(n) = integral of exp(-n beta risk(u))`` against a prior (or an explicit
monomial weight) decays like ``n^-lambda (log n)^(m-1)``; this module
estimates ``-log Z(n)`` two ways — deterministic tensor-grid quadrature in
dimension <= 3, and thermodynamic integration over a tempering path for
anything a Metropolis chain can sample — plus the closed-form state-density
lower bound and the regression that recovers ``lambda`` from an n-grid.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConstraintError, ConvergenceError, DiagnosticError
from .mcmc import CallbackTarget, batch_means_stderr, run_reflected_rwm
from .rng import stream

Array = np.ndarray

QUADRATURE_REFINE_TOL = 1e-6
_PANEL_ORDER = 16
_MAX_AXIS_POINTS = {1: 16384, 2: 4096, 3: 1024}
_CHUNK = 1 << 18


@dataclass(frozen=True)
class PartitionEstimate:
    """One ``-log Z`` value at a given (n, beta), with its uncertainty."""

    n: float
    beta: float
    neg_log_z: float
    std_err: float
    method: str

    def __post_init__(self):
        if self.method not in ("quadrature", "thermo"):
            raise ConstraintError(f"unknown method {self.method!r}")
        if self.method == "quadrature" and self.std_err != 0.0:
            raise ConstraintError("quadrature estimates are deterministic (std_err 0)")
        if not math.isfinite(self.neg_log_z):
            raise ConstraintError("neg_log_z must be finite")
        if self.std_err < 0:
            raise ConstraintError("std_err must be nonnegative")


@dataclass(frozen=True)
class RlctFit:
    """Slope fit of ``-log Z`` against ``log n`` (and optionally ``-log log n``)."""

    lambda_hat: float
    loglog_coef: float
    intercept: float
    residual_rms: float

    def to_json(self) -> str:
        return json.dumps({"lambda_hat": self.lambda_hat, "loglog_coef": self.loglog_coef,
                           "intercept": self.intercept, "residual_rms": self.residual_rms},
                          sort_keys=True)


def monomial_risk(k) -> object:
    """Vectorized risk ``prod_j u_j^(2 k_j)`` for normal-crossing tests."""
    k = np.asarray(k, dtype=float)

    def risk(pts: Array) -> Array:
        return np.prod(pts ** (2.0 * k), axis=1)

    return risk


def _axis_rule(points_per_axis: int):
    """Composite Gauss-Legendre rule on [0, 1] with ~points_per_axis nodes."""
    panels = max(1, math.ceil(points_per_axis / _PANEL_ORDER))
    nodes0, weights0 = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2.0
    centers = edges[:-1] + half
    nodes = (centers[:, None] + half[:, None] * nodes0).ravel()
    weights = np.repeat(half, _PANEL_ORDER) * np.tile(weights0, panels)
    return nodes, weights


def _integral_on_grid(risk, h, coef: float, points_per_axis: int) -> float:
    d = len(h)
    nodes, base_w = _axis_rule(points_per_axis)
    axis_w = [base_w * nodes ** h[j] for j in range(d)]

    def term(pts: Array, w: Array) -> float:
        vals = np.asarray(risk(pts), dtype=float)
        if vals.shape != (len(pts),):
            raise ConstraintError("risk must map (m, d) points to m values")
        if not np.all(np.isfinite(vals)):
            raise DiagnosticError("risk produced a non-finite integrand sample")
        return float(np.dot(w, np.exp(-coef * vals)))

    m = len(nodes)
    if d == 1:
        return term(nodes[:, None], axis_w[0])
    if d == 2:
        total = 0.0
        rows_per_chunk = max(1, _CHUNK // m)
        for start in range(0, m, rows_per_chunk):
            stop = min(m, start + rows_per_chunk)
            xs = np.repeat(nodes[start:stop], m)
            ys = np.tile(nodes, stop - start)
            w = np.repeat(axis_w[0][start:stop], m) * np.tile(axis_w[1], stop - start)
            total += term(np.column_stack([xs, ys]), w)
        return total
    total = 0.0
    yz_w = np.repeat(axis_w[1], m) * np.tile(axis_w[2], m)
    ys = np.repeat(nodes, m)
    zs = np.tile(nodes, m)
    for i in range(m):
        pts = np.column_stack([np.full(m * m, nodes[i]), ys, zs])
        total += term(pts, axis_w[0][i] * yz_w)
    return total


def neg_log_z_quadrature(risk, h, beta: float, n: float,
                         points_per_axis: int = 128) -> PartitionEstimate:
    """Deterministic ``-log Z`` on the unit cube with monomial weight.

    Integrates ``exp(-n beta risk(u)) prod_j u_j^(h_j)`` over [0, 1]^d by a
    composite tensor Gauss-Legendre rule, doubling the per-axis resolution
    until one refinement moves the value by less than 1e-6.
    """
    h = tuple(int(v) for v in h)
    d = len(h)
    if not 1 <= d <= 3:
        raise ConstraintError("quadrature supports dimensions 1 to 3")
    if min(h) < 0:
        raise ConstraintError("weight exponents must be nonnegative")
    if points_per_axis < 64:
        raise ConstraintError("points_per_axis must be at least 64")
    if beta <= 0 or n <= 0:
        raise ConstraintError("beta and n must be positive")
    coef = float(n) * float(beta)
    points = points_per_axis
    value = -math.log(_integral_on_grid(risk, h, coef, points))
    while points <= _MAX_AXIS_POINTS[d]:
        points *= 2
        refined = -math.log(_integral_on_grid(risk, h, coef, points))
        if abs(refined - value) < QUADRATURE_REFINE_TOL:
            return PartitionEstimate(float(n), float(beta), refined, 0.0, "quadrature")
        value = refined
    raise ConvergenceError(
        f"quadrature did not stabilize below {QUADRATURE_REFINE_TOL} "
        f"within {points} points per axis")


def state_density_lower_bound(k, h, k_extra=(), h_extra=(), *, beta: float,
                              n: float) -> float:
    """Closed-form lower bound on ``Z(n)`` for monomial normal-crossing data.

    The leading block (k, h) must share the exact ratio
    ``(h_i + 1) / (2 k_i) = lambda``; the remaining block must sit strictly
    above it.  Ratios are compared in exact rationals.  The bound is

      (log n)^(m-1) / n^lambda * prod_j 1/(h'_j + 1)
        * 1 / (2^m (m-1)! k_1...k_m) * 1 / (lambda e^beta).
    """
    k = tuple(int(v) for v in k)
    h = tuple(int(v) for v in h)
    k_extra = tuple(int(v) for v in k_extra)
    h_extra = tuple(int(v) for v in h_extra)
    if not k or len(k) != len(h):
        raise ConstraintError("leading blocks k and h must be nonempty, equal length")
    if len(k_extra) != len(h_extra):
        raise ConstraintError("k_extra and h_extra must have equal length")
    if min(k) < 1 or min(h, default=0) < 0:
        raise ConstraintError("leading k must be positive, h nonnegative")
    lam = Fraction(h[0] + 1, 2 * k[0])
    for ki, hi in zip(k, h):
        if Fraction(hi + 1, 2 * ki) != lam:
            raise ConstraintError("leading block ratios (h+1)/(2k) are not all equal")
    for kj, hj in zip(k_extra, h_extra):
        if kj < 0 or hj < 0:
            raise ConstraintError("extra exponents must be nonnegative")
        if kj > 0 and Fraction(hj + 1, 2 * kj) <= lam:
            raise ConstraintError("extra block ratios must exceed the leading ratio")
    if n <= 1:
        raise ConstraintError("n must exceed 1")
    if beta <= 0:
        raise ConstraintError("beta must be positive")
    m = len(k)
    log_n = math.log(n)
    value = log_n ** (m - 1) / n ** float(lam)
    for hj in h_extra:
        value /= hj + 1
    value /= 2 ** m * math.factorial(m - 1) * math.prod(k)
    value /= float(lam) * math.exp(beta)
    return value


def quadratic_schedule(rungs: int = 16) -> Array:
    """The default tempering schedule ``s_t = (t / T)^2``.

    Quadratic spacing concentrates rungs near s = 0, where the tempered
    mean risk varies fastest for small RLCTs.
    """
    if rungs < 8:
        raise ConstraintError("need at least 8 rungs")
    t = np.arange(rungs + 1, dtype=float)
    return (t / rungs) ** 2


def thermo_integration_neg_log_z(target, box_lo, box_hi, beta: float, n: float,
                                 schedule=None, *, chain_length: int = 4000,
                                 burn_in: int = 1000, thinning: int = 1,
                                 seed: int = 0, stream_key: tuple = (),
                                 base_scale=None) -> PartitionEstimate:
    """Path-sampling estimate of ``-log Z(n)`` for a box-uniform prior.

    Uses the identity ``-log Z = integral_0^1 E_s[n beta risk] ds`` where
    ``E_s`` averages over the tempered density ``exp(-s n beta risk)`` times
    the prior.  Every positive rung runs an independent reflected Metropolis
    chain; the s = 0 rung is sampled i.i.d. from the prior, which is exact.
    Rung means are combined by the trapezoid rule and rung standard errors
    (batch means) in quadrature.
    """
    if callable(target) and not hasattr(target, "segment_runner"):
        target = CallbackTarget(target)
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)
    if beta <= 0 or n <= 0:
        raise ConstraintError("beta and n must be positive")
    if schedule is None:
        schedule = quadratic_schedule()
    s = np.asarray(schedule, dtype=float)
    if len(s) < 9 or s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
        raise ConstraintError("schedule must be increasing from 0 to 1 with >= 8 rungs")
    kept = (chain_length - burn_in) // thinning
    if kept < 1000:
        raise ConstraintError("need at least 1000 post-burn-in draws per rung")

    scale_factor = float(n) * float(beta)
    means = np.empty(len(s))
    errs = np.empty(len(s))

    rng0 = stream(seed, *stream_key, 7, 0)
    draws = rng0.uniform(lo, hi, size=(kept, len(lo)))
    risks0 = np.array([target.evaluate(t) for t in draws])
    if not np.all(np.isfinite(risks0)):
        raise DiagnosticError("non-finite risk on prior draws")
    means[0] = scale_factor * float(np.mean(risks0))
    errs[0] = scale_factor * float(np.std(risks0, ddof=1) / math.sqrt(kept))

    for t in range(1, len(s)):
        res = run_reflected_rwm(
            target, gamma=float(s[t]) * scale_factor, box_lo=lo, box_hi=hi,
            chain_length=chain_length, burn_in=burn_in, thinning=thinning,
            seed=seed, stream_key=(*stream_key, 7, t), base_scale=base_scale)
        # High acceptance flags a mis-tuned proposal only when the steps are
        # small; once the adapted scale spans the box, a near-flat rung
        # legitimately accepts almost everything and explores freely.
        wide_steps = bool(np.all(res.scale >= 0.499 * (hi - lo)))
        if res.acceptance_rate < 0.05 or (res.acceptance_rate > 0.95 and not wide_steps):
            raise DiagnosticError(
                f"rung s={s[t]:.5f} acceptance rate {res.acceptance_rate:.3f} "
                "outside [0.05, 0.95]; retune the proposal scale")
        means[t] = scale_factor * float(np.mean(res.risks))
        errs[t] = scale_factor * batch_means_stderr(res.risks)

    gaps = np.diff(s)
    neg_log_z = float(np.sum(gaps * (means[:-1] + means[1:]) / 2.0))
    weights = np.zeros(len(s))
    weights[:-1] += gaps / 2.0
    weights[1:] += gaps / 2.0
    std_err = float(np.sqrt(np.sum((weights * errs) ** 2)))
    return PartitionEstimate(float(n), float(beta), neg_log_z, std_err, "thermo")


def fit_rlct_from_partition(estimates, include_loglog: bool = False) -> RlctFit:
    """Least-squares recovery of the scaling coefficients from an n-grid.

    Regresses ``neg_log_z`` on ``[log n, (-log log n), 1]``; the coefficient
    of the second regressor estimates ``m - 1``.  Estimates are weighted by
    ``1 / std_err^2`` when every standard error is positive.
    """
    estimates = list(estimates)
    if len(estimates) < 3:
        raise ConstraintError("need at least 3 partition estimates")
    ns = np.array([e.n for e in estimates])
    if np.any(ns <= math.e):
        raise ConstraintError("all n must exceed e so that log log n > 0")
    if len(np.unique(ns)) != len(ns):
        raise ConstraintError("duplicated n values make the design rank-deficient")
    y = np.array([e.neg_log_z for e in estimates])
    cols = [np.log(ns)]
    if include_loglog:
        cols.append(-np.log(np.log(ns)))
    cols.append(np.ones_like(ns))
    design = np.column_stack(cols)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ConstraintError("rank-deficient design")
    errs = np.array([e.std_err for e in estimates])
    if np.all(errs > 0):
        w = 1.0 / errs
        coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    else:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    loglog = float(coef[1]) if include_loglog else 0.0
    return RlctFit(float(coef[0]), loglog, float(coef[-1]),
                   float(np.sqrt(np.mean(resid ** 2))))


def write_partition_csv(estimates, path):
    """CSV rows ``n,beta,neg_log_z,std_err,method``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "beta", "neg_log_z", "std_err", "method"])
        for e in estimates:
            writer.writerow([repr(e.n), repr(e.beta), repr(e.neg_log_z),
                             repr(e.std_err), e.method])
