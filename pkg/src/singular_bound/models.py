"""Concrete learning problems: data generation, excess losses, and risks.

Three problem families are implemented:

* matrix completion under squared loss, parameterized through a low-rank
  factorization ``M = U V``;
* ReLU network regression under squared loss;
* binary classification with logistic loss and affine logits.

Each model exposes per-observation excess losses (relative to the data
generating truth), the empirical excess risk over a dataset, and the
population excess risk, which is exact for completion and logistic models
and a frozen fixed-sample average for ReLU regression.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError
from .mcmc import CallbackTarget, CompletionQuadraticTarget, ReluSseTarget
from .rng import stream

Array = np.ndarray

_RECON_TOL = 1e-10


def _as_float_matrix(a, name: str) -> Array:
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ConstraintError(f"{name} must be a 2-d matrix, got shape {out.shape}")
    return out


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixCompletionTruth:
    """Ground truth for a completion problem.

    ``m_star`` has exact rank ``r`` and admits the rank-normal form
    ``m_star = p0 @ diag(I_r, 0) @ q0`` with ``p0``, ``q0`` invertible.
    ``h`` is the factorization width of candidate matrices ``M = U V``,
    ``sigma1`` the sub-Gaussian noise scale and ``b1`` the entrywise bound.
    """

    d1: int
    d2: int
    r: int
    h: int
    m_star: Array
    p0: Array
    q0: Array
    sigma1: float
    b1: float

    def __post_init__(self):
        d1, d2, r, h = self.d1, self.d2, self.r, self.h
        if min(d1, d2, r, h) < 1:
            raise ConstraintError("dimensions d1, d2, r, h must be positive")
        if not (r <= h <= min(d1, d2)):
            raise ConstraintError(f"need r <= h <= min(d1, d2), got r={r}, h={h}")
        if h + r > d1 + d2:
            raise ConstraintError(f"need h + r <= d1 + d2, got h={h}, r={r}")
        if self.sigma1 < 0:
            raise ConstraintError("sigma1 must be nonnegative")
        if self.b1 <= 0:
            raise ConstraintError("b1 must be positive")
        m = _as_float_matrix(self.m_star, "m_star")
        p0 = _as_float_matrix(self.p0, "p0")
        q0 = _as_float_matrix(self.q0, "q0")
        if m.shape != (d1, d2) or p0.shape != (d1, d1) or q0.shape != (d2, d2):
            raise ConstraintError("m_star/p0/q0 shapes inconsistent with d1, d2")
        if np.linalg.matrix_rank(m, tol=1e-9) != r:
            raise ConstraintError("m_star does not have rank r")
        for name, a in (("p0", p0), ("q0", q0)):
            if np.linalg.svd(a, compute_uv=False)[-1] <= 1e-12:
                raise ConstraintError(f"{name} is numerically singular")
        core = np.zeros((d1, d2))
        core[:r, :r] = np.eye(r)
        if np.max(np.abs(p0 @ core @ q0 - m)) > _RECON_TOL:
            raise ConstraintError("p0 @ diag(I_r, 0) @ q0 does not reproduce m_star")
        if np.max(np.abs(m)) > self.b1 + 1e-12:
            raise ConstraintError("entries of m_star exceed the bound b1")

    @classmethod
    def canonical(cls, d1: int, d2: int, r: int, h: int, sigma1: float, b1: float = 1.0):
        """Truth with ``m_star = diag(I_r, 0)`` and identity change of basis."""
        m = np.zeros((d1, d2))
        m[:r, :r] = np.eye(r)
        return cls(d1, d2, r, h, m, np.eye(d1), np.eye(d2), sigma1, b1)

    @classmethod
    def random(cls, d1: int, d2: int, r: int, h: int, sigma1: float, b1: float, seed: int):
        """Random rank-r truth with entries scaled inside the b1 box."""
        rng = stream(seed, 0)
        a = rng.standard_normal((d1, r))
        b = rng.standard_normal((r, d2))
        m = a @ b
        scale = 0.8 * b1 / max(np.max(np.abs(m)), 1e-12)
        a *= scale
        m *= scale
        # complete A (resp. B) to invertible P0 (resp. Q0) with orthonormal extras
        qa, _ = np.linalg.qr(np.hstack([a, rng.standard_normal((d1, d1 - r))]))
        p0 = np.hstack([a, qa[:, r:]])
        qb, _ = np.linalg.qr(np.hstack([b.T, rng.standard_normal((d2, d2 - r))]))
        q0 = np.vstack([b, qb[:, r:].T])
        return cls(d1, d2, r, h, m, p0, q0, sigma1, b1)

    def factor_theta(self) -> Array:
        """A parameter vector (U, V) whose product reproduces ``m_star``."""
        u = np.zeros((self.d1, self.h))
        v = np.zeros((self.h, self.d2))
        u[:, : self.r] = self.p0[:, : self.r]
        v[: self.r, :] = self.q0[: self.r, :]
        return np.concatenate([u.ravel(), v.ravel()])


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Fully connected ReLU network with widths ``(H_1, ..., H_N)``.

    ``weights[k]`` maps layer k activations to layer k+1 pre-activations;
    every layer applies an entrywise ReLU.  ``b2`` bounds the output norm
    over the intended input box and is spot-checked on a probe sample.
    """

    widths: tuple
    weights: tuple
    biases: tuple
    b2: float
    input_low: float = -1.0
    input_high: float = 1.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ConstraintError("widths must list at least two positive layer sizes")
        n_layers = len(widths) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ConstraintError("need one weight matrix and bias per layer transition")
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=float) for b in self.biases)
        for k in range(n_layers):
            if ws[k].shape != (widths[k + 1], widths[k]):
                raise ConstraintError(f"weight {k} has shape {ws[k].shape}, "
                                      f"expected {(widths[k + 1], widths[k])}")
            if bs[k].shape != (widths[k + 1],):
                raise ConstraintError(f"bias {k} has shape {bs[k].shape}")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        if self.b2 <= 0:
            raise ConstraintError("b2 must be positive")
        probe = _input_probe(widths[0], self.input_low, self.input_high)
        out = relu_forward_batch(self, probe)
        worst = float(np.max(np.linalg.norm(out, axis=1)))
        if worst > self.b2 + 1e-9:
            raise ConstraintError(
                f"output norm {worst:.4g} exceeds b2={self.b2} on the input box probe")

    @property
    def param_dim(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def _input_probe(dim: int, lo: float, hi: float, extra: int = 256) -> Array:
    """Box corners (when few) plus seeded interior points."""
    pts = [stream(20240817, dim).uniform(lo, hi, size=(extra, dim))]
    if dim <= 8:
        corners = np.array(np.meshgrid(*[[lo, hi]] * dim)).reshape(dim, -1).T
        pts.append(corners)
    return np.vstack(pts)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations of one problem family.

    Completion records are ``(i, j, y)`` triples stored as parallel arrays;
    regression and classification records are ``(x, y)`` with ``x`` a row of
    ``x_mat``.  Classification labels live in {-1, +1}.
    """

    kind: str
    n: int
    seed: int
    rows: Array | None = None
    cols: Array | None = None
    x_mat: Array | None = None
    y: Array = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in ("completion", "regression", "classification"):
            raise ConstraintError(f"unknown dataset kind {self.kind!r}")
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if self.kind == "completion":
            rows = np.asarray(self.rows, dtype=np.int64)
            cols = np.asarray(self.cols, dtype=np.int64)
            object.__setattr__(self, "rows", rows)
            object.__setattr__(self, "cols", cols)
            if not (len(rows) == len(cols) == len(y) == self.n):
                raise ConstraintError("completion arrays must all have length n")
            if self.n and (rows.min() < 0 or cols.min() < 0):
                raise ConstraintError("negative index in completion dataset")
        else:
            x = np.asarray(self.x_mat, dtype=float)
            object.__setattr__(self, "x_mat", x)
            if x.ndim != 2 or len(x) != self.n or len(y) != self.n:
                raise ConstraintError("x_mat must be (n, d) and y length n")
            if self.kind == "classification" and self.n:
                if not np.all(np.isin(y, (-1.0, 1.0))):
                    raise ConstraintError("classification labels must be -1 or +1")


# ---------------------------------------------------------------------------
# Matrix completion
# ---------------------------------------------------------------------------


def generate_completion_data(truth: MatrixCompletionTruth, n: int, seed: int) -> Dataset:
    """Sample ``n`` uniformly indexed noisy entries of ``truth.m_star``.

    Index pairs are drawn independently and uniformly over the full grid
    (with replacement); ``y = m_star[i, j] + Gaussian(0, sigma1^2)`` noise.
    The same (truth, n, seed) always produces a bit-identical dataset.
    """
    if n < 0:
        raise ConstraintError("n must be nonnegative")
    rng = stream(seed, 1)
    rows = rng.integers(0, truth.d1, size=n)
    cols = rng.integers(0, truth.d2, size=n)
    noise = rng.standard_normal(n) * truth.sigma1 if truth.sigma1 > 0 else np.zeros(n)
    y = truth.m_star[rows, cols] + noise
    return Dataset("completion", n, seed, rows=rows, cols=cols, y=y)


def population_excess_risk_completion(m, truth: MatrixCompletionTruth) -> float:
    """Mean squared entrywise error ``||M - m_star||_F^2 / (d1 d2)``."""
    m = _as_float_matrix(m, "m")
    if m.shape != truth.m_star.shape:
        raise ConstraintError(f"candidate shape {m.shape} != truth shape {truth.m_star.shape}")
    diff = m - truth.m_star
    return float(np.sum(diff * diff) / (truth.d1 * truth.d2))


class CompletionModel:
    """Matrix completion with parameters ``theta = (U, V)`` flattened.

    ``U`` is ``d1 x h`` and ``V`` is ``h x d2``, both row-major in ``theta``.
    Risk evaluation also accepts a ``(d1, d2)`` matrix directly, which is
    convenient when the candidate is an unfactorized matrix.
    """

    kind = "completion"

    def __init__(self, truth: MatrixCompletionTruth):
        self.truth = truth

    @property
    def param_dim(self) -> int:
        t = self.truth
        return t.h * (t.d1 + t.d2)

    def matrix_of(self, params) -> Array:
        t = self.truth
        params = np.asarray(params, dtype=float)
        if params.shape == (t.d1, t.d2):
            return params
        if params.shape != (self.param_dim,):
            raise ConstraintError(f"parameter shape {params.shape} is neither a "
                                  f"(d1, d2) matrix nor a length-{self.param_dim} vector")
        u = params[: t.d1 * t.h].reshape(t.d1, t.h)
        v = params[t.d1 * t.h:].reshape(t.h, t.d2)
        return u @ v

    def sample_dataset(self, n: int, seed: int) -> Dataset:
        return generate_completion_data(self.truth, n, seed)

    def excess_losses(self, params, data: Dataset) -> Array:
        """Per-record excess loss: squared error minus truth squared error."""
        if data.kind != "completion":
            raise ConstraintError("completion model requires a completion dataset")
        m = self.matrix_of(params)
        pred = m[data.rows, data.cols]
        base = self.truth.m_star[data.rows, data.cols]
        return (data.y - pred) ** 2 - (data.y - base) ** 2

    def empirical_risk(self, params, data: Dataset) -> float:
        if data.n == 0:
            raise ConstraintError("empirical risk of an empty dataset is undefined")
        return float(np.mean(self.excess_losses(params, data)))

    def population_excess_risk(self, params) -> float:
        return population_excess_risk_completion(self.matrix_of(params), self.truth)

    def population_excess_risk_batch(self, thetas: Array) -> Array:
        t = self.truth
        thetas = np.asarray(thetas, dtype=float)
        u = thetas[:, : t.d1 * t.h].reshape(-1, t.d1, t.h)
        v = thetas[:, t.d1 * t.h:].reshape(-1, t.h, t.d2)
        diff = u @ v - t.m_star
        return np.sum(diff * diff, axis=(1, 2)) / (t.d1 * t.d2)

    def empirical_target(self, data: Dataset) -> CompletionQuadraticTarget:
        """Sufficient-statistic form of the empirical risk for the sampler.

        Grouping records by cell turns the empirical excess risk into a
        per-cell quadratic ``sum_c a_c D_c^2 + b_c D_c`` with ``D = M - m_star``,
        which makes each chain step O(d1 d2 h) regardless of n.
        """
        if data.n == 0:
            raise ConstraintError("cannot build a sampling target from an empty dataset")
        t = self.truth
        counts = np.zeros((t.d1, t.d2))
        sums = np.zeros((t.d1, t.d2))
        np.add.at(counts, (data.rows, data.cols), 1.0)
        np.add.at(sums, (data.rows, data.cols), data.y)
        a = counts / data.n
        b = 2.0 * (counts * t.m_star - sums) / data.n
        return CompletionQuadraticTarget(t.m_star, a, b, t.h)

    def population_target(self) -> CompletionQuadraticTarget:
        t = self.truth
        a = np.full((t.d1, t.d2), 1.0 / (t.d1 * t.d2))
        return CompletionQuadraticTarget(t.m_star, a, np.zeros((t.d1, t.d2)), t.h)


# ---------------------------------------------------------------------------
# ReLU networks
# ---------------------------------------------------------------------------


def relu_forward(net: ReluNetwork, x) -> Array:
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.widths[0],):
        raise ConstraintError(f"input length {x.shape} does not match width {net.widths[0]}")
    return relu_forward_batch(net, x[None, :])[0]


def relu_forward_batch(net: ReluNetwork, x: Array) -> Array:
    """Evaluate the network on rows of ``x``; returns an (n, H_N) array."""
    act = np.asarray(x, dtype=float)
    if act.ndim != 2 or act.shape[1] != net.widths[0]:
        raise ConstraintError("batch input must be (n, H_1)")
    for w, b in zip(net.weights, net.biases):
        act = np.maximum(act @ w.T + b, 0.0)
    return act


def relu_layer_activations(net: ReluNetwork, x) -> list:
    """Activations of every layer (input first) for a single input."""
    act = np.asarray(x, dtype=float)
    if act.shape != (net.widths[0],):
        raise ConstraintError("input length does not match the first width")
    out = [act]
    for w, b in zip(net.weights, net.biases):
        act = np.maximum(w @ act + b, 0.0)
        out.append(act)
    return out


def relu_param_dim(widths) -> int:
    widths = tuple(int(w) for w in widths)
    return sum(widths[k] * (widths[k - 1] + 1) for k in range(1, len(widths)))


def pack_relu_params(net: ReluNetwork) -> Array:
    """Flatten (W, b) layer by layer, weights row-major then bias."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unpack_relu_params(widths, theta: Array, b2: float = np.inf,
                       check_bound: bool = False) -> ReluNetwork:
    """Inverse of :func:`pack_relu_params` for the given widths."""
    widths = tuple(int(w) for w in widths)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (relu_param_dim(widths),):
        raise ConstraintError("parameter vector length does not match widths")
    weights, biases, pos = [], [], 0
    for k in range(1, len(widths)):
        h_out, h_in = widths[k], widths[k - 1]
        weights.append(theta[pos: pos + h_out * h_in].reshape(h_out, h_in))
        pos += h_out * h_in
        biases.append(theta[pos: pos + h_out])
        pos += h_out
    if check_bound:
        return ReluNetwork(widths, tuple(weights), tuple(biases), b2)
    net = object.__new__(ReluNetwork)
    object.__setattr__(net, "widths", widths)
    object.__setattr__(net, "weights", tuple(weights))
    object.__setattr__(net, "biases", tuple(biases))
    object.__setattr__(net, "b2", b2)
    object.__setattr__(net, "input_low", -1.0)
    object.__setattr__(net, "input_high", 1.0)
    return net


class ReluRegressionModel:
    """Regression with an overparameterized ReLU network under squared loss.

    Data come from ``true_net`` plus Gaussian noise; candidates are networks
    with (possibly larger) ``widths``.  The population excess risk is the
    average squared gap to the truth over a frozen evaluation sample, drawn
    once at construction so the quantity is deterministic.
    """

    kind = "regression"

    def __init__(self, widths, true_net: ReluNetwork, sigma2: float,
                 input_low: float = -1.0, input_high: float = 1.0,
                 eval_points: int = 2048, eval_seed: int = 90210):
        widths = tuple(int(w) for w in widths)
        if widths[0] != true_net.widths[0] or widths[-1] != true_net.widths[-1]:
            raise ConstraintError("candidate widths must match the truth at input/output")
        if sigma2 < 0:
            raise ConstraintError("sigma2 must be nonnegative")
        self.widths = widths
        self.true_net = true_net
        self.sigma2 = float(sigma2)
        self.input_low = float(input_low)
        self.input_high = float(input_high)
        rng = stream(eval_seed, 2)
        self._eval_x = rng.uniform(self.input_low, self.input_high,
                                   size=(eval_points, widths[0]))
        self._eval_truth = relu_forward_batch(true_net, self._eval_x)

    @property
    def param_dim(self) -> int:
        return relu_param_dim(self.widths)

    def network_of(self, theta: Array) -> ReluNetwork:
        return unpack_relu_params(self.widths, theta)

    def sample_dataset(self, n: int, seed: int) -> Dataset:
        if n < 0:
            raise ConstraintError("n must be nonnegative")
        rng = stream(seed, 3)
        x = rng.uniform(self.input_low, self.input_high, size=(n, self.widths[0]))
        f = relu_forward_batch(self.true_net, x)
        y = f + rng.standard_normal(f.shape) * self.sigma2
        return Dataset("regression", n, seed, x_mat=x,
                       y=y[:, 0] if y.shape[1] == 1 else y)

    def _y2d(self, data: Dataset) -> Array:
        y = data.y
        return y[:, None] if y.ndim == 1 else y

    def excess_losses(self, theta, data: Dataset) -> Array:
        if data.kind != "regression":
            raise ConstraintError("ReLU regression model requires a regression dataset")
        y = self._y2d(data)
        pred = relu_forward_batch(self.network_of(np.asarray(theta, dtype=float)), data.x_mat)
        base = relu_forward_batch(self.true_net, data.x_mat)
        return np.sum((y - pred) ** 2, axis=1) - np.sum((y - base) ** 2, axis=1)

    def empirical_risk(self, theta, data: Dataset) -> float:
        if data.n == 0:
            raise ConstraintError("empirical risk of an empty dataset is undefined")
        return float(np.mean(self.excess_losses(theta, data)))

    def population_excess_risk(self, theta) -> float:
        pred = relu_forward_batch(self.network_of(np.asarray(theta, dtype=float)), self._eval_x)
        return float(np.mean(np.sum((pred - self._eval_truth) ** 2, axis=1)))

    def population_excess_risk_batch(self, thetas: Array) -> Array:
        return np.array([self.population_excess_risk(t) for t in thetas])

    def empirical_target(self, data: Dataset) -> ReluSseTarget:
        if data.n == 0:
            raise ConstraintError("cannot build a sampling target from an empty dataset")
        y = self._y2d(data)
        base = relu_forward_batch(self.true_net, data.x_mat)
        baseline = np.sum((y - base) ** 2, axis=1)
        return ReluSseTarget(data.x_mat, y, baseline, self.widths)

    def population_target(self) -> CallbackTarget:
        return CallbackTarget(self.population_excess_risk)


# ---------------------------------------------------------------------------
# Logistic classification
# ---------------------------------------------------------------------------


def _softplus(t: Array) -> Array:
    # log(1 + e^t), stable for large |t|
    return np.logaddexp(0.0, t)


def logistic_excess_risk(f_values, fstar_values, eta_values,
                         b3: float | None = None, tau: float | None = None) -> float:
    """Excess logistic risk of ``f`` against reference ``fstar`` on a sample.

    For each sample point the label expectation is taken exactly using the
    conditional class probability ``eta``; the result is the sample average of

        eta * [l(f) - l(fstar)]_{y=+1} + (1 - eta) * [l(f) - l(fstar)]_{y=-1}

    with ``l`` the logistic loss.  When ``fstar`` is the log odds of ``eta``
    this is the Monte Carlo population excess risk.  Optional ``b3`` / ``tau``
    enforce the logit bound and the margin condition.
    """
    f = np.asarray(f_values, dtype=float)
    fs = np.asarray(fstar_values, dtype=float)
    eta = np.asarray(eta_values, dtype=float)
    if not (f.shape == fs.shape == eta.shape):
        raise ConstraintError("f, fstar and eta must have identical shapes")
    if b3 is not None and np.max(np.abs(f)) > b3 + 1e-12:
        raise ConstraintError(f"|f| exceeds the logit bound b3={b3}")
    if tau is not None:
        if not (0 < tau < 0.5):
            raise ConstraintError("tau must lie in (0, 1/2)")
        if np.min(eta) < tau - 1e-12 or np.max(eta) > 1 - tau + 1e-12:
            raise ConstraintError("margin condition tau <= eta <= 1 - tau violated")
    loss_pos = _softplus(-f) - _softplus(-fs)
    loss_neg = _softplus(f) - _softplus(fs)
    return float(np.mean(eta * loss_pos + (1.0 - eta) * loss_neg))


class LogisticLinearModel:
    """Binary classification with affine logits ``f(x) = a0 + a1 x``.

    Inputs are uniform on [0, 1] and the truth coefficients define the log
    odds, so the conditional class probability is ``sigmoid(f_star)``.  The
    logits are affine, hence bounds and margins are exact endpoint checks.
    """

    kind = "classification"

    def __init__(self, truth_coeffs, b3: float, tau: float, quad_points: int = 256):
        self.truth = np.asarray(truth_coeffs, dtype=float)
        if self.truth.shape != (2,):
            raise ConstraintError("truth_coeffs must be (a0, a1)")
        if not (0 < tau < 0.5):
            raise ConstraintError("tau must lie in (0, 1/2)")
        self.b3 = float(b3)
        self.tau = float(tau)
        self._check_param(self.truth)
        eta = _sigmoid(self._logits(self.truth, np.array([0.0, 1.0])))
        if eta.min() < tau - 1e-12 or eta.max() > 1 - tau + 1e-12:
            raise ConstraintError("truth logits violate the margin condition")
        nodes, weights = np.polynomial.legendre.leggauss(quad_points)
        self._qx = 0.5 * (nodes + 1.0)
        self._qw = 0.5 * weights

    def _check_param(self, coeffs: Array):
        ends = self._logits(coeffs, np.array([0.0, 1.0]))
        if np.max(np.abs(ends)) > self.b3 + 1e-12:
            raise ConstraintError(f"logits exceed b3={self.b3} on [0, 1]")

    @staticmethod
    def _logits(coeffs: Array, x: Array) -> Array:
        return coeffs[0] + coeffs[1] * x

    @property
    def param_dim(self) -> int:
        return 2

    def sample_dataset(self, n: int, seed: int) -> Dataset:
        if n < 0:
            raise ConstraintError("n must be nonnegative")
        rng = stream(seed, 4)
        x = rng.uniform(0.0, 1.0, size=(n, 1))
        eta = _sigmoid(self._logits(self.truth, x[:, 0]))
        y = np.where(rng.random(n) < eta, 1.0, -1.0)
        return Dataset("classification", n, seed, x_mat=x, y=y)

    def excess_losses(self, coeffs, data: Dataset) -> Array:
        if data.kind != "classification":
            raise ConstraintError("logistic model requires a classification dataset")
        coeffs = np.asarray(coeffs, dtype=float)
        self._check_param(coeffs)
        x = data.x_mat[:, 0]
        f = self._logits(coeffs, x)
        fs = self._logits(self.truth, x)
        return _softplus(-data.y * f) - _softplus(-data.y * fs)

    def empirical_risk(self, coeffs, data: Dataset) -> float:
        if data.n == 0:
            raise ConstraintError("empirical risk of an empty dataset is undefined")
        return float(np.mean(self.excess_losses(coeffs, data)))

    def population_excess_risk(self, coeffs) -> float:
        """Exact-in-Y excess risk, integrated over X by Gauss-Legendre."""
        coeffs = np.asarray(coeffs, dtype=float)
        f = self._logits(coeffs, self._qx)
        fs = self._logits(self.truth, self._qx)
        eta = _sigmoid(fs)
        integrand = eta * (_softplus(-f) - _softplus(-fs)) \
            + (1.0 - eta) * (_softplus(f) - _softplus(fs))
        return float(np.sum(self._qw * integrand))

    def population_excess_risk_batch(self, thetas: Array) -> Array:
        return np.array([self.population_excess_risk(t) for t in thetas])

    def empirical_target(self, data: Dataset) -> CallbackTarget:
        return CallbackTarget(lambda theta: self.empirical_risk(theta, data))


def _sigmoid(t: Array) -> Array:
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def empirical_excess_risk(params, data: Dataset, model) -> float:
    """Average excess loss of ``params`` over ``data`` under ``model``."""
    return model.empirical_risk(params, data)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def write_dataset_csv(data: Dataset, path):
    """Write ``i,j,y`` rows for completion, ``x0..xk,y`` otherwise."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if data.kind == "completion":
            writer.writerow(["i", "j", "y"])
            for i, j, y in zip(data.rows, data.cols, data.y):
                writer.writerow([int(i), int(j), repr(float(y))])
        else:
            if data.y.ndim != 1:
                raise ConstraintError("CSV serialization supports scalar responses only")
            k = data.x_mat.shape[1]
            writer.writerow([f"x{c}" for c in range(k)] + ["y"])
            for row, y in zip(data.x_mat, data.y):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def read_dataset_csv(path, seed: int = 0) -> Dataset:
    """Read a dataset written by :func:`write_dataset_csv` (kind inferred)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = [row for row in reader if row]
    if header == ["i", "j", "y"]:
        rows = np.array([int(r[0]) for r in body], dtype=np.int64)
        cols = np.array([int(r[1]) for r in body], dtype=np.int64)
        y = np.array([float(r[2]) for r in body])
        return Dataset("completion", len(body), seed, rows=rows, cols=cols, y=y)
    if header[-1] == "y" and all(h == f"x{c}" for c, h in enumerate(header[:-1])):
        x = np.array([[float(v) for v in r[:-1]] for r in body])
        y = np.array([float(r[-1]) for r in body])
        kind = "classification" if len(y) and np.all(np.isin(y, (-1.0, 1.0))) else "regression"
        return Dataset(kind, len(body), seed, x_mat=x.reshape(len(body), -1), y=y)
    raise ConstraintError(f"unrecognized dataset header {header!r}")
