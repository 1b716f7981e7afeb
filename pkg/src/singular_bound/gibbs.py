"""Gibbs posterior sampling and high-probability risk certificates.

The Gibbs posterior tilts a box-uniform prior by the empirical excess risk:
``density proportional to exp(-omega n R_n(theta))`` inside the box.  This
module samples it with the reflected Metropolis kernel, averages the
population excess risk over the draws, and evaluates the certificate

    bound = 2 / ((1 - omega L / 2) omega n)
            * [lambda log n - (m - 1) log log n + log(2 / delta) + c0]

whose bracket is floored at zero (the risk is nonnegative, so a negative
bracket certifies nothing sharper).  Finite-grid identities used in the
derivation — the tilted-expectation (Donsker-Varadhan) inequality and the
variational optimality of the Gibbs weights — are provided as checkable
operations.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bernstein import BernsteinConstants
from .errors import ConstraintError, DiagnosticError
from .mcmc import batch_means_stderr, effective_sample_size, run_reflected_rwm
from .rng import stream

Array = np.ndarray

MIN_ACCEPTANCE = 0.02


@dataclass(frozen=True, eq=False)
class GibbsConfig:
    """Sampler configuration for one Gibbs posterior run.

    ``prior_box`` lists (lo, hi) per coordinate.  When ``constants`` is
    attached, the learning rate must sit strictly below its cap.  A zero
    ``omega`` is allowed and samples the prior itself.
    """

    omega: float
    n: int
    prior_box: tuple
    chain_length: int
    burn_in: int
    seed: int
    thinning: int = 1
    chains: int = 1
    proposal_scale: float | None = None
    constants: BernsteinConstants | None = None

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.prior_box)
        object.__setattr__(self, "prior_box", box)
        if any(hi <= lo for lo, hi in box) or not box:
            raise ConstraintError("prior box must be nonempty with lo < hi")
        if self.omega < 0:
            raise ConstraintError("omega must be nonnegative")
        if self.constants is not None and self.omega >= self.constants.omega_bar:
            raise ConstraintError(
                f"omega={self.omega} is not below the learning-rate cap "
                f"{self.constants.omega_bar:.6g}")
        if self.n < 1:
            raise ConstraintError("n must be positive")
        if not 0 <= self.burn_in < self.chain_length:
            raise ConstraintError("need 0 <= burn_in < chain_length")
        if self.thinning < 1 or self.chains < 1:
            raise ConstraintError("thinning and chains must be positive")
        if self.proposal_scale is not None and self.proposal_scale <= 0:
            raise ConstraintError("proposal scale must be positive")

    @property
    def box_lo(self) -> Array:
        return np.array([lo for lo, _ in self.prior_box])

    @property
    def box_hi(self) -> Array:
        return np.array([hi for _, hi in self.prior_box])

    @property
    def log_prior_density(self) -> float:
        """log phi_0 for the uniform prior: minus the log box volume."""
        return -float(np.sum(np.log(self.box_hi - self.box_lo)))


@dataclass(eq=False)
class GibbsDiagnostics:
    acceptance_rates: tuple
    ess: float
    chain_splits: tuple  # start index of each chain in the sample array
    risks: Array         # empirical risk at every kept draw


def sample_gibbs_posterior(model, data, config: GibbsConfig):
    """Draw from the Gibbs posterior; returns ``(samples, diagnostics)``.

    Runs ``config.chains`` independent chains on distinct RNG streams and
    concatenates their thinned draws.  A post-burn-in acceptance rate below
    0.02 in any chain is a diagnostic failure.
    """
    if data.n != config.n:
        raise ConstraintError(f"config.n={config.n} but dataset has n={data.n}")
    target = model.empirical_target(data)
    dim = model.param_dim
    if len(config.prior_box) != dim:
        raise ConstraintError(f"prior box lists {len(config.prior_box)} coordinates "
                              f"for a {dim}-dimensional model")
    gamma = config.omega * config.n
    pieces, risks, rates, splits = [], [], [], []
    pos = 0
    for chain in range(config.chains):
        res = run_reflected_rwm(
            target, gamma=gamma, box_lo=config.box_lo, box_hi=config.box_hi,
            chain_length=config.chain_length, burn_in=config.burn_in,
            thinning=config.thinning, seed=config.seed, stream_key=(8, chain),
            base_scale=config.proposal_scale)
        if res.acceptance_rate < MIN_ACCEPTANCE:
            raise DiagnosticError(
                f"chain {chain} acceptance rate {res.acceptance_rate:.4f} < "
                f"{MIN_ACCEPTANCE}; the proposal scale is mistuned")
        pieces.append(res.samples)
        risks.append(res.risks)
        rates.append(res.acceptance_rate)
        splits.append(pos)
        pos += len(res.samples)
    samples = np.vstack(pieces)
    all_risks = np.concatenate(risks)
    diag = GibbsDiagnostics(tuple(rates), effective_sample_size(all_risks),
                            tuple(splits), all_risks)
    return samples, diag


def posterior_mean_excess_risk(samples: Array, model,
                               chain_splits=(0,)) -> tuple:
    """Average population excess risk over draws, with batch-means error.

    The standard error respects chain structure: batch means are taken per
    chain and combined in quadrature with sample-count weights.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) == 0:
        raise ConstraintError("no posterior samples given")
    values = model.population_excess_risk_batch(samples)
    bounds = list(chain_splits) + [len(samples)]
    total = len(samples)
    var = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b > a:
            se = batch_means_stderr(values[a:b])
            var += (se * (b - a) / total) ** 2
    return float(np.mean(values)), float(math.sqrt(var))


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


RLCT_SOURCES = ("h-min", "closed-form", "relu-bound", "bic")


@dataclass(frozen=True)
class BoundCertificate:
    """All inputs of the explicit risk bound together with its value."""

    lam: Fraction
    m: int
    l_var: float
    omega: float
    delta: float
    n: int
    c0: float
    bound_value: float
    rlct_source: str

    def __post_init__(self):
        recomputed = certificate_value(self.lam, self.m, self.l_var, self.omega,
                                       self.n, self.delta, self.c0)
        if abs(recomputed - self.bound_value) > 1e-12 * max(1.0, abs(recomputed)):
            raise ConstraintError("bound_value does not recompute from the fields")

    def to_json_dict(self) -> dict:
        return {
            "lambda": {"num": self.lam.numerator, "den": self.lam.denominator},
            "m": self.m, "L": self.l_var, "omega": self.omega, "delta": self.delta,
            "n": self.n, "c0": self.c0, "bound": self.bound_value,
            "rlct_source": self.rlct_source,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BoundCertificate":
        d = json.loads(text)
        return cls(Fraction(d["lambda"]["num"], d["lambda"]["den"]), d["m"], d["L"],
                   d["omega"], d["delta"], d["n"], d["c0"], d["bound"],
                   d["rlct_source"])


def certificate_value(lam, m: int, l_var: float, omega: float, n: int,
                      delta: float, c0: float) -> float:
    bracket = float(lam) * math.log(n) - (m - 1) * math.log(math.log(n)) \
        + math.log(2.0 / delta) + c0
    bracket = max(bracket, 0.0)
    return 2.0 / ((1.0 - omega * l_var / 2.0) * omega * n) * bracket


def pac_bayes_certificate(lam, m: int, l_var: float, omega: float, n: int,
                          delta: float, c0: float,
                          rlct_source: str = "h-min") -> BoundCertificate:
    """Evaluate the explicit high-probability bound on the posterior risk.

    Requires ``omega L < 2`` (so the prefactor is positive), ``n >= 3`` (so
    ``log log n > 0``), and ``delta`` in (0, 1).  The bracket is floored at
    zero before scaling.
    """
    lam = lam if isinstance(lam, Fraction) else Fraction(lam)
    if lam <= 0 or m < 1:
        raise ConstraintError("need lambda > 0 and m >= 1")
    if omega <= 0 or omega * l_var >= 2.0:
        raise ConstraintError(f"need 0 < omega < 2/L = {2.0 / l_var:.6g}, got {omega}")
    if n < 3:
        raise ConstraintError("n must be at least 3 so that log log n > 0")
    if not 0.0 < delta < 1.0:
        raise ConstraintError(f"delta must lie strictly inside (0, 1), got {delta}")
    if rlct_source not in RLCT_SOURCES:
        raise ConstraintError(f"rlct_source must be one of {RLCT_SOURCES}")
    value = certificate_value(lam, m, l_var, omega, n, delta, c0)
    return BoundCertificate(lam, m, l_var, omega, delta, int(n), c0, value, rlct_source)


def completion_bound_constant(d1: int, d2: int, h: int, r: int, omega: float,
                              l_var: float, p0, q0) -> float:
    """The n-independent additive constant of the completion certificate.

    Collects the chart bookkeeping of the completion resolution:

      9 (H-r+2)^2 (d1+d2-r) log(2 r d1 d2) + H log|det(P0) det(Q0)|
        + (H (d1+d2-r) / 2) log(3 + 3 omega L / 2)
        + omega smax(P0)^2 smax(Q0)^2.
    """
    if min(d1, d2, h, r) < 1 or r > h or h > min(d1, d2):
        raise ConstraintError("invalid completion dimensions")
    if omega <= 0 or l_var <= 0:
        raise ConstraintError("omega and L must be positive")
    p0 = np.asarray(p0, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    dets = []
    smax2 = []
    for name, a in (("p0", p0), ("q0", q0)):
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConstraintError(f"{name} must be square")
        svals = np.linalg.svd(a, compute_uv=False)
        if svals[-1] <= 1e-12:
            raise ConstraintError(f"{name} is numerically singular")
        dets.append(abs(float(np.linalg.det(a))))
        smax2.append(float(svals[0] ** 2))
    return (9.0 * (h - r + 2) ** 2 * (d1 + d2 - r) * math.log(2 * r * d1 * d2)
            + h * math.log(dets[0] * dets[1])
            + 0.5 * h * (d1 + d2 - r) * math.log(3.0 + 1.5 * omega * l_var)
            + omega * smax2[0] * smax2[1])


# ---------------------------------------------------------------------------
# Finite-grid identities
# ---------------------------------------------------------------------------


def _check_weights(w: Array, name: str):
    if np.any(w < 0):
        raise ConstraintError(f"{name} has negative entries")
    if abs(float(np.sum(w)) - 1.0) > 1e-12:
        raise ConstraintError(f"{name} must sum to 1 within 1e-12")


def kl_divergence(rho: Array, prior: Array) -> float:
    """KL(rho || prior) on a finite grid; requires support containment."""
    rho = np.asarray(rho, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if np.any((prior == 0) & (rho > 0)):
        raise ConstraintError("rho must vanish wherever the prior vanishes")
    mask = rho > 0
    return float(np.sum(rho[mask] * (np.log(rho[mask]) - np.log(prior[mask]))))


def dv_inequality_check(h_values, prior_weights, rho_weights,
                        tol: float = 1e-12) -> tuple:
    """Tilted-expectation inequality on a finite grid.

    Returns ``(lhs, rhs, holds)`` where ``lhs = log sum_i prior_i exp(h_i)``
    and ``rhs = sum_i rho_i h_i - KL(rho || prior)``; the inequality
    ``lhs >= rhs`` is tight exactly when rho is the Gibbs tilt of the prior.
    """
    hv = np.asarray(h_values, dtype=float)
    prior = np.asarray(prior_weights, dtype=float)
    rho = np.asarray(rho_weights, dtype=float)
    if not (hv.shape == prior.shape == rho.shape):
        raise ConstraintError("h, prior and rho must have identical shapes")
    _check_weights(prior, "prior")
    _check_weights(rho, "rho")
    kl = kl_divergence(rho, prior)
    mask = prior > 0
    shift = float(np.max(hv[mask]))
    lhs = shift + math.log(float(np.sum(prior[mask] * np.exp(hv[mask] - shift))))
    rhs = float(np.dot(rho, hv)) - kl
    return lhs, rhs, bool(lhs >= rhs - tol)


def gibbs_weights(risk_values: Array, prior_weights: Array, omega: float,
                  n: float) -> Array:
    """Normalized weights proportional to ``prior * exp(-omega n risk)``."""
    risk = np.asarray(risk_values, dtype=float)
    prior = np.asarray(prior_weights, dtype=float)
    logw = np.where(prior > 0, np.log(np.where(prior > 0, prior, 1.0))
                    - omega * n * risk, -np.inf)
    logw -= np.max(logw)
    w = np.exp(logw)
    return w / np.sum(w)


def variational_objective(rho: Array, risk_values: Array, prior_weights: Array,
                          omega: float, n: float) -> float:
    return float(np.dot(rho, risk_values)) + kl_divergence(rho, prior_weights) / (omega * n)


def variational_optimality_check(risk_values, prior_weights, omega: float, n: float,
                                 perturbations: int, seed: int,
                                 tol: float = 1e-12) -> bool:
    """Check that the Gibbs weights minimize risk + KL/(omega n) on a grid.

    Compares the Gibbs objective against ``perturbations`` random candidate
    distributions drawn uniformly from the simplex on the prior's support.
    """
    risk = np.asarray(risk_values, dtype=float)
    prior = np.asarray(prior_weights, dtype=float)
    _check_weights(prior, "prior")
    if omega * n <= 0:
        raise ConstraintError("omega * n must be positive")
    best = gibbs_weights(risk, prior, omega, n)
    obj = variational_objective(best, risk, prior, omega, n)
    rng = stream(seed, 9)
    support = np.flatnonzero(prior > 0)
    for _ in range(perturbations):
        cand = np.zeros_like(prior)
        cand[support] = rng.dirichlet(np.ones(len(support)))
        if variational_objective(cand, risk, prior, omega, n) < obj - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_chain_csv(samples: Array, diag: GibbsDiagnostics, path):
    """CSV rows ``chain,iter,coord0..coordk,risk`` for all kept draws."""
    samples = np.asarray(samples, dtype=float)
    dim = samples.shape[1]
    bounds = list(diag.chain_splits) + [len(samples)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "iter"] + [f"coord{c}" for c in range(dim)] + ["risk"])
        for chain, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
            for it in range(a, b):
                writer.writerow([chain, it - a] + [repr(float(v)) for v in samples[it]]
                                + [repr(float(diag.risks[it]))])
