"""Sub-exponential moment constants for the supported losses.

The moment condition asserts, for every admissible tilt ``w`` with
``|w| <= 1/(2b)``, that the centered excess loss satisfies

    E exp{w (loss - R)} <= exp{w^2 L R / 2},

with variance factor ``L`` proportional to the excess risk ``R``.  This
module computes ``(L, b)`` and the induced learning-rate cap for squared
and logistic losses, and checks the inequality empirically by Monte Carlo
with a bootstrap-inflated pass criterion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .rng import stream

BOOTSTRAP_RESAMPLES = 200
_BOOTSTRAP_BATCHES = 500


@dataclass(frozen=True)
class BernsteinConstants:
    """Variance factor L, MGF scale b, and learning-rate cap.

    ``omega_bar = min(2/L, 1/(2b))`` is the largest learning rate for which
    the risk certificate applies.
    """

    l_var: float
    b_scale: float

    def __post_init__(self):
        if self.l_var <= 0 or self.b_scale <= 0:
            raise ConstraintError("L and b must be positive")

    @property
    def omega_bar(self) -> float:
        return min(2.0 / self.l_var, 1.0 / (2.0 * self.b_scale))

    @property
    def omega_band(self) -> float:
        """Half-width of the admissible tilt interval, 1/(2b)."""
        return 1.0 / (2.0 * self.b_scale)


def squared_loss_constants(b0: float, sigma: float) -> BernsteinConstants:
    """Constants for squared loss with predictions bounded by ``b0``.

    ``L = 32 b0^2 + 4 sigma^2`` and ``1/(2b) = min(3/(16 b0^2), 1/(2 sigma^2))``,
    where the noiseless branch of the min is +infinity.
    """
    if b0 <= 0:
        raise ConstraintError("b0 must be positive")
    if sigma < 0:
        raise ConstraintError("sigma must be nonnegative")
    half_band = 3.0 / (16.0 * b0 * b0)
    if sigma > 0:
        half_band = min(half_band, 1.0 / (2.0 * sigma * sigma))
    return BernsteinConstants(32.0 * b0 * b0 + 4.0 * sigma * sigma, 1.0 / (2.0 * half_band))


def logistic_loss_constants(b3: float, tau: float) -> BernsteinConstants:
    """Constants for logistic loss with logits bounded by ``b3``, margin ``tau``."""
    if b3 < 0:
        raise ConstraintError("b3 must be nonnegative")
    if not 0 < tau < 0.5:
        raise ConstraintError("tau must lie in (0, 1/2)")
    return BernsteinConstants(8.0 / (tau * (1.0 - tau)), math.log1p(math.exp(b3)))


@dataclass(frozen=True)
class MgfCheckRow:
    omega: float
    empirical: float
    cap: float
    stderr: float
    passed: bool


@dataclass(frozen=True)
class MgfReport:
    rows: tuple
    risk: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_json(self) -> str:
        return json.dumps(
            [{"omega": r.omega, "empirical": r.empirical, "cap": r.cap,
              "stderr": r.stderr, "pass": r.passed} for r in self.rows])


def bootstrap_stderr_log_mean(values: np.ndarray, rng,
                              resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Bootstrap standard error of log(mean(values)).

    Resamples equal-size batches rather than raw points; for i.i.d. input
    the variance of the resampled mean is the same to first order, at a
    cost independent of the sample size.
    """
    n = len(values)
    if n < 4:
        return 0.0
    n_batches = min(_BOOTSTRAP_BATCHES, n)
    m = n // n_batches
    batch_means = values[: n_batches * m].reshape(n_batches, m).mean(axis=1)
    idx = rng.integers(0, n_batches, size=(resamples, n_batches))
    means = batch_means[idx].mean(axis=1)
    if np.any(means <= 0):
        return float("inf")
    return float(np.std(np.log(means), ddof=1))


def empirical_mgf_check(model, theta, constants: BernsteinConstants, omegas,
                        n_samples: int, seed: int) -> MgfReport:
    """Monte Carlo check of the moment condition at each requested tilt.

    Draws ``n_samples`` fresh observations, forms the centered excess losses,
    and for each ``w`` compares the empirical log-MGF against the cap
    ``w^2 L R / 2`` inflated by 3 bootstrap standard errors.  Tilts outside
    the admissible band are rejected up front: they signal caller misuse,
    not a failure of the moment condition.
    """
    omegas = [float(w) for w in omegas]
    band = constants.omega_band
    for w in omegas:
        if abs(w) > band + 1e-12:
            raise ConstraintError(f"omega={w} lies outside the admissible band "
                                  f"[-1/(2b), 1/(2b)] = [{-band:.6g}, {band:.6g}]")
    if n_samples < 1:
        raise ConstraintError("n_samples must be positive")
    data = model.sample_dataset(n_samples, seed)
    losses = model.excess_losses(theta, data)
    risk = float(model.population_excess_risk(theta))
    centered = losses - risk
    boot_rng = stream(seed, 5)
    rows = []
    for w in omegas:
        tilted = np.exp(w * centered)
        mean = float(np.mean(tilted))
        empirical = math.log(mean) if mean > 0 else float("-inf")
        stderr = bootstrap_stderr_log_mean(tilted, boot_rng)
        cap = 0.5 * w * w * constants.l_var * risk
        rows.append(MgfCheckRow(w, empirical, cap, stderr,
                                empirical <= cap + 3.0 * stderr))
    return MgfReport(tuple(rows), risk)


def one_sided_mgf_bounds(model, theta, constants: BernsteinConstants, omega: float,
                         n_samples: int, seed: int) -> dict:
    """Empirical check of the two one-sided tilted-mean bounds.

    Under the moment condition, ``E exp(-w loss) <= exp(-(1 - wL/2) w R)`` and
    ``E exp(+w loss) <= exp((1 + wL/2) w R)`` for tilts inside the band.
    Returns the empirical means, their bootstrap-inflated caps, and flags.
    """
    if not 0 < omega <= constants.omega_band + 1e-12:
        raise ConstraintError("omega must lie in (0, 1/(2b)]")
    data = model.sample_dataset(n_samples, seed)
    losses = model.excess_losses(theta, data)
    risk = float(model.population_excess_risk(theta))
    boot_rng = stream(seed, 6)
    out = {}
    for sign, label in ((-1.0, "minus"), (1.0, "plus")):
        tilted = np.exp(sign * omega * losses)
        mean = float(np.mean(tilted))
        stderr = bootstrap_stderr_log_mean(tilted, boot_rng)
        cap = math.exp((1.0 + sign * omega * constants.l_var / 2.0) * sign * omega * risk)
        inflated = cap * math.exp(3.0 * stderr)
        out[label] = {"mean": mean, "cap": cap, "inflated_cap": inflated,
                      "pass": mean <= inflated}
    return out
