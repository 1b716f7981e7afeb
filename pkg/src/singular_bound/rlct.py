"""Real log canonical thresholds, computed in exact rational arithmetic.

RLCT pairs ``(lambda, m)`` are rationals by theory, and the multiplicity is
a count of exact ties, so everything here runs on ``fractions.Fraction`` and
integers; floats never enter.  Matrix completion gets two independent
routes: the discrete minimization of the blow-up parameter count (the
authoritative value) and the published piecewise closed form (retained as a
cross-check; the two disagree by exactly 1/4 in the odd interior regime,
which callers can surface via :func:`completion_discrepancy`).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConstraintError

REGIME_TALL = "case1"
REGIME_WIDE = "case2"
REGIME_INTERIOR_EVEN = "interior-even"
REGIME_INTERIOR_ODD = "interior-odd"


@dataclass(frozen=True)
class RlctPair:
    """Leading zeta pole magnitude ``lam`` and its multiplicity ``m``."""

    lam: Fraction
    m: int

    def __post_init__(self):
        if self.lam <= 0:
            raise ConstraintError("lambda must be positive")
        if self.m < 1:
            raise ConstraintError("multiplicity must be a positive integer")

    def as_json_dict(self, regime: str | None = None) -> dict:
        out = {"lambda": {"num": self.lam.numerator, "den": self.lam.denominator},
               "m": self.m}
        if regime is not None:
            out["regime"] = regime
        return out


@dataclass(frozen=True)
class NormalCrossingChart:
    """Per-coordinate exponents of a local monomial representation.

    ``k[j]`` is half the risk exponent of coordinate j (risk factor
    ``u_j^(2 k_j)``) and ``h[j]`` the Jacobian exponent (``u_j^(h_j)``).
    """

    k: tuple
    h: tuple

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        h = tuple(int(v) for v in self.h)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "h", h)
        if len(k) != len(h):
            raise ConstraintError("k and h must have equal lengths")
        if not k:
            raise ConstraintError("chart must have at least one coordinate")
        if min(k) < 0 or min(h) < 0:
            raise ConstraintError("exponents must be nonnegative integers")
        if max(k) == 0:
            raise ConstraintError("chart needs at least one positive risk exponent")


def _check_completion_dims(d1: int, d2: int, h: int, r: int):
    if min(d1, d2, h, r) < 1:
        raise ConstraintError("dimensions must be positive integers")
    if not r < h:
        raise ConstraintError(f"only the nontrivial regime 0 < r < H is supported "
                              f"(got r={r}, H={h})")
    if h > min(d1, d2):
        raise ConstraintError(f"need H <= min(d1, d2), got H={h}")
    if h + r > d1 + d2:
        raise ConstraintError("need H + r <= d1 + d2")


def completion_active_params(d1: int, d2: int, h: int, r: int, t: int) -> int:
    """Free-parameter count after ``t`` column-peeling blow-up steps.

    Equals ``r(d1+d2-r) + t(d1-r) + (H-r-t)(d2-r-t)``; the chart at step t
    contributes a candidate pole of half this value.
    """
    _check_completion_dims(d1, d2, h, r)
    if not 0 <= t <= h - r:
        raise ConstraintError(f"t must lie in [0, H-r], got t={t}")
    return r * (d1 + d2 - r) + t * (d1 - r) + (h - r - t) * (d2 - r - t)


def completion_rlct(d1: int, d2: int, h: int, r: int) -> RlctPair:
    """Completion RLCT by discrete minimization over blow-up depth.

    ``lambda`` is half the minimum active-parameter count over
    ``t in {0, ..., H-r}`` and ``m`` the number of minimizing t.
    """
    values = [completion_active_params(d1, d2, h, r, t) for t in range(h - r + 1)]
    best = min(values)
    return RlctPair(Fraction(best, 2), values.count(best))


def completion_regime(d1: int, d2: int, h: int, r: int) -> str:
    """Which branch of the piecewise closed form applies."""
    _check_completion_dims(d1, d2, h, r)
    if h <= d1 - d2 + r:
        return REGIME_TALL
    if h <= d2 - d1 + r:
        return REGIME_WIDE
    return REGIME_INTERIOR_EVEN if (h + d1 + d2 + r) % 2 == 0 else REGIME_INTERIOR_ODD


def completion_rlct_closed_form(d1: int, d2: int, h: int, r: int) -> RlctPair:
    """Completion RLCT from the published piecewise formula, verbatim.

    The odd interior branch keeps its printed "+1" correction, which makes
    it sit exactly 1/4 below the discrete-minimization value; see
    :func:`completion_discrepancy`.
    """
    regime = completion_regime(d1, d2, h, r)
    top = Fraction(h * d2 - h * r + d1 * r, 2)
    if regime == REGIME_TALL:
        return RlctPair(top, 1)
    if regime == REGIME_WIDE:
        return RlctPair(Fraction(h * d1 - h * r + d2 * r, 2), 1)
    gap = h - d1 + d2 - r
    if regime == REGIME_INTERIOR_EVEN:
        return RlctPair(top - Fraction(gap * gap, 8), 1)
    return RlctPair(top - Fraction(gap * gap + 1, 8), 2)


def completion_discrepancy(d1: int, d2: int, h: int, r: int) -> Fraction:
    """Discrete-minimization lambda minus closed-form lambda (0 or 1/4)."""
    return completion_rlct(d1, d2, h, r).lam - completion_rlct_closed_form(d1, d2, h, r).lam


def relu_rlct_upper_bound(true_widths) -> Fraction:
    """Half the free-parameter count of the minimal realizing network."""
    widths = tuple(int(w) for w in true_widths)
    if len(widths) < 2:
        raise ConstraintError("need at least input and output widths")
    if min(widths) < 1:
        raise ConstraintError("widths must be positive")
    return Fraction(sum(widths[k] * (widths[k - 1] + 1) for k in range(1, len(widths))), 2)


def normal_crossing_rlct(charts) -> RlctPair:
    """Leading pole over a chart cover: min of ``(h_j + 1) / (2 k_j)``.

    Coordinates with ``k_j = 0`` contribute no pole.  The multiplicity is
    the largest per-chart count of coordinates attaining the minimum.
    """
    charts = list(charts)
    if not charts:
        raise ConstraintError("chart list must be nonempty")
    candidates = []
    for chart in charts:
        if not isinstance(chart, NormalCrossingChart):
            chart = NormalCrossingChart(tuple(chart[0]), tuple(chart[1]))
        candidates.append([Fraction(hj + 1, 2 * kj) for kj, hj in zip(chart.k, chart.h)
                           if kj > 0])
    lam = min(min(c) for c in candidates if c)
    m = max(sum(1 for v in c if v == lam) for c in candidates)
    return RlctPair(lam, m)


def regular_model_rlct(d: int) -> Fraction:
    """The regular-model (BIC) value d/2, an upper bound for any RLCT."""
    if d < 1:
        raise ConstraintError("parameter count must be a positive integer")
    return Fraction(d, 2)


def frobenius_conjugation_bounds(p0, q0) -> tuple:
    """Squared singular-value range of the conjugation ``M -> P0 M Q0``.

    Returns ``(smin(P0)^2 smin(Q0)^2, smax(P0)^2 smax(Q0)^2)``; conjugating
    by invertible factors changes Frobenius norms by at most these factors.
    """
    lows, highs = [], []
    for name, a in (("p0", p0), ("q0", q0)):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConstraintError(f"{name} must be square")
        eigs = np.linalg.eigvalsh(a.T @ a)
        smin = float(np.sqrt(max(eigs[0], 0.0)))
        if smin <= 1e-12:
            raise ConstraintError(f"{name} is numerically singular")
        lows.append(eigs[0])
        highs.append(eigs[-1])
    return float(lows[0] * lows[1]), float(highs[0] * highs[1])


def finite_operator_constant(a) -> float:
    """Equivalence constant ``max(2 ||A||_F^2 + 1, 2)`` for the shear map.

    With ``D`` this value, ``||A1||^2 + ||A2 + A1 A||^2`` is within a factor
    ``D`` of ``||A1||^2 + ||A2||^2`` in both directions.
    """
    a = np.asarray(a, dtype=float)
    return float(max(2.0 * np.sum(a * a) + 1.0, 2.0))
