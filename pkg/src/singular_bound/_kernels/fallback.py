"""Pure NumPy implementations of the sampler inner loops.

These mirror the compiled kernels in ``_speedups.pyx`` step for step: the
same pre-drawn innovations and the same reflection arithmetic produce the
same trajectories, so either backend can serve a chain.
"""

from __future__ import annotations

import numpy as np


def _reflect(y: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fold a proposal into the box; 2*(hi-lo)-periodic triangular map."""
    width = hi - lo
    period = 2.0 * width
    t = np.fmod(y - lo, period)
    t = np.where(t < 0.0, t + period, t)
    return lo + np.where(t <= width, t, period - t)


def _completion_risk(theta, m_star, a_coef, b_coef, h_dim):
    d1, d2 = m_star.shape
    u = theta[: d1 * h_dim].reshape(d1, h_dim)
    v = theta[d1 * h_dim:].reshape(h_dim, d2)
    diff = u @ v - m_star
    return float(np.sum(a_coef * diff * diff) + np.sum(b_coef * diff))


def _relu_risk(theta, x_mat, y_mat, baseline, widths):
    act = x_mat
    pos = 0
    for k in range(1, len(widths)):
        h_out, h_in = widths[k], widths[k - 1]
        w = theta[pos: pos + h_out * h_in].reshape(h_out, h_in)
        pos += h_out * h_in
        b = theta[pos: pos + h_out]
        pos += h_out
        act = np.maximum(act @ w.T + b, 0.0)
    resid = y_mat - act
    return float(np.mean(np.sum(resid * resid, axis=1) - baseline))


def _run_segment(risk_fn, theta, risk0, gamma, lo, hi, scale,
                 normals, log_unifs, out_samples, out_risks):
    risk = risk0
    accepts = 0
    for i in range(len(log_unifs)):
        prop = _reflect(theta + scale * normals[i], lo, hi)
        risk_prop = risk_fn(prop)
        if log_unifs[i] < -gamma * (risk_prop - risk):
            theta[:] = prop
            risk = risk_prop
            accepts += 1
        out_samples[i] = theta
        out_risks[i] = risk
    return accepts, risk


def rwm_segment_completion(m_star, a_coef, b_coef, h_dim, theta, risk0, gamma,
                           lo, hi, scale, normals, log_unifs, out_samples, out_risks):
    return _run_segment(
        lambda th: _completion_risk(th, m_star, a_coef, b_coef, h_dim),
        theta, risk0, gamma, lo, hi, scale, normals, log_unifs, out_samples, out_risks)


def rwm_segment_relu(x_mat, y_mat, baseline, widths, theta, risk0, gamma,
                     lo, hi, scale, normals, log_unifs, out_samples, out_risks):
    return _run_segment(
        lambda th: _relu_risk(th, x_mat, y_mat, baseline, widths),
        theta, risk0, gamma, lo, hi, scale, normals, log_unifs, out_samples, out_risks)


def rwm_segment_callback(fn, theta, risk0, gamma, lo, hi, scale,
                         normals, log_unifs, out_samples, out_risks):
    return _run_segment(fn, theta, risk0, gamma, lo, hi, scale,
                        normals, log_unifs, out_samples, out_risks)
