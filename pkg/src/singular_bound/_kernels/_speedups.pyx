# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled reflected random-walk Metropolis segments.

Each function advances one chain by ``len(log_unifs)`` steps with pre-drawn
innovations, mutating ``theta`` in place and recording every post-step state
and risk.  The arithmetic mirrors ``fallback.py`` so both backends generate
the same trajectories from the same random numbers.
"""

from libc.math cimport fmod

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _reflect_scalar(double y, double lo, double hi) nogil:
    cdef double width = hi - lo
    cdef double period = 2.0 * width
    cdef double t = fmod(y - lo, period)
    if t < 0.0:
        t += period
    if t <= width:
        return lo + t
    return lo + (period - t)


cdef double _completion_risk_c(double[::1] theta, double[:, ::1] m_star,
                               double[:, ::1] a_coef, double[:, ::1] b_coef,
                               Py_ssize_t h_dim, double[:, ::1] m_buf) nogil:
    cdef Py_ssize_t d1 = m_star.shape[0]
    cdef Py_ssize_t d2 = m_star.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, total
    cdef Py_ssize_t v_off = d1 * h_dim
    for i in range(d1):
        for j in range(d2):
            acc = 0.0
            for k in range(h_dim):
                acc += theta[i * h_dim + k] * theta[v_off + k * d2 + j]
            m_buf[i, j] = acc
    total = 0.0
    for i in range(d1):
        for j in range(d2):
            diff = m_buf[i, j] - m_star[i, j]
            total += a_coef[i, j] * diff * diff + b_coef[i, j] * diff
    return total


def rwm_segment_completion(double[:, ::1] m_star, double[:, ::1] a_coef,
                           double[:, ::1] b_coef, Py_ssize_t h_dim,
                           double[::1] theta, double risk0, double gamma,
                           double[::1] lo, double[::1] hi, double[::1] scale,
                           double[:, ::1] normals, double[::1] log_unifs,
                           double[:, ::1] out_samples, double[::1] out_risks):
    cdef Py_ssize_t steps = log_unifs.shape[0]
    cdef Py_ssize_t dim = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef long accepts = 0
    cdef double risk = risk0
    cdef double risk_prop
    prop_arr = np.empty(dim, dtype=np.float64)
    m_arr = np.empty((m_star.shape[0], m_star.shape[1]), dtype=np.float64)
    cdef double[::1] prop = prop_arr
    cdef double[:, ::1] m_buf = m_arr
    with nogil:
        for i in range(steps):
            for j in range(dim):
                prop[j] = _reflect_scalar(theta[j] + scale[j] * normals[i, j],
                                          lo[j], hi[j])
            risk_prop = _completion_risk_c(prop, m_star, a_coef, b_coef, h_dim, m_buf)
            if log_unifs[i] < -gamma * (risk_prop - risk):
                for j in range(dim):
                    theta[j] = prop[j]
                risk = risk_prop
                accepts += 1
            for j in range(dim):
                out_samples[i, j] = theta[j]
            out_risks[i] = risk
    return accepts, risk


cdef double _relu_risk_c(double[::1] theta, double[:, ::1] x_mat,
                         double[:, ::1] y_mat, double[::1] baseline,
                         long[::1] widths, double[:, ::1] buf_a,
                         double[:, ::1] buf_b) nogil:
    cdef Py_ssize_t n = x_mat.shape[0]
    cdef Py_ssize_t n_layers = widths.shape[0] - 1
    cdef Py_ssize_t layer, row, i, j, pos
    cdef Py_ssize_t h_in, h_out
    cdef double acc, total, resid
    total = 0.0
    for row in range(n):
        for j in range(x_mat.shape[1]):
            buf_a[row, j] = x_mat[row, j]
    pos = 0
    for layer in range(n_layers):
        h_in = widths[layer]
        h_out = widths[layer + 1]
        for row in range(n):
            for i in range(h_out):
                acc = theta[pos + h_out * h_in + i]
                for j in range(h_in):
                    acc += theta[pos + i * h_in + j] * buf_a[row, j]
                buf_b[row, i] = acc if acc > 0.0 else 0.0
        pos += h_out * h_in + h_out
        for row in range(n):
            for i in range(h_out):
                buf_a[row, i] = buf_b[row, i]
    h_out = widths[n_layers]
    for row in range(n):
        resid = 0.0
        for i in range(h_out):
            acc = y_mat[row, i] - buf_a[row, i]
            resid += acc * acc
        total += resid - baseline[row]
    return total / n


def rwm_segment_relu(double[:, ::1] x_mat, double[:, ::1] y_mat,
                     double[::1] baseline, long[::1] widths,
                     double[::1] theta, double risk0, double gamma,
                     double[::1] lo, double[::1] hi, double[::1] scale,
                     double[:, ::1] normals, double[::1] log_unifs,
                     double[:, ::1] out_samples, double[::1] out_risks):
    cdef Py_ssize_t steps = log_unifs.shape[0]
    cdef Py_ssize_t dim = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef long accepts = 0
    cdef double risk = risk0
    cdef double risk_prop
    cdef Py_ssize_t n = x_mat.shape[0]
    cdef long max_width = 0
    for i in range(widths.shape[0]):
        if widths[i] > max_width:
            max_width = widths[i]
    prop_arr = np.empty(dim, dtype=np.float64)
    a_arr = np.empty((n, max_width), dtype=np.float64)
    b_arr = np.empty((n, max_width), dtype=np.float64)
    cdef double[::1] prop = prop_arr
    cdef double[:, ::1] buf_a = a_arr
    cdef double[:, ::1] buf_b = b_arr
    with nogil:
        for i in range(steps):
            for j in range(dim):
                prop[j] = _reflect_scalar(theta[j] + scale[j] * normals[i, j],
                                          lo[j], hi[j])
            risk_prop = _relu_risk_c(prop, x_mat, y_mat, baseline, widths,
                                     buf_a, buf_b)
            if log_unifs[i] < -gamma * (risk_prop - risk):
                for j in range(dim):
                    theta[j] = prop[j]
                risk = risk_prop
                accepts += 1
            for j in range(dim):
                out_samples[i, j] = theta[j]
            out_risks[i] = risk
    return accepts, risk
