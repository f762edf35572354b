# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled weight-model kernels; same interface as ``_weights_py``."""
import numpy as np
from libc.math cimport exp, sqrt

CONSTANT, OPTIMAL, APPROX = 0, 1, 2
DEGENERATE = 1


cdef int _rhs(const double* w, double lam, double kappa, int policy, double* out) noexcept nogil:
    cdef double w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3]
    cdef double c0, c2, den
    if policy == 0:
        c0 = kappa * w1
        c2 = kappa * w2
    elif policy == 1:
        den = 3.0 * w0 - w1
        if den <= 0.0:
            return 1
        c0 = kappa * 3.0 * w0 * w1 / den
        c2 = kappa * (9.0 * w0 * w0 * w2 - 3.0 * w1 * w1 * w3) / (den * den)
    else:
        if w0 * w0 <= 0.0:
            return 1
        c0 = kappa * (w1 + w1 * w1 / (3.0 * w0))
        c2 = kappa * (w2 + w1 * (2.0 * w0 * w2 - w1 * w3) / (3.0 * w0 * w0))
    out[0] = -3.0 * lam * w0 + lam * w1 + c0
    out[1] = 3.0 * lam * w0 - 3.0 * lam * w1 + 2.0 * lam * w2 - c0
    out[2] = 3.0 * lam * w3 - 3.0 * lam * w2 + 2.0 * lam * w1 - c2
    out[3] = -3.0 * lam * w3 + lam * w2 + c2
    return 0


def weight_rhs_into(double[::1] w, double lam, double kappa, int policy, double[::1] out):
    return _rhs(&w[0], lam, kappa, policy, &out[0])


def weight_rhs(w, double lam, double kappa, int policy):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    out = np.zeros(4)
    cdef double[::1] ov = out
    status = _rhs(&wv[0], lam, kappa, policy, &ov[0])
    return out, status


def rk4_weights(w_init, double lam, double kappa, int policy, double dt, long steps, long stride):
    cdef double w[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef long n_samples = steps // stride + 1 + (1 if steps % stride else 0)
    samples = np.zeros((n_samples, 4))
    cdef double[:, ::1] sv = samples
    cdef double[::1] wi = np.ascontiguousarray(w_init, dtype=np.float64)
    cdef long step, idx = 1
    cdef int i, status = 0
    for i in range(4):
        w[i] = wi[i]
        sv[0, i] = w[i]
    with nogil:
        for step in range(1, steps + 1):
            status = _rhs(w, lam, kappa, policy, k1)
            if status:
                break
            for i in range(4):
                tmp[i] = w[i] + 0.5 * dt * k1[i]
            status = _rhs(tmp, lam, kappa, policy, k2)
            if status:
                break
            for i in range(4):
                tmp[i] = w[i] + 0.5 * dt * k2[i]
            status = _rhs(tmp, lam, kappa, policy, k3)
            if status:
                break
            for i in range(4):
                tmp[i] = w[i] + dt * k3[i]
            status = _rhs(tmp, lam, kappa, policy, k4)
            if status:
                break
            for i in range(4):
                w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if step % stride == 0 or step == steps:
                for i in range(4):
                    sv[idx, i] = w[i]
                idx += 1
    if status:
        return samples[:idx], DEGENERATE, step - 1
    return samples, 0, steps


cdef inline void _update(const double* w, double eps, double delta, double* out) noexcept nogil:
    cdef double a = (eps - delta) * (eps - delta)
    cdef double b = (eps + delta) * (eps + delta)
    out[0] = w[0] * (1.0 - 0.75 * a) + w[1] * 0.25 * b
    out[1] = w[1] * (1.0 - 0.25 * b) + w[0] * 0.75 * a
    out[2] = w[2] * (1.0 - 0.25 * b) + w[3] * 0.75 * a
    out[3] = w[3] * (1.0 - 0.75 * a) + w[2] * 0.25 * b


def weight_update_into(double[::1] w, double eps, double delta, double[::1] out):
    _update(&w[0], eps, delta, &out[0])


def discrete_weight_map(w_init, double lam, double kappa, int policy, double dt, long steps):
    cdef double w[4]
    cdef double noisy[4]
    cdef double t[4][4]
    cdef double eps = sqrt(kappa * dt)
    cdef double p = 0.5 * (1.0 - exp(-2.0 * lam * dt))
    cdef double q = 1.0 - p
    cdef double delta, den
    cdef long step
    cdef int i, j, status = 0
    out = np.zeros((steps + 1, 4))
    cdef double[:, ::1] ov = out
    cdef double[::1] wi = np.ascontiguousarray(w_init, dtype=np.float64)
    t[0][0] = q * q * q; t[0][1] = p * q * q; t[0][2] = p * p * q; t[0][3] = p * p * p
    t[1][0] = 3 * p * q * q; t[1][1] = q * q * q + 2 * p * p * q; t[1][2] = 2 * p * q * q + p * p * p; t[1][3] = 3 * p * p * q
    t[2][0] = 3 * p * p * q; t[2][1] = 2 * p * q * q + p * p * p; t[2][2] = q * q * q + 2 * p * p * q; t[2][3] = 3 * p * q * q
    t[3][0] = p * p * p; t[3][1] = p * p * q; t[3][2] = p * q * q; t[3][3] = q * q * q
    for i in range(4):
        w[i] = wi[i]
        ov[0, i] = w[i]
    with nogil:
        for step in range(1, steps + 1):
            for i in range(4):
                noisy[i] = 0.0
                for j in range(4):
                    noisy[i] += t[i][j] * w[j]
            if policy == 0:
                delta = eps
            else:
                den = 3.0 * noisy[0] - noisy[1]
                if den <= 0.0:
                    status = 1
                    break
                delta = eps * (3.0 * noisy[0] + noisy[1]) / den
            _update(noisy, eps, delta, w)
            for i in range(4):
                ov[step, i] = w[i]
    if status:
        return out[:step], DEGENERATE
    return out, 0
