"""Pure-Python weight-model kernels; mirror of ``_weights.pyx``.

Policies: 0 constant correction, 1 optimal correction, 2 small-w1
approximation of the optimal equations.
"""
import math

import numpy as np

CONSTANT, OPTIMAL, APPROX = 0, 1, 2
DEGENERATE = 1


def weight_rhs_into(w, lam, kappa, policy, out):
    """Fill ``out`` with dw/dt; returns 0, or DEGENERATE if 3*w0 <= w1."""
    w0, w1, w2, w3 = w[0], w[1], w[2], w[3]
    if policy == CONSTANT:
        c0 = kappa * w1
        c2 = kappa * w2
    else:
        if policy == OPTIMAL:
            den = 3.0 * w0 - w1
            if den <= 0.0:
                return DEGENERATE
            c0 = kappa * 3.0 * w0 * w1 / den
            c2 = kappa * (9.0 * w0 * w0 * w2 - 3.0 * w1 * w1 * w3) / (den * den)
        else:
            if w0 * w0 <= 0.0:
                return DEGENERATE
            c0 = kappa * (w1 + w1 * w1 / (3.0 * w0))
            c2 = kappa * (w2 + w1 * (2.0 * w0 * w2 - w1 * w3) / (3.0 * w0 * w0))
    out[0] = -3.0 * lam * w0 + lam * w1 + c0
    out[1] = 3.0 * lam * w0 - 3.0 * lam * w1 + 2.0 * lam * w2 - c0
    out[2] = 3.0 * lam * w3 - 3.0 * lam * w2 + 2.0 * lam * w1 - c2
    out[3] = -3.0 * lam * w3 + lam * w2 + c2
    return 0


def weight_rhs(w, lam, kappa, policy):
    out = np.zeros(4)
    status = weight_rhs_into(np.asarray(w, dtype=float), lam, kappa, policy, out)
    return out, status


def rk4_weights(w_init, lam, kappa, policy, dt, steps, stride):
    """Fixed-step RK4; samples every ``stride`` steps (including t=0 and the end).

    Returns ``(samples, status, steps_done)``.
    """
    w = np.array(w_init, dtype=float)
    n_samples = steps // stride + 1 + (1 if steps % stride else 0)
    samples = np.zeros((n_samples, 4))
    samples[0] = w
    k1, k2, k3, k4, tmp = (np.zeros(4) for _ in range(5))
    idx = 1
    for step in range(1, steps + 1):
        if weight_rhs_into(w, lam, kappa, policy, k1):
            return samples[:idx], DEGENERATE, step - 1
        tmp[:] = w + 0.5 * dt * k1
        if weight_rhs_into(tmp, lam, kappa, policy, k2):
            return samples[:idx], DEGENERATE, step - 1
        tmp[:] = w + 0.5 * dt * k2
        if weight_rhs_into(tmp, lam, kappa, policy, k3):
            return samples[:idx], DEGENERATE, step - 1
        tmp[:] = w + dt * k3
        if weight_rhs_into(tmp, lam, kappa, policy, k4):
            return samples[:idx], DEGENERATE, step - 1
        w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == steps:
            samples[idx] = w
            idx += 1
    return samples, 0, steps


def weight_update_into(w, eps, delta, out):
    a = (eps - delta) ** 2
    b = (eps + delta) ** 2
    out[0] = w[0] * (1.0 - 0.75 * a) + w[1] * 0.25 * b
    out[1] = w[1] * (1.0 - 0.25 * b) + w[0] * 0.75 * a
    out[2] = w[2] * (1.0 - 0.25 * b) + w[3] * 0.75 * a
    out[3] = w[3] * (1.0 - 0.75 * a) + w[2] * 0.25 * b


def discrete_weight_map(w_init, lam, kappa, policy, dt, steps):
    """Alternate exact bit-flip noise over ``dt`` with one weak correction step.

    ``eps = sqrt(kappa*dt)``; ``delta = eps`` (constant) or the optimal value.
    Returns ``(weights, status)`` with one row per step (row 0 = initial).
    """
    w = np.array(w_init, dtype=float)
    out = np.zeros((steps + 1, 4))
    out[0] = w
    eps = math.sqrt(kappa * dt)
    p = 0.5 * (1.0 - math.exp(-2.0 * lam * dt))
    q = 1.0 - p
    # class-to-class bit-flip transitions for three qubits
    t = np.array([
        [q**3, p * q * q, p * p * q, p**3],
        [3 * p * q * q, q**3 + 2 * p * p * q, 2 * p * q * q + p**3, 3 * p * p * q],
        [3 * p * p * q, 2 * p * q * q + p**3, q**3 + 2 * p * p * q, 3 * p * q * q],
        [p**3, p * p * q, p * q * q, q**3],
    ])
    noisy = np.zeros(4)
    for step in range(1, steps + 1):
        noisy[:] = t @ w
        if policy == CONSTANT:
            delta = eps
        else:
            den = 3.0 * noisy[0] - noisy[1]
            if den <= 0.0:
                return out[:step], DEGENERATE
            delta = eps * (3.0 * noisy[0] + noisy[1]) / den
        weight_update_into(noisy, eps, delta, w)
        out[step] = w
    return out, 0
