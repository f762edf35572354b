"""Noise, master-equation integration, weight ODEs and discrete weak-step simulation.

Times are in units of ``1/lambda`` when rates are given relative to the noise
rate. States are density matrices in the corrected basis unless noted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .baselines import _policy_code
from .channels import KrausChannel, SuperoperatorGenerator, vec, unvec
from .errors import DegenerateWeightsError, IntegrationError
from .linalg import dagger, require_square
from .minimal import WeakProtocol, build_protocol, effective_channel, strong_correction_map, target_map
from .stabilizer import PauliOperator, StabilizerCode

ABORT_TOL = 1e-6
EPSILON_CAP = 0.3
SAMPLES_PER_UNIT = 100


@dataclass(frozen=True)
class NoiseModel:
    """Independent single-qubit Pauli noise.

    ``bit_flip`` uses ``L_q = sqrt(rate) X_q``; ``depolarizing`` uses
    ``sqrt(rate * per_pauli_scale) P_q`` for each of X, Y, Z
    (``per_pauli_scale = 1/3`` gives total rate ``rate`` per qubit).
    """

    kind: str
    rate: float
    qubits: int
    per_pauli_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bit_flip", "depolarizing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.rate >= 0:
            raise ValueError(f"noise rate must be >= 0, got {self.rate}")
        if self.qubits < 1:
            raise ValueError("need at least one qubit")

    def paulis(self) -> list:
        letters = "X" if self.kind == "bit_flip" else "XYZ"
        return [PauliOperator.single(self.qubits, q, c) for q in range(self.qubits) for c in letters]

    def jump_operators(self, code: StabilizerCode | None = None, basis: str = "corrected") -> list:
        scale = 1.0 if self.kind == "bit_flip" else self.per_pauli_scale
        amp = math.sqrt(self.rate * scale)
        ops = [amp * p.to_matrix() for p in self.paulis()]
        if basis == "physical" or code is None:
            return ops
        if basis != "corrected":
            raise ValueError(f"unknown basis {basis!r}")
        if code.n != self.qubits:
            raise ValueError(f"noise acts on {self.qubits} qubits, code has {code.n}")
        return [code.to_corrected(op) for op in ops]


@dataclass
class SimulationTrace:
    times: np.ndarray
    codeword_fidelity: np.ndarray
    correctable_overlap: np.ndarray
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    completed: bool = True

    def __len__(self):
        return len(self.times)

    def at(self, t: float, tol: float = 1e-9) -> int:
        """Index of the sample at time ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no sample at t={t}")
        return i

    def check_invariants(self, slack: float = 1e-9) -> bool:
        f, o = self.codeword_fidelity, self.correctable_overlap
        in_range = np.all((f >= -slack) & (f <= 1 + slack) & (o >= -slack) & (o <= 1 + slack))
        return bool(in_range and np.all(o >= f - slack) and np.all(np.diff(self.times) > 0))


class JumpGenerator:
    """Lindblad dissipator ``sum_j D[L_j]`` applied in operator form.

    Cheaper than the superoperator for larger codes; ``superoperator()``
    gives the dense equivalent.
    """

    def __init__(self, ops):
        self.ops = [require_square(o, "jump operator") for o in ops]
        self.dim = self.ops[0].shape[0] if self.ops else 0
        self._daggers = [dagger(o) for o in self.ops]
        self._k = sum((d @ o for d, o in zip(self._daggers, self.ops)), np.zeros((self.dim, self.dim), complex))

    def apply(self, rho) -> np.ndarray:
        out = -0.5 * (self._k @ rho + rho @ self._k)
        for o, od in zip(self.ops, self._daggers):
            out += o @ rho @ od
        return out

    def superoperator(self) -> SuperoperatorGenerator:
        total = SuperoperatorGenerator.zero(self.dim)
        for o in self.ops:
            total = total + SuperoperatorGenerator.dissipator(o)
        return total


def lindblad_generator(model: NoiseModel, code: StabilizerCode | None = None,
                       basis: str = "corrected") -> SuperoperatorGenerator:
    """Noise generator with zero system Hamiltonian."""
    return JumpGenerator(model.jump_operators(code, basis)).superoperator()


def noise_process(model: NoiseModel, code: StabilizerCode | None = None, basis: str = "corrected") -> JumpGenerator:
    return JumpGenerator(model.jump_operators(code, basis))


def correction_generator(n: int, k: int, kappa: float) -> SuperoperatorGenerator:
    """``kappa (R - I)`` in the corrected basis."""
    r = SuperoperatorGenerator.from_channel(strong_correction_map(n, k))
    return kappa * (r - SuperoperatorGenerator.identity(2**n))


def codeword(code: StabilizerCode, psi_info=None) -> np.ndarray:
    """Corrected-basis vector of the encoded ``psi_info`` (default logical zero)."""
    info = 2**code.k
    psi = np.zeros(info, dtype=complex)
    if psi_info is None:
        psi[0] = 1.0
    else:
        psi = np.asarray(psi_info, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
    syn = np.zeros(code.syndrome_dim)
    syn[0] = 1.0
    return np.kron(psi, syn)


def observables(code: StabilizerCode, rho, psi0) -> tuple:
    """``(<psi0|rho|psi0>, <psi0|R(rho)|psi0>)`` for corrected-basis ``rho``."""
    psi = np.asarray(psi0, dtype=complex).ravel()
    rho = np.asarray(rho)
    fid = float(np.real(psi.conj() @ rho @ psi))
    # R_j^dag |psi0> lives in syndrome block j; sum the matching diagonal blocks
    info, d = 2**code.k, code.syndrome_dim
    t = rho.reshape(info, d, info, d)
    phi = psi.reshape(info, d)[:, 0]
    overlap = float(np.real(np.einsum("a,ajbj,b->", phi.conj(), t, phi)))
    return fid, overlap


def _observer(code, psi0, rho0):
    if psi0 is None:
        if code is not None:
            psi0 = codeword(code)
        else:
            w, v = np.linalg.eigh(rho0)
            psi0 = v[:, -1]
    if code is None:
        def observe(rho):
            f = float(np.real(np.vdot(psi0, rho @ psi0)))
            return f, f
        return observe
    return lambda rho: observables(code, rho, psi0)


def _check_state(rho0):
    rho0 = require_square(rho0, "rho0")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ValueError("initial state must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho0 + dagger(rho0)))[0] < -1e-10:
        raise ValueError("initial state must be positive semidefinite")
    return np.array(rho0, dtype=complex)


def _default_stride(dt, samples_per_unit=SAMPLES_PER_UNIT):
    return max(1, int(round(1.0 / (samples_per_unit * dt))))


def integrate_master(gen_noise, gen_correct, rho0, t_end: float, dt: float, *, code: StabilizerCode | None = None,
                     psi0=None, stride: int | None = None, classes=None) -> SimulationTrace:
    """Fixed-step RK4 for ``d rho/dt = gen_noise(rho) + gen_correct(rho)``.

    Either generator may be ``None``, a :class:`SuperoperatorGenerator`, or any
    object with ``apply(rho)``. Observables are sampled every ``stride`` steps
    (default 100 per unit time). With ``classes`` the class weights are
    recorded too. Aborts with :class:`IntegrationError` if the trace drifts or
    an eigenvalue drops below ``-1e-6``.
    """
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    rho = _check_state(rho0)
    dim = rho.shape[0]
    steps = int(round(t_end / dt))
    if not math.isclose(steps * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    stride = stride or _default_stride(dt)
    observe = _observer(code, psi0, rho)

    gens = [g for g in (gen_noise, gen_correct) if g is not None]
    if all(isinstance(g, SuperoperatorGenerator) for g in gens):
        m = sum((g.matrix for g in gens), np.zeros((dim * dim,) * 2, dtype=complex))
        f = lambda r: unvec(m @ vec(r), dim)
    else:
        f = lambda r: sum((g.apply(r) for g in gens), np.zeros_like(r))

    times, fids, overs, ws = [], [], [], []
    max_drift, min_eig = 0.0, 1.0

    def record(i, r):
        fi, ov = observe(r)
        times.append(i * dt)
        fids.append(fi)
        overs.append(ov)
        if classes is not None:
            from .baselines import class_weights
            ws.append(class_weights(r, classes))

    def trace_so_far(done):
        return SimulationTrace(np.array(times), np.array(fids), np.array(overs),
                               np.array(ws) if classes is not None else None,
                               {"dt": dt, "steps": done, "max_trace_drift": max_drift, "min_eigenvalue": min_eig},
                               completed=done == steps)

    record(0, rho)
    for i in range(1, steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % stride == 0 or i == steps:
            drift = abs(np.trace(rho) - 1)
            ev = float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0])
            max_drift, min_eig = max(max_drift, drift), min(min_eig, ev)
            record(i, rho)
            if drift > ABORT_TOL or ev < -ABORT_TOL:
                raise IntegrationError(f"integration unstable at t={i * dt:.6g}: trace drift {drift:.2e}, "
                                       f"min eigenvalue {ev:.2e}", trace=trace_so_far(i))
    out = trace_so_far(steps)
    out.meta["final_state"] = rho
    return out


def weight_trace(samples, times, meta=None, completed=True) -> SimulationTrace:
    w = np.asarray(samples)
    return SimulationTrace(np.asarray(times), w[:, 0].copy(), w[:, 0] + w[:, 1], w, meta or {}, completed)


def integrate_weights(lam: float, kappa: float, policy: str = "constant", t_end: float = 5.0, dt: float = 1e-4, *,
                      w_init=(1.0, 0.0, 0.0, 0.0), stride: int | None = None) -> SimulationTrace:
    """RK4 on the three-qubit class-weight equations (compiled kernel when available)."""
    if lam < 0 or kappa < 0:
        raise ValueError("rates must be >= 0")
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    steps = int(round(t_end / dt))
    stride = stride or _default_stride(dt)
    samples, status, done = _kernels.rk4_weights(np.asarray(w_init, dtype=float), lam, kappa,
                                                 _policy_code(policy), dt, steps, stride)
    idx = [i * stride for i in range(steps // stride + 1)]
    if steps % stride:
        idx.append(steps)
    times = np.array(idx[: len(samples)], dtype=float) * dt
    meta = {"lambda": lam, "kappa": kappa, "policy": policy, "dt": dt, "backend": _kernels.BACKEND}
    if status:
        raise DegenerateWeightsError(f"optimal policy degenerate after {done} steps (t={done * dt:.6g})")
    return weight_trace(samples, times, meta)


def discrete_step_simulate(p, model: NoiseModel, code: StabilizerCode, rho0, steps: int, dt: float, *,
                           channel: str = "protocol", psi0=None, stride: int = 1) -> SimulationTrace:
    """Alternate exact noise over ``dt`` with one weak correction step.

    ``p`` is a :class:`WeakProtocol` (then ``kappa = eps^2 / dt``) or a rate
    ``kappa`` (then ``eps = sqrt(kappa dt)``). ``channel="protocol"`` uses the
    dilated protocol's effective channel, ``"target"`` the ideal weak map.
    """
    if isinstance(p, WeakProtocol):
        eps = p.epsilon
        if (p.n, p.k) != (code.n, code.k):
            raise ValueError("protocol and code sizes differ")
    else:
        kappa = float(p)
        if kappa < 0:
            raise ValueError("kappa must be >= 0")
        eps = math.sqrt(kappa * dt)
    if eps >= EPSILON_CAP:
        raise ValueError(f"eps = sqrt(kappa dt) = {eps:.4g} exceeds the cap {EPSILON_CAP}")
    rho = _check_state(rho0)
    dim = rho.shape[0]
    noise = scipy.linalg.expm(lindblad_generator(model, code).matrix * dt)
    if channel == "protocol":
        proto = p if isinstance(p, WeakProtocol) else build_protocol(code.n, code.k, eps)
        corr = effective_channel(proto)
    elif channel == "target":
        corr = target_map(code.n, code.k, eps)
    else:
        raise ValueError(f"unknown channel {channel!r}")
    step = corr.superoperator() @ noise
    observe = _observer(code, psi0, rho)
    v = vec(rho)
    times, fids, overs = [0.0], *([x] for x in observe(rho))
    for i in range(1, steps + 1):
        v = step @ v
        if i % stride == 0 or i == steps:
            fi, ov = observe(unvec(v, dim))
            times.append(i * dt)
            fids.append(fi)
            overs.append(ov)
    meta = {"epsilon": eps, "kappa": eps**2 / dt, "dt": dt, "channel": channel, "final_state": unvec(v, dim)}
    return SimulationTrace(np.array(times), np.array(fids), np.array(overs), None, meta)


def bit_flip_weights_no_correction(lam: float, t) -> np.ndarray:
    """Analytic class weights with no correction: binomial in the flip probability."""
    q = 0.5 * (1 + np.exp(-2 * lam * np.asarray(t, dtype=float)))
    p = 1 - q
    return np.stack([q**3, 3 * p * q**2, 3 * p**2 * q, p**3], axis=-1)
