"""Comparison protocols: Oreshkov's weak measurement scheme and the ADL averaged map."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import _kernels
from .channels import KrausChannel, SuperoperatorGenerator, diamond_norm_search
from .errors import ConvergenceError, DegenerateWeightsError, QubitCapError
from .linalg import dagger, matrix_exp
from .stabilizer import SINGLE_QUBIT, StabilizerCode, builtin_code

POLICIES = {"constant": _kernels.CONSTANT, "optimal": _kernels.OPTIMAL, "approx": _kernels.APPROX}
DEFAULT_QUBIT_CAP = 12


def _policy_code(policy) -> int:
    if isinstance(policy, str):
        try:
            return POLICIES[policy]
        except KeyError:
            raise ValueError(f"unknown policy {policy!r}; expected one of {sorted(POLICIES)}") from None
    return int(policy)


def _unit(i, j, d):
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


# -- three-qubit weight model ---------------------------------------------------

def oreshkov_weight_update(w, epsilon: float, delta: float) -> np.ndarray:
    """One weak step on the class weights ``(w0, w1, w2, w3)``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(4)
    _kernels.python_backend.weight_update_into(w, epsilon, delta, out)
    return out


def optimal_delta(w, epsilon: float) -> float:
    """``delta`` maximizing the updated ``w0``: ``eps (3w0 + w1) / (3w0 - w1)``."""
    w0, w1 = float(w[0]), float(w[1])
    if 3 * w0 <= w1:
        raise DegenerateWeightsError(f"optimal delta undefined for 3*w0 <= w1 (w0={w0}, w1={w1})")
    return epsilon * (3 * w0 + w1) / (3 * w0 - w1)


def numerical_optimal_delta(w, epsilon: float) -> float:
    """Scalar maximization of the updated ``w0`` (cross-check of the closed form)."""
    w0, w1 = float(w[0]), float(w[1])
    objective = lambda d: -(w0 * (1 - 0.75 * (epsilon - d) ** 2) + w1 * 0.25 * (epsilon + d) ** 2)
    res = scipy.optimize.minimize_scalar(objective, bracket=(0.0, epsilon + 1e-3), method="brent",
                                         options={"xtol": 1e-12})
    return float(res.x)


def oreshkov_ode_rhs(w, lam: float, kappa: float, policy="constant") -> np.ndarray:
    """Weight-model right-hand side under bit-flip noise and Oreshkov correction."""
    out, status = _kernels.weight_rhs(np.asarray(w, dtype=float), lam, kappa, _policy_code(policy))
    if status:
        raise DegenerateWeightsError(f"degenerate weights {tuple(w)} under policy {policy!r}")
    return out


def oreshkov_ode_rhs_approx(w, lam: float, kappa: float) -> np.ndarray:
    """Small-``w1`` expansion of the optimal-policy equations."""
    return oreshkov_ode_rhs(w, lam, kappa, "approx")


# -- Oreshkov full-space protocol -----------------------------------------------

@dataclass(frozen=True, eq=False)
class OreshkovProtocol:
    """Weak measurement with one ancilla qubit per nontrivial syndrome.

    Joint space is system (x) ancillas, ancilla ``j`` (1-based) at position
    ``j - 1`` after the system qubits.
    """

    n: int
    k: int
    epsilon: float
    delta_policy: str = "constant"
    measurement_ham: np.ndarray = field(repr=False, default=None)

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def ancilla_qubits(self) -> int:
        return 2**self.r - 1

    def syndrome_x(self, j: int) -> np.ndarray:
        d = 2**self.r
        return _unit(j, 0, d) + _unit(0, j, d)

    def syndrome_y(self, j: int) -> np.ndarray:
        d = 2**self.r
        return 1j * (_unit(j, 0, d) - _unit(0, j, d))

    def ancilla_state(self) -> np.ndarray:
        m = self.ancilla_qubits
        return np.full((2**m, 1), 2 ** (-m / 2), dtype=complex)

    def correction_ham(self, outcomes) -> np.ndarray:
        """``(1/2) I (x) sum_j (-1)^{m_j} Y_j`` on the system (syndrome-side ``Y_j``)."""
        d = 2**self.r
        h = sum(((-1) ** int(m)) * self.syndrome_y(j + 1) for j, m in enumerate(outcomes))
        return np.kron(np.eye(2**self.k), 0.5 * h) if len(outcomes) else np.zeros((2**self.n,) * 2)


def _oreshkov_hamiltonian(n, k):
    r = n - k
    d = 2**r
    m = d - 1
    y = SINGLE_QUBIT["Y"]
    h = np.zeros((2**n * 2**m,) * 2, dtype=complex)
    for j in range(1, d):
        xj = np.kron(np.eye(2**k), _unit(j, 0, d) + _unit(0, j, d))
        ya = np.kron(np.kron(np.eye(2 ** (j - 1)), y), np.eye(2 ** (m - j)))
        h -= 0.5 * np.kron(xj, ya)
    return h


def build_oreshkov(n: int, k: int, epsilon: float, delta_policy="constant", qubit_cap: int = DEFAULT_QUBIT_CAP):
    r = n - k
    total = n + 2**r - 1
    if total > qubit_cap:
        raise QubitCapError(f"Oreshkov protocol needs {total} qubits, cap is {qubit_cap}")
    return OreshkovProtocol(n, k, float(epsilon), delta_policy, _oreshkov_hamiltonian(n, k))


def oreshkov_channel(n: int, k: int, epsilon: float, delta: float, *, correction_sign: int = 1,
                     qubit_cap: int = DEFAULT_QUBIT_CAP) -> KrausChannel:
    """Averaged single step as a Kraus channel on the corrected-basis system.

    Kraus operators ``exp(s i delta H_C(m)) (I (x) <m|) exp(-i eps H_M) (I (x) |Psi>)``
    over all ancilla outcomes ``m``, with ``s = correction_sign``. ``s = +1``
    moves weight back to the trivial syndrome; ``s = -1`` is the opposite
    rotation.
    """
    p = build_oreshkov(n, k, epsilon, qubit_cap=qubit_cap)
    m = p.ancilla_qubits
    dsys = 2**n
    iso = matrix_exp(p.measurement_ham, -epsilon) @ np.kron(np.eye(dsys), p.ancilla_state())
    iso = iso.reshape(dsys, 2**m, dsys)
    ops = []
    for outcome in range(2**m):
        bits = [(outcome >> (m - 1 - q)) & 1 for q in range(m)]
        uc = matrix_exp(p.correction_ham(bits), correction_sign * delta)
        ops.append(uc @ iso[:, outcome, :])
    return KrausChannel(tuple(ops), epsilon=epsilon)


def oreshkov_full_step(code: StabilizerCode, rho, epsilon: float, delta: float, *,
                       correction_sign: int = 1, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Attach the ancillas, couple, read out every ancilla in Z, correct, and average."""
    ch = oreshkov_channel(code.n, code.k, epsilon, delta, correction_sign=correction_sign, qubit_cap=qubit_cap)
    return ch.apply(rho)


def class_states(code: StabilizerCode, psi_info=None) -> list:
    """Corrected-basis class states ``rho_0 .. rho_3`` of the three-qubit code."""
    if code.n != 3 or code.k != 1:
        raise ValueError("class decomposition is defined for the three-qubit codes")
    psi = np.array([1.0, 0.0], dtype=complex) if psi_info is None else np.asarray(psi_info, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    rho0 = np.kron(np.outer(psi, psi.conj()), _unit(0, 0, 4))
    errs = [code.to_corrected(e.to_matrix()) for e in code.correctable_errors[1:]]
    rho1 = sum(e @ rho0 @ e for e in errs) / 3
    rho2 = sum(errs[a] @ errs[b] @ rho0 @ errs[b] @ errs[a] for a in range(3) for b in range(a + 1, 3)) / 3
    e123 = errs[0] @ errs[1] @ errs[2]
    rho3 = e123 @ rho0 @ dagger(e123)
    return [rho0, rho1, rho2, rho3]


def class_weights(rho, classes) -> np.ndarray:
    """Weights ``w_j`` of ``rho = sum_j w_j rho_j`` by projection onto each class support."""
    return np.array([np.real(np.trace(c @ rho)) / np.real(np.trace(c @ c)) for c in classes])


# -- generalized optimal correction -----------------------------------------------

class OreshkovCorrection:
    """Averaged Oreshkov correction generator for any code, constant or optimal.

    With ``c = delta / eps`` the small-step limit is
    ``kappa sum_{j>=1} D[a |j><0| + b |0><j|]`` on the syndrome register,
    ``a = (1 - c)/2``, ``b = (1 + c)/2``. At ``c = 1`` populations follow
    ``kappa (R - I)``; only the coherences between the trivial and the other
    syndrome blocks decay more slowly. The optimal policy picks the ``c`` maximizing the rate
    of change of the codeword fidelity:
    ``c = (M F + P) / (M F - P)`` with ``M = D - 1``, ``F`` the codeword
    fidelity and ``P`` the population of the nontrivial syndromes with intact
    information.
    """

    def __init__(self, n: int, k: int, kappa: float, policy: str = "constant", psi_info=None):
        self.n, self.k, self.kappa, self.policy = n, k, float(kappa), policy
        if policy not in ("constant", "optimal"):
            raise ValueError(f"unknown policy {policy!r}")
        self.d = 2 ** (n - k)
        self.info = 2**k
        psi = np.zeros(self.info, dtype=complex) if psi_info is None else np.asarray(psi_info, dtype=complex)
        if psi_info is None:
            psi[0] = 1.0
        self.psi_info = psi / np.linalg.norm(psi)
        self.dim = 2**n
        eye = np.eye(self.info)
        d = self.d
        self._sym = [np.kron(eye, _unit(j, 0, d) + _unit(0, j, d)) for j in range(1, d)]
        self._anti = [np.kron(eye, _unit(0, j, d) - _unit(j, 0, d)) for j in range(1, d)]

    def coefficient(self, rho) -> float:
        if self.policy == "constant":
            return 1.0
        f, p = self.fidelity_and_population(rho)
        m = self.d - 1
        if m * f <= p:
            raise DegenerateWeightsError(f"optimal correction undefined: (D-1)*F={m * f:.3e} <= P={p:.3e}")
        return (m * f + p) / (m * f - p)

    def fidelity_and_population(self, rho):
        t = np.asarray(rho).reshape(self.info, self.d, self.info, self.d)
        proj = np.einsum("a,asbt,b->st", self.psi_info.conj(), t, self.psi_info)
        diag = np.real(np.diag(proj))
        return float(diag[0]), float(diag[1:].sum())

    def jump_operators(self, c: float) -> list:
        a_ops = [0.5 * (s + c * a) for s, a in zip(self._sym, self._anti)]
        return a_ops

    def apply(self, rho) -> np.ndarray:
        return self.apply_with(rho, self.coefficient(rho))

    def apply_with(self, rho, c: float) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for op in self.jump_operators(c):
            lo = op @ rho
            out += lo @ dagger(op)
            ll = dagger(op) @ op
            out -= 0.5 * (ll @ rho + rho @ ll)
        return self.kappa * out

    def generator(self, c: float = 1.0) -> SuperoperatorGenerator:
        gens = [SuperoperatorGenerator.dissipator(op) for op in self.jump_operators(c)]
        total = gens[0]
        for g in gens[1:]:
            total = total + g
        return self.kappa * total

    def rate_of_fidelity(self, rho, c: float) -> float:
        """``d F / dt`` under the correction with coefficient ``c``."""
        out = self.apply_with(rho, c)
        vec = np.kron(self.psi_info, np.eye(self.d)[0])
        return float(np.real(vec.conj() @ out @ vec))


# -- ADL averaged map ---------------------------------------------------------------

@dataclass(frozen=True)
class ADLMap:
    kappa2: float
    gamma2: float
    signs: tuple = (1, 1, 1)
    code_name: str = "three_qubit_bit_flip"

    @property
    def code(self) -> StabilizerCode:
        return builtin_code(self.code_name)


def adl_generator(m: ADLMap, basis: str = "physical") -> SuperoperatorGenerator:
    """``kappa2 (L(g1) + L(g2) + L(g1 g2)) - gamma2 i [F, .]``, ``F = sum_j eta_j E_j``."""
    if m.code_name != "three_qubit_bit_flip":
        raise ValueError("the ADL map is defined for the three-qubit bit-flip code")
    code = m.code
    g1, g2 = (g.to_matrix() for g in code.generators)
    diss = sum((SuperoperatorGenerator.dissipator(g) for g in (g1, g2, g1 @ g2)), SuperoperatorGenerator.zero(8))
    f = sum(s * e.to_matrix() for s, e in zip(m.signs, code.correctable_errors[1:]))
    gen = m.kappa2 * diss + m.gamma2 * SuperoperatorGenerator.commutator(f)
    if basis == "corrected":
        return gen.conjugated(code.basis_change)
    if basis != "physical":
        raise ValueError(f"unknown basis {basis!r}")
    return gen


def strong_correction_generator(n: int, k: int) -> SuperoperatorGenerator:
    """``R - I`` in the corrected basis."""
    d = 2 ** (n - k)
    ops = [np.kron(np.eye(2**k), _unit(0, j, d)) for j in range(d)]
    return SuperoperatorGenerator.from_kraus(ops) - SuperoperatorGenerator.identity(2**n)


@dataclass
class Calibration:
    kappa: float
    kappa2: float
    gamma2: float
    adl_norm: float
    reference_norm: float
    ratio: float
    converged: bool
    signs: tuple


def calibrate(kappa2: float, gamma2: float, signs=(1, 1, 1), *, restarts: int = 32, seed: int = 0,
              measure_reference: bool = False, workers: int | None = None) -> Calibration:
    """Strength-matched ``kappa``: ``||G_ADL||_diamond / ||R - I||_diamond``.

    The reference norm is 2 exactly; ``measure_reference`` recomputes it.
    """
    if kappa2 <= 0 or gamma2 <= 0:
        raise ValueError("ADL rates must be positive")
    res = diamond_norm_search(adl_generator(ADLMap(kappa2, gamma2, tuple(signs))), restarts=restarts, seed=seed,
                              workers=workers)
    if not res.converged:
        raise ConvergenceError("ADL diamond norm did not converge", lower_bound=res.value)
    ref = 2.0
    if measure_reference:
        rr = diamond_norm_search(strong_correction_generator(3, 1), restarts=restarts, seed=seed, workers=workers)
        ref = rr.value
    kappa = res.value / ref
    return Calibration(kappa, kappa2, gamma2, res.value, ref, kappa / kappa2, res.converged, tuple(signs))
