"""Minimal-ancilla quantum-jump correction protocol.

Everything lives in the corrected basis. Operators act as ``I_info (x) op``
where ``op`` is on the ``D = 2**(n-k)`` dimensional syndrome register; the
measurement Hamiltonian acts on system (x) ancilla with the ancilla as the
least significant factor, so joint index = ``system * N + ancilla`` with
``N = 2 * D`` outcomes.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import KrausChannel, choi_distance
from .linalg import dagger, matrix_exp, polar_decompose, random_state


def _check_code_size(n, k):
    if not (isinstance(n, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise TypeError("n and k must be integers")
    if k < 0 or n <= k:
        raise ValueError(f"need n > k >= 0, got n={n}, k={k}")


def _check_epsilon(epsilon):
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")


def _unit(i, j, d):
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def _lift(op, k):
    return np.kron(np.eye(2**k), op)


def target_kraus_syndrome(r: int, epsilon: float) -> list:
    d = 2**r
    return [np.sqrt(1 - epsilon**2) * np.eye(d, dtype=complex)] + [epsilon * _unit(0, j, d) for j in range(d)]


def target_map(n: int, k: int, epsilon: float) -> KrausChannel:
    """Weak correction ``(1 - eps^2) rho + eps^2 sum_j R_j rho R_j^dag``."""
    _check_code_size(n, k)
    _check_epsilon(epsilon)
    ops = tuple(_lift(op, k) for op in target_kraus_syndrome(n - k, epsilon))
    return KrausChannel(ops, epsilon=epsilon)


def strong_correction_map(n: int, k: int) -> KrausChannel:
    """``R(rho) = sum_j R_j rho R_j^dag`` with ``R_j = I (x) |0><j|``."""
    _check_code_size(n, k)
    d = 2 ** (n - k)
    return KrausChannel(tuple(_lift(_unit(0, j, d), k) for j in range(d)))


def kraus_family_syndrome(r: int, epsilon: float) -> list:
    """``K_j`` and ``K_{D+j}`` on the syndrome register."""
    _check_epsilon(epsilon)
    d = 2**r
    c = 1.0 / np.sqrt(2 * d)
    base = np.sqrt(1 - epsilon**2) * np.eye(d, dtype=complex)
    ops = []
    for sign in (1, -1):
        for j in range(d):
            ops.append(c * (base + sign * 1j * epsilon * np.sqrt(d) * _unit(0, j, d)))
    return ops


def build_kraus_family(n: int, k: int, epsilon: float) -> list:
    _check_code_size(n, k)
    return [_lift(op, k) for op in kraus_family_syndrome(n - k, epsilon)]


def correction_hamiltonians_syndrome(r: int) -> list:
    """``H_{C,j} = +-(sqrt(D)/2)(|0><j| + |j><0|)`` for the two outcome halves."""
    d = 2**r
    hs = [np.sqrt(d) / 2 * (_unit(0, j, d) + _unit(j, 0, d)) for j in range(d)]
    return hs + [-h for h in hs]


def polar_family_syndrome(kraus):
    povm, corrections = [], []
    for op in kraus:
        if np.linalg.svd(op, compute_uv=False)[-1] < 1e-14:
            raise ValueError("Kraus operator is singular; polar factor is not unique")
        u, m = polar_decompose(op)
        povm.append(m)
        corrections.append(u)
    return povm, corrections


def polar_family(kraus, k: int = 0):
    """Polar factors ``K_j = U_{C,j} M_j`` and the closed-form ``H_{C,j}``.

    ``kraus`` may be full-space operators (pass ``k``) or syndrome-register
    operators (``k = 0``). Returns ``(povm, corrections, correction_hams)``
    on the same space as the input.
    """
    dim = kraus[0].shape[0]
    info = 2**k
    d = dim // info
    r = int(round(np.log2(d)))
    syn = [op.reshape(info, d, info, d)[0, :, 0, :] for op in kraus]
    povm, corr = polar_family_syndrome(syn)
    hams = correction_hamiltonians_syndrome(r)
    return ([_lift(m, k) for m in povm], [_lift(u, k) for u in corr], [_lift(h, k) for h in hams])


def measurement_blocks(r: int) -> dict:
    """Closed-form blocks ``H_{j,l}`` (syndrome register) of the measurement Hamiltonian.

    Returns a dict keyed by ``(j, l)`` over all ``N x N`` outcome pairs; the
    blocks not listed in the closed form are zero.
    """
    d = 2**r
    n_out = 2 * d
    rt = np.sqrt(d)
    xs = lambda j: _unit(0, j, d) + _unit(j, 0, d)
    anti = lambda j: _unit(0, j, d) - _unit(j, 0, d)
    zero = np.zeros((d, d), dtype=complex)
    b = {(a, c): zero.copy() for a in range(n_out) for c in range(n_out)}
    b[0, 0] = -2 / rt * sum((xs(l) for l in range(1, d)), zero.copy())
    b[d, d] = -b[0, 0]
    for j in range(1, d):
        b[0, j] = b[j, 0] = 2 / rt * xs(j)
        b[j, j] = 2 * (1 - d) / rt * xs(j)
        b[d + j, d + j] = -b[j, j]
        b[d, d + j] = b[d + j, d] = -2 / rt * xs(j)
        b[j, d + j] = rt / 2 * anti(j)
        b[d + j, j] = -b[j, d + j]
        for l in range(1, d):
            if l == j:
                continue
            b[j, l] = (xs(j) + xs(l)) / rt
            b[d + j, d + l] = -b[j, l]
            b[j, d + l] = (xs(j) - xs(l)) / rt
            b[d + j, l] = -b[j, d + l]
    return b


def assemble_blocks(blocks: dict, d: int) -> np.ndarray:
    """``sum_{j,l} H_{j,l} (x) |j_a><l_a|``."""
    n_out = 2 * d
    h = np.zeros((d, n_out, d, n_out), dtype=complex)
    for (a, c), blk in blocks.items():
        h[:, a, :, c] = blk
    return h.reshape(d * n_out, d * n_out)


def split_blocks(h: np.ndarray, d: int) -> dict:
    n_out = h.shape[0] // d
    t = h.reshape(d, n_out, d, n_out)
    return {(a, c): t[:, a, :, c].copy() for a in range(n_out) for c in range(n_out)}


def measurement_hamiltonian_syndrome(r: int) -> np.ndarray:
    return assemble_blocks(measurement_blocks(r), 2**r)


def build_measurement_hamiltonian(n: int, k: int) -> np.ndarray:
    """``H_M`` on the full system (x) ancilla space (``2**n * 2**(n-k+1)``)."""
    _check_code_size(n, k)
    return _lift(measurement_hamiltonian_syndrome(n - k), k)


def three_qubit_example_hamiltonian() -> np.ndarray:
    """Alternative ``H_M`` for ``n - k = 2`` in the ``|u><v| + |v><w|`` form.

    ``H = sum_j |0><j| (x) (|u_j><v_j| + |v_j><w_j|) + h.c.`` with
    ``u_j = |+>(|0> - sum_{l != j} |l>)``, ``v_j = |->|j>`` and
    ``w_j = |+>(|0> + sum_{l != j} |l> - 2|j>)``. It dilates the same POVM
    to third order but differs block-wise from the general solution.
    Returned on the syndrome register (x) ancilla (32 x 32); lift with
    ``I_2`` for the full three-qubit system.
    """
    d = 4
    e = np.eye(d)
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    h = np.zeros((d * 2 * d, d * 2 * d), dtype=complex)
    for j in range(1, d):
        others = sum(e[l] for l in range(1, d) if l != j)
        u = np.kron(plus, e[0] - others)
        v = np.kron(minus, e[j])
        w = np.kron(plus, e[0] + others - 2 * e[j])
        a = np.outer(u, v) + np.outer(v, w)
        h += np.kron(_unit(0, j, d), a) + np.kron(_unit(j, 0, d), a.conj().T)
    return h


def ancilla_state(r: int) -> np.ndarray:
    """``|+>^(r+1)`` as an ``N x 1`` column."""
    n_out = 2 ** (r + 1)
    return np.full((n_out, 1), 1.0 / np.sqrt(n_out), dtype=complex)


@dataclass(frozen=True, eq=False)
class WeakProtocol:
    n: int
    k: int
    epsilon: float
    ancilla_qubits: int
    kraus: tuple = field(repr=False)
    povm: tuple = field(repr=False)
    corrections: tuple = field(repr=False)
    correction_hams: tuple = field(repr=False)
    measurement_ham: np.ndarray = field(repr=False)
    ancilla_state: np.ndarray = field(repr=False)
    syndrome_ham: np.ndarray = field(repr=False)

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def syndrome_dim(self) -> int:
        return 2**self.r

    @property
    def outcomes(self) -> int:
        return 2 ** (self.r + 1)

    def syndrome_part(self, op) -> np.ndarray:
        info, d = 2**self.k, self.syndrome_dim
        return op.reshape(info, d, info, d)[0, :, 0, :]

    def dilation_isometry(self, epsilon: float | None = None) -> np.ndarray:
        """``U_M (I (x) |A0>)`` on the syndrome register, shape ``(D*N, D)``."""
        eps = self.epsilon if epsilon is None else epsilon
        u = matrix_exp(self.syndrome_ham, eps)
        d = self.syndrome_dim
        return u @ np.kron(np.eye(d), self.ancilla_state)

    def measurement_unitary(self) -> np.ndarray:
        return matrix_exp(self.measurement_ham, self.epsilon)


def build_protocol(n: int, k: int, epsilon: float) -> WeakProtocol:
    _check_code_size(n, k)
    _check_epsilon(epsilon)
    r = n - k
    kraus = kraus_family_syndrome(r, epsilon)
    povm, corr = polar_family_syndrome(kraus)
    hams = correction_hamiltonians_syndrome(r)
    h_syn = measurement_hamiltonian_syndrome(r)
    lift = lambda ops: tuple(_lift(o, k) for o in ops)
    return WeakProtocol(
        n=n,
        k=k,
        epsilon=float(epsilon),
        ancilla_qubits=r + 1,
        kraus=lift(kraus),
        povm=lift(povm),
        corrections=lift(corr),
        correction_hams=lift(hams),
        measurement_ham=_lift(h_syn, k),
        ancilla_state=ancilla_state(r),
        syndrome_ham=h_syn,
    )


def order_condition_residuals(blocks: dict, d: int) -> dict:
    """Residuals of the order-by-order dilation conditions on the syndrome register.

    ``first_trivial``: sum_j H_{0,j} = sum_j H_{D,j} = 0.
    ``second_trivial``: sum_{j,l} H_{0,j} H_{j,l} = I - D |0><0| (and for row D).
    ``first_error``: sum_l H_{j,l} = -sum_l H_{D+j,l} = (sqrt(D)/2)(|0><j| - |j><0|).
    ``second_error``: sum_{l,m} H_{j,l} H_{l,m} = I + D/4 |0><0| - 3D/4 |j><j| (and row D+j).
    ``adjoint``: H_{j,l} = H_{l,j}^dag.
    """
    n_out = 2 * d
    eye = np.eye(d)
    row_sum = {a: sum(blocks[a, c] for c in range(n_out)) for a in range(n_out)}
    second = {a: sum(blocks[a, c] @ row_sum[c] for c in range(n_out)) for a in range(n_out)}
    res = {}
    res["first_trivial"] = max(np.abs(row_sum[0]).max(), np.abs(row_sum[d]).max())
    t16 = eye - d * _unit(0, 0, d)
    res["second_trivial"] = max(np.abs(second[0] - t16).max(), np.abs(second[d] - t16).max())
    r17 = r18 = 0.0
    for j in range(1, d):
        t17 = np.sqrt(d) / 2 * (_unit(0, j, d) - _unit(j, 0, d))
        r17 = max(r17, np.abs(row_sum[j] - t17).max(), np.abs(row_sum[d + j] + t17).max())
        t18 = eye + d / 4 * _unit(0, 0, d) - 3 * d / 4 * _unit(j, j, d)
        r18 = max(r18, np.abs(second[j] - t18).max(), np.abs(second[d + j] - t18).max())
    res["first_error"] = r17
    res["second_error"] = r18
    res["adjoint"] = max(np.abs(blocks[a, c] - dagger(blocks[c, a])).max() for (a, c) in blocks)
    return {key: float(v) for key, v in res.items()}


@dataclass
class DilationReport:
    epsilon: float
    trials: int
    residual: float
    order_residuals: dict
    hermiticity: float
    zero_blocks: float
    completeness: float
    povm_completeness: float
    polar_residual: float
    min_povm_eigenvalue: float

    def order_conditions_hold(self, atol: float = 1e-10) -> bool:
        return max(self.order_residuals.values()) <= atol


def verify_dilation(p: WeakProtocol, trials: int = 8, seed: int = 0, *, hamiltonian=None) -> DilationReport:
    """Compare ``(I (x) <j_a|) U_M (psi (x) A0)`` with ``M_j psi`` on random states.

    States are drawn on the full system from per-trial seeds
    ``SeedSequence(seed).spawn(trials)``. ``hamiltonian`` optionally swaps in
    another syndrome-register ``H_M`` (e.g. the three-qubit example form).
    """
    d, n_out, info = p.syndrome_dim, p.outcomes, 2**p.k
    h_syn = p.syndrome_ham if hamiltonian is None else hamiltonian
    u = matrix_exp(h_syn, p.epsilon)
    iso = (u @ np.kron(np.eye(d), p.ancilla_state)).reshape(d, n_out, d)
    povm_syn = [p.syndrome_part(m) for m in p.povm]
    worst = 0.0
    for child in np.random.SeedSequence(seed).spawn(trials):
        psi = random_state(2**p.n, np.random.default_rng(child)).reshape(info, d)
        for j in range(n_out):
            got = psi @ iso[:, j, :].T
            want = psi @ povm_syn[j].T
            worst = max(worst, float(np.linalg.norm(got - want)))
    blocks = split_blocks(h_syn, d)
    zero_keys = [(0, d), (d, 0)] + [(0, d + j) for j in range(1, d)] + [(d + j, 0) for j in range(1, d)]
    zero_keys += [(d, j) for j in range(1, d)] + [(j, d) for j in range(1, d)]
    eye = np.eye(2**p.n)
    return DilationReport(
        epsilon=p.epsilon,
        trials=trials,
        residual=worst,
        order_residuals=order_condition_residuals(blocks, d),
        hermiticity=float(np.abs(h_syn - dagger(h_syn)).max()),
        zero_blocks=float(max(np.abs(blocks[key]).max() for key in zero_keys)),
        completeness=float(np.abs(sum(dagger(kk) @ kk for kk in p.kraus) - eye).max()),
        povm_completeness=float(np.abs(sum(dagger(m) @ m for m in p.povm) - eye).max()),
        polar_residual=float(max(np.abs(uc @ m - kk).max() for uc, m, kk in zip(p.corrections, p.povm, p.kraus))),
        min_povm_eigenvalue=float(min(np.linalg.eigvalsh(m).min() for m in povm_syn)),
    )


def effective_channel_kraus_syndrome(p: WeakProtocol, hamiltonian=None) -> list:
    d, n_out = p.syndrome_dim, p.outcomes
    h_syn = p.syndrome_ham if hamiltonian is None else hamiltonian
    iso = (matrix_exp(h_syn, p.epsilon) @ np.kron(np.eye(d), p.ancilla_state)).reshape(d, n_out, d)
    return [p.syndrome_part(p.corrections[j]) @ iso[:, j, :] for j in range(n_out)]


def effective_channel(p: WeakProtocol) -> KrausChannel:
    """Exact composed map: dilated measurement, readout, then ``U_{C,j}``."""
    ops = effective_channel_kraus_syndrome(p)
    return KrausChannel(tuple(_lift(op, p.k) for op in ops), epsilon=p.epsilon)


def effective_channel_distance(n: int, k: int, epsilon: float) -> float:
    p = build_protocol(n, k, epsilon)
    eff = KrausChannel(tuple(effective_channel_kraus_syndrome(p)))
    tgt = KrausChannel(tuple(target_kraus_syndrome(n - k, epsilon)))
    return choi_distance(eff, tgt)


def dilation_residual(n: int, k: int, epsilon: float, trials: int = 4, seed: int = 0) -> float:
    return verify_dilation(build_protocol(n, k, epsilon), trials, seed).residual


def scaling_ratio(func, eps_hi: float = 0.1, eps_lo: float = 0.05) -> float:
    """``func(eps_hi) / func(eps_lo)``; 8 for a third-order residual at halving."""
    return func(eps_hi) / func(eps_lo)


def _write_matrix(out, name, m):
    out.write(f"matrix {name} {m.shape[0]} {m.shape[1]}\n")
    for row in m:
        out.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
        out.write("\n")


def dump_protocol(p: WeakProtocol, dest=None, *, include=("H_M", "M", "U_C")) -> str:
    """Text dump of the protocol matrices; row-major, ``re im`` pairs, 17 digits.

    Writes to ``dest`` (path or text stream) when given and returns the text.
    """
    out = io.StringIO()
    out.write("# ctqec protocol dump v1\n")
    out.write(f"n {p.n}\nk {p.k}\nepsilon {p.epsilon:.17g}\nancilla_qubits {p.ancilla_qubits}\n")
    if "H_M" in include:
        _write_matrix(out, "H_M", p.measurement_ham)
    if "M" in include:
        for j, m in enumerate(p.povm):
            _write_matrix(out, f"M_{j}", m)
    if "U_C" in include:
        for j, u in enumerate(p.corrections):
            _write_matrix(out, f"U_C_{j}", u)
    text = out.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text, newline="\n")
    return text


def load_dump(source) -> dict:
    """Parse a dump back into ``{"meta": {...}, "matrices": {name: array}}``."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    lines = iter(text.splitlines())
    meta, mats = {}, {}
    for line in lines:
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "matrix":
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            data = np.array([[float(x) for x in next(lines).split()] for _ in range(rows)])
            if data.shape != (rows, 2 * cols):
                raise ValueError(f"matrix {name}: expected {rows}x{cols} complex entries")
            mats[name] = data[:, 0::2] + 1j * data[:, 1::2]
        else:
            key, value = parts
            meta[key] = float(value) if key == "epsilon" else int(value)
    return {"meta": meta, "matrices": mats}
