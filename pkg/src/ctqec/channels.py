"""Channel algebra: Kraus sets, superoperators, Choi matrices and the diamond norm.

Superoperators act on column-stacked vectors: ``vec(A X B) = (B^T kron A) vec(X)``.
Choi matrices are ordered output (x) input:
``J = sum_ij Phi(|i><j|) kron |i><j|``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError
from .linalg import TOL, as_matrix, dagger, require_square, trace_norm


def vec(m) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape(rows, rows if cols is None else cols, order="F")


def kraus_superoperator(kraus) -> np.ndarray:
    return sum(np.kron(np.conj(k), k) for k in kraus)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A map ``rho -> sum_j K_j rho K_j^dag``.

    ``trace_preserving=True`` asserts completeness to ``TOL.completeness``;
    pass False for map fragments.
    """

    kraus: tuple
    trace_preserving: bool = True
    epsilon: float | None = None
    dim_in: int = field(init=False)
    dim_out: int = field(init=False)

    def __post_init__(self):
        ops = tuple(as_matrix(k, "Kraus operator") for k in self.kraus)
        if not ops:
            raise DimensionError("a Kraus channel needs at least one operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must share one shape")
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "dim_out", shape[0])
        object.__setattr__(self, "dim_in", shape[1])
        if self.trace_preserving:
            res = self.completeness_residual()
            if res > TOL.completeness:
                raise ValueError(f"Kraus set is not trace preserving (residual {res:.3e})")

    def __len__(self):
        return len(self.kraus)

    def completeness_residual(self) -> float:
        s = sum(dagger(k) @ k for k in self.kraus)
        return float(np.abs(s - np.eye(self.dim_in)).max())

    def apply(self, rho) -> np.ndarray:
        rho = as_matrix(rho, "rho")
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def superoperator(self) -> np.ndarray:
        return kraus_superoperator(self.kraus)

    def choi(self) -> np.ndarray:
        return choi_matrix(self)

    def compose(self, first: "KrausChannel") -> "KrausChannel":
        """``self o first`` (``first`` acts first)."""
        if first.dim_out != self.dim_in:
            raise DimensionError("channel dimensions do not chain")
        ops = [a @ b for a in self.kraus for b in first.kraus]
        return KrausChannel(tuple(ops), self.trace_preserving and first.trace_preserving)

    def padded(self, length: int) -> tuple:
        zero = np.zeros((self.dim_out, self.dim_in), dtype=complex)
        return self.kraus + (zero,) * (length - len(self.kraus))

    @classmethod
    def identity(cls, dim: int) -> "KrausChannel":
        return cls((np.eye(dim, dtype=complex),))


class SuperoperatorGenerator:
    """Linear map on ``dim x dim`` matrices, stored as a column-stacking matrix."""

    def __init__(self, matrix, dim: int | None = None):
        m = require_square(matrix, "superoperator")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0] or (dim is not None and dim != d):
            raise DimensionError(f"superoperator of size {m.shape[0]} is not dim^2")
        self.dim = d
        self.matrix = np.array(m, dtype=complex)
        self.matrix.setflags(write=False)

    @classmethod
    def identity(cls, dim: int) -> "SuperoperatorGenerator":
        return cls(np.eye(dim * dim, dtype=complex))

    @classmethod
    def zero(cls, dim: int) -> "SuperoperatorGenerator":
        return cls(np.zeros((dim * dim, dim * dim), dtype=complex))

    @classmethod
    def from_channel(cls, ch: KrausChannel) -> "SuperoperatorGenerator":
        if ch.dim_in != ch.dim_out:
            raise DimensionError("generator needs a square channel")
        return cls(ch.superoperator())

    @classmethod
    def from_kraus(cls, kraus) -> "SuperoperatorGenerator":
        return cls(kraus_superoperator([as_matrix(k) for k in kraus]))

    @classmethod
    def dissipator(cls, op) -> "SuperoperatorGenerator":
        """``rho -> L rho L^dag - {L^dag L, rho}/2``."""
        op = require_square(op, "Lindblad operator")
        d = op.shape[0]
        eye = np.eye(d)
        ll = dagger(op) @ op
        return cls(np.kron(np.conj(op), op) - 0.5 * np.kron(eye, ll) - 0.5 * np.kron(ll.T, eye))

    @classmethod
    def commutator(cls, h) -> "SuperoperatorGenerator":
        """``rho -> -i [H, rho]``."""
        h = require_square(h, "Hamiltonian")
        eye = np.eye(h.shape[0])
        return cls(-1j * (np.kron(eye, h) - np.kron(h.T, eye)))

    def apply(self, rho) -> np.ndarray:
        rho = require_square(rho, "rho")
        if rho.shape[0] != self.dim:
            raise DimensionError(f"state is {rho.shape[0]}-dim, generator acts on {self.dim}")
        return unvec(self.matrix @ vec(rho), self.dim)

    def choi(self) -> np.ndarray:
        return choi_from_superoperator(self.matrix, self.dim, self.dim)

    def conjugated(self, u) -> "SuperoperatorGenerator":
        """The map ``rho -> U G(U^dag rho U) U^dag``."""
        u = require_square(u, "u")
        s = np.kron(np.conj(u), u)
        return SuperoperatorGenerator(s @ self.matrix @ dagger(s))

    def hermiticity_residual(self) -> float:
        j = self.choi()
        return float(np.abs(j - dagger(j)).max())

    def trace_residual(self) -> float:
        """``max |tr G(E_ij)|``; zero for trace-annihilating generators."""
        tr_row = vec(np.eye(self.dim)).conj() @ self.matrix
        return float(np.abs(tr_row).max())

    def _coerce(self, other):
        if isinstance(other, SuperoperatorGenerator):
            if other.dim != self.dim:
                raise DimensionError("generator dimensions differ")
            return other.matrix
        return NotImplemented

    def __add__(self, other):
        m = self._coerce(other)
        return m if m is NotImplemented else SuperoperatorGenerator(self.matrix + m)

    def __sub__(self, other):
        m = self._coerce(other)
        return m if m is NotImplemented else SuperoperatorGenerator(self.matrix - m)

    def __matmul__(self, other):
        m = self._coerce(other)
        return m if m is NotImplemented else SuperoperatorGenerator(self.matrix @ m)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return SuperoperatorGenerator(c * self.matrix)

    __rmul__ = __mul__

    def __neg__(self):
        return SuperoperatorGenerator(-self.matrix)

    def __repr__(self):
        return f"SuperoperatorGenerator(dim={self.dim})"


def choi_from_superoperator(s, dim_out: int, dim_in: int) -> np.ndarray:
    # column-stacked index of element (a, b) is a + b*d, so a C-order reshape
    # yields [b_out, a_out, b_in, a_in]
    t = np.asarray(s).reshape(dim_out, dim_out, dim_in, dim_in)
    return t.transpose(1, 3, 0, 2).reshape(dim_out * dim_in, dim_out * dim_in)


def choi_matrix(ch) -> np.ndarray:
    """Unnormalized Choi matrix ``(Phi (x) id)(|Omega><Omega|)``, output first."""
    if isinstance(ch, SuperoperatorGenerator):
        return ch.choi()
    cols = np.stack([k.reshape(-1) for k in ch.kraus], axis=1)
    return cols @ dagger(cols)


def choi_distance(a, b) -> float:
    """Trace norm of the Choi difference divided by the input dimension."""
    ja, jb = choi_matrix(a), choi_matrix(b)
    if ja.shape != jb.shape:
        raise DimensionError("channels act on different spaces")
    dim_in = a.dim if isinstance(a, SuperoperatorGenerator) else a.dim_in
    return trace_norm(ja - jb) / dim_in


def kraus_rank(ch: KrausChannel, rtol: float | None = None) -> int:
    """Number of linearly independent Kraus operators (the Choi rank)."""
    rtol = TOL.rank if rtol is None else rtol
    cols = np.stack([k.reshape(-1) for k in ch.kraus], axis=1)
    gram = dagger(cols) @ cols
    w = np.linalg.eigvalsh(0.5 * (gram + dagger(gram)))
    if w[-1] <= 0:
        return 0
    return int((w > rtol * w[-1]).sum())


def _row_completion(rows: np.ndarray) -> np.ndarray:
    """Extend orthonormal rows to a unitary (rows first)."""
    if rows.shape[0] == rows.shape[1]:
        return rows
    comp = scipy.linalg.null_space(rows)
    return np.vstack([rows, dagger(comp)])


def kraus_equivalence(a: KrausChannel, b: KrausChannel, atol: float | None = None):
    """Unitary ``u`` with ``A_j = sum_l u[j, l] B_l``, or None if the maps differ.

    Both sets are zero-padded to a common length. Each is written as
    ``F sqrt(L) W`` over the Choi eigenbasis ``F`` with ``W`` completed to a
    unitary, then ``u = (W_B^dag W_A)^T``.
    """
    atol = TOL.choi_equal if atol is None else atol
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise DimensionError("channels act on different spaces")
    if choi_distance(a, b) > atol:
        return None
    length = max(len(a), len(b))
    amat = np.stack([k.reshape(-1) for k in a.padded(length)], axis=1)
    bmat = np.stack([k.reshape(-1) for k in b.padded(length)], axis=1)
    j = amat @ dagger(amat)
    w, f = np.linalg.eigh(0.5 * (j + dagger(j)))
    keep = w > TOL.rank * max(w[-1], 1e-300)
    proj = dagger(f[:, keep]) / np.sqrt(w[keep])[:, None]
    wa = _row_completion(_orthonormal_rows(proj @ amat))
    wb = _row_completion(_orthonormal_rows(proj @ bmat))
    return (dagger(wb) @ wa).T


def _orthonormal_rows(m):
    """Nearest matrix with orthonormal rows (polar factor)."""
    uu, _, vh = np.linalg.svd(m, full_matrices=False)
    return uu @ vh


def reconstruction_residual(a: KrausChannel, b: KrausChannel, u) -> float:
    """``max |A_j - sum_l u[j, l] B_l|`` after zero padding."""
    length = u.shape[0]
    amat = np.stack(a.padded(length))
    bmat = np.stack(b.padded(length))
    return float(np.abs(amat - np.einsum("jl,lab->jab", u, bmat)).max())


@dataclass
class DiamondNormResult:
    value: float
    converged: bool
    restarts: int
    best_restart: int
    iterations: list
    values: list
    witness: np.ndarray | None = field(default=None, repr=False)


def _signed_kraus(choi, rtol=1e-13):
    choi = 0.5 * (choi + dagger(choi))
    w, v = np.linalg.eigh(choi)
    scale = np.abs(w).max() if w.size else 0.0
    keep = np.abs(w) > rtol * max(scale, 1e-300)
    return v[:, keep], w[keep]


def _hermitian_from_columns(cols, weights, dense_limit):
    """Eigenpairs of ``sum_i weights_i c_i c_i^dag`` via QR when low rank."""
    if cols.shape[1] < dense_limit:
        q, r = np.linalg.qr(cols)
        h = (r * weights) @ dagger(r)
        lam, z = np.linalg.eigh(0.5 * (h + dagger(h)))
        return lam, q @ z
    h = (cols * weights) @ dagger(cols)
    return np.linalg.eigh(0.5 * (h + dagger(h)))


def _ascent_restart(kraus, signs, dim_in, dim_out, m, rng, tol, max_iter):
    r = len(signs)
    kd = np.conj(np.transpose(kraus, (0, 2, 1)))
    psi = rng.normal(size=(dim_in, m)) + 1j * rng.normal(size=(dim_in, m))
    psi /= np.linalg.norm(psi)
    prev = -np.inf
    val = 0.0
    for it in range(1, max_iter + 1):
        v = (kraus @ psi).reshape(r, dim_out * m).T
        lam, z = _hermitian_from_columns(v, signs, dim_out * m)
        val = float(np.abs(lam).sum())
        if val - prev <= tol * max(1.0, val):
            return val, it, True, psi
        prev = val
        sg = np.sign(lam)
        nz = sg != 0
        zm = z[:, nz].T.reshape(-1, dim_out, m)
        y = np.einsum("iab,pbc->ipac", kd, zm).reshape(r * zm.shape[0], dim_in * m).T
        weights = np.repeat(signs, zm.shape[0]) * np.tile(sg[nz], r)
        lam2, w2 = _hermitian_from_columns(y, weights, dim_in * m)
        psi = w2[:, -1].reshape(dim_in, m)
    return val, max_iter, False, psi


def _as_choi(g):
    if isinstance(g, SuperoperatorGenerator):
        return g.choi(), g.dim, g.dim
    if isinstance(g, KrausChannel):
        return choi_matrix(g), g.dim_in, g.dim_out
    s = require_square(g, "superoperator")
    d = int(round(np.sqrt(s.shape[0])))
    return choi_from_superoperator(s, d, d), d, d


def diamond_norm_search(g, *, restarts: int = 32, seed: int = 0, tol: float = 1e-9,
                        max_iter: int = 1000, ancilla_dim: int | None = None,
                        workers: int | None = None) -> DiamondNormResult:
    """Multi-start alternating ascent for ``||g||_diamond`` (a lower bound).

    Each restart alternates between the sign-of-eigenvalues observable of
    ``(g (x) id)(|psi><psi|)`` and the top eigenvector of the adjoint action
    on that observable. The map is factored once as ``sum_i s_i K_i . K_i^dag``
    from its Choi eigendecomposition so every step costs Choi-rank-sized
    eigenproblems. Restart ``i`` draws from ``SeedSequence(seed).spawn`` child
    ``i``; results are reduced in restart order, so ``workers`` never changes
    the answer.
    """
    choi, dim_in, dim_out = _as_choi(g)
    herm = float(np.abs(choi - dagger(choi)).max())
    if herm > 1e-10 * max(1.0, np.abs(choi).max()):
        raise ValueError(f"map is not Hermiticity preserving (Choi residual {herm:.2e})")
    vecs, signs = _signed_kraus(choi)
    if signs.size == 0:
        return DiamondNormResult(0.0, True, restarts, 0, [0] * restarts, [0.0] * restarts)
    scale = np.sqrt(np.abs(signs))
    # Choi column index a*dim_in + c holds K[a, c]
    kraus = (vecs * scale).T.reshape(-1, dim_out, dim_in)
    m = dim_in if ancilla_dim is None else int(ancilla_dim)
    children = np.random.SeedSequence(seed).spawn(restarts)

    def run(i):
        return _ascent_restart(kraus, np.sign(signs), dim_in, dim_out, m,
                               np.random.default_rng(children[i]), tol, max_iter)

    if workers is None:
        workers = int(os.environ.get("CTQEC_THREADS", "1") or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(run, range(restarts)))
    else:
        outs = [run(i) for i in range(restarts)]
    values = [o[0] for o in outs]
    best = int(np.argmax(values))
    return DiamondNormResult(
        value=values[best],
        converged=bool(outs[best][2]),
        restarts=restarts,
        best_restart=best,
        iterations=[o[1] for o in outs],
        values=values,
        witness=outs[best][3],
    )


def diamond_norm(g, **kwargs) -> float:
    """``||g||_diamond``; raises :class:`ConvergenceError` if the best restart stalls."""
    res = diamond_norm_search(g, **kwargs)
    if not res.converged:
        raise ConvergenceError(
            f"diamond-norm ascent did not converge in {max(res.iterations)} iterations",
            lower_bound=res.value,
        )
    return res.value


def induced_trace_norm(g, **kwargs) -> float:
    """Ascent without ancilla: max over states ``psi`` of ``||g(psi)||_1``."""
    kwargs.setdefault("ancilla_dim", 1)
    return diamond_norm_search(g, **kwargs).value


def random_kraus_channel(dim: int, n_kraus: int, rng) -> KrausChannel:
    """Random CPTP map: slices of a Haar isometry."""
    z = rng.normal(size=(dim * n_kraus, dim)) + 1j * rng.normal(size=(dim * n_kraus, dim))
    q, _ = np.linalg.qr(z)
    return KrausChannel(tuple(q[i * dim:(i + 1) * dim] for i in range(n_kraus)))
