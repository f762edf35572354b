"""Stabilizer codes and the physical / encoded / corrected bases.

Qubit 0 is the leftmost tensor factor. In the encoded and corrected bases the
first ``k`` qubits carry the logical information and the last ``n - k`` the
syndrome, so basis index ``a * 2**(n-k) + s`` means information state ``a``
with syndrome ``s``. Syndrome bit ``l`` (1-based generator index) carries
weight ``2**(l-1)``; its binary expansion is written most significant digit
leftmost on the syndrome register.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CodeDefinitionError, DimensionError
from .linalg import dagger, require_square, tensor, unitarity_residual

_LETTERS = "IXYZ"
# (x, z) bits of each single-qubit Pauli
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}
# product table: a*b = i**phase * c
_MUL = {}
for _a in _LETTERS:
    for _b in _LETTERS:
        if _a == "I":
            _MUL[_a, _b] = (0, _b)
        elif _b == "I":
            _MUL[_a, _b] = (0, _a)
        elif _a == _b:
            _MUL[_a, _b] = (0, "I")
        else:
            _c = ({"X", "Y", "Z"} - {_a, _b}).pop()
            cyclic = (_a, _b) in {("X", "Y"), ("Y", "Z"), ("Z", "X")}
            _MUL[_a, _b] = (1 if cyclic else 3, _c)

SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_PHASE_PREFIX = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}


@dataclass(frozen=True)
class PauliOperator:
    """``i**phase`` times a tensor product of single-qubit Paulis."""

    letters: str
    phase: int = 0

    def __post_init__(self):
        if not self.letters:
            raise ValueError("a Pauli operator needs at least one qubit")
        bad = set(self.letters) - set(_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse strings like ``"ZZI"``, ``"-XZ"`` or ``"+iY"``."""
        s = text.strip()
        split = len(s) - len(s.lstrip("+-i"))
        prefix, body = s[:split], s[split:]
        if prefix not in _PHASE_PREFIX:
            raise ValueError(f"invalid phase prefix {prefix!r}")
        return cls(body.upper(), _PHASE_PREFIX[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOperator":
        letters = ["I"] * n
        letters[qubit] = letter
        return cls("".join(letters))

    @classmethod
    def from_symplectic(cls, x, z, phase: int = 0) -> "PauliOperator":
        letters = "".join(_FROM_XZ[int(a), int(b)] for a, b in zip(x, z))
        return cls(letters, phase)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    def symplectic(self) -> np.ndarray:
        """Length-2n 0/1 vector ``(x | z)``."""
        x = [_XZ[c][0] for c in self.letters]
        z = [_XZ[c][1] for c in self.letters]
        return np.array(x + z, dtype=np.uint8)

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if not isinstance(other, PauliOperator):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"cannot multiply {self.n}- and {other.n}-qubit Paulis")
        phase = self.phase + other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            p, c = _MUL[a, b]
            phase += p
            out.append(c)
        return PauliOperator("".join(out), phase)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.letters, self.phase + 2)

    def commutes_with(self, other: "PauliOperator") -> bool:
        if other.n != self.n:
            raise DimensionError(f"cannot compare {self.n}- and {other.n}-qubit Paulis")
        return symplectic_product(self.symplectic(), other.symplectic()) == 0

    def to_matrix(self) -> np.ndarray:
        return (1j**self.phase) * tensor(*(SINGLE_QUBIT[c] for c in self.letters))

    def __str__(self) -> str:
        prefix = _PHASE_TEXT[self.phase]
        return (prefix if prefix != "+" else "") + self.letters


def symplectic_product(u, v) -> int:
    n = len(u) // 2
    return int((np.dot(u[:n], v[n:]) + np.dot(u[n:], v[:n])) % 2)


def _as_pauli(p) -> PauliOperator:
    return p if isinstance(p, PauliOperator) else PauliOperator.from_string(str(p))


def _gf2_solve(rows: np.ndarray, target: np.ndarray):
    """Coefficients c with ``c @ rows == target`` over GF(2), or None."""
    m = len(rows)
    if m == 0:
        return np.zeros(0, dtype=np.uint8) if not target.any() else None
    aug = np.concatenate([rows.T % 2, target.reshape(-1, 1) % 2], axis=1).astype(np.uint8)
    pivots = []
    r = 0
    for c in range(m):
        hits = np.flatnonzero(aug[r:, c]) if r < aug.shape[0] else []
        if len(hits) == 0:
            continue
        p = r + hits[0]
        aug[[r, p]] = aug[[p, r]]
        for i in range(aug.shape[0]):
            if i != r and aug[i, c]:
                aug[i] ^= aug[r]
        pivots.append(c)
        r += 1
        if r == aug.shape[0]:
            break
    if aug[r:, -1].any():
        return None
    sol = np.zeros(m, dtype=np.uint8)
    for i, c in enumerate(pivots):
        sol[c] = aug[i, -1]
    return sol


def gf2_rank(rows) -> int:
    a = np.array(rows, dtype=np.uint8) % 2
    if a.size == 0:
        return 0
    rank = 0
    for c in range(a.shape[1]):
        hits = np.flatnonzero(a[rank:, c])
        if len(hits) == 0:
            continue
        p = rank + hits[0]
        a[[rank, p]] = a[[p, rank]]
        for i in range(a.shape[0]):
            if i != rank and a[i, c]:
                a[i] ^= a[rank]
        rank += 1
        if rank == a.shape[0]:
            break
    return rank


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """An ``[[n, k]]`` stabilizer code with its basis-change unitaries."""

    n: int
    k: int
    generators: tuple
    correctable_errors: tuple
    encoding_unitary: np.ndarray = field(repr=False)
    correcting_unitary: np.ndarray = field(repr=False)
    name: str = "custom"
    distance: int | None = None

    @property
    def r(self) -> int:
        """Number of syndrome qubits, ``n - k``."""
        return self.n - self.k

    @property
    def dim(self) -> int:
        return 2**self.n

    @property
    def syndrome_dim(self) -> int:
        return 2**self.r

    @property
    def info_dim(self) -> int:
        return 2**self.k

    def _check_pauli(self, e) -> PauliOperator:
        e = _as_pauli(e)
        if e.n != self.n:
            raise DimensionError(f"Pauli acts on {e.n} qubits, code has n={self.n}")
        return e

    def _check_op(self, op) -> np.ndarray:
        op = require_square(op, "operator")
        if op.shape[0] != self.dim:
            raise DimensionError(f"operator is {op.shape[0]}-dim, code space is {self.dim}-dim")
        return op

    def syndrome_of(self, e) -> int:
        """Syndrome value: bit ``l-1`` set iff ``e`` anticommutes with ``g_l``."""
        e = self._check_pauli(e)
        s = 0
        for l, g in enumerate(self.generators):
            if not g.commutes_with(e):
                s |= 1 << l
        return s

    def syndrome_block(self, e) -> int:
        """Index of the corrected-basis syndrome block ``e`` sends the codespace to.

        Coincides with :meth:`syndrome_of` for synthesized codes; for the
        hand-written three-qubit encoders the generator-to-bit assignment
        follows the encoding unitary instead.
        """
        e = self._check_pauli(e)
        mask = 0
        for l, g in enumerate(self.generators):
            if not g.commutes_with(e):
                mask ^= self._generator_weights[l]
        return mask

    @cached_property
    def _generator_weights(self) -> list:
        # Encoded generator g_l(E) acts on the syndrome register as +-Z^w for a
        # bit mask w; read w off the diagonal of the syndrome-0/1 columns.
        weights = []
        for g in self.generators:
            ge = self.to_encoded(g.to_matrix())
            diag = np.real(np.diag(ge)).reshape(self.info_dim, self.syndrome_dim)[0]
            base = diag[0]
            w = 0
            for bit in range(self.r):
                if diag[1 << bit] * base < 0:
                    w |= 1 << bit
            weights.append(w)
        return weights

    @cached_property
    def basis_change(self) -> np.ndarray:
        """``V = U_Gamma U_E^dag``; corrected-basis op is ``V op V^dag``."""
        return self.correcting_unitary @ dagger(self.encoding_unitary)

    def to_encoded(self, op_physical) -> np.ndarray:
        u = self.encoding_unitary
        return dagger(u) @ self._check_op(op_physical) @ u

    def from_encoded(self, op_encoded) -> np.ndarray:
        u = self.encoding_unitary
        return u @ self._check_op(op_encoded) @ dagger(u)

    def to_corrected(self, op_physical) -> np.ndarray:
        v = self.basis_change
        return v @ self._check_op(op_physical) @ dagger(v)

    def from_corrected(self, op_corrected) -> np.ndarray:
        v = self.basis_change
        return dagger(v) @ self._check_op(op_corrected) @ v

    def correcting_block(self, j: int) -> np.ndarray:
        """``U_{Gamma,j}``, the information unitary applied in syndrome block ``j``."""
        d = self.syndrome_dim
        u = self.correcting_unitary.reshape(self.info_dim, d, self.info_dim, d)
        return u[:, j, :, j].copy()

    def codespace_projector(self) -> np.ndarray:
        p = np.eye(self.dim, dtype=complex)
        for g in self.generators:
            p = p @ (np.eye(self.dim) + g.to_matrix()) / 2
        return p

    def logical_zero(self) -> np.ndarray:
        """Physical-basis codeword ``U_E |0...0>`` as a flat vector."""
        return self.encoding_unitary[:, 0].copy()

    def in_stabilizer_group(self, p) -> bool:
        p = self._check_pauli(p)
        if not self.generators:
            return p == PauliOperator.identity(self.n)
        rows = np.array([g.symplectic() for g in self.generators])
        coeffs = _gf2_solve(rows, p.symplectic())
        if coeffs is None:
            return False
        prod = PauliOperator.identity(self.n)
        for c, g in zip(coeffs, self.generators):
            if c:
                prod = prod * g
        return prod.phase == p.phase

    def is_correctable(self) -> bool:
        """Knill-Laflamme condition on the error list (pairwise products)."""
        for a in self.correctable_errors:
            for b in self.correctable_errors:
                prod = a * b
                if self.syndrome_of(prod) != 0:
                    continue
                # commutes with every generator: must be a stabilizer up to phase
                if not any(self.in_stabilizer_group(PauliOperator(prod.letters, ph)) for ph in (0, 2)):
                    return False
        return True

    def block_structure_residual(self) -> float:
        """Largest ``|<a,j|U_Gamma|b,l>|`` over ``j != l``."""
        d = self.syndrome_dim
        u = self.correcting_unitary.reshape(self.info_dim, d, self.info_dim, d)
        mask = ~np.eye(d, dtype=bool)
        return float(np.abs(u.transpose(1, 3, 0, 2)[mask]).max()) if d > 1 else 0.0


def _correcting_from_errors(n, k, u_enc, errors):
    """Assemble ``U_Gamma = sum_s U_{Gamma,s} (x) |s><s|`` from an error list.

    For each error the encoded action on ``|a, 0>`` lands in one syndrome block
    ``s`` with information action ``L_s``; the block correction is ``L_s^dag``.
    """
    r = n - k
    d_s, d_i = 2**r, 2**k
    blocks = {}
    for e in errors:
        ee = dagger(u_enc) @ e.to_matrix() @ u_enc
        cols = ee.reshape(d_i, d_s, d_i, d_s)[:, :, :, 0]  # [b, s, a]
        norms = np.linalg.norm(cols, axis=(0, 2))
        s = int(np.argmax(norms))
        if not np.isclose(norms[s] ** 2, d_i, atol=1e-9):
            raise CodeDefinitionError(f"error {e} does not map the codespace into a single syndrome block")
        info = cols[:, s, :]
        if s in blocks:
            prev = blocks[s]
            overlap = np.trace(dagger(prev) @ info) / d_i
            if not np.allclose(info, overlap * prev, atol=1e-9):
                raise CodeDefinitionError(f"errors share syndrome {s} with different logical action")
            continue
        blocks[s] = info
    u = np.zeros((2**n, 2**n), dtype=complex)
    for s in range(d_s):
        corr = dagger(blocks[s]) if s in blocks else np.eye(d_i)
        u += np.kron(corr, np.outer(np.eye(d_s)[s], np.eye(d_s)[s]))
    return u


def _validate_generators(n, k, generators):
    if n < 1 or k < 0 or k > n:
        raise CodeDefinitionError(f"invalid code size n={n}, k={k}")
    gens = [_as_pauli(g) for g in generators]
    if len(gens) != n - k:
        raise CodeDefinitionError(f"expected n-k={n - k} generators, got {len(gens)}")
    for i, g in enumerate(gens):
        if g.n != n:
            raise CodeDefinitionError(f"generator {i + 1} ({g}) has length {g.n}, expected {n}")
        if not g.is_hermitian():
            raise CodeDefinitionError(f"generator {i + 1} ({g}) is not Hermitian")
    for i, j in itertools.combinations(range(len(gens)), 2):
        if not gens[i].commutes_with(gens[j]):
            raise CodeDefinitionError(f"generators {i + 1} and {j + 1} anticommute")
    if gens and gf2_rank([g.symplectic() for g in gens]) < len(gens):
        raise CodeDefinitionError("generators are not independent")
    return gens


def _symplectic_basis(n, gen_vecs):
    """Destabilizers and logical pairs completing ``gen_vecs`` to a symplectic basis."""
    r = len(gen_vecs)
    rows = np.array(gen_vecs, dtype=np.uint8).reshape(r, 2 * n)
    # J-twisted rows so that rows_tw @ t = symplectic products <g, t>
    rows_tw = np.concatenate([rows[:, n:], rows[:, :n]], axis=1) if r else rows
    destab = []
    for l in range(r):
        t = _gf2_solve(rows_tw.T, np.eye(r, dtype=np.uint8)[l]) if r else None
        destab.append(t.astype(np.uint8))
    for l in range(r):
        for m in range(l):
            if symplectic_product(destab[l], destab[m]):
                destab[l] = destab[l] ^ rows[m]

    def project(v):
        v = v.copy()
        for l in range(r):
            if symplectic_product(v, destab[l]):
                v ^= rows[l]
        for l in range(r):
            if symplectic_product(v, rows[l]):
                v ^= destab[l]
        return v

    pool = [project(e) for e in np.eye(2 * n, dtype=np.uint8)]
    # visit Z1, X1, Z2, X2, ... so the trivial code gets Zbar = Z, Xbar = X
    pool = [pool[i] for i in sorted(range(2 * n), key=lambda i: (i % n, i < n))]
    logicals = []
    while pool and len(logicals) < n - r:
        v = pool.pop(0)
        if not v.any():
            continue
        partner = next((i for i, w in enumerate(pool) if symplectic_product(v, w)), None)
        if partner is None:
            continue
        w = pool.pop(partner)
        logicals.append((v, w))  # (Z-bar, X-bar)
        pool = [u ^ (symplectic_product(u, w) * v) ^ (symplectic_product(u, v) * w) for u in pool]
    if len(logicals) != n - r:
        raise CodeDefinitionError("could not complete a symplectic basis")
    return destab, logicals


def _stabilizer_state(ops, dim):
    p = np.eye(dim, dtype=complex)
    for op in ops:
        p = p @ (np.eye(dim) + op) / 2
    col = int(np.argmax(np.linalg.norm(p, axis=0)))
    v = p[:, col]
    v = v / np.linalg.norm(v)
    lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
    return v * (abs(lead) / lead)


def coset_leaders(generators, n):
    """Minimum-weight Pauli per syndrome, ties broken lexicographically (I<X<Y<Z)."""
    r = len(generators)
    leaders = {0: PauliOperator.identity(n)}
    for w in range(1, n + 1):
        if len(leaders) == 2**r:
            break
        for qubits in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                chars = ["I"] * n
                for q, c in zip(qubits, letters):
                    chars[q] = c
                candidate = PauliOperator("".join(chars))
                s = 0
                for l, g in enumerate(generators):
                    if not g.commutes_with(candidate):
                        s |= 1 << l
                best = leaders.get(s)
                if best is None or (best.weight == w and _lex_key(candidate) < _lex_key(best)):
                    leaders[s] = candidate
    return [leaders[s] for s in sorted(leaders)]


def _lex_key(p):
    return tuple(_LETTERS.index(c) for c in p.letters)


def build_code_from_generators(n: int, k: int, generators, *, errors=None, name="custom", distance=None) -> StabilizerCode:
    """Synthesize encoding and correcting unitaries from stabilizer generators.

    The encoder maps ``|a, s>`` to ``T^s Xbar^a |0bar>``, where the
    destabilizers ``T_l`` anticommute only with ``g_l`` and the logical
    operators come from symplectic Gram-Schmidt. The correcting unitary uses
    minimum-weight coset leaders unless ``errors`` is given.
    """
    gens = _validate_generators(n, k, generators)
    dim = 2**n
    r = n - k
    destab, logicals = _symplectic_basis(n, [g.symplectic() for g in gens])
    to_op = lambda v: PauliOperator.from_symplectic(v[:n], v[n:]).to_matrix()
    zbar = [to_op(z) for z, _ in logicals]
    xbar = [to_op(x) for _, x in logicals]
    tmat = [to_op(t) for t in destab]
    zero = _stabilizer_state([g.to_matrix() for g in gens] + zbar, dim)
    u_enc = np.zeros((dim, dim), dtype=complex)
    for a in range(2**k):
        for s in range(2**r):
            v = zero
            for i in range(k):
                if (a >> (k - 1 - i)) & 1:
                    v = xbar[i] @ v
            for l in range(r):
                if (s >> l) & 1:
                    v = tmat[l] @ v
            u_enc[:, a * 2**r + s] = v
    errs = coset_leaders(gens, n) if errors is None else [_as_pauli(e) for e in errors]
    u_corr = _correcting_from_errors(n, k, u_enc, errs)
    return StabilizerCode(n, k, tuple(gens), tuple(errs), u_enc, u_corr, name, distance)


def _three_qubit(name):
    n, k = 3, 1
    eye, x, h = SINGLE_QUBIT["I"], SINGLE_QUBIT["X"], np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    u_bit = tensor(np.diag([1, 0]), eye, eye) + tensor(np.diag([0, 1]), x, x)
    if name == "three_qubit_bit_flip":
        gens = ("ZZI", "ZIZ")
        errs = ("III", "XII", "IXI", "IIX")
        u_enc = u_bit
    else:
        gens = ("XXI", "XIX")
        errs = ("III", "ZII", "IZI", "IIZ")
        u_enc = tensor(h, h, h) @ u_bit
    gens = tuple(PauliOperator.from_string(g) for g in gens)
    errs = tuple(PauliOperator.from_string(e) for e in errs)
    u_corr = _correcting_from_errors(n, k, u_enc, errs)
    return StabilizerCode(n, k, gens, errs, u_enc, u_corr, name, 3)


def _five_qubit():
    gens = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
    errs = [PauliOperator.identity(5)] + [PauliOperator.single(5, q, c) for q in range(5) for c in "XYZ"]
    return build_code_from_generators(5, 1, gens, errors=errs, name="five_qubit_perfect", distance=3)


BUILTIN_CODES = ("three_qubit_bit_flip", "three_qubit_phase_flip", "five_qubit_perfect")


def builtin_code(name: str) -> StabilizerCode:
    if name in ("three_qubit_bit_flip", "three_qubit_phase_flip"):
        return _three_qubit(name)
    if name == "five_qubit_perfect":
        return _five_qubit()
    raise KeyError(f"unknown code {name!r}; available: {', '.join(BUILTIN_CODES)}")


def syndrome_of(code: StabilizerCode, e) -> int:
    return code.syndrome_of(e)


def to_encoded(code: StabilizerCode, op_physical) -> np.ndarray:
    return code.to_encoded(op_physical)


def to_corrected(code: StabilizerCode, op_physical) -> np.ndarray:
    return code.to_corrected(op_physical)


def parse_code_text(text: str, name="custom") -> StabilizerCode:
    """Parse a code definition: header ``n k`` then one generator per line.

    Blank lines and ``#`` comments are ignored. Errors carry the 1-based line
    number of the offending line.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            entries.append((lineno, line))
    if not entries:
        raise CodeDefinitionError("empty code definition", line=1)
    lineno, header = entries[0]
    parts = header.split()
    try:
        n, k = (int(p) for p in parts)
    except ValueError:
        raise CodeDefinitionError(f"header must be 'n k', got {header!r}", line=lineno) from None
    if n < 1 or k < 0 or k > n:
        raise CodeDefinitionError(f"invalid code size n={n}, k={k}", line=lineno)
    gens, lines = [], []
    for lineno, line in entries[1:]:
        try:
            g = PauliOperator.from_string(line)
        except ValueError as exc:
            raise CodeDefinitionError(str(exc), line=lineno) from None
        if g.n != n:
            raise CodeDefinitionError(f"generator {line!r} has length {g.n}, expected {n}", line=lineno)
        if not g.is_hermitian():
            raise CodeDefinitionError(f"generator {line!r} is not Hermitian", line=lineno)
        for prev, prev_line in zip(gens, lines):
            if not prev.commutes_with(g):
                raise CodeDefinitionError(f"{line!r} anticommutes with generator on line {prev_line}", line=lineno)
        if gf2_rank([p.symplectic() for p in gens] + [g.symplectic()]) <= len(gens):
            raise CodeDefinitionError(f"{line!r} is dependent on earlier generators", line=lineno)
        gens.append(g)
        lines.append(lineno)
    if len(gens) != n - k:
        last = entries[-1][0]
        raise CodeDefinitionError(f"expected {n - k} generators, found {len(gens)}", line=last)
    return build_code_from_generators(n, k, gens, name=name)


def parse_code_file(path) -> StabilizerCode:
    path = Path(path)
    return parse_code_text(path.read_text(), name=path.stem)


def load_code(spec: str) -> StabilizerCode:
    """Builtin code by name, else a code-definition file path."""
    if spec in BUILTIN_CODES:
        return builtin_code(spec)
    path = Path(spec)
    if not path.exists():
        raise CodeDefinitionError(f"unknown code {spec!r}: not a builtin name or existing file")
    return parse_code_file(path)


def check_code(code: StabilizerCode, atol: float = 1e-10) -> dict:
    """Residuals for the structural invariants of ``code``."""
    return {
        "encoding_unitarity": unitarity_residual(code.encoding_unitary),
        "correcting_unitarity": unitarity_residual(code.correcting_unitary),
        "block_structure": code.block_structure_residual(),
        "correctable": code.is_correctable(),
    }
