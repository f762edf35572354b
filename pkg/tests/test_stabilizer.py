import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctqec.errors import CodeDefinitionError
from ctqec.stabilizer import (
    BUILTIN_CODES,
    PauliOperator,
    build_code_from_generators,
    builtin_code,
    check_code,
    gf2_rank,
    load_code,
    parse_code_text,
    symplectic_product,
)

paulis = st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n),
                        st.integers(0, 3)))


@given(paulis)
def test_pauli_product_matches_matrices(args):
    a, b, ph = args
    pa = PauliOperator(a, ph)
    pb = PauliOperator.from_string(b)
    assert np.allclose((pa * pb).to_matrix(), pa.to_matrix() @ pb.to_matrix())
    ma, mb = pa.to_matrix(), pb.to_matrix()
    assert pa.commutes_with(pb) == np.allclose(ma @ mb, mb @ ma)
    assert symplectic_product(pa.symplectic(), pb.symplectic()) == (0 if pa.commutes_with(pb) else 1)


@pytest.mark.parametrize("text,letters,phase", [("XZ", "XZ", 0), ("-iYI", "YI", 3), ("+i ZZ".replace(" ", ""), "ZZ", 1)])
def test_pauli_from_string(text, letters, phase):
    p = PauliOperator.from_string(text)
    assert p.letters == letters and p.phase == phase


def test_bit_flip_projector_and_logical_zero(bit_flip):
    proj = bit_flip.codespace_projector()
    want = np.zeros((8, 8))
    want[0, 0] = want[7, 7] = 1
    assert np.allclose(proj, want)
    assert np.allclose(bit_flip.logical_zero(), np.eye(8)[0])


def test_bit_flip_syndromes(bit_flip):
    errs = bit_flip.correctable_errors
    assert [bit_flip.syndrome_of(e) for e in errs] == [0, 3, 1, 2]
    # syndrome blocks follow the corrected-basis ordering; both labellings are bijective
    assert sorted(bit_flip.syndrome_block(e) for e in errs) == [0, 1, 2, 3]


@pytest.mark.parametrize("name", BUILTIN_CODES)
def test_corrected_basis_moves_only_syndrome(name):
    code = builtin_code(name)
    info, d = code.info_dim, code.syndrome_dim
    for e in code.correctable_errors:
        m = code.to_corrected(e.to_matrix()).reshape(info, d, info, d)
        j = code.syndrome_block(e)
        # |a, 0> -> |a, j> up to one common phase
        block = m[:, j, :, 0]
        phase = block[0, 0]
        assert abs(abs(phase) - 1) < 1e-10
        assert np.allclose(block, phase * np.eye(info), atol=1e-10)


@pytest.mark.parametrize("name", BUILTIN_CODES)
def test_builtin_structure(name):
    code = builtin_code(name)
    res = check_code(code)
    assert res["encoding_unitarity"] < 1e-12 and res["correcting_unitarity"] < 1e-12
    assert res["block_structure"] < 1e-12 and res["correctable"]
    proj = code.codespace_projector()
    want = np.eye(2**code.n)
    for g in code.generators:
        want = want @ (np.eye(2**code.n) + g.to_matrix()) / 2
    assert np.allclose(proj, want)


def test_five_qubit_errors(five_qubit):
    assert len(five_qubit.correctable_errors) == 16
    assert five_qubit.syndrome_dim == 16
    assert sorted(five_qubit.syndrome_of(e) for e in five_qubit.correctable_errors) == list(range(16))


def test_synthesized_code_matches_builtin(bit_flip):
    code = build_code_from_generators(3, 1, ["ZZI", "ZIZ"])
    assert np.allclose(code.codespace_projector(), bit_flip.codespace_projector())
    assert check_code(code)["correctable"]


def test_trivial_code():
    code = build_code_from_generators(1, 1, [])
    assert np.allclose(code.to_corrected(np.eye(2)), np.eye(2))


def test_gf2_rank():
    assert gf2_rank(np.array([[1, 0, 1], [0, 1, 1], [1, 1, 0]])) == 2


@pytest.mark.parametrize("text,line", [
    ("3 1\nZZI\nZQZ\n", 3),
    ("3 1\nZZI\nZI\n", 3),
    ("3 1\nZZI\nXII\n", 3),
    ("three one\n", 1),
    ("# only a comment\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(CodeDefinitionError) as info:
        parse_code_text(text)
    assert info.value.line == line


def test_parse_and_load(tmp_path):
    f = tmp_path / "rep.code"
    f.write_text("# repetition\n3 1\nZZI  # g1\nIZZ\n")
    code = load_code(str(f))
    assert (code.n, code.k, code.name) == (3, 1, "rep")
    assert code.syndrome_of(PauliOperator.from_string("XII")) == 1
    with pytest.raises(CodeDefinitionError):
        load_code(str(tmp_path / "missing.code"))
