import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctqec.baselines import OreshkovCorrection, class_states, oreshkov_channel
from ctqec.channels import SuperoperatorGenerator
from ctqec.dynamics import (
    JumpGenerator,
    NoiseModel,
    SimulationTrace,
    codeword,
    correction_generator,
    discrete_step_simulate,
    integrate_master,
    integrate_weights,
    lindblad_generator,
    noise_process,
    observables,
)
from ctqec.errors import DegenerateWeightsError, IntegrationError
from ctqec.linalg import random_density_matrix
from ctqec.minimal import build_protocol

from oracles import bit_flip_weights


def _pure(code):
    psi = codeword(code)
    return psi, np.outer(psi, psi.conj())


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel("bit_flip", -1.0, 3)
    with pytest.raises(ValueError):
        NoiseModel("amplitude", 1.0, 3)
    assert len(NoiseModel("depolarizing", 1.0, 2).paulis()) == 6


def test_zero_rate_zero_generator(bit_flip):
    g = lindblad_generator(NoiseModel("bit_flip", 0.0, 3), bit_flip)
    assert np.abs(g.matrix).max() == 0


def test_single_qubit_polarization_decay():
    g = lindblad_generator(NoiseModel("bit_flip", 0.7, 1))
    z = np.diag([1.0, -1.0])
    rho = np.diag([0.8, 0.2]).astype(complex)
    # d<Z>/dt = -2 lambda <Z>
    assert np.isclose(np.trace(z @ g.apply(rho)).real, -2 * 0.7 * np.trace(z @ rho).real)


def test_three_qubit_leak_rate(bit_flip):
    g = lindblad_generator(NoiseModel("bit_flip", 1.0, 3), bit_flip)
    classes = class_states(bit_flip)
    d = g.apply(classes[0])
    assert np.isclose(np.trace(classes[0] @ d).real, -3.0)


def test_jump_generator_matches_superoperator(five_qubit, rng):
    nm = NoiseModel("depolarizing", 0.3, 5, per_pauli_scale=1 / 3)
    jg = noise_process(nm, five_qubit)
    rho = random_density_matrix(32, rng)
    assert np.allclose(jg.apply(rho), jg.superoperator().apply(rho))


@pytest.mark.parametrize("name", ["bit_flip", "five_qubit"])
def test_observables_pure_and_classes(name, request):
    code = request.getfixturevalue(name)
    psi, rho = _pure(code)
    assert np.allclose(observables(code, rho, psi), (1, 1))


def test_observables_classes(bit_flip):
    psi = codeword(bit_flip)
    c = class_states(bit_flip)
    assert np.allclose(observables(bit_flip, c[1], psi), (0, 1))
    assert np.allclose(observables(bit_flip, c[2], psi), (0, 0))


def test_trivial_evolution(bit_flip):
    psi, rho = _pure(bit_flip)
    tr = integrate_master(None, None, rho, 0.1, 0.01, code=bit_flip)
    assert np.allclose(tr.codeword_fidelity, 1) and np.allclose(tr.meta["final_state"], rho)


def test_no_correction_matches_analytic(bit_flip):
    psi, rho = _pure(bit_flip)
    g = lindblad_generator(NoiseModel("bit_flip", 1.0, 3), bit_flip)
    tr = integrate_master(g, None, rho, 1.0, 1e-3, code=bit_flip, classes=class_states(bit_flip))
    for t in (0.25, 0.5, 1.0):
        i = tr.at(t)
        assert np.abs(tr.weights[i] - bit_flip_weights(1.0, t)).max() < 1e-10
    wt = integrate_weights(1.0, 0.0, "constant", 1.0, 1e-4)
    assert abs(wt.codeword_fidelity[-1] - bit_flip_weights(1.0, 1.0)[0]) < 1e-12


def test_rk4_fourth_order(bit_flip):
    psi, rho = _pure(bit_flip)
    g = lindblad_generator(NoiseModel("bit_flip", 1.0, 3), bit_flip)
    c = correction_generator(3, 1, 10.0)
    exact = observables(bit_flip, _expm_apply(g + c, rho, 0.5), psi)[0]
    errs = [abs(integrate_master(g, c, rho, 0.5, dt, code=bit_flip).codeword_fidelity[-1] - exact)
            for dt in (0.025, 0.0125)]
    assert 12 <= errs[0] / errs[1] <= 20


def _expm_apply(g, rho, t):
    import scipy.linalg
    from ctqec.channels import unvec, vec
    return unvec(scipy.linalg.expm(g.matrix * t) @ vec(rho), rho.shape[0])


def test_weights_guard():
    with pytest.raises(DegenerateWeightsError):
        integrate_weights(1.0, 1.0, "optimal", 0.1, 1e-3, w_init=(0.1, 0.9, 0, 0))
    tr = integrate_weights(0.0, 100.0, "optimal", 0.5, 1e-3)
    assert np.allclose(tr.weights, [1, 0, 0, 0])


def test_integration_abort(bit_flip):
    psi, rho = _pure(bit_flip)
    g = correction_generator(3, 1, 1e4)
    with pytest.raises(IntegrationError) as info:
        integrate_master(lindblad_generator(NoiseModel("bit_flip", 1.0, 3), bit_flip), g, rho, 1.0, 0.01,
                         code=bit_flip, stride=1)
    assert not info.value.trace.completed and len(info.value.trace) >= 1


@settings(max_examples=8)
@given(st.integers(0, 2**31))
def test_correction_monotone_without_noise(seed):
    from ctqec.stabilizer import builtin_code
    code = builtin_code("three_qubit_bit_flip")
    rho = random_density_matrix(8, np.random.default_rng(seed))
    tr = integrate_master(None, correction_generator(3, 1, 5.0), rho, 0.5, 0.01, code=code, stride=1)
    assert np.all(np.diff(tr.codeword_fidelity) >= -1e-12)
    assert tr.meta["min_eigenvalue"] >= -1e-8


def test_trace_invariants_and_drift(bit_flip):
    psi, rho = _pure(bit_flip)
    g = lindblad_generator(NoiseModel("bit_flip", 1.0, 3), bit_flip)
    tr = integrate_master(g, correction_generator(3, 1, 100.0), rho, 1.0, 1e-3, code=bit_flip)
    assert tr.check_invariants() and tr.meta["max_trace_drift"] < 1e-8
    assert len(tr) == 101


def test_optimal_and_constant_five_qubit_close(five_qubit):
    psi, rho = _pure(five_qubit)
    nm = noise_process(NoiseModel("depolarizing", 1.0, 5), five_qubit)
    a = integrate_master(nm, correction_generator(5, 1, 100.0), rho, 0.2, 1e-3, code=five_qubit)
    b = integrate_master(nm, OreshkovCorrection(5, 1, 100.0, "optimal"), rho, 0.2, 1e-3, code=five_qubit)
    assert a.check_invariants() and b.check_invariants()
    assert np.all(b.codeword_fidelity >= a.codeword_fidelity - 1e-9)
    assert np.abs(a.codeword_fidelity - b.codeword_fidelity).max() < 0.01


def test_discrete_pure_noise(bit_flip):
    psi, rho = _pure(bit_flip)
    model = NoiseModel("bit_flip", 1.0, 3)
    d = discrete_step_simulate(0.0, model, bit_flip, rho, 50, 0.01)
    m = integrate_master(lindblad_generator(model, bit_flip), None, rho, 0.5, 1e-3, code=bit_flip)
    assert abs(d.codeword_fidelity[-1] - m.codeword_fidelity[-1]) < 1e-8


def test_discrete_cross_method(bit_flip):
    psi, rho = _pure(bit_flip)
    model = NoiseModel("bit_flip", 1.0, 3)
    d = discrete_step_simulate(100.0, model, bit_flip, rho, 10000, 1e-4)
    m = integrate_master(lindblad_generator(model, bit_flip), correction_generator(3, 1, 100.0), rho, 1.0, 1e-3,
                         code=bit_flip)
    assert abs(d.codeword_fidelity[-1] - m.codeword_fidelity[-1]) < 2e-3


def test_discrete_first_order_target(bit_flip):
    import scipy.linalg
    from ctqec.channels import unvec, vec
    psi, rho = _pure(bit_flip)
    model = NoiseModel("bit_flip", 1.0, 3)
    g = lindblad_generator(model, bit_flip) + correction_generator(3, 1, 100.0)
    ref = observables(bit_flip, unvec(scipy.linalg.expm(g.matrix) @ vec(rho), 8), psi)[0]
    errs = [abs(discrete_step_simulate(100.0, model, bit_flip, rho, int(round(1 / dt)), dt, channel="target")
                .codeword_fidelity[-1] - ref) for dt in (4e-4, 1e-4)]
    assert 3 <= errs[0] / errs[1] <= 5


def test_discrete_accepts_protocol_and_caps(bit_flip):
    psi, rho = _pure(bit_flip)
    model = NoiseModel("bit_flip", 1.0, 3)
    p = build_protocol(3, 1, 0.1)
    tr = discrete_step_simulate(p, model, bit_flip, rho, 10, 1e-4)
    assert np.isclose(tr.meta["kappa"], 100.0)
    with pytest.raises(ValueError):
        discrete_step_simulate(1000.0, model, bit_flip, rho, 10, 1e-3)


def test_protocol_and_oreshkov_steps_agree(bit_flip):
    # per-step difference between the two single-step channels is O(dt^2) = O(eps^4)
    psi, rho = _pure(bit_flip)
    model = NoiseModel("bit_flip", 1.0, 3)
    noisy = _expm_apply(lindblad_generator(model, bit_flip), rho, 0.01)
    devs = []
    for eps in (0.1, 0.05):
        a = oreshkov_channel(3, 1, eps, eps).apply(noisy)
        from ctqec.minimal import effective_channel
        b = effective_channel(build_protocol(3, 1, eps)).apply(noisy)
        fa, fb = observables(bit_flip, a, psi), observables(bit_flip, b, psi)
        devs.append(max(abs(fa[0] - fb[0]), abs(fa[1] - fb[1])))
    assert devs[0] < 1e-3 and devs[0] / devs[1] >= 7


def test_trace_lookup():
    tr = SimulationTrace(np.array([0.0, 0.5]), np.array([1.0, 0.9]), np.array([1.0, 0.95]))
    assert tr.at(0.5) == 1
    with pytest.raises(KeyError):
        tr.at(0.25)
