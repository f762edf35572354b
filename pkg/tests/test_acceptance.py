"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are also
repeated in the pytest terminal summary. Run directly with
``python3 tests/test_acceptance.py`` for the lines alone.
"""
import itertools
import time

import numpy as np
import pytest
import scipy.linalg

from ctqec.baselines import ADLMap, adl_generator, numerical_optimal_delta, optimal_delta, strong_correction_generator
from ctqec.channels import diamond_norm, kraus_rank, unvec, vec
from ctqec.cli import main as cli_main
from ctqec.dynamics import (
    NoiseModel,
    codeword,
    correction_generator,
    discrete_step_simulate,
    integrate_master,
    integrate_weights,
    lindblad_generator,
    observables,
)
from ctqec.minimal import (
    build_kraus_family,
    build_protocol,
    dilation_residual,
    effective_channel_distance,
    measurement_blocks,
    order_condition_residuals,
    polar_family,
    target_map,
)
from ctqec.stabilizer import builtin_code

from oracles import polar_series

RESULTS = []


def report(n, ok, detail):
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _pure(code):
    psi = codeword(code)
    return psi, np.outer(psi, psi.conj())


def test_01_minimality_constants():
    t = time.perf_counter()
    got = []
    for r in (1, 2, 3, 4):
        rank = kraus_rank(target_map(r + 1, 1, 0.1))
        anc = build_protocol(r + 1, 1, 0.1).ancilla_qubits
        got.append((r, rank, anc, rank == 2**r + 1 and anc == r + 1))
    elapsed = time.perf_counter() - t
    ok = all(g[-1] for g in got) and elapsed < 1.0
    report(1, ok, "rank/ancillas " + " ".join(f"r={r}:{k}/{a}" for r, k, a, _ in got) + f"  {elapsed:.2f}s")


def test_02_exact_completeness():
    worst = 0.0
    for (n, k), eps in itertools.product([(3, 1), (5, 1)], [0.0, 0.05, 0.2]):
        ops = build_kraus_family(n, k, eps)
        worst = max(worst, np.abs(sum(o.conj().T @ o for o in ops) - np.eye(2**n)).max())
    report(2, worst <= 1e-12, f"max residual {worst:.2e} (<= 1e-12)")


def _polar_error(eps):
    povm, unis, _ = polar_family(build_kraus_family(2, 0, eps))
    sm, su = polar_series(2, eps)
    return max(max(np.abs(a - b).max() for a, b in zip(povm, sm)), max(np.abs(a - b).max() for a, b in zip(unis, su)))


def test_03_polar_expansion():
    ratio = _polar_error(0.1) / _polar_error(0.05)
    report(3, 6 <= ratio <= 10, f"e(0.1)/e(0.05) = {ratio:.3f} (in [6,10])")


def test_04_dilation():
    ratios = {nk: dilation_residual(*nk, 0.1) / dilation_residual(*nk, 0.05) for nk in [(3, 1), (5, 1)]}
    orders = max(max(order_condition_residuals(measurement_blocks(r), 2**r).values()) for r in (2, 4))
    ok = all(6 <= v <= 10 for v in ratios.values()) and orders <= 1e-10
    report(4, ok, " ".join(f"{nk}: ratio {v:.3f}" for nk, v in ratios.items()) + f"; order residual {orders:.1e}")


def test_05_effective_channel():
    t = time.perf_counter()
    ratio = effective_channel_distance(3, 1, 0.1) / effective_channel_distance(3, 1, 0.05)
    elapsed = time.perf_counter() - t
    report(5, 6 <= ratio <= 10 and elapsed < 60,
           f"Choi distance ratio {ratio:.3f} (in [6,10] for eps^3; measured order {np.log2(ratio):.2f})")


def test_06_diamond_constants():
    ref = diamond_norm(strong_correction_generator(3, 1))
    ratios = [diamond_norm(adl_generator(ADLMap(1.0, 2.0, s))) / 2 for s in itertools.product((1, -1), repeat=3)]
    spread = max(ratios) - min(ratios)
    ok = abs(ref - 2) <= 0.02 and all(abs(r / 7.6847 - 1) <= 0.01 for r in ratios) and spread <= 1e-3
    report(6, ok, f"||R-I|| = {ref:.6f}; ADL ratio {ratios[0]:.5f}, spread over 8 signs {spread:.1e}")


def test_07_calibration(capsys):
    code = cli_main(["calibrate", "--kappa2", "64", "--gamma2", "128", "--format", "json"])
    import json
    doc = json.loads(capsys.readouterr().out)
    kappa = doc["rows"][0][1]
    with capsys.disabled():
        report(7, code == 0 and abs(kappa - 491.82) <= 5, f"kappa/lambda = {kappa:.3f} (491.82 +- 5)")


def test_08_weight_model_exactness():
    code = builtin_code("three_qubit_bit_flip")
    psi, rho = _pure(code)
    full = integrate_master(lindblad_generator(NoiseModel("bit_flip", 1.0, 3), code),
                            correction_generator(3, 1, 100.0), rho, 2.0, 1e-3, code=code)
    w = integrate_weights(1.0, 100.0, "constant", 2.0, 1e-4)
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        i, j = full.at(t), w.at(t)
        worst = max(worst, abs(full.codeword_fidelity[i] - w.codeword_fidelity[j]),
                    abs(full.correctable_overlap[i] - w.correctable_overlap[j]))
    report(8, worst <= 1e-6, f"max observable difference {worst:.2e} (<= 1e-6)")


def test_09_negligible_gain():
    opt = integrate_weights(1.0, 100.0, "optimal", 5.0, 1e-4)
    const = integrate_weights(1.0, 100.0, "constant", 5.0, 1e-4)
    gap = np.abs(opt.weights[:, 0] - const.weights[:, 0]).max()
    w1w0 = (opt.weights[:, 1] / opt.weights[:, 0]).max()
    rng = np.random.default_rng(0)
    dev = 0.0
    for _ in range(50):
        w = rng.dirichlet(np.ones(4))
        if 3 * w[0] - w[1] < 0.05:
            continue
        eps = rng.uniform(0.01, 0.2)
        dev = max(dev, abs(optimal_delta(w, eps) - numerical_optimal_delta(w, eps)))
    ok = gap <= 0.01 and w1w0 <= 0.05 and dev <= 1e-6
    report(9, ok, f"max|w0opt-w0const| {gap:.4f}; max w1/w0 {w1w0:.4f}; delta argmax dev {dev:.1e}")


def test_10_convergence():
    code = builtin_code("three_qubit_bit_flip")
    psi, rho = _pure(code)
    model = NoiseModel("bit_flip", 1.0, 3)
    g = lindblad_generator(model, code) + correction_generator(3, 1, 100.0)
    ref = observables(code, unvec(scipy.linalg.expm(g.matrix) @ vec(rho), 8), psi)[0]
    errs = [abs(discrete_step_simulate(100.0, model, code, rho, int(round(1 / dt)), dt).codeword_fidelity[-1] - ref)
            for dt in (2e-4, 1e-4)]
    ratio = errs[0] / errs[1]
    report(10, 3 <= ratio <= 5, f"error ratio under halving {ratio:.3f} (in [3,5]); errors {errs[0]:.2e}, {errs[1]:.2e}")


def test_11_adl_direction(capsys):
    code = cli_main(["compare", "--t-end", "0.1", "--format", "json"])
    import json
    doc = json.loads(capsys.readouterr().out)
    cols = doc["columns"]
    last = dict(zip(cols, doc["rows"][-1]))
    ok = (code == 0 and abs(last["t"] - 0.1) < 1e-12
          and last["codeword_fidelity_minimal"] > last["codeword_fidelity_adl"]
          and last["correctable_overlap_minimal"] > last["correctable_overlap_adl"])
    with capsys.disabled():
        report(11, ok, f"t=0.1 fidelity {last['codeword_fidelity_minimal']:.4f} vs ADL {last['codeword_fidelity_adl']:.4f}; "
                       f"overlap {last['correctable_overlap_minimal']:.4f} vs {last['correctable_overlap_adl']:.4f}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
