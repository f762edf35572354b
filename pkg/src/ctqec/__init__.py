"""Quantum-jump continuous-time quantum error correction.

Minimal-ancilla protocol construction and verification, the Oreshkov and ADL
baselines, and master-equation dynamics.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .baselines import (
    ADLMap,
    OreshkovCorrection,
    adl_generator,
    calibrate,
    optimal_delta,
    oreshkov_channel,
    oreshkov_full_step,
    oreshkov_weight_update,
)
from .channels import (
    KrausChannel,
    SuperoperatorGenerator,
    choi_distance,
    choi_matrix,
    diamond_norm,
    diamond_norm_search,
    kraus_equivalence,
    kraus_rank,
)
from .dynamics import (
    NoiseModel,
    SimulationTrace,
    correction_generator,
    discrete_step_simulate,
    integrate_master,
    integrate_weights,
    lindblad_generator,
    observables,
)
from .linalg import configure_tolerances, matrix_exp, polar_decompose, tensor, trace_norm
from .minimal import (
    WeakProtocol,
    build_kraus_family,
    build_measurement_hamiltonian,
    build_protocol,
    effective_channel,
    target_map,
    verify_dilation,
)
from .stabilizer import PauliOperator, StabilizerCode, build_code_from_generators, builtin_code, syndrome_of, to_corrected, to_encoded

__version__ = "0.1.0"
