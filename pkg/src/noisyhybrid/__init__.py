"""Mixed-state stabilizer simulation of noisy monitored Clifford circuits."""

from .analysis import CollapseResult, FitModel, FitResult, ThermoResult, data_collapse, extrapolate_thermo, fit_scaling
from .circuit import Boundary, CircuitConfig, ConfigError, Model, TrajectoryRecord, run_trajectory, step
from .clifford import CliffordGate, sample_two_qubit_clifford
from .entanglement import Bipartition, EntanglementReport, entropy, log_negativity, mutual_information, report
from .gf2 import rank_gf2
from .pauli import PauliString
from .stabilizer import (
    Tableau,
    apply_gate,
    measure_z,
    new_product_state,
    purity_exponent,
    reset,
    set_debug,
    subgroup_generator_count,
)

__version__ = "0.1.0"

__all__ = [
    "Bipartition",
    "Boundary",
    "CircuitConfig",
    "CliffordGate",
    "CollapseResult",
    "ConfigError",
    "EntanglementReport",
    "FitModel",
    "FitResult",
    "Model",
    "PauliString",
    "Tableau",
    "ThermoResult",
    "TrajectoryRecord",
    "apply_gate",
    "data_collapse",
    "entropy",
    "extrapolate_thermo",
    "fit_scaling",
    "log_negativity",
    "measure_z",
    "mutual_information",
    "new_product_state",
    "purity_exponent",
    "rank_gf2",
    "report",
    "reset",
    "run_trajectory",
    "sample_two_qubit_clifford",
    "set_debug",
    "step",
    "subgroup_generator_count",
]
