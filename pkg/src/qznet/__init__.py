"""Lossless rational impedance toolkit for superconducting circuit design.

Workflow: sample or measure a multiport network, fit a lossless rational
impedance (vfit), synthesize the capacitor-inductor cascade (synthesis),
interconnect bricks (interconnect), then extract transmon Hamiltonian
parameters (qham) and relaxation estimates (decay).
"""
from .core import (
    CONSTANTS,
    MaxwellCapacitance,
    Mode,
    MutualCapacitance,
    RationalImpedance,
    SampledNetwork,
    drop_ports,
    eval_rational,
    grid_capacitance,
    kron_reduce,
    maxwell_to_mutual,
    mutual_to_maxwell,
    s_to_z,
    sample_rational,
    z_to_s,
    z_to_y,
)
from .decay import (
    LossSpec,
    LossyModeSet,
    lossy_mode_poles,
    lossy_port_admittance,
    sweep_junction_inductance,
    t1_estimates,
)
from .distributed import (
    AnalyticTLModel,
    SeriesCapacitor,
    ShuntBranch,
    TLine,
    TwoPortChain,
    analytic_tl_rational,
    sweep_chain,
)
from .errors import (
    ConditioningError,
    DegeneracyError,
    IdentificationError,
    LosslessProjectionError,
    NonphysicalAdmittanceError,
    NumericalError,
    PoleHitError,
    QznetError,
    SingularSampleError,
    SPDError,
    ValidationError,
)
from .interconnect import (
    ConnectionPlan,
    cascade_load_s,
    connect_rational,
    filipsson_connect,
    joined_name,
)
from .qham import (
    EffectiveParams,
    FockModel,
    HamiltonianParams,
    JunctionSpec,
    TransmonSpec,
    effective_params,
    fock_hamiltonian,
    hamiltonian_params,
    oracle_effective_coupling,
)
from .synthesis import (
    CLCascade,
    ModeTransform,
    cascade_to_rational,
    full_lagrangian_capacitance,
    hamiltonian_cap_inverse,
    resonant_modes,
    synthesize_cascade,
)
from .touchstone import read_touchstone, write_touchstone
from .vfit import (
    FitConfig,
    GeneralRational,
    enforce_lossless,
    fit,
    fit_with_report,
    lossless_residues,
    refine_lossless,
)
from .serde import Workspace, load, save

__version__ = "0.1.0"

__all__ = [
    "AnalyticTLModel",
    "CLCascade",
    "CONSTANTS",
    "ConditioningError",
    "ConnectionPlan",
    "DegeneracyError",
    "EffectiveParams",
    "FitConfig",
    "FockModel",
    "GeneralRational",
    "HamiltonianParams",
    "IdentificationError",
    "JunctionSpec",
    "LossSpec",
    "LosslessProjectionError",
    "LossyModeSet",
    "MaxwellCapacitance",
    "Mode",
    "ModeTransform",
    "MutualCapacitance",
    "NonphysicalAdmittanceError",
    "NumericalError",
    "PoleHitError",
    "QznetError",
    "RationalImpedance",
    "SPDError",
    "SampledNetwork",
    "SeriesCapacitor",
    "ShuntBranch",
    "SingularSampleError",
    "TLine",
    "TransmonSpec",
    "TwoPortChain",
    "ValidationError",
    "Workspace",
    "analytic_tl_rational",
    "cascade_load_s",
    "cascade_to_rational",
    "connect_rational",
    "drop_ports",
    "effective_params",
    "enforce_lossless",
    "lossless_residues",
    "refine_lossless",
    "eval_rational",
    "filipsson_connect",
    "fit",
    "fit_with_report",
    "fock_hamiltonian",
    "full_lagrangian_capacitance",
    "grid_capacitance",
    "hamiltonian_cap_inverse",
    "hamiltonian_params",
    "joined_name",
    "kron_reduce",
    "load",
    "lossy_mode_poles",
    "lossy_port_admittance",
    "maxwell_to_mutual",
    "mutual_to_maxwell",
    "oracle_effective_coupling",
    "read_touchstone",
    "resonant_modes",
    "s_to_z",
    "sample_rational",
    "save",
    "sweep_chain",
    "sweep_junction_inductance",
    "synthesize_cascade",
    "t1_estimates",
    "write_touchstone",
    "z_to_s",
    "z_to_y",
]
