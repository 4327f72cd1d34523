"""Single-excitation dynamics of multi-point-coupled atom clusters ("superatoms")
on 1D tight-binding waveguides: dressed-state interference, decoherence-free
transfer, chiral emission and pitch-catch state transfer."""

from .errors import (
    ConfigurationError,
    DegenerateError,
    NormDriftError,
    NotResonantError,
    NotTopologicalError,
    OutOfBandError,
    SuperatomsError,
)
from .lattice import (
    Boundary,
    ChainSpec,
    default_absorber,
    density_of_states,
    dispersion,
    group_velocity,
    in_band,
    retarded_greens_function,
    wavevector_of,
)
from .superatom import (
    DressedMode,
    SuperatomSpec,
    analyzed_modes,
    directional_decay_rates,
    dressed_modes,
    effective_decay,
    effective_unit_coupling,
    mixing_angle,
    phase_accumulation,
    predict_chirality,
    ssh_edge_states,
)
from .layout import (
    CouplingPoint,
    Schedule,
    classify_topology,
    propagation_time,
    schedule_scale,
    schedule_value,
)
from .dynamics import (
    AssembledSystem,
    SystemState,
    Trajectory,
    atom_population,
    atom_state,
    coherence,
    density_matrix_atoms,
    directional_fractions,
    dressed_state,
    expected_energy,
    fidelity,
    field_intensity,
    gaussian_wavepacket,
    load_state,
    mode_overlap,
    propagate,
    save_state,
    validate_horizon,
)
from .scenarios import SCENARIOS, ScenarioReport, run_scenario

__version__ = "0.1.0"
