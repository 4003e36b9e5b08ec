"""Quantum-light transport through disordered helical and regular CROWs."""

from .lattice import (
    BandStructure,
    Circulation,
    DisorderRealization,
    Hamiltonian,
    LatticeKind,
    LatticeSpec,
    band_structure,
    bloch_bands,
    build_hamiltonian,
    linearization_defect,
    sample_disorder,
)
from .transport import (
    Channel,
    FieldSpectrum,
    FrequencyGrid,
    InputEnvelope,
    group_delay,
    intensity_profile,
    reflection,
    solve_steady_state,
    transmission,
    transmission_db,
)
from .quantum import (
    BeamSplitter,
    PortPair,
    TwoPhotonDensityMatrix,
    apply_beam_splitter,
    entanglement_entropy,
    hom_coincidence,
    noon_coincidence,
    noon_density_matrix,
    noon_purity,
)
from .ensemble import EnsembleSpec, EnsembleSummary, Observable, disorder_sweep, length_sweep, run_ensemble

__version__ = "0.1.0"
