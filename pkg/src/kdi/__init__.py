"""Electron Ramsey-Bordé interferometry with bichromatic Kapitza-Dirac pulses.

The simulation state is a momentum ladder: amplitudes psi_n(kbar) on
momenta kbar + 2 n k_L, coupled by two-photon pulses and advanced
analytically between pulses.
"""
from kdi.errors import (
    BeamUnresolved,
    ConfigError,
    FrameMismatch,
    GridTooNarrow,
    KDIError,
    NoConvergence,
    NoPeaksFound,
    NormDrift,
    PopulationOutsideModel,
    SolverError,
    TruncationOverflow,
    WidthNonPositive,
    WindowEmpty,
)
from kdi.units import (
    CONSTANTS,
    LaserConfig,
    PhysicalConstants,
    ScaledUnits,
    balanced_pulse_duration,
    coupling_from_intensity,
    recoil_frequency,
    weak_coupling_margin,
)
from kdi.state import (
    Frame,
    GaussianInit,
    LadderWavefunction,
    SpatialDensity,
    init_gaussian,
    observables,
    peak_analysis,
    reconstruct_spatial,
)
from kdi.pulse import (
    PulseSpec,
    TwoLevelModel,
    evolve_pulse,
    ideal_splitter,
    rotating_frame_map,
    truncation_convergence,
    two_level_evolution,
)
from kdi.propagation import (
    AcceleratedSegment,
    FreeSegment,
    accelerated_evolve,
    free_evolve,
    tau_phase,
)
from kdi.interferometer import (
    BeamReport,
    ClassicalPath,
    RamseyBordeConfig,
    beam_fringe,
    beam_reports,
    build_ramsey_borde,
    enumerate_paths,
    phase_shift_prediction,
    run_sequence,
)

__version__ = "0.1.0"
