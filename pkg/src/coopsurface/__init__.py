"""Cooperative optics of two-dimensional dipole arrays."""

from ._kernels import BACKEND
from .bands import (
    BandPoint,
    BlochMatrix,
    Polarizability,
    ZeemanField,
    band_structure,
    build_M,
    gamma_tilde,
    gamma_tilde_zero_order,
    omega_tilde,
    polarizability,
    sublattice_phase_matrix,
    zeeman_matrix,
)
from .errors import (
    BranchSingularityError,
    ComputeError,
    ConvergenceError,
    CoopSurfaceError,
    InvalidParameterError,
    OutsideLightConeError,
    ResourceLimitError,
    SingularArgumentError,
    SingularLatticeError,
    SingularResponseError,
    UndefinedVisibilityError,
)
from .greens import (
    GAMMA0,
    K0,
    CouplingBlock,
    coupling_pair,
    green_far,
    green_fourier,
    green_real,
)
from .lattice import (
    BZPath,
    EmitterSet,
    Lattice,
    ReciprocalLattice,
    bz_path,
    finite_array,
    make_honeycomb,
    make_square,
    make_triangular,
    reciprocal,
)
from .realspace import (
    DipoleState,
    DisorderSpec,
    DisorderedBands,
    DriveSpec,
    FieldMap,
    MapGrid,
    MeanfieldResult,
    VacancyRun,
    disordered_bands,
    field_map,
    nonlinear_meanfield,
    nonlinear_realspace,
    nonlinear_single,
    offaxis_power_fraction,
    power_balance,
    reflectivity,
    solve_linear,
    thermal_ensemble,
    transverse_spectrum,
    vacancy_runs,
)
from .scattering import (
    JonesMatrix,
    PhaseObservables,
    ScanAxis,
    ScanGrid,
    circular_jones,
    jones,
    jones_square_closed_form,
    phase_observables,
    polarizer_scan,
    reflection_matrix,
    refine_resonance,
    resonance_ridge,
    scattering_matrix,
    unwrap_nearest,
    visibility,
    waveplate_map,
    waveplate_scan,
)

__version__ = "0.1.0"
