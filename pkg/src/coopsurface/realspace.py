"""Finite-array response in position space.

Dense steady-state solves for driven emitter patches, field maps on spatial
grids, thermal-disorder and vacancy ensembles, effective band diagrams of
disordered lattices, and the saturation (nonlinear) regime.

Sign conventions. The linear solver uses the equations of motion in the
form sum_j' M_jj' beta_j' = -eta_j, whose scattered field superposes as
E = E_in - (3 pi / k0) sum_j G(r - r_j) beta_j (single-emitter check:
forward scattering amplitude i 3/(2 k0), extinction cross section
3 lambda^2 / 2 pi). The saturation solvers use the opposite global sign of
beta (drive term -i eta beta_z), under which the weak-drive amplitude is
the negative of the linear one and the superposition carries a plus sign.
Each DipoleState records the sign that its solver implies, so field maps
and plane-wave fits stay consistent across both regimes.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bands import ZeemanField, zeeman_matrix
from .errors import (
    ComputeError,
    ConvergenceError,
    CoopSurfaceError,
    InvalidParameterError,
    ResourceLimitError,
    SingularResponseError,
)
from .greens import GAMMA0, K0
from .lattice import BZPath, EmitterSet, Lattice, finite_array

# Dense LU beyond roughly 71x71 occupied sites stops being a desk-scale job
# (complex matrix of 15123^2 is already ~3.7 GB).
SOLVER_CAP = 3 * 71 * 71

_MASK_DIST = 0.05  # field points closer than this to an emitter are masked
_RESIDUAL_TOL = 1e-10
_FIT_SAMPLES = 33  # per side, plane-wave window fits


@dataclass(frozen=True)
class DriveSpec:
    """Plane-wave drive: detuning, Rabi amplitudes, in-plane wavevector.

    ``eta`` holds the two transverse Rabi amplitudes (eta_z = 0 for a
    transverse plane wave); ``k_par`` tilts the drive away from normal
    incidence and must stay inside the light cone.
    """

    delta: float = 0.0
    eta: tuple = (1.0, 0.0)
    k_par: tuple = (0.0, 0.0)
    muB: ZeemanField | None = None

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=complex).reshape(-1)
        if eta.shape != (2,) or not np.all(np.isfinite(eta.view(float))):
            raise InvalidParameterError("eta must be two finite complex amplitudes")
        k_par = np.asarray(self.k_par, dtype=float).reshape(-1)
        if k_par.shape != (2,) or not np.all(np.isfinite(k_par)):
            raise InvalidParameterError("k_par must be a finite 2-vector")
        if np.hypot(*k_par) >= K0:
            raise InvalidParameterError("drive wavevector must lie inside the light cone")
        object.__setattr__(self, "eta", (complex(eta[0]), complex(eta[1])))
        object.__setattr__(self, "k_par", (float(k_par[0]), float(k_par[1])))

    @property
    def eta3(self) -> np.ndarray:
        return np.array([self.eta[0], self.eta[1], 0.0], dtype=complex)

    @property
    def kz(self) -> float:
        return float(np.sqrt(K0**2 - self.k_par[0] ** 2 - self.k_par[1] ** 2))


@dataclass(frozen=True)
class DipoleState:
    """Steady-state coherences of the occupied emitters.

    beta is (N, 3) over occupied sites in EmitterSet order. beta_z is None
    for linear solves and the per-emitter inversion for saturation solves.
    scatter_sign is the sign of the (3 pi / k0) sum G beta term in the
    field superposition implied by the solver's convention (see module
    docstring). converged is only meaningful for time-integrated states.
    """

    beta: np.ndarray
    beta_z: np.ndarray | None = None
    residual: float = 0.0
    scatter_sign: int = -1
    converged: bool = True


@dataclass(frozen=True)
class MapGrid:
    """Regular sampling grid on a coordinate plane.

    plane is "xz", "yz" or "xy"; offset fixes the remaining coordinate.
    extent1/extent2 are (lo, hi) along the two plane axes, in lambda.
    """

    plane: str = "xz"
    extent1: tuple = (-8.0, 8.0)
    extent2: tuple = (-8.0, 8.0)
    n1: int = 129
    n2: int = 129
    offset: float = 0.0

    def __post_init__(self):
        if self.plane not in ("xz", "yz", "xy"):
            raise InvalidParameterError(f"unknown map plane {self.plane!r}")
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidParameterError("map grid needs at least 2 samples per axis")
        for lo, hi in (self.extent1, self.extent2):
            if not hi > lo:
                raise InvalidParameterError("map extents must be increasing (lo, hi)")

    @property
    def axis1(self) -> np.ndarray:
        return np.linspace(self.extent1[0], self.extent1[1], self.n1)

    @property
    def axis2(self) -> np.ndarray:
        return np.linspace(self.extent2[0], self.extent2[1], self.n2)

    def points(self) -> np.ndarray:
        u, v = np.meshgrid(self.axis1, self.axis2, indexing="ij")
        u = u.ravel()
        v = v.ravel()
        w = np.full_like(u, self.offset)
        cols = {"xz": (u, w, v), "yz": (w, u, v), "xy": (u, v, w)}[self.plane]
        return np.column_stack(cols)


@dataclass(frozen=True)
class FieldMap:
    """Complex field samples on a MapGrid plus per-component intensity.

    field has shape (n1, n2, 3); mask flags grid points within the emitter
    exclusion radius (their field entries are zero, intensities NaN).
    intensity is |E_alpha|^2, except for ensemble-averaged maps where it is
    the configuration mean of |E_alpha|^2 and field is the coherent mean.
    """

    grid: MapGrid
    field: np.ndarray
    mask: np.ndarray
    intensity: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.intensity is None:
            inten = np.abs(self.field) ** 2
            inten[self.mask] = np.nan
            object.__setattr__(self, "intensity", inten)


@dataclass(frozen=True)
class DisorderSpec:
    """Gaussian static-position disorder and ensemble bookkeeping."""

    sigma_xy: float = 0.0
    sigma_z: float = 0.0
    n_configs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sigma_xy < 0 or self.sigma_z < 0:
            raise InvalidParameterError("disorder widths must be nonnegative")
        if self.n_configs < 1:
            raise InvalidParameterError("need at least one configuration")


def _drive_phases(positions: np.ndarray, drive: DriveSpec) -> np.ndarray:
    return np.exp(1j * (positions[:, 0] * drive.k_par[0] + positions[:, 1] * drive.k_par[1]))


def _build_system(positions: np.ndarray, drive: DriveSpec) -> np.ndarray:
    n = len(positions)
    if 3 * n > SOLVER_CAP:
        raise ResourceLimitError(
            f"dense solve of {3 * n} unknowns exceeds the cap of {SOLVER_CAP}"
        )
    m = _kernels.assemble_coupling(positions, K0)
    diag = -(drive.delta + 0.5j * GAMMA0) * np.eye(3)
    if drive.muB is not None:
        diag = diag + zeeman_matrix(drive.muB)
    m4 = m.reshape(n, 3, n, 3)
    idx = np.arange(n)
    m4[idx, :, idx, :] += diag
    return m


def _solve_positions(positions: np.ndarray, drive: DriveSpec) -> DipoleState:
    m = _build_system(positions, drive)
    rhs = (-_drive_phases(positions, drive)[:, None] * drive.eta3[None, :]).ravel()
    try:
        beta = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularResponseError(f"steady-state system is singular: {exc}") from exc
    scale = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(m @ beta - rhs) / scale) if scale > 0 else 0.0
    if residual > _RESIDUAL_TOL:
        raise SingularResponseError(
            f"solve residual {residual:.2e} exceeds {_RESIDUAL_TOL:.0e}"
        )
    return DipoleState(beta=beta.reshape(-1, 3), residual=residual)


def solve_linear(emitters: EmitterSet, drive: DriveSpec) -> DipoleState:
    """Steady-state coherences of a driven finite array (weak-drive limit).

    Solves sum_j' M_jj' beta_j' = -eta e^{i k_par . r_j} over the occupied
    sites by dense LU. The returned state is ordered like
    ``emitters.occupied_positions``.
    """
    return _solve_positions(emitters.occupied_positions, drive)


def power_balance(emitters: EmitterSet, state: DipoleState, drive: DriveSpec):
    """(scattered, extinction, relative mismatch) for a linear steady state.

    Scattered power is sum_jj' beta_j^dag Gamma_jj' beta_j', extinction is
    -2 Im sum_j eta_j^* . beta_j; the two agree for any exact solution of
    the linear system, which makes the mismatch a solver health check.
    """
    positions = emitters.occupied_positions
    coupling = _kernels.assemble_coupling(positions, K0)
    gamma = -2.0 * coupling.imag
    n = len(positions)
    idx = np.arange(n)
    gamma4 = gamma.reshape(n, 3, n, 3)
    gamma4[idx, :, idx, :] += GAMMA0 * np.eye(3)
    b = state.beta.ravel()
    scattered = float(np.real(b.conj() @ (gamma @ b)))
    eta_j = _drive_phases(positions, drive)[:, None] * drive.eta3[None, :]
    extinction = float(-2.0 * np.imag(np.vdot(eta_j.ravel(), b)))
    scale = max(abs(scattered), abs(extinction), 1e-300)
    return scattered, extinction, abs(scattered - extinction) / scale


def _incident_field(points: np.ndarray, drive: DriveSpec) -> np.ndarray:
    phase = np.exp(
        1j
        * (
            points[:, 0] * drive.k_par[0]
            + points[:, 1] * drive.k_par[1]
            + points[:, 2] * drive.kz
        )
    )
    return phase[:, None] * drive.eta3[None, :]


def _map_positions(positions, state, grid, drive):
    pts = grid.points()
    scattered, mask = _kernels.scattered_sum(positions, state.beta, pts, K0, _MASK_DIST)
    total = _incident_field(pts, drive)
    total += state.scatter_sign * (3.0 * np.pi / K0) * scattered
    total[mask] = 0.0
    shape = (grid.n1, grid.n2)
    return FieldMap(grid=grid, field=total.reshape(*shape, 3), mask=mask.reshape(shape))


def field_map(
    emitters: EmitterSet, state: DipoleState, grid: MapGrid, drive: DriveSpec
) -> FieldMap:
    """Total field E_in + scatter_sign (3 pi / k0) sum_j G(r - r_j) beta_j.

    Uses the full Green's tensor, not its far-field limit, so maps within a
    few lambda of the array are meaningful. Grid points within 0.05 lambda
    of an occupied emitter are masked.
    """
    return _map_positions(emitters.occupied_positions, state, grid, drive)


def _window_points(window: float, z: float) -> np.ndarray:
    u = np.linspace(-window / 2.0, window / 2.0, _FIT_SAMPLES)
    x, y = np.meshgrid(u, u, indexing="ij")
    return np.column_stack([x.ravel(), y.ravel(), np.full(x.size, z)])


def _array_width(emitters: EmitterSet) -> float:
    pos = emitters.positions  # full footprint, vacancies included
    return float(
        min(pos[:, 0].max() - pos[:, 0].min(), pos[:, 1].max() - pos[:, 1].min())
    )


def _plane_fit(
    positions: np.ndarray,
    beta: np.ndarray,
    drive: DriveSpec,
    z_sample: float,
    window: float,
    sign: int,
):
    """Fit the scattered field to normal plane waves at z = -+ z_sample.

    Returns (R_x, R_y, T_x, T_y); polarizations without drive amplitude
    come back as NaN. All sample points share one z per side, so the
    least-squares plane-wave amplitude reduces to the window mean.
    """
    out = []
    for z, forward in ((-z_sample, False), (+z_sample, True)):
        pts = _window_points(window, z)
        scattered, mask = _kernels.scattered_sum(positions, beta, pts, K0, _MASK_DIST)
        if mask.any():
            raise InvalidParameterError("sampling plane intersects the emitter array")
        amp = sign * (3.0 * np.pi / K0) * scattered.mean(axis=0)
        for alpha in (0, 1):
            eta_a = drive.eta3[alpha]
            if abs(eta_a) == 0.0:
                out.append(np.nan)
            elif forward:
                out.append(float(np.abs(1.0 + amp[alpha] / eta_a) ** 2))
            else:
                out.append(float(np.abs(amp[alpha] / eta_a) ** 2))
    r_x, r_y, t_x, t_y = out[0], out[1], out[2], out[3]
    return r_x, r_y, t_x, t_y


def reflectivity(
    emitters: EmitterSet,
    drive: DriveSpec,
    z_sample: float = 5.0,
    window: float | None = None,
):
    """(R_x, R_y, T_x, T_y) from central-window plane-wave fits.

    The scattered field is fitted over a centered transverse window
    (default: half the array width) at z = -+ z_sample; R_alpha is the
    squared backward amplitude, T_alpha = |1 + forward amplitude|^2, both
    normalized per drive polarization.
    """
    width = _array_width(emitters)
    if window is None:
        window = width / 2.0
    if window > width:
        raise InvalidParameterError(
            f"fit window {window} exceeds the array width {width}"
        )
    state = solve_linear(emitters, drive)
    return _plane_fit(
        emitters.occupied_positions, state.beta, drive, z_sample, window,
        state.scatter_sign,
    )


def _displaced(positions: np.ndarray, dis: DisorderSpec, rng) -> np.ndarray:
    scale = np.array([dis.sigma_xy, dis.sigma_xy, dis.sigma_z])
    return positions + rng.normal(size=positions.shape) * scale


def thermal_ensemble(
    emitters: EmitterSet,
    drive: DriveSpec,
    dis: DisorderSpec,
    grid: MapGrid,
    z_sample: float = 5.0,
    threads: int = 1,
):
    """Average the field intensity over Gaussian position disorder.

    Every occupied emitter is displaced independently per configuration
    (sigma_xy per in-plane axis, sigma_z out of plane), the steady state is
    re-solved and mapped, and |E|^2 is averaged over configurations.
    Returns (FieldMap, records): one record per configuration with its
    child seed, widths, plane-fit R/T and solve residual. Configurations
    whose solve fails are recorded with the error message and excluded
    from the average.
    """
    positions = emitters.occupied_positions
    window = _array_width(emitters) / 2.0
    children = np.random.SeedSequence(dis.seed).spawn(dis.n_configs)

    def one(i):
        record = {
            "config": i,
            "seed": int(children[i].generate_state(1)[0]),
            "sigma_xy": dis.sigma_xy,
            "sigma_z": dis.sigma_z,
        }
        pos = _displaced(positions, dis, np.random.default_rng(children[i]))
        try:
            state = _solve_positions(pos, drive)
            fmap = _map_positions(pos, state, grid, drive)
            r_x, r_y, t_x, t_y = _plane_fit(
                pos, state.beta, drive, z_sample, window, state.scatter_sign
            )
        except CoopSurfaceError as exc:
            record["error"] = str(exc)
            return None, record
        record.update(
            r_x=r_x, r_y=r_y, t_x=t_x, t_y=t_y, residual=state.residual
        )
        return fmap, record

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(dis.n_configs)))
    else:
        results = [one(i) for i in range(dis.n_configs)]

    maps = [f for f, _ in results if f is not None]
    if not maps:
        raise ComputeError("every disorder configuration failed to solve")
    fields = np.stack([f.field for f in maps])
    masks = np.stack([f.mask for f in maps])
    intens = np.stack([f.intensity for f in maps])
    mask = masks.any(axis=0)
    mean_int = intens.mean(axis=0)
    mean_int[mask] = np.nan
    mean_field = fields.mean(axis=0)
    mean_field[mask] = 0.0
    fmap = FieldMap(grid=grid, field=mean_field, mask=mask, intensity=mean_int)
    return fmap, [rec for _, rec in results]


@dataclass(frozen=True)
class DisorderedBands:
    """Harmonic-mean band diagram of a disordered finite lattice.

    energies has shape (n_q, 3): per path sample, the complex channel
    energies ordered (x, y, z) by polarization content.
    """

    path: BZPath
    energies: np.ndarray
    n_configs: int


def _channel_energies(e3: np.ndarray) -> np.ndarray:
    """Eigenvalues of a 3x3 expectation, assigned to x/y/z by content."""
    from scipy.optimize import linear_sum_assignment

    vals, vecs = np.linalg.eig(e3)
    content = np.abs(vecs) ** 2  # rows: axis, cols: mode
    axis, mode = linear_sum_assignment(-content)
    out = np.empty(3, dtype=complex)
    out[axis] = vals[mode]
    return out


def disordered_bands(
    lat: Lattice,
    extent: tuple,
    dis: DisorderSpec,
    path: BZPath,
    threads: int = 1,
) -> DisorderedBands:
    """Effective band diagram of a finite disordered lattice.

    Per configuration, couplings are built from the displaced positions
    while the momentum states keep the ideal-lattice phases; the 3x3
    expectation <q| Omega - i Gamma / 2 |q> is diagonalized and its
    eigenvalues are matched to polarization channels. Configurations are
    combined by the elementwise harmonic mean E = N_c / sum_c (1 / E_c),
    the average acting on inverse energies like a polarizability.
    """
    n1, n2 = extent
    if n1 < 20 or n2 < 20:
        raise InvalidParameterError("disordered bands need at least a 20x20 lattice")
    emitters = finite_array(lat, n1, n2)
    ideal = emitters.occupied_positions
    if 3 * len(ideal) > SOLVER_CAP:
        raise ResourceLimitError(
            f"coupling matrix of {3 * len(ideal)} rows exceeds the cap of {SOLVER_CAP}"
        )
    qs = np.asarray(path.samples, dtype=float)
    phases = np.exp(-1j * (ideal[:, :2] @ qs.T))  # (N, n_q), ideal positions
    children = np.random.SeedSequence(dis.seed).spawn(dis.n_configs)

    def one(i):
        pos = _displaced(ideal, dis, np.random.default_rng(children[i]))
        coupling = _kernels.assemble_coupling(pos, K0)
        n = len(pos)
        idx = np.arange(n)
        coupling.reshape(n, 3, n, 3)[idx, :, idx, :] += -0.5j * GAMMA0 * np.eye(3)
        per_q = np.empty((len(qs), 3), dtype=complex)
        for k in range(len(qs)):
            e3 = _kernels.momentum_expectation(coupling, phases[:, k])
            per_q[k] = _channel_energies(e3)
        return per_q

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = np.stack(list(pool.map(one, range(dis.n_configs))))
    else:
        samples = np.stack([one(i) for i in range(dis.n_configs)])

    inv = np.zeros_like(samples)
    nonzero = samples != 0
    if not nonzero.all():
        warnings.warn(
            "zero channel energies excluded from the harmonic mean", stacklevel=2
        )
    inv[nonzero] = 1.0 / samples[nonzero]
    counts = nonzero.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(counts > 0, counts / inv.sum(axis=0), np.nan + 0j)
    return DisorderedBands(path=path, energies=mean, n_configs=dis.n_configs)


@dataclass(frozen=True)
class VacancyRun:
    p: float
    emitters: EmitterSet
    state: DipoleState
    fmap: FieldMap


def vacancy_runs(
    lat: Lattice,
    extent: tuple,
    p_list,
    drive: DriveSpec,
    grid: MapGrid,
    seed: int = 0,
) -> list:
    """One vacancy configuration and field map per requested probability.

    Single configurations by design: vacancy disorder breaks translational
    invariance per realization, and averaging would wash out exactly the
    momentum-space speckle of interest. Seeds derive deterministically from
    ``seed``, one child per entry of p_list.
    """
    p_list = [float(p) for p in p_list]
    for p in p_list:
        if not 0.0 <= p < 0.5:
            raise InvalidParameterError(f"vacancy probability {p} outside [0, 0.5)")
    n1, n2 = extent
    child_seeds = np.random.SeedSequence(seed).generate_state(max(len(p_list), 1))
    runs = []
    for p, child in zip(p_list, child_seeds):
        emitters = finite_array(lat, n1, n2, vacancy_p=p, seed=int(child))
        state = solve_linear(emitters, drive)
        fmap = field_map(emitters, state, grid, drive)
        runs.append(VacancyRun(p=p, emitters=emitters, state=state, fmap=fmap))
    return runs


def transverse_spectrum(
    emitters: EmitterSet,
    state: DipoleState,
    z: float = 3.0,
    half_width: float | None = None,
    n: int = 64,
    component: int = 0,
):
    """Windowed transverse Fourier spectrum of the scattered field at z.

    Samples the scattered field (drive excluded) on an n x n grid over a
    centered square of the given half width (default: half the array
    width), applies a separable Hann window against edge ringing and
    returns (q_x, q_y, |FFT|^2) for the chosen Cartesian component.
    """
    if half_width is None:
        half_width = _array_width(emitters) / 2.0
    u = np.linspace(-half_width, half_width, n, endpoint=False)
    x, y = np.meshgrid(u, u, indexing="ij")
    pts = np.column_stack([x.ravel(), y.ravel(), np.full(x.size, z)])
    scattered, mask = _kernels.scattered_sum(
        emitters.occupied_positions, state.beta, pts, K0, _MASK_DIST
    )
    if mask.any():
        raise InvalidParameterError("spectrum plane intersects the emitter array")
    field2d = scattered[:, component].reshape(n, n)
    window = np.hanning(n)
    field2d = field2d * window[:, None] * window[None, :]
    spec = np.fft.fftshift(np.fft.fft2(field2d))
    dq = 2.0 * np.pi / (u[1] - u[0]) / n
    q_axis = (np.arange(n) - n // 2) * dq
    return q_axis, q_axis, np.abs(spec) ** 2


def offaxis_power_fraction(
    emitters: EmitterSet,
    state: DipoleState,
    z: float = 3.0,
    q_cut: float = K0 / 2.0,
    **kwargs,
) -> float:
    """Fraction of transverse spectral power outside |q| <= q_cut."""
    qx, qy, power = transverse_spectrum(emitters, state, z=z, **kwargs)
    rr = np.hypot(qx[:, None], qy[None, :])
    total = power.sum()
    if total <= 0:
        raise ComputeError("scattered field carries no spectral power")
    return float(power[rr > q_cut].sum() / total)


def nonlinear_single(delta: float, eta: float):
    """Closed-form saturated steady state of one driven emitter.

    Returns (beta, beta_z) with beta_z = -1 / (1 + 2 eta^2 / (Gamma0^2/4 +
    Delta^2)) and beta = -beta_lin * beta_z, where beta_lin is the
    weak-drive coherence i eta (Gamma0/2 + i Delta) / (Gamma0^2/4 + Delta^2).
    """
    eta = float(eta)
    if eta < 0:
        raise InvalidParameterError("drive amplitude must be nonnegative")
    denom = GAMMA0**2 / 4.0 + delta**2
    beta_lin = 1j * eta * (GAMMA0 / 2.0 + 1j * delta) / denom
    beta_z = -1.0 / (1.0 + 2.0 * eta**2 / denom)
    return -beta_lin * beta_z, beta_z


@dataclass(frozen=True)
class MeanfieldResult:
    """Uniform-array saturated steady state and its radiated channel."""

    beta: complex
    beta_z: float
    r: float
    t: float
    bistable: bool = False


def _meanfield_params(lat: Lattice, damping: float):
    from .bands import gamma_tilde, gamma_tilde_zero_order, omega_tilde

    if lat.n_basis != 1:
        raise InvalidParameterError("mean-field reduction assumes one emitter per cell")
    oxx = float(np.asarray(omega_tilde(lat, (0.0, 0.0), damping=damping))[0, 0])
    gxx = float(np.asarray(gamma_tilde(lat, (0.0, 0.0)))[0, 0])
    g0 = float(np.asarray(gamma_tilde_zero_order(lat, (0.0, 0.0)))[0, 0])
    # lattice sum over j' != j of the x-x coupling
    coupling = oxx - 0.5j * (gxx - GAMMA0)
    return coupling, g0


def _meanfield_beta(beta_z: float, delta: float, eta: float, coupling: complex):
    denom = GAMMA0 / 2.0 - 1j * delta - 1j * beta_z * coupling
    if abs(denom) < 1e-300:
        raise ComputeError("mean-field response diverges at this working point")
    return -1j * eta * beta_z / denom

def _meanfield_inversion_residual(
    beta_z: float, delta: float, eta: float, coupling: complex
) -> float:
    beta = _meanfield_beta(beta_z, delta, eta, coupling)
    eta_eff = eta - coupling * beta
    return -GAMMA0 * (beta_z + 1.0) + 4.0 * float(np.imag(np.conj(eta_eff) * beta))


def nonlinear_meanfield(
    lat: Lattice,
    delta: float,
    eta: float,
    muB: ZeemanField | None = None,
    damping: float = 0.01,
) -> MeanfieldResult:
    """Saturated steady state of the uniformly driven infinite array.

    Identifying beta_j = beta turns the array dynamics into single-emitter
    equations with the q = 0 lattice coupling added; the steady state is
    found by damped fixed-point iteration from the weak-drive seed and
    polished by a bracketing root solve of the inversion balance on
    [-1, 0]. The drive couples only the x transition here (an external
    magnetic field, recorded via ``muB``, is assumed to shift the y/z
    resonances far away), so the reduction is scalar. R and T follow from
    the zero-order radiative channel: R = |i (Gamma_tilde_0/2) beta / eta|^2,
    T = |1 + i (Gamma_tilde_0/2) beta / eta|^2.
    """
    from scipy.optimize import brentq

    eta = float(eta)
    if eta <= 0:
        raise InvalidParameterError("drive amplitude must be positive")
    coupling, g0 = _meanfield_params(lat, damping)

    beta_z = -1.0
    converged = False
    for _ in range(2000):
        residual = _meanfield_inversion_residual(beta_z, delta, eta, coupling)
        new = np.clip(beta_z + residual / GAMMA0, -1.0, 0.0)
        step = 0.25 * (new - beta_z)
        beta_z = beta_z + step
        if abs(step) < 1e-13:
            converged = True
            break

    # polish + bistability sweep on the physical inversion interval
    grid = np.linspace(-1.0, -1e-12, 1001)
    vals = np.array(
        [_meanfield_inversion_residual(bz, delta, eta, coupling) for bz in grid]
    )
    roots = []
    for k in range(len(grid) - 1):
        if vals[k] == 0.0:
            roots.append(grid[k])
        elif vals[k] * vals[k + 1] < 0:
            roots.append(
                brentq(
                    _meanfield_inversion_residual,
                    grid[k],
                    grid[k + 1],
                    args=(delta, eta, coupling),
                    xtol=1e-14,
                )
            )
    if not roots:
        if not converged:
            raise ConvergenceError("mean-field iteration found no steady state")
        roots = [beta_z]
    beta_z = min(roots, key=lambda r: abs(r - beta_z))
    beta = _meanfield_beta(beta_z, delta, eta, coupling)
    s = 0.5j * g0 * beta / eta
    return MeanfieldResult(
        beta=complex(beta),
        beta_z=float(beta_z),
        r=float(abs(s) ** 2),
        t=float(abs(1.0 + s) ** 2),
        bistable=len(roots) > 1,
    )


def nonlinear_realspace(
    emitters: EmitterSet,
    drive: DriveSpec,
    t_max: float = 400.0,
    dt: float = 0.02,
    state0: DipoleState | None = None,
    z_sample: float = 5.0,
):
    """Time-integrated saturated steady state of a finite array.

    Integrates the per-emitter x-polarization saturation equations (pairwise
    couplings, two-operator correlations factorized) with a classical RK4
    stepper until the state change per unit time drops below 1e-8 Gamma0 or
    t_max is reached. The drive is assumed to address the x transition only.
    Returns (DipoleState, R_x) with R_x from the backward plane-wave fit.
    """
    if dt > 0.02 + 1e-12 or dt <= 0:
        raise InvalidParameterError("stable integration needs 0 < dt <= 0.02")
    if t_max <= 0:
        raise InvalidParameterError("integration horizon must be positive")
    positions = emitters.occupied_positions
    n = len(positions)
    if 3 * n > SOLVER_CAP:
        raise ResourceLimitError(
            f"array of {n} emitters exceeds the integration cap"
        )
    coupling = _kernels.pair_xx_coupling(positions, K0)
    eta_j = drive.eta3[0] * _drive_phases(positions, drive)
    delta = drive.delta

    if state0 is not None:
        beta = state0.beta[:, 0].astype(complex).copy()
        beta_z = (
            state0.beta_z.astype(float).copy()
            if state0.beta_z is not None
            else np.full(n, -1.0)
        )
    else:
        beta = np.zeros(n, dtype=complex)
        beta_z = np.full(n, -1.0)

    def rhs(b, bz):
        cb = coupling @ b
        db = -(GAMMA0 / 2.0 - 1j * delta) * b + 1j * bz * cb - 1j * eta_j * bz
        eta_eff = eta_j - cb
        dbz = -GAMMA0 * (bz + 1.0) + 4.0 * np.imag(np.conj(eta_eff) * b)
        return db, dbz

    steps = int(np.ceil(t_max / dt))
    converged = False
    for _ in range(steps):
        k1b, k1z = rhs(beta, beta_z)
        k2b, k2z = rhs(beta + 0.5 * dt * k1b, beta_z + 0.5 * dt * k1z)
        k3b, k3z = rhs(beta + 0.5 * dt * k2b, beta_z + 0.5 * dt * k2z)
        k4b, k4z = rhs(beta + dt * k3b, beta_z + dt * k3z)
        step_b = (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        step_z = (dt / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        beta = beta + step_b
        beta_z = np.clip(beta_z + step_z, -1.0, 1.0)
        if not (np.all(np.isfinite(beta_z)) and np.all(np.isfinite(beta.view(float)))):
            raise ComputeError("saturation integration diverged")
        change = max(
            float(np.abs(step_b).max()), float(np.abs(step_z).max())
        ) / dt
        if change < 1e-8 * GAMMA0:
            converged = True
            break

    beta3 = np.zeros((n, 3), dtype=complex)
    beta3[:, 0] = beta
    state = DipoleState(
        beta=beta3, beta_z=beta_z, residual=change, scatter_sign=+1,
        converged=converged,
    )
    window = _array_width(emitters) / 2.0
    r_x, _, _, _ = _plane_fit(
        positions, beta3, drive, z_sample, window, state.scatter_sign
    )
    return state, r_x
