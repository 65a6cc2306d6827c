"""Plane-wave scattering off the infinite array: S and Jones matrices.

The array responds to a drive at quasimomentum q through M(q)^-1; projecting
the reradiated field onto the propagating zeroth diffraction order gives the
scattering matrix S, and T = 1 + S is the complex transmission (Jones)
matrix acting on the (E_x, E_y) components at normal incidence. Scans over
lattice spacing, detuning, and field strength build the polarizer /
waveplate maps.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bands import (
    build_M,
    gamma_tilde_zero_order,
    omega_tilde,
    polarizability,
)
from .errors import (
    ComputeError,
    CoopSurfaceError,
    InvalidParameterError,
    OutsideLightConeError,
    UndefinedVisibilityError,
)
from .greens import K0
from .lattice import Lattice, make_square


@dataclass(frozen=True)
class JonesMatrix:
    """2x2 complex transmission matrix acting on (E_x, E_y)."""

    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=complex)
        if t.shape != (2, 2):
            raise InvalidParameterError(f"Jones matrix must be 2x2, got {t.shape}")
        smax2 = np.linalg.norm(t, 2) ** 2
        if smax2 > 1.0 + 1e-9:
            raise ComputeError(
                f"transmission is not passive: peak output intensity {smax2:.6f}")
        object.__setattr__(self, "t", t)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.t, dtype=dtype)


@dataclass(frozen=True)
class ScanAxis:
    name: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size < 1 or not np.all(np.isfinite(v)):
            raise InvalidParameterError(f"axis {self.name!r} must be finite")
        if v.size > 1 and not (np.all(np.diff(v) > 0) or np.all(np.diff(v) < 0)):
            raise InvalidParameterError(f"axis {self.name!r} must be monotone")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ScanGrid:
    """Gridded scan output; payload arrays are indexed like the axes tuple."""

    axes: tuple
    payload: dict = field(repr=False)

    def __post_init__(self):
        shape = tuple(len(ax) for ax in self.axes)
        for key, arr in self.payload.items():
            if np.asarray(arr).shape != shape:
                raise InvalidParameterError(
                    f"payload {key!r} has shape {np.asarray(arr).shape}, "
                    f"axes imply {shape}")

    @property
    def shape(self):
        return tuple(len(ax) for ax in self.axes)


class PhaseObservables(NamedTuple):
    delta_phi: float  # NaN when either output component vanishes
    i_out: float
    di_out: float


def _as_q(q) -> np.ndarray:
    arr = np.asarray(q, dtype=float).reshape(-1)
    if arr.size != 2 or not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"q must be a finite 2-vector, got {q!r}")
    return arr


def _plane_projector(v: np.ndarray) -> np.ndarray:
    n = v / np.linalg.norm(v)
    return np.eye(3) - np.outer(n, n)


def _reduced_response(lat: Lattice, q: np.ndarray, alpha_full: np.ndarray
                      ) -> np.ndarray:
    """Sublattice-contracted M^-1 driven and read out by the q plane wave."""
    nb = lat.n_basis
    if nb == 1:
        return alpha_full
    basis = np.asarray(lat.basis, dtype=float)
    w = np.exp(-1j * (basis @ q))
    blocks = alpha_full.reshape(nb, 3, nb, 3)
    return np.einsum("u,uavb,v->ab", w, blocks, w.conj())


def scattering_matrix(lat: Lattice, q=(0.0, 0.0), z_sign: int = 1,
                      delta: float = 0.0, muB=None,
                      damping: float = 0.01) -> np.ndarray:
    """S(q, Z) for the zeroth diffraction order on one side of the array.

    S = i (Gamma~_0(q)/2) P_v M(q)^-1 P_v+ with v = (q, sign(Z) q_z); the
    transmitted field is (1 + S) E_in and the reflected one S E_in.
    """
    q = _as_q(q)
    if z_sign not in (1, -1):
        raise InvalidParameterError(f"z_sign must be +1 or -1, got {z_sign!r}")
    p2 = q @ q
    if p2 >= K0 * K0:
        raise OutsideLightConeError(
            f"|q| >= k0 at q={tuple(q)}; no propagating zeroth order")
    qz = np.sqrt(K0 * K0 - p2)
    g0 = gamma_tilde_zero_order(lat, q)
    pol = polarizability(lat, q, delta=delta, muB=muB, damping=damping)
    red = _reduced_response(lat, q, pol.alpha_full)
    p_out = _plane_projector(np.array([q[0], q[1], z_sign * qz]))
    p_in = _plane_projector(np.array([q[0], q[1], qz]))
    return 0.5j * g0 @ p_out @ red @ p_in


def reflection_matrix(lat: Lattice, delta: float = 0.0, muB=None,
                      damping: float = 0.01) -> np.ndarray:
    """2x2 reflection matrix at normal incidence (backward zeroth order)."""
    s = scattering_matrix(lat, (0.0, 0.0), z_sign=-1, delta=delta, muB=muB,
                          damping=damping)
    return s[:2, :2]


def jones(lat: Lattice, delta: float = 0.0, muB=None,
          damping: float = 0.01) -> JonesMatrix:
    """Normal-incidence transmission matrix T = 1 + S restricted to (x, y)."""
    s = scattering_matrix(lat, (0.0, 0.0), z_sign=1, delta=delta, muB=muB,
                          damping=damping)
    return JonesMatrix(np.eye(2) + s[:2, :2])


def jones_square_closed_form(lat: Lattice, delta: float,
                             bx: float) -> JonesMatrix:
    """Transmission of the square lattice with the field along x, in closed form.

    Equivalent to inverting the 3x3 Bloch matrix by hand; kept as an
    independent algebraic path for cross-checking jones().
    """
    if lat.kind != "square" or lat.n_basis != 1:
        raise InvalidParameterError("closed form applies to the square lattice")
    om = omega_tilde(lat, (0.0, 0.0))
    oxx, oxy, ozz = om[0, 0], om[0, 1], om[2, 2]
    gamma = gamma_tilde_zero_order(lat, (0.0, 0.0))[0, 0]
    a = 0.5j * gamma + delta - oxx
    c = 0.5j * gamma / (bx**2 * a + (a**2 - oxy**2) * (ozz - delta))
    s = c * np.array([
        [-bx**2 + a * (delta - ozz), oxy * (delta - ozz)],
        [oxy * (delta - ozz), a * (delta - ozz)],
    ])
    return JonesMatrix(np.eye(2) + s)


def circular_jones(lat: Lattice, delta: float, bz: float) -> JonesMatrix:
    """Transmission with the field along z; circularly dichroic near
    Delta = Omega~xx(0) -+ bz where one circular component is reflected."""
    return jones(lat, delta=delta, muB=(0.0, 0.0, float(bz)))


def _as_e_in(e_in) -> np.ndarray:
    v = np.asarray(e_in, dtype=complex).reshape(-1)
    if v.size != 2 or not np.all(np.isfinite(v)):
        raise InvalidParameterError(f"e_in must be a finite 2-vector, got {e_in!r}")
    if np.linalg.norm(v) == 0:
        raise InvalidParameterError("e_in must be nonzero")
    return v


def visibility(t: JonesMatrix, e_in) -> float:
    """(I_x - I_y)/(I_x + I_y) of the transmitted field."""
    out = np.asarray(t) @ _as_e_in(e_in)
    ix, iy = abs(out[0]) ** 2, abs(out[1]) ** 2
    tot = ix + iy
    if tot <= 1e-300:
        raise UndefinedVisibilityError(
            "transmitted intensity vanishes; visibility undefined")
    return float((ix - iy) / tot)


def _wrap_phase(phi: float) -> float:
    # maps to (-pi, pi], keeping +pi (not -pi) on the branch cut
    return np.pi - (np.pi - phi) % (2.0 * np.pi)


def phase_observables(t: JonesMatrix, e_in) -> PhaseObservables:
    """Relative phase arg(out_x) - arg(out_y), total and differential intensity."""
    out = np.asarray(t) @ _as_e_in(e_in)
    ix, iy = abs(out[0]) ** 2, abs(out[1]) ** 2
    if ix <= 1e-300 or iy <= 1e-300:
        dphi = float("nan")  # phase of a vanishing component is meaningless
    else:
        dphi = _wrap_phase(float(np.angle(out[0]) - np.angle(out[1])))
    return PhaseObservables(delta_phi=dphi, i_out=float(ix + iy),
                            di_out=float(ix - iy))


def unwrap_nearest(phi: np.ndarray) -> np.ndarray:
    """Continue a wrapped phase sequence by choosing the nearest branch."""
    phi = np.asarray(phi, dtype=float)
    out = phi.copy()
    last = None
    for i, v in enumerate(phi):
        if np.isnan(v):
            continue
        if last is not None:
            k = np.round((last - v) / (2.0 * np.pi))
            out[i] = v + 2.0 * np.pi * k
        last = out[i]
    return out


def _scan_columns(column_fn, n_cols, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(column_fn, range(n_cols)))
    return [column_fn(i) for i in range(n_cols)]


def polarizer_scan(a_values, delta_values, muB, e_in=(1.0, 1.0),
                   threads: int = 1) -> ScanGrid:
    """Visibility map over lattice spacing and detuning at fixed field.

    Cells where the solve fails (or the transmitted field vanishes) hold NaN
    rather than aborting the scan.
    """
    a_axis = ScanAxis("a", a_values)
    d_axis = ScanAxis("delta", delta_values)
    if np.any(a_axis.values >= 1.0) or np.any(a_axis.values <= 0.0):
        raise InvalidParameterError(
            "polarizer scan expects subwavelength spacings 0 < a < 1")
    e_in = _as_e_in(e_in)

    def column(i):
        lat = make_square(float(a_axis.values[i]))
        col = np.full(len(d_axis), np.nan)
        for j, d in enumerate(d_axis.values):
            try:
                col[j] = visibility(jones(lat, delta=float(d), muB=muB), e_in)
            except CoopSurfaceError:
                pass
        return col

    cols = _scan_columns(column, len(a_axis), threads)
    return ScanGrid(axes=(a_axis, d_axis),
                    payload={"visibility": np.array(cols)})


def waveplate_map(a_values, delta_values, muB, e_in=(1.0, 1.0),
                  threads: int = 1) -> ScanGrid:
    """Phase-difference / intensity map over (a, Delta) at fixed field."""
    a_axis = ScanAxis("a", a_values)
    d_axis = ScanAxis("delta", delta_values)
    e_in = _as_e_in(e_in)

    def column(i):
        lat = make_square(float(a_axis.values[i]))
        col = np.full((len(d_axis), 3), np.nan)
        for j, d in enumerate(d_axis.values):
            try:
                col[j] = phase_observables(jones(lat, delta=float(d), muB=muB),
                                           e_in)
            except CoopSurfaceError:
                pass
        return col

    cols = np.array(_scan_columns(column, len(a_axis), threads))
    return ScanGrid(axes=(a_axis, d_axis),
                    payload={"delta_phi": cols[:, :, 0],
                             "i_out": cols[:, :, 1],
                             "di_out": cols[:, :, 2]})


def waveplate_scan(lat: Lattice, delta: float, eps_values, e_in=(1.0, 1.0),
                   threads: int = 1) -> ScanGrid:
    """Scan along the symmetric field line muB(eps) = (eps - 1.75, eps, 0).

    Emits the wrapped phase difference, a nearest-branch unwrapped copy, and
    the output intensities.
    """
    eps_axis = ScanAxis("eps", eps_values)
    e_in = _as_e_in(e_in)

    def cell(i):
        eps = float(eps_axis.values[i])
        try:
            t = jones(lat, delta=delta, muB=(eps - 1.75, eps, 0.0))
            return tuple(phase_observables(t, e_in))
        except CoopSurfaceError:
            return (np.nan, np.nan, np.nan)

    rows = np.array(_scan_columns(cell, len(eps_axis), threads))
    dphi = rows[:, 0]
    return ScanGrid(axes=(eps_axis,),
                    payload={"delta_phi": dphi,
                             "delta_phi_unwrapped": unwrap_nearest(dphi),
                             "i_out": rows[:, 1],
                             "di_out": rows[:, 2]})


def resonance_ridge(grid: ScanGrid, payload: str = "visibility",
                    mode: str = "min") -> np.ndarray:
    """Per-row extremal coordinate along the second axis of a 2D scan."""
    if len(grid.axes) != 2:
        raise InvalidParameterError("ridge extraction needs a 2D grid")
    arr = np.asarray(grid.payload[payload], dtype=float)
    masked = np.where(np.isnan(arr), np.inf if mode == "min" else -np.inf, arr)
    idx = np.argmin(masked, axis=1) if mode == "min" else np.argmax(masked, axis=1)
    return grid.axes[1].values[idx]


def refine_resonance(lat: Lattice, muB, delta_lo: float, delta_hi: float
                     ) -> float:
    """Detuning minimizing |T_xx| inside a bracket (polished resonance locus)."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda d: abs(np.asarray(jones(lat, delta=float(d), muB=muB))[0, 0]),
        bounds=(float(delta_lo), float(delta_hi)), method="bounded",
        options={"xatol": 1e-10})
    return float(res.x)
