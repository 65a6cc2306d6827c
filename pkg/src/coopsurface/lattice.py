"""2D lattices, reciprocal lattices, Brillouin-zone paths and finite arrays.

All lengths are in units of the transition wavelength lambda; q vectors in
1/lambda. Lattice objects are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SingularLatticeError

__all__ = [
    "Lattice",
    "ReciprocalLattice",
    "BZPath",
    "EmitterSet",
    "make_square",
    "make_triangular",
    "make_honeycomb",
    "reciprocal",
    "bz_path",
    "finite_array",
]


def _as_vec2(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(2)
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class Lattice:
    """A 2D Bravais lattice with an optional multi-site basis.

    Attributes
    ----------
    a1, a2 : (2,) float
        Primitive vectors.
    basis : tuple of (2,) float
        Sublattice offsets; the first is always the zero vector and all
        offsets are reduced into one unit cell.
    kind : str
        One of "square", "triangular", "honeycomb" (drives BZ vertex names
        and CLI serialization).
    """

    a1: np.ndarray
    a2: np.ndarray
    basis: tuple
    kind: str

    def _key(self):
        return (self.kind, tuple(self.a1), tuple(self.a2),
                tuple(tuple(b) for b in self.basis))

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __post_init__(self):
        a1 = _as_vec2(self.a1)
        a2 = _as_vec2(self.a2)
        cross = a1[0] * a2[1] - a1[1] * a2[0]
        if abs(cross) < 1e-12 * max(np.linalg.norm(a1), np.linalg.norm(a2)) ** 2:
            raise SingularLatticeError("primitive vectors are linearly dependent")
        # reduce offsets into the cell spanned by a1, a2; first must be 0
        A = np.column_stack([a1, a2])
        reduced = []
        for b in self.basis:
            frac = np.linalg.solve(A, _as_vec2(b))
            frac -= np.floor(frac + 1e-12)
            reduced.append(_as_vec2(A @ frac))
        if np.linalg.norm(reduced[0]) > 1e-12:
            raise InvalidParameterError("first basis offset must be the zero vector")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "basis", tuple(reduced))

    @property
    def area(self) -> float:
        """Unit-cell area |a1 x a2|."""
        return abs(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0])

    @property
    def n_basis(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class ReciprocalLattice:
    g1: np.ndarray
    g2: np.ndarray


@dataclass(frozen=True)
class BZPath:
    """Sampled path through named high-symmetry points.

    ``samples`` is an (n, 2) array of q vectors; ``s`` the cumulative arc
    length along the path (used as the plot abscissa); ``segment`` the index
    of the vertex pair each sample belongs to.
    """

    vertex_names: tuple
    vertex_q: np.ndarray
    samples: np.ndarray
    s: np.ndarray
    segment: np.ndarray


@dataclass(frozen=True)
class EmitterSet:
    """Finite array of emitter positions with a vacancy mask.

    positions has shape (N, 3) with z = 0 for lattice-generated sets;
    occupancy is a boolean mask of the same length (False = vacant site).
    """

    positions: np.ndarray
    occupancy: np.ndarray
    lattice: Lattice
    extent: tuple

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        occ = np.asarray(self.occupancy, dtype=bool).reshape(-1)
        n1, n2 = self.extent
        if pos.shape[0] != n1 * n2 * self.lattice.n_basis:
            raise InvalidParameterError("position count does not match extent and basis")
        if occ.shape[0] != pos.shape[0]:
            raise InvalidParameterError("occupancy mask length mismatch")
        pos.flags.writeable = False
        occ.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "occupancy", occ)

    @property
    def occupied_positions(self) -> np.ndarray:
        return self.positions[self.occupancy]

    @property
    def n_occupied(self) -> int:
        return int(self.occupancy.sum())


def make_square(a: float) -> Lattice:
    """Square lattice with spacing ``a`` (single-site basis)."""
    if not a > 0:
        raise InvalidParameterError(f"spacing must be positive, got {a}")
    return Lattice(a1=(a, 0.0), a2=(0.0, a), basis=((0.0, 0.0),), kind="square")


def make_triangular(a: float) -> Lattice:
    """Triangular lattice with primitive length ``a`` (single-site basis)."""
    if not a > 0:
        raise InvalidParameterError(f"spacing must be positive, got {a}")
    return Lattice(
        a1=(a, 0.0),
        a2=(a / 2.0, a * np.sqrt(3.0) / 2.0),
        basis=((0.0, 0.0),),
        kind="triangular",
    )


def make_honeycomb(d_nn: float) -> Lattice:
    """Honeycomb lattice with nearest-neighbor distance ``d_nn``.

    Two-site basis on a triangular Bravais lattice of primitive length
    sqrt(3) * d_nn. The second basis offset lies along a nearest-neighbor
    bond, b = (a1 + a2) / 3, so |b| = d_nn; observables at the Gamma point
    do not depend on this orientation choice.
    """
    if not d_nn > 0:
        raise InvalidParameterError(f"spacing must be positive, got {d_nn}")
    L = np.sqrt(3.0) * d_nn
    a1 = np.array([L, 0.0])
    a2 = np.array([L / 2.0, L * np.sqrt(3.0) / 2.0])
    b = (a1 + a2) / 3.0
    return Lattice(a1=a1, a2=a2, basis=((0.0, 0.0), tuple(b)), kind="honeycomb")


def reciprocal(lat: Lattice) -> ReciprocalLattice:
    """Reciprocal primitives satisfying a_i . g_j = 2 pi delta_ij."""
    A = np.column_stack([lat.a1, lat.a2])
    try:
        G = 2.0 * np.pi * np.linalg.inv(A).T
    except np.linalg.LinAlgError as exc:
        raise SingularLatticeError("degenerate primitive vectors") from exc
    g1 = _as_vec2(G[:, 0].copy())
    g2 = _as_vec2(G[:, 1].copy())
    return ReciprocalLattice(g1=g1, g2=g2)


_SQUARE_VERTICES = ("G", "X", "M")
_TRIANGULAR_VERTICES = ("G", "M", "K")


def _vertex_q(lat: Lattice, name: str) -> np.ndarray:
    """Coordinates of a named high-symmetry point.

    Conventions (lattice-aligned frame): square X = (pi/a, 0),
    M = (pi/a, pi/a); triangular K = (4 pi / (3 L), 0), M = (pi/L, pi/(sqrt(3) L)).
    """
    key = name.strip().upper().replace("Γ", "G").replace("GAMMA", "G")
    if key == "G":
        return np.zeros(2)
    if lat.kind == "square":
        a = np.linalg.norm(lat.a1)
        if key == "X":
            return np.array([np.pi / a, 0.0])
        if key == "M":
            return np.array([np.pi / a, np.pi / a])
    else:
        L = np.linalg.norm(lat.a1)
        if key == "K":
            return np.array([4.0 * np.pi / (3.0 * L), 0.0])
        if key == "M":
            return np.array([np.pi / L, np.pi / (np.sqrt(3.0) * L)])
    allowed = _SQUARE_VERTICES if lat.kind == "square" else _TRIANGULAR_VERTICES
    raise InvalidParameterError(
        f"unknown zone vertex {name!r} for {lat.kind} lattice (allowed: {', '.join(allowed)})"
    )


def bz_path(lat: Lattice, names, samples_per_segment: int) -> BZPath:
    """Equally spaced q samples along the polyline of named vertices.

    Each segment carries ``samples_per_segment`` points including both ends;
    junction duplicates are dropped so the path is a single ordered sequence.
    """
    names = list(names)
    if len(names) < 2:
        raise InvalidParameterError("a path needs at least two vertices")
    if samples_per_segment < 2:
        raise InvalidParameterError("samples_per_segment must be >= 2")
    verts = np.array([_vertex_q(lat, n) for n in names])
    qs, ss, seg = [], [], []
    s0 = 0.0
    for i in range(len(verts) - 1):
        t = np.linspace(0.0, 1.0, samples_per_segment)
        if i > 0:
            t = t[1:]  # junction point already emitted by previous segment
        pts = verts[i] + t[:, None] * (verts[i + 1] - verts[i])
        length = np.linalg.norm(verts[i + 1] - verts[i])
        qs.append(pts)
        ss.append(s0 + t * length)
        seg.append(np.full(len(t), i))
        s0 += length
    return BZPath(
        vertex_names=tuple(names),
        vertex_q=verts,
        samples=np.vstack(qs),
        s=np.concatenate(ss),
        segment=np.concatenate(seg).astype(int),
    )


def finite_array(lat: Lattice, N1: int, N2: int, vacancy_p: float = 0.0, seed: int = 0) -> EmitterSet:
    """Centered N1 x N2 patch of the lattice with independent site vacancies.

    Every site is vacant with probability ``vacancy_p`` using one uniform
    draw per site from ``numpy.random.default_rng(seed)``, so equal
    (seed, p, N1, N2) give bit-identical occupancy.
    """
    if N1 < 1 or N2 < 1:
        raise InvalidParameterError("array extent must be at least 1x1")
    if not 0.0 <= vacancy_p < 1.0:
        raise InvalidParameterError(f"vacancy probability must be in [0, 1), got {vacancy_p}")
    i1 = np.arange(N1) - (N1 - 1) / 2.0
    i2 = np.arange(N2) - (N2 - 1) / 2.0
    cells = i1[:, None, None] * lat.a1 + i2[None, :, None] * lat.a2  # (N1, N2, 2)
    pts = cells[:, :, None, :] + np.asarray(lat.basis)[None, None, :, :]
    pts = pts.reshape(-1, 2)
    positions = np.column_stack([pts, np.zeros(len(pts))])
    rng = np.random.default_rng(seed)
    occupancy = rng.uniform(size=len(positions)) >= vacancy_p
    return EmitterSet(positions=positions, occupancy=occupancy, lattice=lat, extent=(N1, N2))
