"""Command-line front end: plot-ready tabular data for the standard scenes.

One subcommand per scene (band structures, polarizer / waveplate scans,
field maps, disorder and vacancy ensembles, saturation runs). Every run
writes a ``manifest.json`` with the fully resolved configuration and the
library version next to its data files; identical configuration and seed
reproduce the output files byte for byte.

Configuration is resolved in three layers: built-in defaults, then a flat
``key=value`` config file (``--config``), then command-line flags. Keys the
command does not know are rejected. All physical quantities are in the
(lambda, Gamma_0) unit system; there is no way to pass dimensioned input.

Exit codes: 0 success, 2 configuration error, 3 compute error, 4 resource
limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bands import band_structure, omega_tilde, polarizability, sublattice_phase_matrix
from .errors import (
    CoopSurfaceError,
    InvalidParameterError,
    ResourceLimitError,
)
from .lattice import (
    Lattice,
    bz_path,
    finite_array,
    make_honeycomb,
    make_square,
    make_triangular,
)
from .realspace import (
    DisorderSpec,
    DriveSpec,
    MapGrid,
    disordered_bands,
    field_map,
    nonlinear_meanfield,
    nonlinear_realspace,
    offaxis_power_fraction,
    power_balance,
    reflectivity,
    solve_linear,
    thermal_ensemble,
    vacancy_runs,
)
from .scattering import (
    jones,
    phase_observables,
    polarizer_scan,
    reflection_matrix,
    refine_resonance,
    resonance_ridge,
    unwrap_nearest,
    visibility,
    waveplate_map,
    waveplate_scan,
)

_LATTICE_KINDS = {
    "square": make_square,
    "triangular": make_triangular,
    "honeycomb": make_honeycomb,
}


# --------------------------------------------------------------------------
# configuration plumbing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Opt:
    key: str
    default: str | None
    help: str


_COMMON = (
    _Opt("out", None, "output directory (default: ./<command>-out)"),
    _Opt("seed", "0", "base seed for every stochastic ingredient"),
    _Opt("threads", "1", "worker pool size; COOPSURFACE_THREADS caps it"),
)


def _read_config(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config file {path}: {exc}")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(
                f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve(opts: tuple, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win); reject unknown keys."""
    file_cfg = _read_config(args.config) if args.config else {}
    known = {o.key for o in opts}
    unknown = sorted(set(file_cfg) - known)
    if unknown:
        raise InvalidParameterError(
            f"unknown config keys: {', '.join(unknown)} "
            f"(known: {', '.join(sorted(known))})")
    resolved = {}
    for opt in opts:
        flag = getattr(args, opt.key)
        resolved[opt.key] = flag if flag is not None else file_cfg.get(
            opt.key, opt.default)
    return resolved


def _float(cfg: dict, key: str) -> float:
    try:
        value = float(cfg[key])
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{key} must be a number, got {cfg[key]!r}")
    if not np.isfinite(value):
        raise InvalidParameterError(f"{key} must be finite, got {cfg[key]!r}")
    return value


def _int(cfg: dict, key: str) -> int:
    try:
        return int(cfg[key])
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{key} must be an integer, got {cfg[key]!r}")


def _tokens(cfg: dict, key: str) -> list:
    return [t.strip() for t in str(cfg[key]).split(",") if t.strip()]


def _floats(cfg: dict, key: str) -> list:
    tokens = _tokens(cfg, key)
    if not tokens:
        raise InvalidParameterError(f"{key} must list at least one number")
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise InvalidParameterError(f"{key} must be comma-separated numbers, "
                                    f"got {cfg[key]!r}")


def _lattice(cfg: dict) -> Lattice:
    spec = str(cfg["lattice"])
    kind, sep, param = spec.partition(":")
    if not sep or kind not in _LATTICE_KINDS:
        raise InvalidParameterError(
            f"lattice must look like square:0.8 / triangular:0.7 / "
            f"honeycomb:0.9, got {spec!r}")
    try:
        scale = float(param)
    except ValueError:
        raise InvalidParameterError(f"lattice spacing must be a number, got {param!r}")
    return _LATTICE_KINDS[kind](scale)


def _muB(cfg: dict):
    bx = _float(cfg, "muBx")
    return (bx, 0.0, 0.0) if bx != 0.0 else None


def _delta(cfg: dict, lat: Lattice) -> float:
    """'auto' pins the drive to the x-band resonance at the zone center."""
    if str(cfg["delta"]).strip() == "auto":
        if lat.n_basis != 1:
            raise InvalidParameterError(
                "delta=auto needs a single-site lattice; give delta explicitly")
        return float(omega_tilde(lat, (0.0, 0.0))[0, 0].real)
    return _float(cfg, "delta")


def _pool_size(cfg: dict) -> int:
    threads = _int(cfg, "threads")
    if threads < 1:
        raise InvalidParameterError("threads must be >= 1")
    cap = os.environ.get("COOPSURFACE_THREADS")
    if cap:
        try:
            cap_n = int(cap)
        except ValueError:
            raise InvalidParameterError(
                f"COOPSURFACE_THREADS must be an integer, got {cap!r}")
        threads = max(1, min(threads, cap_n))
    return threads


# --------------------------------------------------------------------------
# writers
# --------------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_manifest(outdir: Path, command: str, cfg: dict) -> None:
    doc = {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg) if k != "out"},
        "version": __version__,
    }
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    (outdir / "manifest.json").write_text(text + "\n")


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([x.item() if isinstance(x, np.generic) else x
                             for x in row])


def _write_ndjson(path: Path, records: list) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True,
                                separators=(",", ":"),
                                default=_json_default) + "\n")


def _map_rows(fmap) -> tuple:
    grid = fmap.grid
    header = [grid.plane[0], grid.plane[1],
              "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez",
              "i_x", "i_y", "i_z"]
    rows = []
    u, v = grid.axis1, grid.axis2
    for i in range(grid.n1):
        for j in range(grid.n2):
            e = fmap.field[i, j]
            ii = fmap.intensity[i, j]
            rows.append([float(u[i]), float(v[j]),
                         e[0].real, e[0].imag, e[1].real, e[1].imag,
                         e[2].real, e[2].imag,
                         float(ii[0]), float(ii[1]), float(ii[2])])
    return header, rows


def _bands_files(lat: Lattice, names: list, samples: int, muB, threads: int,
                 outdir: Path, with_alpha: bool = True) -> None:
    """Band CSV along a vertex path, plus the polarizability components."""
    if len(names) < 2:
        raise InvalidParameterError(
            "path must name at least two zone vertices, e.g. G,X,M,G")
    path = bz_path(lat, names, samples)
    points = band_structure(lat, path, muB=muB, threads=threads)
    rows = []
    for i, pt in enumerate(points):
        for b, ev in enumerate(pt.eigenvalues):
            px, py, pz = pt.content[b]
            rows.append([int(path.segment[i]), float(path.s[i]),
                         pt.q[0], pt.q[1], b, ev.real, -2.0 * ev.imag,
                         float(px), float(py), float(pz)])
    _write_csv(outdir / "bands.csv",
               ["segment", "s", "qx", "qy", "band", "re_e", "decay",
                "px", "py", "pz"], rows)
    if not with_alpha:
        return
    rows = []
    nan6 = [float("nan")] * 6
    for i, q in enumerate(path.samples):
        try:
            alpha = polarizability(lat, q, delta=0.0, muB=muB).alpha
            cells = [alpha[0, 0].real, alpha[0, 0].imag,
                     alpha[1, 1].real, alpha[1, 1].imag,
                     alpha[0, 1].real, alpha[0, 1].imag]
        except CoopSurfaceError:
            cells = nan6
        rows.append([int(path.segment[i]), float(path.s[i]),
                     float(q[0]), float(q[1])] + cells)
    _write_csv(outdir / "polarizability.csv",
               ["segment", "s", "qx", "qy",
                "re_axx", "im_axx", "re_ayy", "im_ayy", "re_axy", "im_axy"],
               rows)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_bands(cfg: dict, outdir: Path) -> None:
    lat = _lattice(cfg)
    names = _tokens(cfg, "path") if str(cfg["path"]).strip() != "auto" else (
        ["G", "X", "M", "G"] if lat.kind == "square" else ["G", "M", "K", "G"])
    _bands_files(lat, names, _int(cfg, "samples"), _muB(cfg),
                 _pool_size(cfg), outdir)


def cmd_polarizer(cfg: dict, outdir: Path) -> None:
    a_values = np.linspace(_float(cfg, "amin"), _float(cfg, "amax"),
                           _int(cfg, "na"))
    d_values = np.linspace(_float(cfg, "dmin"), _float(cfg, "dmax"),
                           _int(cfg, "nd"))
    muB = _muB(cfg)
    e_in = (_float(cfg, "ex"), _float(cfg, "ey"))
    grid = polarizer_scan(a_values, d_values, muB, e_in=e_in,
                          threads=_pool_size(cfg))
    vis = grid.payload["visibility"]
    rows = [[float(a), float(d), float(vis[i, j])]
            for i, a in enumerate(a_values) for j, d in enumerate(d_values)]
    _write_csv(outdir / "scan.csv", ["a", "delta", "visibility"], rows)

    # ridge sidecar: grid minimum of the visibility per spacing, polished by
    # a bounded |T_xx| minimization around it
    ridge = resonance_ridge(grid, "visibility", mode="min")
    step = (d_values[-1] - d_values[0]) / max(len(d_values) - 1, 1)
    rows = []
    for i, a in enumerate(a_values):
        d0 = float(ridge[i])
        if not np.isfinite(d0):
            rows.append([float(a)] + [float("nan")] * 3)
            continue
        lat = make_square(float(a))
        d_star = refine_resonance(lat, muB, d0 - 2 * step, d0 + 2 * step)
        t_xx = abs(np.asarray(jones(lat, delta=d_star, muB=muB))[0, 0])
        rows.append([float(a), d0, d_star, float(t_xx)])
    _write_csv(outdir / "ridge.csv",
               ["a", "delta_grid", "delta_refined", "t_xx_abs"], rows)


def cmd_waveplate(cfg: dict, outdir: Path) -> None:
    threads = _pool_size(cfg)
    e_in = (_float(cfg, "ex"), _float(cfg, "ey"))
    map_muB = (_float(cfg, "mapmuBx"), 0.0, 0.0)
    a_values = np.linspace(_float(cfg, "amin"), _float(cfg, "amax"),
                           _int(cfg, "na"))
    d_values = np.linspace(_float(cfg, "dmin"), _float(cfg, "dmax"),
                           _int(cfg, "nd"))
    grid = waveplate_map(a_values, d_values, map_muB, e_in=e_in,
                         threads=threads)
    rows = [[float(a), float(d),
             float(grid.payload["delta_phi"][i, j]),
             float(grid.payload["i_out"][i, j]),
             float(grid.payload["di_out"][i, j])]
            for i, a in enumerate(a_values) for j, d in enumerate(d_values)]
    _write_csv(outdir / "map.csv",
               ["a", "delta", "delta_phi", "i_out", "di_out"], rows)

    # line scans at fixed spacing and detuning: field along x only, then the
    # symmetric excursion muB(eps) = (eps - 1.75, eps, 0)
    lat = make_square(_float(cfg, "scana"))
    delta = _float(cfg, "scandelta")
    b_values = np.linspace(_float(cfg, "bmin"), _float(cfg, "bmax"),
                           _int(cfg, "nb"))
    cells = []
    for b in b_values:
        try:
            cells.append(tuple(phase_observables(
                jones(lat, delta=delta, muB=(float(b), 0.0, 0.0)), e_in)))
        except CoopSurfaceError:
            cells.append((float("nan"),) * 3)
    cells = np.asarray(cells)
    unwrapped = unwrap_nearest(cells[:, 0])
    rows = [[float(b), cells[i, 0], float(unwrapped[i]), cells[i, 1],
             cells[i, 2]] for i, b in enumerate(b_values)]
    _write_csv(outdir / "fieldscan.csv",
               ["muBx", "delta_phi", "delta_phi_unwrapped", "i_out", "di_out"],
               rows)

    eps_values = np.linspace(_float(cfg, "epsmin"), _float(cfg, "epsmax"),
                             _int(cfg, "neps"))
    scan = waveplate_scan(lat, delta, eps_values, e_in=e_in, threads=threads)
    rows = [[float(eps),
             float(scan.payload["delta_phi"][i]),
             float(scan.payload["delta_phi_unwrapped"][i]),
             float(scan.payload["i_out"][i]),
             float(scan.payload["di_out"][i])]
            for i, eps in enumerate(eps_values)]
    _write_csv(outdir / "epsscan.csv",
               ["eps", "delta_phi", "delta_phi_unwrapped", "i_out", "di_out"],
               rows)


def _scene_grid(cfg: dict) -> MapGrid:
    half_x = _float(cfg, "mapx")
    half_z = _float(cfg, "mapz")
    return MapGrid(plane="xz", extent1=(-half_x, half_x),
                   extent2=(-half_z, half_z),
                   n1=_int(cfg, "nx"), n2=_int(cfg, "nz"))


def cmd_fieldmap(cfg: dict, outdir: Path) -> None:
    lat = _lattice(cfg)
    emitters = finite_array(lat, _int(cfg, "n1"), _int(cfg, "n2"))
    drive = DriveSpec(delta=_delta(cfg, lat),
                      eta=(_float(cfg, "ex"), _float(cfg, "ey")),
                      muB=_muB(cfg))
    state = solve_linear(emitters, drive)
    fmap = field_map(emitters, state, _scene_grid(cfg), drive)
    header, rows = _map_rows(fmap)
    _write_csv(outdir / "fieldmap.csv", header, rows)
    r_x, r_y, t_x, t_y = reflectivity(emitters, drive)
    scattered, extinction, balance = power_balance(emitters, state, drive)
    _write_ndjson(outdir / "summary.ndjson", [{
        "delta": drive.delta, "n_occupied": emitters.n_occupied,
        "r_x": r_x, "r_y": r_y, "t_x": t_x, "t_y": t_y,
        "residual": state.residual, "scattered": scattered,
        "extinction": extinction, "power_balance": balance,
    }])


def cmd_disorder(cfg: dict, outdir: Path) -> None:
    lat = _lattice(cfg)
    n1, n2 = _int(cfg, "n1"), _int(cfg, "n2")
    threads = _pool_size(cfg)
    seed = _int(cfg, "seed")
    n_configs = _int(cfg, "nconfigs")
    sxy_list = _floats(cfg, "sigmaxy")
    sz_list = _floats(cfg, "sigmaz")
    for s in sxy_list + sz_list:
        if s < 0:
            raise InvalidParameterError(f"disorder widths must be >= 0, got {s}")
    emitters = finite_array(lat, n1, n2)
    drive = DriveSpec(delta=_delta(cfg, lat),
                      eta=(_float(cfg, "ex"), _float(cfg, "ey")),
                      muB=_muB(cfg))
    grid = _scene_grid(cfg)
    names = _tokens(cfg, "path")
    path = bz_path(lat, names, _int(cfg, "samples"))

    records, band_rows = [], []
    for sxy, tok_xy in zip(sxy_list, _tokens(cfg, "sigmaxy")):
        for sz, tok_z in zip(sz_list, _tokens(cfg, "sigmaz")):
            dis = DisorderSpec(sigma_xy=sxy, sigma_z=sz, n_configs=n_configs,
                               seed=seed)
            fmap, recs = thermal_ensemble(emitters, drive, dis, grid,
                                          threads=threads)
            records.extend(recs)
            header, rows = _map_rows(fmap)
            _write_csv(outdir / f"map_sxy{tok_xy}_sz{tok_z}.csv", header, rows)
            bands = disordered_bands(lat, (n1, n2), dis, path, threads=threads)
            for i, q in enumerate(path.samples):
                for channel, ev in zip("xyz", bands.energies[i]):
                    band_rows.append([sxy, sz, int(path.segment[i]),
                                      float(path.s[i]), float(q[0]),
                                      float(q[1]), channel, ev.real,
                                      -2.0 * ev.imag])
    _write_ndjson(outdir / "ensemble.ndjson", records)
    _write_csv(outdir / "bands.csv",
               ["sigma_xy", "sigma_z", "segment", "s", "qx", "qy",
                "channel", "re_e", "decay"], band_rows)


def cmd_vacancy(cfg: dict, outdir: Path) -> None:
    lat = _lattice(cfg)
    p_tokens = _tokens(cfg, "p")
    p_list = _floats(cfg, "p")
    emitter_extent = (_int(cfg, "n1"), _int(cfg, "n2"))
    drive = DriveSpec(delta=_delta(cfg, lat),
                      eta=(_float(cfg, "ex"), _float(cfg, "ey")),
                      muB=_muB(cfg))
    runs = vacancy_runs(lat, emitter_extent, p_list, drive, _scene_grid(cfg),
                        seed=_int(cfg, "seed"))
    records = []
    for run, token in zip(runs, p_tokens):
        header, rows = _map_rows(run.fmap)
        _write_csv(outdir / f"map_p{token}.csv", header, rows)
        records.append({
            "p": run.p, "n_occupied": run.emitters.n_occupied,
            "offaxis_fraction": offaxis_power_fraction(run.emitters, run.state),
            "residual": run.state.residual,
        })
    _write_ndjson(outdir / "runs.ndjson", records)


def cmd_nonlinear(cfg: dict, outdir: Path) -> None:
    lat = _lattice(cfg)
    emitters = finite_array(lat, _int(cfg, "n1"), _int(cfg, "n2"))
    delta = _delta(cfg, lat)
    eta_tokens = _tokens(cfg, "eta")
    eta_list = _floats(cfg, "eta")
    t_max, dt = _float(cfg, "tmax"), _float(cfg, "dt")
    grid = _scene_grid(cfg)

    records, state = [], None
    for eta, token in zip(eta_list, eta_tokens):
        drive = DriveSpec(delta=delta, eta=(eta, 0.0))
        state, r_x = nonlinear_realspace(emitters, drive, t_max=t_max, dt=dt,
                                         state0=state)
        header, rows = _map_rows(field_map(emitters, state, grid, drive))
        _write_csv(outdir / f"map_eta{token}.csv", header, rows)
        mf = nonlinear_meanfield(lat, delta, eta)
        records.append({
            "eta": eta, "r_realspace": r_x, "r_meanfield": mf.r,
            "t_meanfield": mf.t, "beta_z_mean": float(state.beta_z.mean()),
            "beta_z_min": float(state.beta_z.min()),
            "converged": state.converged, "bistable": mf.bistable,
            "residual": state.residual,
        })
    _write_ndjson(outdir / "runs.ndjson", records)

    eta_values = np.linspace(min(eta_list), max(eta_list),
                             _int(cfg, "ncurve"))
    rows = []
    for eta in eta_values:
        mf = nonlinear_meanfield(lat, delta, float(eta))
        rows.append([float(eta), mf.r, mf.t, mf.beta_z, mf.beta.real,
                     mf.beta.imag, int(mf.bistable)])
    _write_csv(outdir / "meanfield.csv",
               ["eta", "r", "t", "beta_z", "re_beta", "im_beta", "bistable"],
               rows)


def cmd_honeycomb_demo(cfg: dict, outdir: Path) -> None:
    lat = make_honeycomb(_float(cfg, "dnn"))
    delta = _float(cfg, "delta")
    muB = _muB(cfg)
    t = np.asarray(jones(lat, delta=delta, muB=muB))
    r = np.asarray(reflection_matrix(lat, delta=delta, muB=muB))
    phase_eigs = np.sort(np.linalg.eigvalsh(sublattice_phase_matrix(
        lat, (0.0, 0.0))))
    # per-polarization zero-order energy budget; < 1 flags open Bragg orders
    energy = [float((np.abs(t[:, k]) ** 2).sum() + (np.abs(r[:, k]) ** 2).sum())
              for k in (0, 1)]
    _write_ndjson(outdir / "summary.ndjson", [{
        "d_nn": _float(cfg, "dnn"), "delta": delta,
        "t_xx": complex(t[0, 0]), "t_xy": complex(t[0, 1]),
        "t_yx": complex(t[1, 0]), "t_yy": complex(t[1, 1]),
        "r_xx": complex(r[0, 0]), "r_yy": complex(r[1, 1]),
        "i_t_xx": float(abs(t[0, 0]) ** 2), "i_t_yy": float(abs(t[1, 1]) ** 2),
        "phase_matrix_eigs": [float(e) for e in phase_eigs],
        "zero_order_energy_x": energy[0], "zero_order_energy_y": energy[1],
    }])
    names = _tokens(cfg, "path")
    _bands_files(lat, names, _int(cfg, "samples"), None, _pool_size(cfg),
                 outdir, with_alpha=False)


# --------------------------------------------------------------------------
# registry and entry point
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Command:
    summary: str
    opts: tuple
    run: object


_SCENE_OPTS = (
    _Opt("ex", "1", "incoming x amplitude"),
    _Opt("ey", "1", "incoming y amplitude"),
    _Opt("mapx", "16", "field-map half extent along x (lambda)"),
    _Opt("mapz", "8", "field-map half extent along z (lambda)"),
    _Opt("nx", "161", "field-map samples along x"),
    _Opt("nz", "81", "field-map samples along z"),
)

_COMMANDS = {
    "bands": _Command(
        "complex band structure and polarizability along a zone path",
        _COMMON + (
            _Opt("lattice", "square:0.8", "kind:spacing, e.g. square:0.8"),
            _Opt("path", "auto", "comma list of zone vertices (G,X,M,K)"),
            _Opt("samples", "40", "samples per path segment"),
            _Opt("muBx", "0", "magnetic field along x (Gamma_0)"),
        ),
        cmd_bands),
    "polarizer": _Command(
        "visibility scan over spacing and detuning, with resonance ridge",
        _COMMON + (
            _Opt("amin", "0.1", "smallest lattice spacing (lambda)"),
            _Opt("amax", "0.95", "largest lattice spacing (lambda)"),
            _Opt("na", "86", "spacing samples"),
            _Opt("dmin", "-5", "smallest detuning (Gamma_0)"),
            _Opt("dmax", "5", "largest detuning (Gamma_0)"),
            _Opt("nd", "201", "detuning samples"),
            _Opt("muBx", "3", "magnetic field along x (Gamma_0)"),
            _Opt("ex", "1", "incoming x amplitude"),
            _Opt("ey", "1", "incoming y amplitude"),
        ),
        cmd_polarizer),
    "waveplate": _Command(
        "phase-retardation maps and magnetic-field line scans",
        _COMMON + (
            _Opt("amin", "0.1", "smallest lattice spacing (lambda)"),
            _Opt("amax", "0.95", "largest lattice spacing (lambda)"),
            _Opt("na", "86", "spacing samples"),
            _Opt("dmin", "-5", "smallest detuning (Gamma_0)"),
            _Opt("dmax", "5", "largest detuning (Gamma_0)"),
            _Opt("nd", "201", "detuning samples"),
            _Opt("mapmuBx", "-1.75", "field along x for the (a, delta) map"),
            _Opt("scana", "0.6", "lattice spacing for the line scans"),
            _Opt("scandelta", "1", "detuning for the line scans"),
            _Opt("bmin", "-5", "smallest muBx in the field scan"),
            _Opt("bmax", "5", "largest muBx in the field scan"),
            _Opt("nb", "401", "field-scan samples"),
            _Opt("epsmin", "-5", "smallest eps in muB(eps)=(eps-1.75,eps,0)"),
            _Opt("epsmax", "5", "largest eps"),
            _Opt("neps", "401", "eps samples"),
            _Opt("ex", "1", "incoming x amplitude"),
            _Opt("ey", "1", "incoming y amplitude"),
        ),
        cmd_waveplate),
    "fieldmap": _Command(
        "steady-state field map of a finite array, with its R/T summary",
        _COMMON + (
            _Opt("lattice", "square:0.8", "kind:spacing"),
            _Opt("n1", "40", "emitters along the first lattice direction"),
            _Opt("n2", "40", "emitters along the second lattice direction"),
            _Opt("delta", "auto", "drive detuning; auto = zone-center x resonance"),
            _Opt("muBx", "1", "magnetic field along x (Gamma_0)"),
        ) + _SCENE_OPTS,
        cmd_fieldmap),
    "disorder": _Command(
        "thermal-position ensembles: averaged maps, R/T records, bands",
        _COMMON + (
            _Opt("lattice", "square:0.8", "kind:spacing"),
            _Opt("n1", "20", "emitters along the first lattice direction"),
            _Opt("n2", "20", "emitters along the second lattice direction"),
            _Opt("delta", "auto", "drive detuning; auto = zone-center x resonance"),
            _Opt("muBx", "1", "magnetic field along x (Gamma_0)"),
            _Opt("sigmaxy", "0,0.1,0.15", "in-plane Gaussian widths (lambda)"),
            _Opt("sigmaz", "0", "out-of-plane Gaussian widths (lambda)"),
            _Opt("nconfigs", "100", "configurations per width combination"),
            _Opt("path", "G,X,M,G", "zone path for the effective bands"),
            _Opt("samples", "12", "samples per path segment"),
        ) + _SCENE_OPTS[:2] + (
            _Opt("mapx", "8", "field-map half extent along x (lambda)"),
            _Opt("mapz", "8", "field-map half extent along z (lambda)"),
            _Opt("nx", "101", "field-map samples along x"),
            _Opt("nz", "81", "field-map samples along z"),
        ),
        cmd_disorder),
    "vacancy": _Command(
        "single vacancy configurations: maps and off-axis power fractions",
        _COMMON + (
            _Opt("lattice", "square:0.8", "kind:spacing"),
            _Opt("n1", "40", "emitters along the first lattice direction"),
            _Opt("n2", "40", "emitters along the second lattice direction"),
            _Opt("delta", "auto", "drive detuning; auto = zone-center x resonance"),
            _Opt("muBx", "1", "magnetic field along x (Gamma_0)"),
            _Opt("p", "0,0.01,0.05,0.10", "vacancy probabilities"),
        ) + _SCENE_OPTS,
        cmd_vacancy),
    "nonlinear": _Command(
        "saturated steady states over a drive ladder, against mean field",
        _COMMON + (
            _Opt("lattice", "square:0.8", "kind:spacing"),
            _Opt("n1", "31", "emitters along the first lattice direction"),
            _Opt("n2", "31", "emitters along the second lattice direction"),
            _Opt("delta", "auto", "drive detuning; auto = zone-center x resonance"),
            _Opt("eta", "0.05,0.25,0.5,1.0", "drive amplitudes (Gamma_0)"),
            _Opt("tmax", "400", "integration horizon (1/Gamma_0)"),
            _Opt("dt", "0.02", "integrator step (1/Gamma_0)"),
            _Opt("ncurve", "101", "mean-field curve samples"),
            _Opt("mapx", "12", "field-map half extent along x (lambda)"),
            _Opt("mapz", "8", "field-map half extent along z (lambda)"),
            _Opt("nx", "121", "field-map samples along x"),
            _Opt("nz", "61", "field-map samples along z"),
        ),
        cmd_nonlinear),
    "honeycomb-demo": _Command(
        "two-sublattice polarizer: transmission entries, phase matrix, bands",
        _COMMON + (
            _Opt("dnn", "0.9", "nearest-neighbor spacing (lambda)"),
            _Opt("delta", "-0.18", "drive detuning (Gamma_0)"),
            _Opt("muBx", "5", "magnetic field along x (Gamma_0)"),
            _Opt("path", "G,M,K,G", "zone path for the band file"),
            _Opt("samples", "40", "samples per path segment"),
        ),
        cmd_honeycomb_demo),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopsurface",
        description="Cooperative optics of 2D dipole arrays: tabular data "
                    "per scene. Units: lengths in lambda, rates in Gamma_0.")
    parser.add_argument("--version", action="version",
                        version=f"coopsurface {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    for name, command in _COMMANDS.items():
        sp = sub.add_parser(name, help=command.summary,
                            description=command.summary)
        sp.add_argument("--config", metavar="FILE",
                        help="flat key=value file; flags override it")
        for opt in command.opts:
            default = "" if opt.default is None else f" [{opt.default}]"
            sp.add_argument(f"--{opt.key}", metavar="V",
                            help=opt.help + default)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)
    command = _COMMANDS[args.command]
    try:
        cfg = _resolve(command.opts, args)
        outdir = Path(cfg["out"] or f"{args.command}-out")
        outdir.mkdir(parents=True, exist_ok=True)
        _write_manifest(outdir, args.command, cfg)
        command.run(cfg, outdir)
    except InvalidParameterError as exc:
        print(f"coopsurface {args.command}: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"coopsurface {args.command}: {exc}", file=sys.stderr)
        return 4
    except CoopSurfaceError as exc:
        print(f"coopsurface {args.command}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
