"""Acceptance checks, one per shipped guarantee.

Each test prints a single PASS/FAIL line with its measured numbers (routed
past the capture plugin so the verdicts always show). A failing line means
the guarantee is not met; the assertions keep the suite honest about it.
"""

import time

import numpy as np
import pytest

import conftest

from coopsurface import (
    GAMMA0,
    K0,
    DisorderSpec,
    DriveSpec,
    MapGrid,
    bz_path,
    disordered_bands,
    finite_array,
    gamma_tilde,
    jones,
    jones_square_closed_form,
    make_honeycomb,
    make_square,
    nonlinear_meanfield,
    nonlinear_realspace,
    nonlinear_single,
    offaxis_power_fraction,
    omega_tilde,
    polarizer_scan,
    power_balance,
    reflection_matrix,
    reflectivity,
    refine_resonance,
    resonance_ridge,
    solve_linear,
    sublattice_phase_matrix,
    vacancy_runs,
)
from coopsurface._kernels import pure

OXX_08 = 0.004833464720494425
GXX_08 = 0.3730193978716297


def report(num, name, ok, detail):
    line = f"ACCEPT-{num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    conftest.VERDICT_LINES.append(line)
    return ok


def test_accept_01_zone_center_linewidth(square08):
    t0 = time.perf_counter()
    analytic = 3.0 * GAMMA0 / (4.0 * np.pi * square08.area)
    ga = gamma_tilde(square08, (0.0, 0.0))
    # independent damped real-space sum, Richardson-extrapolated in the
    # damping, with the single-emitter self term restored
    a = square08.a1[0]
    r_max = 220.0
    m = int(np.ceil(r_max / a))
    ij = np.mgrid[-m : m + 1, -m : m + 1].reshape(2, -1).T * a
    ij = ij[np.linalg.norm(ij, axis=1) <= r_max]
    sums = []
    for eta in (0.04, 0.02, 0.01):
        _, g = pure.damped_coupling_sum(ij, (0.0, 0.0), (0.0, 0.0), eta, K0)
        sums.append(g)
    damped = (8.0 * sums[2] - 6.0 * sums[1] + sums[0]) / 3.0
    damped += GAMMA0 * np.eye(3)
    rel_xx = abs(damped[0, 0].real - analytic) / analytic
    zz = abs(ga[2, 2])
    dt = time.perf_counter() - t0
    ok = (
        ga[0, 0] == ga[1, 1] == analytic
        and zz == 0.0
        and rel_xx < 1e-3
        and dt < 10.0
    )
    assert report(
        1, "zone-center linewidth", ok,
        f"xx analytic {analytic:.6f}, damped-sum rel dev {rel_xx:.2e} < 1e-3, "
        f"zz {zz:.1e}, {dt:.1f}s < 10s")


def test_accept_02_resonance_ridges():
    t0 = time.perf_counter()
    rows = []
    for a in (0.2, 0.8):
        lat = make_square(a)
        d_star = refine_resonance(lat, (3.0, 0.0, 0.0), -0.1, 0.1)
        t_min = abs(np.asarray(jones(lat, delta=d_star, muB=(3, 0, 0)))[0, 0])
        rows.append((a, d_star, t_min))
    dt = time.perf_counter() - t0
    ok = all(abs(d) < 0.1 and t < 0.01 for _, d, t in rows) and dt < 120.0
    assert report(
        2, "polarizer resonance ridge", ok,
        "; ".join(f"a={a}: delta*={d:+.5f}, |T_xx|={t:.1e}"
                  for a, d, t in rows) + f"; {dt:.0f}s < 120s")


def test_accept_03_polarizer_extinction(square08):
    t = np.asarray(jones(square08, delta=OXX_08, muB=(10.0, 0.0, 0.0)))
    txx2 = abs(t[0, 0]) ** 2
    tyy2 = abs(t[1, 1]) ** 2
    ok = txx2 < 0.01 and tyy2 > 0.98
    assert report(
        3, "strong-field polarizer", ok,
        f"|T_xx|^2 {txx2:.2e} < 0.01, |T_yy|^2 {tyy2:.4f} > 0.98")


def test_accept_04_closed_form_agreement():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        a = round(float(rng.uniform(0.5, 0.95)), 2)
        delta = float(rng.uniform(-5, 5))
        bx = float(rng.uniform(-5, 5))
        lat = make_square(a)
        dev = np.max(np.abs(
            np.asarray(jones(lat, delta=delta, muB=(bx, 0, 0)))
            - np.asarray(jones_square_closed_form(lat, delta, bx))))
        worst = max(worst, dev)
    ok = worst < 1e-10
    assert report(
        4, "closed-form transmission", ok,
        f"200 draws, max |T - T_closed| {worst:.2e} < 1e-10")


def test_accept_05_energy_conservation(square08):
    rng = np.random.default_rng(7)
    worst = 0.0
    for bx in (0.0, 1.0, 3.0):
        for delta in np.linspace(-5.0, 5.0, 11):
            t = np.asarray(jones(square08, delta=float(delta), muB=(bx, 0, 0)))
            r = reflection_matrix(square08, delta=float(delta), muB=(bx, 0, 0))
            for _ in range(3):
                e = rng.normal(size=2) + 1j * rng.normal(size=2)
                e /= np.linalg.norm(e)
                total = (np.linalg.norm(t @ e) ** 2
                         + np.linalg.norm(r @ e) ** 2)
                worst = max(worst, abs(total - 1.0))
    ok = worst < 1e-3
    assert report(
        5, "transmitted+reflected energy", ok,
        f"max |T+R-1| {worst:.2e} < 1e-3 over 33 detuning/field points")


def test_accept_06_phase_law(square08):
    worst = 0.0
    for delta in np.linspace(-4.0, 4.0, 33):
        t_xx = np.asarray(jones(square08, delta=float(delta)))[0, 0]
        law = np.arctan(0.5 * GXX_08 / (OXX_08 - delta))
        worst = max(worst, abs(np.angle(t_xx) - law))
    t_q = np.asarray(jones(square08, delta=OXX_08 - 0.5 * GXX_08))[0, 0]
    quarter_phase = abs(np.angle(t_q) - np.pi / 4)
    quarter_int = abs(abs(t_q) ** 2 - 0.5)
    ok = worst < 1e-6 and quarter_phase < 1e-6 and quarter_int < 1e-6
    assert report(
        6, "single-band phase law", ok,
        f"max phase dev {worst:.1e} < 1e-6; pi/4 point: phase dev "
        f"{quarter_phase:.1e}, |T|^2 - 1/2 = {quarter_int:.1e}")


def test_accept_07_finite_array_convergence(square08):
    drive = DriveSpec(delta=OXX_08, eta=(1.0, 0.0))
    patch = finite_array(square08, 40, 40)
    t0 = time.perf_counter()
    state = solve_linear(patch, drive)
    t_solve = time.perf_counter() - t0
    beta_inf = -1.0 / (-0.5j * GXX_08)
    pos = patch.occupied_positions
    central = int(np.argmin(np.linalg.norm(pos[:, :2], axis=1)))
    rel_beta = abs(state.beta[central, 0] - beta_inf) / abs(beta_inf)
    r_x = reflectivity(patch, drive)[0]
    r_jones = abs(np.asarray(jones(square08, delta=OXX_08))[0, 0] - 1.0) ** 2
    rel_r = abs(r_x - r_jones) / r_jones
    ok = rel_beta < 0.05 and rel_r < 0.10 and t_solve < 60.0
    assert report(
        7, "40x40 bulk converges to lattice", ok,
        f"central beta rel dev {rel_beta:.4f} < 0.05; plane-fit R_x {r_x:.4f} "
        f"vs Jones {r_jones:.4f} rel dev {rel_r:.4f} < 0.10; "
        f"solve {t_solve:.1f}s < 60s")


def test_accept_08_honeycomb_half_wave():
    lat = make_honeycomb(0.9)
    t = np.asarray(jones(lat, delta=-0.18, muB=(5.0, 0.0, 0.0)))
    txx2 = abs(t[0, 0]) ** 2
    tyy2 = abs(t[1, 1]) ** 2
    eigs = np.sort(np.linalg.eigvalsh(sublattice_phase_matrix(lat, (0, 0))))
    eigs_ok = bool(np.allclose(eigs, [0.0, 2.0], atol=1e-12))
    x_ok = txx2 < 0.05
    y_ok = tyy2 > 0.9
    # the x clause cannot hold at this spacing: |g| < k0 opens seven
    # propagating diffraction orders that drain ~81% of the scattering
    # before it reaches the zero-order beam, leaving |T_xx|^2 far above
    # the requested extinction
    report(
        8, "honeycomb half-wave plate", x_ok and y_ok and eigs_ok,
        f"|T_xx|^2 {txx2:.4f} (< 0.05 required), |T_yy|^2 {tyy2:.4f} > 0.9, "
        f"phase eigs {{{eigs[0]:.0f}, {eigs[1]:.0f}}}")
    assert y_ok and eigs_ok
    assert x_ok, (
        f"|T_xx|^2 = {txx2:.4f}; open Bragg channels at d_nn = 0.9 make the "
        "requested < 0.05 extinction unreachable in the zeroth order")


def test_accept_09_disorder_trends(square08):
    t0 = time.perf_counter()
    path = bz_path(square08, ["G", "X"], samples_per_segment=2)

    def gamma_point(sigma_xy, sigma_z):
        bands = disordered_bands(
            square08, (20, 20),
            DisorderSpec(sigma_xy, sigma_z, n_configs=100, seed=7),
            path, threads=4)
        return bands.energies[0, 0]

    decays = [-2.0 * gamma_point(s, 0.0).imag for s in (0.0, 0.10, 0.15)]
    shift_clean = gamma_point(0.0, 0.0).real
    shift_axial = gamma_point(0.0, 0.10).real
    dt = time.perf_counter() - t0
    ok = decays[0] < decays[1] < decays[2] and shift_axial < shift_clean
    assert report(
        9, "disorder broadens and red-shifts", ok,
        f"decay(sigma_xy=0,.1,.15) = {decays[0]:.4f} < {decays[1]:.4f} < "
        f"{decays[2]:.4f}; axial shift {shift_axial:+.4f} < clean "
        f"{shift_clean:+.4f}; N_c=100, {dt:.0f}s")


def test_accept_10_vacancy_offaxis_scatter(square08):
    drive = DriveSpec(delta=OXX_08, eta=(1.0, 0.0))
    grid = MapGrid(plane="xz", extent1=(-2, 2), extent2=(1, 3), n1=3, n2=3)
    runs = vacancy_runs(square08, (40, 40), [0.0, 0.10], drive, grid, seed=0)
    fracs = [offaxis_power_fraction(r.emitters, r.state, z=3.0,
                                    q_cut=K0 / 2.0, n=64) for r in runs]
    ok = fracs[0] < 0.005 and fracs[1] >= 0.05
    assert report(
        10, "vacancies scatter off axis", ok,
        f"off-axis fraction p=0: {fracs[0]:.4f} < 0.005; "
        f"p=0.10: {fracs[1]:.4f} >= 0.05")


def test_accept_11_saturation(square08):
    t0 = time.perf_counter()
    beta, beta_z = nonlinear_single(0.0, 0.5)
    single_dev = max(abs(beta_z + 1.0 / 3.0), abs(beta - 1j / 3.0))
    etas = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0]
    mf = [nonlinear_meanfield(square08, OXX_08, e).r for e in etas]
    monotone = all(a > b for a, b in zip(mf, mf[1:]))
    patch = finite_array(square08, 31, 31)
    worst_rel = 0.0
    state = None
    for eta, r_mf in zip(etas, mf):
        state, r_rs = nonlinear_realspace(
            patch, DriveSpec(delta=OXX_08, eta=(eta, 0.0)), state0=state)
        worst_rel = max(worst_rel, abs(r_rs - r_mf) / r_mf)
    dt = time.perf_counter() - t0
    ok = (single_dev < 1e-12 and monotone and worst_rel < 0.10
          and dt < 600.0)
    assert report(
        11, "saturation nonlinearity", ok,
        f"single-emitter closed form dev {single_dev:.1e} < 1e-12; "
        f"mean-field R monotone {monotone} over eta in [0.05, 1.0]; "
        f"31x31 vs mean field worst rel dev {worst_rel:.4f} < 0.10; "
        f"{dt:.0f}s < 600s")


def test_accept_12_optical_theorem(square08, honeycomb09):
    cases = [
        (finite_array(square08, 20, 20), DriveSpec(delta=OXX_08)),
        (finite_array(square08, 12, 12),
         DriveSpec(delta=-0.8, eta=(0.6, 0.8j), k_par=(2.0, -1.0))),
        (finite_array(square08, 12, 12),
         DriveSpec(delta=0.3, muB=(2.0, -1.0, 0.5))),
        (finite_array(square08, 16, 16, vacancy_p=0.1, seed=4),
         DriveSpec(delta=OXX_08)),
        (finite_array(honeycomb09, 8, 8), DriveSpec(delta=-0.18)),
    ]
    worst = 0.0
    for emitters, drive in cases:
        state = solve_linear(emitters, drive)
        _, _, mismatch = power_balance(emitters, state, drive)
        worst = max(worst, mismatch)
    ok = worst < 1e-6
    assert report(
        12, "scattered power equals extinction", ok,
        f"max relative mismatch {worst:.2e} < 1e-6 over {len(cases)} "
        "geometries")
