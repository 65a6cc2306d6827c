import numpy as np
import pytest

from coopsurface import (
    InvalidParameterError,
    bz_path,
    finite_array,
    make_honeycomb,
    make_square,
    make_triangular,
    reciprocal,
)


def test_square_geometry():
    lat = make_square(0.8)
    assert lat.kind == "square"
    assert lat.n_basis == 1
    assert np.allclose(lat.a1, (0.8, 0.0))
    assert np.allclose(lat.a2, (0.0, 0.8))
    rec = reciprocal(lat)
    assert np.allclose(rec.g1 @ lat.a1, 2 * np.pi)
    assert np.allclose(rec.g1 @ lat.a2, 0.0)


def test_honeycomb_geometry():
    lat = make_honeycomb(0.9)
    assert lat.n_basis == 2
    L = np.linalg.norm(lat.a1)
    assert L == pytest.approx(np.sqrt(3.0) * 0.9)
    # nearest-neighbor bond connects the two basis sites
    bond = np.asarray(lat.basis[1]) - np.asarray(lat.basis[0])
    assert np.linalg.norm(bond) == pytest.approx(0.9)


def test_invalid_spacing_rejected():
    for bad in (0.0, -0.3, np.nan):
        with pytest.raises(InvalidParameterError):
            make_square(bad)


def test_finite_array_counts_and_centering():
    lat = make_square(0.8)
    for n1, n2 in [(4, 4), (5, 3), (12, 12)]:
        em = finite_array(lat, n1, n2)
        assert em.positions.shape == (n1 * n2, 3)
        assert em.n_occupied == n1 * n2
        assert np.allclose(em.positions.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(em.positions[:, 2], 0.0)


def test_finite_array_honeycomb_two_sites_per_cell():
    em = finite_array(make_honeycomb(0.9), 6, 6)
    assert em.positions.shape == (72, 3)


def test_vacancies_deterministic_and_bounded(rng):
    lat = make_square(0.8)
    a = finite_array(lat, 10, 10, vacancy_p=0.3, seed=7)
    b = finite_array(lat, 10, 10, vacancy_p=0.3, seed=7)
    c = finite_array(lat, 10, 10, vacancy_p=0.3, seed=8)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert not np.array_equal(a.occupancy, c.occupancy)
    assert a.n_occupied == a.occupancy.sum()
    assert a.occupied_positions.shape == (a.n_occupied, 3)
    # full footprint is kept for window estimates even with vacancies
    assert a.positions.shape == (100, 3)


def test_vacancy_rate_statistics():
    lat = make_square(0.8)
    counts = [finite_array(lat, 20, 20, vacancy_p=0.2, seed=s).n_occupied
              for s in range(20)]
    assert abs(np.mean(counts) / 400.0 - 0.8) < 0.03


def test_bz_path_vertices_and_arclength():
    lat = make_square(0.8)
    path = bz_path(lat, ["G", "X", "M", "G"], 10)
    assert np.allclose(path.vertex_q[0], (0.0, 0.0))
    assert np.allclose(path.vertex_q[1], (np.pi / 0.8, 0.0))
    assert np.allclose(path.vertex_q[2], (np.pi / 0.8, np.pi / 0.8))
    assert np.allclose(path.samples[0], (0.0, 0.0))
    assert np.allclose(path.samples[-1], (0.0, 0.0))
    assert np.all(np.diff(path.s) > 0)
    assert path.segment[0] == 0
    assert path.segment[-1] == 2


def test_bz_path_names_normalized():
    lat = make_triangular(0.7)
    path = bz_path(lat, ["Gamma", "M", "K"], 4)
    assert np.allclose(path.vertex_q[0], (0.0, 0.0))


def test_bz_path_rejects_unknown_vertex():
    with pytest.raises(InvalidParameterError):
        bz_path(make_square(0.8), ["G", "K"], 5)  # K is not a square vertex
    with pytest.raises(InvalidParameterError):
        bz_path(make_square(0.8), ["G"], 5)


def test_random_qs_land_in_reciprocal_cell(rng):
    lat = make_square(0.8)
    rec = reciprocal(lat)
    # integer reciprocal combinations reproduce lattice-periodic phases
    for _ in range(50):
        n1, n2 = rng.integers(-3, 4, size=2)
        g = n1 * rec.g1 + n2 * rec.g2
        phases = np.exp(1j * (np.arange(5)[:, None] * lat.a1 @ g))
        assert np.allclose(phases, 1.0)
