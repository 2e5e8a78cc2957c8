import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnpr.core import RngStream, align_phase, complex_gaussian_vector, complex_rep, dist, real_rep
from gnpr.errors import InvalidArgumentError

GRID = np.linspace(0, 2 * np.pi, 2**20, endpoint=False)


def grid_phase(z, x):
    """Brute-force minimiser of ||z - x e^{i phi}|| over a 2^20-point grid."""
    c = np.vdot(x, z)
    # ||z - x e^{i phi}||^2 = |z|^2 + |x|^2 - 2 Re(e^{-i phi} c)
    obj = -np.real(np.exp(-1j * GRID) * c)
    k = np.argmin(obj)
    return GRID[k], np.sqrt(max(np.vdot(z, z).real + np.vdot(x, x).real + 2 * obj[k], 0.0))


complex_vectors = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.integers(0, 2**32), st.just(n)))


def test_gaussian_moments():
    v = complex_gaussian_vector(10**4, RngStream(1))
    assert 0.97 <= np.mean(np.abs(v) ** 2) <= 1.03
    w = complex_gaussian_vector(10**5, RngStream(2))
    cov = np.cov(np.vstack([w.real, w.imag]))
    assert np.max(np.abs(cov - 0.5 * np.eye(2))) <= 0.02


def test_rng_determinism_and_streams():
    a = complex_gaussian_vector(1, RngStream(7, 3))
    b = complex_gaussian_vector(1, RngStream(7, 3))
    assert a.shape == (1,) and a[0] == b[0]
    c = complex_gaussian_vector(1000, RngStream(7, 4))
    d = complex_gaussian_vector(1000, RngStream(7, 3))
    assert abs(np.vdot(c, d)) / 1000 < 0.1
    assert np.array_equal(RngStream(5).child(2).standard_normal(4), RngStream(5, (0, 2)).standard_normal(4))


def test_gaussian_vector_errors():
    with pytest.raises(InvalidArgumentError):
        complex_gaussian_vector(0, RngStream(0))
    with pytest.raises(InvalidArgumentError):
        RngStream(-1)


def test_align_phase_pure_phase():
    x = np.array([1.0, 0.0])
    phi, aligned = align_phase(1j * x, x)
    assert phi == pytest.approx(np.pi / 2)
    assert dist(1j * x, x) == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(aligned, 1j * x)


def test_align_phase_orthogonal_convention():
    phi, aligned = align_phase(np.array([0, 1.0]), np.array([1.0, 0]))
    assert phi == 0.0
    assert np.array_equal(aligned, [1, 0])


def test_align_phase_grid_oracle():
    r = RngStream(11)
    z, x = complex_gaussian_vector(4, r.child(0)), complex_gaussian_vector(4, r.child(1))
    phi, _ = align_phase(z, x)
    g, d = grid_phase(z, x)
    assert abs(np.angle(np.exp(1j * (phi - g)))) <= 1e-5
    assert dist(z, x) == pytest.approx(d, abs=1e-5)


def test_dist_examples():
    x = complex_gaussian_vector(5, RngStream(3))
    x /= np.linalg.norm(x)
    assert dist(2 * x, x) == pytest.approx(1.0, abs=1e-14)
    for t in (0.3, 2.0, -1.1):
        assert dist(x * np.exp(1j * t), x) <= 1e-15


def test_dist_matches_closed_form():
    r = RngStream(4)
    z, x = complex_gaussian_vector(6, r.child(0)), complex_gaussian_vector(6, r.child(1))
    closed = np.sqrt(np.linalg.norm(z) ** 2 + np.linalg.norm(x) ** 2 - 2 * abs(np.vdot(x, z)))
    assert dist(z, x) == pytest.approx(closed, rel=1e-12)


def test_dist_small_errors_resolved():
    # the closed form loses everything below ~1e-8; the direct form does not
    x = complex_gaussian_vector(50, RngStream(5))
    pert = 1e-13 * complex_gaussian_vector(50, RngStream(6))
    pert -= np.real(np.vdot(x, pert) / np.vdot(x, x)) * x  # orthogonal to x in the real sense
    pert -= 1j * np.imag(np.vdot(x, pert) / np.vdot(x, x)) * x
    assert dist(x + pert, x) == pytest.approx(np.linalg.norm(pert), rel=1e-3)


def test_length_mismatch():
    with pytest.raises(InvalidArgumentError):
        align_phase(np.ones(2), np.ones(3))
    with pytest.raises(InvalidArgumentError):
        dist(np.ones(2), np.ones(3))


def test_real_rep_examples():
    assert np.array_equal(real_rep(np.array([1 + 2j])), [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        complex_rep(np.ones(3))


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(complex_vectors, st.floats(-10, 10))
def test_dist_pseudometric(seed_n, theta):
    seed, n = seed_n
    r = RngStream(seed)
    z, x = complex_gaussian_vector(n, r.child(0)), complex_gaussian_vector(n, r.child(1))
    assert dist(z, x) == pytest.approx(dist(x, z), rel=1e-12, abs=1e-14)
    assert dist(np.exp(1j * theta) * z, x) == pytest.approx(dist(z, x), rel=1e-10, abs=1e-13)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(complex_vectors)
def test_align_phase_optimal_against_probes(seed_n):
    seed, n = seed_n
    r = RngStream(seed)
    z, x = complex_gaussian_vector(n, r.child(0)), complex_gaussian_vector(n, r.child(1))
    _, aligned = align_phase(z, x)
    best = np.linalg.norm(z - aligned)
    probes = r.child(2).generator.uniform(0, 2 * np.pi, 64)
    vals = np.linalg.norm(z[None, :] - x[None, :] * np.exp(1j * probes)[:, None], axis=1)
    assert np.all(vals >= best - 1e-12)
    assert abs(np.imag(np.vdot(z, aligned))) <= 1e-12 * (1 + np.linalg.norm(z) * np.linalg.norm(x))


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(complex_vectors)
def test_real_rep_properties(seed_n):
    seed, n = seed_n
    r = RngStream(seed)
    z, w = complex_gaussian_vector(n, r.child(0)), complex_gaussian_vector(n, r.child(1))
    assert np.array_equal(complex_rep(real_rep(z)), z)
    assert np.linalg.norm(real_rep(z)) == pytest.approx(np.linalg.norm(z), rel=1e-14)
    assert np.real(np.vdot(w, z)) == pytest.approx(real_rep(w) @ real_rep(z), abs=1e-12)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 8))
def test_phase_alignment_stability(seed, n):
    """For z1, z2 within 1/4 of a unit x: ||conj(a1) z1 - conj(a2) z2|| <= 6 ||z1 - z2||."""
    r = RngStream(seed)
    x = complex_gaussian_vector(n, r.child(0))
    x /= np.linalg.norm(x)
    zs = []
    for i in (1, 2):
        p = complex_gaussian_vector(n, r.child(i))
        zs.append(x + p * (0.25 * r.child(10 + i).generator.uniform() / np.linalg.norm(p)))
    a = [np.exp(1j * align_phase(z, x)[0]) for z in zs]
    lhs = np.linalg.norm(np.conj(a[0]) * zs[0] - np.conj(a[1]) * zs[1])
    assert lhs <= 6 * np.linalg.norm(zs[0] - zs[1]) + 1e-14
