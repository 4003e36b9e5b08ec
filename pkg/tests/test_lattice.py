import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcrow.lattice import (
    Circulation,
    DisorderRealization,
    LatticeKind,
    LatticeSpec,
    band_structure,
    bloch_bands,
    bloch_matrix,
    build_hamiltonian,
    linearization_defect,
    sample_disorder,
)
from hcrow.rng import derive_seed, disorder_generator

J = 1.0


def hcrow(n, **kw):
    return LatticeSpec(kind=LatticeKind.HCROW, num_cells=n, **kw)


def crow(n, **kw):
    return LatticeSpec(kind=LatticeKind.REGULAR_CROW, num_cells=n, **kw)


def test_two_cell_hcrow_entries():
    spec = hcrow(2)
    H = build_hamiltonian(spec, Circulation.CCW).matrix
    a1, b1 = spec.site_index(0, "a"), spec.site_index(0, "b")
    a2, b2 = spec.site_index(1, "a"), spec.site_index(1, "b")
    assert H.shape == (4, 4)
    assert H[a1, b1] == 2 * J
    assert H[a1, b2] == J
    assert H[a2, b1] == J
    assert H[a1, a2] == 1j * J
    assert H[b1, b2] == -1j * J
    assert H[a2, a1] == -1j * J
    assert H[b2, b1] == 1j * J
    assert H[a2, b2] == 2 * J
    np.testing.assert_array_equal(np.diag(H), 0)


def test_regular_crow_is_real_chain():
    H = build_hamiltonian(crow(3), Circulation.CCW).matrix
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    np.testing.assert_array_equal(H, expected)


def test_disorder_lands_on_diagonal_only():
    spec = hcrow(10, disorder_std=0.8)
    d = sample_disorder(spec, 1)
    direct = disorder_generator(1).normal(0.0, 0.8, spec.dim)
    np.testing.assert_array_equal(d.detunings, direct)
    H = build_hamiltonian(spec, Circulation.CCW, d).matrix
    clean = build_hamiltonian(spec, Circulation.CCW).matrix
    np.testing.assert_array_equal(np.diag(H).real, d.detunings)
    off = ~np.eye(spec.dim, dtype=bool)
    np.testing.assert_array_equal(H[off], clean[off])


def test_disorder_size_mismatch():
    spec = hcrow(4)
    bad = DisorderRealization(0, np.zeros(spec.dim + 1))
    with pytest.raises(ValueError, match="shape"):
        build_hamiltonian(spec, Circulation.CCW, bad)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 12),
    seed=st.integers(0, 2**64 - 1),
    u=st.floats(0, 3),
    kind=st.sampled_from(list(LatticeKind)),
)
def test_hermitian_and_conjugate_channels(n, seed, u, kind):
    spec = LatticeSpec(kind=kind, num_cells=n, disorder_std=u)
    d = sample_disorder(spec, seed)
    ccw = build_hamiltonian(spec, Circulation.CCW, d)
    cw = build_hamiltonian(spec, Circulation.CW, d)
    assert np.max(np.abs(ccw.matrix - ccw.matrix.conj().T)) < 1e-12
    np.testing.assert_array_equal(cw.matrix, ccw.matrix.conj())
    rows, cols = np.nonzero(ccw.matrix - np.diag(np.diag(ccw.matrix)))
    limit = 3 if kind is LatticeKind.HCROW else 1
    assert rows.size == 0 or np.max(np.abs(rows - cols)) <= limit


def test_banded_storage_roundtrip():
    H = build_hamiltonian(hcrow(6, disorder_std=1.0), Circulation.CW, sample_disorder(hcrow(6, disorder_std=1.0), 5))
    ab = H.banded()
    u = H.bandwidth
    rebuilt = np.zeros_like(H.matrix)
    for j in range(H.dim):
        for i in range(max(0, j - u), min(H.dim, j + u + 1)):
            rebuilt[i, j] = ab[u + i - j, j]
    np.testing.assert_array_equal(rebuilt, H.matrix)


def test_zero_disorder_gives_zero_vector():
    d = sample_disorder(hcrow(7, disorder_std=0.0), 123)
    np.testing.assert_array_equal(d.detunings, np.zeros(14))


def test_disorder_is_reproducible():
    spec = crow(30, disorder_std=0.8)
    np.testing.assert_array_equal(sample_disorder(spec, 99).detunings, sample_disorder(spec, 99).detunings)
    assert not np.array_equal(sample_disorder(spec, 99).detunings, sample_disorder(spec, 100).detunings)


def test_disorder_pooled_moments():
    spec = hcrow(50, disorder_std=0.8)
    draws = np.concatenate([sample_disorder(spec, derive_seed(3, i)).detunings for i in range(1000)])
    assert draws.size == 100_000
    assert abs(draws.mean()) < 0.01
    assert abs(draws.std() / 0.8 - 1) < 0.02


def test_derived_seeds_are_distinct():
    seeds = {derive_seed(0, i, s) for i in range(2000) for s in range(3)}
    assert len(seeds) == 6000


@pytest.mark.parametrize(
    "kwargs",
    [dict(num_cells=0), dict(hopping=0.0), dict(kappa_ex=-0.1), dict(kappa_in=-1), dict(disorder_std=-0.5)],
)
def test_spec_validation(kwargs):
    base = dict(kind=LatticeKind.HCROW, num_cells=3)
    base.update(kwargs)
    with pytest.raises(ValueError):
        LatticeSpec(**base)


def test_band_center_and_edge():
    b = band_structure(hcrow(1), 200)
    i = int(np.argmin(np.abs(b.k - np.pi)))
    assert b.k[i] == pytest.approx(np.pi, abs=1e-15)
    assert abs(b.omega_plus[i]) < 1e-12 and abs(b.omega_minus[i]) < 1e-12
    assert sorted([b.velocity_plus[i], b.velocity_minus[i]]) == pytest.approx([-2 * J, 2 * J], abs=1e-8)
    assert b.omega_plus[0] == pytest.approx(4 * J)
    assert b.omega_minus[0] == pytest.approx(-4 * J)


def test_band_chiral_symmetry():
    b = band_structure(hcrow(1), 64)
    np.testing.assert_array_equal(b.omega_plus, -b.omega_minus)


def test_band_matches_eigensolver():
    k = np.linspace(0, 2 * np.pi, 1001, endpoint=False)
    eig = np.linalg.eigvalsh(bloch_matrix(k, J))
    closed = 2 * np.sqrt(2) * J * np.sqrt(1 + np.cos(k))
    assert np.max(np.abs(eig[:, 1] - closed)) < 1e-10
    assert np.max(np.abs(eig[:, 0] + closed)) < 1e-10


def test_group_velocity_matches_finite_difference():
    k = np.linspace(0.3, 2.8, 11)
    h = 1e-6
    wp, _, vp, _ = bloch_bands(k, J, LatticeKind.HCROW)
    fd = (bloch_bands(k + h, J, LatticeKind.HCROW)[0] - bloch_bands(k - h, J, LatticeKind.HCROW)[0]) / (2 * h)
    np.testing.assert_allclose(vp, fd, atol=1e-6)


def test_regular_crow_band():
    b = band_structure(crow(1), 8)
    np.testing.assert_allclose(b.omega_plus, 2 * np.cos(b.k), atol=1e-15)
    np.testing.assert_allclose(b.velocity_plus, -2 * np.sin(b.k), atol=1e-15)


def test_band_rejects_tiny_grid():
    with pytest.raises(ValueError):
        band_structure(hcrow(1), 1)


def test_linearization_defect():
    spec = hcrow(1)
    assert linearization_defect(spec, 0.0) == 0.0
    ratio = linearization_defect(spec, 0.02) / linearization_defect(spec, 0.01)
    assert ratio == pytest.approx(4, abs=0.1)
    assert linearization_defect(spec, 0.1) == pytest.approx(2 * J * (1 - np.cos(0.1)), rel=1e-12)


def test_linearization_defect_domain():
    with pytest.raises(ValueError):
        linearization_defect(hcrow(1), 0.6)
    with pytest.raises(ValueError):
        linearization_defect(crow(1), 0.1)
