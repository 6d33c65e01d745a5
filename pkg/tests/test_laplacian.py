import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigmanet.laplacian import (
    magnetic_H,
    magnetic_laplacian,
    read_dump,
    renormalized_propagation,
    sign_magnetic_H,
    sign_magnetic_laplacian,
    verify_hermitian_psd,
    write_dump,
)
from sigmanet.verify import random_adjacency, reverse_and_negate

ONE_EDGE = np.array([[0.0, 1.0], [0.0, 0.0]])


@pytest.mark.parametrize(
    "A, H",
    [
        (ONE_EDGE, [[0, 0.5j], [-0.5j, 0]]),
        ([[0, 3], [-1, 0]], [[0, 1j], [-1j, 0]]),
        ([[0, 2], [2, 0]], [[0, 2], [2, 0]]),
        ([[0, 1], [3, 0]], [[0, -2j], [2j, 0]]),
    ],
)
def test_sign_magnetic_H_examples(A, H):
    np.testing.assert_array_equal(sign_magnetic_H(np.array(A, float)), np.array(H))


def test_equal_magnitude_opposite_sign_digon_vanishes():
    # |A_ij| == |A_ji| with A_ij != A_ji: both gates are zero, taken literally.
    H = sign_magnetic_H(np.array([[0, 3.0], [-3.0, 0]]))
    np.testing.assert_array_equal(H, np.zeros((2, 2)))


def test_non_square_rejected():
    with pytest.raises(ValueError):
        sign_magnetic_H(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        magnetic_laplacian(np.zeros((3, 2)), 0.25)


def test_sign_magnetic_laplacian_examples():
    L = sign_magnetic_laplacian(ONE_EDGE)
    np.testing.assert_array_equal(L, [[0.5, -0.5j], [0.5j, 0.5]])
    np.testing.assert_allclose(np.linalg.eigvalsh(L), [0, 1], atol=1e-15)

    Ln = sign_magnetic_laplacian(ONE_EDGE, normalized=True)
    np.testing.assert_allclose(Ln, [[1, -1j], [1j, 1]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(Ln), [0, 2], atol=1e-15)

    np.testing.assert_array_equal(sign_magnetic_laplacian(np.zeros((3, 3))), np.zeros((3, 3)))


def test_isolated_node_normalization_uses_zero_rsqrt():
    A = np.zeros((3, 3))
    A[0, 1] = 2.0
    Ln = sign_magnetic_laplacian(A, normalized=True)
    assert Ln[2, 2] == 1 and np.all(Ln[2, :2] == 0)


@pytest.mark.parametrize(
    "w, expected",
    [
        (0.8, 0.4 * np.cos(0.4 * np.pi) + 0.4j * np.sin(0.4 * np.pi)),
        (2.0, -1 + 0j),
        (5.0, 2.5j),
        (36.0, 18 + 0j),
    ],
)
def test_magnetic_H_single_edge(w, expected):
    H = magnetic_H(np.array([[0, w], [0, 0]]), 0.25)
    assert abs(H[0, 1] - expected) < 1e-12
    assert abs(H[1, 0] - np.conj(expected)) < 1e-12


def test_magnetic_sign_pattern_values_two_decimals():
    H = magnetic_H(np.array([[0, 0.8], [0, 0]]), 0.25)
    assert abs(H[0, 1].real - 0.4 * 0.31) < 1e-2
    assert abs(H[0, 1].imag - 0.4 * 0.95) < 1e-2


def test_magnetic_q0_is_symmetrized_laplacian():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = np.abs(random_adjacency(rng, 8))
        A_s = 0.5 * (A + A.T)
        expected = np.diag(A_s.sum(axis=1)) - A_s
        assert np.array_equal(magnetic_laplacian(A, 0.0), expected.astype(complex))


def test_magnetic_rejects_negative_q():
    with pytest.raises(ValueError):
        magnetic_H(ONE_EDGE, -0.1)


def test_renormalized_propagation_examples():
    np.testing.assert_array_equal(renormalized_propagation(np.zeros((2, 2))), np.eye(2))
    P = renormalized_propagation(ONE_EDGE)
    # A + I = [[1, 1], [0, 1]]: degrees 1.5, off-diagonal 0.5i
    np.testing.assert_allclose(P, [[1 / 1.5, 1j / 3], [-1j / 3, 1 / 1.5]], atol=1e-15)


def test_renormalized_propagation_spectral_radius():
    rng = np.random.default_rng(11)
    for _ in range(100):
        A = random_adjacency(rng, int(rng.integers(2, 25)))
        P = renormalized_propagation(A)
        assert np.array_equal(P, P.conj().T)
        assert np.max(np.abs(np.linalg.eigvalsh(P))) <= 1 + 1e-8


def test_renormalized_magnetic_variant():
    P = renormalized_propagation(ONE_EDGE, use_sign_magnetic=False, q=0.25)
    np.testing.assert_allclose(P, renormalized_propagation(ONE_EDGE), atol=1e-15)


def test_verify_hermitian_psd_examples():
    r = verify_hermitian_psd(sign_magnetic_laplacian(ONE_EDGE, normalized=True))
    assert r.is_hermitian
    assert abs(r.min_eigenvalue) < 1e-12 and abs(r.max_eigenvalue - 2) < 1e-12
    assert not verify_hermitian_psd(ONE_EDGE).is_hermitian
    assert verify_hermitian_psd(ONE_EDGE).min_eigenvalue <= verify_hermitian_psd(ONE_EDGE).max_eigenvalue


def test_random_laplacians_are_psd():
    rng = np.random.default_rng(0)
    for _ in range(200):
        A = random_adjacency(rng, 20)
        assert verify_hermitian_psd(sign_magnetic_laplacian(A)).min_eigenvalue >= -1e-8


adjacencies = st.integers(1, 9).flatmap(
    lambda n: st.lists(st.sampled_from([0.0, 0.0, 1.0, -1.0, 2.5, -7.0, 0.3]), min_size=n * n, max_size=n * n)
    .map(lambda xs: np.array(xs).reshape(n, n))
    .map(lambda A: A - np.diag(np.diag(A)))
)


@given(adjacencies)
def test_hermitian_bit_exact(A):
    H = sign_magnetic_H(A)
    assert np.array_equal(H, H.conj().T)
    for normalized in (False, True):
        L = sign_magnetic_laplacian(A, normalized)
        assert np.array_equal(L, L.conj().T)


@given(adjacencies)
def test_psd_and_spectrum_bound(A):
    assert np.linalg.eigvalsh(sign_magnetic_laplacian(A))[0] >= -1e-8
    ev = np.linalg.eigvalsh(sign_magnetic_laplacian(A, normalized=True))
    assert ev[0] >= -1e-8 and ev[-1] <= 2 + 1e-8


@given(adjacencies.map(lambda A: (A != 0).astype(float)))
def test_unweighted_matches_magnetic_quarter(A):
    assert np.max(np.abs(sign_magnetic_laplacian(A) - magnetic_laplacian(A, 0.25)), initial=0) <= 1e-12


@given(adjacencies, st.sampled_from([0.5, 3.0, 10.0]))
def test_scalar_homogeneity(A, alpha):
    diff = sign_magnetic_laplacian(alpha * A) - alpha * sign_magnetic_laplacian(A)
    assert np.max(np.abs(diff), initial=0) <= 1e-10


def test_general_hadamard_homogeneity_fails_for_nonconstant_B():
    # Only the scalar case holds; with a non-constant B the degree term breaks it.
    A = np.array([[0, 1.0, 1.0], [0, 0, 0], [0, 0, 0]])
    B = np.array([[1, 2.0, 1.0], [2.0, 1, 1], [1, 1, 1]])
    B_s = 0.5 * (B + B.T)
    assert not np.allclose(sign_magnetic_laplacian(A * B), sign_magnetic_laplacian(A) * B_s)


def test_reversal_invariance_on_digon_free_graphs():
    rng = np.random.default_rng(5)
    for _ in range(50):
        A = random_adjacency(rng, int(rng.integers(2, 20)), digon_free=True)
        assert not np.any((A != 0) & (A.T != 0))
        rows, cols = np.nonzero(A)
        if not len(rows):
            continue
        k = rng.integers(len(rows))
        B = reverse_and_negate(A, rows[k], cols[k])
        assert np.array_equal(sign_magnetic_laplacian(A), sign_magnetic_laplacian(B))


def test_sign_pattern_constant_under_scaling():
    for s in (0.8, 2, 5, 36, 1e-3, 1e4):
        H = sign_magnetic_H(np.array([[0, s], [0, 0]]))
        assert H[0, 1].imag > 0 and H[0, 1].real == 0


def test_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    L = sign_magnetic_laplacian(random_adjacency(rng, 7), normalized=True)
    write_dump(L, tmp_path / "L.txt")
    assert np.array_equal(read_dump(tmp_path / "L.txt"), L)


def test_dump_missing_header(tmp_path):
    (tmp_path / "bad.txt").write_text("0 0 1.0 0.0\n")
    with pytest.raises(ValueError, match="shape"):
        read_dump(tmp_path / "bad.txt")
