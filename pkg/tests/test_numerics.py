import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locus_forge.errors import ShapeError
from locus_forge.numerics import (digits, embed_blocks, is_unitary, kron, nullspace, numerical_rank,
                                  partial_trace, partial_transpose, random_unitary, reshape_cut,
                                  schmidt_rank)

from conftest import I2, PHI_PLUS, SX, SZ, ket, proj, random_density


def test_kron_examples():
    assert np.array_equal(kron(I2, I2), np.eye(4))
    assert np.array_equal(kron(SZ, I2), np.diag([1, 1, -1, -1]))
    # e0 x e0 is e0 of C^4; X x X flips both digits
    assert np.allclose(kron(SX, SX) @ ket(0, 4), ket(3, 4))


def test_kron_matches_explicit_blocks():
    a = np.arange(4).reshape(2, 2)
    b = np.array([[1, 2], [3, 4]])
    explicit = np.block([[a[0, 0] * b, a[0, 1] * b], [a[1, 0] * b, a[1, 1] * b]])
    assert np.array_equal(kron(a, b), explicit)


def test_digits_most_significant_first():
    assert digits(5, [3, 2]) == (2, 1)
    assert digits(1, [2, 2]) == (0, 1)


def test_partial_trace_product(rng):
    ra, rb = random_density(2, rng), random_density(3, rng)
    assert np.allclose(partial_trace(np.kron(ra, rb), [2, 3], [0]), ra)
    assert np.allclose(partial_trace(np.kron(ra, rb), [2, 3], [1]), rb)


def test_partial_trace_bell_marginal():
    assert np.allclose(partial_trace(proj(PHI_PLUS), [2, 2], [0]), np.eye(2) / 2)


def test_partial_trace_rejects_empty_keep():
    with pytest.raises(ShapeError) as exc:
        partial_trace(np.eye(4) / 4, [2, 2], [])
    assert exc.value.code == "shape"


def test_partial_trace_three_factors_oracle(rng):
    rho = random_density(12, rng)
    t = rho.reshape(2, 3, 2, 2, 3, 2)
    oracle = np.einsum("abcdbf->acdf", t).reshape(4, 4)
    assert np.allclose(partial_trace(rho, [2, 3, 2], [0, 2]), oracle)


def test_partial_transpose_bell_eigenvalue():
    ev = np.linalg.eigvalsh(partial_transpose(proj(PHI_PLUS), [2, 2], [0]))
    assert np.allclose(ev, [-0.5, 0.5, 0.5, 0.5])


def test_numerical_rank_examples():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.eye(3)) == 3
    v = np.array([1.0, -2.0, 0.5])
    assert numerical_rank(np.outer(v, v)) == 1


def test_nullspace_examples():
    assert nullspace(np.eye(3)).shape[1] == 0
    ns = nullspace(np.zeros((2, 2)))
    assert ns.shape[1] == 2 and np.allclose(ns.conj().T @ ns, np.eye(2))
    ns = nullspace(np.diag([1.0, 0.0]))
    assert ns.shape[1] == 1 and np.isclose(abs(ns[1, 0]), 1)


def test_reshape_cut_examples():
    m = reshape_cut(ket(0, 4), [2, 2], [0])
    assert np.allclose(m, np.outer(ket(0, 2), ket(0, 2)))
    assert schmidt_rank(ket(0, 4), [2, 2], [0]) == 1
    assert np.allclose(reshape_cut(PHI_PLUS, [2, 2], [0]), np.eye(2) / np.sqrt(2))
    assert schmidt_rank(PHI_PLUS, [2, 2], [0]) == 2
    ghz = (ket(0, 8) + ket(7, 8)) / np.sqrt(2)
    assert schmidt_rank(ghz, [2, 2, 2], [0, 1]) == 2


def test_embed_blocks_permutes_back():
    a, b = np.diag([1.0, 2.0]), np.diag([3.0, 5.0])
    # block {0, 2} carries a x b, block {1} the identity
    got = embed_blocks([np.kron(a, b), I2], [2, 2, 2], [(0, 2), (1,)])
    assert np.allclose(got, kron(a, I2, b))


def test_random_unitary_is_unitary(rng):
    u = random_unitary(5, rng)
    assert is_unitary(u)
    assert not is_unitary(u + 1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([[2, 2], [2, 3], [3, 2], [2, 2, 2]]))
def test_partial_trace_preserves_trace_and_positivity(seed, dims):
    rng = np.random.default_rng(seed)
    n = int(np.prod(dims))
    rho = random_density(n, rng)
    red = partial_trace(rho, dims, [0])
    assert np.isclose(np.trace(red).real, 1)
    assert np.linalg.eigvalsh(red).min() > -1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_schmidt_rank_of_product_is_one(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    b = rng.normal(size=2) + 1j * rng.normal(size=2)
    assert schmidt_rank(np.kron(a, b), [3, 2], [0]) == 1
