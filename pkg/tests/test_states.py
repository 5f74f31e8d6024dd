import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locus_forge.errors import InvalidStateError, ShapeError
from locus_forge.numerics import partial_transpose, random_unitary
from locus_forge.partitions import Partition, enumerate_partitions
from locus_forge.states import (State, StateSet, classical_embed, decompose_separable, expect,
                                is_sigma_product, is_sigma_separable)
from locus_forge.tps import TpsSpec, bell_unitary

from conftest import PHI_PLUS, SZ, ket, proj, random_density

P = Partition.parse
TWO = TpsSpec([2, 2])
THREE = TpsSpec([2, 2, 2])


def werner(lam):
    return (1 - lam) * np.eye(4) / 4 + lam * proj(PHI_PLUS)


def test_state_validation():
    with pytest.raises(InvalidStateError):
        State.density(np.eye(2))
    with pytest.raises(InvalidStateError):
        State.density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        State.density(np.array([[0.5, 0.5j], [0.5j, 0.5]]))
    with pytest.raises(ShapeError):
        State.density(np.ones((2, 3)) / 2)
    with pytest.raises(InvalidStateError):
        State.pure(np.zeros(3))


def test_pure_vector_detection():
    s = State.density(proj(PHI_PLUS))
    v = s.pure_vector()
    assert np.isclose(abs(np.vdot(v, PHI_PLUS)), 1)
    assert State.density(np.eye(2) / 2).pure_vector() is None


def test_state_set_requires_common_dimension():
    with pytest.raises(ShapeError):
        StateSet([State.pure(ket(0, 2)), State.pure(ket(0, 4))])
    with pytest.raises(ValueError):
        StateSet([])


def test_expect_examples():
    assert np.isclose(expect(np.eye(2) / 2, SZ), 0)
    assert np.isclose(expect(proj(ket(0, 2)), SZ), 1)
    assert np.isclose(expect(State.pure(PHI_PLUS), np.kron(SZ, SZ)), 1)


def test_classical_embed_examples():
    assert np.allclose(classical_embed(np.ones(9) / 9).rho, np.eye(9) / 9)
    assert np.allclose(classical_embed(ket(0, 5).real).rho, proj(ket(0, 5)))
    p = np.zeros((3, 3))
    np.fill_diagonal(p, 1 / 3)
    rho = classical_embed(p.ravel()).rho
    assert np.allclose(np.flatnonzero(np.diag(rho).real), [0, 4, 8])
    with pytest.raises(InvalidStateError):
        classical_embed([0.5, 0.6])


def test_sigma_product_examples():
    assert is_sigma_product(State.pure(ket(0, 8)), THREE, P("1|2|3")).value == "product"
    ghz = State.pure((ket(0, 8) + ket(7, 8)) / np.sqrt(2))
    v = is_sigma_product(ghz, THREE, P("1|23"))
    assert v.value == "entangled" and v.witness["schmidt_rank"] == 2
    psi = State.pure(np.kron(ket(0, 2), PHI_PLUS))
    assert is_sigma_product(psi, THREE, P("1|23")).value == "product"


def test_sigma_product_mixed(rng):
    a, b = random_density(2, rng), random_density(2, rng)
    assert is_sigma_product(np.kron(a, b), TWO, P("1|2")).value == "product"
    assert is_sigma_product(werner(0.1), TWO, P("1|2")).value == "entangled"


def test_sigma_separable_examples():
    for sigma in enumerate_partitions(3):
        assert is_sigma_separable(np.eye(8) / 8, THREE, sigma).is_separable
    v = is_sigma_separable(State.density(proj(PHI_PLUS)), TWO, P("1|2"))
    assert v.value == "entangled"
    v = is_sigma_separable(werner(0.6), TWO, P("1|2"))
    assert v.value == "entangled" and np.isclose(v.witness["min_eigenvalue"], (1 - 3 * 0.6) / 4)
    v = is_sigma_separable(werner(0.25), TWO, P("1|2"))
    assert v.value == "separable"


def test_bell_projector_partial_transpose_eigenvalue():
    # mixed-state route on a rank-one input, forced through the PPT test
    ev = np.linalg.eigvalsh(partial_transpose(proj(PHI_PLUS), [2, 2], [0]))
    assert np.isclose(ev[0], -0.5)


def test_werner_threshold():
    # PPT boundary at lambda = 1/3
    assert is_sigma_separable(werner(0.33), TWO, P("1|2")).value == "separable"
    assert is_sigma_separable(werner(0.34), TWO, P("1|2")).value == "entangled"


def test_separability_is_frame_relative():
    tw = TpsSpec([2, 2], bell_unitary())
    bell = State.pure(PHI_PLUS)
    assert is_sigma_separable(bell, tw, P("1|2")).value == "product"
    assert is_sigma_separable(State.pure(ket(0, 4)), tw, P("1|2")).value == "entangled"


def test_decompose_product_single_term(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    t = TpsSpec([2, 3])
    cert = decompose_separable(np.kron(a, b), t, P("1|2"))
    assert len(cert) == 1 and np.isclose(cert.weights[0], 1)
    assert np.allclose(cert.reconstruct(), np.kron(a, b))


def test_decompose_classical_correlated():
    rho = sum(proj(np.kron(ket(i, 3), ket(i, 3))) for i in range(3)) / 3
    cert = decompose_separable(rho, TpsSpec([3, 3]), P("1|2"))
    assert len(cert) == 3 and np.allclose(cert.weights, 1 / 3)
    assert np.allclose(cert.reconstruct(), rho)


def test_decompose_werner():
    cert = decompose_separable(werner(0.25), TWO, P("1|2"))
    assert cert is not None and len(cert) <= 20
    assert np.linalg.norm(cert.reconstruct() - werner(0.25)) <= 1e-6
    assert np.all(cert.weights > 0) and np.isclose(cert.weights.sum(), 1)


def test_decompose_in_twisted_frame():
    tw = TpsSpec([2, 2], bell_unitary())
    rho = 0.5 * proj(PHI_PLUS) + 0.5 * proj(bell_unitary()[:, 3])
    cert = decompose_separable(rho, tw, P("1|2"))
    assert cert is not None
    assert np.allclose(cert.reconstruct(), rho, atol=1e-6)


def test_decompose_entangled_gives_none():
    assert decompose_separable(werner(0.9), TWO, P("1|2"), budget=30) is None


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_separable_mixtures_are_separable(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k))
    rho = sum(wi * np.kron(random_density(2, rng, 1), random_density(2, rng, 1)) for wi in w)
    v = is_sigma_separable(rho, TWO, P("1|2"))
    assert v.is_separable


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_product_verdict_is_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    loc = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    a = is_sigma_product(State.pure(psi), TWO, P("1|2")).value
    b = is_sigma_product(State.pure(loc @ psi), TWO, P("1|2")).value
    assert a == b
