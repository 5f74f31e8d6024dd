import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locus_forge import algebra as alg
from locus_forge.errors import EmptyJoinError, ShapeError
from locus_forge.mps import (Mps, MpsCatalog, coarser, generate_catalog, is_valid_mps, join, mps_report,
                             pi_over_catalog, recover_loci, scalar_mps, separability_relation,
                             trivial_mps)
from locus_forge.numerics import random_unitary
from locus_forge.states import State, classical_embed
from locus_forge.tps import TpsSpec, bell_unitary, tps_to_mps

from conftest import I2, PHI_PLUS, SX, SZ, ket, random_density

STANDARD = tps_to_mps(TpsSpec([2, 2], loci_labels=["A", "B"]))
TWISTED = tps_to_mps(TpsSpec([2, 2], bell_unitary(), ["A'", "B'"]))
TRIVIAL = trivial_mps(4)


def catalog():
    return MpsCatalog([STANDARD, TWISTED, TRIVIAL], ["standard", "twisted", "trivial"])


def test_validity_examples():
    assert is_valid_mps(STANDARD)
    assert is_valid_mps([alg.generate([np.kron(SX, SX)], 4, label="xx")])
    bad = is_valid_mps({"a": alg.full_algebra(2), "b": alg.full_algebra(4)})
    assert not bad and bad.failing_locus == "b"


def test_mps_rejects_mixed_ambient():
    with pytest.raises(ShapeError):
        Mps(4, {"a": alg.full_algebra(2)})


def test_coarser_examples():
    assert coarser(TRIVIAL, STANDARD)
    assert not coarser(STANDARD, TRIVIAL)
    assert coarser(STANDARD, STANDARD)


def test_join_examples():
    assert join([STANDARD]).same_algebras(STANDARD)
    j = join([STANDARD, TRIVIAL])
    assert j.same_algebras(STANDARD) and j.labels == ["A", "B"]
    d2 = Mps(2, {"d": alg.diagonal_algebra(2)})
    x = Mps(2, {"x": alg.generate([SX], 2)})
    j = join([d2, x])
    assert len(j) == 1 and j.algebras[0].degenerate
    with pytest.raises(EmptyJoinError):
        join([])


def test_join_of_frames_is_scalars():
    j = join([STANDARD, TWISTED])
    assert len(j) == 1 and j.algebras[0].dim == 1


def test_relation_product_state_holds():
    rho = np.eye(4) / 4
    for mode in ("pairwise", "multiway"):
        assert separability_relation(rho, STANDARD, mode).holds


def test_relation_bell_witness():
    res = separability_relation(State.pure(PHI_PLUS), STANDARD, "pairwise")
    assert not res.holds
    w = res.witness
    assert np.isclose(w["gap"], 1.0)
    assert np.allclose(w["observables"][0], np.kron(SZ, I2))
    assert np.allclose(w["observables"][1], np.kron(I2, SZ))
    assert np.isclose(w["joint_expectation"], 1)
    assert np.allclose(w["marginal_expectations"], [0, 0])


def test_relation_bell_twisted_holds():
    for mode in ("pairwise", "multiway"):
        res = separability_relation(State.pure(PHI_PLUS), TWISTED, mode)
        assert res.holds and res.max_defect <= 1e-8


def test_relation_single_locus_vacuous(rng):
    rho = random_density(4, rng)
    assert separability_relation(rho, TRIVIAL).holds


def test_relation_rejects_unknown_mode():
    with pytest.raises(ValueError):
        separability_relation(np.eye(4) / 4, STANDARD, "sideways")


def test_pi_over_catalog_examples(rng):
    names = [nm for nm, _ in pi_over_catalog(State.pure(ket(0, 4)), catalog())]
    assert names == ["standard", "trivial"]
    names = [nm for nm, _ in pi_over_catalog(State.pure(PHI_PLUS), catalog())]
    assert names == ["twisted", "trivial"]
    names = [nm for nm, _ in pi_over_catalog(random_density(4, rng), catalog())]
    assert "trivial" in names


def test_catalog_dedupes():
    cat = MpsCatalog([STANDARD, tps_to_mps(TpsSpec([2, 2])), TRIVIAL])
    assert len(cat) == 2


def test_recover_loci_examples():
    basis = [State.pure(ket(i, 4), f"e{i}") for i in range(4)]
    bell = [State.pure(PHI_PLUS, "phi+")]
    rec = recover_loci(basis, catalog())
    assert rec.mps.same_algebras(STANDARD) and not rec.fallback
    assert ("e0", "standard") in rec.contributions
    rec = recover_loci(bell, catalog())
    assert rec.mps.same_algebras(TWISTED)
    rec = recover_loci(basis + bell, catalog())
    assert all(a.degenerate for a in rec.mps.algebras)
    assert any("degenerate" in d for d in rec.diagnostics)


def test_recover_loci_fallback():
    cat = MpsCatalog([STANDARD], ["standard"])
    rec = recover_loci([State.pure(PHI_PLUS)], cat)
    assert rec.fallback and rec.mps.same_algebras(scalar_mps(4))
    assert rec.diagnostics


def test_mps_report_examples():
    rep = mps_report(STANDARD)
    assert [l["dim"] for l in rep["loci"]] == [4, 4]
    assert all(l["factor_side"] == 2 and l["qudit_dims"] == [2] for l in rep["loci"])
    assert rep["commute"] == {"A|B": True}
    rep = mps_report(TRIVIAL)
    assert rep["loci"][0]["dim"] == 16 and rep["loci"][0]["qudit_dims"] == [2, 2]
    rep = mps_report(scalar_mps(4))
    assert rep["loci"][0]["degenerate"] and rep["loci"][0]["qudit_dims"] is None


def test_generate_catalog():
    cat = generate_catalog(4, twists=2, seed=0)
    assert cat.names[0] == "trivial"
    assert "2x2@id" in cat.names and len(cat) == 4


def test_classical_embedding_relation():
    p = np.outer([0.2, 0.8], [0.5, 0.5]).ravel()
    assert separability_relation(classical_embed(p), STANDARD, "multiway").holds
    q = np.array([0.5, 0, 0, 0.5])
    assert not separability_relation(classical_embed(q), STANDARD, "multiway").holds


def _random_tps_mps(rng):
    kind = rng.integers(0, 4)
    if kind == 0:
        return trivial_mps(4)
    if kind == 1:
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    elif kind == 2:
        u = bell_unitary()
    else:
        u = random_unitary(4, rng)
    return tps_to_mps(TpsSpec([2, 2], u))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_join_laws(seed):
    rng = np.random.default_rng(seed)
    p, q = _random_tps_mps(rng), _random_tps_mps(rng)
    assert join([p, p]).same_algebras(p)
    pq, qp = join([p, q]), join([q, p])
    assert pq.same_algebras(qp)
    assert coarser(p, pq) and coarser(q, pq)
    assert is_valid_mps(pq)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_relation_invariant_under_common_unitary(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng)
    u = random_unitary(4, rng)
    a = separability_relation(rho, STANDARD)
    b = separability_relation(u @ rho @ u.conj().T, STANDARD.conjugate(u))
    assert a.holds == b.holds
    assert np.isclose(a.max_defect, b.max_defect, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_basis_level_check_covers_whole_algebras(seed):
    # rho(ab) - rho(a)rho(b) restricted to a = sum x_k a_k, b = sum y_l b_l is
    # sum_kl x_k y_l (rho(a_k b_l) - rho(a_k) rho(b_l)) once the identity is a basis
    # element: rho(1 b) - rho(1) rho(b) = 0 makes the cross terms of rho(a)rho(b)
    # vanish. So zero defect on basis pairs gives zero defect on all pairs.
    rng = np.random.default_rng(seed)
    u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    rho = u @ np.kron(random_density(2, rng), random_density(2, rng)) @ u.conj().T
    assert separability_relation(rho, STANDARD).holds
    a_basis, b_basis = STANDARD.algebras[0].basis, STANDARD.algebras[1].basis
    for _ in range(5):
        a = np.tensordot(rng.normal(size=4) + 1j * rng.normal(size=4), a_basis, 1)
        b = np.tensordot(rng.normal(size=4) + 1j * rng.normal(size=4), b_basis, 1)
        lhs = np.trace(rho @ a @ b)
        assert np.isclose(lhs, np.trace(rho @ a) * np.trace(rho @ b), atol=1e-9)
