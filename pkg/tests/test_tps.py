import itertools

import numpy as np
import pytest

from locus_forge import algebra as alg
from locus_forge.errors import NotUnitaryError, ShapeError
from locus_forge.mps import is_valid_mps
from locus_forge.numerics import random_unitary
from locus_forge.partitions import Partition
from locus_forge.tps import (TpsSpec, bell_unitary, factorizations, local_algebra, prime_factors,
                             reconstruct_qubits, svozil_partitions, tps_to_mps, twist)

from conftest import I2, PHI_PLUS, SX, SZ, ket


def _factorizations_oracle(n):
    # every non-decreasing tuple of divisors >= 2 whose product is n
    divisors = [d for d in range(2, n + 1) if n % d == 0]
    out = set()
    for k in range(1, n.bit_length() + 1):
        for combo in itertools.combinations_with_replacement(divisors, k):
            if np.prod(combo) == n:
                out.add(combo)
    return out


def test_factorizations_examples():
    assert factorizations(9) == [(9,), (3, 3)]
    assert factorizations(7) == [(7,)]
    assert factorizations(12) == [(12,), (2, 6), (3, 4), (2, 2, 3)]


@pytest.mark.parametrize("n", range(2, 41))
def test_factorizations_match_oracle(n):
    got = factorizations(n)
    assert set(got) == _factorizations_oracle(n)
    assert got[0] == (n,)
    assert got == sorted(got, key=lambda t: (len(t), t))


def test_prime_factors():
    assert prime_factors(12) == [2, 2, 3]
    assert prime_factors(7) == [7]


def test_svozil_partitions_examples():
    s = svozil_partitions([3, 2])
    assert s.partitions == (Partition(6, [[0, 1], [2, 3], [4, 5]]), Partition(6, [[0, 2, 4], [1, 3, 5]]))
    s = svozil_partitions([2, 2])
    assert s.partitions == (Partition(4, [[0, 1], [2, 3]]), Partition(4, [[0, 2], [1, 3]]))
    assert s.is_independent()
    single = svozil_partitions([5])
    assert single.partitions == (Partition.finest(5),)


def test_svozil_partitions_of_nine_are_independent():
    s = svozil_partitions([3, 3])
    assert [str(p) for p in s.partitions] == ["123|456|789", "147|258|369"]
    assert s.is_independent()


def test_tps_rejects_bad_input():
    with pytest.raises(NotUnitaryError):
        TpsSpec([2, 2], np.ones((4, 4)))
    with pytest.raises(ShapeError):
        TpsSpec([2, 2], np.eye(3))
    with pytest.raises(ShapeError):
        TpsSpec([2, 2], loci_labels=["a"])


def test_local_algebra_standard():
    t = TpsSpec([2, 2])
    a0, a1 = local_algebra(t, 0), local_algebra(t, 1)
    assert a0.dim == 4
    assert alg.equal(a0, alg.generate([np.kron(SX, I2), np.kron(SZ, I2)], 4))
    for x in a0.basis:
        for y in a1.basis:
            assert np.allclose(x @ y, y @ x)


def test_bell_unitary_columns():
    u = bell_unitary()
    s = 1 / np.sqrt(2)
    assert np.allclose(u[:, 0], PHI_PLUS)
    assert np.allclose(u[:, 1], [0, s, s, 0])
    assert np.allclose(u[:, 2], [0, s, -s, 0])
    assert np.allclose(u[:, 3], 1j * np.array([s, 0, 0, -s]))


def test_twisted_locus_differs_but_commutant_matches():
    t = TpsSpec([2, 2], bell_unitary())
    a0, a1 = local_algebra(t, 0), local_algebra(t, 1)
    assert a0.dim == 4
    assert not alg.equal(a0, local_algebra(TpsSpec([2, 2]), 0))
    assert alg.equal(alg.commutant(a0), a1)


def test_twisted_and_standard_loci_meet_in_scalars():
    std, tw = TpsSpec([2, 2]), TpsSpec([2, 2], bell_unitary())
    for i, j in itertools.product(range(2), repeat=2):
        assert alg.intersect(local_algebra(std, i), local_algebra(tw, j)).dim == 1


def test_tps_to_mps():
    m = tps_to_mps(TpsSpec([2, 2]))
    assert m.labels == ["0", "1"]
    assert [a.dim for a in m.algebras] == [4, 4]
    single = tps_to_mps(TpsSpec([4]))
    assert len(single) == 1 and single.algebras[0].dim == 16
    assert is_valid_mps(tps_to_mps(TpsSpec([2, 2], bell_unitary())))


def test_twist_examples(rng):
    t = TpsSpec([2, 3])
    same = twist(t, np.eye(6))
    assert np.allclose(same.unitary, t.unitary)
    u = random_unitary(6, rng)
    back = twist(twist(t, u), u.conj().T)
    for i in range(2):
        assert alg.equal(local_algebra(back, i), local_algebra(t, i))
    with pytest.raises(NotUnitaryError):
        twist(t, 2 * np.eye(6))


def test_phi_plus_is_product_in_bell_frame():
    t = TpsSpec([2, 2], bell_unitary())
    psi = t.unitary.conj().T @ PHI_PLUS
    assert np.isclose(abs(psi[0]), 1)
    for i in range(4):
        coeff = (t.unitary.conj().T @ ket(i, 4)).reshape(2, 2)
        assert np.linalg.matrix_rank(coeff) == 2


def test_reconstruct_qubits_examples():
    rec = reconstruct_qubits(alg.full_algebra(4))
    assert rec and rec.tps.dims == (2, 2) and rec.reason == "ok"
    assert rec.partitions.is_independent()
    rec = reconstruct_qubits(alg.full_algebra(3))
    assert not rec and rec.reason == "prime dimension"
    rec = reconstruct_qubits(alg.diagonal_algebra(2))
    assert not rec and rec.reason == "not a factor"
    rec = reconstruct_qubits(alg.scalars(4))
    assert not rec and rec.reason == "trivial locus"
    # M_2 x I inside M_8 is a factor of side 2
    rec = reconstruct_qubits(local_algebra(TpsSpec([2, 4]), 1))
    assert rec.factor_dim == 4 and rec.tps.dims == (2, 2)
