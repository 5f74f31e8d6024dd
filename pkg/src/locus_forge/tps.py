"""Tensor product structures.

A :class:`TpsSpec` is a factorization ``n = n_1 ... n_k`` of the ambient
dimension together with a global unitary frame ``U``. The local observables
of factor ``i`` are ``U (1 x ... x M_{n_i} x ... x 1) U^dagger``; different
``U`` give isomorphic but different ("virtual") subsystem structures.

The basis-partition picture: for the identity frame, factor ``i`` groups the
basis indices by their ``i``-th mixed-radix digit (see
:mod:`locus_forge.numerics`). Any other labelling of the basis is reached by
twisting with a permutation matrix.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from .errors import NotUnitaryError, ShapeError, TooLargeError
from .mps import Mps
from .numerics import as_dims, dims_product, is_unitary
from .partitions import Partition

SVOZIL_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class TpsSpec:
    dims: tuple[int, ...]
    unitary: np.ndarray
    loci_labels: tuple[str, ...]

    def __init__(self, dims: Sequence[int], unitary=None, loci_labels: Sequence[str] | None = None):
        dims = as_dims(dims)
        n = dims_product(dims)
        u = np.eye(n, dtype=complex) if unitary is None else np.array(unitary, dtype=complex)
        if u.shape != (n, n):
            raise ShapeError(f"unitary must be {n}x{n} for dims {list(dims)}, got {u.shape}")
        if not is_unitary(u, 1e-9 * max(1, n)):
            raise NotUnitaryError("frame matrix is not unitary")
        labels = tuple(str(i) for i in range(len(dims))) if loci_labels is None else tuple(loci_labels)
        if len(labels) != len(dims):
            raise ShapeError(f"{len(labels)} labels for {len(dims)} factors")
        if len(set(labels)) != len(labels):
            raise ShapeError("locus labels must be unique")
        u.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "loci_labels", labels)

    @property
    def n(self) -> int:
        return dims_product(self.dims)

    @property
    def is_standard(self) -> bool:
        return bool(np.allclose(self.unitary, np.eye(self.n), atol=1e-12))

    def to_frame(self, rho: np.ndarray) -> np.ndarray:
        """Express an operator in the twisted frame: ``U^dagger rho U``."""
        return self.unitary.conj().T @ rho @ self.unitary

    def from_frame(self, rho: np.ndarray) -> np.ndarray:
        return self.unitary @ rho @ self.unitary.conj().T

    def __repr__(self) -> str:
        frame = "standard" if self.is_standard else "twisted"
        return f"TpsSpec(dims={list(self.dims)}, {frame}, labels={list(self.loci_labels)})"


@dataclass(frozen=True)
class BasisPartitionSet:
    """``k`` partitions of the basis indices that form independent Boolean algebras."""

    n: int
    partitions: tuple[Partition, ...] = field(default=())

    def is_independent(self) -> bool:
        """Each choice of one block per partition meets in exactly one index."""
        for choice in itertools.product(*(p.blocks for p in self.partitions)):
            common = set(range(self.n))
            for b in choice:
                common &= set(b)
            if len(common) != 1:
                return False
        return True


def factorizations(n: int) -> list[tuple[int, ...]]:
    """Multiplicative partitions of ``n`` into factors >= 2.

    Each factorization is non-decreasing; the list is ordered by the number
    of factors and then lexicographically, and starts with ``(n,)``.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")

    def rec(m: int, lo: int):
        yield (m,)
        f = lo
        while f * f <= m:
            if m % f == 0:
                for rest in rec(m // f, f):
                    yield (f,) + rest
            f += 1

    return sorted(set(rec(n, 2)), key=lambda t: (len(t), t))


def prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def svozil_partitions(dims: Sequence[int]) -> BasisPartitionSet:
    """Group basis indices by each mixed-radix digit."""
    dims = as_dims(dims)
    n = dims_product(dims)
    if n > SVOZIL_LIMIT:
        raise TooLargeError(f"dimension {n} exceeds {SVOZIL_LIMIT}")
    digits = np.array(np.unravel_index(np.arange(n), dims)).T
    parts = []
    for i, d in enumerate(dims):
        parts.append(Partition(n, [np.flatnonzero(digits[:, i] == v).tolist() for v in range(d)]))
    return BasisPartitionSet(n, tuple(parts))


def _local_basis(dims: tuple[int, ...], i: int) -> np.ndarray:
    """Gell-Mann basis of factor ``i`` embedded as ``1 x ... x B x ... x 1``."""
    before = dims_product(dims[:i]) if i else 1
    after = dims_product(dims[i + 1:]) if i + 1 < len(dims) else 1
    norm = np.sqrt(before * after)
    local = alg.gell_mann_basis(dims[i])
    return np.stack([np.kron(np.kron(np.eye(before), b), np.eye(after)) / norm for b in local])


def local_algebra(tps: TpsSpec, i: int) -> alg.OperatorAlgebra:
    """Observables of factor ``i`` in the frame of ``tps``."""
    k = len(tps.dims)
    if not 0 <= i < k:
        raise IndexError(f"locus index {i} out of range for {k} factors")
    basis = _local_basis(tps.dims, i)
    u = tps.unitary
    basis = u @ basis @ u.conj().T
    basis = (basis + basis.conj().transpose(0, 2, 1)) / 2
    return alg.OperatorAlgebra(basis, tps.n, tps.loci_labels[i])


def tps_to_mps(tps: TpsSpec, provenance: str | None = None) -> Mps:
    loci = {tps.loci_labels[i]: local_algebra(tps, i) for i in range(len(tps.dims))}
    return Mps(tps.n, loci, provenance or repr(tps))


def twist(tps: TpsSpec, u) -> TpsSpec:
    """Apply a further global unitary: the new frame is ``u @ U``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (tps.n, tps.n):
        raise ShapeError(f"twist must be {tps.n}x{tps.n}, got {u.shape}")
    if not is_unitary(u, 1e-8):
        raise NotUnitaryError("twist matrix is not unitary")
    return TpsSpec(tps.dims, u @ tps.unitary, tps.loci_labels)


def bell_unitary() -> np.ndarray:
    """Two-qubit Bell-basis frame change.

    Sends ``|00>, |01>, |10>, |11>`` to ``Phi+, Psi+, Psi-, i Phi-``. With this
    order and phase, ``Phi+`` is a product state of the twisted frame, every
    computational basis state is maximally entangled in it, and its local
    algebras meet those of the standard frame only in the scalars.
    """
    s = 1 / np.sqrt(2)
    return np.array([[s, 0, 0, 1j * s],
                     [0, s, s, 0],
                     [0, s, -s, 0],
                     [s, 0, 0, -1j * s]], dtype=complex)


@dataclass(frozen=True)
class QubitReconstruction:
    """Outcome of :func:`reconstruct_qubits`; ``tps`` is ``None`` on failure."""

    tps: TpsSpec | None
    partitions: BasisPartitionSet | None
    reason: str
    factor_dim: int | None = None

    def __bool__(self) -> bool:
        return self.tps is not None


def factor_side(a: alg.OperatorAlgebra) -> int | None:
    """``s`` when ``a`` is a full matrix algebra ``M_s`` (dim s^2, trivial centre)."""
    s = int(round(np.sqrt(a.dim)))
    if s * s != a.dim:
        return None
    if alg.center(a).dim != 1:
        return None
    return s


def reconstruct_qubits(a: alg.OperatorAlgebra) -> QubitReconstruction:
    """Split a full-matrix-algebra locus ``M_d`` into prime-dimensional factors.

    Only the dimension bookkeeping is produced: the returned structure lives
    on an abstract ``d``-dimensional space, with Svozil partitions attached.
    """
    s = factor_side(a)
    if s is None:
        return QubitReconstruction(None, None, "not a factor")
    if s == 1:
        return QubitReconstruction(None, None, "trivial locus", 1)
    primes = prime_factors(s)
    if len(primes) == 1:
        return QubitReconstruction(None, None, "prime dimension", s)
    spec = TpsSpec(primes)
    return QubitReconstruction(spec, svozil_partitions(primes), "ok", s)
