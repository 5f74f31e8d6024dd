"""Finite-dimensional operator algebras.

An :class:`OperatorAlgebra` is a unital, adjoint-closed, multiplicatively
closed subspace of the ``n x n`` complex matrices. It is stored through a
Hilbert-Schmidt orthonormal basis of *Hermitian* matrices; every algebra here
is adjoint-closed, so such a basis always exists, and Hermitian basis
elements double as observables in the separability checks.

All subspace decisions (membership, equality, kernels) go through the rank
rule of :mod:`locus_forge.numerics` with a single tolerance.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import AlgebraError, ClosureError, ShapeError
from .numerics import EPS, nullspace, range_basis

# Closure checks compare products of unit-norm basis elements; a residual of
# this absolute size is treated as round-off.
CLOSURE_TOL = 1e-7


def _vec(mats: np.ndarray) -> np.ndarray:
    """Stack ``(m, n, n)`` matrices as the columns of an ``(n*n, m)`` array."""
    mats = np.asarray(mats, dtype=complex)
    return mats.reshape(mats.shape[0], -1).T


def _unvec(cols: np.ndarray, n: int) -> np.ndarray:
    return np.ascontiguousarray(cols.T).reshape(-1, n, n)


def _hermitian_basis(q: np.ndarray, n: int, eps: float = EPS) -> np.ndarray:
    """Hermitian HS-orthonormal basis of an adjoint-closed subspace.

    ``q`` holds an orthonormal (complex) basis as columns. The Hermitian
    elements of the subspace form a real vector space of the same dimension;
    it is spanned by the Hermitian and anti-Hermitian parts of the columns.
    Raises :class:`AlgebraError` when the span is not adjoint-closed.
    """
    d = q.shape[1]
    mats = _unvec(q, n)
    herm = np.concatenate([mats + mats.conj().transpose(0, 2, 1),
                           -1j * (mats - mats.conj().transpose(0, 2, 1))]) / 2
    flat = herm.reshape(2 * d, -1)
    real = np.concatenate([flat.real, flat.imag], axis=1).T  # (2 n^2, 2d)
    u, s, _ = np.linalg.svd(real, full_matrices=False)
    rank = int(np.sum(s > eps * (s[0] if s.size and s[0] > 0 else 1.0)))
    if rank != d:
        raise AlgebraError(f"subspace is not adjoint-closed (hermitian rank {rank} != {d})")
    cols = u[:, :d]
    half = n * n
    out = (cols[:half] + 1j * cols[half:]).T.reshape(d, n, n)
    out = (out + out.conj().transpose(0, 2, 1)) / 2
    return _fix_signs(out)


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # SVD output has arbitrary signs; pin them so reports are reproducible
    flat = basis.reshape(basis.shape[0], -1)
    for k in range(flat.shape[0]):
        row = flat[k]
        j = int(np.argmax(np.abs(row) > 1e-12 + 0.5 * np.max(np.abs(row))))
        if row[j].real < 0 or (row[j].real == 0 and row[j].imag < 0):
            basis[k] = -basis[k]
    return basis


class OperatorAlgebra:
    """Unital *-subalgebra of ``M_n`` with a Hermitian HS-orthonormal basis.

    Build instances with :func:`generate`, :func:`from_span`,
    :func:`full_algebra` and friends rather than the constructor, which trusts
    its input unless ``validate=True``.
    """

    __slots__ = ("ambient_dim", "basis", "label", "_q")

    def __init__(self, basis, ambient_dim: int, label: str | None = None, validate: bool = False):
        basis = np.asarray(basis, dtype=complex)
        n = int(ambient_dim)
        if basis.ndim != 3 or basis.shape[1:] != (n, n):
            raise ShapeError(f"basis must have shape (d, {n}, {n}), got {basis.shape}")
        if not 1 <= basis.shape[0] <= n * n:
            raise ShapeError(f"basis size {basis.shape[0]} outside [1, {n * n}]")
        basis.setflags(write=False)
        self.ambient_dim = n
        self.basis = basis
        self.label = label
        self._q = _vec(basis)
        if validate:
            check_invariants(self)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def degenerate(self) -> bool:
        """True when the algebra is just the scalars."""
        return self.dim == 1

    def with_label(self, label: str | None) -> "OperatorAlgebra":
        return OperatorAlgebra(self.basis, self.ambient_dim, label)

    def project(self, x) -> np.ndarray:
        """Orthogonal (Hilbert-Schmidt) projection of ``x`` onto the algebra."""
        x = np.asarray(x, dtype=complex)
        v = x.reshape(-1)
        return (self._q @ (self._q.conj().T @ v)).reshape(x.shape)

    def projector(self) -> np.ndarray:
        return self._q @ self._q.conj().T

    def conjugate(self, u, label: str | None = None) -> "OperatorAlgebra":
        """The algebra ``u A u^dagger`` (``u`` unitary)."""
        u = np.asarray(u, dtype=complex)
        basis = u @ self.basis @ u.conj().T
        return OperatorAlgebra((basis + basis.conj().transpose(0, 2, 1)) / 2, self.ambient_dim,
                               self.label if label is None else label)

    def __contains__(self, x) -> bool:
        return contains(self, x)

    def __repr__(self) -> str:
        lab = f", label={self.label!r}" if self.label is not None else ""
        return f"OperatorAlgebra(n={self.ambient_dim}, dim={self.dim}{lab})"


def _as_square_stack(mats, n: int) -> np.ndarray:
    arr = [np.asarray(m, dtype=complex) for m in mats]
    for i, m in enumerate(arr):
        if m.shape != (n, n):
            raise ShapeError(f"generator {i} has shape {m.shape}, expected ({n}, {n})")
    if not arr:
        return np.zeros((0, n, n), dtype=complex)
    return np.stack(arr)


def _normalized(mats: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mats.reshape(mats.shape[0], -1), axis=1)
    keep = norms > 0
    return mats[keep] / norms[keep, None, None]


def generate(generators: Sequence, ambient_dim: int, label: str | None = None,
             eps: float = EPS) -> OperatorAlgebra:
    """Smallest unital *-algebra containing ``generators``.

    Seeds the span with the identity, the generators and their adjoints, then
    keeps adding products of basis elements until the dimension stops growing.
    """
    n = int(ambient_dim)
    gens = _as_square_stack(generators, n)
    seeds = np.concatenate([np.eye(n, dtype=complex)[None], gens, gens.conj().transpose(0, 2, 1)])
    q = range_basis(_vec(_normalized(seeds)), eps)
    new = q
    for _ in range(n * n + 1):
        cur = _unvec(q, n)
        fresh = _unvec(new, n)
        prods = np.concatenate([
            np.einsum("aij,bjk->abik", fresh, cur).reshape(-1, n, n),
            np.einsum("aij,bjk->abik", cur, fresh).reshape(-1, n, n),
        ])
        x = _vec(prods)
        resid = x - q @ (q.conj().T @ x)
        new = range_basis(resid, CLOSURE_TOL, absolute=True)
        if new.shape[1] == 0:
            return OperatorAlgebra(_hermitian_basis(q, n), n, label)
        # re-orthogonalise the new block against q for stability
        new = new - q @ (q.conj().T @ new)
        new = range_basis(new, CLOSURE_TOL, absolute=True)
        q = np.concatenate([q, new], axis=1)
        if q.shape[1] > n * n:
            break
    raise ClosureError(f"algebra closure did not stabilise within {n * n} rounds")


def from_span(mats: Sequence, ambient_dim: int, label: str | None = None,
              eps: float = EPS) -> OperatorAlgebra:
    """Wrap the linear span of ``mats`` as an algebra, rejecting non-algebras.

    Unlike :func:`generate` nothing is added: the span itself must contain the
    identity and be closed under adjoints and products.
    """
    n = int(ambient_dim)
    arr = _as_square_stack(mats, n)
    if arr.shape[0] == 0:
        raise AlgebraError("empty span does not contain the identity")
    q = range_basis(_vec(_normalized(arr)), eps)
    alg = OperatorAlgebra(_hermitian_basis(q, n, eps), n, label)
    check_invariants(alg)
    return alg


def full_algebra(n: int, label: str | None = None) -> OperatorAlgebra:
    """All of ``M_n``, with the generalized Gell-Mann basis (diagonal first)."""
    return OperatorAlgebra(gell_mann_basis(n), n, label)


def scalars(n: int, label: str | None = None) -> OperatorAlgebra:
    return OperatorAlgebra(np.eye(n, dtype=complex)[None] / np.sqrt(n), n, label)


def diagonal_algebra(n: int, label: str | None = None) -> OperatorAlgebra:
    return OperatorAlgebra(gell_mann_basis(n)[:n], n, label)


def block_diagonal_indicators(classes: Sequence[Sequence[int]], n: int,
                              label: str | None = None) -> OperatorAlgebra:
    """Abelian algebra spanned by the diagonal projectors onto index classes."""
    mats = []
    for cls in classes:
        p = np.zeros((n, n), dtype=complex)
        idx = list(cls)
        p[idx, idx] = 1.0
        mats.append(p / np.sqrt(len(idx)))
    return OperatorAlgebra(np.stack(mats), n, label, validate=True)


def gell_mann_basis(n: int) -> np.ndarray:
    """HS-orthonormal Hermitian basis of ``M_n``.

    Order: ``I/sqrt(n)``, the ``n-1`` traceless diagonal elements, then the
    symmetric and antisymmetric off-diagonal pairs. For ``n = 2`` this is the
    normalized Pauli basis ``I, Z, X, Y``.
    """
    out = [np.eye(n, dtype=complex) / np.sqrt(n)]
    for k in range(1, n):
        d = np.zeros(n)
        if n == 2:
            d[:] = [1, -1]
        else:
            d[:k] = 1
            d[k] = -k
        out.append(np.diag(d / np.linalg.norm(d)).astype(complex))
    for i in range(n):
        for j in range(i + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[i, j] = s[j, i] = 1 / np.sqrt(2)
            a = np.zeros((n, n), dtype=complex)
            a[i, j], a[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            out.extend([s, a])
    return np.stack(out)


def _commutator_stack(a: OperatorAlgebra) -> np.ndarray:
    """Matrix of ``X -> [B_k, X]`` for all basis elements, acting on vec(X)."""
    n = a.ambient_dim
    eye = np.eye(n, dtype=complex)
    # row-major vec: vec(BX) = (B kron I) vec X, vec(XB) = (I kron B^T) vec X
    blocks = [np.kron(b, eye) - np.kron(eye, b.T) for b in a.basis]
    m = np.concatenate(blocks, axis=0)
    if m.shape[0] > m.shape[1]:
        # same kernel and singular values, smaller SVD
        m = np.linalg.qr(m, mode="r")
    return m


def commutant(a: OperatorAlgebra, label: str | None = None, eps: float = EPS) -> OperatorAlgebra:
    """All matrices commuting with every element of ``a``."""
    n = a.ambient_dim
    # basis elements have unit HS norm, so an absolute cut-off is on scale
    k = nullspace(_commutator_stack(a), eps, absolute=True)
    if k.shape[1] == 0:
        raise ClosureError("commutant came out empty; identity lost to round-off")
    return OperatorAlgebra(_hermitian_basis(k, n, eps), n, label)


def double_commutant(a: OperatorAlgebra, eps: float = EPS) -> OperatorAlgebra:
    return commutant(commutant(a, eps=eps), label=a.label, eps=eps)


def _same_ambient(a: OperatorAlgebra, b: OperatorAlgebra) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise ShapeError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")


def intersect(a: OperatorAlgebra, b: OperatorAlgebra, label: str | None = None,
              eps: float = EPS) -> OperatorAlgebra:
    """Subspace intersection: the kernel of the stacked complement projectors."""
    _same_ambient(a, b)
    n = a.ambient_dim
    eye = np.eye(n * n, dtype=complex)
    stacked = np.concatenate([eye - a.projector(), eye - b.projector()], axis=0)
    k = nullspace(stacked, eps, absolute=True)
    if k.shape[1] == 0:
        raise ClosureError("intersection lost the identity")
    return OperatorAlgebra(_hermitian_basis(k, n, eps), n, label)


def intersect_all(algebras: Sequence[OperatorAlgebra], label: str | None = None,
                  eps: float = EPS) -> OperatorAlgebra:
    if not algebras:
        raise ValueError("need at least one algebra")
    out = algebras[0]
    for other in algebras[1:]:
        out = intersect(out, other, eps=eps)
    return out.with_label(label)


def residual(a: OperatorAlgebra, x) -> float:
    """Relative HS distance of ``x`` from the algebra."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (a.ambient_dim, a.ambient_dim):
        raise ShapeError(f"expected a {a.ambient_dim}x{a.ambient_dim} matrix, got {x.shape}")
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    return float(np.linalg.norm(x - a.project(x)) / nx)


def contains(a: OperatorAlgebra, x, eps: float = CLOSURE_TOL) -> bool:
    return residual(a, x) <= eps


def is_subalgebra(a: OperatorAlgebra, b: OperatorAlgebra, eps: float = CLOSURE_TOL) -> bool:
    """True when ``a`` is contained in ``b``."""
    _same_ambient(a, b)
    if a.dim > b.dim:
        return False
    return all(contains(b, x, eps) for x in a.basis)


def equal(a: OperatorAlgebra, b: OperatorAlgebra, eps: float = CLOSURE_TOL) -> bool:
    _same_ambient(a, b)
    return a.dim == b.dim and is_subalgebra(a, b, eps)


def center(a: OperatorAlgebra, eps: float = EPS) -> OperatorAlgebra:
    return intersect(a, commutant(a, eps=eps), label=a.label, eps=eps)


def check_invariants(a: OperatorAlgebra, tol: float = CLOSURE_TOL) -> None:
    """Raise :class:`AlgebraError` unless ``a`` is a unital *-algebra with an
    orthonormal basis."""
    n = a.ambient_dim
    gram = np.einsum("aij,bij->ab", a.basis.conj(), a.basis)
    if not np.allclose(gram, np.eye(a.dim), atol=tol):
        raise AlgebraError("basis is not Hilbert-Schmidt orthonormal")
    if not contains(a, np.eye(n), tol):
        raise AlgebraError("identity is not in the algebra")
    adj = a.basis.conj().transpose(0, 2, 1)
    if _max_residual(a, adj) > tol:
        raise AlgebraError("not closed under adjoints")
    prods = np.einsum("aij,bjk->abik", a.basis, a.basis).reshape(-1, n, n)
    if _max_residual(a, prods) > tol:
        raise AlgebraError("not closed under multiplication")


def _max_residual(a: OperatorAlgebra, mats: np.ndarray) -> float:
    x = _vec(mats)
    r = x - a._q @ (a._q.conj().T @ x)
    return float(np.max(np.linalg.norm(r, axis=0))) if r.size else 0.0


def commute(a: OperatorAlgebra, b: OperatorAlgebra, tol: float = CLOSURE_TOL) -> bool:
    """True when every element of ``a`` commutes with every element of ``b``."""
    _same_ambient(a, b)
    ab = np.einsum("aij,bjk->abik", a.basis, b.basis)
    ba = np.einsum("bij,ajk->abik", b.basis, a.basis)
    return bool(np.max(np.abs(ab - ba)) <= tol)
