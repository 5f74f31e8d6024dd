"""Dense complex linear-algebra primitives.

Conventions used throughout the package:

* Mixed radix: for local dimensions ``dims = (n_0, ..., n_{k-1})`` the basis
  index of ``|i_0 i_1 ... i_{k-1}>`` is ``i_0 * n_1 * ... * n_{k-1} + ... +
  i_{k-1}``, i.e. factor 0 is the most significant digit. This matches
  ``np.kron`` and row-major storage.
* Rank decisions: a singular value counts as non-zero when it exceeds
  ``eps * s_max`` (``eps * 1`` when the matrix is zero). ``EPS`` is the
  package-wide default.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .errors import ShapeError

EPS = 1e-9


def as_dims(dims: Iterable[int]) -> tuple[int, ...]:
    """Validate a vector of local dimensions (each >= 2)."""
    out = tuple(int(d) for d in dims)
    if not out:
        raise ShapeError("dimension vector must be non-empty")
    if any(d < 2 for d in out):
        raise ShapeError(f"local dimensions must be >= 2, got {list(out)}")
    return out


def dims_product(dims: Sequence[int]) -> int:
    return int(np.prod(dims, dtype=np.int64))


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices (left to right)."""
    if not mats:
        raise ShapeError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def _check_square(rho: np.ndarray, n: int, what: str = "matrix") -> None:
    if rho.ndim != 2 or rho.shape != (n, n):
        raise ShapeError(f"{what} must be {n}x{n}, got shape {rho.shape}")


def _normalize_subset(subset: Iterable[int], k: int) -> tuple[int, ...]:
    sub = tuple(sorted(set(int(i) for i in subset)))
    if any(i < 0 or i >= k for i in sub):
        raise ShapeError(f"factor indices {list(sub)} out of range for {k} factors")
    return sub


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    The kept factors appear in increasing index order in the result.
    """
    dims = as_dims(dims)
    rho = np.asarray(rho, dtype=complex)
    k = len(dims)
    _check_square(rho, dims_product(dims), "rho")
    keep = _normalize_subset(keep, k)
    if not keep:
        raise ShapeError("partial_trace needs at least one kept factor")
    t = rho.reshape(dims + dims)
    # einsum labels: row legs 0..k-1, column legs k..2k-1; traced legs share a label
    row = list(range(k))
    col = [i if i not in keep else k + i for i in range(k)]
    out = [i for i in keep] + [k + i for i in keep]
    red = np.einsum(t, row + col, out)
    m = dims_product([dims[i] for i in keep])
    return red.reshape(m, m)


def partial_transpose(rho, dims: Sequence[int], sys: Iterable[int]) -> np.ndarray:
    """Transpose the factors listed in ``sys``, leaving the others alone."""
    dims = as_dims(dims)
    rho = np.asarray(rho, dtype=complex)
    k = len(dims)
    _check_square(rho, dims_product(dims), "rho")
    sys = _normalize_subset(sys, k)
    t = rho.reshape(dims + dims)
    perm = list(range(2 * k))
    for i in sys:
        perm[i], perm[k + i] = perm[k + i], perm[i]
    return t.transpose(perm).reshape(rho.shape)


def singular_values(m) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def _threshold(s: np.ndarray, eps: float) -> float:
    smax = s[0] if s.size and s[0] > 0 else 1.0
    return eps * smax


def numerical_rank(m, eps: float = EPS) -> int:
    """Number of singular values above ``eps`` times the largest one."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = singular_values(m)
    return int(np.sum(s > _threshold(s, eps)))


def nullspace(m, eps: float = EPS, absolute: bool = False) -> np.ndarray:
    """Orthonormal kernel basis, returned as the columns of a matrix.

    Uses the same threshold rule as :func:`numerical_rank`, so
    ``numerical_rank(m) + nullspace(m).shape[1] == m.shape[1]``. With
    ``absolute=True`` the cut-off is ``eps`` itself, which keeps a matrix that
    is zero up to round-off from being read as full rank.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    rank = int(np.sum(s > (eps if absolute else _threshold(s, eps))))
    return vh[rank:].conj().T


def range_basis(m, eps: float = EPS, absolute: bool = False) -> np.ndarray:
    """Orthonormal basis (columns) for the column space of ``m``.

    With ``absolute=True`` the cut-off is ``eps`` itself rather than
    ``eps * s_max``; used when the columns are already on a known scale.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.shape[1] == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    cut = eps if absolute else _threshold(s, eps)
    return u[:, s > cut]


def reshape_cut(psi, dims: Sequence[int], left: Iterable[int]) -> np.ndarray:
    """Coefficient matrix of ``psi`` across the cut ``left | rest``.

    Rows are indexed by the mixed-radix digits of the ``left`` factors, columns
    by the remaining ones; its numerical rank is the Schmidt rank.
    """
    dims = as_dims(dims)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    k = len(dims)
    if psi.size != dims_product(dims):
        raise ShapeError(f"vector of length {psi.size} does not match dims {list(dims)}")
    left = _normalize_subset(left, k)
    right = tuple(i for i in range(k) if i not in left)
    if not left or not right:
        raise ShapeError("cut must be a proper non-empty subset of the factors")
    t = psi.reshape(dims).transpose(left + right)
    return t.reshape(dims_product([dims[i] for i in left]), -1)


def schmidt_rank(psi, dims: Sequence[int], left: Iterable[int], eps: float = EPS) -> int:
    return numerical_rank(reshape_cut(psi, dims, left), eps)


def digits(index: int, dims: Sequence[int]) -> tuple[int, ...]:
    """Mixed-radix digits of a basis index, most significant first."""
    return tuple(int(x) for x in np.unravel_index(index, tuple(dims)))


def is_unitary(u, atol: float = 1e-8) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), ord=2) <= atol)


def is_hermitian(m, atol: float = EPS) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0))


def embed_blocks(factors: Sequence[np.ndarray], dims: Sequence[int], blocks) -> np.ndarray:
    """Tensor product of per-block operators, reordered to natural factor order.

    ``factors[b]`` acts on the factors listed in ``blocks[b]`` (in increasing
    order); the blocks must partition ``range(len(dims))``.
    """
    dims = tuple(dims)
    k = len(dims)
    order = [i for blk in blocks for i in sorted(blk)]
    if sorted(order) != list(range(k)):
        raise ShapeError("blocks must partition the factor set")
    big = kron(*factors)
    permuted = tuple(dims[i] for i in order)
    t = big.reshape(permuted + permuted)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [k + i for i in inv])
    n = dims_product(dims)
    return t.reshape(n, n)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``n x n`` unitary drawn from ``rng``."""
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)
