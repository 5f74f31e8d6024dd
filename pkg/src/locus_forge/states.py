"""States as density matrices, and product / separability tests relative to a
partition of the subsystems of a :class:`~locus_forge.tps.TpsSpec`.

All tests run in the frame of the supplied structure: the density matrix is
first conjugated to ``U^dagger rho U``, so virtual (twisted) subsystems are
handled exactly like the standard ones.

Verdicts are four-valued (``product``, ``separable``, ``entangled``,
``undetermined``). Mixed-state separability is decided by the PPT criterion
where it is conclusive (two groups of dimensions 2x2 or 2x3); elsewhere a
passing PPT test only leads to ``separable`` when an explicit convex
decomposition into product states is found.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import nnls

from .errors import InvalidStateError, ShapeError, TooLargeError
from .numerics import (EPS, dims_product, embed_blocks, numerical_rank, partial_trace,
                       partial_transpose, reshape_cut, nullspace)
from .partitions import Partition, bipartitions
from .tps import TpsSpec

KINDS = ("quantum-density", "quantum-pure", "classical-diagonal")
PRODUCT_TOL = 1e-8
DECOMPOSITION_TOL = 1e-6
DECOMPOSITION_LIMIT = 16


@dataclass(frozen=True, eq=False)
class State:
    """A density matrix, optionally remembering the pure vector it came from."""

    rho: np.ndarray
    kind: str = "quantum-density"
    vector: np.ndarray | None = None
    name: str | None = None

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ShapeError(f"density matrix must be square, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidStateError("density matrix has non-finite entries")
        if self.kind not in KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if not np.allclose(rho, rho.conj().T, atol=EPS):
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-9:
            raise InvalidStateError(f"trace is {float(np.trace(rho).real):g}, expected 1")
        if np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] < -EPS:
            raise InvalidStateError("density matrix is not positive semidefinite")
        if self.kind == "classical-diagonal" and np.max(np.abs(rho - np.diag(np.diag(rho)))) > EPS:
            raise InvalidStateError("classical state has off-diagonal entries")
        if self.kind == "quantum-pure":
            v = np.array(self.vector, dtype=complex).reshape(-1)
            if not np.allclose(np.outer(v, v.conj()), rho, atol=EPS):
                raise InvalidStateError("stored vector does not match the density matrix")
            v.setflags(write=False)
            object.__setattr__(self, "vector", v)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, psi, name: str | None = None) -> "State":
        v = np.asarray(psi, dtype=complex).reshape(-1)
        nv = np.linalg.norm(v)
        if nv == 0:
            raise InvalidStateError("zero vector is not a state")
        v = v / nv
        return cls(np.outer(v, v.conj()), "quantum-pure", v, name)

    @classmethod
    def density(cls, rho, name: str | None = None) -> "State":
        return cls(rho, "quantum-density", None, name)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def pure_vector(self, eps: float = EPS) -> np.ndarray | None:
        """The state vector if the state is pure (rank one), else ``None``."""
        if self.vector is not None:
            return self.vector
        if numerical_rank(self.rho, eps) != 1:
            return None
        w, v = np.linalg.eigh(self.rho)
        return v[:, -1]

    def __repr__(self) -> str:
        nm = f" {self.name!r}" if self.name else ""
        return f"<State{nm} {self.kind} n={self.dim}>"


@dataclass(frozen=True)
class StateSet:
    states: tuple[State, ...]
    name: str = "available"

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("a state set needs at least one state")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise ShapeError(f"states have different dimensions {sorted(dims)}")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __iter__(self):
        return iter(self.states)

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class SeparabilityVerdict:
    value: str
    witness: dict[str, Any] | None = None

    def __post_init__(self):
        if self.value not in ("product", "separable", "entangled", "undetermined"):
            raise ValueError(f"bad verdict {self.value!r}")
        if self.value in ("entangled", "separable") and self.witness is None:
            raise ValueError(f"a {self.value} verdict needs a witness")

    @property
    def is_separable(self) -> bool:
        return self.value in ("product", "separable")


def _as_rho(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, State) else np.asarray(rho, dtype=complex)


def expect(rho, a) -> complex:
    """``trace(rho a)``."""
    r = _as_rho(rho)
    a = np.asarray(a, dtype=complex)
    if a.shape != r.shape:
        raise ShapeError(f"observable shape {a.shape} does not match state {r.shape}")
    return complex(np.einsum("ij,ji->", r, a))


def classical_embed(p, name: str | None = None) -> State:
    """Diagonal density matrix of a probability vector."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < 0):
        raise InvalidStateError("probabilities must be non-negative")
    if abs(p.sum() - 1) > 1e-9:
        raise InvalidStateError(f"probabilities sum to {float(p.sum()):g}, expected 1")
    return State(np.diag(p).astype(complex), "classical-diagonal", None, name)


def _check_sigma(rho, tps: TpsSpec, sigma: Partition) -> np.ndarray:
    r = _as_rho(rho)
    if r.shape != (tps.n, tps.n):
        raise ShapeError(f"state of size {r.shape[0]} does not match structure of size {tps.n}")
    if sigma.ground_size != len(tps.dims):
        raise ShapeError(
            f"partition over {sigma.ground_size} subsystems, structure has {len(tps.dims)}")
    return r


def _frame_vector(rho, tps: TpsSpec, eps: float) -> np.ndarray | None:
    st = rho if isinstance(rho, State) else None
    if st is not None:
        v = st.pure_vector(eps)
    else:
        r = _as_rho(rho)
        v = None
        if numerical_rank(r, eps) == 1:
            v = np.linalg.eigh(r)[1][:, -1]
    return None if v is None else tps.unitary.conj().T @ v


def block_marginals(rho_frame: np.ndarray, dims, sigma: Partition) -> list[np.ndarray]:
    return [partial_trace(rho_frame, dims, blk) for blk in sigma.blocks]


def _block_dim(dims, blk) -> int:
    return dims_product([dims[i] for i in blk])


def is_sigma_product(rho, tps: TpsSpec, sigma: Partition, eps: float = EPS,
                     tol: float = PRODUCT_TOL) -> SeparabilityVerdict:
    """Is ``rho`` a tensor product over the blocks of ``sigma``?

    Returns ``product`` or ``entangled``; here ``entangled`` only means
    "not a product", with the witness naming the offending block.
    """
    r = _check_sigma(rho, tps, sigma)
    if sigma.num_blocks == 1:
        return SeparabilityVerdict("product", {"reason": "one-block partition"})
    psi = _frame_vector(rho, tps, eps)
    if psi is not None:
        for blk in sigma.blocks:
            rank = numerical_rank(reshape_cut(psi, tps.dims, blk), eps)
            if rank > 1:
                return SeparabilityVerdict("entangled", {
                    "reason": "not a product: Schmidt rank across block exceeds 1",
                    "cut": blk, "schmidt_rank": rank})
        return SeparabilityVerdict("product", {"reason": "Schmidt rank 1 across every block"})
    rf = tps.to_frame(r)
    prod = embed_blocks(block_marginals(rf, tps.dims, sigma), tps.dims, sigma.blocks)
    dev = float(np.max(np.abs(rf - prod)))
    if dev <= tol:
        return SeparabilityVerdict("product", {"reason": "equals product of block marginals",
                                               "max_deviation": dev})
    return SeparabilityVerdict("entangled", {
        "reason": "not a product: differs from the product of its block marginals",
        "max_deviation": dev})


def _ppt_conclusive(dims, sigma: Partition) -> bool:
    if sigma.num_blocks != 2:
        return False
    pair = sorted(_block_dim(dims, b) for b in sigma.blocks)
    return pair in ([2, 2], [2, 3])


def is_sigma_separable(rho, tps: TpsSpec, sigma: Partition, eps: float = EPS,
                       search: bool = True, budget: int = 200, seed: int = 0) -> SeparabilityVerdict:
    """Decide ``sigma``-separability as far as it can be decided soundly.

    Pure states are separable exactly when they are products. Mixed states go
    through the PPT test across every split of the blocks into two groups; a
    negative partial-transpose eigenvalue proves entanglement. If all splits
    pass, the answer is ``separable`` in the 2x2 / 2x3 regime, or when
    :func:`decompose_separable` (run if ``search``) returns a certificate;
    otherwise ``undetermined``.
    """
    r = _check_sigma(rho, tps, sigma)
    prod = is_sigma_product(rho, tps, sigma, eps)
    if prod.value == "product":
        return prod
    if _frame_vector(rho, tps, eps) is not None:
        return prod
    rf = tps.to_frame(r)
    mins = []
    for left, right in bipartitions(sigma):
        ev = float(np.linalg.eigvalsh(partial_transpose(rf, tps.dims, left))[0])
        cut = {"left": left, "right": right, "min_eigenvalue": ev}
        if ev < -eps:
            return SeparabilityVerdict("entangled", {
                "reason": "negative partial transpose", **cut})
        mins.append(cut)
    if _ppt_conclusive(tps.dims, sigma):
        return SeparabilityVerdict("separable", {
            "reason": "positive partial transpose, conclusive for 2x2 and 2x3", "cuts": mins})
    if search and tps.n <= DECOMPOSITION_LIMIT:
        cert = decompose_separable(rho, tps, sigma, budget=budget, seed=seed)
        if cert is not None:
            return SeparabilityVerdict("separable", {
                "reason": "explicit decomposition", "certificate": cert})
    return SeparabilityVerdict("undetermined", {
        "reason": "PPT passes on every split but is not conclusive here", "cuts": mins})


@dataclass(frozen=True, eq=False)
class SeparableDecomposition:
    """``rho = U (sum_a w_a  x_b rho_b^a) U^dagger`` over the blocks of ``sigma``.

    ``factors[a][b]`` is the state of block ``b`` in term ``a`` (expressed in
    the frame of ``tps``).
    """

    weights: np.ndarray
    factors: tuple[tuple[State, ...], ...]
    sigma: Partition
    tps: TpsSpec = field(repr=False)
    error: float = 0.0

    def __len__(self) -> int:
        return len(self.weights)

    def reconstruct(self) -> np.ndarray:
        n = self.tps.n
        out = np.zeros((n, n), dtype=complex)
        for w, fs in zip(self.weights, self.factors):
            out += w * embed_blocks([f.rho for f in fs], self.tps.dims, self.sigma.blocks)
        return self.tps.from_frame(out)


def _to_block_order(m: np.ndarray, dims, sigma: Partition) -> np.ndarray:
    k = len(dims)
    order = [i for b in sigma.blocks for i in b]
    t = m.reshape(tuple(dims) * 2).transpose(order + [k + i for i in order])
    return t.reshape(m.shape)


def _herm_coords(m: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of Hermitian matrices (last two axes)."""
    n = m.shape[-1]
    iu = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    off = m[..., iu[0], iu[1]] * np.sqrt(2)
    return np.concatenate([diag, off.real, off.imag], axis=-1)


def _simplex_fit(atoms: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Non-negative weights summing to one that best reproduce ``target``."""
    a = _herm_coords(atoms).T
    b = _herm_coords(target)
    scale = 10.0
    a = np.vstack([a, scale * np.ones(a.shape[1])])
    b = np.concatenate([b, [scale]])
    w, _ = nnls(a, b, maxiter=50 * a.shape[1])
    s = w.sum()
    if s > 0:
        w = w / s
    err = float(np.linalg.norm(np.einsum("a,aij->ij", w, atoms) - target))
    return w, err


def _product_atom(vecs: Sequence[np.ndarray]) -> np.ndarray:
    v = vecs[0]
    for x in vecs[1:]:
        v = np.kron(v, x)
    return np.outer(v, v.conj())


def _random_vec(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _seesaw(r: np.ndarray, bdims: Sequence[int], start: list[np.ndarray],
            sweeps: int = 40) -> tuple[list[np.ndarray], float]:
    """Locally maximise <phi|r|phi> over product vectors phi = x_b phi_b."""
    m = len(bdims)
    t = r.reshape(tuple(bdims) * 2)
    vecs = [v.copy() for v in start]
    val = -np.inf
    for _ in range(sweeps):
        for b in range(m):
            ops = []
            for c in range(m):
                if c != b:
                    ops += [vecs[c].conj(), [c], vecs[c], [m + c]]
            eff = np.einsum(t, list(range(2 * m)), *ops, [b, m + b]) if ops else t
            eff = (eff + eff.conj().T) / 2
            w, v = np.linalg.eigh(eff)
            vecs[b] = v[:, -1]
            new = float(w[-1])
        if new - val < 1e-13:
            val = new
            break
        val = new
    return vecs, val


def _caratheodory(atoms: np.ndarray, w: np.ndarray, tol: float = 1e-12):
    """Drop atoms until the support is affinely independent, keeping sum w a."""
    keep = w > tol
    atoms, w = atoms[keep], w[keep]
    coords = _herm_coords(atoms)
    while True:
        a = np.vstack([coords.T, np.ones(len(w))])
        ns = nullspace(a, 1e-10).real
        if ns.shape[1] == 0 or len(w) <= 1:
            return atoms, w
        v = ns[:, 0]
        if not np.any(v > 1e-14):
            v = -v
        pos = v > 1e-14
        t = np.min(w[pos] / v[pos])
        w = w - t * v
        keep = w > tol
        atoms, w, coords = atoms[keep], w[keep], coords[keep]
        w = w / w.sum()


def decompose_separable(rho, tps: TpsSpec, sigma: Partition, budget: int = 200, seed: int = 0,
                        tol: float = DECOMPOSITION_TOL, restarts: int = 4
                        ) -> SeparableDecomposition | None:
    """Search for explicit weights and product factors reproducing ``rho``.

    Products and diagonal (classical) states get their obvious
    decompositions. Otherwise a fully corrective Frank-Wolfe search over pure
    product states runs for at most ``budget`` rounds: each round fits simplex
    weights to the current atoms and adds the product state most aligned with
    the residual (found by alternating eigenvector updates from random starts).
    Returns ``None`` if the Frobenius reconstruction error never drops to
    ``tol``; that is not evidence of entanglement.
    """
    r = _check_sigma(rho, tps, sigma)
    if tps.n > DECOMPOSITION_LIMIT:
        raise TooLargeError(f"decomposition search is limited to dimension {DECOMPOSITION_LIMIT}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    dims = tps.dims
    bdims = [_block_dim(dims, b) for b in sigma.blocks]
    rf = tps.to_frame(r)

    if is_sigma_product(rho, tps, sigma).value == "product":
        margs = block_marginals(rf, dims, sigma)
        factors = ((tuple(State.density(_clean(m)) for m in margs)),)
        return _certificate(np.array([1.0]), factors, sigma, tps, r)

    off = rf - np.diag(np.diag(rf))
    if np.max(np.abs(off)) <= EPS:
        p = np.clip(np.diag(rf).real, 0, None)
        weights, factors = [], []
        for idx in np.flatnonzero(p > EPS):
            dig = np.unravel_index(idx, dims)
            fs = []
            for blk, d in zip(sigma.blocks, bdims):
                sub = np.ravel_multi_index([dig[i] for i in blk], [dims[i] for i in blk])
                e = np.zeros(d)
                e[sub] = 1
                fs.append(State.pure(e))
            weights.append(p[idx])
            factors.append(tuple(fs))
        w = np.array(weights) / np.sum(weights)
        return _certificate(w, tuple(factors), sigma, tps, r)

    rng = np.random.default_rng(seed)
    target = _to_block_order(rf, dims, sigma)
    vec_atoms: list[list[np.ndarray]] = []
    margs = block_marginals(rf, dims, sigma)
    eig = [np.linalg.eigh(m)[1] for m in margs]
    for cols in itertools.product(*(range(d) for d in bdims)):
        vec_atoms.append([eig[b][:, c] for b, c in enumerate(cols)])
        if len(vec_atoms) >= 64:
            break
    atoms = np.stack([_product_atom(v) for v in vec_atoms])
    w, err = _simplex_fit(atoms, target)
    for _ in range(budget):
        if err <= tol * 1e-3:
            break
        live = w > 0
        vec_atoms = [v for v, keep in zip(vec_atoms, live) if keep]
        atoms, w = atoms[live], w[live]
        resid = target - np.einsum("a,aij->ij", w, atoms)
        best, best_val = None, -np.inf
        starts = [[_random_vec(d, rng) for d in bdims] for _ in range(restarts)]
        for st in starts:
            vecs, val = _seesaw(resid, bdims, st)
            if val > best_val:
                best, best_val = vecs, val
        vec_atoms.append(best)
        atoms = np.concatenate([atoms, _product_atom(best)[None]])
        w, err = _simplex_fit(atoms, target)
    if err > tol:
        return None
    atoms_r, w_r = _caratheodory(atoms, w)
    factors = []
    for atom in atoms_r:
        t = atom.reshape(tuple(bdims) * 2)
        fs = []
        for b in range(len(bdims)):
            red = _reduce(t, b, len(bdims))
            fs.append(State.density(_clean(red)))
        factors.append(tuple(fs))
    return _certificate(w_r, tuple(factors), sigma, tps, r)


def _reduce(t: np.ndarray, b: int, m: int) -> np.ndarray:
    sub = list(range(m)) + [c if c != b else m + b for c in range(m)]
    return np.einsum(t, sub, [b, m + b])


def _clean(m: np.ndarray) -> np.ndarray:
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0, None)
    m = (v * w) @ v.conj().T
    return m / np.trace(m).real


def _certificate(w, factors, sigma, tps, r) -> SeparableDecomposition | None:
    cert = SeparableDecomposition(np.asarray(w, dtype=float), factors, sigma, tps)
    err = float(np.linalg.norm(cert.reconstruct() - r))
    if err > DECOMPOSITION_TOL:
        return None
    return SeparableDecomposition(cert.weights, factors, sigma, tps, err)
