"""Classical product structures on a finite configuration space.

A candidate structure assigns each point of ``S`` a tuple of digits (one per
factor); the indicator functions of equal-digit classes generate the local
(commutative) algebras. A distribution is compatible with the structure when
every pair of local indicators factorizes in expectation.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from .errors import ShapeError, TooLargeError
from .mps import Mps
from .numerics import as_dims, dims_product
from .tps import factorizations

EXACT_TOL = 1e-6
EXHAUSTIVE_LIMIT = 9
SEARCH_LIMIT = 12


@dataclass(frozen=True)
class SampleSet:
    samples: np.ndarray
    name: str = "samples"

    def __init__(self, samples, name: str = "samples"):
        arr = np.atleast_2d(np.asarray(samples, dtype=float))
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("need at least one non-empty sample")
        if np.any(arr < 0):
            raise ValueError("samples must be non-negative")
        bad = np.flatnonzero(np.abs(arr.sum(axis=1) - 1) > 1e-9)
        if bad.size:
            raise ValueError(f"sample {int(bad[0])} does not sum to 1")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "name", name)

    @property
    def space_size(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class CpsCandidate:
    """``index_map[s]`` is the digit tuple of point ``s``."""

    dims: tuple[int, ...]
    index_map: np.ndarray
    violation: float = float("nan")

    def __post_init__(self):
        dims = as_dims(self.dims)
        im = np.asarray(self.index_map, dtype=int)
        n = dims_product(dims)
        if im.shape != (n, len(dims)):
            raise ShapeError(f"index map must have shape ({n}, {len(dims)}), got {im.shape}")
        if np.any(im < 0) or np.any(im >= np.array(dims)):
            raise ShapeError("index map digit out of range")
        flat = np.ravel_multi_index(im.T, dims)
        if len(set(flat.tolist())) != n:
            raise ShapeError("index map is not a bijection")
        im.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "index_map", im)

    @classmethod
    def natural(cls, dims) -> "CpsCandidate":
        """Mixed-radix digits, factor 0 most significant."""
        dims = as_dims(dims)
        return cls(dims, np.array(np.unravel_index(np.arange(dims_product(dims)), dims)).T)

    @property
    def exact(self) -> bool:
        return self.violation <= EXACT_TOL

    def classes(self, f: int) -> list[list[int]]:
        """Points grouped by the digit of factor ``f``."""
        col = self.index_map[:, f]
        return [np.flatnonzero(col == v).tolist() for v in range(self.dims[f])]

    def signature(self) -> frozenset:
        """Label-free identity: the set of digit-class partitions."""
        return frozenset(frozenset(frozenset(c) for c in self.classes(f))
                         for f in range(len(self.dims)))

    def with_violation(self, v: float) -> "CpsCandidate":
        return CpsCandidate(self.dims, self.index_map, float(v))


def _onehots(index_map: np.ndarray, dims) -> list[np.ndarray]:
    # shapes (..., |S|, n_f)
    return [np.eye(d)[index_map[..., f]] for f, d in enumerate(dims)]


def _defects(p: np.ndarray, maps: np.ndarray, dims) -> np.ndarray:
    """Max indicator-pair defect for every (candidate, sample): shape (C, m)."""
    p = np.atleast_2d(p)
    oh = _onehots(maps, dims)
    out = np.zeros((maps.shape[0], p.shape[0]))
    for f, g in itertools.combinations(range(len(dims)), 2):
        joint = np.einsum("ms,csv,csw->cmvw", p, oh[f], oh[g])
        mf = np.einsum("ms,csv->cmv", p, oh[f])
        mg = np.einsum("ms,csw->cmw", p, oh[g])
        d = np.abs(joint - mf[..., :, None] * mg[..., None, :]).max(axis=(2, 3))
        out = np.maximum(out, d)
    return out


def eloccom_defect(p, cps: CpsCandidate) -> float:
    """``max |P(x_f = v, x_g = w) - P(x_f = v) P(x_g = w)|`` over factor pairs.

    This is the expectation-factorization defect of the classical embedding of
    ``p`` on pairs of block indicators; 0 for a single-factor structure.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != cps.index_map.shape[0]:
        raise ShapeError(f"distribution of length {p.size} vs structure on {cps.index_map.shape[0]} points")
    if len(cps.dims) < 2:
        return 0.0
    return float(_defects(p, cps.index_map[None], cps.dims)[0, 0])


def cps_mps(cps: CpsCandidate) -> Mps:
    """The diagonal-block structure: one abelian locus per factor."""
    n = cps.index_map.shape[0]
    loci = {str(f): alg.block_diagonal_indicators(cps.classes(f), n)
            for f in range(len(cps.dims))}
    return Mps(n, loci, f"cps {list(cps.dims)}")


def pca_factor_count(samples: SampleSet, tau: float = 0.01) -> tuple[int, np.ndarray]:
    """Principal-component count of the centred samples.

    Returns the number of covariance eigenvalues above ``tau`` times the
    largest (0 when the largest is below 1e-12) and the full spectrum in
    decreasing order.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    x = samples.samples
    if x.shape[0] < 2:
        raise ValueError("PCA needs at least two samples")
    cov = np.cov(x, rowvar=False, ddof=1)
    spec = np.clip(np.linalg.eigvalsh(np.atleast_2d(cov))[::-1], 0, None)
    if spec[0] <= 1e-12:
        return 0, spec
    return int(np.sum(spec > tau * spec[0])), spec


@lru_cache(maxsize=32)
def _canonical_maps(dims: tuple[int, ...]) -> np.ndarray:
    """One digit assignment per class of bijections equal up to relabelling.

    Points are placed in order, each digit either reusing a value already seen
    on that axis or taking the next fresh one; that fixes the value labels.
    Axes of equal size are then identified by keeping the lexicographically
    smallest representative.
    """
    n = dims_product(dims)
    k = len(dims)
    used = np.zeros(dims, dtype=bool)
    cur = np.zeros((n, k), dtype=int)
    found: list[np.ndarray] = []

    def rec(s: int, top: list[int]):
        if s == n:
            found.append(cur.copy())
            return
        ranges = [range(min(top[f] + 2, dims[f])) for f in range(k)]
        for cell in itertools.product(*ranges):
            if used[cell]:
                continue
            used[cell] = True
            cur[s] = cell
            rec(s + 1, [max(t, c) for t, c in zip(top, cell)])
            used[cell] = False

    rec(0, [-1] * k)
    maps = np.stack(found)
    perms = [pi for pi in itertools.permutations(range(k))
             if list(pi) != list(range(k)) and all(dims[pi[f]] == dims[f] for f in range(k))]
    if perms:
        maps = np.stack([m for m in maps
                         if all(_lex_le(m, _relabel(m[:, list(pi)])) for pi in perms)])
    maps.setflags(write=False)
    return maps


def _relabel(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    for f in range(m.shape[1]):
        seen: dict[int, int] = {}
        for s, v in enumerate(m[:, f]):
            out[s, f] = seen.setdefault(int(v), len(seen))
    return out


def _lex_le(a: np.ndarray, b: np.ndarray) -> bool:
    return tuple(a.ravel()) <= tuple(b.ravel())


def _local_search(p: np.ndarray, dims, rng: np.random.Generator, restarts: int = 8) -> list[np.ndarray]:
    """Swap-based descent on the worst-sample defect from random starts."""
    n = dims_product(dims)
    base = CpsCandidate.natural(dims).index_map
    results = []
    for r in range(restarts):
        perm = np.arange(n) if r == 0 else rng.permutation(n)
        m = base[perm]
        best = _defects(p, m[None], dims).max()
        improved = True
        while improved:
            improved = False
            swaps = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if not np.array_equal(m[i], m[j])]
            trial = np.repeat(m[None], len(swaps), axis=0)
            for t, (i, j) in enumerate(swaps):
                trial[t, [i, j]] = trial[t, [j, i]]
            vals = _defects(p, trial, dims).max(axis=1)
            t = int(np.argmin(vals))
            if vals[t] < best - 1e-15:
                best, m, improved = vals[t], trial[t], True
        results.append(_relabel(m))
    return results


@dataclass(frozen=True)
class CpsRecovery:
    candidates: list[CpsCandidate] = field(default_factory=list)
    reason: str | None = None
    exact_tol: float = EXACT_TOL

    @property
    def exact(self) -> list[CpsCandidate]:
        return [c for c in self.candidates if c.violation <= self.exact_tol]

    @property
    def best(self) -> CpsCandidate | None:
        return self.candidates[0] if self.candidates else None

    def __len__(self) -> int:
        return len(self.candidates)


def recover_cps(samples: SampleSet, exact_tol: float = EXACT_TOL, seed: int = 0) -> CpsRecovery:
    """Rank candidate product structures by their worst-sample defect.

    Every nontrivial factorization of ``|S|`` is tried. Up to ``|S| = 9`` all
    digit assignments (up to relabelling) are scored; for ``|S|`` of 10 to 12
    a seeded swap-descent heuristic proposes candidates instead.
    """
    size = samples.space_size
    if size > SEARCH_LIMIT:
        raise TooLargeError(f"|S| = {size} exceeds the search limit {SEARCH_LIMIT}")
    dims_list = [d for d in factorizations(size) if len(d) > 1] if size >= 2 else []
    if not dims_list:
        return CpsRecovery([], "prime size" if size >= 2 else "trivial size", exact_tol)
    p = samples.samples
    rng = np.random.default_rng(seed)
    cands: list[CpsCandidate] = []
    for dims in dims_list:
        if size <= EXHAUSTIVE_LIMIT:
            maps = _canonical_maps(dims)
        else:
            maps = np.stack(_local_search(p, dims, rng))
        viol = _defects(p, maps, dims).max(axis=1)
        cands.extend(CpsCandidate(dims, m, float(v)) for m, v in zip(maps, viol))
    cands.sort(key=lambda c: (round(c.violation, 15), len(c.dims), c.dims, tuple(c.index_map.ravel())))
    return CpsRecovery(cands, None, exact_tol)
