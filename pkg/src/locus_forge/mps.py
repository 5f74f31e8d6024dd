"""Virtual multipartite structures (MPS) and loci recovery.

An :class:`Mps` is a labelled collection of unital subalgebras of ``M_n``,
each closed under the double commutant. Loci may overlap and need not
generate the whole matrix algebra.

Separability of a state with respect to an MPS is the factorization of
expectation values, ``rho(a b) = rho(a) rho(b)``, for ``a`` and ``b`` taken
from different loci. Both sides are bilinear in ``(a, b)``, so it suffices to
test pairs of basis elements; the same holds slot by slot for the multiway
variant ``rho(a_1 ... a_k) = rho(a_1) ... rho(a_k)``.

The quantification "over all MPSs" is replaced by an explicit, finite
:class:`MpsCatalog`; all results are relative to the catalog supplied.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from . import algebra as alg
from .algebra import OperatorAlgebra
from .errors import AlgebraError, EmptyJoinError, ShapeError

if TYPE_CHECKING:
    from .states import State, StateSet

EPS_REL = 1e-8
MODES = ("pairwise", "multiway")


@dataclass(frozen=True, eq=False)
class Mps:
    ambient_dim: int
    loci: Mapping[str, OperatorAlgebra]
    provenance: Any = None

    def __post_init__(self):
        loci = dict(self.loci)
        for label, a in loci.items():
            if a.ambient_dim != self.ambient_dim:
                raise ShapeError(f"locus {label!r} lives in M_{a.ambient_dim}, "
                                 f"expected M_{self.ambient_dim}")
        object.__setattr__(self, "loci", {k: v.with_label(k) for k, v in loci.items()})

    @classmethod
    def from_algebras(cls, algebras: Iterable[OperatorAlgebra], provenance: Any = None) -> "Mps":
        algs = list(algebras)
        if not algs:
            raise ValueError("an MPS needs at least one locus")
        labels = [a.label if a.label is not None else str(i) for i, a in enumerate(algs)]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate locus labels {labels}")
        return cls(algs[0].ambient_dim, dict(zip(labels, algs)), provenance)

    @property
    def labels(self) -> list[str]:
        return list(self.loci)

    @property
    def algebras(self) -> list[OperatorAlgebra]:
        return list(self.loci.values())

    def __len__(self) -> int:
        return len(self.loci)

    def conjugate(self, u) -> "Mps":
        return Mps(self.ambient_dim, {k: a.conjugate(u) for k, a in self.loci.items()},
                   self.provenance)

    def same_algebras(self, other: "Mps") -> bool:
        """Equality of the locus sets, ignoring labels and order."""
        return _algebra_set_equal(self.algebras, other.algebras)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}:{a.dim}" for k, a in self.loci.items())
        return f"Mps(n={self.ambient_dim}, loci={{{body}}})"


def _algebra_set_equal(xs: Sequence[OperatorAlgebra], ys: Sequence[OperatorAlgebra]) -> bool:
    def covered(a, bs):
        return any(alg.equal(a, b) for b in bs)
    return all(covered(a, ys) for a in xs) and all(covered(b, xs) for b in ys)


@dataclass(frozen=True)
class MpsValidity:
    ok: bool
    diagnostics: str = ""
    failing_locus: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_valid_mps(candidate: Mps | Mapping[str, OperatorAlgebra] | Sequence[OperatorAlgebra],
                 eps: float = alg.CLOSURE_TOL) -> MpsValidity:
    """Check every locus: shared ambient, unital *-algebra, double-commutant closed."""
    if isinstance(candidate, Mps):
        items = list(candidate.loci.items())
    elif isinstance(candidate, Mapping):
        items = list(candidate.items())
    else:
        items = [(a.label if a.label is not None else str(i), a) for i, a in enumerate(candidate)]
    if not items:
        return MpsValidity(False, "no loci")
    labels = [k for k, _ in items]
    if len(set(labels)) != len(labels):
        return MpsValidity(False, f"duplicate labels {labels}")
    n = items[0][1].ambient_dim
    for label, a in items:
        if a.ambient_dim != n:
            return MpsValidity(False, f"locus {label!r}: ambient {a.ambient_dim} != {n}", label)
        try:
            alg.check_invariants(a, eps)
        except AlgebraError as exc:
            return MpsValidity(False, f"locus {label!r}: {exc}", label)
        if not alg.equal(alg.double_commutant(a), a, eps):
            return MpsValidity(False, f"locus {label!r}: not closed under double commutant", label)
    return MpsValidity(True, "all loci valid")


def _same_ambient(p: Mps, q: Mps) -> None:
    if p.ambient_dim != q.ambient_dim:
        raise ShapeError(f"ambient dimensions differ: {p.ambient_dim} vs {q.ambient_dim}")


def coarser(p: Mps, q: Mps) -> bool:
    """``p <= q``: the loci of ``q`` can be grouped so each group lands in one locus of ``p``.

    A group fits inside an algebra of ``p`` exactly when each of its members
    does (an algebra contains the algebra generated by its subsets), so the
    search over groupings reduces to: every locus of ``q`` lies in some locus
    of ``p``. Grouping the ``q``-loci by the chosen ``p``-locus then uses each
    ``p``-locus for at most one group.
    """
    _same_ambient(p, q)
    return all(any(alg.is_subalgebra(b, a) for a in p.algebras) for b in q.algebras)


def _join_pair(left: list[tuple[str, OperatorAlgebra]], right: Mps) -> list[tuple[str, OperatorAlgebra]]:
    out: list[tuple[str, OperatorAlgebra]] = []
    for (la, a), (lb, b) in itertools.product(left, right.loci.items()):
        c = alg.intersect(a, b)
        if any(alg.equal(c, d) for _, d in out):
            continue
        if alg.equal(c, a):
            label = la
        elif alg.equal(c, b):
            label = lb
        else:
            label = f"{la}&{lb}"
        out.append((label, c))
    return out


def join(members: Sequence[Mps], provenance: Any = None) -> Mps:
    """Least upper bound: all intersections of one locus from each member.

    Intersections are folded member by member, removing duplicates as they
    appear; the set of algebras obtained equals the set of all ``r``-fold
    intersections. An intersection equal to one of its inputs keeps that
    input's label; otherwise the source labels are joined with ``&``.

    A scalar-only intersection lies inside every algebra, so it is dropped
    whenever a non-degenerate intersection survives; this is what makes
    ``join([p, p])`` equal ``p``. When every intersection is scalar the
    result is that single degenerate locus (see
    ``OperatorAlgebra.degenerate``).
    """
    members = list(members)
    if not members:
        raise EmptyJoinError("join of an empty list")
    n = members[0].ambient_dim
    for m in members[1:]:
        _same_ambient(members[0], m)
    acc: list[tuple[str, OperatorAlgebra]] = []
    for label, a in members[0].loci.items():
        if not any(alg.equal(a, d) for _, d in acc):
            acc.append((label, a))
    for m in members[1:]:
        acc = _join_pair(acc, m)
    if len(members) > 1 and any(not a.degenerate for _, a in acc):
        acc = [(label, a) for label, a in acc if not a.degenerate]
    loci = {}
    for label, a in acc:
        while label in loci:
            label += "'"
        loci[label] = a
    return Mps(n, loci, provenance)


@dataclass(frozen=True)
class RelationResult:
    """Outcome of :func:`separability_relation`.

    ``max_defect`` is measured on HS-normalized basis elements. ``witness``
    describes the worst tuple; its ``observables`` are rescaled to operator
    norm one and ``gap`` is the defect for those rescaled observables.
    """

    holds: bool
    mode: str
    max_defect: float
    witness: dict[str, Any] | None = None

    def __bool__(self) -> bool:
        return self.holds


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, ord=2))


def _make_witness(rho, labels, mats) -> dict[str, Any]:
    scales = [_opnorm(m) for m in mats]
    obs = [m / s for m, s in zip(mats, scales)]
    prod_obs = obs[0]
    for o in obs[1:]:
        prod_obs = prod_obs @ o
    lhs = complex(np.einsum("ij,ji->", rho, prod_obs))
    rhs_terms = [complex(np.einsum("ij,ji->", rho, o)) for o in obs]
    rhs = complex(np.prod(rhs_terms))
    return {
        "loci": list(labels),
        "observables": obs,
        "joint_expectation": lhs,
        "marginal_expectations": rhs_terms,
        "gap": abs(lhs - rhs),
    }


def separability_relation(rho, p: Mps, mode: str = "pairwise", eps_rel: float = EPS_REL) -> RelationResult:
    """Test ``rho(a b) == rho(a) rho(b)`` across loci of ``p`` on basis elements.

    ``pairwise``: every ordered pair of distinct loci, every pair of basis
    elements. ``multiway``: one basis element per locus, the product taken in
    both the listed order and its reverse. Single-locus structures hold
    vacuously. The witness is the worst violating tuple (first one on ties).
    """
    from .states import State

    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    r = rho.rho if isinstance(rho, State) else np.asarray(rho, dtype=complex)
    if r.shape != (p.ambient_dim, p.ambient_dim):
        raise ShapeError(f"state of size {r.shape[0]} vs MPS ambient {p.ambient_dim}")
    labels = p.labels
    bases = [p.loci[k].basis for k in labels]
    if len(labels) < 2:
        return RelationResult(True, mode, 0.0)
    means = [np.einsum("ij,aji->a", r, b) for b in bases]
    worst, worst_val = None, -1.0
    if mode == "pairwise":
        for i, j in itertools.permutations(range(len(labels)), 2):
            # joint[a, b] = tr(rho A_a B_b)
            joint = np.einsum("ij,ajk,bki->ab", r, bases[i], bases[j])
            defect = np.abs(joint - np.outer(means[i], means[j]))
            # round before argmax so exact ties resolve to the first tuple
            k = int(np.argmax(np.round(defect, 12)))
            if defect.flat[k] > worst_val + 1e-12:
                a, b = np.unravel_index(k, defect.shape)
                worst_val = float(defect.flat[k])
                worst = ((labels[i], labels[j]), (bases[i][a], bases[j][b]))
    else:
        for order in (list(range(len(labels))), list(reversed(range(len(labels))))):
            for idx in itertools.product(*(range(len(bases[o])) for o in order)):
                mats = [bases[o][t] for o, t in zip(order, idx)]
                prod = mats[0]
                for m in mats[1:]:
                    prod = prod @ m
                lhs = np.einsum("ij,ji->", r, prod)
                rhs = np.prod([means[o][t] for o, t in zip(order, idx)])
                d = abs(lhs - rhs)
                if d > worst_val + 1e-12:
                    worst_val = float(d)
                    worst = (tuple(labels[o] for o in order), tuple(mats))
    holds = worst_val <= eps_rel
    witness = None
    if not holds:
        witness = _make_witness(r, worst[0], list(worst[1]))
    return RelationResult(holds, mode, max(worst_val, 0.0), witness)


@dataclass(frozen=True)
class MpsCatalog:
    ambient_dim: int
    members: tuple[Mps, ...]
    names: tuple[str, ...] = ()

    def __init__(self, members: Sequence[Mps], names: Sequence[str] | None = None):
        members = list(members)
        if not members:
            raise ValueError("catalog must be non-empty")
        n = members[0].ambient_dim
        names = list(names) if names is not None else [f"mps{i}" for i in range(len(members))]
        if len(names) != len(members):
            raise ValueError("one name per catalog member")
        kept, kept_names = [], []
        for m, nm in zip(members, names):
            if m.ambient_dim != n:
                raise ShapeError("catalog members must share the ambient dimension")
            if any(m.same_algebras(k) for k in kept):
                continue
            kept.append(m)
            kept_names.append(nm)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "members", tuple(kept))
        object.__setattr__(self, "names", tuple(kept_names))

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def items(self):
        return zip(self.names, self.members)


def trivial_mps(n: int, label: str = "all") -> Mps:
    """The single-locus structure ``{M_n}``."""
    return Mps(n, {label: alg.full_algebra(n)}, "trivial")


def scalar_mps(n: int, label: str = "scalars") -> Mps:
    return Mps(n, {label: alg.scalars(n)}, "no separating structure")


def generate_catalog(n: int, twists: int = 2, seed: int = 0, include_trivial: bool = True) -> MpsCatalog:
    """Structures from every factorization of ``n`` times a seeded set of frames.

    The identity frame is always included; ``twists`` further Haar-random
    unitaries are drawn from ``seed``.
    """
    from .numerics import random_unitary
    from .tps import TpsSpec, factorizations, tps_to_mps

    rng = np.random.default_rng(seed)
    frames = [np.eye(n, dtype=complex)] + [random_unitary(n, rng) for _ in range(twists)]
    members, names = [], []
    if include_trivial:
        members.append(trivial_mps(n))
        names.append("trivial")
    for dims in factorizations(n):
        if len(dims) == 1:
            continue
        for t, u in enumerate(frames):
            members.append(tps_to_mps(TpsSpec(dims, u)))
            names.append(f"{'x'.join(map(str, dims))}@{'id' if t == 0 else f'u{t}'}")
    return MpsCatalog(members, names)


def pi_over_catalog(rho, catalog: MpsCatalog, mode: str = "pairwise",
                    eps_rel: float = EPS_REL) -> list[tuple[str, Mps]]:
    """Catalog members (with their names) with respect to which ``rho`` is separable."""
    return [(nm, m) for nm, m in catalog.items()
            if separability_relation(rho, m, mode, eps_rel).holds]


@dataclass(frozen=True, eq=False)
class Recovery:
    mps: Mps
    contributions: tuple[tuple[str, str], ...]
    diagnostics: tuple[str, ...] = ()

    @property
    def fallback(self) -> bool:
        return not self.contributions


def recover_loci(available: "StateSet | Sequence[State]", catalog: MpsCatalog,
                 mode: str = "pairwise", eps_rel: float = EPS_REL) -> Recovery:
    """Join of every catalog member some available state is separable with respect to.

    When no state is separable with respect to any member the result is the
    single scalar locus, flagged in ``diagnostics``. ``contributions`` lists
    each contributing ``(state name, catalog name)`` pair.
    """
    states = list(available)
    if not states:
        raise ValueError("need at least one available state")
    contributing: list[tuple[str, str]] = []
    chosen: dict[str, Mps] = {}
    for i, st in enumerate(states):
        sname = getattr(st, "name", None) or f"state{i}"
        for nm, m in pi_over_catalog(st, catalog, mode, eps_rel):
            contributing.append((sname, nm))
            chosen.setdefault(nm, m)
    if not chosen:
        return Recovery(scalar_mps(catalog.ambient_dim), (),
                        ("no available state is separable with respect to any catalog member; "
                         "returning the scalar locus",))
    # join over the distinct members, in catalog order for stable labels
    ordered = [(nm, chosen[nm]) for nm in catalog.names if nm in chosen]
    joined = join([m for _, m in ordered], provenance={"joined": [nm for nm, _ in ordered]})
    diags = tuple(f"locus {k!r} is degenerate (scalars only)"
                  for k, a in joined.loci.items() if a.degenerate)
    return Recovery(joined, tuple(contributing), diags)


def mps_report(p: Mps) -> dict[str, Any]:
    """Per-locus summary: dimension, degeneracy, centre, qudit split, commutation."""
    from .tps import factor_side, prime_factors

    loci = []
    for label, a in p.loci.items():
        cen = alg.center(a)
        side = factor_side(a)
        if side is None:
            qudits, reason = None, "not a factor"
        elif side == 1:
            qudits, reason = None, "trivial locus"
        else:
            qudits = prime_factors(side)
            reason = "single prime-dimensional factor" if len(qudits) == 1 else "composite factor"
        loci.append({
            "label": label,
            "dim": a.dim,
            "degenerate": a.degenerate,
            "center_dim": cen.dim,
            "factor_side": side,
            "qudit_dims": qudits,
            "reconstruction": reason,
        })
    labels = p.labels
    table = {f"{x}|{y}": alg.commute(p.loci[x], p.loci[y])
             for x, y in itertools.combinations(labels, 2)}
    return {"ambient_dim": p.ambient_dim, "loci": loci, "commute": table}
