"""Set partitions of the subsystem index set and the coarse-graining order.

Orientation of the order: ``S <= S'`` ("S is coarser than S'") iff ``S'``
refines ``S``. The *maximal* members of a family are therefore its finest
partitions; for the family of partitions a state is separable with respect
to, the maximal members determine all the others (everything coarser).

Partitions are written with 1-based subsystem labels, e.g. ``"1|23"``.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import ShapeError, TooLargeError

if TYPE_CHECKING:
    from .states import SeparabilityVerdict, State
    from .tps import TpsSpec

MAX_ENUMERATION = 10


@dataclass(frozen=True)
class Partition:
    """Partition of ``{0, ..., ground_size - 1}`` in canonical form.

    Blocks are sorted tuples, ordered by their least element, so equal
    partitions compare equal and hash alike.
    """

    ground_size: int
    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, ground_size: int, blocks: Iterable[Iterable[int]]):
        blks = [tuple(sorted(int(i) for i in b)) for b in blocks]
        if any(not b for b in blks):
            raise ShapeError("partition blocks must be non-empty")
        flat = [i for b in blks for i in b]
        if sorted(flat) != list(range(ground_size)):
            raise ShapeError(
                f"blocks {blks} do not partition {{0..{ground_size - 1}}}")
        object.__setattr__(self, "ground_size", int(ground_size))
        object.__setattr__(self, "blocks", tuple(sorted(blks, key=lambda b: b[0])))

    @classmethod
    def parse(cls, text: str, ground_size: int | None = None) -> "Partition":
        """Parse ``"1|23"`` or ``"1,2|3"`` (1-based labels)."""
        parts = [p.strip() for p in text.strip().strip("{}").split("|")]
        blocks = []
        for p in parts:
            items = p.split(",") if "," in p else list(p)
            blocks.append([int(x) - 1 for x in items if x.strip()])
        n = ground_size if ground_size is not None else sum(len(b) for b in blocks)
        return cls(n, blocks)

    @classmethod
    def finest(cls, n: int) -> "Partition":
        return cls(n, [[i] for i in range(n)])

    @classmethod
    def coarsest(cls, n: int) -> "Partition":
        return cls(n, [range(n)])

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self, i: int) -> tuple[int, ...]:
        for b in self.blocks:
            if i in b:
                return b
        raise KeyError(i)

    def __str__(self) -> str:
        sep = "" if self.ground_size <= 9 else ","
        return "|".join(sep.join(str(i + 1) for i in b) for b in self.blocks)

    def __repr__(self) -> str:
        return f"Partition({self})"


@dataclass(frozen=True)
class PartitionFamily:
    ground_size: int
    members: tuple[Partition, ...] = field(default=())

    def __post_init__(self):
        seen = set()
        for p in self.members:
            if p.ground_size != self.ground_size:
                raise ShapeError("family members must share the ground set")
            if p in seen:
                raise ValueError(f"duplicate partition {p} in family")
            seen.add(p)

    def __iter__(self) -> Iterator[Partition]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, p) -> bool:
        return p in self.members


def restricted_growth_strings(n: int) -> Iterator[list[int]]:
    """All restricted growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield []
        return
    a = [0] * n

    def rec(i: int, m: int):
        if i == n:
            yield list(a)
            return
        for v in range(m + 2):
            a[i] = v
            yield from rec(i + 1, max(m, v))

    a[0] = 0
    yield from rec(1, 0)


def enumerate_partitions(n: int) -> PartitionFamily:
    """Every partition of an ``n``-set; there are Bell(n) of them."""
    if not 1 <= n <= MAX_ENUMERATION:
        raise TooLargeError(f"n must lie in [1, {MAX_ENUMERATION}], got {n}")
    out = []
    for rgs in restricted_growth_strings(n):
        blocks: dict[int, list[int]] = {}
        for i, b in enumerate(rgs):
            blocks.setdefault(b, []).append(i)
        out.append(Partition(n, blocks.values()))
    return PartitionFamily(n, tuple(out))


def _same_ground(a: Partition, b: Partition) -> None:
    if a.ground_size != b.ground_size:
        raise ShapeError(f"ground sets differ: {a.ground_size} vs {b.ground_size}")


def refines(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of ``fine`` sits inside a block of ``coarse``."""
    _same_ground(fine, coarse)
    owner = {i: k for k, b in enumerate(coarse.blocks) for i in b}
    return all(len({owner[i] for i in b}) == 1 for b in fine.blocks)


def maximal_members(family: PartitionFamily | Sequence[Partition]) -> PartitionFamily:
    """Members not strictly refined by another member (the finest ones)."""
    members = list(family)
    if not members:
        n = family.ground_size if isinstance(family, PartitionFamily) else 0
        return PartitionFamily(n, ())
    keep = [p for p in members
            if not any(q != p and refines(q, p) for q in members)]
    return PartitionFamily(members[0].ground_size, tuple(keep))


def meet(a: Partition, b: Partition) -> Partition:
    """Common refinement: non-empty pairwise block intersections."""
    _same_ground(a, b)
    blocks = [set(x) & set(y) for x in a.blocks for y in b.blocks]
    return Partition(a.ground_size, [bl for bl in blocks if bl])


def join(a: Partition, b: Partition) -> Partition:
    """Finest common coarsening: connected components of block overlaps."""
    _same_ground(a, b)
    parent = list(range(a.ground_size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for blk in a.blocks + b.blocks:
        r = find(blk[0])
        for i in blk[1:]:
            parent[find(i)] = r
    comps: dict[int, list[int]] = {}
    for i in range(a.ground_size):
        comps.setdefault(find(i), []).append(i)
    return Partition(a.ground_size, comps.values())


def partition_meet_join(a: Partition, b: Partition) -> tuple[Partition, Partition]:
    return meet(a, b), join(a, b)


def bipartitions(p: Partition) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every split of ``p``'s blocks into two non-empty groups, as factor sets.

    The group holding the first block is always on the left, so each unordered
    split appears once.
    """
    m = p.num_blocks
    for mask in range(1 << (m - 1)):
        left = [p.blocks[0]] + [p.blocks[j] for j in range(1, m) if mask >> (j - 1) & 1]
        right = [p.blocks[j] for j in range(1, m) if not mask >> (j - 1) & 1]
        if right:
            yield (tuple(sorted(i for b in left for i in b)),
                   tuple(sorted(i for b in right for i in b)))


@dataclass(frozen=True)
class PiOfState:
    """Partitions a state is separable with respect to.

    ``family`` holds the partitions with a ``product`` or ``separable``
    verdict; partitions whose verdict came back ``undetermined`` are kept
    apart in ``undetermined`` and never mixed into ``family``.
    """

    family: PartitionFamily
    undetermined: tuple[Partition, ...]
    verdicts: dict

    @property
    def maximal(self) -> PartitionFamily:
        return maximal_members(self.family)


def pi_of_state(rho: "State", tps: "TpsSpec", **kwargs) -> PiOfState:
    """Brute-force the separability verdict for every partition of the factors.

    Extra keyword arguments go to :func:`locus_forge.states.is_sigma_separable`.
    """
    from .states import is_sigma_separable

    k = len(tps.dims)
    if k > MAX_ENUMERATION:
        raise TooLargeError(f"{k} factors exceed the enumeration limit {MAX_ENUMERATION}")
    good, unknown = [], []
    verdicts: dict[Partition, "SeparabilityVerdict"] = {}
    for sigma in enumerate_partitions(k):
        v = is_sigma_separable(rho, tps, sigma, **kwargs)
        verdicts[sigma] = v
        if v.value in ("product", "separable"):
            good.append(sigma)
        elif v.value == "undetermined":
            unknown.append(sigma)
    return PiOfState(PartitionFamily(k, tuple(good)), tuple(unknown), verdicts)
