"""Pool of released (clean) qubits and non-dominated reuse choices.

The pool is kept sorted by release depth, deepest first, ties by qubit id.
Reusing ``k`` qubits costs the depth of the deepest qubit taken, so among all
``k``-subsets only contiguous windows of the sorted pool are worth trying:
any other subset is matched or beaten by the window ending at its deepest
member, which additionally keeps shallower qubits free for later nodes.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class PoolEntry:
    qubit: int
    depth: int


def _key(e: PoolEntry):
    return (-e.depth, e.qubit)


@dataclass(frozen=True)
class AuxPool:
    entries: tuple[PoolEntry, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.entries, key=_key))
        object.__setattr__(self, "entries", ordered)
        if len({e.qubit for e in ordered}) != len(ordered):
            raise ValueError("pool qubit ids must be unique")

    @classmethod
    def of(cls, depths: dict[int, int] | list) -> "AuxPool":
        if isinstance(depths, dict):
            return cls(tuple(PoolEntry(q, d) for q, d in depths.items()))
        return cls(tuple(PoolEntry(q, d) for q, d in enumerate(depths)))

    def __len__(self):
        return len(self.entries)

    @property
    def depths(self) -> tuple[int, ...]:
        return tuple(e.depth for e in self.entries)

    def take(self, chosen) -> "AuxPool":
        drop = set(chosen)
        missing = drop - set(self.entries)
        if missing:
            raise ValueError(f"entries not in pool: {sorted(missing)}")
        return AuxPool(tuple(e for e in self.entries if e not in drop))

    def give(self, qubits, depth: int) -> "AuxPool":
        return AuxPool(self.entries + tuple(PoolEntry(q, depth) for q in qubits))


@dataclass(frozen=True)
class ReuseChoice:
    entries: tuple[PoolEntry, ...] = ()

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def depth(self) -> int:
        """Depth the node must wait for (0 when nothing is reused)."""
        return max((e.depth for e in self.entries), default=0)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(e.qubit for e in self.entries)


def reuse_bounds(aux: int, pool_size: int, n_phys: int, num_functional: int,
                 max_width: int | None) -> tuple[int, int]:
    """Range of pool qubits a node needing ``aux`` scratch qubits may reuse.

    ``n_phys`` counts scratch qubits created so far (pooled ones included), so
    ``max_width - num_functional - n_phys`` is how many fresh qubits may still
    be created.  ``k_min > k_max`` signals that the width cap cannot be met.
    """
    k_max = min(pool_size, aux)
    if max_width is None:
        return 0, k_max
    slack = max_width - num_functional - n_phys
    return max(0, aux - slack), k_max


def nondominated_choices(pool: AuxPool, k: int) -> list[ReuseChoice]:
    """Contiguous windows of length ``k`` in the sorted pool, shallowest first."""
    if k < 0 or k > len(pool):
        raise ValueError(f"cannot reuse {k} qubits from a pool of {len(pool)}")
    if k == 0:
        return [ReuseChoice()]
    e = pool.entries
    return [ReuseChoice(e[i:i + k]) for i in range(len(e) - k, -1, -1)]


@dataclass(frozen=True)
class ReuseResult:
    start: int
    end: int
    pool: AuxPool
    n_phys: int
    qubits: tuple[int, ...]  # reused first, then freshly created


def apply_reuse(choice: ReuseChoice, pool: AuxPool, dep_depth: int, node_depth: int, aux: int,
                n_phys: int, first_new_qubit: int, release: bool = True) -> ReuseResult:
    """Place a node: start after its dependencies and the reused qubits.

    ``aux - k`` fresh qubits are numbered from ``first_new_qubit``.  With
    ``release`` the node's scratch qubits go back to the pool at its end
    (library nodes); scratch allocations keep them.
    """
    start = max(dep_depth, choice.depth)
    end = start + node_depth
    fresh = tuple(range(first_new_qubit, first_new_qubit + aux - choice.k))
    qubits = choice.qubits + fresh
    new_pool = pool.take(choice.entries)
    if release:
        new_pool = new_pool.give(qubits, end)
    return ReuseResult(start, end, new_pool, n_phys + len(fresh), qubits)
