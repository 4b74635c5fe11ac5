"""Worker partition assignments and the shared-seed protocol.

Every random stream is a Philox counter-based generator whose 128-bit key is
built directly from ``(master_seed, tag, worker, epoch)``::

    key[0] = master_seed
    key[1] = tag << 56 | worker << 32 | epoch

The packing is injective for ``epoch < 2**32``, ``worker < 2**24`` and
``tag < 2**8``, and there is no sequential dependence between epochs, so any
process holding the master seed can rebuild any epoch's permutation.
These constants are part of the reproducibility contract.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SchemeKind",
    "Tag",
    "SeedProtocol",
    "PartitionAssignment",
    "DivisibilityError",
    "assign",
    "simulate_coordination_free",
    "records_moved",
    "derive_seed",
]

_EPOCH_LIMIT = 1 << 32
_WORKER_LIMIT = 1 << 24
_SEED_LIMIT = 1 << 64


class SchemeKind(enum.Enum):
    """How records are spread over workers at each repartition epoch."""

    PropSWOR = "prop-swor"
    SWOR = "swor"
    PropSWR = "prop-swr"
    DeterministicShuffle = "deterministic-shuffle"

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown scheme {value!r}; choose from {[m.value for m in cls]}")

    @property
    def proportional(self) -> bool:
        return self is not SchemeKind.SWOR


class Tag(enum.IntEnum):
    """Stream identifiers. Values are frozen; do not renumber."""

    X = 1
    Z = 2
    POOLED = 3
    PAIRS = 4
    SGD = 5
    MONITOR = 6
    DATA = 7
    EVAL = 8


class DivisibilityError(ValueError):
    """A proportional scheme was asked to split sizes that N does not divide."""


def derive_seed(master_seed: int, *path: int) -> int:
    """Child 64-bit seed of ``master_seed`` along an integer path.

    Used for the Monte Carlo seed tree: ``derive_seed(master, run_index)``
    gives the seed of one replication.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SeedProtocol:
    """Deterministic map from ``(epoch, tag, worker)`` to a random stream."""

    master_seed: int

    def __post_init__(self):
        s = int(self.master_seed)
        if not 0 <= s < _SEED_LIMIT:
            raise ValueError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        object.__setattr__(self, "master_seed", s)

    def key(self, epoch: int, tag: Tag, worker: int = 0) -> tuple[int, int]:
        if not 0 <= epoch < _EPOCH_LIMIT:
            raise ValueError(f"epoch must lie in [0, 2**32), got {epoch}")
        if not 0 <= worker < _WORKER_LIMIT:
            raise ValueError(f"worker id must lie in [0, 2**24), got {worker}")
        return self.master_seed, (int(tag) << 56) | (int(worker) << 32) | int(epoch)

    def generator(self, epoch: int, tag: Tag, worker: int = 0) -> np.random.Generator:
        k0, k1 = self.key(epoch, tag, worker)
        return np.random.Generator(np.random.Philox(key=np.array([k0, k1], dtype=np.uint64)))


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PartitionAssignment:
    """Per-worker index sets into ``xs`` and ``zs`` at one epoch.

    Index arrays are sorted, read-only and zero-based. Under prop-SWR an index
    may repeat, both within and across workers.
    """

    epoch: int
    scheme: SchemeKind
    n: int
    m: int
    x_indices: tuple
    z_indices: tuple
    _blocks: tuple | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return len(self.x_indices)

    @property
    def per_worker(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.x_indices, self.z_indices))

    def blocks(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(N, n_i)`` and ``(N, m_i)`` index arrays when every worker has equal sizes."""
        if self._blocks is not None:
            return self._blocks
        sx = {len(a) for a in self.x_indices}
        sz = {len(b) for b in self.z_indices}
        if len(sx) != 1 or len(sz) != 1:
            return None
        return np.stack(self.x_indices), np.stack(self.z_indices)

    def sizes(self) -> list[tuple[int, int]]:
        return [(len(a), len(b)) for a, b in self.per_worker]

    def pair_counts(self) -> np.ndarray:
        return np.array([len(a) * len(b) for a, b in self.per_worker], dtype=np.int64)

    def to_bytes(self) -> bytes:
        parts = [f"{self.scheme.value}|{self.epoch}|{self.n}|{self.m}|{self.N}".encode()]
        for a, b in self.per_worker:
            parts += [np.int64(len(a)).tobytes(), a.tobytes(), np.int64(len(b)).tobytes(), b.tobytes()]
        return b"".join(parts)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, PartitionAssignment) and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())


def _require_divisible(n: int, m: int, N: int) -> None:
    if n % N or m % N:
        raise DivisibilityError(
            f"N={N} must divide both n={n} and m={m}; truncate the dataset to a divisible size"
        )


def _split_sorted(arr2d: np.ndarray) -> tuple:
    block = _frozen(np.sort(arr2d, axis=1))
    return tuple(block), block


def assign(
    scheme: SchemeKind,
    n: int,
    m: int,
    N: int,
    protocol: SeedProtocol,
    epoch: int,
) -> PartitionAssignment:
    """Partition ``n`` X records and ``m`` Z records over ``N`` workers.

    Parameters
    ----------
    scheme : SchemeKind
        * ``PropSWOR``: independent uniform permutations of the X and Z indices
          are cut into ``N`` equal blocks.
        * ``SWOR``: one uniform permutation of the pooled ``n + m`` records is cut
          into ``N`` equal blocks, so per-worker class counts are random.
        * ``PropSWR``: every worker draws ``n/N`` X indices and ``m/N`` Z indices
          uniformly with replacement.
        * ``DeterministicShuffle``: X record ``k`` goes to worker
          ``(k + epoch) mod N`` and Z record ``l`` to worker ``l mod N``.
    n, m, N : int
        Sample sizes and number of workers.
    protocol : SeedProtocol
        Source of all randomness.
    epoch : int
        Repartition epoch.

    Raises
    ------
    DivisibilityError
        If a proportional scheme gets sizes not divisible by ``N``, or SWOR
        gets ``n + m`` not divisible by ``N``.
    """
    scheme = SchemeKind.parse(scheme)
    n, m, N, epoch = int(n), int(m), int(N), int(epoch)
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if n < 1 or m < 1:
        raise ValueError(f"sample sizes must be positive, got n={n}, m={m}")
    if epoch < 0:
        raise ValueError(f"epoch must be nonnegative, got {epoch}")

    if scheme is SchemeKind.PropSWOR:
        _require_divisible(n, m, N)
        px = protocol.generator(epoch, Tag.X).permutation(n).reshape(N, n // N)
        pz = protocol.generator(epoch, Tag.Z).permutation(m).reshape(N, m // N)
        (xs, bx), (zs, bz) = _split_sorted(px), _split_sorted(pz)
        blocks = (bx, bz)
    elif scheme is SchemeKind.PropSWR:
        _require_divisible(n, m, N)
        px = protocol.generator(epoch, Tag.X).integers(0, n, size=(N, n // N))
        pz = protocol.generator(epoch, Tag.Z).integers(0, m, size=(N, m // N))
        (xs, bx), (zs, bz) = _split_sorted(px), _split_sorted(pz)
        blocks = (bx, bz)
    elif scheme is SchemeKind.SWOR:
        if (n + m) % N:
            raise DivisibilityError(f"N={N} must divide n+m={n + m} for SWOR blocks")
        perm = protocol.generator(epoch, Tag.POOLED).permutation(n + m).reshape(N, -1)
        xs = tuple(_frozen(np.sort(row[row < n])) for row in perm)
        zs = tuple(_frozen(np.sort(row[row >= n] - n)) for row in perm)
        blocks = None
    else:
        _require_divisible(n, m, N)
        kx = np.arange(n)
        kz = np.arange(m)
        ox = (kx + epoch) % N
        oz = kz % N
        xs = tuple(_frozen(kx[ox == i]) for i in range(N))
        zs = tuple(_frozen(kz[oz == i]) for i in range(N))
        blocks = None
    return PartitionAssignment(epoch, scheme, n, m, xs, zs, blocks)


def simulate_coordination_free(
    workers: int,
    protocol: SeedProtocol,
    epoch: int,
    n: int,
    m: int,
    N: int,
    scheme: SchemeKind = SchemeKind.PropSWOR,
) -> bool:
    """Check that independent workers derive the same assignment.

    Each simulated worker rebuilds the protocol from the master seed alone and
    calls :func:`assign`; the result is true iff all byte encodings agree and
    satisfy the proportional size contract.
    """
    encodings = set()
    for _ in range(int(workers)):
        local = SeedProtocol(int(protocol.master_seed))
        a = assign(scheme, n, m, N, local, epoch)
        if scheme is SchemeKind.PropSWOR and any(s != (n // N, m // N) for s in a.sizes()):
            return False
        encodings.add(a.to_bytes())
    return len(encodings) == 1


def _moved(prev_sets, next_sets, size: int) -> int:
    moved = 0
    for a, b in zip(prev_sets, next_sets):
        ca = np.bincount(a, minlength=size)
        cb = np.bincount(b, minlength=size)
        moved += int(np.maximum(cb - ca, 0).sum())
    return moved


def records_moved(prev: PartitionAssignment | None, next: PartitionAssignment) -> int:
    """Number of records a repartition ships to a new worker.

    For each worker, count the records (multiset draws under prop-SWR) it holds
    in ``next`` that it did not hold in ``prev``. With ``prev=None`` this is the
    initial distribution, which ships every record once.

    Raises
    ------
    ValueError
        If the two assignments describe different ``(n, m, N)``.
    """
    if prev is None:
        return int(sum(len(a) + len(b) for a, b in next.per_worker))
    if (prev.n, prev.m, prev.N) != (next.n, next.m, next.N):
        raise ValueError(
            f"shape mismatch: {(prev.n, prev.m, prev.N)} vs {(next.n, next.m, next.N)}"
        )
    return _moved(prev.x_indices, next.x_indices, next.n) + _moved(
        prev.z_indices, next.z_indices, next.m
    )
