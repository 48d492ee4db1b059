"""
Non-crossing set partitions and the free moment-cumulant calculus.

Partitions are stored 1-based: a :class:`SetPartition` of ``{1, ..., n}`` holds
its blocks as sorted tuples, ordered by their minimum element, so structural
equality is partition equality.

Arithmetic follows the inputs: integers and :class:`fractions.Fraction` values
stay exact, floats stay floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .errors import CapacityError, DomainError, OracleError

__all__ = [
    "DEFAULT_CAP",
    "SetPartition",
    "PairPartition",
    "catalan",
    "narayana",
    "is_noncrossing",
    "enumerate_noncrossing",
    "enumerate_noncrossing_pairings",
    "kreweras_complement",
    "multiplicative_functional",
    "moments_to_free_cumulants",
    "free_cumulants_to_moments",
]

DEFAULT_CAP = 12


@dataclass(frozen=True)
class SetPartition:
    """A partition of ``{1, ..., n}`` in canonical block order."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"ground set size must be positive, got {self.n}")
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        if any(len(b) == 0 for b in blocks):
            raise DomainError("empty block")
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(1, self.n + 1)):
            raise DomainError(f"blocks {blocks} do not partition {{1..{self.n}}}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "SetPartition":
        """Build from a restricted-growth string (0-based labels)."""
        groups: dict[int, list[int]] = {}
        for i, label in enumerate(rgs, start=1):
            groups.setdefault(label, []).append(i)
        return cls(len(rgs), tuple(tuple(g) for g in groups.values()))

    def rgs(self) -> tuple[int, ...]:
        out = [0] * self.n
        for label, block in enumerate(self.blocks):
            for i in block:
                out[i - 1] = label
        return tuple(out)

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self) -> tuple[int, ...]:
        """Block index (0-based) of every element, as a tuple indexed by element - 1."""
        return self.rgs()

    def rotate(self, shift: int = 1) -> "SetPartition":
        """Relabel ``i -> i + shift (mod n)``."""
        n = self.n
        return SetPartition(n, tuple(tuple((i - 1 + shift) % n + 1 for i in b) for b in self.blocks))

    def is_noncrossing(self) -> bool:
        return is_noncrossing(self.blocks)

    def __str__(self) -> str:
        return "{" + ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


class PairPartition(SetPartition):
    """A set partition all of whose blocks have exactly two elements."""

    def __post_init__(self):
        super().__post_init__()
        if self.n % 2 or any(len(b) != 2 for b in self.blocks):
            raise DomainError(f"{self.blocks} is not a pair partition")


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def narayana(n: int, k: int) -> int:
    """Number of non-crossing partitions of ``{1..n}`` with ``k`` blocks."""
    if not 1 <= k <= n:
        return 0
    return math.comb(n, k) * math.comb(n, k - 1) // n


def is_noncrossing(blocks: Iterable[Sequence[int]]) -> bool:
    """Brute-force check: no ``a < b < c < d`` with ``a, c`` in one block and ``b, d`` in another."""
    blocks = [sorted(b) for b in blocks]
    for x, bx in enumerate(blocks):
        for by in blocks[x + 1:]:
            for a in bx:
                for c in bx:
                    if c <= a:
                        continue
                    inside = any(a < b < c for b in by)
                    outside = any(b < a or b > c for b in by)
                    if inside and outside:
                        return False
    return True


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapacityError(f"n={n} exceeds the enumeration cap {cap}")


def enumerate_noncrossing(n: int, cap: int = DEFAULT_CAP) -> tuple[SetPartition, ...]:
    """
    All non-crossing partitions of ``{1..n}``.

    The order is lexicographic in the restricted-growth string, and the count
    is the Catalan number ``C_n``.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    _check_cap(n, cap)
    return _enumerate_noncrossing(n)


@lru_cache(maxsize=None)
def _enumerate_noncrossing(n: int) -> tuple[SetPartition, ...]:
    out: list[SetPartition] = []
    rgs = [0] * n

    # `stack` holds the labels of blocks that may still receive elements,
    # innermost last. Joining block b closes every block opened above it.
    def rec(i: int, nblocks: int, stack: tuple[int, ...]):
        if i == n:
            out.append(SetPartition.from_rgs(rgs))
            return
        for label in range(nblocks + 1):
            if label == nblocks:
                rgs[i] = label
                rec(i + 1, nblocks + 1, stack + (label,))
            elif label in stack:
                rgs[i] = label
                pos = stack.index(label)
                rec(i + 1, nblocks, stack[: pos + 1])

    rgs[0] = 0
    rec(1, 1, (0,))
    return tuple(out)


def enumerate_noncrossing_pairings(m: int, cap: int = DEFAULT_CAP) -> tuple[PairPartition, ...]:
    """All non-crossing pair partitions of ``{1..m}``; ``m`` must be even."""
    if m < 1 or m % 2:
        raise DomainError(f"pairings need an even positive ground set, got m={m}")
    _check_cap(m // 2, cap)
    return _enumerate_pairings(m)


@lru_cache(maxsize=None)
def _enumerate_pairings(m: int) -> tuple[PairPartition, ...]:
    out: list[PairPartition] = []
    rgs = [0] * m

    # Same stack discipline as above; a pair closes as soon as it gets its
    # second element, so only the innermost open block can be joined.
    def rec(i: int, nblocks: int, stack: tuple[int, ...]):
        if i == m:
            if not stack:
                out.append(PairPartition(m, SetPartition.from_rgs(rgs).blocks))
            return
        if len(stack) > m - i:
            return
        if stack:
            rgs[i] = stack[-1]
            rec(i + 1, nblocks, stack[:-1])
        rgs[i] = nblocks
        rec(i + 1, nblocks + 1, stack + (nblocks,))

    rec(0, 0, ())
    out.sort(key=lambda p: p.rgs())
    return tuple(out)


def kreweras_complement(pi: SetPartition) -> SetPartition:
    """
    Kreweras complement via the interleaving ``1 1' 2 2' ... n n'``.

    Two primed points ``j' < k'`` share a block exactly when the chord
    between them crosses no block of ``pi``, i.e. every block of ``pi``
    meeting ``{j+1, ..., k}`` lies inside it. Joining all such pairs gives
    the complement; the scan is O(n^2).
    """
    if not pi.is_noncrossing():
        raise DomainError(f"{pi} is crossing; the Kreweras complement needs a non-crossing partition")
    n = pi.n
    label = pi.rgs()
    sizes = [len(b) for b in pi.blocks]

    parent = list(range(n + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in range(1, n + 1):
        seen = [0] * len(sizes)
        incomplete = 0
        for k in range(j + 1, n + 1):
            b = label[k - 1]
            if seen[b] == 0:
                incomplete += 1
            seen[b] += 1
            if seen[b] == sizes[b]:
                incomplete -= 1
            if incomplete == 0:
                parent[find(k)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(1, n + 1):
        groups.setdefault(find(i), []).append(i)
    return SetPartition(n, tuple(tuple(g) for g in groups.values()))


def multiplicative_functional(pi: SetPartition, values: Callable[[tuple[int, ...]], object]):
    """
    Product over the blocks ``V = (i_1 < ... < i_s)`` of ``values(V)``.

    Exceptions raised by ``values`` are re-raised as :class:`OracleError`
    naming the failing block.
    """
    result = 1
    for block in pi.blocks:
        try:
            v = values(block)
        except Exception as exc:
            raise OracleError(f"value oracle failed on block {block} of {pi}: {exc}") from exc
        result = result * v
    return result


def _check_sequence(seq: Sequence, what: str) -> list:
    seq = list(seq)
    if len(seq) < 1:
        raise DomainError(f"{what} sequence must have length >= 1")
    for x in seq:
        if isinstance(x, float) and not math.isfinite(x):
            raise DomainError(f"{what} sequence has a non-finite entry {x}")
    return seq


def _series_powers(m: list, order: int) -> list[list]:
    """Coefficients of ``M(x)^s`` up to ``x^order`` for ``s = 0..order+1``, with ``M = 1 + sum m_i x^i``."""
    base = [1] + list(m[:order])
    base += [0] * (order + 1 - len(base))
    powers = [[1] + [0] * order]
    for _ in range(order + 1):
        prev = powers[-1]
        nxt = [0] * (order + 1)
        for i, a in enumerate(prev):
            if a == 0:
                continue
            for j in range(order + 1 - i):
                if base[j] != 0:
                    nxt[i + j] = nxt[i + j] + a * base[j]
        powers.append(nxt)
    return powers


def free_cumulants_to_moments(k: Sequence, cap: int | None = None) -> tuple:
    """
    Moments ``m_1..m_H`` from free cumulants ``k_1..k_H``.

    Uses the first-block recursion ``m_n = sum_s k_s [x^(n-s)] M(x)^s``,
    which is the non-crossing moment-cumulant formula grouped by the block
    containing 1.
    """
    k = _check_sequence(k, "cumulant")
    if cap is not None:
        _check_cap(len(k), cap)
    H = len(k)
    m: list = []
    for n in range(1, H + 1):
        powers = _series_powers(m, n - 1)
        total = 0
        for s in range(1, n + 1):
            if k[s - 1] != 0:
                total = total + k[s - 1] * powers[s][n - s]
        m.append(total)
    return tuple(m)


def moments_to_free_cumulants(m: Sequence, cap: int | None = None) -> tuple:
    """Free cumulants ``k_1..k_H`` from moments ``m_1..m_H``; inverse of :func:`free_cumulants_to_moments`."""
    m = _check_sequence(m, "moment")
    if cap is not None:
        _check_cap(len(m), cap)
    H = len(m)
    k: list = []
    for n in range(1, H + 1):
        powers = _series_powers(m, n - 1)
        rest = 0
        for s in range(1, n):
            if k[s - 1] != 0:
                rest = rest + k[s - 1] * powers[s][n - s]
        k.append(m[n - 1] - rest)
    return tuple(k)
