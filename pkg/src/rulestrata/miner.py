"""Level-wise Apriori over the vertical bitmap representation.

Candidates of size k+1 come from joining frequent k-itemsets that share their
first k-1 ids.  Each join group shares a prefix, so its counts are one
vectorised AND + popcount against the bitmaps of the group's last items.

With ``must_include`` set, levels of size >= 2 only hold itemsets containing
that item.  They are mined on the projection onto transactions holding it,
which has the same downward closure and far fewer candidates.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, groupby
from typing import Sequence

import numpy as np

from .errors import EmptyDatabase, UnknownItem
from .model import ItemsetSupport, TransactionDatabase, count_extensions

Itemset = tuple[int, ...]


@dataclass(frozen=True)
class MiningParams:
    min_support: float
    max_len: int = 4
    must_include: int | None = None
    min_confidence: float = 0.0
    min_lift: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.min_support <= 1.0:
            raise ValueError(f"min_support must lie in [0, 1], got {self.min_support}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")


@dataclass
class FrequentItemsetTable:
    """Frequent itemsets by size; ``levels[k-1]`` holds the k-itemsets.

    Levels are never empty: the list stops at the last non-empty size.
    """

    n: int
    levels: list[list[ItemsetSupport]] = field(default_factory=list)

    def __iter__(self):
        for level in self.levels:
            yield from level

    def __len__(self) -> int:
        return sum(len(level) for level in self.levels)

    def counts(self) -> dict[Itemset, int]:
        return {s.itemset: s.count for s in self}

    def level(self, k: int) -> list[ItemsetSupport]:
        return self.levels[k - 1] if 0 < k <= len(self.levels) else []


def as_ratio(value: float | int | str | Fraction) -> Fraction:
    """Exact rational for a user threshold.

    Floats are read through their shortest decimal form, so ``0.1`` means
    1/10 and not the binary double just above it.
    """
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def min_count(min_support: float, n: int) -> int:
    """Smallest count that is both >= 1 and has count/n >= min_support (exactly)."""
    return max(1, math.ceil(as_ratio(min_support) * n))


def generate_candidates(
    level: Sequence[Itemset],
    variable_of: Sequence[int] | np.ndarray | None = None,
) -> list[Itemset]:
    """Apriori join + prune.

    ``level`` must be sorted and hold itemsets of one size k.  Pairs sharing
    their first k-1 ids are joined; a candidate survives only if every
    k-subset is in ``level``.  With ``variable_of`` given, joins whose two
    last items belong to the same variable are skipped (their count is 0).
    """
    known = set(level)
    out: list[Itemset] = []
    for prefix, group in groupby(level, key=lambda s: s[:-1]):
        tails = [s[-1] for s in group]
        for i, a in enumerate(tails):
            for b in tails[i + 1:]:
                if variable_of is not None and variable_of[a] == variable_of[b]:
                    continue
                cand = prefix + (a, b)
                # the two subsets dropping a or b are the join parents
                if all(cand[:j] + cand[j + 1:] in known for j in range(len(prefix))):
                    out.append(cand)
    return out


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("RULESTRATA_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _count_candidates(
    bits: np.ndarray,
    candidates: list[Itemset],
    base: np.ndarray | None,
    threads: int,
) -> list[int]:
    groups = [
        (prefix, [c[-1] for c in grp])
        for prefix, grp in groupby(candidates, key=lambda c: c[:-1])
    ]

    def work(chunk):
        return [count_extensions(bits, p, lasts, base) for p, lasts in chunk]

    if threads == 1 or len(groups) < 2 * threads:
        results = work(groups)
    else:
        size = math.ceil(len(groups) / threads)
        chunks = [groups[i:i + size] for i in range(0, len(groups), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = [r for part in pool.map(work, chunks) for r in part]
    return [int(c) for block in results for c in block]


def _levelwise(
    bits: np.ndarray,
    first: list[Itemset],
    first_counts: list[int],
    max_levels: int,
    threshold: int,
    variable_of: np.ndarray,
    base: np.ndarray | None,
    threads: int,
) -> list[list[tuple[Itemset, int]]]:
    levels = [list(zip(first, first_counts))]
    current = first
    while len(levels) < max_levels and len(current) > 1:
        cands = generate_candidates(current, variable_of)
        if not cands:
            break
        counts = _count_candidates(bits, cands, base, threads)
        kept = [(c, n) for c, n in zip(cands, counts) if n >= threshold]
        if not kept:
            break
        levels.append(kept)
        current = [c for c, _ in kept]
    return levels


def mine_frequent(
    db: TransactionDatabase, params: MiningParams, threads: int | None = 1
) -> FrequentItemsetTable:
    if db.n == 0:
        raise EmptyDatabase("cannot mine an empty database")
    threads = _resolve_threads(threads)
    n = db.n
    threshold = min_count(params.min_support, n)
    bits = db.bits
    variable_of = db.dictionary.variable_of
    singles = np.bitwise_count(bits).sum(axis=1, dtype=np.int64)
    freq1 = [(i,) for i in range(len(singles)) if singles[i] >= threshold]
    table = FrequentItemsetTable(n)
    if not freq1:
        return table
    table.levels.append([ItemsetSupport(s, int(singles[s[0]]), int(singles[s[0]]) / n) for s in freq1])

    k_item = params.must_include
    if params.max_len == 1:
        return table
    if k_item is None:
        levels = _levelwise(
            bits, freq1, [int(singles[s[0]]) for s in freq1], params.max_len,
            threshold, variable_of, None, threads,
        )
        for level in levels[1:]:
            table.levels.append([ItemsetSupport(s, c, c / n) for s, c in level])
        return table

    if not 0 <= k_item < len(singles):
        raise UnknownItem(f"item id {k_item} is not in the dictionary")
    if singles[k_item] < threshold:
        return table
    base = bits[k_item]
    others = [i for i in range(len(singles))
              if i != k_item and variable_of[i] != variable_of[k_item] and singles[i] >= threshold]
    with_k = count_extensions(bits, (), others, base) if others else np.zeros(0, dtype=np.int64)
    cond1 = [(i,) for i, c in zip(others, with_k) if c >= threshold]
    cond1_counts = [int(c) for c in with_k if c >= threshold]
    if not cond1:
        return table
    levels = _levelwise(
        bits, cond1, cond1_counts, params.max_len - 1, threshold, variable_of, base, threads,
    )
    for level in levels:
        rows = [(tuple(sorted(s + (k_item,))), c) for s, c in level]
        rows.sort()
        table.levels.append([ItemsetSupport(s, c, c / n) for s, c in rows])
    return table


def all_subsets(itemset: Itemset) -> list[Itemset]:
    """Every proper subset of ``itemset`` (including the empty one)."""
    return [c for r in range(len(itemset)) for c in combinations(itemset, r)]
