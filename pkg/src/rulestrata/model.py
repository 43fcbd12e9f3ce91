"""Categorical transaction model and exact support counting.

Every record carries exactly one category per variable; an *item* is a
``(variable, category)`` pair.  Items get dense integer ids in lexicographic
order of the pair, so identical inputs always produce identical ids.

Counting is vertical: each item owns a packed bitmap over transactions
(64 transactions per ``uint64`` word) and the count of an itemset is the
popcount of the AND of its members' bitmaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyDatabase, EmptyInput, SchemaViolation, UnknownItem

Record = Mapping[str, str]


@dataclass(frozen=True, order=True)
class Item:
    id: int
    variable: str
    category: str

    @property
    def label(self) -> str:
        return f"{self.variable}={self.category}"


class ItemDictionary:
    """Bijection between ``(variable, category)`` pairs and dense item ids."""

    def __init__(self, pairs: Iterable[tuple[str, str]]):
        unique = sorted(set(pairs))
        self.items: tuple[Item, ...] = tuple(
            Item(i, var, cat) for i, (var, cat) in enumerate(unique)
        )
        self._ids = {(it.variable, it.category): it.id for it in self.items}
        by_var: dict[str, list[int]] = {}
        for it in self.items:
            by_var.setdefault(it.variable, []).append(it.id)
        self.by_variable: dict[str, tuple[int, ...]] = {
            k: tuple(v) for k, v in by_var.items()
        }
        var_index = {v: i for i, v in enumerate(sorted(self.by_variable))}
        # variable ordinal per item id; used for the one-item-per-variable rule
        self.variable_of = np.array(
            [var_index[it.variable] for it in self.items], dtype=np.int64
        )

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ItemDictionary) and self.items == other.items

    def __repr__(self) -> str:
        return f"ItemDictionary({len(self.items)} items, {len(self.by_variable)} variables)"

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.by_variable))

    def id_of(self, variable: str, category: str) -> int:
        try:
            return self._ids[(variable, category)]
        except KeyError:
            raise UnknownItem(f"unknown item {variable}={category}") from None

    def parse(self, text: str) -> int:
        """Resolve a ``"variable=category"`` string to its item id."""
        variable, sep, category = text.partition("=")
        if not sep:
            raise UnknownItem(f"expected 'variable=category', got {text!r}")
        return self.id_of(variable.strip(), category.strip())

    def label(self, item_id: int) -> str:
        return self.items[item_id].label

    def same_variable(self, a: int, b: int) -> bool:
        return bool(self.variable_of[a] == self.variable_of[b])


@dataclass(frozen=True)
class Transaction:
    record_id: str
    items: tuple[int, ...]


@dataclass(frozen=True)
class ItemsetSupport:
    itemset: tuple[int, ...]
    count: int
    support: float


def build_dictionary(
    records: Sequence[Record], variables: Sequence[str] | None = None
) -> ItemDictionary:
    """Collect the distinct ``(variable, category)`` pairs of ``records``.

    ``variables`` declares the schema; by default it is the union of keys seen.
    """
    if not records:
        raise EmptyInput("cannot build a dictionary from zero records")
    if variables is None:
        variables = sorted({k for r in records for k in r})
    pairs = set()
    for i, rec in enumerate(records):
        for var in variables:
            cat = rec.get(var)
            if cat is None or cat == "":
                raise SchemaViolation(f"record {i} has no value for variable {var!r}")
            pairs.add((var, str(cat)))
    return ItemDictionary(pairs)


def encode_record(record: Record, dictionary: ItemDictionary, record_id: str = "") -> Transaction:
    for var in record:
        if var not in dictionary.by_variable:
            raise UnknownItem(f"unknown item {var}={record[var]}")
    missing = [v for v in dictionary.by_variable if v not in record]
    if missing:
        raise SchemaViolation(f"record {record_id!r} has no value for variable {missing[0]!r}")
    ids = sorted(dictionary.id_of(var, str(cat)) for var, cat in record.items())
    return Transaction(record_id, tuple(ids))


def decode(transaction: Transaction, dictionary: ItemDictionary) -> dict[str, str]:
    return {dictionary.items[i].variable: dictionary.items[i].category for i in transaction.items}


class TransactionDatabase:
    """An immutable, encoded set of transactions.

    ``variables`` keeps the declared column order (used for serialisation);
    the dictionary owns the item ids.
    """

    def __init__(
        self,
        dictionary: ItemDictionary,
        transactions: Sequence[Transaction],
        variables: Sequence[str] | None = None,
    ):
        self.dictionary = dictionary
        self.transactions: tuple[Transaction, ...] = tuple(transactions)
        self.variables: tuple[str, ...] = tuple(variables) if variables else dictionary.variables
        n_items = len(dictionary)
        for t in self.transactions:
            if any(i < 0 or i >= n_items for i in t.items):
                raise UnknownItem(f"transaction {t.record_id!r} references an item outside the dictionary")
        self._bits: np.ndarray | None = None

    @classmethod
    def from_records(
        cls,
        records: Sequence[tuple[str, Record]],
        variables: Sequence[str],
    ) -> "TransactionDatabase":
        """Build dictionary and transactions from ``(record_id, mapping)`` pairs."""
        if not records:
            return cls(ItemDictionary(()), (), variables)
        projected = [{v: rec.get(v) for v in variables} for _, rec in records]
        for (rid, _), rec in zip(records, projected):
            for v in variables:
                if rec[v] is None or rec[v] == "":
                    raise SchemaViolation(f"record {rid!r} has no value for variable {v!r}")
        dictionary = build_dictionary(projected, variables)
        txs = [encode_record(rec, dictionary, rid) for (rid, _), rec in zip(records, projected)]
        return cls(dictionary, txs, variables)

    @property
    def n(self) -> int:
        return len(self.transactions)

    def __len__(self) -> int:
        return len(self.transactions)

    def __repr__(self) -> str:
        return f"TransactionDatabase(n={self.n}, items={len(self.dictionary)})"

    @property
    def bits(self) -> np.ndarray:
        """Packed item-by-transaction bitmaps, shape ``(item_count, words)``."""
        if self._bits is None:
            self._bits = _pack_bitmaps(self.transactions, len(self.dictionary))
        return self._bits

    def count(self, itemset: Sequence[int]) -> int:
        if not itemset:
            return self.n
        rows = self.bits[list(itemset)]
        return int(np.bitwise_count(np.bitwise_and.reduce(rows, axis=0)).sum())

    def count_many(self, itemsets: Sequence[Sequence[int]]) -> list[int]:
        """Counts for many itemsets, sharing the AND of common prefixes."""
        out = [0] * len(itemsets)
        order = sorted(range(len(itemsets)), key=lambda i: tuple(itemsets[i]))
        for prefix, group in groupby(order, key=lambda i: tuple(itemsets[i][:-1])):
            group = list(group)
            empties = [i for i in group if len(itemsets[i]) == 0]
            for i in empties:
                out[i] = self.n
            group = [i for i in group if len(itemsets[i]) > 0]
            if not group:
                continue
            lasts = [itemsets[i][-1] for i in group]
            counts = count_extensions(self.bits, prefix, lasts)
            for i, c in zip(group, counts):
                out[i] = int(c)
        return out


def count_extensions(
    bits: np.ndarray,
    prefix: Sequence[int],
    lasts: Sequence[int],
    base: np.ndarray | None = None,
) -> np.ndarray:
    """Counts of ``prefix + (x,)`` for each ``x`` in ``lasts``, optionally
    restricted to transactions set in ``base``."""
    block = bits[list(lasts)]
    mask = base
    if prefix:
        p = np.bitwise_and.reduce(bits[list(prefix)], axis=0)
        mask = p if mask is None else (mask & p)
    if mask is not None:
        block = block & mask
    return np.bitwise_count(block).sum(axis=1, dtype=np.int64)


def _pack_bitmaps(transactions: Sequence[Transaction], n_items: int) -> np.ndarray:
    n = len(transactions)
    words = max(1, (n + 63) // 64)
    dense = np.zeros((n_items, words * 64), dtype=bool)
    if n and n_items:
        rows = np.fromiter((i for t in transactions for i in t.items), dtype=np.int64)
        cols = np.repeat(
            np.arange(n, dtype=np.int64),
            [len(t.items) for t in transactions],
        )
        dense[rows, cols] = True
    packed = np.packbits(dense, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").reshape(n_items, words)


def support_count(db: TransactionDatabase, itemset: Sequence[int]) -> ItemsetSupport:
    if db.n == 0:
        raise EmptyDatabase("support is undefined on an empty database")
    ids = tuple(sorted(itemset))
    if len(set(ids)) != len(ids):
        raise ValueError(f"itemset {list(itemset)} contains duplicate ids")
    for i in ids:
        if i < 0 or i >= len(db.dictionary):
            raise UnknownItem(f"item id {i} is not in the dictionary")
    c = db.count(ids)
    return ItemsetSupport(ids, c, c / db.n)


def item_frequencies(db: TransactionDatabase) -> list[tuple[Item, int]]:
    """Absolute count of every item, most frequent first (ties: lower id)."""
    counts = np.bitwise_count(db.bits).sum(axis=1, dtype=np.int64) if len(db.dictionary) else []
    pairs = [(it, int(c)) for it, c in zip(db.dictionary.items, counts)]
    pairs.sort(key=lambda p: (-p[1], p[0].id))
    return pairs
