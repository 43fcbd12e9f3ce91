"""Random forest over categorical predictors, with permutation importance.

Trees split nodes into two category subsets of one predictor, chosen by Gini
decrease.  Predictors with at most ``exhaustive_arity`` categories present at
a node get every binary partition tried; wider ones get a seeded random
sample of partitions.  Importance is mean decrease in out-of-bag accuracy
(MDA) in raw accuracy units.

Every tree draws from its own generator, derived from the master seed and the
tree index, so fitting in parallel gives the same forest as fitting in order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateResponse, EmptyInput, EmptySelection, SchemaViolation


@dataclass(frozen=True)
class ForestParams:
    tree_count: int = 500
    candidate_vars_per_split: int | None = None  # None: floor(sqrt(p))
    max_depth: int | None = None
    min_leaf: int = 1
    seed: int = 0
    exhaustive_arity: int = 10
    random_partitions: int = 256

    def __post_init__(self):
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


@dataclass
class CategoricalTable:
    """Integer-coded categorical columns.

    ``codes[:, j]`` indexes into ``categories[j]``.
    """

    columns: tuple[str, ...]
    categories: tuple[tuple[str, ...], ...]
    codes: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[dict[str, str]], columns: Sequence[str] | None = None):
        if not records:
            raise EmptyInput("table has no records")
        columns = tuple(columns) if columns else tuple(records[0])
        cats = []
        codes = np.empty((len(records), len(columns)), dtype=np.int64)
        for j, col in enumerate(columns):
            try:
                values = [r[col] for r in records]
            except KeyError:
                raise SchemaViolation(f"column {col!r} missing from a record") from None
            levels = tuple(sorted(set(values)))
            index = {v: i for i, v in enumerate(levels)}
            codes[:, j] = [index[v] for v in values]
            cats.append(levels)
        return cls(columns, tuple(cats), codes)

    @classmethod
    def from_database(cls, db) -> "CategoricalTable":
        """One column per variable of a ``TransactionDatabase``, in declared order."""
        d = db.dictionary
        columns = tuple(db.variables)
        codes = np.empty((db.n, len(columns)), dtype=np.int64)
        cats = []
        for j, var in enumerate(columns):
            ids = d.by_variable.get(var, ())
            cats.append(tuple(d.items[i].category for i in ids))
        pos = {v: j for j, v in enumerate(columns)}
        first = {v: ids[0] for v, ids in d.by_variable.items()}
        for r, t in enumerate(db.transactions):
            for i in t.items:
                var = d.items[i].variable
                codes[r, pos[var]] = i - first[var]
        return cls(columns, tuple(cats), codes)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    def column(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise SchemaViolation(f"unknown column {name!r}") from None


@dataclass
class Tree:
    """Flat array tree.  ``feature[i] < 0`` marks a leaf predicting ``label[i]``.

    ``goes_left[i, c]`` says where category ``c`` of the split feature goes.
    """

    feature: np.ndarray
    goes_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.label[node]
            idx = rows[inner]
            nd = node[inner]
            cats = X[idx, f[inner]]
            go = self.goes_left[nd, cats]
            node[idx] = np.where(go, self.left[nd], self.right[nd])


@dataclass
class ForestModel:
    trees: list[Tree]
    oob: list[np.ndarray]
    classes: tuple[str, ...]
    response: str
    predictors: tuple[str, ...]
    predictor_index: tuple[int, ...]
    params: ForestParams
    n_classes: int = field(init=False)

    def __post_init__(self):
        self.n_classes = len(self.classes)

    def oob_accuracy(self, table: CategoricalTable) -> float:
        """Majority vote over the trees for which each record is out of bag."""
        X = table.codes[:, list(self.predictor_index)]
        y = table.codes[:, table.column(self.response)]
        votes = np.zeros((table.n, self.n_classes), dtype=np.int64)
        for tree, oob in zip(self.trees, self.oob):
            if len(oob):
                np.add.at(votes, (oob, tree.predict(X[oob])), 1)
        voted = votes.sum(axis=1) > 0
        if not voted.any():
            return float("nan")
        pred = votes[voted].argmax(axis=1)
        return float((pred == y[voted]).mean())


@dataclass(frozen=True)
class VariableImportance:
    entries: tuple[tuple[str, float], ...]

    def __iter__(self):
        return iter(self.entries)

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    @property
    def ranking(self) -> list[str]:
        return [v for v, _ in self.entries]


def _rng(seed: int, tree: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tree, stream)))


@lru_cache(maxsize=None)
def _partitions(k: int) -> np.ndarray:
    """All binary partitions of k present categories as 0/1 left-membership rows.

    Category 0 is always on the left; rows are ordered lexicographically by
    the tuple of left-hand positions.
    """
    subsets = []
    for mask in range(1 << (k - 1)):
        left = (0,) + tuple(j + 1 for j in range(k - 1) if mask >> j & 1)
        if len(left) < k:
            subsets.append(left)
    subsets.sort()
    m = np.zeros((len(subsets), k))
    for r, s in enumerate(subsets):
        m[r, list(s)] = 1.0
    return m


def _random_partitions(k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.random((count, k)) < 0.5
    m[:, 0] = True
    m = m[~m.all(axis=1)]
    m = np.unique(m, axis=0)
    keys = [tuple(np.flatnonzero(row)) for row in m]
    return m[sorted(range(len(m)), key=keys.__getitem__)].astype(np.float64)


def _grow(
    X: np.ndarray, y: np.ndarray, arity: Sequence[int], n_classes: int,
    params: ForestParams, mtry: int, rng: np.random.Generator,
) -> Tree:
    width = max(arity) if len(arity) else 1
    feature, goes_left, left, right, label = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        goes_left.append(np.zeros(width, dtype=bool))
        left.append(-1)
        right.append(-1)
        label.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    p = X.shape[1]
    while stack:
        node, idx, depth = stack.pop()
        yy = y[idx]
        counts = np.bincount(yy, minlength=n_classes)
        label[node] = int(counts.argmax())
        n = len(idx)
        if (counts.max() == n or n < 2 * params.min_leaf
                or (params.max_depth is not None and depth >= params.max_depth)):
            continue
        parent = float((counts.astype(np.float64) ** 2).sum() / n)
        best = None  # (score, var, left-membership over all categories)
        for v in sorted(rng.permutation(p)[:mtry].tolist()):
            table = np.bincount(X[idx, v] * n_classes + yy, minlength=arity[v] * n_classes)
            table = table.reshape(arity[v], n_classes)
            sizes = table.sum(axis=1)
            present = np.flatnonzero(sizes)
            k = len(present)
            if k < 2:
                continue
            if k <= params.exhaustive_arity:
                parts = _partitions(k)
            else:
                parts = _random_partitions(k, params.random_partitions, rng)
            sub = table[present].astype(np.float64)
            lc = parts @ sub
            rc = counts - lc
            nl = parts @ sizes[present].astype(np.float64)
            nr = n - nl
            ok = (nl >= params.min_leaf) & (nr >= params.min_leaf)
            if not ok.all():
                if not ok.any():
                    continue
                nl, nr = np.where(ok, nl, 1.0), np.where(ok, nr, 1.0)
            score = np.einsum("ij,ij->i", lc, lc) / nl + np.einsum("ij,ij->i", rc, rc) / nr
            if not ok.all():
                score[~ok] = -np.inf
            r = int(score.argmax())
            if best is None or score[r] > best[0]:
                membership = np.zeros(arity[v], dtype=bool)
                membership[present[parts[r] > 0]] = True
                # categories unseen at this node follow the larger child
                if nl[r] >= nr[r]:
                    unseen = np.ones(arity[v], dtype=bool)
                    unseen[present] = False
                    membership |= unseen
                best = (float(score[r]), v, membership)
        if best is None or best[0] <= parent * (1 + 1e-12):
            continue
        _, v, membership = best
        go = membership[X[idx, v]]
        l_node, r_node = new_node(), new_node()
        feature[node] = v
        goes_left[node][: len(membership)] = membership
        left[node], right[node] = l_node, r_node
        stack.append((r_node, idx[~go], depth + 1))
        stack.append((l_node, idx[go], depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(goes_left, dtype=bool).reshape(len(feature), width),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(label, dtype=np.int64),
    )


def fit_forest(
    table: CategoricalTable, response: str, params: ForestParams = ForestParams(),
    threads: int = 1,
) -> ForestModel:
    if table.n == 0:
        raise EmptyInput("table has no records")
    r = table.column(response)
    y = table.codes[:, r]
    if len(np.unique(y)) < 2:
        raise DegenerateResponse(f"response {response!r} has a single class")
    if table.n < 2:
        raise EmptyInput("need at least two records")
    pred_idx = tuple(j for j in range(len(table.columns)) if j != r)
    if not pred_idx:
        raise SchemaViolation("no predictor columns")
    X = table.codes[:, list(pred_idx)]
    arity = [max(1, len(table.categories[j])) for j in pred_idx]
    p = len(pred_idx)
    mtry = params.candidate_vars_per_split or max(1, math.isqrt(p))
    if not 1 <= mtry <= p:
        raise ValueError(f"candidate_vars_per_split must lie in [1, {p}]")
    n_classes = len(table.categories[r])
    n = table.n

    def one(t: int):
        rng = _rng(params.seed, t, 0)
        boot = rng.integers(0, n, size=n)
        oob = np.flatnonzero(np.bincount(boot, minlength=n) == 0)
        tree = _grow(X[boot], y[boot], arity, n_classes, params, mtry, rng)
        return tree, oob

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(one, range(params.tree_count)))
    else:
        fitted = [one(t) for t in range(params.tree_count)]
    return ForestModel(
        [f[0] for f in fitted], [f[1] for f in fitted],
        table.categories[r], response,
        tuple(table.columns[j] for j in pred_idx), pred_idx, params,
    )


def mean_decrease_accuracy(model: ForestModel, table: CategoricalTable) -> VariableImportance:
    """Per predictor: mean over trees of OOB accuracy minus OOB accuracy with
    that predictor's column permuted inside the tree's OOB set."""
    X = table.codes[:, list(model.predictor_index)]
    y = table.codes[:, table.column(model.response)]
    p = X.shape[1]
    totals = np.zeros(p)
    used = 0
    for t, (tree, oob) in enumerate(zip(model.trees, model.oob)):
        if len(oob) == 0:
            continue
        rng = _rng(model.params.seed, t, 1)
        Xo, yo = X[oob], y[oob]
        base = (tree.predict(Xo) == yo).mean()
        for v in range(p):
            shuffled = Xo.copy()
            shuffled[:, v] = rng.permutation(Xo[:, v])
            totals[v] += base - (tree.predict(shuffled) == yo).mean()
        used += 1
    mda = totals / used if used else totals
    order = sorted(range(p), key=lambda v: (-mda[v], v))
    return VariableImportance(tuple((model.predictors[v], float(mda[v])) for v in order))


def select_variables(imp: VariableImportance, fraction: float = 0.5) -> list[str]:
    """Variables whose MDA reaches ``fraction`` of the top MDA, best first."""
    if not imp.entries:
        raise EmptySelection("no importance entries")
    top = max(m for _, m in imp.entries)
    if top <= 0:
        raise EmptySelection("no variable has positive importance")
    cut = (Fraction(repr(fraction)) if isinstance(fraction, float) else Fraction(fraction)) * Fraction(top)
    return [v for v, m in imp.entries if Fraction(m) >= cut]
