"""Synthetic data for tests and experiments.

``random_instance`` draws small categorical databases sized for the
brute-force oracle.  ``planted_table`` builds a classification table where
one predictor drives the response and the rest are independent noise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .forest import CategoricalTable
from .miner import MiningParams
from .model import TransactionDatabase
from .oracle import MAX_ITEMS

SUPPORT_LEVELS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3)


@dataclass(frozen=True)
class Instance:
    db: TransactionDatabase
    params: MiningParams
    rhs: int


def random_instance(
    rng: random.Random,
    max_vars: int = 10,
    max_cats: int = 4,
    max_transactions: int = 300,
    max_items: int = MAX_ITEMS,
) -> Instance:
    """A random database, thresholds and consequent item.

    Shapes are redrawn until the item count fits ``max_items`` so the oracle
    can enumerate every itemset.
    """
    while True:
        n_vars = rng.randint(1, max_vars)
        arity = [rng.randint(1, max_cats) for _ in range(n_vars)]
        if sum(arity) <= max_items:
            break
    n = rng.randint(1, max_transactions)
    names = [f"v{j}" for j in range(n_vars)]
    # skewed category weights so that some items are rare and some common
    weights = [[rng.random() ** 2 + 0.05 for _ in range(k)] for k in arity]
    records = []
    for i in range(n):
        rec = {}
        for j, name in enumerate(names):
            c = rng.choices(range(arity[j]), weights[j])[0]
            rec[name] = f"c{c}"
        records.append((f"t{i}", rec))
    db = TransactionDatabase.from_records(records, names)
    params = MiningParams(
        min_support=rng.choice(SUPPORT_LEVELS),
        max_len=rng.randint(1, 4),
        min_confidence=rng.choice((0.0, rng.random())),
        min_lift=rng.choice((0.0, 1.0, rng.uniform(0.5, 2.0))),
    )
    return Instance(db, params, rng.randrange(len(db.dictionary)))


def planted_table(
    seed: int,
    n: int = 2000,
    noise_vars: int = 4,
    arity: int = 3,
    noise_arity: int = 4,
    flip: float = 0.1,
) -> CategoricalTable:
    """Response ``y`` copies ``signal`` except for a ``flip`` fraction of
    records, which get a uniform random class.  ``noise0..`` are independent
    of both."""
    rng = np.random.default_rng(seed)
    signal = rng.integers(0, arity, n)
    y = signal.copy()
    flipped = rng.random(n) < flip
    y[flipped] = rng.integers(0, arity, int(flipped.sum()))
    noise = rng.integers(0, noise_arity, (n, noise_vars))
    records = []
    for i in range(n):
        rec = {"signal": f"s{signal[i]}", "y": f"c{y[i]}"}
        for j in range(noise_vars):
            rec[f"noise{j}"] = f"n{noise[i, j]}"
        records.append(rec)
    return CategoricalTable.from_records(records)
