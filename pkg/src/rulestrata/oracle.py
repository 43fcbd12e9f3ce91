"""Brute-force reference for mining, rule metrics, pruning and ordering.

Nothing here shares code with the miner or the rule generator beyond the
result types: counts come from enumerating the subsets of every transaction,
and every predicate is evaluated on ``Fraction`` values straight from the
definitions.  Meant for small instances only.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import combinations

from .errors import EmptyDatabase, TooLargeForOracle
from .miner import FrequentItemsetTable, MiningParams
from .model import ItemsetSupport, TransactionDatabase
from .rules import Rule, RuleSet

MAX_ITEMS = 24


def _decimal(x) -> Fraction:
    # thresholds mean the decimal number as written
    return Fraction(str(x))


def _subset_counts(db: TransactionDatabase, max_len: int) -> Counter:
    if len(db.dictionary) > MAX_ITEMS:
        raise TooLargeForOracle(f"{len(db.dictionary)} items exceeds the oracle bound of {MAX_ITEMS}")
    if db.n == 0:
        raise EmptyDatabase("oracle needs at least one transaction")
    counts: Counter = Counter()
    for t in db.transactions:
        for k in range(1, max_len + 1):
            for sub in combinations(t.items, k):
                counts[sub] += 1
    return counts


def _frequent(counts: Counter, n: int, params: MiningParams) -> dict[tuple, int]:
    floor = _decimal(params.min_support)
    return {s: c for s, c in counts.items() if c > 0 and Fraction(c, n) >= floor}


def brute_force_frequent(db: TransactionDatabase, params: MiningParams) -> FrequentItemsetTable:
    counts = _subset_counts(db, params.max_len)
    freq = _frequent(counts, db.n, params)
    k_item = params.must_include
    table = FrequentItemsetTable(db.n)
    for k in range(1, params.max_len + 1):
        level = sorted(
            s for s in freq
            if len(s) == k and (k == 1 or k_item is None or k_item in s)
        )
        if not level:
            break
        table.levels.append([ItemsetSupport(s, freq[s], freq[s] / db.n) for s in level])
    return table


def brute_force_rules(db: TransactionDatabase, params: MiningParams, rhs: int) -> RuleSet:
    counts = _subset_counts(db, params.max_len)
    n = db.n
    freq = _frequent(counts, n, params)
    echo = {"rhs": rhs, "min_confidence": params.min_confidence, "min_lift": params.min_lift}
    sigma_k = counts.get((rhs,), 0)
    if sigma_k == 0:
        return RuleSet([], echo, 0, 0)

    def sigma(itemset) -> int:
        return n if not itemset else counts.get(tuple(sorted(itemset)), 0)

    def confidence(ante) -> Fraction:
        return Fraction(sigma(ante + (rhs,)), sigma(ante))

    passing = []
    for itemset, c_ak in freq.items():
        if rhs not in itemset or len(itemset) < 2:
            continue
        ante = tuple(i for i in itemset if i != rhs)
        conf = Fraction(c_ak, sigma(ante))
        lift = conf / Fraction(sigma_k, n)
        if conf >= _decimal(params.min_confidence) and lift >= _decimal(params.min_lift):
            passing.append(ante)

    retained = []
    for ante in passing:
        conf = confidence(ante)
        generalisations = [g for r in range(len(ante)) for g in combinations(ante, r)]
        if all(confidence(g) < conf for g in generalisations):
            retained.append(Rule(ante, rhs, sigma(ante), sigma_k, sigma(ante + (rhs,)), n))

    def key(rule: Rule):
        c = Fraction(rule.count_ak, rule.count_a)
        s = Fraction(rule.count_ak, n)
        lift = c / Fraction(sigma_k, n)
        return (-lift, -c, -s, rule.antecedent)

    retained.sort(key=key)
    return RuleSet(retained, echo, len(passing), len(retained))
