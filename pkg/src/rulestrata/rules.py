"""Consequent-constrained rules: metrics, thresholds, redundancy pruning, order.

All comparisons (thresholds, pruning, sort keys) are done on exact rationals
built from integer counts.  The float metrics on ``Rule`` are a single
division each and exist for display and export.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import EmptyDatabase, UndefinedConfidence, UnknownItem
from .miner import FrequentItemsetTable, all_subsets, as_ratio
from .model import TransactionDatabase


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[int, ...]
    consequent: int
    count_a: int
    count_k: int
    count_ak: int
    n: int

    @property
    def support(self) -> float:
        return self.count_ak / self.n

    @property
    def confidence(self) -> float:
        return self.count_ak / self.count_a

    @property
    def lift(self) -> float:
        return (self.count_ak * self.n) / (self.count_a * self.count_k)

    @property
    def exact_support(self) -> Fraction:
        return Fraction(self.count_ak, self.n)

    @property
    def exact_confidence(self) -> Fraction:
        return Fraction(self.count_ak, self.count_a)

    @property
    def exact_lift(self) -> Fraction:
        return Fraction(self.count_ak * self.n, self.count_a * self.count_k)


@dataclass
class RuleSet:
    rules: list[Rule] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    generated_before_pruning: int = 0
    retained_after_pruning: int = 0

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


def compute_metrics(antecedent: Sequence[int], consequent: int, db: TransactionDatabase) -> Rule:
    if db.n == 0:
        raise EmptyDatabase("metrics are undefined on an empty database")
    a = tuple(sorted(antecedent))
    if consequent in a:
        raise ValueError("consequent must not appear in the antecedent")
    d = db.dictionary
    seen = set()
    for i in a + (consequent,):
        if not 0 <= i < len(d):
            raise UnknownItem(f"item id {i} is not in the dictionary")
    for i in a:
        v = d.items[i].variable
        if v in seen:
            raise ValueError(f"antecedent holds two items of variable {v!r}")
        seen.add(v)
    count_a, count_k, count_ak = db.count_many([a, (consequent,), tuple(sorted(a + (consequent,)))])
    if count_a == 0:
        raise UndefinedConfidence(f"antecedent {list(a)} never occurs")
    return Rule(a, consequent, count_a, count_k, count_ak, db.n)


def rule_order_key(rule: Rule):
    return (-rule.exact_lift, -rule.exact_confidence, -rule.exact_support, rule.antecedent)


def sort_rules(rules: RuleSet) -> RuleSet:
    return RuleSet(
        sorted(rules.rules, key=rule_order_key),
        dict(rules.params),
        rules.generated_before_pruning,
        rules.retained_after_pruning,
    )


def prune_redundant(rules: RuleSet, db: TransactionDatabase) -> RuleSet:
    """Keep a rule only if it beats every sub-antecedent rule's confidence.

    The empty antecedent is included, with confidence S(K).  Sub-rule counts
    come straight from ``db`` whether or not the sub-rule passed thresholds.
    """
    needed: set[tuple[int, ...]] = set()
    for r in rules:
        for sub in all_subsets(r.antecedent):
            needed.add(sub)
            needed.add(tuple(sorted(sub + (r.consequent,))))
    needed_list = sorted(needed)
    counts = dict(zip(needed_list, db.count_many(needed_list)))

    kept = []
    for r in rules:
        ok = True
        for sub in all_subsets(r.antecedent):
            c_sub = counts[sub]
            c_sub_k = counts[tuple(sorted(sub + (r.consequent,)))]
            # conf(sub) < conf(rule)  <=>  c_sub_k * c_a < c_ak * c_sub
            if c_sub_k * r.count_a >= r.count_ak * c_sub:
                ok = False
                break
        if ok:
            kept.append(r)
    return RuleSet(kept, dict(rules.params), rules.generated_before_pruning, len(kept))


def generate_rules(
    freq: FrequentItemsetTable,
    db: TransactionDatabase,
    rhs: int,
    min_confidence: float = 0.0,
    min_lift: float = 0.0,
    prune: bool = True,
) -> RuleSet:
    if not 0 <= rhs < len(db.dictionary):
        raise UnknownItem(f"item id {rhs} is not in the dictionary")
    if db.n == 0:
        raise EmptyDatabase("cannot generate rules from an empty database")
    n = db.n
    candidates = [s for s in freq if len(s.itemset) >= 2 and rhs in s.itemset]
    antecedents = [tuple(i for i in s.itemset if i != rhs) for s in candidates]
    count_k = db.count((rhs,))
    count_a = db.count_many(antecedents)

    min_c = as_ratio(min_confidence)
    min_l = as_ratio(min_lift)
    kept = []
    for s, a, ca in zip(candidates, antecedents, count_a):
        if s.count < min_c * ca:
            continue
        if s.count * n < min_l * ca * count_k:
            continue
        kept.append(Rule(a, rhs, ca, count_k, s.count, n))

    params = {"rhs": rhs, "min_confidence": min_confidence, "min_lift": min_lift}
    result = RuleSet(kept, params, len(kept), len(kept))
    if prune:
        result = prune_redundant(result, db)
    return sort_rules(result)
