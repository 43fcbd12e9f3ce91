"""Acceptance criteria 1-8, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the
terminal summary) or directly as ``python tests/test_acceptance.py``.
"""

import csv
import dataclasses
import io
import os
import random
import sys
import time
from contextlib import contextmanager, redirect_stderr
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from rulestrata.cli import main
from rulestrata.forest import ForestParams, VariableImportance, fit_forest, mean_decrease_accuracy, select_variables
from rulestrata.ingest import write_database_csv
from rulestrata.marginals import ALL_VARIABLES, LIGHTING, STRATA, STRATUM_TOTALS, study_database
from rulestrata.miner import MiningParams, mine_frequent
from rulestrata.oracle import brute_force_frequent, brute_force_rules
from rulestrata.report import crosstab, emit_frequency_table, render
from rulestrata.rules import compute_metrics, generate_rules, prune_redundant
from rulestrata.synthetic import planted_table, random_instance

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}

DATA = Path(__file__).parent / "data"

CASE1_ARGS = ["--rhs", "lighting_condition=daylight", "--min-support", "0.001",
              "--min-confidence", "0.5", "--min-lift", "1.1", "--max-len", "4"]

# reference values for daylight rules with a single antecedent:
# id, antecedent, S%, C%, L
DAYLIGHT_SINGLES = [
    ("R1", "ped_age = <15", 10.69, 75.51, 1.65),
    ("R2", "violation_type = failure_to_yield", 4.00, 73.33, 1.60),
    ("R4", "road_type = other_unknown", 0.90, 64.35, 1.40),
    ("R5", "driver_condition = illness_fatigued_asleep", 0.34, 63.64, 1.39),
    ("R7", "driver_condition = inattentive_distracted", 9.25, 63.42, 1.38),
    ("R8", "ped_age = >64", 4.42, 63.26, 1.38),
    ("R13", "speed_limit = <30", 17.44, 61.10, 1.33),
    ("R18", "driver_age = >64", 5.25, 58.99, 1.29),
]

TOP_FIVE_ITEMS = [("day_of_week=weekday", 5778), ("severity=moderate", 5739),
                  ("ped_dark_cloth=no", 5380), ("road_type=two_no_separation", 5112),
                  ("ped_alcohol_drug=no", 4629)]

# cells of the reference marginal table that cannot be taken at face value:
# a missing count, a count that breaks its column total, and two percentages
# that disagree with their own counts
AMBIGUOUS = {
    ("ped_alcohol_drug", "yes", "dark_no_streetlight", "n"),
    ("ped_alcohol_drug", "yes", "dark_no_streetlight", "pct"),
    ("highway_type", "parish_road", "dark_no_streetlight", "n"),
    ("ped_alcohol_drug", "others", "dark_no_streetlight", "pct"),
    ("driver_age", "35-44", "dark_no_streetlight", "pct"),
}


def record(number, name, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


@contextmanager
def chdir(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def run_cli(argv):
    with redirect_stderr(io.StringIO()):
        return main(argv)


@pytest.fixture(scope="module")
def study():
    return study_database()


def test_criterion_1_single_antecedent_rules(study, tmp_path):
    write_database_csv(study, tmp_path / "db.csv")
    with chdir(tmp_path):
        start = time.perf_counter()
        code = run_cli(["mine", "--db", "db.csv", *CASE1_ARGS, "--out", "case1.csv", "--threads", "1"])
        elapsed = time.perf_counter() - start
    rows = {r["antecedent"]: r for r in csv.DictReader(open(tmp_path / "case1.csv"))}
    misses = []
    for rid, ante, s, c, lift in DAYLIGHT_SINGLES:
        row = rows.get(ante)
        if row is None:
            misses.append(f"{rid} absent")
            continue
        got = (float(row["support_pct"]), float(row["confidence_pct"]), float(row["lift"]))
        if any(abs(g - w) > 0.01 + 1e-9 for g, w in zip(got, (s, c, lift))):
            misses.append(f"{rid} {got} vs {(s, c, lift)}")
    ok = code == 0 and not misses and elapsed < 5.0
    record(1, "single-antecedent daylight rules", ok,
           f"{len(DAYLIGHT_SINGLES) - len(misses)}/{len(DAYLIGHT_SINGLES)} matched within 0.01, "
           f"{len(rows)} rules, {elapsed:.2f}s" + (f"; {misses}" if misses else ""))
    assert ok


def test_criterion_2_frequency_order(study):
    rows = list(csv.reader(io.StringIO(render(emit_frequency_table, study))))[1:6]
    got = [(item, int(count)) for item, count in rows]
    ok = got == TOP_FIVE_ITEMS
    record(2, "item frequency ordering", ok, f"top five {got}")
    assert ok


def load_reference_table():
    cells = []
    for line in open(DATA / "lighting_marginals_reference.tsv"):
        if line.startswith("#") or not line.strip():
            continue
        f = line.rstrip("\n").split("\t")
        var, cat = f[0], f[1]
        for s, stratum in enumerate(STRATA):
            cells.append((var, cat, stratum, f[2 + 2 * s], f[3 + 2 * s]))
    return cells


def test_criterion_3_marginal_round_trip():
    db = study_database(ALL_VARIABLES)
    tabs = {}
    checked = mismatched = 0
    problems = []
    for var, cat, stratum, n_txt, pct_txt in load_reference_table():
        if var not in tabs:
            tabs[var] = crosstab(db, var, LIGHTING)
        n, pct = tabs[var].cell(cat, stratum)
        if (var, cat, stratum, "n") not in AMBIGUOUS:
            checked += 1
            if n != int(n_txt):
                mismatched += 1
                problems.append(f"{var}={cat}/{stratum} n {n} vs {n_txt}")
        if (var, cat, stratum, "pct") not in AMBIGUOUS:
            checked += 1
            if abs(Fraction(pct) - Fraction(pct_txt)) > Fraction(1, 10):
                mismatched += 1
                problems.append(f"{var}={cat}/{stratum} pct {pct} vs {pct_txt}")
    # the excluded percentages really disagree with their own listed counts
    listed = {(v, c, st): (a, b) for v, c, st, a, b in load_reference_table()}
    for var, cat, stratum, kind in AMBIGUOUS:
        n_txt, pct_txt = listed[(var, cat, stratum)]
        if kind == "pct" and n_txt != "-" and (var, cat, stratum, "n") not in AMBIGUOUS:
            implied = Fraction(int(n_txt) * 100, STRATUM_TOTALS[STRATA.index(stratum)])
            assert abs(implied - Fraction(pct_txt)) > Fraction(1, 10)
    ok = mismatched == 0 and checked > 0
    record(3, "marginal table round trip", ok,
           f"{checked} cells checked, {mismatched} mismatched, {len(AMBIGUOUS)} ambiguous excluded"
           + (f"; {problems[:5]}" if problems else ""))
    assert ok


def levels(table):
    return [[(s.itemset, s.count) for s in level] for level in table.levels]


def rules_equal(a, b):
    if [r.antecedent for r in a] != [r.antecedent for r in b]:
        return False
    for x, y in zip(a, b):
        if (x.count_a, x.count_k, x.count_ak, x.n) != (y.count_a, y.count_k, y.count_ak, y.n):
            return False
        if any(abs(p - q) > 1e-12 for p, q in ((x.support, y.support), (x.confidence, y.confidence),
                                                (x.lift, y.lift))):
            return False
    return True


def test_criterion_4_oracle_equivalence():
    rng = random.Random(20240601)
    start = time.perf_counter()
    failures = []
    n_rules = 0
    for trial in range(1000):
        inst = random_instance(rng)
        db, rhs = inst.db, inst.rhs
        if levels(mine_frequent(db, inst.params)) != levels(brute_force_frequent(db, inst.params)):
            failures.append((trial, "frequent"))
            continue
        p = dataclasses.replace(inst.params, must_include=rhs)
        if levels(mine_frequent(db, p)) != levels(brute_force_frequent(db, p)):
            failures.append((trial, "constrained"))
            continue
        ours = generate_rules(mine_frequent(db, p), db, rhs, p.min_confidence, p.min_lift)
        oracle = brute_force_rules(db, p, rhs)
        n_rules += len(oracle)
        if not rules_equal(ours.rules, oracle.rules):
            failures.append((trial, "rules"))
        elif (ours.generated_before_pruning, ours.retained_after_pruning) != \
                (oracle.generated_before_pruning, oracle.retained_after_pruning):
            failures.append((trial, "pruning counts"))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    record(4, "oracle equivalence", ok,
           f"1000 instances, {n_rules} oracle rules, {len(failures)} disagreements, {elapsed:.1f}s"
           + (f"; first {failures[:3]}" if failures else ""))
    assert ok


def random_rules(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        db = random_instance(rng, max_vars=8, max_transactions=300).db
        variables = list(db.dictionary.by_variable)
        if len(variables) < 2:
            continue
        for _ in range(50):
            k_var = rng.choice(variables)
            others = [v for v in variables if v != k_var]
            chosen = rng.sample(others, rng.randint(1, min(3, len(others))))
            ante = [rng.choice(db.dictionary.by_variable[v]) for v in chosen]
            k = rng.choice(db.dictionary.by_variable[k_var])
            if db.count(tuple(sorted(ante))) == 0 or db.count((k,)) == 0:
                continue
            out.append(compute_metrics(ante, k, db))
    return out[:count]


def test_criterion_5_metric_identities():
    rules = random_rules(10_000, 77)
    bad = 0
    positives = 0
    for r in rules:
        s_a, s_k, s_ak = r.count_a / r.n, r.count_k / r.n, r.count_ak / r.n
        ok = (abs(r.lift - r.confidence / s_k) <= 1e-12
              and abs(r.confidence - s_ak / s_a) <= 1e-12
              and s_ak <= min(s_a, s_k) + 1e-12
              and (r.lift > 1) == (r.count_ak * r.n > r.count_a * r.count_k))
        positives += r.lift > 1
        bad += not ok
    ok = bad == 0 and len(rules) == 10_000
    record(5, "metric identities", ok,
           f"{len(rules)} rules ({positives} with lift > 1), {bad} violations")
    assert ok


def test_criterion_6_pruning_soundness(study, tmp_path):
    rhs = study.dictionary.id_of(LIGHTING, "daylight")
    params = MiningParams(0.001, 4, rhs, 0.5, 1.1)
    rules = generate_rules(mine_frequent(study, params), study, rhs, 0.5, 1.1)
    dense = np.zeros((study.n, len(study.dictionary)), dtype=bool)
    for r, t in enumerate(study.transactions):
        dense[r, list(t.items)] = True

    def scan(itemset):
        return int(dense[:, list(itemset)].all(axis=1).sum()) if itemset else study.n

    violations = 0
    comparisons = 0
    for rule in rules:
        a = rule.antecedent
        conf = Fraction(scan(a + (rhs,)), scan(a))
        assert conf == rule.exact_confidence
        for mask in range((1 << len(a)) - 1):
            sub = tuple(a[j] for j in range(len(a)) if mask >> j & 1)
            comparisons += 1
            if Fraction(scan(sub + (rhs,)), scan(sub)) >= conf:
                violations += 1
    idempotent = prune_redundant(rules, study).rules == rules.rules
    ok = violations == 0 and idempotent and len(rules) > 0
    record(6, "pruning soundness", ok,
           f"{len(rules)} retained rules, {comparisons} sub-rule checks, {violations} violations, "
           f"idempotent={idempotent}")
    assert ok


def test_criterion_7_variable_selection():
    firsts = 0
    noise = []
    for seed in range(100):
        table = planted_table(seed)
        model = fit_forest(table, "y", ForestParams(tree_count=25, min_leaf=5, seed=seed))
        imp = mean_decrease_accuracy(model, table)
        firsts += imp.ranking[0] == "signal"
        noise.extend(abs(m) for v, m in imp if v.startswith("noise"))
    mean_noise = float(np.mean(noise))
    scores = [64.1, 58.7, 52.3, 49.9, 46.0, 44.4, 41.8, 39.5, 37.2, 35.0, 33.9, 32.6, 32.05,
              31.9, 24.3, 18.0, 11.2, 6.5, 2.2]
    imp = VariableImportance(tuple((f"x{i}", s) for i, s in enumerate(scores)))
    chosen = select_variables(imp, 0.5)
    expected = [f"x{i}" for i, s in enumerate(scores) if s >= 32.05]
    ok = firsts >= 95 and mean_noise < 0.02 and chosen == expected and len(chosen) == 13
    record(7, "variable selection", ok,
           f"signal ranked first in {firsts}/100 seeds, mean noise |MDA| {mean_noise:.4f}, "
           f"{len(chosen)} variables at threshold 32.05")
    assert ok


def test_criterion_8_determinism(study, tmp_path):
    outputs = []
    for label, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        d = tmp_path / label
        d.mkdir()
        write_database_csv(study, d / "db.csv")
        with chdir(d):
            code = run_cli(["mine", "--db", "db.csv", *CASE1_ARGS, "--out", "rules.csv",
                            "--threads", threads])
        assert code == 0
        outputs.append(((d / "rules.csv").read_bytes(), (d / "rules.csv.manifest.json").read_bytes()))
    same_runs = outputs[0] == outputs[1]
    same_threads = outputs[0] == outputs[2]
    ok = same_runs and same_threads
    record(8, "determinism", ok,
           f"repeat run identical={same_runs}, threads 1 vs 8 identical={same_threads}")
    assert ok


if __name__ == "__main__":
    import tempfile

    db = study_database()
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion")):
        with tempfile.TemporaryDirectory() as tmp:
            kwargs = {}
            params = fn.__code__.co_varnames[:fn.__code__.co_argcount]
            if "study" in params:
                kwargs["study"] = db
            if "tmp_path" in params:
                kwargs["tmp_path"] = Path(tmp)
            try:
                fn(**kwargs)
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
