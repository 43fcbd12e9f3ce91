"""Mine the three lighting cases on the reconstructed database and print the
top rules of each, with before/after pruning counts and timings.

    python scripts/run_cases.py [--top 20] [--cases configs/cases.json]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from rulestrata.marginals import study_database
from rulestrata.miner import MiningParams, mine_frequent
from rulestrata.report import emit_rule_table
from rulestrata.rules import generate_rules

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", default=str(ROOT / "configs" / "cases.json"))
    ap.add_argument("--top", type=int, default=20)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cases = json.loads(Path(args.cases).read_text())
    db = study_database()
    for name, case in cases.items():
        rhs = db.dictionary.parse(case["rhs"])
        params = MiningParams(case["min_support"], case["max_len"], rhs,
                              case["min_confidence"], case["min_lift"])
        start = time.perf_counter()
        freq = mine_frequent(db, params, threads=args.threads)
        rules = generate_rules(freq, db, rhs, case["min_confidence"], case["min_lift"])
        elapsed = time.perf_counter() - start
        print(f"== {name}: {case['rhs']}  support>={case['min_support']}  "
              f"confidence>={case['min_confidence']}  lift>={case['min_lift']}")
        print(f"   itemsets per level {[len(level) for level in freq.levels]}; "
              f"{rules.generated_before_pruning} rules before pruning, "
              f"{rules.retained_after_pruning} after; {elapsed:.2f}s")
        emit_rule_table(rules, db.dictionary, sys.stdout, "text", args.top)
        print()


if __name__ == "__main__":
    main()
