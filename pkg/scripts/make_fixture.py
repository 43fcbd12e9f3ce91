"""Write the reconstructed study database and its raw source tables.

    python scripts/make_fixture.py --out fixture/

produces ``fixture/study_db.csv`` (the encoded database, 8,249 records) and
``fixture/raw/`` (four source tables plus ``config.json`` for
``rulestrata ingest``).
"""

import argparse
from pathlib import Path

from rulestrata.ingest import write_database_csv
from rulestrata.marginals import ALL_VARIABLES, MINING_VARIABLES, study_database, write_study_tables


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="fixture")
    ap.add_argument("--seed", type=int, default=2022)
    ap.add_argument("--all-variables", action="store_true",
                    help="include the six screened-out variables in the database")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variables = ALL_VARIABLES if args.all_variables else MINING_VARIABLES
    db = study_database(variables, args.seed)
    write_database_csv(db, out / "study_db.csv")
    config = write_study_tables(out / "raw", args.seed)
    print(f"{out / 'study_db.csv'}: {db.n} records, {len(db.dictionary)} items")
    print(f"{config}: raw tables for the ingest pipeline")


if __name__ == "__main__":
    main()
