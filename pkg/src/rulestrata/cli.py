"""Command-line entry point: ``rulestrata {ingest,select,mine,report,rerun}``.

Exit codes: 0 success, 1 file errors, 2 validation or schema errors.

Every command writing to a file also writes ``<out>.manifest.json`` holding
the canonical argument list, resolved parameters, input/output digests and
result counters.  The manifest holds only values that determine the
output, so identical runs give identical manifests; wall-clock time and
thread count go to ``<out>.timing.json``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from decimal import Decimal
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import EmptySelection, IoError, RuleStrataError, ValidationError
from .forest import CategoricalTable, ForestParams, fit_forest, mean_decrease_accuracy, select_variables
from .ingest import SchemaConfig, read_database_csv, run_pipeline, write_database_csv
from .miner import MiningParams, mine_frequent
from .report import FORMATS, emit_crosstab, emit_frequency_table, emit_rule_table
from .rules import generate_rules

log = logging.getLogger("rulestrata")


def _threads_default() -> int:
    env = os.environ.get("RULESTRATA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer RULESTRATA_THREADS=%r", env)
    return os.cpu_count() or 1


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value:
        raise argparse.ArgumentTypeError(f"{text} must be a non-negative ratio")
    return value


def _pct(value: float) -> str:
    return f"{(Decimal(repr(value)) * 100).normalize():f}%"


def _digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: str, argv: list[str], params: dict, inputs: Sequence[str],
                    outputs: Sequence[str], results: dict, manifest: str | None,
                    threads: int, started: float) -> None:
    if manifest is None:
        if out == "-":
            return
        manifest = f"{out}.manifest.json"
    doc = {
        "tool": "rulestrata",
        "version": __version__,
        "subcommand": argv[0],
        "argv": argv,
        "config": params.get("config"),
        "params": params,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": {p: _digest(p) for p in outputs if p != "-"},
        "results": results,
    }
    try:
        Path(manifest).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        timing = {"threads": threads, "elapsed_seconds": round(time.perf_counter() - started, 6)}
        Path(f"{manifest.removesuffix('.manifest.json')}.timing.json").write_text(
            json.dumps(timing, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest {manifest}: {exc.strerror}") from None


def cmd_ingest(args) -> int:
    started = time.perf_counter()
    config = SchemaConfig.load(args.config)
    db, rs = run_pipeline(config)
    if db.n == 0:
        log.warning("filters left zero records; writing an empty database")
    write_database_csv(db, args.out)
    tables = []
    for t in config.tables:
        p = Path(t.path)
        tables.append(str(p if p.is_absolute() else config.base_dir / p))
    argv = ["ingest", "--config", args.config, "--out", args.out]
    _write_manifest(args.out, argv, {"config": args.config}, [args.config, *tables], [args.out],
                    {**rs.counters(), "n": db.n, "items": len(db.dictionary)},
                    args.manifest, args.threads, started)
    print(f"wrote {db.n} records, {len(db.dictionary)} items to {args.out}", file=sys.stderr)
    return 0


def cmd_select(args) -> int:
    started = time.perf_counter()
    db = read_database_csv(args.db)
    table = CategoricalTable.from_database(db)
    params = ForestParams(tree_count=args.trees, candidate_vars_per_split=args.mtry,
                          max_depth=args.max_depth, min_leaf=args.min_leaf, seed=args.seed)
    model = fit_forest(table, args.response, params, threads=args.threads)
    imp = mean_decrease_accuracy(model, table)
    try:
        chosen = select_variables(imp, args.fraction)
        failure = None
    except EmptySelection as exc:
        chosen, failure = [], exc

    lines = ["variable,mda,selected"] + [f"{v},{m!r},{int(v in chosen)}" for v, m in imp]
    text = "\n".join(lines) + "\n"
    outputs = []
    try:
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text)
            outputs.append(args.out)
        selected_path = args.selected
        if selected_path is None and args.out != "-":
            selected_path = str(Path(args.out).with_suffix(".selected.txt"))
        if selected_path:
            Path(selected_path).write_text("".join(f"{v}\n" for v in chosen))
            outputs.append(selected_path)
    except OSError as exc:
        raise IoError(f"cannot write output: {exc.strerror}") from None

    argv = ["select", "--db", args.db, "--response", args.response, "--trees", str(args.trees),
            "--seed", str(args.seed), "--fraction", repr(args.fraction),
            "--min-leaf", str(args.min_leaf), "--out", args.out]
    if args.mtry is not None:
        argv += ["--mtry", str(args.mtry)]
    if args.max_depth is not None:
        argv += ["--max-depth", str(args.max_depth)]
    if args.selected is not None:
        argv += ["--selected", args.selected]
    resolved = {"response": args.response, "trees": args.trees, "seed": args.seed,
                "fraction": args.fraction, "mtry": args.mtry, "max_depth": args.max_depth,
                "min_leaf": args.min_leaf}
    _write_manifest(args.out, argv, resolved, [args.db], outputs,
                    {"oob_accuracy": model.oob_accuracy(table), "selected": chosen},
                    args.manifest, args.threads, started)
    if failure is not None:
        raise failure
    print(f"selected {len(chosen)} of {len(imp.entries)} variables", file=sys.stderr)
    return 0


def cmd_mine(args) -> int:
    started = time.perf_counter()
    db = read_database_csv(args.db)
    rhs = db.dictionary.parse(args.rhs)
    params = MiningParams(args.min_support, args.max_len, rhs, args.min_confidence, args.min_lift)
    freq = mine_frequent(db, params, threads=args.threads)
    rules = generate_rules(freq, db, rhs, args.min_confidence, args.min_lift)
    emit_rule_table(rules, db.dictionary, args.out, args.format, args.top)

    argv = ["mine", "--db", args.db, "--rhs", args.rhs,
            "--min-support", repr(args.min_support), "--min-confidence", repr(args.min_confidence),
            "--min-lift", repr(args.min_lift), "--max-len", str(args.max_len),
            "--out", args.out, "--format", args.format]
    if args.top is not None:
        argv += ["--top", str(args.top)]
    resolved = {
        "rhs": args.rhs,
        "min_support": args.min_support, "min_support_pct": _pct(args.min_support),
        "min_confidence": args.min_confidence, "min_confidence_pct": _pct(args.min_confidence),
        "min_lift": args.min_lift, "max_len": args.max_len, "top": args.top, "format": args.format,
    }
    results = {
        "n": db.n,
        "frequent_itemsets_per_level": [len(level) for level in freq.levels],
        "generated_before_pruning": rules.generated_before_pruning,
        "retained_after_pruning": rules.retained_after_pruning,
        "rows_written": len(rules) if args.top is None else min(args.top, len(rules)),
    }
    _write_manifest(args.out, argv, resolved, [args.db], [args.out], results,
                    args.manifest, args.threads, started)
    return 0


def cmd_report(args) -> int:
    started = time.perf_counter()
    db = read_database_csv(args.db)
    fmt = args.format
    if args.freq:
        emit_frequency_table(db, args.out, fmt)
        argv = ["report", "--db", args.db, "--freq"]
        params = {"freq": True}
    else:
        emit_crosstab(db, args.crosstab, args.by, args.out, fmt)
        argv = ["report", "--db", args.db, "--crosstab", args.crosstab, "--by", args.by]
        params = {"crosstab": args.crosstab, "by": args.by}
    argv += ["--out", args.out, "--format", fmt]
    _write_manifest(args.out, argv, params, [args.db], [args.out], {"n": db.n},
                    args.manifest, args.threads, started)
    return 0


def cmd_rerun(args) -> int:
    try:
        doc = json.loads(Path(args.manifest_path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read manifest {args.manifest_path}: {exc.strerror}") from None
    argv = list(doc["argv"])
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    code = main(argv)
    if code != 0:
        return code
    changed = [p for p, digest in doc.get("outputs", {}).items() if _digest(p) != digest]
    if changed:
        log.warning("rerun output differs from the manifest: %s", ", ".join(changed))
    else:
        print(f"reproduced {len(doc.get('outputs', {}))} output file(s)", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulestrata", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $RULESTRATA_THREADS or CPU count)")
    common.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")

    p = sub.add_parser("ingest", parents=[common], help="join, recode and filter source tables")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="encoded database CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("select", parents=[common], help="random-forest variable screening")
    p.add_argument("--db", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=_ratio, default=0.5)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--out", default="-", help="importance CSV")
    p.add_argument("--selected", default=None, help="selected-variable list")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("mine", parents=[common], help="mine rules for one consequent item")
    p.add_argument("--db", required=True)
    p.add_argument("--rhs", required=True, help='consequent as "variable=category"')
    p.add_argument("--min-support", type=_ratio, required=True)
    p.add_argument("--min-confidence", type=_ratio, required=True)
    p.add_argument("--min-lift", type=_ratio, default=1.1)
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("report", parents=[common], help="frequency table or cross-tab")
    p.add_argument("--db", required=True)
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--freq", action="store_true")
    what.add_argument("--crosstab", metavar="VAR")
    p.add_argument("--by", metavar="VAR")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(func=cmd_report)
    parser.report_parser = p

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest_path")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "report":
            if args.crosstab and not args.by:
                parser.report_parser.error("--crosstab requires --by")
            if args.freq and args.by:
                parser.report_parser.error("--by only applies to --crosstab")
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="rulestrata: %(levelname)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    if args.command != "rerun" and args.threads is None:
        args.threads = _threads_default()
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"rulestrata: error: {exc}", file=sys.stderr)
        return 2
    except (IoError, OSError) as exc:
        print(f"rulestrata: error: {exc}", file=sys.stderr)
        return 1
    except RuleStrataError as exc:
        print(f"rulestrata: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"rulestrata: error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
