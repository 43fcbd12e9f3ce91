"""Preparation pipeline: join source tables on a crash key, recode and band
values, filter records, and encode the result as a TransactionDatabase.

Every stage returns a new ``RecordSet``; counters travel with it so the
row accounting of a run can be audited afterwards.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DuplicateKey, IoError, SchemaViolation
from .model import TransactionDatabase

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TableSpec:
    name: str
    path: str
    key: str


@dataclass(frozen=True)
class VariableSpec:
    name: str
    table: str
    column: str


@dataclass(frozen=True)
class Band:
    lower: float
    upper: float | None  # None: unbounded
    label: str

    def contains(self, x: float) -> bool:
        return self.lower <= x and (self.upper is None or x < self.upper)


@dataclass(frozen=True)
class FilterSpec:
    variable: str
    allowed: tuple[str, ...]


@dataclass(frozen=True)
class SchemaConfig:
    tables: tuple[TableSpec, ...]
    variables: tuple[VariableSpec, ...]
    recodes: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    bands: Mapping[str, tuple[Band, ...]] = field(default_factory=dict)
    filters: tuple[FilterSpec, ...] = ()
    missing_label: str = "unknown"
    delimiter: str = ","
    base_dir: Path = Path(".")

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaViolation("duplicate variable names in config")
        tables = {t.name for t in self.tables}
        for v in self.variables:
            if v.table not in tables:
                raise SchemaViolation(f"variable {v.name!r} refers to undeclared table {v.table!r}")
        for var, bands in self.bands.items():
            if var not in names:
                raise SchemaViolation(f"bands given for undeclared variable {var!r}")
            for a, b in zip(bands, bands[1:]):
                if a.upper is None or a.upper > b.lower:
                    raise SchemaViolation(f"bands of {var!r} overlap or are out of order")
            for b in bands:
                if b.upper is not None and b.upper <= b.lower:
                    raise SchemaViolation(f"empty band {b.label!r} in {var!r}")
        for var in self.recodes:
            if var not in names:
                raise SchemaViolation(f"recode given for undeclared variable {var!r}")
        seen = set()
        for f in self.filters:
            if f.variable not in names:
                raise SchemaViolation(f"filter on undeclared variable {f.variable!r}")
            if f.variable in seen:
                raise SchemaViolation(f"more than one filter on {f.variable!r}")
            seen.add(f.variable)

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @classmethod
    def from_dict(cls, raw: Mapping, base_dir: str | Path = ".") -> "SchemaConfig":
        try:
            tables = tuple(TableSpec(t["name"], t["path"], t["key"]) for t in raw["tables"])
            variables = tuple(
                VariableSpec(v["name"], v["table"], v["column"]) for v in raw["variables"]
            )
            bands = {
                var: tuple(Band(float(lo), None if hi is None else float(hi), str(label))
                           for lo, hi, label in spec)
                for var, spec in raw.get("bands", {}).items()
            }
            filters = tuple(
                FilterSpec(f["variable"], tuple(f["allowed"])) for f in raw.get("filters", [])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"malformed config: {exc!r}") from None
        recodes = {var: {str(k): str(v) for k, v in m.items()}
                   for var, m in raw.get("recodes", {}).items()}
        return cls(tables, variables, recodes, bands, filters,
                   raw.get("missing_label", "unknown"), raw.get("delimiter", ","),
                   Path(base_dir))

    @classmethod
    def load(cls, path: str | Path) -> "SchemaConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw, path.parent)


@dataclass(frozen=True)
class RecordSet:
    records: tuple[tuple[str, Mapping[str, str | None]], ...]
    rows_read: Mapping[str, int] = field(default_factory=dict)
    unmatched: Mapping[str, int] = field(default_factory=dict)
    duplicates: Mapping[str, int] = field(default_factory=dict)
    dropped: Mapping[str, int] = field(default_factory=dict)
    unparseable: Mapping[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def counters(self) -> dict:
        return {
            "rows_read": dict(self.rows_read),
            "unmatched": dict(self.unmatched),
            "duplicates": dict(self.duplicates),
            "dropped": dict(self.dropped),
            "unparseable": dict(self.unparseable),
            "records": len(self.records),
        }


def _read_table(spec: TableSpec, columns: Sequence[str], config: SchemaConfig):
    path = Path(spec.path)
    if not path.is_absolute():
        path = config.base_dir / path
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read table {spec.name!r} at {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh, delimiter=config.delimiter)
        header = next(reader, None)
        if header is None:
            raise SchemaViolation(f"table {spec.name!r} ({path}) has no header row")
        header = [h.strip() for h in header]
        pos = {}
        for col in (spec.key, *columns):
            if col not in header:
                raise SchemaViolation(f"table {spec.name!r} ({path}) has no column {col!r}")
            pos[col] = header.index(col)
        rows: dict[str, dict[str, str | None]] = {}
        n_rows = dups = 0
        for line in reader:
            if not line:
                continue
            n_rows += 1
            line = line + [""] * (len(header) - len(line))
            key = line[pos[spec.key]].strip()
            if key in rows:
                dups += 1
                continue
            rows[key] = {c: (line[pos[c]].strip() or None) for c in columns}
    if dups:
        warnings.warn(f"table {spec.name!r}: {dups} duplicate keys, first row kept", DuplicateKey,
                      stacklevel=3)
    return rows, n_rows, dups


def load_and_join(config: SchemaConfig) -> RecordSet:
    """Inner join of every table on its key; record order follows the first table."""
    per_table = {}
    rows_read, duplicates = {}, {}
    for spec in config.tables:
        cols = [v.column for v in config.variables if v.table == spec.name]
        rows, n_rows, dups = _read_table(spec, cols, config)
        per_table[spec.name] = rows
        rows_read[spec.name] = n_rows
        duplicates[spec.name] = dups

    all_keys: dict[str, None] = {}
    for spec in config.tables:
        all_keys.update(dict.fromkeys(per_table[spec.name]))
    unmatched = {spec.name: 0 for spec in config.tables}
    records = []
    for key in all_keys:
        missing = [name for name, rows in per_table.items() if key not in rows]
        if missing:
            for name in missing:
                unmatched[name] += 1
            continue
        rec = {v.name: per_table[v.table][key][v.column] for v in config.variables}
        records.append((key, rec))
    log.info("joined %d records from %d tables", len(records), len(config.tables))
    return RecordSet(tuple(records), rows_read, unmatched, duplicates)


def _band(value: float, bands: Sequence[Band]) -> str | None:
    for b in bands:
        if b.contains(value):
            return b.label
    return None


def apply_recode(rs: RecordSet, config: SchemaConfig) -> RecordSet:
    missing = config.missing_label
    unparseable = dict(rs.unparseable)
    out = []
    for key, rec in rs.records:
        new = {}
        for var, value in rec.items():
            if var in config.bands:
                if value is None:
                    new[var] = missing
                    continue
                try:
                    x = float(value)
                except ValueError:
                    x = None
                label = _band(x, config.bands[var]) if x is not None else None
                if label is None:
                    unparseable[var] = unparseable.get(var, 0) + 1
                    label = missing
                new[var] = label
            elif var in config.recodes:
                new[var] = config.recodes[var].get(value, missing) if value is not None else missing
            else:
                new[var] = value if value is not None else missing
        out.append((key, new))
    return replace(rs, records=tuple(out), unparseable=unparseable)


def apply_filters(rs: RecordSet, config: SchemaConfig) -> RecordSet:
    names = set(config.variable_names)
    for f in config.filters:
        if f.variable not in names:
            raise SchemaViolation(f"filter on undeclared variable {f.variable!r}")
    records = list(rs.records)
    dropped = dict(rs.dropped)
    for f in config.filters:
        allowed = set(f.allowed)
        kept = [r for r in records if r[1].get(f.variable) in allowed]
        dropped[f.variable] = dropped.get(f.variable, 0) + len(records) - len(kept)
        records = kept
    return replace(rs, records=tuple(records), dropped=dropped)


def build_database(rs: RecordSet, variables: Sequence[str]) -> TransactionDatabase:
    if not variables:
        raise SchemaViolation("at least one variable is required")
    return TransactionDatabase.from_records(list(rs.records), list(variables))


def run_pipeline(config: SchemaConfig) -> tuple[TransactionDatabase, RecordSet]:
    rs = apply_filters(apply_recode(load_and_join(config), config), config)
    return build_database(rs, config.variable_names), rs


def write_database_csv(db: TransactionDatabase, path: str | Path) -> None:
    """``record_id`` plus one category column per variable, in declared order."""
    d = db.dictionary
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["record_id", *db.variables])
            for t in db.transactions:
                cats = {d.items[i].variable: d.items[i].category for i in t.items}
                w.writerow([t.record_id, *(cats[v] for v in db.variables)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from None


def read_database_csv(path: str | Path) -> TransactionDatabase:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise IoError(f"cannot read database {path}: {exc.strerror}") from None
    if not header or header[0] != "record_id":
        raise SchemaViolation(f"{path}: first column must be 'record_id'")
    variables = header[1:]
    if not variables:
        raise SchemaViolation(f"{path}: no variable columns")
    records = []
    for r in rows:
        if len(r) != len(header):
            raise SchemaViolation(f"{path}: record {r[0]!r} has {len(r)} fields, expected {len(header)}")
        records.append((r[0], dict(zip(variables, r[1:]))))
    return TransactionDatabase.from_records(records, variables)
