"""Rule tables, item frequency tables and stratified cross-tabs.

Displayed numbers are half-up roundings computed in integer arithmetic from
the exact count ratios, so nothing is rounded twice.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .errors import IoError, UnknownItem
from .model import ItemDictionary, TransactionDatabase, item_frequencies
from .rules import RuleSet

RULE_COLUMNS = ("id", "antecedent", "support_pct", "confidence_pct", "lift",
                "count_a", "count_k", "count_ak", "n")
FORMATS = ("csv", "json", "text")


def half_up(num: int, den: int, digits: int, scale: int = 1) -> str:
    """``num/den * scale`` rounded half-up to ``digits`` decimals, as text."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    q = 10 ** digits
    neg = (num < 0) != (den < 0)
    num, den = abs(num) * scale * q, abs(den)
    units = (2 * num + den) // (2 * den)
    whole, frac = divmod(units, q)
    text = f"{whole}.{frac:0{digits}d}" if digits else str(whole)
    return "-" + text if neg and units else text


@dataclass(frozen=True)
class RuleRow:
    id: str
    antecedent: str
    support_pct: str
    confidence_pct: str
    lift: str
    count_a: int
    count_k: int
    count_ak: int
    n: int

    @classmethod
    def from_csv(cls, fields: Sequence[str]) -> "RuleRow":
        rid, ante, s, c, l, ca, ck, cak, n = fields
        return cls(rid, ante, s, c, l, int(ca), int(ck), int(cak), int(n))

    def recomputed(self) -> tuple[str, str, str]:
        """Display values recomputed from the row's own counts."""
        return (
            half_up(self.count_ak, self.n, 2, 100),
            half_up(self.count_ak, self.count_a, 2, 100),
            half_up(self.count_ak * self.n, self.count_a * self.count_k, 2),
        )


def render_antecedent(items: Sequence[int], dictionary: ItemDictionary) -> str:
    return ", ".join(
        f"{dictionary.items[i].variable} = {dictionary.items[i].category}" for i in items
    )


def rule_rows(rules: RuleSet, dictionary: ItemDictionary, top: int | None = None) -> list[RuleRow]:
    chosen = rules.rules if top is None else rules.rules[:top]
    return [
        RuleRow(
            f"R{rank}",
            render_antecedent(r.antecedent, dictionary),
            half_up(r.count_ak, r.n, 2, 100),
            half_up(r.count_ak, r.count_a, 2, 100),
            half_up(r.count_ak * r.n, r.count_a * r.count_k, 2),
            r.count_a, r.count_k, r.count_ak, r.n,
        )
        for rank, r in enumerate(chosen, start=1)
    ]


@contextmanager
def _open_out(destination: str | Path | TextIO) -> Iterator[TextIO]:
    if hasattr(destination, "write"):
        yield destination  # type: ignore[misc]
        return
    if str(destination) == "-":
        yield sys.stdout
        return
    try:
        fh = open(destination, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {destination}: {exc.strerror}") from None
    with fh:
        yield fh


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]], numeric_from: int) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]

    def line(cells):
        parts = [c.rjust(w) if j >= numeric_from else c.ljust(w)
                 for j, (c, w) in enumerate(zip(cells, widths))]
        return "  ".join(parts).rstrip() + "\n"

    return line(header) + "".join(line(r) for r in rows)


def emit_rule_table(
    rules: RuleSet,
    dictionary: ItemDictionary,
    destination: str | Path | TextIO,
    fmt: str = "csv",
    top: int | None = None,
) -> list[RuleRow]:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    rows = rule_rows(rules, dictionary, top)
    with _open_out(destination) as fh:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RULE_COLUMNS)
            for row in rows:
                w.writerow(astuple_row(row))
        elif fmt == "json":
            chosen = rules.rules if top is None else rules.rules[:top]
            payload = []
            for row, r in zip(rows, chosen):
                payload.append({
                    **asdict(row),
                    "antecedent_items": [dictionary.label(i) for i in r.antecedent],
                    "consequent": dictionary.label(r.consequent),
                    "support": r.support,
                    "confidence": r.confidence,
                    "lift_value": r.lift,
                })
            fh.write(json.dumps(payload, indent=2) + "\n")
        else:
            body = [[str(x) for x in astuple_row(row)] for row in rows]
            fh.write(_aligned(RULE_COLUMNS, body, numeric_from=2))
    return rows


def astuple_row(row: RuleRow) -> tuple:
    return tuple(getattr(row, c) for c in RULE_COLUMNS)


def frequency_rows(db: TransactionDatabase) -> list[tuple[str, int]]:
    return [(item.label, count) for item, count in item_frequencies(db)]


def emit_frequency_table(db: TransactionDatabase, destination: str | Path | TextIO,
                         fmt: str = "csv") -> list[tuple[str, int]]:
    rows = frequency_rows(db)
    with _open_out(destination) as fh:
        if fmt == "text":
            fh.write(_aligned(("item", "count"), [(a, str(b)) for a, b in rows], numeric_from=1))
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("item", "count"))
            w.writerows(rows)
    return rows


@dataclass(frozen=True)
class CrossTab:
    variable: str
    stratifier: str
    categories: tuple[str, ...]
    strata: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # counts[row][stratum]
    totals: tuple[int, ...]

    def percent(self, row: int, col: int, digits: int = 1) -> str:
        if self.totals[col] == 0:
            return ""
        return half_up(self.counts[row][col], self.totals[col], digits, 100)

    def cell(self, category: str, stratum: str) -> tuple[int, str]:
        r, c = self.categories.index(category), self.strata.index(stratum)
        return self.counts[r][c], self.percent(r, c)


def crosstab(db: TransactionDatabase, variable: str, stratifier: str) -> CrossTab:
    d = db.dictionary
    for v in (variable, stratifier):
        if v not in d.by_variable:
            raise UnknownItem(f"unknown variable {v!r}")
    rows, cols = d.by_variable[variable], d.by_variable[stratifier]
    counts = tuple(tuple(db.count(tuple(sorted((r, c)))) if r != c else db.count((r,))
                         for c in cols) for r in rows)
    totals = tuple(db.count((c,)) for c in cols)
    return CrossTab(variable, stratifier,
                    tuple(d.items[i].category for i in rows),
                    tuple(d.items[i].category for i in cols),
                    counts, totals)


def emit_crosstab(db: TransactionDatabase, variable: str, stratifier: str,
                  destination: str | Path | TextIO, fmt: str = "csv") -> CrossTab:
    tab = crosstab(db, variable, stratifier)
    header = [variable]
    for s in tab.strata:
        header += [f"{s}_n", f"{s}_pct"]
    body = []
    for r, cat in enumerate(tab.categories):
        row = [cat]
        for c in range(len(tab.strata)):
            row += [str(tab.counts[r][c]), tab.percent(r, c)]
        body.append(row)
    with _open_out(destination) as fh:
        if fmt == "text":
            fh.write(_aligned(header, body, numeric_from=1))
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(body)
    return tab


def render(fn, *args, **kwargs) -> str:
    """Run an ``emit_*`` function into a string instead of a file."""
    buf = io.StringIO()
    fn(*args, destination=buf, **kwargs)
    return buf.getvalue()
