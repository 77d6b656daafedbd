"""Quote ingestion and regression-dataset assembly.

Input CSV format: a header ``quote_date,contract,price`` followed by one
quote per line.  Dates are ISO-8601; contracts are relative codes (D+1,
WE+2, W+1, M+3, Q+5, Y+2) or absolute labels (CAL-2014, Q3-2012,
M-2012-07, D-2012-05-04, ...).  Relative codes are resolved against each
row's quote date and stored absolutely.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .estimator import Dataset
from .exceptions import DataError
from .periods import Period, parse_contract, period_children, resolve_relative

CSV_HEADER = "quote_date,contract,price"


@dataclass(frozen=True)
class Quote:
    """One forward price observation with its resolved delivery window."""

    quote_date: date
    contract: str
    period: Period
    price: float


@dataclass
class QuoteTable:
    """Immutable-after-load quote collection indexed by (date, period label)."""

    quotes: list[Quote] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._index: dict[tuple[date, str], Quote] = {}
        for q in self.quotes:
            key = (q.quote_date, q.period.label)
            if key in self._index:
                raise DataError(
                    f"duplicate quote for {q.period.label} on {q.quote_date.isoformat()}"
                )
            self._index[key] = q

    def __len__(self) -> int:
        return len(self.quotes)

    def lookup(self, quote_date: date, period_label: str) -> Quote | None:
        return self._index.get((quote_date, period_label))

    def dates(self) -> list[date]:
        return sorted({q.quote_date for q in self.quotes})

    def filter_dates(self, start: date, end: date) -> "QuoteTable":
        """Quotes with start <= quote_date <= end."""
        return QuoteTable([q for q in self.quotes if start <= q.quote_date <= end])

    def merged_with(self, other: "QuoteTable") -> "QuoteTable":
        return QuoteTable(self.quotes + other.quotes)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for q in sorted(self.quotes, key=lambda q: (q.quote_date, q.period.start, q.period.label)):
            lines.append(f"{q.quote_date.isoformat()},{q.period.label},{q.price!r}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def load_quotes(source) -> QuoteTable:
    """Parse a quote CSV from a path, string, or open text stream."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        path = Path(source)
        if not path.exists():
            raise DataError(f"cannot read quotes file: {path}")
        text = path.read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    lines = io.StringIO(text).read().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise DataError(f"line 1: expected header {CSV_HEADER!r}")
    quotes: list[Quote] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        raw_date, raw_contract, raw_price = (p.strip() for p in parts)
        try:
            quote_date = date.fromisoformat(raw_date)
        except ValueError as exc:
            raise DataError(f"line {lineno}: bad quote date {raw_date!r}") from exc
        try:
            price = float(raw_price)
        except ValueError as exc:
            raise DataError(f"line {lineno}: bad price {raw_price!r}") from exc
        if not np.isfinite(price):
            raise DataError(f"line {lineno}: non-finite price")
        try:
            code = parse_contract(raw_contract)
            period = resolve_relative(code, quote_date)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
        if period.start.date() < quote_date:
            raise DataError(
                f"line {lineno}: delivery window of {period.label} starts before quote date"
            )
        quotes.append(Quote(quote_date, raw_contract, period, price))
    try:
        return QuoteTable(quotes)
    except DataError as exc:
        raise DataError(str(exc)) from exc


@dataclass
class CompletenessReport:
    """How many candidate rows survived the all-children-quoted requirement."""

    n_rows: int
    n_dropped: int
    missing: list[tuple[str, str, list[str]]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "rows": self.n_rows,
            "dropped": self.n_dropped,
            "missing": [
                {"quote_date": d, "parent": p, "missing_children": m}
                for d, p, m in self.missing
            ],
        }


def build_regression_dataset(
    table: QuoteTable,
    parent_kind: str = "year",
    child_kind: str = "quarter",
) -> tuple[Dataset, CompletenessReport]:
    """Assemble (x, y) rows from joint parent/child quotes.

    One row per (quote date, parent period) where the parent and all K
    children are quoted on that date; anything with a missing child is
    dropped and counted in the completeness report.
    """
    rows: list[tuple[date, Period]] = sorted(
        ((q.quote_date, q.period) for q in table.quotes if q.period.kind == parent_kind),
        key=lambda item: (item[0], item[1].start),
    )
    xs: list[float] = []
    ys: list[list[float]] = []
    ids: list[str] = []
    missing: list[tuple[str, str, list[str]]] = []
    for quote_date, parent in rows:
        children = period_children(parent, child_kind)
        child_quotes = [table.lookup(quote_date, c.label) for c in children]
        if any(q is None for q in child_quotes):
            absent = [c.label for c, q in zip(children, child_quotes) if q is None]
            missing.append((quote_date.isoformat(), parent.label, absent))
            continue
        parent_quote = table.lookup(quote_date, parent.label)
        xs.append(parent_quote.price)
        ys.append([q.price for q in child_quotes])
        ids.append(f"{quote_date.isoformat()}|{parent.label}")
    if not xs:
        raise DataError("no joint observations")
    dataset = Dataset(x=np.array(xs), y=np.array(ys), case_ids=ids)
    return dataset, CompletenessReport(n_rows=len(xs), n_dropped=len(missing), missing=missing)
