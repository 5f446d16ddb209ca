"""Close-price ingestion: per-ticker CSV parsing, panel alignment, period slicing.

Input files carry at least ``Date`` and ``Close`` columns (extra columns are
ignored). A wide variant holds one ``Date`` column plus one column per ticker.
Rows whose close is empty or non-numeric are treated as missing quotes and
dropped; the chosen alignment policy then decides how cross-ticker gaps are
reconciled.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import IO, Iterable, Literal

import numpy as np

from .errors import (
    DuplicateDate,
    EmptyIntersection,
    InsufficientHistory,
    MalformedCsv,
    NonPositivePrice,
)

logger = logging.getLogger(__name__)

AlignmentPolicy = Literal["intersection", "forward_fill"]
PeriodLabel = Literal["train", "test"]


@dataclass(frozen=True)
class PriceSeries:
    """Dated close prices for one ticker, strictly ascending, all positive."""

    ticker: str
    observations: tuple[tuple[date, float], ...]

    def __post_init__(self) -> None:
        previous: date | None = None
        for day, close in self.observations:
            if previous is not None:
                if day == previous:
                    raise DuplicateDate(f"{self.ticker}: duplicate date {day.isoformat()}")
                if day < previous:
                    raise ValueError(f"{self.ticker}: dates not ascending at {day.isoformat()}")
            if not np.isfinite(close) or close <= 0.0:
                raise NonPositivePrice(f"{self.ticker}: close {close!r} on {day.isoformat()}")
            previous = day

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(day for day, _ in self.observations)

    @property
    def closes(self) -> tuple[float, ...]:
        return tuple(close for _, close in self.observations)

    def to_csv(self) -> str:
        """Serialize back to ``Date,Close`` text; floats keep full precision."""
        lines = ["Date,Close"]
        lines.extend(f"{day.isoformat()},{close!r}" for day, close in self.observations)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PricePanel:
    """Date-aligned close prices: T dates x N tickers, no missing cells."""

    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    closes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        closes = np.asarray(self.closes, dtype=float)
        closes.flags.writeable = False
        object.__setattr__(self, "closes", closes)
        if len(self.tickers) < 2:
            raise ValueError("panel needs at least 2 tickers")
        if len(self.dates) < 2:
            raise InsufficientHistory(f"panel has {len(self.dates)} date(s), need >= 2")
        if closes.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(f"close matrix shape {closes.shape} does not match dates x tickers")
        if len(set(self.tickers)) != len(self.tickers):
            raise ValueError("duplicate tickers in panel")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("panel dates not strictly increasing")
        if not np.isfinite(closes).all() or (closes <= 0.0).any():
            raise NonPositivePrice("panel contains non-finite or non-positive closes")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def series(self, ticker: str) -> PriceSeries:
        col = self.tickers.index(ticker)
        return PriceSeries(
            ticker=ticker,
            observations=tuple((day, float(close)) for day, close in zip(self.dates, self.closes[:, col])),
        )


@dataclass(frozen=True)
class PeriodSpec:
    """Inclusive calendar window tagged as the train or test leg."""

    label: PeriodLabel
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.label not in ("train", "test"):
            raise ValueError(f"period label must be 'train' or 'test', got {self.label!r}")
        if self.start > self.end:
            raise ValueError(f"{self.label}: start {self.start} after end {self.end}")

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end

    def overlaps(self, other: "PeriodSpec") -> bool:
        return self.start <= other.end and other.start <= self.end


def _as_text_lines(source: IO[bytes] | IO[str] | bytes | str) -> Iterable[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8-sig"))
    if isinstance(source, str):
        return io.StringIO(source.removeprefix("﻿"))
    raw = source.read()
    if isinstance(raw, bytes):
        return io.StringIO(raw.decode("utf-8-sig"))
    return io.StringIO(raw.removeprefix("﻿"))


def _parse_iso_date(raw: str, row_number: int) -> date:
    try:
        return date.fromisoformat(raw.strip())
    except ValueError:
        raise MalformedCsv(f"row {row_number}: bad date {raw!r} (want YYYY-MM-DD)") from None


def _parse_close(raw: str | None) -> float | None:
    """Return the close value, or None when the cell is a missing quote."""
    if raw is None:
        return None
    text = raw.strip()
    if not text or text.lower() in ("nan", "null", "none", "na", "n/a"):
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def parse_price_csv(source: IO[bytes] | IO[str] | bytes | str, ticker: str) -> PriceSeries:
    """Parse one ticker's ``Date,Close`` CSV into a sorted PriceSeries.

    Rows with an empty or non-numeric close are dropped as missing quotes.
    Raises MalformedCsv for header/arity problems, NonPositivePrice for a
    close <= 0, and DuplicateDate for a repeated date.
    """
    reader = csv.reader(_as_text_lines(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv(f"{ticker}: empty file") from None
    columns = [name.strip() for name in header]
    try:
        date_col = columns.index("Date")
        close_col = columns.index("Close")
    except ValueError:
        raise MalformedCsv(f"{ticker}: header must contain Date and Close, got {columns}") from None

    rows: list[tuple[date, float]] = []
    dropped = 0
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise MalformedCsv(f"{ticker}: row {row_number} has {len(row)} fields, header has {len(columns)}")
        day = _parse_iso_date(row[date_col], row_number)
        close = _parse_close(row[close_col])
        if close is None:
            dropped += 1
            continue
        if close <= 0.0:
            raise NonPositivePrice(f"{ticker}: close {close} on {day.isoformat()} (row {row_number})")
        rows.append((day, close))

    if dropped:
        logger.info("%s: dropped %d row(s) with missing close", ticker, dropped)
    rows.sort(key=lambda item: item[0])
    for (day_a, _), (day_b, _) in zip(rows, rows[1:]):
        if day_a == day_b:
            raise DuplicateDate(f"{ticker}: duplicate date {day_a.isoformat()}")
    return PriceSeries(ticker=ticker, observations=tuple(rows))


def parse_wide_csv(
    source: IO[bytes] | IO[str] | bytes | str,
    tickers: Iterable[str] | None = None,
) -> list[PriceSeries]:
    """Parse a wide CSV (``Date`` plus one close column per ticker).

    Empty cells are missing quotes for that ticker only. When ``tickers`` is
    given, only those columns are kept, in the given order.
    """
    reader = csv.reader(_as_text_lines(source))
    try:
        header = [name.strip() for name in next(reader)]
    except StopIteration:
        raise MalformedCsv("wide CSV: empty file") from None
    if not header or header[0] != "Date":
        raise MalformedCsv(f"wide CSV: first column must be Date, got {header[:1]}")
    all_tickers = header[1:]
    if not all_tickers or any(not name for name in all_tickers):
        raise MalformedCsv("wide CSV: every ticker column needs a name")
    if len(set(all_tickers)) != len(all_tickers):
        raise MalformedCsv("wide CSV: duplicate ticker columns")

    wanted = list(tickers) if tickers is not None else all_tickers
    missing = [name for name in wanted if name not in all_tickers]
    if missing:
        raise MalformedCsv(f"wide CSV: tickers not present: {missing}")
    col_of = {name: all_tickers.index(name) + 1 for name in wanted}

    per_ticker: dict[str, list[tuple[date, float]]] = {name: [] for name in wanted}
    seen_dates: set[date] = set()
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"wide CSV: row {row_number} has {len(row)} fields, header has {len(header)}")
        day = _parse_iso_date(row[0], row_number)
        if day in seen_dates:
            raise DuplicateDate(f"wide CSV: duplicate date {day.isoformat()}")
        seen_dates.add(day)
        for name in wanted:
            close = _parse_close(row[col_of[name]])
            if close is None:
                continue
            if close <= 0.0:
                raise NonPositivePrice(f"{name}: close {close} on {day.isoformat()} (row {row_number})")
            per_ticker[name].append((day, close))

    return [
        PriceSeries(ticker=name, observations=tuple(sorted(per_ticker[name])))
        for name in wanted
    ]


def load_price_csv(path: str | Path, ticker: str | None = None) -> PriceSeries:
    """Read ``<TICKER>.csv`` from disk; the ticker defaults to the file stem."""
    path = Path(path)
    with path.open("rb") as handle:
        return parse_price_csv(handle, ticker or path.stem)


def align_panel(series: list[PriceSeries], policy: AlignmentPolicy = "intersection") -> PricePanel:
    """Join per-ticker series into one panel under the given missing-data policy.

    ``intersection`` keeps only dates quoted by every ticker. ``forward_fill``
    takes the union of dates, carries the last prior close into gaps, and
    drops leading dates where any ticker has no prior value yet.
    """
    if len(series) < 2:
        raise ValueError("align_panel needs at least 2 series")
    if policy not in ("intersection", "forward_fill"):
        raise ValueError(f"unknown alignment policy {policy!r}")

    tickers = tuple(s.ticker for s in series)
    if policy == "intersection":
        common = set(series[0].dates)
        for s in series[1:]:
            common &= set(s.dates)
        if not common:
            raise EmptyIntersection(f"no common dates across {', '.join(tickers)}")
        dates = tuple(sorted(common))
    else:
        union: set[date] = set()
        for s in series:
            union |= set(s.dates)
        # a date survives once every ticker has at least one quote on or before it
        latest_start = max((s.dates[0] for s in series if s.observations), default=None)
        if latest_start is None or not union:
            raise EmptyIntersection(f"no dates available across {', '.join(tickers)}")
        dates = tuple(sorted(day for day in union if day >= latest_start))

    if len(dates) < 2:
        raise InsufficientHistory(f"{len(dates)} aligned date(s) across {', '.join(tickers)}, need >= 2")

    closes = np.empty((len(dates), len(series)), dtype=float)
    for col, s in enumerate(series):
        if policy == "intersection":
            quoted = dict(s.observations)
            closes[:, col] = [quoted[day] for day in dates]
        else:
            observations = s.observations
            pointer = 0
            last = np.nan
            for row, day in enumerate(dates):
                while pointer < len(observations) and observations[pointer][0] <= day:
                    last = observations[pointer][1]
                    pointer += 1
                closes[row, col] = last  # latest_start guarantees a prior quote exists
    return PricePanel(tickers=tickers, dates=dates, closes=closes)


def slice_period(panel: PricePanel, period: PeriodSpec) -> PricePanel:
    """Restrict a panel to dates inside the period's inclusive window."""
    keep = [row for row, day in enumerate(panel.dates) if period.contains(day)]
    if len(keep) < 2:
        raise InsufficientHistory(
            f"{period.label} window {period.start.isoformat()}..{period.end.isoformat()} "
            f"covers {len(keep)} panel date(s), need >= 2"
        )
    return PricePanel(
        tickers=panel.tickers,
        dates=tuple(panel.dates[row] for row in keep),
        closes=panel.closes[keep, :],
    )
