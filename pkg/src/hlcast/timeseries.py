"""Quarterly time-series containers and data-preparation transforms.

Everything downstream works on two immutable containers: a
:class:`QuarterlySeries` (one named variable observed quarterly, with
explicit missing markers) and a :class:`Frame` (several series aligned to a
shared quarterly index). Transforms never mutate; they return new values.

CSV conventions: one file per series with header ``quarter,value`` and rows
like ``1995Q1,89792``; an empty value field marks a missing observation.
Frames export as ``quarter,<col1>,<col2>,...``. All CSV is UTF-8, comma
delimited, ``.`` decimal separator.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DataError, InsufficientDataError, ParseError, SchemaError

_QUARTER_RE = re.compile(r"^(\d{4})-?Q(\d)$")


@dataclass(frozen=True, order=True)
class Quarter:
    """A calendar quarter, ordered chronologically."""

    year: int
    quarter: int

    def __post_init__(self) -> None:
        if not 1 <= self.quarter <= 4:
            raise ValueError(f"quarter must be in 1..4, got {self.quarter}")

    @classmethod
    def from_index(cls, index: int) -> Quarter:
        """Inverse of :attr:`index`: quarter number ``index`` since year 0."""
        return cls(index // 4, index % 4 + 1)

    @property
    def index(self) -> int:
        return self.year * 4 + self.quarter - 1

    def __add__(self, n: int) -> Quarter:
        return Quarter.from_index(self.index + n)

    def __sub__(self, other: Quarter | int):
        if isinstance(other, Quarter):
            return self.index - other.index
        return Quarter.from_index(self.index - other)

    def __str__(self) -> str:
        return f"{self.year}Q{self.quarter}"


def parse_quarter(text: str) -> Quarter:
    """Parse ``YYYYQn`` or ``YYYY-Qn`` into a :class:`Quarter`.

    Raises:
        ParseError: if the text is malformed or n is outside 1..4.
    """
    m = _QUARTER_RE.match(text.strip())
    if m is None:
        raise ParseError(f"not a quarter label: {text!r} (expected YYYYQn or YYYY-Qn)")
    year, q = int(m.group(1)), int(m.group(2))
    if not 1 <= q <= 4:
        raise ParseError(f"quarter out of range in {text!r}: Q{q}")
    return Quarter(year, q)


def _clean(value) -> float | None:
    if value is None:
        return None
    v = float(value)
    return None if np.isnan(v) else v


@dataclass(frozen=True)
class QuarterlySeries:
    """A contiguous quarterly series with explicit missing markers.

    ``values[i]`` is the observation at ``start + i``; ``None`` marks a
    missing quarter. ``unit`` is free-form metadata ("eur", "fraction", ...)
    carried through every transform.
    """

    name: str
    start: Quarter
    values: tuple[float | None, ...]
    unit: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(_clean(v) for v in self.values))

    # -- basic access -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> Quarter:
        return self.start + (len(self.values) - 1)

    def quarters(self) -> Iterator[Quarter]:
        for i in range(len(self.values)):
            yield self.start + i

    def get(self, q: Quarter) -> float | None:
        """Value at quarter ``q``; None when missing or out of range."""
        i = q - self.start
        if 0 <= i < len(self.values):
            return self.values[i]
        return None

    def items(self) -> Iterator[tuple[Quarter, float | None]]:
        return zip(self.quarters(), self.values)

    def to_array(self) -> np.ndarray:
        """Values as a float array with NaN for missing."""
        return np.array([np.nan if v is None else v for v in self.values], dtype=float)

    def first_present(self) -> Quarter | None:
        for q, v in self.items():
            if v is not None:
                return q
        return None

    def rename(self, name: str) -> QuarterlySeries:
        return replace(self, name=name)

    def scale(self, factor: float, unit: str | None = None) -> QuarterlySeries:
        """Multiply all present values by ``factor``, optionally relabeling the unit."""
        return replace(
            self,
            values=tuple(None if v is None else v * factor for v in self.values),
            unit=self.unit if unit is None else unit,
        )

    # -- transforms ---------------------------------------------------------

    def trailing_mean(self, window: int) -> QuarterlySeries:
        """Arithmetic mean of the last ``window`` quarters, trailing.

        The first ``window - 1`` positions, and any position whose window
        contains a missing value, come out missing. A trailing (never
        centered) window avoids look-ahead when the result feeds forecasts.
        """
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        out: list[float | None] = []
        for i in range(len(self.values)):
            if i < window - 1:
                out.append(None)
                continue
            chunk = self.values[i - window + 1 : i + 1]
            if any(v is None for v in chunk):
                out.append(None)
            else:
                out.append(sum(chunk) / window)  # type: ignore[arg-type]
        return replace(self, values=tuple(out))

    def forward_fill(self) -> QuarterlySeries:
        """Replace each missing value with the most recent present one."""
        if not self.values or self.values[0] is None:
            raise DataError(
                f"series {self.name!r} starts with a missing value; nothing to fill from"
            )
        out: list[float | None] = []
        last = self.values[0]
        for v in self.values:
            if v is not None:
                last = v
            out.append(last)
        return replace(self, values=tuple(out))

    def lag(self, k: int) -> QuarterlySeries:
        """Shift values ``k`` quarters forward in time: result[t] = self[t-k]."""
        if k < 0:
            raise ValueError(f"lag must be >= 0, got {k}")
        if k == 0:
            return self
        shifted = ((None,) * k + self.values)[: len(self.values)]
        return replace(self, values=shifted)

    def diff(self) -> QuarterlySeries:
        """First difference: result[t] = self[t] - self[t-1]."""
        out: list[float | None] = [None]
        for prev, cur in zip(self.values, self.values[1:]):
            out.append(None if prev is None or cur is None else cur - prev)
        return replace(self, values=tuple(out[: len(self.values)]))

    def window(self, first: Quarter | None = None, last: Quarter | None = None) -> QuarterlySeries:
        """Restrict to quarters in ``[first, last]`` (clipped to the span)."""
        lo = self.start if first is None else max(first, self.start)
        hi = self.end if last is None else min(last, self.end)
        if hi < lo:
            return replace(self, start=lo, values=())
        i, j = lo - self.start, hi - self.start
        return replace(self, start=lo, values=self.values[i : j + 1])


def interpolate_yearly_to_quarterly(
    yearly: Mapping[int, float],
    anchor_quarter: int = 4,
    name: str = "",
    unit: str = "",
) -> QuarterlySeries:
    """Expand yearly observations to a quarterly series by linear interpolation.

    Each yearly value is anchored at ``anchor_quarter`` of its year (default
    Q4, matching annual reporting convention); quarters between adjacent
    anchors are linearly interpolated. Anchored quarters carry the yearly
    inputs exactly. The series starts and ends at the first and last anchor.

    Raises:
        InsufficientDataError: with fewer than two yearly values.
    """
    if not 1 <= anchor_quarter <= 4:
        raise ValueError(f"anchor_quarter must be in 1..4, got {anchor_quarter}")
    if len(yearly) < 2:
        raise InsufficientDataError(
            f"need at least 2 yearly values to interpolate, got {len(yearly)}"
        )
    years = sorted(yearly)
    start = Quarter(years[0], anchor_quarter)
    values: list[float | None] = [float(yearly[years[0]])]
    for y0, y1 in zip(years, years[1:]):
        steps = 4 * (y1 - y0)
        v0, v1 = float(yearly[y0]), float(yearly[y1])
        for s in range(1, steps):
            values.append(v0 + (v1 - v0) * s / steps)
        values.append(v1)  # anchor carries the input exactly
    return QuarterlySeries(name=name, start=start, values=tuple(values), unit=unit)


@dataclass(frozen=True)
class Frame:
    """Named quarterly series aligned to one shared index range."""

    start: Quarter
    columns: dict[str, QuarterlySeries] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self)
        for name, s in self.columns.items():
            if s.name != name or s.start != self.start or len(s) != n:
                raise SchemaError(f"column {name!r} is not aligned to the frame index")

    def __len__(self) -> int:
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))

    @property
    def end(self) -> Quarter:
        return self.start + (len(self) - 1)

    def quarters(self) -> Iterator[Quarter]:
        for i in range(len(self)):
            yield self.start + i

    def names(self) -> list[str]:
        return list(self.columns)

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def column(self, name: str) -> QuarterlySeries:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(f"frame has no column {name!r}") from None

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise SchemaError(f"frame is missing required column(s): {', '.join(missing)}")

    def select(self, names: Iterable[str]) -> Frame:
        return align([self.column(n) for n in names])

    def with_column(self, series: QuarterlySeries) -> Frame:
        """Return a new frame with ``series`` added (or replaced), realigned."""
        cols = [s for n, s in self.columns.items() if n != series.name]
        return align(cols + [series])

    def complete_range(self) -> tuple[Quarter, Quarter] | None:
        """The longest contiguous run of quarters where every column is present.

        This is the natural regression sample; returns None when no quarter
        has all columns observed.
        """
        best: tuple[Quarter, Quarter] | None = None
        run_start: Quarter | None = None
        for q in self.quarters():
            if all(s.get(q) is not None for s in self.columns.values()):
                if run_start is None:
                    run_start = q
                if best is None or (q - run_start) > (best[1] - best[0]):
                    best = (run_start, q)
            else:
                run_start = None
        return best


def align(columns: Iterable[QuarterlySeries]) -> Frame:
    """Align series onto the union of their index ranges.

    Quarters a series does not cover become missing markers; no values are
    fabricated. Duplicate column names are an error.
    """
    cols = list(columns)
    if not cols:
        raise SchemaError("align requires at least one column")
    names = [s.name for s in cols]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SchemaError(f"duplicate column name(s): {', '.join(sorted(dupes))}")
    start = min(s.start for s in cols)
    end = max(s.end for s in cols)
    n = end - start + 1
    aligned = {}
    for s in cols:
        values: list[float | None] = [None] * n
        for q, v in s.items():
            values[q - start] = v
        aligned[s.name] = replace(s, start=start, values=tuple(values))
    return Frame(start=start, columns=aligned)


# -- CSV input/output -------------------------------------------------------


def _format_value(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def _parse_value(text: str, path: Path, line: int) -> float | None:
    text = text.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{path}:{line}: not a number: {text!r}") from None


def read_series_csv(path: str | Path, name: str | None = None, unit: str = "") -> QuarterlySeries:
    """Read one series from a ``quarter,value`` CSV file.

    The series name defaults to the file stem. Rows must be contiguous and
    chronological; an empty value field marks a missing quarter.
    """
    path = Path(path)
    rows: list[tuple[Quarter, float | None]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["quarter", "value"]:
            raise ParseError(f"{path}:1: expected header 'quarter,value', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                q = parse_quarter(row[0])
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            rows.append((q, _parse_value(row[1], path, lineno)))
    if not rows:
        raise DataError(f"{path}: no data rows")
    for (prev, _), (cur, _) in zip(rows, rows[1:]):
        if cur - prev != 1:
            raise ParseError(
                f"{path}: quarters must be contiguous and ascending; "
                f"found {prev} followed by {cur}"
            )
    return QuarterlySeries(
        name=name if name is not None else path.stem,
        start=rows[0][0],
        values=tuple(v for _, v in rows),
        unit=unit,
    )


def write_series_csv(series: QuarterlySeries, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quarter", "value"])
        for q, v in series.items():
            writer.writerow([str(q), _format_value(v)])


def read_frame_csv(path: str | Path) -> Frame:
    """Read an aligned frame from a ``quarter,<col1>,<col2>,...`` CSV file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip().lower() != "quarter" or len(header) < 2:
            raise ParseError(f"{path}:1: expected header 'quarter,<columns...>', got {header!r}")
        names = [h.strip() for h in header[1:]]
        quarters: list[Quarter] = []
        data: list[list[float | None]] = [[] for _ in names]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(names) + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {len(names) + 1} fields, got {len(row)}"
                )
            try:
                quarters.append(parse_quarter(row[0]))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            for j, cell in enumerate(row[1:]):
                data[j].append(_parse_value(cell, path, lineno))
    if not quarters:
        raise DataError(f"{path}: no data rows")
    for prev, cur in zip(quarters, quarters[1:]):
        if cur - prev != 1:
            raise ParseError(f"{path}: quarters must be contiguous; {prev} followed by {cur}")
    series = [
        QuarterlySeries(name=n, start=quarters[0], values=tuple(vals))
        for n, vals in zip(names, data)
    ]
    return align(series)


def write_frame_csv(frame: Frame, path: str | Path) -> None:
    path = Path(path)
    names = frame.names()
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quarter"] + names)
        for q in frame.quarters():
            writer.writerow([str(q)] + [_format_value(frame.columns[n].get(q)) for n in names])
