"""Readers for JHU-style time-series CSVs and weekly vaccination counts."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "JHU_FIXED_COLUMNS",
    "CountrySeries",
    "VaccinationSchedule",
    "parse_jhu_timeseries",
    "write_jhu_timeseries",
    "clean_cumulative",
    "weekly_to_daily_vaccination",
    "read_vaccination_csv",
    "write_vaccination_csv",
]

JHU_FIXED_COLUMNS = ("Province/State", "Country/Region", "Lat", "Long")
VACCINATION_HEADER = ("week_start", "first_doses")


@dataclass(frozen=True)
class CountrySeries:
    country: str
    start_date: dt.date
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).reshape(-1))

    def __len__(self):
        return self.values.size

    def dates(self) -> list:
        return [self.start_date + dt.timedelta(days=k) for k in range(self.values.size)]

    def daily(self) -> np.ndarray:
        """First differences, with the first day's cumulative count as day 0."""
        return np.diff(self.values, prepend=0.0)

    def truncate(self, n_days: int) -> "CountrySeries":
        return CountrySeries(self.country, self.start_date, self.values[:n_days].copy())

    def since(self, first: dt.date) -> "CountrySeries":
        skip = (first - self.start_date).days
        if skip < 0 or skip >= self.values.size:
            raise ValueError(f"{first} is outside the series range")
        return CountrySeries(self.country, first, self.values[skip:].copy())


def _parse_us_date(text: str) -> dt.date:
    try:
        m, d, y = (int(x) for x in text.strip().split("/"))
    except ValueError:
        raise ValueError(f"bad date column {text!r}; expected M/D/YY") from None
    if y < 100:
        y += 2000
    return dt.date(y, m, d)


def _parse_count(cell: str, row: int, col: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ValueError(f"non-numeric cell {cell!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise ValueError(f"non-finite cell {cell!r} at row {row}, column {col}")
    return v


def parse_jhu_timeseries(content: str, country: str) -> CountrySeries:
    """Sum every row of ``country`` in a JHU global time-series CSV."""
    rows = list(csv.reader(io.StringIO(content)))
    if not rows:
        raise ValueError("empty file")
    header = [h.strip() for h in rows[0]]
    if tuple(header[:4]) != JHU_FIXED_COLUMNS:
        raise ValueError(f"header must start with {', '.join(JHU_FIXED_COLUMNS)}; got {header[:4]}")
    dates = [_parse_us_date(h) for h in header[4:]]
    if not dates:
        raise ValueError("no date columns")
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            raise ValueError(f"date columns are not contiguous days ({a} then {b})")

    total = np.zeros(len(dates))
    found = False
    available = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"ragged row {lineno}: {len(row)} cells, header has {len(header)}")
        name = row[1].strip()
        available.add(name)
        if name != country:
            continue
        found = True
        total += [_parse_count(c, lineno, j) for j, c in enumerate(row[4:], start=5)]
    if not found:
        raise ValueError(f"country {country!r} not found; available: {', '.join(sorted(available))}")
    return CountrySeries(country, dates[0], total)


def write_jhu_timeseries(series: CountrySeries) -> str:
    """Single-row JHU CSV that :func:`parse_jhu_timeseries` reads back exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([*JHU_FIXED_COLUMNS, *(f"{d.month}/{d.day}/{d.year % 100:02d}" for d in series.dates())])
    w.writerow(["", series.country, "0", "0", *(repr(float(v)) for v in series.values)])
    return buf.getvalue()


def clean_cumulative(series):
    """Running maximum so the series never decreases.

    Returns ``(cleaned, n_adjusted)``. Accepts a :class:`CountrySeries` (and
    returns one) or a plain sequence.
    """
    if isinstance(series, CountrySeries):
        vals, n = clean_cumulative(series.values)
        return CountrySeries(series.country, series.start_date, vals), n
    vals = np.asarray(series, dtype=np.float64).reshape(-1)
    if vals.size == 0:
        return vals.copy(), 0
    cleaned = np.maximum.accumulate(vals)
    return cleaned, int(np.count_nonzero(cleaned != vals))


@dataclass(frozen=True)
class VaccinationSchedule:
    """First doses per day, indexed by day offset from the simulation start.

    People become immune ``lag_days`` after their dose, so the effective
    removal rate is ``v(t) = daily_doses[floor(t) - lag_days]`` and zero
    outside the recorded range.
    """

    daily_doses: np.ndarray
    lag_days: int = 30
    origin: dt.date | None = None

    def __post_init__(self):
        d = np.asarray(self.daily_doses, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "daily_doses", d)
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("daily doses must be finite and non-negative")
        if self.lag_days < 0:
            raise ValueError("lag_days must be non-negative")

    def v(self, t: float) -> float:
        k = math.floor(t) - self.lag_days
        if 0 <= k < self.daily_doses.size:
            return float(self.daily_doses[k])
        return 0.0

    def effective_rates(self, n_days: int) -> np.ndarray:
        """``v`` on days ``0 .. n_days - 1``."""
        out = np.zeros(n_days)
        lo = self.lag_days
        hi = min(n_days, lo + self.daily_doses.size)
        if hi > lo:
            out[lo:hi] = self.daily_doses[: hi - lo]
        return out

    @property
    def total_doses(self) -> float:
        return math.fsum(self.daily_doses)


def _as_offset(start, origin):
    if isinstance(start, dt.date):
        if origin is None:
            raise ValueError("date week starts need an origin date")
        return (start - origin).days
    if isinstance(start, (int, np.integer)):
        return int(start)
    raise TypeError(f"week start must be a date or an integer day, got {start!r}")


def weekly_to_daily_vaccination(records, lag_days: int = 30, origin: dt.date | None = None, through=None):
    """Spread weekly first-dose counts evenly over each week's seven days.

    ``records`` holds ``(week_start, count)`` pairs where ``week_start`` is a
    date or a day offset. Dates are measured from ``origin`` (default: the
    first week start). If ``through`` (last covered day, same type as the week
    starts) cuts the final week short, that week's count is spread over the
    days that remain so no doses are lost.
    """
    records = list(records)
    if origin is None and records and isinstance(records[0][0], dt.date):
        origin = records[0][0]
    if not records:
        return VaccinationSchedule(np.zeros(0), lag_days, origin)
    starts = [_as_offset(s, origin) for s, _ in records]
    counts = [float(c) for _, c in records]
    if any(not math.isfinite(c) or c < 0 for c in counts):
        raise ValueError("dose counts must be finite and non-negative")
    if starts[0] < 0:
        raise ValueError("week starts before the origin")
    for (a, b) in zip(starts, starts[1:]):
        if b <= a:
            raise ValueError(f"week starts must strictly increase (day {a} then day {b})")
        if b < a + 7:
            raise ValueError(f"weeks starting on day {a} and day {b} overlap")
    end = starts[-1] + 7
    if through is not None:
        last = _as_offset(through, origin)
        if last < starts[-1]:
            raise ValueError("through falls before the last week start")
        end = min(end, last + 1)
    daily = np.zeros(end)
    for s, c in zip(starts, counts):
        stop = min(s + 7, end)
        daily[s:stop] = c / (stop - s)
    return VaccinationSchedule(daily, lag_days, origin)


def read_vaccination_csv(content: str):
    """Parse ``week_start,first_doses`` rows into ``[(date, count), ...]``."""
    rows = list(csv.reader(io.StringIO(content)))
    if not rows or tuple(h.strip() for h in rows[0]) != VACCINATION_HEADER:
        raise ValueError(f"vaccination header must be {','.join(VACCINATION_HEADER)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"ragged row {lineno}")
        try:
            day = dt.date.fromisoformat(row[0].strip())
            count = int(row[1])
        except ValueError:
            raise ValueError(f"bad vaccination row {lineno}: {row}") from None
        out.append((day, count))
    return out


def write_vaccination_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(VACCINATION_HEADER)
    for day, count in records:
        w.writerow([day.isoformat(), int(count)])
    return buf.getvalue()
