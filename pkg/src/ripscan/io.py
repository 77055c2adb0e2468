"""Minute-bar ingestion, timestamp alignment, synthetic fixtures, CSV output.

Input timestamps are ISO-8601 ("2010-05-06 14:32" or with a T separator) or
integer minutes since the Unix epoch, declared per file format. All numeric
output uses Python's shortest round-trip float formatting, so written values
parse back bit-identical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime, time as dtime, timedelta

import numpy as np

from .anomaly import AnomalyRecord

_EPOCH = datetime(1970, 1, 1)


@dataclass(frozen=True)
class BarRecord:
    """One minute bar: timestamp and a positive closing price."""

    timestamp: datetime
    close: float


@dataclass(frozen=True)
class FormatSpec:
    """How to read a bar CSV: column names, delimiter, timestamp encoding."""

    delimiter: str = ","
    timestamp_column: str = "timestamp"
    close_column: str = "close"
    instrument_column: str = "instrument"
    timestamp_format: str = "iso"  # "iso" or "epoch" (minutes since epoch)


@dataclass(frozen=True)
class AlignPolicy:
    """Alignment of per-instrument bars onto one timestamp grid.

    "intersect" keeps only timestamps present for every instrument and never
    fabricates a price. "ffill" additionally carries the previous close
    through gaps of at most max_gap consecutive missing minutes.
    """

    method: str = "intersect"
    max_gap: int = 5

    def __post_init__(self):
        if self.method not in ("intersect", "ffill"):
            raise ValueError(f"unknown alignment method {self.method!r}")
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")


class AlignedSeries:
    """Common strictly-increasing timestamps with one close column per instrument."""

    def __init__(self, timestamps: list[datetime], instruments: list[str],
                 closes: np.ndarray):
        closes = np.asarray(closes, dtype=np.float64)
        if closes.ndim != 2:
            raise ValueError("closes must be a (time, instrument) matrix")
        if closes.shape != (len(timestamps), len(instruments)):
            raise ValueError(
                f"closes shape {closes.shape} does not match "
                f"{len(timestamps)} timestamps x {len(instruments)} instruments")
        if not np.all(np.isfinite(closes)):
            raise ValueError("closes must be finite (no missing entries)")
        for a, b in zip(timestamps, timestamps[1:]):
            if not a < b:
                raise ValueError(f"timestamps not strictly increasing at {b}")
        self.timestamps = list(timestamps)
        self.instruments = list(instruments)
        self.closes = closes

    def __len__(self) -> int:
        return len(self.timestamps)

    def slice(self, start: int, stop: int) -> "AlignedSeries":
        return AlignedSeries(self.timestamps[start:stop], self.instruments,
                             self.closes[start:stop])

    def session(self, start: dtime, end: dtime) -> "AlignedSeries":
        """Rows whose time of day falls in [start, end] (inclusive)."""
        keep = [i for i, ts in enumerate(self.timestamps)
                if start <= ts.time() <= end]
        if not keep:
            raise ValueError(
                f"no bars between {start.isoformat()} and {end.isoformat()}")
        return AlignedSeries([self.timestamps[i] for i in keep],
                             self.instruments, self.closes[keep])


def parse_timestamp(text: str, fmt: str = "iso") -> datetime:
    if fmt == "iso":
        return datetime.fromisoformat(text)
    if fmt == "epoch":
        return _EPOCH + timedelta(minutes=int(text))
    raise ValueError(f"unknown timestamp format {fmt!r}")


def format_timestamp(ts: datetime) -> str:
    return ts.isoformat(sep=" ")


def _fmt(x: float) -> str:
    return repr(float(x))


class _open:
    """Accept a path or an open text stream uniformly."""

    def __init__(self, source):
        self.source = source
        self.opened = None

    def __enter__(self):
        if hasattr(self.source, "read"):
            return self.source
        self.opened = open(self.source, "r", newline="")
        return self.opened

    def __exit__(self, *exc):
        if self.opened is not None:
            self.opened.close()
        return False


def read_bars(source, spec: FormatSpec = FormatSpec()) -> list[BarRecord]:
    """Bars of a single-instrument CSV, validated and strictly increasing."""
    with _open(source) as f:
        reader = csv.DictReader(f, delimiter=spec.delimiter)
        if reader.fieldnames is None:
            raise ValueError("empty bar file")
        for col in (spec.timestamp_column, spec.close_column):
            if col not in reader.fieldnames:
                raise ValueError(
                    f"missing column {col!r}; file has {reader.fieldnames}")
        records: list[BarRecord] = []
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = parse_timestamp(row[spec.timestamp_column],
                                     spec.timestamp_format)
                close = float(row[spec.close_column])
            except (ValueError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed row ({exc})") from None
            if not math.isfinite(close) or close <= 0:
                raise ValueError(f"line {lineno}: non-positive close {close}")
            if records and not records[-1].timestamp < ts:
                raise ValueError(
                    f"line {lineno}: timestamp {format_timestamp(ts)} does not "
                    f"increase past {format_timestamp(records[-1].timestamp)}")
            records.append(BarRecord(ts, close))
    return records


def read_long_bars(source, spec: FormatSpec = FormatSpec()
                   ) -> dict[str, list[BarRecord]]:
    """Bars of a long CSV (timestamp, instrument, close), split by instrument."""
    with _open(source) as f:
        reader = csv.DictReader(f, delimiter=spec.delimiter)
        if reader.fieldnames is None:
            raise ValueError("empty bar file")
        for col in (spec.timestamp_column, spec.instrument_column,
                    spec.close_column):
            if col not in reader.fieldnames:
                raise ValueError(
                    f"missing column {col!r}; file has {reader.fieldnames}")
        by_inst: dict[str, list[BarRecord]] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = parse_timestamp(row[spec.timestamp_column],
                                     spec.timestamp_format)
                close = float(row[spec.close_column])
                inst = row[spec.instrument_column]
            except (ValueError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed row ({exc})") from None
            if not math.isfinite(close) or close <= 0:
                raise ValueError(f"line {lineno}: non-positive close {close}")
            bars = by_inst.setdefault(inst, [])
            if bars and not bars[-1].timestamp < ts:
                raise ValueError(
                    f"line {lineno}: timestamp {format_timestamp(ts)} does not "
                    f"increase for instrument {inst!r}")
            bars.append(BarRecord(ts, close))
    if not by_inst:
        raise ValueError("bar file contains no rows")
    return by_inst


def read_wide_csv(source, spec: FormatSpec = FormatSpec()) -> AlignedSeries:
    """An already-aligned wide CSV: timestamp column plus one close per instrument."""
    with _open(source) as f:
        reader = csv.reader(f, delimiter=spec.delimiter)
        header = next(reader, None)
        if header is None:
            raise ValueError("empty bar file")
        if spec.timestamp_column not in header:
            raise ValueError(
                f"missing column {spec.timestamp_column!r}; file has {header}")
        ts_idx = header.index(spec.timestamp_column)
        instruments = [c for i, c in enumerate(header) if i != ts_idx]
        if not instruments:
            raise ValueError("wide bar file needs at least one instrument column")
        timestamps: list[datetime] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                timestamps.append(parse_timestamp(row[ts_idx],
                                                  spec.timestamp_format))
                rows.append([float(v) for i, v in enumerate(row) if i != ts_idx])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: malformed row ({exc})") from None
    if not rows:
        raise ValueError("bar file contains no rows")
    closes = np.array(rows)
    if np.any(closes <= 0):
        t, i = np.argwhere(closes <= 0)[0]
        raise ValueError(
            f"line {t + 2}: non-positive close for {instruments[i]}")
    return AlignedSeries(timestamps, instruments, closes)


def align(series: dict[str, list[BarRecord]],
          policy: AlignPolicy = AlignPolicy()) -> AlignedSeries:
    """Put per-instrument bars on a common grid; see AlignPolicy."""
    if not series:
        raise ValueError("need at least one instrument to align")
    instruments = list(series.keys())
    per_inst = [{b.timestamp: b.close for b in series[name]}
                for name in instruments]

    if policy.method == "intersect":
        common = set(per_inst[0])
        for lookup in per_inst[1:]:
            common &= set(lookup)
        if not common:
            raise ValueError("timestamp intersection across instruments is empty")
        timestamps = sorted(common)
        closes = np.array([[lookup[ts] for lookup in per_inst]
                           for ts in timestamps])
        return AlignedSeries(timestamps, instruments, closes)

    grid = sorted(set().union(*per_inst))
    filled = []
    for lookup in per_inst:
        col = np.full(len(grid), np.nan)
        gap = 0
        prev = math.nan
        for i, ts in enumerate(grid):
            if ts in lookup:
                prev = lookup[ts]
                gap = 0
                col[i] = prev
            else:
                gap += 1
                if gap <= policy.max_gap and not math.isnan(prev):
                    col[i] = prev
        filled.append(col)
    closes = np.stack(filled, axis=1)
    keep = ~np.isnan(closes).any(axis=1)
    if not keep.any():
        raise ValueError("alignment produced no complete rows")
    timestamps = [ts for ts, k in zip(grid, keep) if k]
    return AlignedSeries(timestamps, instruments, closes[keep])


class SplitMix64:
    """Tiny deterministic generator with pure 64-bit integer state.

    state += 0x9E3779B97F4A7C15; z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
    z = (z ^ z>>27) * 0x94D049BB133111EB; output z ^ z>>31 (all mod 2^64).
    Uniforms take the top 53 bits; the near-gaussian draw is a sum of twelve
    uniforms minus 6 (mean 0, variance 1), so every draw is reproducible from
    the seed with integer state and fixed-order float arithmetic only.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self._MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self._MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return (z ^ (z >> 31)) & self._MASK

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def gauss(self) -> float:
        total = 0.0
        for _ in range(12):
            total += self.uniform()
        return total - 6.0


@dataclass(frozen=True)
class ShockSpec:
    """A V-shaped crash: prices fall depth (fraction) and rebound over duration.

    start indexes the first shocked minute; the trough sits half way through.
    lags optionally delays the shock per instrument by a few minutes.
    """

    start: int
    depth: float = 0.06
    duration: int = 36
    lags: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.start < 0 or not 0 < self.depth < 1 or self.duration < 2:
            raise ValueError("shock needs start >= 0, 0 < depth < 1, duration >= 2")

    def factor(self, minute: int, instrument: int) -> float:
        start = self.start
        if self.lags is not None:
            start += self.lags[instrument % len(self.lags)]
        pos = minute - start
        if pos < 0 or pos >= self.duration:
            return 1.0
        half = self.duration // 2
        if pos < half:
            return 1.0 - self.depth * (pos + 1) / half
        return 1.0 - self.depth * (self.duration - pos - 1) / (self.duration - half)


@dataclass(frozen=True)
class SynthSpec:
    """Seeded geometric-random-walk minute closes, optionally with a shock."""

    length: int
    instruments: int = 3
    base_price: float = 100.0
    volatility: float = 5e-4
    drift: float = 0.0
    shock: ShockSpec | None = None
    start: datetime = datetime(2010, 4, 26, 0, 0)

    def __post_init__(self):
        if self.length < 1 or self.instruments < 1:
            raise ValueError("length and instruments must be >= 1")
        if self.volatility < 0 or self.volatility >= 0.25:
            raise ValueError("volatility must lie in [0, 0.25)")


def synth_generate(seed: int, spec: SynthSpec) -> AlignedSeries:
    """Deterministic synthetic aligned closes; same seed, same bytes.

    Walk steps are multiplicative (1 + drift + volatility * g) with g drawn
    per (minute, instrument) in that order from one SplitMix64 stream; the
    shock multiplies the walk afterwards, so the walk path itself does not
    depend on whether a shock is configured.
    """
    rng = SplitMix64(seed)
    k = spec.instruments
    closes = np.empty((spec.length, k))
    level = np.full(k, spec.base_price)
    for t in range(spec.length):
        for i in range(k):
            step = 1.0 + spec.drift + spec.volatility * rng.gauss()
            if step <= 0:
                raise ValueError("walk step went non-positive; lower volatility")
            level[i] *= step
            shock = 1.0 if spec.shock is None else spec.shock.factor(t, i)
            closes[t, i] = level[i] * shock
    timestamps = [spec.start + timedelta(minutes=t) for t in range(spec.length)]
    names = [chr(ord("a") + i) if k <= 26 else f"i{i}" for i in range(k)]
    return AlignedSeries(timestamps, names, closes)


def write_aligned_csv(series: AlignedSeries, out: io.TextIOBase) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timestamp"] + series.instruments)
    for i, ts in enumerate(series.timestamps):
        w.writerow([format_timestamp(ts)] + [_fmt(v) for v in series.closes[i]])


def write_anomaly_csv(records: list[AnomalyRecord], out: io.TextIOBase) -> None:
    """Header exactly timestamp,y,ema,emvar,z; undefined z is an empty field."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timestamp", "y", "ema", "emvar", "z"])
    for r in records:
        z = "" if r.z is None else _fmt(r.z)
        w.writerow([format_timestamp(r.timestamp), _fmt(r.y), _fmt(r.ema),
                    _fmt(r.emvar), z])


def read_anomaly_csv(source) -> list[AnomalyRecord]:
    with _open(source) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["timestamp", "y", "ema", "emvar", "z"]:
            raise ValueError(
                f"expected header timestamp,y,ema,emvar,z, got {header}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields")
            try:
                ts = parse_timestamp(row[0])
                y, ema, emvar = (float(v) for v in row[1:4])
                z = None if row[4] == "" else float(row[4])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: malformed row ({exc})") from None
            records.append(AnomalyRecord(ts, y, ema, emvar, z))
    return records


def write_plot_data_csv(series: AlignedSeries, records: list[AnomalyRecord],
                        out: io.TextIOBase) -> None:
    """Rows of timestamp,price,z for overlay plots; price is the first instrument."""
    z_at = {r.timestamp: r.z for r in records}
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timestamp", "price", "z"])
    for i, ts in enumerate(series.timestamps):
        z = z_at.get(ts)
        w.writerow([format_timestamp(ts), _fmt(series.closes[i, 0]),
                    "" if z is None else _fmt(z)])


def write_sweep_csv(rows: list[tuple[float, float, datetime | None]],
                    out: io.TextIOBase) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["alpha", "max_abs_z", "argmax_timestamp"])
    for alpha, max_abs_z, ts in rows:
        w.writerow([_fmt(alpha),
                    "" if math.isnan(max_abs_z) else _fmt(max_abs_z),
                    "" if ts is None else format_timestamp(ts)])


def read_points_csv(source) -> np.ndarray:
    """A plain coordinate CSV (optional non-numeric header) as an (n, d) array."""
    with _open(source) as f:
        rows = []
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError(f"line {lineno}: non-numeric coordinates") from None
            if rows and len(rows[-1]) != len(rows[0]):
                raise ValueError(f"line {lineno}: inconsistent coordinate count")
    if not rows:
        raise ValueError("point file contains no coordinates")
    return np.array(rows)


class _open:
    """Accept a path or an open text stream uniformly."""

    def __init__(self, source):
        self.source = source
        self.opened = None

    def __enter__(self):
        if hasattr(self.source, "read"):
            return self.source
        self.opened = open(self.source, "r", newline="")
        return self.opened

    def __exit__(self, *exc):
        if self.opened is not None:
            self.opened.close()
        return False
