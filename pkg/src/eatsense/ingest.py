"""Parse, validate, and index raw sensor streams and self-reports.

Input is a directory of UTF-8 CSV files with header rows:

    accel.csv    user_id,ts_ms,x,y,z
    location.csv user_id,ts_ms,lat,lon
    apps.csv     user_id,ts_ms,package
    screen.csv   user_id,ts_ms,state          state in {on, off}
    battery.csv  user_id,ts_ms,level,charging,source
    reports.csv  user_id,ts_ms,case,bucket,tz_offset_min

Malformed rows are collected into a report and skipped; an unreadable file or
a wrong header is fatal. Within each (user, stream), rows with a duplicate
timestamp are dropped keeping the first occurrence in file order, and the
surviving rows are sorted by timestamp. Location coordinates are truncated
(not rounded) to four decimal places at ingestion.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_DOWN, InvalidOperation
from enum import Enum
from pathlib import Path

import numpy as np


class IngestError(Exception):
    """Fatal ingestion problem: unreadable file or wrong header."""


class IntakeCase(Enum):
    NO_INTAKE = 1
    ONE_INTAKE = 2
    MULTI_INTAKE = 3


class RecencyBucket(Enum):
    """The eight how-long-ago answers, bounds in minutes before report time."""

    B0_30 = ("0-30", 0, 30)
    B31_60 = ("31-60", 31, 60)
    B60_90 = ("60-90", 60, 90)
    B90_120 = ("90-120", 90, 120)
    B120_150 = ("120-150", 120, 150)
    B150_180 = ("150-180", 150, 180)
    B180_210 = ("180-210", 180, 210)
    B210_240 = ("210-240", 210, 240)

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def lo_min(self) -> int:
        return self.value[1]

    @property
    def hi_min(self) -> int:
        return self.value[2]


BUCKET_BY_LABEL = {b.label: b for b in RecencyBucket}

BATTERY_SOURCES = ("ac", "usb", "unknown", "none")

MS_PER_MIN = 60_000


def _arrays_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


class _StreamEq:
    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return all(
            _arrays_equal(getattr(self, f), getattr(other, f))
            for f in self.__dataclass_fields__
        )


@dataclass(eq=False)
class AccelStream(_StreamEq):
    ts: np.ndarray  # int64 ms UTC
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), *(np.empty(0, np.float64) for _ in range(3)))


@dataclass(eq=False)
class LocationStream(_StreamEq):
    ts: np.ndarray
    lat: np.ndarray  # degrees, truncated to 4 decimals
    lon: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), *(np.empty(0, np.float64) for _ in range(2)))


@dataclass(eq=False)
class AppStream(_StreamEq):
    ts: np.ndarray
    package: list[str]

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), [])


@dataclass(eq=False)
class ScreenStream(_StreamEq):
    ts: np.ndarray
    on: np.ndarray  # bool, True for screen-on events

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), np.empty(0, np.bool_))


@dataclass(eq=False)
class BatteryStream(_StreamEq):
    ts: np.ndarray
    level: np.ndarray  # percent in [0, 100]
    charging: np.ndarray  # bool
    source: list[str]  # in BATTERY_SOURCES

    @classmethod
    def empty(cls):
        return cls(
            np.empty(0, np.int64),
            np.empty(0, np.float64),
            np.empty(0, np.bool_),
            [],
        )


@dataclass(eq=False)
class SensorBundle(_StreamEq):
    """All raw streams of one user; immutable after construction."""

    user_id: str
    accel: AccelStream
    locations: LocationStream
    app_events: AppStream
    screen_events: ScreenStream
    battery: BatteryStream

    @classmethod
    def empty(cls, user_id: str):
        return cls(
            user_id,
            AccelStream.empty(),
            LocationStream.empty(),
            AppStream.empty(),
            ScreenStream.empty(),
            BatteryStream.empty(),
        )


@dataclass(frozen=True)
class SelfReport:
    user_id: str
    t_sr: int  # ms UTC
    case: IntakeCase
    bucket: RecencyBucket | None  # present iff case != NO_INTAKE
    tz_offset_min: int


@dataclass
class RowError:
    line: int
    message: str


@dataclass
class FileReport:
    path: str
    rows_total: int = 0
    rows_accepted: int = 0
    rows_rejected: int = 0
    errors: list[RowError] = field(default_factory=list)

    def reject(self, line: int, message: str):
        self.rows_rejected += 1
        self.errors.append(RowError(line, message))


@dataclass
class IngestReport:
    files: list[FileReport] = field(default_factory=list)

    @property
    def total_errors(self) -> int:
        return sum(f.rows_rejected for f in self.files)


STREAM_SCHEMAS = {
    "accel.csv": ["user_id", "ts_ms", "x", "y", "z"],
    "location.csv": ["user_id", "ts_ms", "lat", "lon"],
    "apps.csv": ["user_id", "ts_ms", "package"],
    "screen.csv": ["user_id", "ts_ms", "state"],
    "battery.csv": ["user_id", "ts_ms", "level", "charging", "source"],
}

REPORT_SCHEMA = ["user_id", "ts_ms", "case", "bucket", "tz_offset_min"]


def truncate_coord(text: str) -> float:
    """Truncate a decimal coordinate string to 4 decimals, toward zero."""
    return float(Decimal(text).quantize(Decimal("0.0001"), rounding=ROUND_DOWN))


def _iter_rows(path: Path, schema: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: missing header row")
        except (csv.Error, UnicodeDecodeError) as exc:
            raise IngestError(f"{path}: {exc}") from exc
        if [h.strip() for h in header] != schema:
            raise IngestError(f"{path}: header {header!r} != expected {schema!r}")
        try:
            for lineno, row in enumerate(reader, start=2):
                yield lineno, row
        except (csv.Error, UnicodeDecodeError) as exc:
            raise IngestError(f"{path}: {exc}") from exc


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t == "true":
        return True
    if t == "false":
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _dedup_sort(ts: list[int], *cols):
    """Keep first occurrence per timestamp (file order), then sort by time."""
    seen: set[int] = set()
    keep = []
    for i, t in enumerate(ts):
        if t not in seen:
            seen.add(t)
            keep.append(i)
    keep_arr = np.asarray(keep, dtype=np.intp)
    ts_arr = np.asarray(ts, dtype=np.int64)[keep_arr]
    order = np.argsort(ts_arr, kind="stable")
    out_ts = ts_arr[order]
    out_cols = []
    for col in cols:
        if isinstance(col, list) and (not col or isinstance(col[0], str)):
            kept = [col[i] for i in keep_arr]
            out_cols.append([kept[j] for j in order])
        else:
            out_cols.append(np.asarray(col)[keep_arr][order])
    return out_ts, out_cols


def parse_sensor_streams(path) -> tuple[dict[str, SensorBundle], IngestReport]:
    """Parse all stream CSVs under ``path`` into one SensorBundle per user.

    Missing stream files are treated as empty streams. Returns the bundles
    keyed by user id plus a report of per-file row counts and errors.
    """
    root = Path(path)
    if not root.is_dir():
        raise IngestError(f"not a directory: {root}")
    report = IngestReport()

    per_user: dict[str, dict[str, list]] = {}

    def user_acc(user: str) -> dict[str, list]:
        if user not in per_user:
            per_user[user] = {
                "acc_ts": [], "acc_x": [], "acc_y": [], "acc_z": [],
                "loc_ts": [], "lat": [], "lon": [],
                "app_ts": [], "pkg": [],
                "scr_ts": [], "scr_on": [],
                "bat_ts": [], "lvl": [], "chg": [], "src": [],
            }
        return per_user[user]

    def run_file(name: str, handler):
        fpath = root / name
        if not fpath.exists():
            return
        freport = FileReport(str(fpath))
        report.files.append(freport)
        for lineno, row in _iter_rows(fpath, STREAM_SCHEMAS[name]):
            freport.rows_total += 1
            if len(row) != len(STREAM_SCHEMAS[name]):
                freport.reject(lineno, f"expected {len(STREAM_SCHEMAS[name])} fields, got {len(row)}")
                continue
            try:
                handler(row)
            except (ValueError, InvalidOperation) as exc:
                freport.reject(lineno, str(exc))
                continue
            freport.rows_accepted += 1

    def on_accel(row):
        u = user_acc(row[0])
        t = int(row[1])
        x, y, z = float(row[2]), float(row[3]), float(row[4])
        u["acc_ts"].append(t)
        u["acc_x"].append(x)
        u["acc_y"].append(y)
        u["acc_z"].append(z)

    def on_location(row):
        lat = truncate_coord(row[2])
        lon = truncate_coord(row[3])
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude out of range: {lat}")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude out of range: {lon}")
        u = user_acc(row[0])
        u["loc_ts"].append(int(row[1]))
        u["lat"].append(lat)
        u["lon"].append(lon)

    def on_apps(row):
        pkg = row[2].strip()
        if not pkg:
            raise ValueError("empty package name")
        u = user_acc(row[0])
        u["app_ts"].append(int(row[1]))
        u["pkg"].append(pkg)

    def on_screen(row):
        state = row[2].strip().lower()
        if state not in ("on", "off"):
            raise ValueError(f"unknown screen state: {row[2]!r}")
        u = user_acc(row[0])
        u["scr_ts"].append(int(row[1]))
        u["scr_on"].append(state == "on")

    def on_battery(row):
        level = float(row[2])
        if not 0.0 <= level <= 100.0:
            raise ValueError(f"battery level out of range: {level}")
        charging = _parse_bool(row[3])
        source = row[4].strip().lower()
        if source not in BATTERY_SOURCES:
            raise ValueError(f"unknown charging source: {row[4]!r}")
        u = user_acc(row[0])
        u["bat_ts"].append(int(row[1]))
        u["lvl"].append(level)
        u["chg"].append(charging)
        u["src"].append(source)

    run_file("accel.csv", on_accel)
    run_file("location.csv", on_location)
    run_file("apps.csv", on_apps)
    run_file("screen.csv", on_screen)
    run_file("battery.csv", on_battery)

    bundles: dict[str, SensorBundle] = {}
    for user in sorted(per_user):
        u = per_user[user]
        a_ts, (ax, ay, az) = _dedup_sort(u["acc_ts"], u["acc_x"], u["acc_y"], u["acc_z"])
        l_ts, (lat, lon) = _dedup_sort(u["loc_ts"], u["lat"], u["lon"])
        p_ts, (pkg,) = _dedup_sort(u["app_ts"], u["pkg"])
        s_ts, (s_on,) = _dedup_sort(u["scr_ts"], u["scr_on"])
        b_ts, (lvl, chg, src) = _dedup_sort(u["bat_ts"], u["lvl"], u["chg"], u["src"])
        bundles[user] = SensorBundle(
            user,
            AccelStream(a_ts, np.asarray(ax, np.float64), np.asarray(ay, np.float64), np.asarray(az, np.float64)),
            LocationStream(l_ts, np.asarray(lat, np.float64), np.asarray(lon, np.float64)),
            AppStream(p_ts, list(pkg)),
            ScreenStream(s_ts, np.asarray(s_on, np.bool_)),
            BatteryStream(b_ts, np.asarray(lvl, np.float64), np.asarray(chg, np.bool_), list(src)),
        )
    return bundles, report


def parse_self_reports(path) -> tuple[list[SelfReport], FileReport]:
    """Parse reports.csv into SelfReports sorted by (user, report time)."""
    fpath = Path(path)
    freport = FileReport(str(fpath))
    reports: list[SelfReport] = []
    for lineno, row in _iter_rows(fpath, REPORT_SCHEMA):
        freport.rows_total += 1
        if len(row) != len(REPORT_SCHEMA):
            freport.reject(lineno, f"expected {len(REPORT_SCHEMA)} fields, got {len(row)}")
            continue
        try:
            user = row[0]
            t_sr = int(row[1])
            case = IntakeCase(int(row[2]))
            bucket_text = row[3].strip()
            tz = int(row[4])
            if case is IntakeCase.NO_INTAKE:
                if bucket_text:
                    raise ValueError("bucket given for a no-intake report")
                bucket = None
            else:
                if not bucket_text:
                    raise ValueError("bucket missing for an intake report")
                if bucket_text not in BUCKET_BY_LABEL:
                    raise ValueError(f"unknown bucket: {bucket_text!r}")
                bucket = BUCKET_BY_LABEL[bucket_text]
        except ValueError as exc:
            freport.reject(lineno, str(exc))
            continue
        reports.append(SelfReport(user, t_sr, case, bucket, tz))
        freport.rows_accepted += 1
    reports.sort(key=lambda r: (r.user_id, r.t_sr))
    return reports, freport


def user_timezones(reports: list[SelfReport]) -> dict[str, int]:
    """Per-user timezone offset in minutes, from each user's first report."""
    tz: dict[str, int] = {}
    for r in sorted(reports, key=lambda r: (r.user_id, r.t_sr)):
        tz.setdefault(r.user_id, r.tz_offset_min)
    return tz


@dataclass
class StreamStats:
    count: int
    span: tuple[int, int] | None  # (first_ts, last_ts) or None when empty
    largest_gap_ms: int  # 0 when fewer than 2 samples
    gaps: list[tuple[int, int]]  # (ts_before, gap_ms) above the threshold


@dataclass
class ValidationReport:
    user_id: str
    streams: dict[str, StreamStats]


def _stream_stats(ts: np.ndarray, gap_threshold_ms: int) -> StreamStats:
    n = int(ts.size)
    if n == 0:
        return StreamStats(0, None, 0, [])
    span = (int(ts[0]), int(ts[-1]))
    if n == 1:
        return StreamStats(1, span, 0, [])
    diffs = np.diff(ts)
    largest = int(diffs.max())
    gaps = [
        (int(ts[i]), int(diffs[i]))
        for i in np.nonzero(diffs > gap_threshold_ms)[0]
    ]
    return StreamStats(n, span, largest, gaps)


def validate_bundle(bundle: SensorBundle, gap_threshold_ms: int = 3_600_000) -> ValidationReport:
    """Per-stream sample counts, coverage spans, and the gap list. Pure."""
    return ValidationReport(
        bundle.user_id,
        {
            "accel": _stream_stats(bundle.accel.ts, gap_threshold_ms),
            "location": _stream_stats(bundle.locations.ts, gap_threshold_ms),
            "apps": _stream_stats(bundle.app_events.ts, gap_threshold_ms),
            "screen": _stream_stats(bundle.screen_events.ts, gap_threshold_ms),
            "battery": _stream_stats(bundle.battery.ts, gap_threshold_ms),
        },
    )


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_sensor_csvs(bundles: dict[str, SensorBundle], out_dir) -> None:
    """Serialize bundles back to the ingest schemas (deterministic bytes)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    users = sorted(bundles)

    def dump(name, header, rows_of):
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for user in users:
                for row in rows_of(bundles[user]):
                    w.writerow([_fmt(v) for v in row])

    dump("accel.csv", STREAM_SCHEMAS["accel.csv"],
         lambda b: zip([b.user_id] * b.accel.ts.size, b.accel.ts, b.accel.x, b.accel.y, b.accel.z))
    dump("location.csv", STREAM_SCHEMAS["location.csv"],
         lambda b: zip([b.user_id] * b.locations.ts.size, b.locations.ts, b.locations.lat, b.locations.lon))
    dump("apps.csv", STREAM_SCHEMAS["apps.csv"],
         lambda b: zip([b.user_id] * b.app_events.ts.size, b.app_events.ts, b.app_events.package))
    dump("screen.csv", STREAM_SCHEMAS["screen.csv"],
         lambda b: zip([b.user_id] * b.screen_events.ts.size, b.screen_events.ts,
                       ["on" if s else "off" for s in b.screen_events.on]))
    dump("battery.csv", STREAM_SCHEMAS["battery.csv"],
         lambda b: zip([b.user_id] * b.battery.ts.size, b.battery.ts, b.battery.level,
                       b.battery.charging, b.battery.source))


def write_reports_csv(reports: list[SelfReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_SCHEMA)
        for r in sorted(reports, key=lambda r: (r.user_id, r.t_sr)):
            w.writerow([
                r.user_id,
                r.t_sr,
                r.case.value,
                "" if r.bucket is None else r.bucket.label,
                r.tz_offset_min,
            ])
