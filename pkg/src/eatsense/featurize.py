"""Per-event feature extraction from a user's sensor streams.

Each labeled anchor yields a fixed 40-value vector in manifest order:
1 location feature (radius of gyration over the event window), 18
accelerometer aggregates from ten-minute local-time bins, 10 app-usage
binaries for the dataset's most frequent packages, 6 battery values, 2
screen-event counts, and 3 time-of-day values. Features whose source stream
has no data in the window are marked missing; table-level assembly imputes
them with the per-feature mean over present entries.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date as _date

import numpy as np

from .anchor import EATING, EventRecord, EventSet
from .ingest import MS_PER_MIN, AccelStream, SensorBundle

EARTH_RADIUS_KM = 6371.0088
BIN_MS = 10 * MS_PER_MIN
DAY_MS = 86_400_000

ACC_NAMES = [
    "acc_x", "acc_y", "acc_z", "acc_xabs", "acc_yabs", "acc_zabs",
    "acc_x_bef", "acc_y_bef", "acc_z_bef", "acc_xabs_bef", "acc_yabs_bef", "acc_zabs_bef",
    "acc_x_aft", "acc_y_aft", "acc_z_aft", "acc_xabs_aft", "acc_yabs_aft", "acc_zabs_aft",
]
BAT_NAMES = [
    "battery_level", "charging_true_count", "charging_false_count",
    "charging_ac", "charging_usb", "charging_unknown",
]
SCR_NAMES = ["screen_on_count", "screen_off_count"]
TIME_NAMES = ["hours_elapsed", "minutes_elapsed", "weekend"]

N_FEATURES = 40
N_APPS = 10


@dataclass(frozen=True)
class FeatureManifest:
    """Fixed feature ordering for one dataset run.

    The APP block is data-dependent: the ten most frequent packages across
    all users, most frequent first. When fewer than ten packages exist the
    remaining slots are named placeholders whose value is constant zero.
    """

    names: tuple[str, ...]
    app_packages: tuple[str, ...]

    @property
    def groups(self) -> dict[str, tuple[str, ...]]:
        return {
            "LOC": tuple(self.names[0:1]),
            "ACC": tuple(self.names[1:19]),
            "APP": tuple(self.names[19:29]),
            "BAT": tuple(self.names[29:35]),
            "SCR": tuple(self.names[35:37]),
            "TIME": tuple(self.names[37:40]),
        }

    @property
    def binary_mask(self) -> np.ndarray:
        """True for features constrained to {0, 1}: APP block and weekend."""
        mask = np.zeros(N_FEATURES, dtype=bool)
        mask[19:29] = True
        mask[self.names.index("weekend")] = True
        return mask

    def index(self, name: str) -> int:
        return self.names.index(name)


def top_apps(bundles: dict[str, SensorBundle], k: int = N_APPS) -> list[str]:
    """The k most frequent app packages across all users.

    Ordered by descending event count, ties broken lexicographically.
    """
    counts: dict[str, int] = {}
    for user in sorted(bundles):
        for pkg in bundles[user].app_events.package:
            counts[pkg] = counts.get(pkg, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [name for name, _ in ranked[:k]]


def build_manifest(bundles: dict[str, SensorBundle], k: int = N_APPS) -> FeatureManifest:
    apps = top_apps(bundles, k)
    slots = list(apps) + [f"app_unused_{i}" for i in range(len(apps), N_APPS)]
    names = ["radius_of_gyration"] + ACC_NAMES + slots + BAT_NAMES + SCR_NAMES + TIME_NAMES
    assert len(names) == N_FEATURES
    return FeatureManifest(tuple(names), tuple(apps))


# ---------------------------------------------------------------------------
# location


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km; accepts scalars or arrays (degrees)."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=np.float64)) for v in (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(a))


def radius_of_gyration(lat: np.ndarray, lon: np.ndarray) -> float:
    """RMS haversine distance of fixes from their centroid, in km.

    Multiset semantics: duplicated fixes weigh the centroid and the spread.
    Raises on empty input; the caller marks the feature missing instead.
    """
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    if lat.size == 0:
        raise ValueError("radius_of_gyration needs at least one fix")
    clat = lat.mean()
    clon = lon.mean()
    d = haversine_km(lat, lon, clat, clon)
    return float(np.sqrt(np.mean(d * d)))


# ---------------------------------------------------------------------------
# accelerometer bins


@dataclass
class AccelBinTable:
    """Ten-minute local-time bin means over a user's whole timeline.

    ``bin_idx`` holds local bin numbers (local_ms // BIN_MS, sorted);
    ``means`` holds per-bin (mean_x, mean_y, mean_z, mean_|x|, mean_|y|,
    mean_|z|). Bins with no samples are simply absent.
    """

    bin_idx: np.ndarray  # int64, sorted, unique
    means: np.ndarray  # (n_bins, 6) float64


def accel_bin_table(accel: AccelStream, tz_offset_min: int) -> AccelBinTable:
    if accel.ts.size == 0:
        return AccelBinTable(np.empty(0, np.int64), np.empty((0, 6), np.float64))
    local = accel.ts + tz_offset_min * MS_PER_MIN
    bins = local // BIN_MS
    order = np.argsort(bins, kind="stable")
    bins = bins[order]
    cols = np.stack(
        [
            accel.x[order], accel.y[order], accel.z[order],
            np.abs(accel.x[order]), np.abs(accel.y[order]), np.abs(accel.z[order]),
        ],
        axis=1,
    )
    uniq, start = np.unique(bins, return_index=True)
    sums = np.add.reduceat(cols, start, axis=0)
    counts = np.diff(np.append(start, bins.size)).astype(np.float64)
    return AccelBinTable(uniq, sums / counts[:, None])


def accel_bins(bundle: SensorBundle, day: _date, tz_offset_min: int) -> tuple[np.ndarray, np.ndarray]:
    """The 144 ten-minute bins of one local day.

    Returns (values, present): values is (144, 6) with NaN rows for empty
    bins, present is the per-bin availability mask.
    """
    table = accel_bin_table(bundle.accel, tz_offset_min)
    day_start_bin = (day.toordinal() - _date(1970, 1, 1).toordinal()) * (DAY_MS // BIN_MS)
    values = np.full((144, 6), np.nan)
    present = np.zeros(144, dtype=bool)
    pos = np.searchsorted(table.bin_idx, day_start_bin + np.arange(144))
    for b in range(144):
        p = pos[b]
        if p < table.bin_idx.size and table.bin_idx[p] == day_start_bin + b:
            values[b] = table.means[p]
            present[b] = True
    return values, present


def _weighted_bin_mean(table: AccelBinTable, a_ms: int, b_ms: int) -> tuple[np.ndarray, bool]:
    """Overlap-weighted mean of bin values over local interval [a, b).

    Bins are weighted by their overlap with the interval; absent bins are
    skipped and the weights renormalized over present bins.
    """
    first = a_ms // BIN_MS
    last = (b_ms - 1) // BIN_MS
    total = np.zeros(6)
    weight = 0.0
    lo = np.searchsorted(table.bin_idx, first)
    hi = np.searchsorted(table.bin_idx, last, side="right")
    for p in range(lo, hi):
        k = table.bin_idx[p]
        w = min(b_ms, (k + 1) * BIN_MS) - max(a_ms, k * BIN_MS)
        if w <= 0:
            continue
        total += w * table.means[p]
        weight += w
    if weight == 0.0:
        return np.full(6, np.nan), False
    return total / weight, True


def accel_features(table: AccelBinTable, t_anc_local_ms: int, x_half_min: int) -> tuple[np.ndarray, np.ndarray]:
    """18 aggregates: whole window, before-anchor half, after-anchor half."""
    half = x_half_min * MS_PER_MIN
    values = np.full(18, np.nan)
    present = np.zeros(18, dtype=bool)
    segments = [
        (t_anc_local_ms - half, t_anc_local_ms + half),
        (t_anc_local_ms - half, t_anc_local_ms),
        (t_anc_local_ms, t_anc_local_ms + half),
    ]
    for s, (a, b) in enumerate(segments):
        vals, ok = _weighted_bin_mean(table, a, b)
        if ok:
            values[6 * s : 6 * s + 6] = vals
            present[6 * s : 6 * s + 6] = True
    return values, present


# ---------------------------------------------------------------------------
# window features for the remaining modalities


def _window_slice(ts: np.ndarray, lo: int, hi: int) -> slice:
    """Index range of samples with lo <= ts < hi (streams are time-sorted)."""
    return slice(int(np.searchsorted(ts, lo)), int(np.searchsorted(ts, hi)))


def app_features(bundle: SensorBundle, event: EventRecord, manifest: FeatureManifest) -> np.ndarray:
    half = event.x_half_min * MS_PER_MIN
    sl = _window_slice(bundle.app_events.ts, event.t_anc - half, event.t_anc + half)
    used = set(bundle.app_events.package[sl.start : sl.stop])
    out = np.zeros(N_APPS)
    for i, pkg in enumerate(manifest.app_packages):
        if pkg in used:
            out[i] = 1.0
    return out


def bat_features(bundle: SensorBundle, event: EventRecord) -> tuple[np.ndarray, bool]:
    half = event.x_half_min * MS_PER_MIN
    sl = _window_slice(bundle.battery.ts, event.t_anc - half, event.t_anc + half)
    n = sl.stop - sl.start
    if n == 0:
        return np.full(6, np.nan), False
    level = bundle.battery.level[sl]
    charging = bundle.battery.charging[sl]
    source = bundle.battery.source[sl.start : sl.stop]
    n_true = float(np.count_nonzero(charging))
    out = np.array(
        [
            float(level.mean()),
            n_true,
            float(n - n_true),
            float(sum(1 for s in source if s == "ac")),
            float(sum(1 for s in source if s == "usb")),
            float(sum(1 for s in source if s == "unknown")),
        ]
    )
    return out, True


def scr_features(bundle: SensorBundle, event: EventRecord) -> np.ndarray:
    half = event.x_half_min * MS_PER_MIN
    sl = _window_slice(bundle.screen_events.ts, event.t_anc - half, event.t_anc + half)
    on = bundle.screen_events.on[sl]
    n_on = float(np.count_nonzero(on))
    return np.array([n_on, float(on.size - n_on)])


def time_features(t_anc: int, tz_offset_min: int) -> np.ndarray:
    local = t_anc + tz_offset_min * MS_PER_MIN
    minute_of_day = (local // MS_PER_MIN) % 1440
    hour = minute_of_day // 60
    days = local // DAY_MS
    weekday = (days + 3) % 7  # 1970-01-01 is a Thursday; 0 = Monday
    return np.array([float(hour), float(minute_of_day), 1.0 if weekday >= 5 else 0.0])


@dataclass
class FeatureVector:
    event: EventRecord
    values: np.ndarray  # (40,), NaN where missing
    present: np.ndarray  # (40,) bool


def featurize_event(
    bundle: SensorBundle,
    event: EventRecord,
    manifest: FeatureManifest,
    tz_offset_min: int,
    accel_table: AccelBinTable | None = None,
) -> FeatureVector:
    """Compute the 40-feature vector for one event.

    Pass a precomputed ``accel_table`` when featurizing many events of the
    same user; otherwise it is built on the fly.
    """
    if accel_table is None:
        accel_table = accel_bin_table(bundle.accel, tz_offset_min)
    values = np.full(N_FEATURES, np.nan)
    present = np.zeros(N_FEATURES, dtype=bool)

    half = event.x_half_min * MS_PER_MIN
    sl = _window_slice(bundle.locations.ts, event.t_anc - half, event.t_anc + half)
    if sl.stop > sl.start:
        values[0] = radius_of_gyration(bundle.locations.lat[sl], bundle.locations.lon[sl])
        present[0] = True

    t_local = event.t_anc + tz_offset_min * MS_PER_MIN
    acc_vals, acc_present = accel_features(accel_table, t_local, event.x_half_min)
    values[1:19] = acc_vals
    present[1:19] = acc_present

    values[19:29] = app_features(bundle, event, manifest)
    present[19:29] = True

    bat_vals, bat_ok = bat_features(bundle, event)
    values[29:35] = bat_vals
    present[29:35] = bat_ok

    values[35:37] = scr_features(bundle, event)
    present[35:37] = True

    values[37:40] = time_features(event.t_anc, tz_offset_min)
    present[37:40] = True
    return FeatureVector(event, values, present)


@dataclass
class FeatureTable:
    """Event-by-feature matrix with labels and a per-cell presence mask.

    ``x`` holds imputed values (per-feature mean over present entries; zero
    when a feature is absent everywhere). The mask preserves which cells were
    imputed so evaluation can redo imputation with training-split statistics.
    """

    user_ids: list[str]
    t_anc: np.ndarray  # int64
    labels: np.ndarray  # int8, 1 = eating
    x: np.ndarray  # (n, 40) float64
    present: np.ndarray  # (n, 40) bool
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.user_ids)

    def rows_of(self, user: str) -> np.ndarray:
        return np.nonzero(np.asarray([u == user for u in self.user_ids]))[0]

    def users(self) -> list[str]:
        seen: dict[str, None] = {}
        for u in self.user_ids:
            seen.setdefault(u)
        return sorted(seen)


def feature_means(x: np.ndarray, present: np.ndarray) -> np.ndarray:
    """Per-feature mean over present entries; 0.0 for all-missing features."""
    masked = np.where(present, x, 0.0)
    counts = present.sum(axis=0)
    sums = masked.sum(axis=0)
    return np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)


def impute(x: np.ndarray, present: np.ndarray, means: np.ndarray) -> np.ndarray:
    return np.where(present, x, means[None, :])


def featurize_all(
    bundles: dict[str, SensorBundle],
    event_set: EventSet,
    manifest: FeatureManifest,
    user_tz: dict[str, int],
) -> FeatureTable:
    """Featurize every event, in (user, time) order, and impute the table."""
    events = sorted(event_set.events, key=lambda e: (e.user_id, e.t_anc))
    n = len(events)
    x = np.full((n, N_FEATURES), np.nan)
    present = np.zeros((n, N_FEATURES), dtype=bool)
    users: list[str] = []
    t_anc = np.zeros(n, dtype=np.int64)
    labels = np.zeros(n, dtype=np.int8)

    tables: dict[str, AccelBinTable] = {}
    for i, ev in enumerate(events):
        bundle = bundles.get(ev.user_id)
        if bundle is None:
            bundle = SensorBundle.empty(ev.user_id)
        tz = user_tz.get(ev.user_id, 0)
        if ev.user_id not in tables:
            tables[ev.user_id] = accel_bin_table(bundle.accel, tz)
        fv = featurize_event(bundle, ev, manifest, tz, tables[ev.user_id])
        x[i] = fv.values
        present[i] = fv.present
        users.append(ev.user_id)
        t_anc[i] = ev.t_anc
        labels[i] = 1 if ev.label == EATING else 0

    means = feature_means(x, present)
    return FeatureTable(users, t_anc, labels, impute(x, present, means), present, manifest.names)


def write_features_csv(table: FeatureTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["user_id", "t_anc_ms", "label"]
            + list(table.names)
            + [f"present_{n}" for n in table.names]
        )
        for i in range(table.n):
            row = [table.user_ids[i], int(table.t_anc[i]), "eating" if table.labels[i] else "non_eating"]
            row += [repr(float(v)) for v in table.x[i]]
            row += ["1" if p else "0" for p in table.present[i]]
            w.writerow(row)


def read_features_csv(path) -> FeatureTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_named = (len(header) - 3) // 2
        names = tuple(header[3 : 3 + n_named])
        users: list[str] = []
        t_anc: list[int] = []
        labels: list[int] = []
        xs: list[list[float]] = []
        pres: list[list[bool]] = []
        for row in reader:
            users.append(row[0])
            t_anc.append(int(row[1]))
            labels.append(1 if row[2] == "eating" else 0)
            xs.append([float(v) for v in row[3 : 3 + n_named]])
            pres.append([v == "1" for v in row[3 + n_named :]])
    return FeatureTable(
        users,
        np.asarray(t_anc, np.int64),
        np.asarray(labels, np.int8),
        np.asarray(xs, np.float64).reshape(len(users), n_named),
        np.asarray(pres, np.bool_).reshape(len(users), n_named),
        names,
    )
