"""Turn self-reports into labeled, non-overlapping event anchors.

An intake report places the eating anchor at the report time minus the
midpoint of the recency bucket (floored to whole minutes, so "31-60" maps to
45). Non-eating anchors are drawn uniformly from the window ending 30 and
starting 210 minutes before the report, at most three per no-intake report
and two per one-intake report, rejecting draws closer than twice the window
half-width to any anchor already placed for that user.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import rng as derive_rng
from .ingest import MS_PER_MIN, IntakeCase, RecencyBucket, SelfReport

EATING = "eating"
NON_EATING = "non_eating"

# Sampling window for non-eating anchors, minutes before the report.
NONEAT_EARLIEST_MIN = 210
NONEAT_LATEST_MIN = 30

MAX_NONEAT = {IntakeCase.NO_INTAKE: 3, IntakeCase.ONE_INTAKE: 2, IntakeCase.MULTI_INTAKE: 0}

MAX_DRAW_ATTEMPTS = 1000


def bucket_midpoint_min(bucket: RecencyBucket) -> int:
    """Bucket midpoint in whole minutes: mean of the bounds, floored."""
    return (bucket.lo_min + bucket.hi_min) // 2


@dataclass(frozen=True)
class EventRecord:
    user_id: str
    t_anc: int  # ms UTC
    label: str  # EATING or NON_EATING
    x_half_min: int = 30
    source_report: SelfReport | None = None


@dataclass
class EventSet:
    events: list[EventRecord]
    x_half_min: int
    warnings: list[str] = field(default_factory=list)


def derive_eating_anchor(report: SelfReport) -> int | None:
    """Anchor timestamp for the report's last eating episode, if any."""
    if report.case is IntakeCase.NO_INTAKE:
        return None
    return report.t_sr - bucket_midpoint_min(report.bucket) * MS_PER_MIN


def sample_noneating_anchors(
    report: SelfReport,
    rng: np.random.Generator,
    eating_anchor: int | None = None,
    x_half_min: int = 30,
    blocked: tuple[int, ...] = (),
) -> list[int]:
    """Draw non-eating anchors for one report by rejection sampling.

    Anchors are uniform over [T_sr-210min, T_sr-30min] and must stay at least
    2*x_half from the report's eating anchor, from every anchor in
    ``blocked``, and from each other. Returns fewer than the case maximum
    when the constraints cannot be met within the attempt budget.
    """
    want = MAX_NONEAT[report.case]
    if want == 0:
        return []
    lo = report.t_sr - NONEAT_EARLIEST_MIN * MS_PER_MIN
    hi = report.t_sr - NONEAT_LATEST_MIN * MS_PER_MIN
    min_sep = 2 * x_half_min * MS_PER_MIN
    avoid = list(blocked)
    if eating_anchor is not None:
        avoid.append(eating_anchor)
    accepted: list[int] = []
    attempts = 0
    while len(accepted) < want and attempts < MAX_DRAW_ATTEMPTS:
        attempts += 1
        cand = int(rng.integers(lo, hi + 1))
        if all(abs(cand - a) >= min_sep for a in avoid) and all(
            abs(cand - a) >= min_sep for a in accepted
        ):
            accepted.append(cand)
    return accepted


def build_event_set(reports: list[SelfReport], x_half_min: int = 30, seed: int = 0,
                    spans: dict[str, tuple[int, int]] | None = None) -> EventSet:
    """Assemble the labeled event set for all users.

    Eating anchors are placed first; an eating anchor closer than 2*x_half to
    an earlier one of the same user is dropped with a warning. Non-eating
    anchors are then sampled per report against every anchor the user already
    has. Each user draws from a stream derived from (seed, user), so the
    result is independent of user ordering. When ``spans`` gives a per-user
    data-collection span, events whose window leaves it are dropped.
    """
    by_user: dict[str, list[SelfReport]] = {}
    for r in reports:
        by_user.setdefault(r.user_id, []).append(r)
    min_sep = 2 * x_half_min * MS_PER_MIN
    half_ms = x_half_min * MS_PER_MIN

    events: list[EventRecord] = []
    warnings: list[str] = []
    for user in sorted(by_user):
        urep = sorted(by_user[user], key=lambda r: r.t_sr)
        urng = derive_rng(seed, "anchor", user)
        span = spans.get(user) if spans else None

        def in_span(t_anc: int) -> bool:
            return span is None or (span[0] <= t_anc - half_ms and t_anc + half_ms <= span[1])

        placed: list[int] = []
        eating_by_report: dict[int, int | None] = {}
        for i, rep in enumerate(urep):
            anchor = derive_eating_anchor(rep)
            eating_by_report[i] = anchor
            if anchor is None:
                continue
            if any(abs(anchor - a) < min_sep for a in placed):
                warnings.append(
                    f"{user}: eating anchor at {anchor} overlaps an earlier event, dropped"
                )
                continue
            if not in_span(anchor):
                warnings.append(f"{user}: eating anchor at {anchor} outside data span, dropped")
                continue
            placed.append(anchor)
            events.append(EventRecord(user, anchor, EATING, x_half_min, rep))

        for i, rep in enumerate(urep):
            drawn = sample_noneating_anchors(
                rep, urng, eating_by_report[i], x_half_min, tuple(placed)
            )
            for t in drawn:
                if not in_span(t):
                    warnings.append(f"{user}: non-eating anchor at {t} outside data span, dropped")
                    continue
                placed.append(t)
                events.append(EventRecord(user, t, NON_EATING, x_half_min, rep))

    events.sort(key=lambda e: (e.user_id, e.t_anc))
    return EventSet(events, x_half_min, warnings)


def check_nonoverlap(event_set: EventSet) -> list[tuple[str, int, int]]:
    """Pairs of same-user anchors closer than 2*x_half; [] on a valid set."""
    min_sep = 2 * event_set.x_half_min * MS_PER_MIN
    violations = []
    by_user: dict[str, list[int]] = {}
    for e in event_set.events:
        by_user.setdefault(e.user_id, []).append(e.t_anc)
    for user in sorted(by_user):
        ts = sorted(by_user[user])
        for a, b in zip(ts, ts[1:]):
            if b - a < min_sep:
                violations.append((user, a, b))
    return violations


def write_events_csv(event_set: EventSet, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "t_anc_ms", "label", "x_half_min"])
        for e in event_set.events:
            w.writerow([e.user_id, e.t_anc, e.label, e.x_half_min])


def read_events_csv(path) -> EventSet:
    import csv

    events: list[EventRecord] = []
    x_half = 30
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["user_id", "t_anc_ms", "label", "x_half_min"]:
            raise ValueError(f"unexpected events header: {header!r}")
        for row in reader:
            user, t_anc, label, x = row
            if label not in (EATING, NON_EATING):
                raise ValueError(f"unknown label: {label!r}")
            x_half = int(x)
            events.append(EventRecord(user, int(t_anc), label, x_half))
    return EventSet(events, x_half)
