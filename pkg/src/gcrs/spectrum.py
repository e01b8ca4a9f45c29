"""Frequency bands, regions and local-time downtime windows.

All time values are integer simulation ticks since the epoch (UTC midnight
of day 0). ``tick_seconds`` says how many real seconds one tick covers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

MINUTES_PER_DAY = 1440
MIN_OFFSET_MINUTES = -720
MAX_OFFSET_MINUTES = 840
DEFAULT_TICK_SECONDS = 60


@dataclass(frozen=True, order=True)
class FrequencyBand:
    """Half-open interval ``[low_hz, high_hz)``."""

    low_hz: int
    high_hz: int

    def __post_init__(self):
        if self.low_hz < 0 or self.low_hz >= self.high_hz:
            raise ValueError(f"invalid band [{self.low_hz}, {self.high_hz})")

    @property
    def width_hz(self) -> int:
        return self.high_hz - self.low_hz

    def __str__(self) -> str:
        return f"[{self.low_hz},{self.high_hz})"


@dataclass(frozen=True)
class Region:
    region_id: str
    utc_offset_minutes: int

    def __post_init__(self):
        if not MIN_OFFSET_MINUTES <= self.utc_offset_minutes <= MAX_OFFSET_MINUTES:
            raise ValueError(f"utc offset {self.utc_offset_minutes} out of range")


@dataclass(frozen=True)
class DowntimeWindow:
    """A span of local time during which licensed transmissions stop.

    A daily window repeats every local day and may wrap past midnight. A
    one-shot window covers local minutes ``[start, start + duration)`` of
    local day 0 only.
    """

    start_local_minutes: int
    duration_minutes: int
    repeats_daily: bool = True

    def __post_init__(self):
        if not 0 <= self.start_local_minutes < MINUTES_PER_DAY:
            raise ValueError(f"window start {self.start_local_minutes} out of range")
        if not 0 < self.duration_minutes <= MINUTES_PER_DAY:
            raise ValueError(f"window duration {self.duration_minutes} out of range")


def bands_overlap(a: FrequencyBand, b: FrequencyBand) -> bool:
    return max(a.low_hz, b.low_hz) < min(a.high_hz, b.high_hz)


def utc_minutes(t: int, tick_seconds: int = DEFAULT_TICK_SECONDS) -> int:
    """Whole UTC minutes elapsed since the epoch at tick ``t``."""
    return t * tick_seconds // 60


def convert_time(t: int, offset_minutes: int, tick_seconds: int = DEFAULT_TICK_SECONDS) -> int:
    """Local minute-of-day at tick ``t`` for a zone ``offset_minutes`` from UTC."""
    return (utc_minutes(t, tick_seconds) + offset_minutes) % MINUTES_PER_DAY


def _in_window(window: DowntimeWindow, local_abs: int) -> bool:
    if window.repeats_daily:
        return (local_abs - window.start_local_minutes) % MINUTES_PER_DAY < window.duration_minutes
    start = window.start_local_minutes
    return start <= local_abs < start + window.duration_minutes


def is_downtime(window: DowntimeWindow, region: Region, t: int,
                tick_seconds: int = DEFAULT_TICK_SECONDS) -> bool:
    local_abs = utc_minutes(t, tick_seconds) + region.utc_offset_minutes
    return _in_window(window, local_abs)


def downtime_end(window: DowntimeWindow, region: Region, t: int,
                 tick_seconds: int = DEFAULT_TICK_SECONDS) -> Optional[int]:
    """First tick after ``t`` at which the window is no longer active.

    Returns None when the window never closes (a daily window spanning the
    whole day). ``t`` must lie inside the window.
    """
    local_abs = utc_minutes(t, tick_seconds) + region.utc_offset_minutes
    if not _in_window(window, local_abs):
        raise ValueError(f"tick {t} is not inside the downtime window")
    if window.repeats_daily:
        if window.duration_minutes == MINUTES_PER_DAY:
            return None
        into = (local_abs - window.start_local_minutes) % MINUTES_PER_DAY
        end_local = local_abs - into + window.duration_minutes
    else:
        end_local = window.start_local_minutes + window.duration_minutes
    end_utc = end_local - region.utc_offset_minutes
    # smallest tick whose floored UTC minute reaches end_utc
    return -((-end_utc * 60) // tick_seconds)
