"""Telemetry analytics: CSV ingestion, channel summaries, idle-energy mismatch
detection, recommendation generation, plot-spec emission, and deterministic
narration with an optional external text-generation hook.

All operations are pure over immutable datasets; identical inputs produce
identical outputs (the hook path being the one documented exception).
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

OCCUPANCY_CHANNELS = ("occupancy",)
POWER_CHANNELS = ("power_w", "energy", "power")
DEVICE_CHANNEL_HINTS = ("fan", "purifier", "humidifier", "bulb")

DEFAULT_OCC_EPS = 0.0
DEFAULT_POWER_FLOOR_W = 50.0
DEFAULT_MIN_WINDOW_MINUTES = 60.0
FAN_SPEED_SETPOINT_THRESHOLD = 60.0  # percent; above this during occupancy


class AnalyticsError(Exception):
    pass


@dataclass
class Dataset:
    ts: np.ndarray                      # int64 unix seconds, strictly increasing
    channels: dict                      # name -> float64 array
    units: dict = field(default_factory=dict)
    source: str = ""

    def __post_init__(self) -> None:
        self.ts = np.asarray(self.ts, dtype=np.int64)
        self.channels = {k: np.asarray(v, dtype=np.float64)
                         for k, v in self.channels.items()}
        n = len(self.ts)
        if n > 1 and not np.all(np.diff(self.ts) > 0):
            raise AnalyticsError("timestamps must be strictly increasing")
        for name, values in self.channels.items():
            if len(values) != n:
                raise AnalyticsError(f"channel {name!r} length {len(values)} != {n} rows")

    @property
    def n_rows(self) -> int:
        return len(self.ts)

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise AnalyticsError(f"dataset has no channel {name!r}")
        return self.channels[name]

    def resolve(self, candidates: Sequence[str], what: str) -> str:
        for name in candidates:
            if name in self.channels:
                return name
        raise AnalyticsError(f"dataset has no {what} channel (looked for {list(candidates)})")


def _parse_ts(cell: str, line_no: int) -> int:
    cell = cell.strip()
    try:
        return int(float(cell))
    except ValueError:
        pass
    try:
        parsed = datetime.fromisoformat(cell)
    except ValueError:
        raise AnalyticsError(f"row {line_no}: cannot parse timestamp {cell!r}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return int(parsed.timestamp())


def parse_csv(text: str, source: str = "upload") -> Dataset:
    """Parse header-led CSV into a typed Dataset. The ts column is unix seconds
    or ISO-8601; every other column must be numeric. Rows must be time-sorted."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise AnalyticsError("empty input: no header row") from None
    header = [h.strip() for h in header]
    ts_names = [h for h in header if h.lower() in ("ts", "timestamp")]
    if not ts_names:
        raise AnalyticsError("missing ts column")
    ts_col = header.index(ts_names[0])

    ts_values: list[int] = []
    columns: dict[str, list[float]] = {h: [] for i, h in enumerate(header) if i != ts_col}
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise AnalyticsError(f"row {line_no}: expected {len(header)} cells, got {len(row)}")
        ts_values.append(_parse_ts(row[ts_col], line_no))
        for i, cell in enumerate(row):
            if i == ts_col:
                continue
            try:
                columns[header[i]].append(float(cell))
            except ValueError:
                raise AnalyticsError(
                    f"row {line_no}, column {header[i]!r}: non-numeric value {cell!r}"
                ) from None

    ts = np.asarray(ts_values, dtype=np.int64)
    if len(ts) > 1 and not np.all(np.diff(ts) > 0):
        bad_line = int(np.argmax(np.diff(ts) <= 0)) + 3  # header is line 1
        raise AnalyticsError(f"row {bad_line}: timestamps not strictly increasing")
    return Dataset(ts=ts, channels={k: np.asarray(v) for k, v in columns.items()},
                   source=source)


def dataset_from_readings(readings: Iterable, source: str = "telemetry") -> Dataset:
    """Build a Dataset from simulator readings, including per-plug channels so
    recommendations can attribute load to a device."""
    readings = list(readings)
    ts = [r.ts for r in readings]
    channels = {
        "temperature_c": [r.temperature_c for r in readings],
        "humidity_pct": [r.humidity_pct for r in readings],
        "lux": [r.lux for r in readings],
        "gas_ppm": [r.gas_ppm for r in readings],
        "occupancy": [float(r.occupancy) for r in readings],
        "power_w": [r.power_w for r in readings],
    }
    plug_names = set()
    for r in readings:
        plug_names.update(r.per_plug_w)
    for plug in sorted(plug_names):
        channels[f"{plug}_w"] = [r.per_plug_w.get(plug, 0.0) for r in readings]
    return Dataset(ts=np.asarray(ts), channels=channels, source=source)


# -- summaries -----------------------------------------------------------------


@dataclass
class ChannelSummary:
    channel: str
    count: int
    min: float
    max: float
    mean: float
    std: float               # population standard deviation
    hour_means: list         # 24 entries, None where a bin is empty

    def to_json_dict(self) -> dict:
        return {
            "channel": self.channel, "count": self.count,
            "min": self.min, "max": self.max, "mean": self.mean, "std": self.std,
            "hour_means": self.hour_means,
        }


def summarize(dataset: Dataset) -> list[ChannelSummary]:
    if dataset.n_rows == 0:
        raise AnalyticsError("cannot summarize an empty dataset")
    hours = (dataset.ts % 86400) // 3600
    summaries = []
    for name in sorted(dataset.channels):
        values = dataset.channels[name]
        hour_means: list[Optional[float]] = []
        for h in range(24):
            mask = hours == h
            hour_means.append(float(values[mask].mean()) if mask.any() else None)
        summaries.append(ChannelSummary(
            channel=name,
            count=int(len(values)),
            min=float(values.min()),
            max=float(values.max()),
            mean=float(values.mean()),
            std=float(values.std()),
            hour_means=hour_means,
        ))
    return summaries


# -- idle-energy detection -------------------------------------------------------


@dataclass
class IdleWindow:
    start_ts: int
    end_ts: int               # exclusive
    mean_power: float
    mean_occupancy: float

    @property
    def duration_s(self) -> int:
        return self.end_ts - self.start_ts

    def to_json_dict(self) -> dict:
        return {
            "start_ts": self.start_ts, "end_ts": self.end_ts,
            "duration_s": self.duration_s,
            "mean_power_w": self.mean_power,
            "mean_occupancy": self.mean_occupancy,
        }


def _window_end(ts: np.ndarray, last_idx: int) -> int:
    """Exclusive end of a run: the next sample's ts, or last ts + preceding step."""
    if last_idx + 1 < len(ts):
        return int(ts[last_idx + 1])
    if len(ts) >= 2:
        return int(ts[last_idx] + (ts[last_idx] - ts[last_idx - 1]))
    return int(ts[last_idx]) + 1


def detect_idle_energy(dataset: Dataset, occ_eps: float = DEFAULT_OCC_EPS,
                       power_floor: float = DEFAULT_POWER_FLOOR_W,
                       min_window_minutes: float = DEFAULT_MIN_WINDOW_MINUTES
                       ) -> list[IdleWindow]:
    """Maximal consecutive runs of samples with occupancy <= occ_eps and power
    >= power_floor, kept when the run spans at least min_window_minutes.
    Windows are disjoint and time-ordered."""
    occ_name = dataset.resolve(OCCUPANCY_CHANNELS, "occupancy")
    power_name = dataset.resolve(POWER_CHANNELS, "power")
    if dataset.n_rows == 0:
        return []
    occupancy = dataset.channels[occ_name]
    power = dataset.channels[power_name]
    mask = (occupancy <= occ_eps) & (power >= power_floor)

    windows: list[IdleWindow] = []
    boundaries = np.flatnonzero(np.diff(mask.astype(np.int8)) != 0) + 1
    edges = np.concatenate(([0], boundaries, [len(mask)]))
    min_span = min_window_minutes * 60.0
    for start, end in zip(edges[:-1], edges[1:]):
        if not mask[start]:
            continue
        start_ts = int(dataset.ts[start])
        end_ts = _window_end(dataset.ts, int(end) - 1)
        if end_ts - start_ts < min_span:
            continue
        windows.append(IdleWindow(
            start_ts=start_ts,
            end_ts=end_ts,
            mean_power=float(power[start:end].mean()),
            mean_occupancy=float(occupancy[start:end].mean()),
        ))
    return windows


# -- recommendations --------------------------------------------------------------


@dataclass
class Recommendation:
    kind: str                  # shutdown_schedule | setpoint_change | device_downgrade
    device: str
    window: tuple              # (start hour, end hour) of day
    estimated_savings_wh: float
    rationale: str

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind, "device": self.device,
            "window": list(self.window),
            "estimated_savings_wh": self.estimated_savings_wh,
            "rationale": self.rationale,
        }


def _modal_hours(windows: Sequence[IdleWindow]) -> tuple[int, int]:
    starts = Counter(round((w.start_ts % 86400) / 3600.0) % 24 for w in windows)
    ends = Counter(round((w.end_ts % 86400) / 3600.0) % 24 for w in windows)

    def mode(counter: Counter) -> int:
        best = max(counter.values())
        return min(h for h, c in counter.items() if c == best)

    return mode(starts), mode(ends)


def _attribute_device(dataset: Dataset, windows: Sequence[IdleWindow]) -> str:
    """Pick the device whose channel shows the most activity inside the flagged
    windows; falls back to 'all' when nothing is attributable."""
    in_windows = np.zeros(dataset.n_rows, dtype=bool)
    for w in windows:
        in_windows |= (dataset.ts >= w.start_ts) & (dataset.ts < w.end_ts)
    if not in_windows.any():
        return "all"
    best_device, best_level = "all", 0.0
    for name, values in dataset.channels.items():
        lowered = name.lower()
        for device in DEVICE_CHANNEL_HINTS:
            if lowered.startswith(device):
                level = float(values[in_windows].mean())
                if level > best_level:
                    best_device, best_level = device, level
    return best_device


def recommend(dataset: Dataset, detections: Sequence[IdleWindow]) -> list[Recommendation]:
    """Turn idle-window detections into actionable suggestions: a shutdown
    schedule over the modal idle window, a fan setpoint change when occupied
    fan speed runs high, and an equipment-efficiency note."""
    recommendations: list[Recommendation] = []

    if detections:
        start_hour, end_hour = _modal_hours(detections)
        savings = sum(w.mean_power * w.duration_s / 3600.0 for w in detections)
        device = _attribute_device(dataset, detections)
        recommendations.append(Recommendation(
            kind="shutdown_schedule",
            device=device,
            window=(start_hour, end_hour),
            estimated_savings_wh=savings,
            rationale=(
                f"Power averaged {detections[0].mean_power:.0f} W across "
                f"{len(detections)} unoccupied windows; scheduling the {device} "
                f"off from {start_hour:02d}:00 to {end_hour:02d}:00 recovers "
                f"roughly {savings:.0f} Wh."),
        ))

    if "fan_speed" in dataset.channels and "occupancy" in dataset.channels \
            and dataset.n_rows:
        occupied = dataset.channels["occupancy"] > DEFAULT_OCC_EPS
        if occupied.any():
            occupied_speed = float(dataset.channels["fan_speed"][occupied].mean())
            if occupied_speed > FAN_SPEED_SETPOINT_THRESHOLD:
                hours = (dataset.ts[occupied] % 86400) // 3600
                recommendations.append(Recommendation(
                    kind="setpoint_change",
                    device="fan",
                    window=(int(hours.min()), int(hours.max()) + 1),
                    estimated_savings_wh=0.0,
                    rationale=(
                        f"Fan speed averages {occupied_speed:.0f}% while the space "
                        "is occupied; a lower setpoint keeps comfort with less draw."),
                ))

    if detections:
        recommendations.append(Recommendation(
            kind="device_downgrade",
            device=_attribute_device(dataset, detections),
            window=(0, 24),
            estimated_savings_wh=0.0,
            rationale=("Recurring off-hours load suggests replacing always-on "
                       "equipment with higher-efficiency lighting and ventilation units."),
        ))
    return recommendations


# -- plot specs ---------------------------------------------------------------------


@dataclass
class PlotSpec:
    title: str
    x_axis: str
    series: list
    annotations: list

    def to_json_dict(self) -> dict:
        return {
            "title": self.title,
            "x_axis": self.x_axis,
            "series": self.series,
            "annotations": self.annotations,
        }


def plot_spec(dataset: Dataset, channels: Sequence[str],
              annotations: Sequence[IdleWindow] = ()) -> PlotSpec:
    """Structured plot description; points are copied verbatim, rendering is
    the dashboard's job."""
    if not channels:
        raise AnalyticsError("plot needs at least one channel")
    series = []
    for name in channels:
        values = dataset.channel(name)
        series.append({
            "name": name,
            "unit": dataset.units.get(name, ""),
            "points": [[int(t), float(v)] for t, v in zip(dataset.ts, values)],
        })
    return PlotSpec(
        title=" / ".join(channels),
        x_axis="time",
        series=series,
        annotations=[w.to_json_dict() for w in annotations],
    )


# -- narration ------------------------------------------------------------------------


def _template_text(summaries: Sequence[ChannelSummary],
                   recommendations: Sequence[Recommendation]) -> str:
    lines = []
    if summaries:
        span = max(s.count for s in summaries)
        names = ", ".join(s.channel for s in summaries)
        lines.append(f"Reviewed {span} samples across {names}.")
    if not recommendations:
        lines.append("No action suggested: every channel stayed within "
                     "expected operating patterns.")
        return " ".join(lines)
    for rec in recommendations:
        if rec.kind == "shutdown_schedule":
            start, end = rec.window
            lines.append(
                f"Schedule the {rec.device} off between {start:02d}:00 and "
                f"{end:02d}:00; estimated weekly savings {rec.estimated_savings_wh:.0f} Wh.")
        elif rec.kind == "setpoint_change":
            lines.append(f"Lower the {rec.device} setpoint during occupied hours. "
                         f"({rec.rationale})")
        else:
            lines.append(rec.rationale)
    return " ".join(lines)


def narrate(summaries: Sequence[ChannelSummary],
            recommendations: Sequence[Recommendation],
            hook: Optional[str] = None, timeout: float = 5.0) -> str:
    """Deterministic template text, or, when a hook URL is configured, the
    response of POSTing the structured inputs there (template on any failure)."""
    if hook:
        payload = {
            "summaries": [s.to_json_dict() for s in summaries],
            "recommendations": [r.to_json_dict() for r in recommendations],
        }
        try:
            import requests

            response = requests.post(hook, json=payload, timeout=timeout)
            response.raise_for_status()
            content_type = response.headers.get("content-type", "")
            if "json" in content_type:
                body = response.json()
                if isinstance(body, dict) and "text" in body:
                    return str(body["text"])
                return json.dumps(body)
            return response.text
        except Exception as exc:  # network/timeout/HTTP: fall back, keep going
            log.warning("text-generation hook %s failed (%s); using template", hook, exc)
    return _template_text(summaries, recommendations)
