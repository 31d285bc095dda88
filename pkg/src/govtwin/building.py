"""Discrete-time building twin.

First-order Euler dynamics over latent temperature/humidity/gas state, a
daylight-plus-bulb lux model, four controllable devices, and an occupancy
schedule. Gaussian sensor noise (seeded) applies to emitted readings only,
never to the latent state, so tests can assert on physics while controllers
see realistic jitter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

DEVICE_NAMES = ("purifier", "humidifier", "fan", "bulb")

# Nameplate draw at level 100, roughly matching small consumer units:
# air purifier, ultrasonic humidifier, standing fan, smart bulb.
DEFAULT_WATTS = {"purifier": 38.0, "humidifier": 8.0, "fan": 15.0, "bulb": 8.0}

# Hourly ambient daylight contribution (lux), hours 0..23.
DEFAULT_DAYLIGHT = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,       # 00-06
    40.0, 80.0,                                # 07-08
    120.0, 120.0, 120.0, 120.0, 120.0, 120.0, 120.0, 120.0,  # 09-16
    80.0, 40.0,                                # 17-18
    0.0, 0.0, 0.0, 0.0, 0.0,                   # 19-23
)

NOISE_CHANNELS = ("temperature_c", "humidity_pct", "lux", "gas_ppm", "power_w")


class SimError(Exception):
    pass


@dataclass
class Device:
    watts_at_full: float
    powered: bool = False
    level: int = 0

    @property
    def effective_level(self) -> int:
        return self.level if self.powered else 0

    @property
    def draw_w(self) -> float:
        return self.watts_at_full * self.effective_level / 100.0


@dataclass
class PhysicsParams:
    seconds_per_tick: int = 60
    ambient_temp: float = 22.0
    k_env: float = 0.02               # per-tick pull toward ambient temperature
    occupant_heat: float = 0.02       # deg C per tick per person
    fan_cooling: float = 0.5          # deg C per tick at level 100
    humidifier_rate: float = 0.8      # %RH per tick at level 100
    humidity_decay: float = 0.01      # per-tick pull toward ambient humidity
    ambient_humidity: float = 35.0
    occupant_co: float = 8.0          # ppm per tick per person
    purifier_co_removal: float = 60.0  # ppm per tick at level 100
    co_baseline: float = 400.0
    bulb_lux_per_level: float = 6.0
    daylight_lux: tuple = DEFAULT_DAYLIGHT
    sensor_noise_sd: dict = field(default_factory=dict)
    rng_seed: int = 0

    def validate(self) -> None:
        rates = {
            "seconds_per_tick": self.seconds_per_tick, "k_env": self.k_env,
            "occupant_heat": self.occupant_heat, "fan_cooling": self.fan_cooling,
            "humidifier_rate": self.humidifier_rate,
            "humidity_decay": self.humidity_decay,
            "occupant_co": self.occupant_co,
            "purifier_co_removal": self.purifier_co_removal,
            "co_baseline": self.co_baseline,
            "bulb_lux_per_level": self.bulb_lux_per_level,
        }
        for name, value in rates.items():
            if value < 0:
                raise SimError(f"{name} must be nonnegative")
        if self.seconds_per_tick < 1:
            raise SimError("seconds_per_tick must be >= 1")
        if len(self.daylight_lux) != 24:
            raise SimError("daylight_lux must have 24 hourly entries")
        for channel in self.sensor_noise_sd:
            if channel not in NOISE_CHANNELS:
                raise SimError(f"unknown noise channel {channel!r}")

    def daylight_at(self, t_seconds: int) -> float:
        return self.daylight_lux[(t_seconds % 86400) // 3600]


@dataclass(frozen=True)
class OccupancyEntry:
    start_hour: float
    end_hour: float
    persons: int
    noise: int = 0


class OccupancySchedule:
    """Daily occupancy as non-overlapping [start_hour, end_hour) entries."""

    def __init__(self, entries: Iterable[OccupancyEntry] = ()):
        self.entries = sorted(entries, key=lambda e: e.start_hour)
        previous_end = None
        for entry in self.entries:
            if not (0 <= entry.start_hour < 24 and 0 < entry.end_hour <= 24):
                raise SimError("schedule hours must lie in [0, 24)")
            if entry.end_hour <= entry.start_hour:
                raise SimError("schedule entry must end after it starts")
            if entry.persons < 0:
                raise SimError("persons must be nonnegative")
            if previous_end is not None and entry.start_hour < previous_end:
                raise SimError("schedule entries overlap")
            previous_end = entry.end_hour

    def occupancy_at(self, t_seconds: int, rng: Optional[np.random.Generator] = None) -> int:
        hour = (t_seconds % 86400) / 3600.0
        for entry in self.entries:
            if entry.start_hour <= hour < entry.end_hour:
                persons = entry.persons
                if entry.noise and rng is not None:
                    persons += int(rng.integers(-entry.noise, entry.noise + 1))
                return max(0, persons)
        return 0


@dataclass
class SensorReading:
    ts: int
    temperature_c: float
    humidity_pct: float
    lux: float
    gas_ppm: float
    occupancy: int
    power_w: float
    per_plug_w: dict = field(default_factory=dict)

    def to_json_dict(self, devices: Optional[dict] = None) -> dict:
        payload = {
            "ts": self.ts,
            "temperature_c": round(self.temperature_c, 6),
            "humidity_pct": round(self.humidity_pct, 6),
            "lux": round(self.lux, 6),
            "gas_ppm": round(self.gas_ppm, 6),
            "occupancy": self.occupancy,
            "power_w": round(self.power_w, 6),
            "plugs": {k: round(v, 6) for k, v in self.per_plug_w.items()},
        }
        if devices is not None:
            payload["devices"] = {
                name: {"powered": d.powered, "level": d.level}
                for name, d in devices.items()
            }
        return payload


CSV_HEADER = "ts,temperature_c,humidity_pct,lux,gas_ppm,occupancy,power_w"


def reading_csv_row(reading: SensorReading) -> str:
    return (f"{reading.ts},{reading.temperature_c:.6f},{reading.humidity_pct:.6f},"
            f"{reading.lux:.6f},{reading.gas_ppm:.6f},{reading.occupancy},"
            f"{reading.power_w:.6f}")


def readings_to_csv(readings: Iterable[SensorReading]) -> str:
    lines = [CSV_HEADER]
    lines.extend(reading_csv_row(r) for r in readings)
    return "\n".join(lines) + "\n"


def default_initial_reading(params: PhysicsParams) -> SensorReading:
    return SensorReading(
        ts=0,
        temperature_c=params.ambient_temp,
        humidity_pct=params.ambient_humidity,
        lux=params.daylight_at(0),
        gas_ppm=params.co_baseline,
        occupancy=0,
        power_w=0.0,
    )


class BuildingSim:
    def __init__(self, params: PhysicsParams, schedule: OccupancySchedule,
                 initial: Optional[SensorReading] = None,
                 device_watts: Optional[dict] = None):
        params.validate()
        self.params = params
        self.schedule = schedule
        watts = dict(DEFAULT_WATTS)
        if device_watts:
            unknown = set(device_watts) - set(DEVICE_NAMES)
            if unknown:
                raise SimError(f"unknown devices: {sorted(unknown)}")
            watts.update(device_watts)
        self.devices = {name: Device(watts_at_full=watts[name]) for name in DEVICE_NAMES}
        initial = initial or default_initial_reading(params)
        self.tick_index = 0
        self.temperature = float(initial.temperature_c)
        self.humidity = float(initial.humidity_pct)
        self.gas = float(initial.gas_ppm)
        self.rng = np.random.default_rng(params.rng_seed)
        self.last_reading = replace(initial)

    # -- devices ---------------------------------------------------------------

    def set_device(self, device: str, command: str, level: Optional[int] = None) -> None:
        if device not in self.devices:
            raise SimError(f"unknown device {device!r}")
        state = self.devices[device]
        if command == "on":
            state.powered = True
            if state.level == 0:
                state.level = 100
        elif command == "off":
            state.powered = False
        elif command == "set_level":
            if level is None:
                raise SimError("set_level requires a level")
            state.level = max(0, min(100, int(level)))
            state.powered = state.level > 0
        else:
            raise SimError(f"unknown command {command!r}")

    def apply_command(self, action) -> None:
        """Apply a control action (anything with device/command/level attributes).
        Takes effect on the next tick."""
        self.set_device(action.device, action.command, getattr(action, "level", None))

    # -- stepping ----------------------------------------------------------------

    def _noise(self, channel: str) -> float:
        sd = self.params.sensor_noise_sd.get(channel, 0.0)
        return float(self.rng.normal(0.0, sd)) if sd > 0 else 0.0

    def tick(self) -> SensorReading:
        p = self.params
        self.tick_index += 1
        t = self.tick_index * p.seconds_per_tick
        occupancy = self.schedule.occupancy_at(t, self.rng)

        fan = self.devices["fan"].effective_level
        hum = self.devices["humidifier"].effective_level
        pur = self.devices["purifier"].effective_level
        bulb = self.devices["bulb"].effective_level

        self.temperature += (p.k_env * (p.ambient_temp - self.temperature)
                             + p.occupant_heat * occupancy
                             - p.fan_cooling * fan / 100.0)
        self.humidity += (p.humidifier_rate * hum / 100.0
                          - p.humidity_decay * (self.humidity - p.ambient_humidity))
        self.humidity = min(100.0, max(0.0, self.humidity))
        self.gas = max(p.co_baseline,
                       self.gas + p.occupant_co * occupancy
                       - p.purifier_co_removal * pur / 100.0)
        lux = p.daylight_at(t) + p.bulb_lux_per_level * bulb

        per_plug = {name: d.draw_w for name, d in self.devices.items()}
        power = sum(per_plug.values())

        self.last_reading = SensorReading(
            ts=t,
            temperature_c=self.temperature + self._noise("temperature_c"),
            humidity_pct=min(100.0, max(0.0, self.humidity + self._noise("humidity_pct"))),
            lux=max(0.0, lux + self._noise("lux")),
            gas_ppm=max(0.0, self.gas + self._noise("gas_ppm")),
            occupancy=occupancy,
            power_w=max(0.0, power + self._noise("power_w")),
            per_plug_w=per_plug,
        )
        return self.last_reading

    def current_reading(self) -> SensorReading:
        return self.last_reading

    def reading_json(self) -> str:
        return json.dumps(self.last_reading.to_json_dict(self.devices), sort_keys=True)

    def run(self, ticks: int, sink: Optional[Callable[[SensorReading], None]] = None) -> list[SensorReading]:
        if ticks < 0:
            raise SimError("ticks must be nonnegative")
        readings = []
        for _ in range(ticks):
            reading = self.tick()
            readings.append(reading)
            if sink is not None:
                sink(reading)
        return readings


def round_half_up(value: float) -> int:
    """Round to the nearest integer, ties toward +infinity (registry stores ints)."""
    return math.floor(value + 0.5)
