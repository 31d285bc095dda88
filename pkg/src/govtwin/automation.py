"""Comfort-threshold registry (ledger contract, DAO-writable only) and the
off-chain control loop that compares telemetry against it.

The [min, max] band itself is the hysteresis deadband: readings inside a band
produce no action, so devices hold their state until a bound is crossed.
Readings are rounded half-up to integers before comparison because the
registry stores integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .building import BuildingSim, SensorReading, round_half_up
from .ledger import Address, CallEnv, Contract, LedgerError, Revert

THRESHOLD_FIELDS = (
    "min_temperature", "max_temperature",
    "min_co_level", "max_co_level",
    "min_lux_level", "max_lux_level",
    "min_humidity", "max_humidity",
)

_EVENT_NAMES = {
    "min_temperature": "MinTemperatureUpdated",
    "max_temperature": "MaxTemperatureUpdated",
    "min_co_level": "MinCoLevelUpdated",
    "max_co_level": "MaxCoLevelUpdated",
    "min_lux_level": "MinLuxLevelUpdated",
    "max_lux_level": "MaxLuxLevelUpdated",
    "min_humidity": "MinHumidityUpdated",
    "max_humidity": "MaxHumidityUpdated",
}

BULB_STEP = 25  # level change per control period, avoids lighting oscillation


class AutomationError(Exception):
    pass


@dataclass(frozen=True)
class ThresholdSnapshot:
    min_temperature: int = 0
    max_temperature: int = 0
    min_co_level: int = 0
    max_co_level: int = 0
    min_lux_level: int = 0
    max_lux_level: int = 0
    min_humidity: int = 0
    max_humidity: int = 0

    def is_initialized(self) -> bool:
        return any(getattr(self, f) != 0 for f in THRESHOLD_FIELDS)

    def validate(self) -> None:
        if not self.is_initialized():
            raise AutomationError("threshold registry is uninitialized")
        for field_name in ("temperature", "co_level", "lux_level", "humidity"):
            lo = getattr(self, f"min_{field_name}")
            hi = getattr(self, f"max_{field_name}")
            if lo > hi:
                raise AutomationError(f"{field_name} thresholds inverted: {lo} > {hi}")


class ThresholdRegistry(Contract):
    name = "thresholds"
    FUNCTIONS = tuple(f"set_{f}" for f in THRESHOLD_FIELDS)

    def __init__(self, dao: Address):
        super().__init__()
        self.dao = dao
        self.values = {f: 0 for f in THRESHOLD_FIELDS}

    def _set(self, env: CallEnv, field_name: str, value: int) -> None:
        if env.caller != self.dao:
            raise Revert("Only DAO can set the values")
        if not isinstance(value, int) or isinstance(value, bool):
            raise Revert(f"{field_name} must be an integer")
        if field_name != "min_temperature" and value < 0:
            raise Revert(f"{field_name} must be nonnegative")
        self.values[field_name] = value
        env.emit(self, _EVENT_NAMES[field_name], **{field_name: value})

    def set_min_temperature(self, env: CallEnv, value: int) -> None:
        self._set(env, "min_temperature", value)

    def set_max_temperature(self, env: CallEnv, value: int) -> None:
        self._set(env, "max_temperature", value)

    def set_min_co_level(self, env: CallEnv, value: int) -> None:
        self._set(env, "min_co_level", value)

    def set_max_co_level(self, env: CallEnv, value: int) -> None:
        self._set(env, "max_co_level", value)

    def set_min_lux_level(self, env: CallEnv, value: int) -> None:
        self._set(env, "min_lux_level", value)

    def set_max_lux_level(self, env: CallEnv, value: int) -> None:
        self._set(env, "max_lux_level", value)

    def set_min_humidity(self, env: CallEnv, value: int) -> None:
        self._set(env, "min_humidity", value)

    def set_max_humidity(self, env: CallEnv, value: int) -> None:
        self._set(env, "max_humidity", value)

    def get(self, field_name: str) -> int:
        if field_name not in self.values:
            raise LedgerError(f"unknown threshold field {field_name!r}")
        return self.values[field_name]

    def snapshot(self) -> ThresholdSnapshot:
        return ThresholdSnapshot(**self.values)


@dataclass(frozen=True)
class ControlAction:
    device: str            # purifier | humidifier | fan | bulb
    command: str           # on | off | set_level
    level: Optional[int] = None
    cause: Optional[tuple] = None  # (field, rounded reading, violated bound)

    def to_json_dict(self) -> dict:
        return {
            "device": self.device,
            "command": self.command,
            "level": self.level,
            "cause": list(self.cause) if self.cause else None,
        }


def control_step(reading: SensorReading, thresholds: ThresholdSnapshot,
                 devices: dict) -> list[ControlAction]:
    """Pure rule evaluation of one reading against the threshold bands.

    temperature above max -> fan full; below min -> fan off. humidity below
    min -> humidifier on; above max -> off. gas above max -> purifier full;
    below min -> off. lux outside its band steps the bulb by +-BULB_STEP.
    Inside every band nothing is emitted and devices hold state.
    """
    thresholds.validate()
    actions: list[ControlAction] = []

    temp = round_half_up(reading.temperature_c)
    if temp > thresholds.max_temperature:
        actions.append(ControlAction("fan", "set_level", 100,
                                     ("temperature", temp, thresholds.max_temperature)))
    elif temp < thresholds.min_temperature:
        actions.append(ControlAction("fan", "off",
                                     cause=("temperature", temp, thresholds.min_temperature)))

    humidity = round_half_up(reading.humidity_pct)
    if humidity < thresholds.min_humidity:
        actions.append(ControlAction("humidifier", "on",
                                     cause=("humidity", humidity, thresholds.min_humidity)))
    elif humidity > thresholds.max_humidity:
        actions.append(ControlAction("humidifier", "off",
                                     cause=("humidity", humidity, thresholds.max_humidity)))

    gas = round_half_up(reading.gas_ppm)
    if gas > thresholds.max_co_level:
        actions.append(ControlAction("purifier", "set_level", 100,
                                     ("co_level", gas, thresholds.max_co_level)))
    elif gas < thresholds.min_co_level:
        actions.append(ControlAction("purifier", "off",
                                     cause=("co_level", gas, thresholds.min_co_level)))

    lux = round_half_up(reading.lux)
    bulb_level = devices["bulb"].level
    if lux < thresholds.min_lux_level:
        actions.append(ControlAction("bulb", "set_level", min(100, bulb_level + BULB_STEP),
                                     ("lux", lux, thresholds.min_lux_level)))
    elif lux > thresholds.max_lux_level:
        actions.append(ControlAction("bulb", "set_level", max(0, bulb_level - BULB_STEP),
                                     ("lux", lux, thresholds.max_lux_level)))

    return actions


@dataclass
class ActionLogEntry:
    tick: int
    kind: str  # "action" | "alert"
    device: Optional[str] = None
    command: Optional[str] = None
    level: Optional[int] = None
    cause: Optional[tuple] = None

    def to_json_dict(self) -> dict:
        return {
            "tick": self.tick,
            "kind": self.kind,
            "device": self.device,
            "command": self.command,
            "level": self.level,
            "cause": list(self.cause) if self.cause else None,
        }


def controller_tick(sim: BuildingSim, thresholds: ThresholdSnapshot,
                    log: Optional[list] = None) -> list[ControlAction]:
    """One control period: read, decide, actuate (effective next tick), log."""
    reading = sim.current_reading()
    actions = control_step(reading, thresholds, sim.devices)
    for action in actions:
        sim.apply_command(action)
        if log is not None:
            log.append(ActionLogEntry(sim.tick_index, "action", action.device,
                                      action.command, action.level, action.cause))
    gas = round_half_up(reading.gas_ppm)
    if gas > thresholds.max_co_level and log is not None:
        log.append(ActionLogEntry(sim.tick_index, "alert",
                                  cause=("co_level", gas, thresholds.max_co_level)))
    return actions


def run_controller(sim: BuildingSim, thresholds_source: Callable[[], ThresholdSnapshot],
                   ticks: int, period_ticks: int = 1,
                   log: Optional[list] = None,
                   sink: Optional[Callable[[SensorReading], None]] = None) -> list:
    """Closed loop: advance the sim, applying control actions every
    period_ticks using a fresh threshold snapshot (mid-run registry updates
    take effect at the next period)."""
    if period_ticks < 1:
        raise AutomationError("period_ticks must be >= 1")
    log = log if log is not None else []
    for _ in range(ticks):
        reading = sim.tick()
        if sink is not None:
            sink(reading)
        if sim.tick_index % period_ticks == 0:
            controller_tick(sim, thresholds_source(), log)
    return log
