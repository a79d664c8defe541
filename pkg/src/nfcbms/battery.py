"""Battery module model: emulated cell voltages on the wired path, a
field-powered temperature sensor behind the tag, and the per-module status
record the cell controller hands upstream.

Voltages never touch the tag link; temperature always does.
"""

from __future__ import annotations

from dataclasses import dataclass

from .auth import AuthStatus
from .link import LinkBus, LinkCommandFailed, NfcTagDevice, ReadSensor

VOLTAGE_MV_MAX = 5000
DEFAULT_CELL_COUNT = 14
DEFAULT_SENSOR_INIT_MS = 116.1
DEFAULT_ALARM_THRESHOLD_DC = 600


class SensorNotInitializedError(Exception):
    """The temperature sensor was read before initialization."""


def _check_voltage(mv: int) -> int:
    if not 0 <= mv <= VOLTAGE_MV_MAX:
        raise ValueError(f"cell voltage {mv} mV outside [0, {VOLTAGE_MV_MAX}]")
    return int(mv)


@dataclass(frozen=True)
class VoltageProfile:
    """Cell voltage source over virtual time: constant, or a clamped ramp."""

    kind: str
    start_mv: int
    end_mv: int = 0
    duration_ms: float = 0.0

    def __post_init__(self):
        _check_voltage(self.start_mv)
        if self.kind == "ramp":
            _check_voltage(self.end_mv)
            if self.duration_ms <= 0:
                raise ValueError("ramp duration must be positive")
        elif self.kind != "constant":
            raise ValueError(f"unknown voltage profile kind: {self.kind}")

    @classmethod
    def constant(cls, mv: int) -> "VoltageProfile":
        return cls("constant", mv)

    @classmethod
    def ramp(cls, start_mv: int, end_mv: int, duration_ms: float) -> "VoltageProfile":
        return cls("ramp", start_mv, end_mv, duration_ms)

    @classmethod
    def from_config(cls, cfg: dict) -> "VoltageProfile":
        kind = cfg.get("type", "constant")
        if kind == "constant":
            return cls.constant(int(cfg.get("millivolts", 3700)))
        if kind == "ramp":
            return cls.ramp(
                int(cfg["start_mv"]), int(cfg["end_mv"]), float(cfg["duration_ms"])
            )
        raise ValueError(f"unknown voltage profile kind: {kind}")

    def value_mv(self, t_ms: float) -> int:
        if self.kind == "constant" or t_ms <= 0:
            return self.start_mv
        if t_ms >= self.duration_ms:
            return self.end_mv
        return round(self.start_mv + (self.end_mv - self.start_mv) * t_ms / self.duration_ms)


@dataclass(frozen=True)
class TemperatureProfile:
    """Temperature in Celsius over virtual time: constant, step, or ramp."""

    kind: str
    start_c: float
    end_c: float = 0.0
    at_ms: float = 0.0
    duration_ms: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "step", "ramp"):
            raise ValueError(f"unknown temperature profile kind: {self.kind}")
        if self.kind == "ramp" and self.duration_ms <= 0:
            raise ValueError("ramp duration must be positive")

    @classmethod
    def constant(cls, celsius: float) -> "TemperatureProfile":
        return cls("constant", celsius)

    @classmethod
    def step(cls, before_c: float, after_c: float, at_ms: float) -> "TemperatureProfile":
        return cls("step", before_c, after_c, at_ms=at_ms)

    @classmethod
    def ramp(cls, start_c: float, end_c: float, duration_ms: float) -> "TemperatureProfile":
        return cls("ramp", start_c, end_c, duration_ms=duration_ms)

    @classmethod
    def from_config(cls, cfg: dict) -> "TemperatureProfile":
        kind = cfg.get("type", "constant")
        if kind == "constant":
            return cls.constant(float(cfg.get("celsius", 25.0)))
        if kind == "step":
            return cls.step(float(cfg["before_c"]), float(cfg["after_c"]), float(cfg["at_ms"]))
        if kind == "ramp":
            return cls.ramp(float(cfg["start_c"]), float(cfg["end_c"]), float(cfg["duration_ms"]))
        raise ValueError(f"unknown temperature profile kind: {kind}")

    def value_c(self, t_ms: float) -> float:
        if self.kind == "constant":
            return self.start_c
        if self.kind == "step":
            return self.end_c if t_ms >= self.at_ms else self.start_c
        if t_ms <= 0:
            return self.start_c
        if t_ms >= self.duration_ms:
            return self.end_c
        return self.start_c + (self.end_c - self.start_c) * t_ms / self.duration_ms

    def value_dc(self, t_ms: float) -> int:
        """Deci-degrees Celsius, the unit carried over the link."""
        return round(self.value_c(t_ms) * 10)


class TemperatureSensor:
    """Sensor fed from the tag's harvested supply. It must be (re)initialized
    after every power-up before it can be read."""

    def __init__(
        self,
        profile: TemperatureProfile,
        init_duration_ms: float = DEFAULT_SENSOR_INIT_MS,
        fail_init: bool = False,
    ):
        if init_duration_ms <= 0:
            raise ValueError("sensor init duration must be positive")
        self.profile = profile
        self.init_duration_ms = float(init_duration_ms)
        self.fail_init = bool(fail_init)  # fault knob for aborted-init scenarios
        self.initialized = False

    def initialize(self) -> bool:
        if self.fail_init:
            return False
        self.initialized = True
        return True

    def power_down(self) -> None:
        self.initialized = False

    def read_deci_celsius(self, t_ms: float) -> int:
        if not self.initialized:
            raise SensorNotInitializedError("sensor read before initialization")
        return self.profile.value_dc(t_ms)


@dataclass
class BatteryCellState:
    voltage_mv: int

    def __post_init__(self):
        _check_voltage(self.voltage_mv)


class BatteryModule:
    """One battery module: cells on the wired path plus its tag/sensor pair."""

    def __init__(
        self,
        module_id: str,
        tag: NfcTagDevice,
        sensor: TemperatureSensor,
        voltage_profile: VoltageProfile,
        cell_count: int = DEFAULT_CELL_COUNT,
    ):
        if cell_count < 1:
            raise ValueError("a module needs at least one cell")
        self.module_id = module_id
        self.tag = tag
        self.sensor = sensor
        self.voltage_profile = voltage_profile
        self.cells = [
            BatteryCellState(voltage_profile.value_mv(0.0)) for _ in range(cell_count)
        ]
        if tag.attached_sensor is None:
            tag.attached_sensor = sensor


@dataclass(frozen=True)
class ModuleStatus:
    """Snapshot relayed from the cell controller to the main controller."""

    module_id: str
    voltages_mv: tuple[int, ...]
    temperature_dc: int
    auth_state: str
    timestamp_us: int

    @property
    def timestamp_ms(self) -> float:
        return self.timestamp_us / 1000

    def to_dict(self) -> dict:
        return {
            "module_id": self.module_id,
            "voltages_mv": list(self.voltages_mv),
            "temperature_dc": self.temperature_dc,
            "auth_state": self.auth_state,
            "timestamp_ms": self.timestamp_ms,
        }


def emulate_cell_voltages(module: BatteryModule, t_ms: float) -> list[int]:
    """Wired voltage readout; never touches the tag link."""
    mv = module.voltage_profile.value_mv(t_ms)
    for cell in module.cells:
        cell.voltage_mv = mv
    return [cell.voltage_mv for cell in module.cells]


def bcc_collect(bus: LinkBus, module: BatteryModule, auth_state: AuthStatus) -> ModuleStatus:
    """Assemble one status record: voltages over the wired path, temperature
    over the tag link. Link failures propagate as LinkCommandFailed."""
    voltages = emulate_cell_voltages(module, bus.clock.now_ms)
    response = bus.transceive(ReadSensor())
    if not response.ok:
        raise LinkCommandFailed(response.status, "ReadSensor")
    temperature_dc = int.from_bytes(response.payload, "big", signed=True)
    return ModuleStatus(
        module_id=module.module_id,
        voltages_mv=tuple(voltages),
        temperature_dc=temperature_dc,
        auth_state=auth_state.value,
        timestamp_us=bus.clock.now_us,
    )


def detect_thermal_alarm(status: ModuleStatus, threshold_dc: int = DEFAULT_ALARM_THRESHOLD_DC) -> bool:
    """Strict comparison: alarm only above the threshold."""
    return status.temperature_dc > threshold_dc
