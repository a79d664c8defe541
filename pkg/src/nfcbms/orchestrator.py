"""Two-phase session driver on the virtual clock.

The initialization phase runs four steps in a fixed order (authentication,
energy check, tag configuration, sensor bring-up), each charged with its
configured duration. The monitoring phase repeats a fixed-cost sensor
measurement. Completed init steps are cached per tag so an undisturbed
session resumes monitoring at zero extra cost; losing the field wipes the
cache and forces the full sequence again.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .auth import AuthOutcome, AuthStatus, OriginalitySignature, TagUid, VerifierConfig, authenticate
from .battery import (
    DEFAULT_ALARM_THRESHOLD_DC,
    BatteryModule,
    ModuleStatus,
    bcc_collect,
    detect_thermal_alarm,
)
from .clock import SimClock, ms_to_us
from .link import (
    ConfigureTag,
    GetEnergyStatus,
    LinkBus,
    LinkCommandFailed,
    ReadSignature,
    Select,
)

STEP_AUTHENTICATION = "authentication"
STEP_ENERGY_CHECK = "energy_check"
STEP_NTAG_INIT = "ntag_init"
STEP_SENSOR_INIT = "sensor_init"
INIT_STEP_ORDER = (STEP_AUTHENTICATION, STEP_ENERGY_CHECK, STEP_NTAG_INIT, STEP_SENSOR_INIT)

FLAG_AUTHENTICATED = "authenticated"
FLAG_CONFIGURED = "configured"
FLAG_SENSOR_READY = "sensor_ready"
SESSION_FLAGS = (FLAG_AUTHENTICATED, FLAG_CONFIGURED, FLAG_SENSOR_READY)


class SessionNotReady(RuntimeError):
    """Monitoring was requested without a fully cached initialization."""


@dataclass(frozen=True)
class PhaseTimings:
    """Configured virtual durations, in milliseconds, for every step."""

    auth_ms: float = 369.3
    energy_check_ms: float = 19.64
    ntag_init_ms: float = 29.16
    sensor_init_ms: float = 116.1
    measurement_ms: float = 27.2
    jitter_fraction: float = 0.0

    def __post_init__(self):
        for name in ("auth_ms", "energy_check_ms", "ntag_init_ms", "sensor_init_ms", "measurement_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.jitter_fraction <= 0.5:
            raise ValueError("jitter_fraction must lie in [0, 0.5]")

    @classmethod
    def from_config(cls, cfg: dict) -> "PhaseTimings":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown timing fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in cfg.items()})

    def to_dict(self) -> dict:
        return {
            "auth_ms": self.auth_ms,
            "energy_check_ms": self.energy_check_ms,
            "ntag_init_ms": self.ntag_init_ms,
            "sensor_init_ms": self.sensor_init_ms,
            "measurement_ms": self.measurement_ms,
            "jitter_fraction": self.jitter_fraction,
        }


class InitFinal(Enum):
    SUCCEEDED = "Succeeded"
    ABORTED_AUTH = "AbortedAuth"
    ABORTED_POWER = "AbortedPower"
    ABORTED_SENSOR = "AbortedSensor"


@dataclass(frozen=True)
class StepRecord:
    name: str
    start_us: int
    duration_us: int
    outcome: str  # "ok" or a failure tag such as "rejected_bad_signature"
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome == "ok"

    @property
    def start_ms(self) -> float:
        return self.start_us / 1000

    @property
    def duration_ms(self) -> float:
        return self.duration_us / 1000

    def to_dict(self) -> dict:
        entry = {
            "name": self.name,
            "start_ms": self.start_ms,
            "duration_ms": self.duration_ms,
            "outcome": self.outcome,
        }
        if self.note:
            entry["note"] = self.note
        return entry


@dataclass
class InitReport:
    steps: list[StepRecord]
    final: InitFinal

    @property
    def succeeded(self) -> bool:
        return self.final is InitFinal.SUCCEEDED

    @property
    def total_elapsed_us(self) -> int:
        return sum(step.duration_us for step in self.steps)

    @property
    def total_elapsed_ms(self) -> float:
        return self.total_elapsed_us / 1000

    def to_dict(self) -> dict:
        return {
            "steps": [step.to_dict() for step in self.steps],
            "final": self.final.value,
            "total_elapsed_ms": self.total_elapsed_ms,
        }


@dataclass(frozen=True)
class MonitorSample:
    timestamp_us: int
    status: ModuleStatus
    thermal_alarm: bool = False

    @property
    def timestamp_ms(self) -> float:
        return self.timestamp_us / 1000

    def to_dict(self) -> dict:
        return {
            "timestamp_ms": self.timestamp_ms,
            "status": self.status.to_dict(),
            "thermal_alarm": self.thermal_alarm,
        }


@dataclass
class MonitorReport:
    samples: list[MonitorSample]
    per_sample_us: int
    attempted: int
    elapsed_us: int
    field_lost: bool = False

    @property
    def per_sample_ms(self) -> float:
        return self.per_sample_us / 1000

    @property
    def elapsed_ms(self) -> float:
        return self.elapsed_us / 1000

    def to_dict(self) -> dict:
        return {
            "samples": [sample.to_dict() for sample in self.samples],
            "per_sample_ms": self.per_sample_ms,
            "attempted": self.attempted,
            "elapsed_ms": self.elapsed_ms,
            "field_lost": self.field_lost,
        }


class SessionCache:
    """Per-tag record of completed init steps; all-or-nothing at resume."""

    def __init__(self):
        self._flags: dict[TagUid, set[str]] = {}

    def mark(self, uid: TagUid, flag: str) -> None:
        if flag not in SESSION_FLAGS:
            raise ValueError(f"unknown session flag: {flag}")
        self._flags.setdefault(uid, set()).add(flag)

    def clear(self, uid: TagUid) -> None:
        self._flags.pop(uid, None)

    def flags(self, uid: TagUid) -> frozenset[str]:
        return frozenset(self._flags.get(uid, ()))

    def is_complete(self, uid: TagUid) -> bool:
        return self.flags(uid) == frozenset(SESSION_FLAGS)


@dataclass
class System:
    """One simulation domain: the bus plus everything reachable through it."""

    bus: LinkBus
    modules: dict[TagUid, BatteryModule]
    verifier: VerifierConfig
    cache: SessionCache = field(default_factory=SessionCache)
    auth_outcomes: dict[TagUid, AuthOutcome] = field(default_factory=dict)
    target_uid: Optional[TagUid] = None
    enclosure_sealed: bool = True
    alarm_threshold_dc: int = DEFAULT_ALARM_THRESHOLD_DC

    def __post_init__(self):
        # field loss invalidates the cached session for that tag
        if self.bus.on_field_loss is None:
            self.bus.on_field_loss = self.cache.clear

    @property
    def clock(self) -> SimClock:
        return self.bus.clock

    @property
    def reader(self):
        return self.bus.reader

    def module_for(self, uid: TagUid) -> BatteryModule:
        try:
            return self.modules[uid]
        except KeyError:
            raise KeyError(f"no battery module behind tag {uid.hex}") from None


def _realized_us(duration_ms: float, jitter_fraction: float, rng: random.Random | None) -> int:
    base = ms_to_us(duration_ms)
    if jitter_fraction <= 0 or rng is None:
        return base
    factor = 1.0 + rng.uniform(-jitter_fraction, jitter_fraction)
    return max(1, round(base * factor))


def run_initialization(
    system: System,
    timings: PhaseTimings,
    clock: SimClock | None = None,
    uid: TagUid | None = None,
    rng: random.Random | None = None,
) -> InitReport:
    """Run the four init steps in order against one tag, advancing the clock
    by each step's duration. Aborts are reported as data, not raised."""
    clock = clock if clock is not None else system.clock
    uid = uid if uid is not None else system.target_uid
    if uid is None:
        raise ValueError("no target tag for initialization")
    if timings.jitter_fraction > 0 and rng is None:
        rng = random.Random(0)
    bus = system.bus
    steps: list[StepRecord] = []

    def step_fail(name: str, start: int, dur: int, outcome: str, final: InitFinal) -> InitReport:
        steps.append(StepRecord(name, start, dur, outcome))
        return InitReport(steps, final)

    # Authentication: select the tag, read the stored signature, check it.
    start = clock.now_us
    response = bus.transceive(Select(uid))
    if response.ok:
        response = bus.transceive(ReadSignature())
    duration = _realized_us(timings.auth_ms, timings.jitter_fraction, rng)
    clock.advance_us(duration)
    if not response.ok:
        return step_fail(
            STEP_AUTHENTICATION, start, duration,
            f"link_{response.status.name.lower()}", InitFinal.ABORTED_POWER,
        )
    outcome = authenticate(system.verifier, uid, OriginalitySignature(response.payload))
    outcome = outcome.with_elapsed(duration / 1000)
    system.auth_outcomes[uid] = outcome
    steps.append(
        StepRecord(
            STEP_AUTHENTICATION, start, duration,
            "ok" if outcome.accepted else outcome.status.name.lower(),
            note="signature verification dominates this step",
        )
    )
    if not outcome.accepted:
        return InitReport(steps, InitFinal.ABORTED_AUTH)
    system.cache.mark(uid, FLAG_AUTHENTICATED)

    # Energy check: confirm the harvested supply at the tag.
    start = clock.now_us
    response = bus.transceive(GetEnergyStatus())
    duration = _realized_us(timings.energy_check_ms, timings.jitter_fraction, rng)
    clock.advance_us(duration)
    if not response.ok:
        return step_fail(
            STEP_ENERGY_CHECK, start, duration,
            f"link_{response.status.name.lower()}", InitFinal.ABORTED_POWER,
        )
    steps.append(StepRecord(STEP_ENERGY_CHECK, start, duration, "ok"))

    # Tag self-configuration.
    start = clock.now_us
    response = bus.transceive(ConfigureTag())
    duration = _realized_us(timings.ntag_init_ms, timings.jitter_fraction, rng)
    clock.advance_us(duration)
    if not response.ok:
        return step_fail(
            STEP_NTAG_INIT, start, duration,
            f"link_{response.status.name.lower()}", InitFinal.ABORTED_POWER,
        )
    steps.append(StepRecord(STEP_NTAG_INIT, start, duration, "ok"))
    system.cache.mark(uid, FLAG_CONFIGURED)

    # Sensor bring-up over the harvested supply.
    start = clock.now_us
    bus.sync()
    powered = bus.field(uid).powered()
    sensor_ok = powered and system.module_for(uid).sensor.initialize()
    duration = _realized_us(timings.sensor_init_ms, timings.jitter_fraction, rng)
    clock.advance_us(duration)
    if not powered:
        return step_fail(STEP_SENSOR_INIT, start, duration, "link_not_powered", InitFinal.ABORTED_POWER)
    if not sensor_ok:
        return step_fail(STEP_SENSOR_INIT, start, duration, "sensor_init_failed", InitFinal.ABORTED_SENSOR)
    steps.append(StepRecord(STEP_SENSOR_INIT, start, duration, "ok"))
    system.cache.mark(uid, FLAG_SENSOR_READY)
    return InitReport(steps, InitFinal.SUCCEEDED)


def run_monitoring(
    system: System,
    timings: PhaseTimings,
    clock: SimClock | None = None,
    n_samples: int = 1,
    uid: TagUid | None = None,
    rng: random.Random | None = None,
) -> MonitorReport:
    """Repeat the fixed-cost sensor measurement n_samples times. Requires a
    fully cached session; a field loss truncates the report and wipes it."""
    clock = clock if clock is not None else system.clock
    uid = uid if uid is not None else system.target_uid
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if not system.cache.is_complete(uid):
        raise SessionNotReady(f"tag {uid.hex} has no completed initialization")
    if timings.jitter_fraction > 0 and rng is None:
        rng = random.Random(0)
    module = system.module_for(uid)
    outcome = system.auth_outcomes.get(uid)
    auth_state = outcome.status if outcome is not None else AuthStatus.ACCEPTED
    samples: list[MonitorSample] = []
    field_lost = False
    attempted = 0
    elapsed = 0
    for _ in range(n_samples):
        duration = _realized_us(timings.measurement_ms, timings.jitter_fraction, rng)
        clock.advance_us(duration)
        attempted += 1
        elapsed += duration
        try:
            status = bcc_collect(system.bus, module, auth_state)
        except LinkCommandFailed:
            # the failed slot was still spent on the attempt
            field_lost = True
            system.cache.clear(uid)
            break
        alarm = detect_thermal_alarm(status, system.alarm_threshold_dc)
        samples.append(MonitorSample(clock.now_us, status, thermal_alarm=alarm))
    return MonitorReport(
        samples=samples,
        per_sample_us=ms_to_us(timings.measurement_ms),
        attempted=attempted,
        elapsed_us=elapsed,
        field_lost=field_lost,
    )


def resume_session(
    system: System,
    timings: PhaseTimings,
    clock: SimClock | None = None,
    uid: TagUid | None = None,
    rng: random.Random | None = None,
    cache: SessionCache | None = None,
) -> InitReport:
    """Fast path: with every init flag cached and the tag still powered,
    succeed immediately with zero steps and zero clock advance. Any missing
    flag falls back to the full initialization."""
    uid = uid if uid is not None else system.target_uid
    cache = cache if cache is not None else system.cache
    system.bus.sync()
    if cache.is_complete(uid) and system.bus.field(uid).powered():
        return InitReport(steps=[], final=InitFinal.SUCCEEDED)
    return run_initialization(system, timings, clock=clock, uid=uid, rng=rng)
