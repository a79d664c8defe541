"""Voltage/temperature profiles, the sensor, and the collection path."""

import random

import pytest

from helpers import DEFAULT_UID_HEX, build_system, establish_session
from nfcbms.auth import AuthStatus, TagUid
from nfcbms.battery import (
    BatteryCellState,
    SensorNotInitializedError,
    TemperatureProfile,
    TemperatureSensor,
    VoltageProfile,
    bcc_collect,
    detect_thermal_alarm,
    emulate_cell_voltages,
)
from nfcbms.link import LinkCommandFailed

UID = TagUid.from_hex(DEFAULT_UID_HEX)


def test_constant_voltage_profile():
    profile = VoltageProfile.constant(3700)
    assert profile.value_mv(0) == 3700
    assert profile.value_mv(123456.0) == 3700


def test_ramp_voltage_profile_boundaries_and_midpoint():
    profile = VoltageProfile.ramp(3600, 3700, 1000.0)
    assert profile.value_mv(0) == 3600
    assert profile.value_mv(500.0) == 3650
    assert profile.value_mv(1000.0) == 3700
    assert profile.value_mv(5000.0) == 3700  # clamped after the ramp


def test_voltage_profile_validation():
    with pytest.raises(ValueError):
        VoltageProfile.constant(6000)
    with pytest.raises(ValueError):
        VoltageProfile.ramp(3600, 3700, 0.0)
    with pytest.raises(ValueError):
        VoltageProfile.from_config({"type": "sawtooth"})
    assert VoltageProfile.from_config({"type": "constant", "millivolts": 3300}).value_mv(0) == 3300


def test_temperature_profiles():
    assert TemperatureProfile.constant(25.0).value_dc(0) == 250
    step = TemperatureProfile.step(25.0, 60.5, 1000.0)
    assert step.value_dc(999.9) == 250
    assert step.value_dc(1000.0) == 605
    assert step.value_dc(1500.0) == 605
    ramp = TemperatureProfile.ramp(20.0, 30.0, 1000.0)
    assert ramp.value_dc(0) == 200
    assert ramp.value_dc(500.0) == 250
    assert ramp.value_dc(2000.0) == 300
    with pytest.raises(ValueError):
        TemperatureProfile.from_config({"type": "spline"})


def test_sensor_guards_and_lifecycle():
    sensor = TemperatureSensor(TemperatureProfile.constant(25.0))
    with pytest.raises(SensorNotInitializedError):
        sensor.read_deci_celsius(0.0)
    assert sensor.initialize()
    assert sensor.read_deci_celsius(0.0) == 250
    sensor.power_down()
    with pytest.raises(SensorNotInitializedError):
        sensor.read_deci_celsius(0.0)


def test_sensor_fail_init_knob():
    sensor = TemperatureSensor(TemperatureProfile.constant(25.0), fail_init=True)
    assert not sensor.initialize()
    assert not sensor.initialized


def test_cell_state_validation():
    with pytest.raises(ValueError):
        BatteryCellState(-1)
    with pytest.raises(ValueError):
        BatteryCellState(5001)


def test_module_defaults(healthy_system):
    module = healthy_system.modules[UID]
    assert len(module.cells) == 14
    assert module.tag.attached_sensor is module.sensor


def test_emulated_voltages_never_touch_the_link(healthy_system):
    module = healthy_system.modules[UID]
    trace_before = len(healthy_system.bus.trace)
    voltages = emulate_cell_voltages(module, 0.0)
    assert voltages == [3700] * 14
    assert len(healthy_system.bus.trace) == trace_before


def test_bcc_collect_composes_wired_and_link_paths(healthy_system):
    establish_session(healthy_system)
    bus = healthy_system.bus
    module = healthy_system.modules[UID]
    trace_before = len(bus.trace)
    status = bcc_collect(bus, module, AuthStatus.ACCEPTED)
    assert status.voltages_mv == (3700,) * 14
    assert status.temperature_dc == 250
    assert status.auth_state == "Accepted"
    assert status.timestamp_us == bus.clock.now_us
    new_entries = bus.trace[trace_before:]
    assert [entry.command for entry in new_entries] == ["ReadSensor"]


def test_bcc_collect_propagates_field_loss(healthy_system):
    establish_session(healthy_system)
    bus = healthy_system.bus
    bus.set_distance(UID, 6.0)
    with pytest.raises(LinkCommandFailed) as exc_info:
        bcc_collect(bus, healthy_system.modules[UID], AuthStatus.ACCEPTED)
    assert exc_info.value.status.value == "NotPowered"


def test_two_modules_on_distinct_buses_are_independent(vendor_key):
    system_a = build_system(key=vendor_key, uid_hex="E00000000000000A")
    system_b = build_system(key=vendor_key, uid_hex="E00000000000000B")
    for system in (system_a, system_b):
        establish_session(system)
    status_a = bcc_collect(
        system_a.bus, system_a.modules[system_a.target_uid], AuthStatus.ACCEPTED
    )
    status_b = bcc_collect(
        system_b.bus, system_b.modules[system_b.target_uid], AuthStatus.ACCEPTED
    )
    assert status_a.module_id == "module-e00000000000000a"
    assert status_b.module_id == "module-e00000000000000b"
    assert status_a.module_id != status_b.module_id


def test_link_is_transparent_for_random_profiles(vendor_key):
    # whatever the profile says at read time is what the controller receives
    rng = random.Random(77)
    system = build_system(key=vendor_key)
    establish_session(system)
    module = system.modules[UID]
    for _ in range(100):
        celsius = rng.uniform(-40.0, 120.0)
        module.sensor.profile = TemperatureProfile.constant(celsius)
        system.bus.clock.advance_ms(rng.uniform(0.0, 50.0))
        status = bcc_collect(system.bus, module, AuthStatus.ACCEPTED)
        assert status.temperature_dc == round(celsius * 10)


def test_statuses_carry_nondecreasing_timestamps(healthy_system):
    establish_session(healthy_system)
    bus = healthy_system.bus
    module = healthy_system.modules[UID]
    previous = -1
    for _ in range(5):
        bus.clock.advance_ms(27.2)
        status = bcc_collect(bus, module, AuthStatus.ACCEPTED)
        assert status.timestamp_us > previous
        previous = status.timestamp_us


def test_thermal_alarm_is_strict():
    status_template = dict(
        module_id="m", voltages_mv=(3700,), auth_state="Accepted", timestamp_us=0
    )
    from nfcbms.battery import ModuleStatus

    assert detect_thermal_alarm(ModuleStatus(temperature_dc=610, **status_template), 600)
    assert not detect_thermal_alarm(ModuleStatus(temperature_dc=600, **status_template), 600)
    assert not detect_thermal_alarm(ModuleStatus(temperature_dc=250, **status_template), 600)
