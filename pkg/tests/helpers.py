"""Builders shared across the test suite."""

from __future__ import annotations

import json
from pathlib import Path

from nfcbms.auth import AllowList, TagUid, VerifierConfig, provision_tag
from nfcbms.battery import (
    BatteryModule,
    TemperatureProfile,
    TemperatureSensor,
    VoltageProfile,
)
from nfcbms.clock import SimClock
from nfcbms.config import save_allowlist, save_key_file
from nfcbms.curve import keypair_from_private
from nfcbms.link import LinkBus, NfcTagDevice
from nfcbms.orchestrator import System

VENDOR_PRIVATE = 0x1B2E4F60718293A4B5C6D7E8F90A1B2C
FOREIGN_PRIVATE = 0x0F1E2D3C4B5A69788796A5B4C3D2E1F0
DEFAULT_UID_HEX = "E004010203040506"


def vendor_keypair():
    return keypair_from_private(VENDOR_PRIVATE)


def foreign_keypair():
    return keypair_from_private(FOREIGN_PRIVATE)


def build_system(
    key=None,
    uid_hex: str = DEFAULT_UID_HEX,
    distance_cm: float = 2.0,
    allowlisted: bool = True,
    temperature: TemperatureProfile | None = None,
    voltage: VoltageProfile | None = None,
    signature=None,
    cell_count: int = 14,
    extra_tags: tuple = (),
    sensor_fail_init: bool = False,
    protected_blocks=(),
) -> System:
    """One bus, one target module, optional extra tags, sane defaults."""
    key = key or vendor_keypair()
    uid = TagUid.from_hex(uid_hex)
    sig = signature or provision_tag(key, uid)
    tag = NfcTagDevice(uid, sig, protected_blocks=protected_blocks)
    sensor = TemperatureSensor(
        temperature or TemperatureProfile.constant(25.0), fail_init=sensor_fail_init
    )
    module = BatteryModule(
        f"module-{uid_hex.lower()}",
        tag,
        sensor,
        voltage or VoltageProfile.constant(3700),
        cell_count,
    )
    bus = LinkBus(SimClock())
    bus.attach_tag(tag, distance_cm)
    modules = {uid: module}
    allow = [uid] if allowlisted else []
    for other_hex, other_distance in extra_tags:
        other_uid = TagUid.from_hex(other_hex)
        other_tag = NfcTagDevice(other_uid, provision_tag(key, other_uid))
        other_sensor = TemperatureSensor(TemperatureProfile.constant(25.0))
        modules[other_uid] = BatteryModule(
            f"module-{other_hex.lower()}",
            other_tag,
            other_sensor,
            VoltageProfile.constant(3700),
        )
        bus.attach_tag(other_tag, other_distance)
        allow.append(other_uid)
    return System(
        bus=bus,
        modules=modules,
        verifier=VerifierConfig(key.public, AllowList.of(allow)),
        target_uid=uid,
    )


def establish_session(system: System, uid=None) -> None:
    """Select + configure the tag and bring the sensor up, without charging
    any virtual time. For tests that need a live link minus the init phase."""
    from nfcbms.link import ConfigureTag, Select

    uid = uid or system.target_uid
    assert system.bus.transceive(Select(uid)).ok
    assert system.bus.transceive(ConfigureTag()).ok
    assert system.modules[uid].sensor.initialize()


def write_scenario_files(
    tmp_path: Path,
    uid_hex: str = DEFAULT_UID_HEX,
    distance_cm: float = 2.0,
    allowlist: tuple = (DEFAULT_UID_HEX,),
    signature_hex: str | None = None,
    seed: int = 0,
    timings: dict | None = None,
    threat: dict | None = None,
    moves: tuple = (),
    security_extra: dict | None = None,
    module_cfg: dict | None = None,
    extra_tags: tuple = (),
    name: str = "scenario.json",
) -> Path:
    """Write key/allowlist/config files for CLI-level tests; returns the
    config path."""
    key = vendor_keypair()
    save_key_file(tmp_path / "key.json", key)
    save_allowlist(tmp_path / "allowlist.json", [TagUid.from_hex(h) for h in allowlist])
    uid = TagUid.from_hex(uid_hex)
    sig_hex = signature_hex or provision_tag(key, uid).hex
    tag_entry: dict = {"uid": uid_hex, "signature": sig_hex, "distance_cm": distance_cm}
    if module_cfg:
        tag_entry["module"] = module_cfg
    tags = [tag_entry]
    for other_hex, other_distance in extra_tags:
        other_uid = TagUid.from_hex(other_hex)
        tags.append(
            {
                "uid": other_hex,
                "signature": provision_tag(key, other_uid).hex,
                "distance_cm": other_distance,
            }
        )
    config = {
        "seed": seed,
        "timings": timings or {},
        "topology": {"tags": tags, "moves": list(moves)},
        "security": {
            "key_file": "key.json",
            "allowlist_file": "allowlist.json",
            **(security_extra or {}),
        },
    }
    if threat is not None:
        config["threat"] = threat
    path = tmp_path / name
    path.write_text(json.dumps(config, indent=2))
    return path
