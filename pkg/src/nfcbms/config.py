"""Scenario configuration: JSON file formats and the builder that turns a
parsed config into a live simulation domain.

File formats (all JSON, byte fields as hex strings):
  key file      {"private": "<32 hex>", "public": "<66 hex, 04||x||y>"}
  allowlist     ["E0..", ...] (16 hex chars each)
  tag image     {"uid": "...", "signature": "<64 hex>", "blocks": ["<8 hex>", ...]}
  scenario      {"seed": int, "timings": {...}, "topology": {...},
                 "security": {...}, "threat": {...}?}

Relative paths inside a scenario file resolve against its directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .auth import AllowList, OriginalitySignature, TagUid, VerifierConfig
from .battery import BatteryModule, TemperatureProfile, TemperatureSensor, VoltageProfile
from .clock import SimClock
from .curve import KeyPair, keypair_from_private
from .link import DEFAULT_COUPLING_EXPONENT, DEFAULT_D_MAX_CM, LinkBus, NfcTagDevice
from .orchestrator import PhaseTimings, System


class ConfigError(Exception):
    """A configuration file is missing, unreadable, or invalid."""


def _load_json(path: Path):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _dump_json(payload, path: Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def save_key_file(path, key: KeyPair) -> None:
    _dump_json(
        {"private": f"{key.private:032x}", "public": key.public.encode().hex()},
        Path(path),
    )


def load_key_file(path) -> KeyPair:
    data = _load_json(Path(path))
    try:
        key = keypair_from_private(int(data["private"], 16))
        stated = data.get("public")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad key file {path}: {exc}") from None
    if stated is not None and stated.lower() != key.public.encode().hex():
        raise ConfigError(f"key file {path}: public key does not match the private scalar")
    return key


def save_allowlist(path, uids) -> None:
    _dump_json(sorted(uid.hex for uid in uids), Path(path))


def load_allowlist(path) -> AllowList:
    data = _load_json(Path(path))
    if not isinstance(data, list):
        raise ConfigError(f"allowlist {path} must be a JSON array of hex uids")
    try:
        return AllowList.of(TagUid.from_hex(entry) for entry in data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad allowlist entry in {path}: {exc}") from None


def save_tag_image(path, uid: TagUid, signature: OriginalitySignature, blocks) -> None:
    _dump_json(
        {
            "uid": uid.hex,
            "signature": signature.hex,
            "blocks": [bytes(block).hex() for block in blocks],
        },
        Path(path),
    )


def load_tag_image(path) -> dict:
    data = _load_json(Path(path))
    try:
        return {
            "uid": TagUid.from_hex(data["uid"]),
            "signature": OriginalitySignature.from_hex(data["signature"]),
            "blocks": [bytes.fromhex(block) for block in data.get("blocks", [])],
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad tag image {path}: {exc}") from None


@dataclass
class ScenarioConfig:
    seed: int
    timings: PhaseTimings
    topology: dict
    security: dict
    threat: Optional[dict]
    raw: dict
    base_dir: Path

    def resolve(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario config {path} must be a JSON object")
    timings_cfg = dict(raw.get("timings", {}))
    timings_seed = timings_cfg.pop("seed", None)  # accepted in either section
    try:
        timings = PhaseTimings.from_config(timings_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad timings section: {exc}") from None
    security = raw.get("security", {})
    for required in ("key_file", "allowlist_file"):
        if required not in security:
            raise ConfigError(f"security section is missing {required!r}")
    threat = raw.get("threat")
    if threat is not None and not isinstance(threat, dict):
        raise ConfigError("threat section must be an object")
    try:
        seed = int(raw.get("seed", timings_seed if timings_seed is not None else 0))
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    return ScenarioConfig(
        seed=seed,
        timings=timings,
        topology=raw.get("topology", {}),
        security=security,
        threat=threat,
        raw=raw,
        base_dir=path.resolve().parent,
    )


def _build_tag(cfg: ScenarioConfig, entry: dict, index: int):
    merged = dict(entry)
    if "image" in entry:
        image = load_tag_image(cfg.resolve(entry["image"]))
        merged.setdefault("uid", image["uid"].hex)
        merged.setdefault("signature", image["signature"].hex)
        if image["blocks"] and "blocks" not in merged:
            merged["blocks"] = [block.hex() for block in image["blocks"]]
    try:
        uid = TagUid.from_hex(merged["uid"])
        signature = OriginalitySignature.from_hex(merged["signature"])
        blocks = [bytes.fromhex(block) for block in merged.get("blocks", [])] or None
        distance_cm = float(merged["distance_cm"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad tag entry #{index + 1}: {exc}") from None
    tag = NfcTagDevice(
        uid,
        signature,
        blocks=blocks,
        protected_blocks=merged.get("protected_blocks", ()),
    )
    module_cfg = merged.get("module", {})
    try:
        voltage = VoltageProfile.from_config(
            module_cfg.get("voltage_profile", {"type": "constant", "millivolts": 3700})
        )
        temperature = TemperatureProfile.from_config(
            module_cfg.get("temperature_profile", {"type": "constant", "celsius": 25.0})
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad module profiles for tag {uid.hex}: {exc}") from None
    sensor = TemperatureSensor(
        temperature,
        init_duration_ms=cfg.timings.sensor_init_ms,
        fail_init=bool(module_cfg.get("sensor_fail_init", False)),
    )
    module = BatteryModule(
        module_id=module_cfg.get("module_id", f"module-{uid.hex.lower()}"),
        tag=tag,
        sensor=sensor,
        voltage_profile=voltage,
        cell_count=int(module_cfg.get("cell_count", 14)),
    )
    return tag, module, distance_cm


def build_system(cfg: ScenarioConfig) -> System:
    """Instantiate the simulation domain a scenario file describes."""
    bus = LinkBus(SimClock())
    reader_cfg = cfg.topology.get("reader", {})
    d_max_cm = float(reader_cfg.get("d_max_cm", DEFAULT_D_MAX_CM))
    coupling = float(reader_cfg.get("coupling_exponent", DEFAULT_COUPLING_EXPONENT))
    modules: dict[TagUid, BatteryModule] = {}
    for index, entry in enumerate(cfg.topology.get("tags", [])):
        tag, module, distance_cm = _build_tag(cfg, entry, index)
        try:
            bus.attach_tag(tag, distance_cm, d_max_cm, coupling)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        modules[tag.uid] = module
    for move in cfg.topology.get("moves", []):
        try:
            bus.schedule_move(
                float(move["at_ms"]), TagUid.from_hex(move["uid"]), float(move["distance_cm"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad move entry: {exc}") from None
    key = load_key_file(cfg.resolve(cfg.security["key_file"]))
    allowlist = load_allowlist(cfg.resolve(cfg.security["allowlist_file"]))
    target = cfg.topology.get("target_uid")
    if target is not None:
        try:
            target_uid = TagUid.from_hex(target)
        except ValueError as exc:
            raise ConfigError(f"bad target_uid: {exc}") from None
        if target_uid not in modules:
            raise ConfigError(f"target_uid {target_uid.hex} is not in the topology")
    else:
        target_uid = min(modules) if modules else None
    return System(
        bus=bus,
        modules=modules,
        verifier=VerifierConfig(key.public, allowlist),
        target_uid=target_uid,
        enclosure_sealed=bool(cfg.security.get("enclosure_sealed", True)),
        alarm_threshold_dc=int(cfg.security.get("alarm_threshold_dc", 600)),
    )
