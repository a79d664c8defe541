"""File formats and scenario loading."""

import json

import pytest

from helpers import DEFAULT_UID_HEX, vendor_keypair, write_scenario_files
from nfcbms.auth import TagUid, provision_tag
from nfcbms.config import (
    ConfigError,
    build_system,
    load_allowlist,
    load_config,
    load_key_file,
    load_tag_image,
    save_allowlist,
    save_key_file,
    save_tag_image,
)


def test_key_file_roundtrip(tmp_path):
    key = vendor_keypair()
    path = tmp_path / "key.json"
    save_key_file(path, key)
    loaded = load_key_file(path)
    assert loaded.private == key.private
    assert loaded.public == key.public


def test_key_file_mismatch_is_rejected(tmp_path):
    key = vendor_keypair()
    path = tmp_path / "key.json"
    save_key_file(path, key)
    data = json.loads(path.read_text())
    data["public"] = "04" + "11" * 32
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        load_key_file(path)


def test_allowlist_roundtrip(tmp_path):
    uids = [TagUid.from_hex("E000000000000002"), TagUid.from_hex("E000000000000001")]
    path = tmp_path / "allowlist.json"
    save_allowlist(path, uids)
    entries = json.loads(path.read_text())
    assert entries == ["E000000000000001", "E000000000000002"]  # sorted on disk
    allowlist = load_allowlist(path)
    assert all(uid in allowlist for uid in uids)


def test_allowlist_rejects_bad_entries(tmp_path):
    path = tmp_path / "allowlist.json"
    path.write_text(json.dumps(["not-hex"]))
    with pytest.raises(ConfigError):
        load_allowlist(path)
    path.write_text(json.dumps({"uid": 1}))
    with pytest.raises(ConfigError):
        load_allowlist(path)


def test_tag_image_roundtrip(tmp_path):
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    signature = provision_tag(key, uid)
    path = tmp_path / "tag.json"
    save_tag_image(path, uid, signature, [b"\x01\x02\x03\x04"])
    image = load_tag_image(path)
    assert image["uid"] == uid
    assert image["signature"] == signature
    assert image["blocks"] == [b"\x01\x02\x03\x04"]


def test_load_config_requires_security_files(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"topology": {}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_load_config_rejects_bad_timings(tmp_path):
    config = write_scenario_files(tmp_path, timings={"warp_ms": 3.0})
    with pytest.raises(ConfigError):
        load_config(config)


def test_seed_accepted_inside_timings_section(tmp_path):
    config_path = write_scenario_files(tmp_path, timings={"auth_ms": 50.0, "seed": 11})
    raw = json.loads(config_path.read_text())
    del raw["seed"]  # only the timings section names a seed
    config_path.write_text(json.dumps(raw))
    cfg = load_config(config_path)
    assert cfg.seed == 11
    assert cfg.timings.auth_ms == 50.0


def test_top_level_seed_wins_over_timings_seed(tmp_path):
    config = write_scenario_files(tmp_path, seed=4, timings={"seed": 11})
    assert load_config(config).seed == 4


def test_build_system_resolves_relative_paths_and_defaults(tmp_path):
    config = write_scenario_files(tmp_path)
    system = build_system(load_config(config))
    assert system.target_uid == TagUid.from_hex(DEFAULT_UID_HEX)
    assert system.enclosure_sealed is True
    assert system.alarm_threshold_dc == 600
    assert system.bus.field(system.target_uid).distance_cm == 2.0


def test_build_system_rejects_duplicate_uids(tmp_path):
    config = write_scenario_files(tmp_path, extra_tags=((DEFAULT_UID_HEX, 2.0),))
    with pytest.raises(ConfigError):
        build_system(load_config(config))


def test_build_system_rejects_unknown_target(tmp_path):
    config_path = write_scenario_files(tmp_path)
    raw = json.loads(config_path.read_text())
    raw["topology"]["target_uid"] = "E0DDDDDDDDDDDDDD"
    config_path.write_text(json.dumps(raw))
    with pytest.raises(ConfigError):
        build_system(load_config(config_path))


def test_build_system_schedules_moves(tmp_path):
    config = write_scenario_files(
        tmp_path, moves=({"at_ms": 5.0, "uid": DEFAULT_UID_HEX, "distance_cm": 9.0},)
    )
    system = build_system(load_config(config))
    system.bus.discovery_loop()
    system.bus.clock.advance_ms(5.0)
    system.bus.sync()
    assert not system.bus.field(system.target_uid).powered()
