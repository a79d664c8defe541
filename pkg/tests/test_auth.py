"""Provisioning and the ordered two-gate authentication check."""

import random

import pytest

from helpers import DEFAULT_UID_HEX, foreign_keypair, vendor_keypair
from nfcbms.auth import (
    AllowList,
    AuthStatus,
    OriginalitySignature,
    TagUid,
    VerifierConfig,
    authenticate,
    check_uid,
    provision_tag,
)
from nfcbms.curve import INFINITY, SECP128R1


def make_verifier(key, uids):
    return VerifierConfig(key.public, AllowList.of(uids))


def audit_steps(outcome):
    return [event[0] for event in outcome.audit]


def test_provision_then_authenticate_roundtrip():
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    sig = provision_tag(key, uid)
    outcome = authenticate(make_verifier(key, [uid]), uid, sig)
    assert outcome.status is AuthStatus.ACCEPTED
    assert outcome.accepted
    assert audit_steps(outcome) == ["uid_check", "signature_verify", "outcome"]


def test_provisioned_signature_scalars_in_range():
    key = vendor_keypair()
    sig = provision_tag(key, TagUid.from_hex(DEFAULT_UID_HEX)).decode()
    assert 1 <= sig.r < SECP128R1.n
    assert 1 <= sig.s < SECP128R1.n


def test_distinct_uids_get_distinct_signatures():
    key = vendor_keypair()
    sig_a = provision_tag(key, TagUid.from_hex("E004010203040506"))
    sig_b = provision_tag(key, TagUid.from_hex("E004010203040507"))
    assert sig_a.value != sig_b.value


def test_unknown_uid_rejected_before_any_crypto():
    # even a cryptographically valid signature must not be inspected when
    # the identifier is not on the list
    key = vendor_keypair()
    uid = TagUid.from_hex("E0AAAAAAAAAAAAAA")
    valid_sig = provision_tag(key, uid)
    outcome = authenticate(make_verifier(key, []), uid, valid_sig)
    assert outcome.status is AuthStatus.REJECTED_UNKNOWN_UID
    assert "signature_verify" not in audit_steps(outcome)
    assert ("uid_check", "fail") in outcome.audit


def test_foreign_key_signature_rejected():
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    forged = provision_tag(foreign_keypair(), uid)
    outcome = authenticate(make_verifier(key, [uid]), uid, forged)
    assert outcome.status is AuthStatus.REJECTED_BAD_SIGNATURE
    assert ("signature_verify", "fail") in outcome.audit


def test_zeroed_signature_rejected_without_crash():
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    outcome = authenticate(make_verifier(key, [uid]), uid, OriginalitySignature(bytes(32)))
    assert outcome.status is AuthStatus.REJECTED_BAD_SIGNATURE


def test_outcomes_are_deterministic():
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    sig = provision_tag(key, uid)
    cfg = make_verifier(key, [uid])
    assert authenticate(cfg, uid, sig) == authenticate(cfg, uid, sig)


def test_random_wrong_signatures_never_accepted():
    rng = random.Random(99)
    key = vendor_keypair()
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    cfg = make_verifier(key, [uid])
    for _ in range(100):
        junk = OriginalitySignature(rng.randbytes(32))
        assert authenticate(cfg, uid, junk).status is AuthStatus.REJECTED_BAD_SIGNATURE


def test_check_uid():
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    other = TagUid.from_hex("E0FFFFFFFFFFFFFF")
    allowlist = AllowList.of([uid])
    assert check_uid(allowlist, uid)
    assert not check_uid(allowlist, other)
    assert not check_uid(AllowList.of([]), uid)


def test_allowlist_deduplicates():
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    assert len(AllowList.of([uid, TagUid.from_hex(DEFAULT_UID_HEX)])) == 1


def test_tag_uid_validation():
    with pytest.raises(ValueError):
        TagUid(b"\xe0\x01")  # too short
    with pytest.raises(ValueError):
        TagUid(b"\x01" * 8)  # wrong allocation byte
    with pytest.raises(ValueError):
        TagUid.from_hex("XYZ")
    assert TagUid.from_hex("e004010203040506").hex == "E004010203040506"


def test_originality_signature_validation():
    with pytest.raises(ValueError):
        OriginalitySignature(bytes(31))
    sig = OriginalitySignature(bytes(32))
    assert sig.hex == "00" * 32


def test_verifier_config_rejects_bad_keys():
    uid = TagUid.from_hex(DEFAULT_UID_HEX)
    with pytest.raises(ValueError):
        VerifierConfig(INFINITY, AllowList.of([uid]))
