"""Tag identity: provisioning, allowlist pre-check, signature verification.

The accept path runs two gates in a fixed order: the identifier must be on
the allowlist before any signature math happens, and only then is the stored
signature checked against the vendor public key. Every call returns an audit
trail so that ordering is observable from the outside.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable

from . import curve
from .curve import CurvePoint, KeyPair

UID_BYTES = 8
UID_PREFIX = 0xE0  # allocation-class byte shared by this tag family
SIGNATURE_BYTES = curve.SIGNATURE_BYTES


@dataclass(frozen=True, order=True)
class TagUid:
    """8-byte factory identifier, first byte fixed to 0xE0."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != UID_BYTES:
            raise ValueError(f"tag uid must be {UID_BYTES} bytes")
        if self.value[0] != UID_PREFIX:
            raise ValueError("tag uid must start with byte 0xE0")

    @classmethod
    def from_hex(cls, text: str) -> "TagUid":
        return cls(bytes.fromhex(text))

    @property
    def hex(self) -> str:
        return self.value.hex().upper()

    def __repr__(self) -> str:
        return f"TagUid({self.hex})"


@dataclass(frozen=True)
class OriginalitySignature:
    """32-byte r || s signature kept in the tag's read-only region."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != SIGNATURE_BYTES:
            raise ValueError(f"originality signature must be {SIGNATURE_BYTES} bytes")

    @classmethod
    def from_hex(cls, text: str) -> "OriginalitySignature":
        return cls(bytes.fromhex(text))

    @property
    def hex(self) -> str:
        return self.value.hex().upper()

    def decode(self) -> curve.EcdsaSignature:
        return curve.EcdsaSignature.decode(self.value)


class AuthStatus(Enum):
    ACCEPTED = "Accepted"
    REJECTED_UNKNOWN_UID = "RejectedUnknownUid"
    REJECTED_BAD_SIGNATURE = "RejectedBadSignature"


AuditEvent = tuple[str, str]


@dataclass(frozen=True)
class AuthOutcome:
    """Result of one authentication attempt plus its step-by-step audit."""

    status: AuthStatus
    elapsed_ms: float = 0.0
    audit: tuple[AuditEvent, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.status is AuthStatus.ACCEPTED

    def with_elapsed(self, elapsed_ms: float) -> "AuthOutcome":
        return replace(self, elapsed_ms=elapsed_ms)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "elapsed_ms": self.elapsed_ms,
            "audit": [list(event) for event in self.audit],
        }


@dataclass(frozen=True)
class AllowList:
    """Set of identifiers the verifier accepts as known devices."""

    entries: frozenset[TagUid]

    @classmethod
    def of(cls, uids: Iterable[TagUid]) -> "AllowList":
        return cls(frozenset(uids))

    def __contains__(self, uid: TagUid) -> bool:
        return uid in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class VerifierConfig:
    public_key: CurvePoint
    allowlist: AllowList

    def __post_init__(self):
        if self.public_key.is_infinity:
            raise ValueError("verifier public key cannot be the point at infinity")
        if not curve.is_on_curve(self.public_key):
            raise ValueError("verifier public key is not on the curve")


def provision_tag(key: KeyPair, uid: TagUid) -> OriginalitySignature:
    """Factory step: sign the identifier and return the signature that gets
    written to the tag's protected region."""
    sig = curve.ecdsa_sign(key, curve.digest_uid(uid.value))
    return OriginalitySignature(sig.encode())


def check_uid(allowlist: AllowList, uid: TagUid) -> bool:
    return uid in allowlist


def authenticate(cfg: VerifierConfig, uid: TagUid, sig: OriginalitySignature) -> AuthOutcome:
    """Run the two-gate check: allowlist membership first, signature second."""
    audit: list[AuditEvent] = []
    known = check_uid(cfg.allowlist, uid)
    audit.append(("uid_check", "pass" if known else "fail"))
    if not known:
        audit.append(("outcome", AuthStatus.REJECTED_UNKNOWN_UID.value))
        return AuthOutcome(AuthStatus.REJECTED_UNKNOWN_UID, audit=tuple(audit))
    valid = curve.ecdsa_verify(cfg.public_key, curve.digest_uid(uid.value), sig.decode())
    audit.append(("signature_verify", "pass" if valid else "fail"))
    status = AuthStatus.ACCEPTED if valid else AuthStatus.REJECTED_BAD_SIGNATURE
    audit.append(("outcome", status.value))
    return AuthOutcome(status, audit=tuple(audit))
