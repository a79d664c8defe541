"""secp128r1 arithmetic and ECDSA over 16-byte digests.

Everything here is plain big-integer affine arithmetic. Field elements and
scalars are canonical Python ints (reduced mod p, respectively mod n); points
are immutable affine pairs with None coordinates standing for the point at
infinity. Correctness is the goal, constant-time execution is not: this code
backs a simulator, not firmware.

Signing is deterministic. The ephemeral scalar is derived from the private
key and the digest through a keyed hash, so the same (key, digest) pair
always yields the same signature and nonce reuse across distinct digests is
impossible by construction.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass

COORD_BYTES = 16      # 128-bit field and scalar width
DIGEST_BYTES = 16     # digests are truncated to the scalar width
SIGNATURE_BYTES = 32  # r || s, big-endian
POINT_BYTES = 33      # 0x04 || x || y; a lone 0x00 byte encodes infinity


@dataclass(frozen=True)
class CurveParams:
    """Short-Weierstrass curve y^2 = x^3 + a*x + b over GF(p)."""

    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int
    h: int


# secp128r1 domain parameters, from the SEC 2 registry.
SECP128R1 = CurveParams(
    p=0xFFFFFFFDFFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFDFFFFFFFFFFFFFFFFFFFFFFFC,
    b=0xE87579C11079F43DD824993C2CEE5ED3,
    gx=0x161FF7528B899B2D0C28607CA52C5B86,
    gy=0xCF5AC8395BAFEB13C02DA292DDED7A83,
    n=0xFFFFFFFE0000000075A30D1B9038A115,
    h=1,
)


@dataclass(frozen=True)
class CurvePoint:
    """Affine curve point; x is None for the point at infinity."""

    x: int | None
    y: int | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def encode(self) -> bytes:
        """Uncompressed 0x04 || x || y, or a single 0x00 byte for infinity."""
        if self.is_infinity:
            return b"\x00"
        return (
            b"\x04"
            + self.x.to_bytes(COORD_BYTES, "big")
            + self.y.to_bytes(COORD_BYTES, "big")
        )

    @classmethod
    def decode(cls, data: bytes) -> "CurvePoint":
        if data == b"\x00":
            return INFINITY
        if len(data) != POINT_BYTES or data[0] != 0x04:
            raise ValueError("malformed point encoding")
        pt = cls(
            int.from_bytes(data[1 : 1 + COORD_BYTES], "big"),
            int.from_bytes(data[1 + COORD_BYTES :], "big"),
        )
        if not is_on_curve(pt):
            raise ValueError("decoded point is not on the curve")
        return pt


INFINITY = CurvePoint(None, None)


def generator() -> CurvePoint:
    return CurvePoint(SECP128R1.gx, SECP128R1.gy)


def is_on_curve(pt: CurvePoint) -> bool:
    if pt.is_infinity:
        return True
    c = SECP128R1
    if not (0 <= pt.x < c.p and 0 <= pt.y < c.p):
        return False
    return (pt.y * pt.y - (pt.x**3 + c.a * pt.x + c.b)) % c.p == 0


def point_neg(pt: CurvePoint) -> CurvePoint:
    if pt.is_infinity:
        return pt
    return CurvePoint(pt.x, (-pt.y) % SECP128R1.p)


def point_add(p1: CurvePoint, p2: CurvePoint) -> CurvePoint:
    """Group addition. Callers must pass valid points (on curve or infinity)."""
    if p1.is_infinity:
        return p2
    if p2.is_infinity:
        return p1
    p = SECP128R1.p
    if p1.x == p2.x:
        if (p1.y + p2.y) % p == 0:
            return INFINITY
        # doubling; 2y is invertible here since y == -y mod p was handled above
        lam = (3 * p1.x * p1.x + SECP128R1.a) * pow(2 * p1.y, -1, p) % p
    else:
        lam = (p2.y - p1.y) * pow(p2.x - p1.x, -1, p) % p
    x3 = (lam * lam - p1.x - p2.x) % p
    y3 = (lam * (p1.x - x3) - p1.y) % p
    return CurvePoint(x3, y3)


def scalar_mul(k: int, pt: CurvePoint) -> CurvePoint:
    """Double-and-add k*pt for any k >= 0. k is not reduced mod n."""
    if k < 0:
        raise ValueError("scalar must be non-negative")
    acc = INFINITY
    addend = pt
    while k:
        if k & 1:
            acc = point_add(acc, addend)
        addend = point_add(addend, addend)
        k >>= 1
    return acc


def _double_scalar_mul(u1: int, p1: CurvePoint, u2: int, p2: CurvePoint) -> CurvePoint:
    # Interleaved double-and-add over both scalars; halves the work of two
    # separate multiplications on the verification path.
    both = point_add(p1, p2)
    acc = INFINITY
    for i in range(max(u1.bit_length(), u2.bit_length()) - 1, -1, -1):
        acc = point_add(acc, acc)
        b1 = (u1 >> i) & 1
        b2 = (u2 >> i) & 1
        if b1 and b2:
            acc = point_add(acc, both)
        elif b1:
            acc = point_add(acc, p1)
        elif b2:
            acc = point_add(acc, p2)
    return acc


@dataclass(frozen=True)
class KeyPair:
    private: int
    public: CurvePoint

    def __post_init__(self):
        if not 0 < self.private < SECP128R1.n:
            raise ValueError("private scalar out of range")


def keypair_from_private(private: int) -> KeyPair:
    return KeyPair(private, scalar_mul(private, generator()))


def generate_keypair(rng=None) -> KeyPair:
    """New key pair; pass a seeded random.Random for reproducible keys."""
    if rng is None:
        private = 1 + secrets.randbelow(SECP128R1.n - 1)
    else:
        private = rng.randrange(1, SECP128R1.n)
    return keypair_from_private(private)


@dataclass(frozen=True)
class EcdsaSignature:
    """Signature pair as carried on the wire.

    Range validity is checked at verification time rather than construction
    time, so corrupt encodings stay representable and verify to False instead
    of crashing the caller.
    """

    r: int
    s: int

    def __post_init__(self):
        bound = 1 << (8 * COORD_BYTES)
        if not (0 <= self.r < bound and 0 <= self.s < bound):
            raise ValueError("signature scalars do not fit the wire width")

    @property
    def well_formed(self) -> bool:
        n = SECP128R1.n
        return 1 <= self.r < n and 1 <= self.s < n

    def encode(self) -> bytes:
        return self.r.to_bytes(COORD_BYTES, "big") + self.s.to_bytes(COORD_BYTES, "big")

    @classmethod
    def decode(cls, data: bytes) -> "EcdsaSignature":
        if len(data) != SIGNATURE_BYTES:
            raise ValueError(f"signature must be {SIGNATURE_BYTES} bytes")
        return cls(
            int.from_bytes(data[:COORD_BYTES], "big"),
            int.from_bytes(data[COORD_BYTES:], "big"),
        )


def digest_uid(uid: bytes) -> bytes:
    """Digest of a tag identifier: SHA-256 truncated to its leftmost 16
    bytes, matching the scalar width."""
    if len(uid) == 0:
        raise ValueError("cannot digest an empty identifier")
    return hashlib.sha256(bytes(uid)).digest()[:DIGEST_BYTES]


def _derive_nonce(private: int, digest: bytes, counter: int) -> int:
    # HMAC-SHA256 keyed with the private scalar over digest || counter,
    # reduced mod n. The counter bumps on the rare degenerate outcomes.
    key = private.to_bytes(COORD_BYTES, "big")
    msg = digest + counter.to_bytes(2, "big")
    return int.from_bytes(hmac.new(key, msg, hashlib.sha256).digest(), "big") % SECP128R1.n


def ecdsa_sign(key: KeyPair, digest: bytes, nonce: int | None = None) -> EcdsaSignature:
    """Sign a 16-byte digest; deterministic in (key, digest).

    nonce forces the ephemeral scalar and exists for tests only.
    """
    if len(digest) != DIGEST_BYTES:
        raise ValueError(f"digest must be {DIGEST_BYTES} bytes")
    n = SECP128R1.n
    z = int.from_bytes(digest, "big")
    counter = 0
    while True:
        k = nonce if nonce is not None else _derive_nonce(key.private, digest, counter)
        if not 0 < k < n:
            if nonce is not None:
                raise ValueError("forced nonce out of range")
            counter += 1
            continue
        r = scalar_mul(k, generator()).x % n
        s = (z + r * key.private) * pow(k, -1, n) % n
        if r == 0 or s == 0:
            if nonce is not None:
                raise ValueError("forced nonce yields a degenerate signature")
            counter += 1
            continue
        return EcdsaSignature(r, s)


def ecdsa_verify(public: CurvePoint, digest: bytes, sig: EcdsaSignature) -> bool:
    """Standard verification equation; False for any out-of-range r or s."""
    if public.is_infinity:
        raise ValueError("public key is the point at infinity")
    if not is_on_curve(public):
        raise ValueError("public key is not on the curve")
    if len(digest) != DIGEST_BYTES:
        raise ValueError(f"digest must be {DIGEST_BYTES} bytes")
    if not sig.well_formed:
        return False
    n = SECP128R1.n
    z = int.from_bytes(digest, "big")
    w = pow(sig.s, -1, n)
    pt = _double_scalar_mul(z * w % n, generator(), sig.r * w % n, public)
    if pt.is_infinity:
        return False
    return pt.x % n == sig.r


def _self_check() -> None:
    # Import-time guard against typos in the domain parameters.
    c = SECP128R1
    if c.p != 2**128 - 2**97 - 1:
        raise AssertionError("field prime does not match its defining form")
    if c.a != c.p - 3:
        raise AssertionError("curve coefficient a must be -3 mod p")
    if (4 * c.a**3 + 27 * c.b**2) % c.p == 0:
        raise AssertionError("singular curve")
    g = generator()
    if not is_on_curve(g):
        raise AssertionError("base point is not on the curve")
    if not scalar_mul(c.n, g).is_infinity:
        raise AssertionError("base point order mismatch")


_self_check()
