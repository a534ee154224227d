"""Hash commitments c = H(s || H_hat), key hashing and the entropy MAC.

Every hash use is prefixed by a one-octet domain tag. Commitment and MAC
digests are SHA3-256; key derivation and the hybrid combiner use SHAKE-256
truncated to the requested width.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

from .sharing import SecretInput

TAG_COMMIT = 0x01
TAG_KEY = 0x02
TAG_MAC_INNER = 0x03
TAG_MAC_OUTER = 0x04
TAG_HYBRID = 0x05

LAMBDA_BITS = 256
DIGEST_BYTES = LAMBDA_BITS // 8


class CommitmentError(ValueError):
    pass


def _tagged(tag: int, *parts: bytes) -> bytes:
    return bytes([tag]) + b"".join(parts)


def sha3(tag: int, *parts: bytes) -> bytes:
    return hashlib.sha3_256(_tagged(tag, *parts)).digest()


def shake(tag: int, out_bits: int, *parts: bytes) -> bytes:
    if out_bits <= 0 or out_bits % 8:
        raise CommitmentError(f"output width must be a positive multiple of 8 bits, got {out_bits}")
    return hashlib.shake_256(_tagged(tag, *parts)).digest(out_bits // 8)


def encode_entropy(millibits: int) -> bytes:
    """Claimed min-entropy as a 32-bit big-endian count of millibits."""
    if not 0 <= millibits < 1 << 32:
        raise CommitmentError(f"entropy claim {millibits} mb does not fit 32 bits")
    return struct.pack(">I", millibits)


@dataclass(frozen=True)
class Commitment:
    party_id: int
    digest: bytes
    claimed_entropy_millibits: int

    def __post_init__(self):
        if len(self.digest) != DIGEST_BYTES:
            raise CommitmentError(f"digest must be {DIGEST_BYTES} octets, got {len(self.digest)}")

    def to_dict(self) -> dict:
        return {
            "party_id": self.party_id,
            "digest_hex": self.digest.hex(),
            "claimed_entropy_millibits": self.claimed_entropy_millibits,
        }


def commit_digest(secret_bytes: bytes, millibits: int) -> bytes:
    return sha3(TAG_COMMIT, secret_bytes, encode_entropy(millibits))


def commit(secret: SecretInput) -> Commitment:
    mb = secret.claimed_entropy.value_millibits
    return Commitment(secret.party_id, commit_digest(secret.bytes, mb), mb)


def verify_opening(c: Commitment, revealed: SecretInput) -> bool:
    """True iff ``revealed`` opens ``c``: same entropy claim, same digest."""
    mb = revealed.claimed_entropy.value_millibits
    if mb != c.claimed_entropy_millibits:
        return False
    return hmac.compare_digest(commit_digest(revealed.bytes, mb), c.digest)


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise CommitmentError(f"length mismatch: {len(a)} vs {len(b)} octets")
    return bytes(x ^ y for x, y in zip(a, b))


def entropy_mac(key: bytes, message: bytes, entropy_salt: bytes, lambda_bits: int = LAMBDA_BITS) -> bytes:
    """tag = H(key xor H(message || salt)), truncated to ``lambda_bits``.

    Both ``key`` and ``entropy_salt`` must be exactly one digest (32 octets).
    """
    if len(key) != DIGEST_BYTES:
        raise CommitmentError(f"MAC key must be {DIGEST_BYTES} octets, got {len(key)}")
    if len(entropy_salt) != len(key):
        raise CommitmentError("MAC salt must match the key length")
    if not 0 < lambda_bits <= LAMBDA_BITS or lambda_bits % 8:
        raise CommitmentError(f"tag width must be a multiple of 8 up to {LAMBDA_BITS}")
    inner = sha3(TAG_MAC_INNER, message, entropy_salt)
    return sha3(TAG_MAC_OUTER, xor_bytes(key, inner))[: lambda_bits // 8]


def verify_mac(key: bytes, message: bytes, entropy_salt: bytes, tag: bytes, lambda_bits: int = LAMBDA_BITS) -> bool:
    if len(tag) != lambda_bits // 8:
        return False
    return hmac.compare_digest(entropy_mac(key, message, entropy_salt, lambda_bits), tag)
