"""Byte-wise Shamir sharing of m-bit secrets over GF(2^8).

Every secret byte gets its own random polynomial of degree t-1; the share
for party j is the vector of those polynomials evaluated at x = j. A dealer
keeps no share of its own secret.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .entropy import EntropyEstimate
from .finite_field import MUL_TABLE, FieldError, gf_mul, lagrange_basis, lagrange_coefficients_at_zero, poly_eval

MAX_PARTIES = 255


class RandomBytes(Protocol):
    def randbytes(self, n: int) -> bytes: ...


class SharingError(ValueError):
    pass


class InsufficientShares(SharingError):
    pass


@dataclass(frozen=True)
class SecretInput:
    party_id: int
    bytes: bytes
    claimed_entropy: EntropyEstimate

    @property
    def bits(self) -> int:
        return 8 * len(self.bytes)


@dataclass(frozen=True)
class ShareBundle:
    source_id: int
    recipient_id: int
    share_bytes: bytes

    def __post_init__(self):
        if self.source_id == self.recipient_id:
            raise SharingError("a dealer holds no share of its own secret")
        for pid in (self.source_id, self.recipient_id):
            if not 1 <= pid <= MAX_PARTIES:
                raise SharingError(f"party id {pid} outside [1, {MAX_PARTIES}]")

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "recipient_id": self.recipient_id,
            "share_hex": self.share_bytes.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShareBundle":
        return cls(int(d["source_id"]), int(d["recipient_id"]), bytes.fromhex(d["share_hex"]))


def check_threshold(n: int, t: int) -> None:
    if n > MAX_PARTIES:
        raise SharingError(f"n = {n} exceeds the GF(2^8) limit of {MAX_PARTIES} parties")
    if not 1 <= t <= n:
        raise SharingError(f"threshold must satisfy 1 <= t <= n, got t={t}, n={n}")


def make_polynomials(secret: bytes, t: int, rng: RandomBytes) -> list[list[int]]:
    """One coefficient list [a_0 = byte, a_1..a_{t-1}] per secret byte."""
    polys = []
    for b in secret:
        polys.append([b, *rng.randbytes(t - 1)])
    return polys


def make_shares(secret: SecretInput, n: int, t: int, rng: RandomBytes) -> list[ShareBundle]:
    """Deal shares of ``secret`` to every party except its owner.

    Args:
        secret: the dealer's secret; ``secret.party_id`` is the dealer.
        n: number of parties, at most 255.
        t: reconstruction threshold.
        rng: seeded source of coefficient bytes (``random.Random`` or
            ``secrets.SystemRandom``).

    Returns:
        n - 1 bundles ordered by recipient id.
    """
    check_threshold(n, t)
    if not 1 <= secret.party_id <= n:
        raise SharingError(f"dealer id {secret.party_id} outside [1, {n}]")
    polys = make_polynomials(secret.bytes, t, rng)
    bundles = []
    for j in range(1, n + 1):
        if j == secret.party_id:
            continue
        share = bytes(poly_eval(f, j) for f in polys)
        bundles.append(ShareBundle(secret.party_id, j, share))
    return bundles


def reconstruct_secret(bundles: Sequence[ShareBundle], t: int) -> bytes:
    """Lagrange-interpolate every byte position at zero.

    All supplied bundles are used, so passing more than t shares
    interpolates a polynomial of higher degree; use ``reconstruct_checked``
    to detect inconsistent extra shares.

    Raises:
        InsufficientShares: fewer than t bundles.
        SharingError: bundles from different sources, length mismatch or
            repeated recipients.
    """
    if len(bundles) < t:
        raise InsufficientShares(f"need {t} shares, got {len(bundles)}")
    sources = {b.source_id for b in bundles}
    if len(sources) != 1:
        raise SharingError(f"bundles from several sources: {sorted(sources)}")
    lengths = {len(b.share_bytes) for b in bundles}
    if len(lengths) != 1:
        raise SharingError("share lengths differ")
    xs = [b.recipient_id for b in bundles]
    try:
        lk = lagrange_coefficients_at_zero(xs)
    except FieldError as exc:
        raise SharingError(str(exc)) from exc
    out = bytearray(lengths.pop())
    for coeff, bundle in zip(lk, bundles):
        row = MUL_TABLE[coeff]
        for pos, y in enumerate(bundle.share_bytes):
            out[pos] ^= int(row[y])
    return bytes(out)


def reconstruct_checked(bundles: Sequence[ShareBundle], t: int) -> tuple[bytes, list[int]]:
    """Reconstruct from the t lowest-indexed holders and test the rest.

    Returns:
        (secret, ids of holders whose shares do not lie on the polynomial
        defined by the first t shares).
    """
    ordered = sorted(bundles, key=lambda b: b.recipient_id)
    base = ordered[:t]
    secret = reconstruct_secret(base, t)
    bad = []
    if len(ordered) > t:
        xs = [b.recipient_id for b in base]
        for extra in ordered[t:]:
            # value at x_e of the degree-(t-1) interpolant through the base shares
            coeffs = lagrange_basis(xs, extra.recipient_id)
            expect = bytearray(len(extra.share_bytes))
            for c, b in zip(coeffs, base):
                row = MUL_TABLE[c]
                for pos, y in enumerate(b.share_bytes):
                    expect[pos] ^= int(row[y])
            if bytes(expect) != extra.share_bytes:
                bad.append(extra.recipient_id)
    return secret, bad


@dataclass
class CensusReport:
    n: int
    t: int
    mode: str
    polynomials: int
    observed_subsets: int
    uniform: bool
    max_tv_distance: float
    tv_bound: float
    point_mass_at_t: bool | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def secrecy_census(n: int, t: int, samples: int = 10**6, seed: int = 0, test_secrets: Sequence[int] = (0x00, 0xA5)) -> CensusReport:
    """Check that t-1 shares carry no information about a secret byte.

    For t = 2 every one of the 256^2 polynomials is enumerated and the
    conditional distribution of the secret given each single observed share
    is checked for exact uniformity; observing two shares must pin the secret.

    For t = 3 the census is sampled: for each fixed test secret, ``samples``
    random polynomials are drawn. The empirical distribution of every single
    share, and of the XOR of every share pair, must be within
    3*sqrt(256/samples) total variation of uniform whatever the secret is.
    """
    check_threshold(n, t)
    if n > 6:
        raise SharingError("census instance too large (n <= 6)")
    if t == 2:
        return _census_exhaustive(n)
    if t == 3:
        return _census_sampled(n, samples, seed, test_secrets)
    raise SharingError("census supports t = 2 (exhaustive) or t = 3 (sampled)")


def _census_exhaustive(n: int) -> CensusReport:
    secrets = np.repeat(np.arange(256, dtype=np.uint8), 256)
    a1 = np.tile(np.arange(256, dtype=np.uint8), 256)
    shares = {j: secrets ^ MUL_TABLE[a1, j] for j in range(1, n + 1)}
    uniform = True
    for j in range(1, n + 1):
        # joint histogram over (observed share, secret)
        joint = np.zeros((256, 256), dtype=np.int64)
        np.add.at(joint, (shares[j], secrets), 1)
        # every observation must leave each secret with equal multiplicity
        uniform &= bool(np.all(joint == joint[:, :1]))
    pinned = True
    for j, k in itertools.combinations(range(1, n + 1), 2):
        key = shares[j].astype(np.int64) * 256 + shares[k]
        joint = np.zeros((65536, 256), dtype=np.int64)
        np.add.at(joint, (key, secrets), 1)
        pinned &= bool(np.all((joint > 0).sum(axis=1) == 1))
    return CensusReport(
        n=n,
        t=2,
        mode="exhaustive",
        polynomials=256 * 256,
        observed_subsets=n,
        uniform=uniform,
        max_tv_distance=0.0 if uniform else 1.0,
        tv_bound=0.0,
        point_mass_at_t=pinned,
    )


def _census_sampled(n: int, samples: int, seed: int, test_secrets: Sequence[int]) -> CensusReport:
    rng = np.random.default_rng(seed)
    bound = 3 * np.sqrt(256 / samples)
    worst = 0.0
    subsets = list(itertools.combinations(range(1, n + 1), 2))

    def tv(values: np.ndarray) -> float:
        hist = np.bincount(values, minlength=256) / samples
        return 0.5 * float(np.abs(hist - 1 / 256).sum())

    for s in test_secrets:
        a1 = rng.integers(0, 256, samples, dtype=np.uint8)
        a2 = rng.integers(0, 256, samples, dtype=np.uint8)
        shares = {
            j: np.uint8(s) ^ MUL_TABLE[a1, j] ^ MUL_TABLE[a2, gf_mul(j, j)]
            for j in range(1, n + 1)
        }
        for j in shares:
            worst = max(worst, tv(shares[j]))
        for j, k in subsets:
            worst = max(worst, tv(shares[j] ^ shares[k]))
    return CensusReport(
        n=n,
        t=3,
        mode="sampled",
        polynomials=samples * len(test_secrets),
        observed_subsets=len(subsets),
        uniform=bool(worst <= bound),
        max_tv_distance=worst,
        tv_bound=float(bound),
    )
