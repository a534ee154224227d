"""Per-party state machine for the four-phase key agreement.

The machine is driven by two kinds of input: messages delivered by the
transport and ``Tick`` events marking the end of a synchronous round.
Messages are only stored on receipt; all phase progress happens on ticks:

    tick 0  Init        -> Committed    broadcast Commit
    tick 1  Committed   -> SharesSent   send one Share to every other party
    tick 2  SharesSent  (echo)          broadcast ShareEcho: held shares and
                                        the commitments this party received
    tick 3  SharesSent  -> Verified     verify every source, broadcast Reveal
    tick 4  Verified    -> Revealed     check reveals, derive the key
            Revealed    -> Done

A tick that finds an expected message missing aborts the party. Any
verification failure, or an Abort from a peer, is terminal.

``step`` never mutates its input state.
"""

from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

from .commitment import (
    TAG_HYBRID,
    TAG_KEY,
    Commitment,
    CommitmentError,
    commit,
    shake,
    verify_opening,
    xor_bytes,
)
from .entropy import EntropyEstimate
from .finite_field import MUL_TABLE
from .params import ProtocolParams
from .sharing import SecretInput, ShareBundle, SharingError, make_shares, reconstruct_checked


class ProtocolError(ValueError):
    pass


class Phase(enum.Enum):
    INIT = "Init"
    COMMITTED = "Committed"
    SHARES_SENT = "SharesSent"
    VERIFIED = "Verified"
    REVEALED = "Revealed"
    DONE = "Done"
    ABORTED = "Aborted"


TERMINAL = (Phase.DONE, Phase.ABORTED)


class Kind(enum.Enum):
    COMMIT = "Commit"
    SHARE = "Share"
    SHARE_ECHO = "ShareEcho"
    REVEAL = "Reveal"
    ABORT = "Abort"


BROADCAST_KINDS = (Kind.COMMIT, Kind.SHARE_ECHO, Kind.REVEAL, Kind.ABORT)


@dataclass(frozen=True)
class EchoPayload:
    shares: tuple[ShareBundle, ...]
    commitments: tuple[Commitment, ...]


@dataclass(frozen=True)
class RevealPayload:
    secret: bytes
    claimed_entropy_millibits: int


Payload = Union[Commitment, ShareBundle, EchoPayload, RevealPayload, str]


@dataclass(frozen=True)
class ProtocolMessage:
    """A protocol message. ``recipient`` is None for broadcasts."""

    kind: Kind
    sender: int
    payload: Payload
    recipient: int | None = None

    def payload_bytes(self) -> bytes:
        return encode_payload(self.kind, self.payload)


@dataclass(frozen=True)
class Tick:
    round: int


def _encode_commitment(c: Commitment) -> bytes:
    return struct.pack(">B", c.party_id) + c.digest + struct.pack(">I", c.claimed_entropy_millibits)


def _encode_share(b: ShareBundle) -> bytes:
    return struct.pack(">BBH", b.source_id, b.recipient_id, len(b.share_bytes)) + b.share_bytes


def encode_payload(kind: Kind, payload: Payload) -> bytes:
    """Canonical octet encoding used in transcripts.

    Integers are big-endian; party ids are one octet, lengths two octets and
    entropy claims four octets (millibits).
    """
    if kind is Kind.COMMIT:
        return _encode_commitment(payload)
    if kind is Kind.SHARE:
        return _encode_share(payload)
    if kind is Kind.SHARE_ECHO:
        out = [struct.pack(">B", len(payload.shares))]
        out += [_encode_share(b) for b in payload.shares]
        out.append(struct.pack(">B", len(payload.commitments)))
        out += [_encode_commitment(c) for c in payload.commitments]
        return b"".join(out)
    if kind is Kind.REVEAL:
        return struct.pack(">IH", payload.claimed_entropy_millibits, len(payload.secret)) + payload.secret
    if kind is Kind.ABORT:
        return payload.encode("utf-8")
    raise ProtocolError(f"unknown message kind {kind!r}")


@dataclass(frozen=True)
class Verdict:
    source: int
    ok: bool
    check: str | None = None
    detail: str = ""


@dataclass(frozen=True)
class PartyState:
    id: int
    params: ProtocolParams
    own_secret: SecretInput
    rng_seed: str
    phase: Phase = Phase.INIT
    echo_sent: bool = False
    received_commitments: Mapping[int, Commitment] = field(default_factory=dict)
    received_shares: Mapping[tuple[int, int], ShareBundle] = field(default_factory=dict)
    echoed_commitments: Mapping[tuple[int, int], Commitment] = field(default_factory=dict)
    echo_from: frozenset[int] = frozenset()
    reconstructed: Mapping[int, bytes] = field(default_factory=dict)
    reveals: Mapping[int, RevealPayload] = field(default_factory=dict)
    derived_key: bytes | None = None
    abort_reason: str | None = None

    @property
    def others(self) -> list[int]:
        return [j for j in range(1, self.params.n + 1) if j != self.id]


def new_party(party_id: int, params: ProtocolParams, secret: SecretInput, rng_seed: str) -> PartyState:
    if secret.party_id != party_id:
        raise ProtocolError(f"secret belongs to party {secret.party_id}, not {party_id}")
    if secret.bits != params.m:
        raise ProtocolError(f"secret has {secret.bits} bits, params require m = {params.m}")
    if params.t > params.n - 1:
        # the dealer holds no share, so only n-1 shares of each secret exist
        raise ProtocolError(f"threshold t = {params.t} exceeds the n-1 = {params.n - 1} share holders")
    return PartyState(party_id, params, secret, rng_seed)


def _abort(state: PartyState, reason: str, broadcast: bool = True) -> tuple[PartyState, list[ProtocolMessage]]:
    new = replace(state, phase=Phase.ABORTED, abort_reason=reason, derived_key=None)
    out = [ProtocolMessage(Kind.ABORT, state.id, reason)] if broadcast else []
    return new, out


def step(state: PartyState, event: ProtocolMessage | Tick) -> tuple[PartyState, list[ProtocolMessage]]:
    """Advance one party by one input event.

    Returns the new state and the outbound messages. Duplicate, misrouted or
    out-of-phase messages return the input state unchanged with no output.
    """
    if state.phase in TERMINAL:
        return state, []
    if isinstance(event, Tick):
        return _on_tick(state, event)
    return _on_message(state, event)


def _on_message(state: PartyState, msg: ProtocolMessage) -> tuple[PartyState, list[ProtocolMessage]]:
    unchanged = (state, [])
    if msg.sender == state.id or msg.sender not in state.others:
        return unchanged
    if msg.recipient is not None and msg.recipient != state.id:
        return unchanged

    if msg.kind is Kind.ABORT:
        return _abort(state, f"peer {msg.sender} aborted: {msg.payload}", broadcast=False)

    if msg.kind is Kind.COMMIT:
        c = msg.payload
        if state.phase is not Phase.COMMITTED or msg.recipient is not None:
            return unchanged
        if not isinstance(c, Commitment) or c.party_id != msg.sender or msg.sender in state.received_commitments:
            return unchanged
        return replace(state, received_commitments={**state.received_commitments, msg.sender: c}), []

    if msg.kind is Kind.SHARE:
        b = msg.payload
        if state.phase is not Phase.SHARES_SENT or state.echo_sent or msg.recipient != state.id:
            return unchanged
        if not isinstance(b, ShareBundle) or b.source_id != msg.sender or b.recipient_id != state.id:
            return unchanged
        if len(b.share_bytes) * 8 != state.params.m or (b.source_id, state.id) in state.received_shares:
            return unchanged
        return replace(state, received_shares={**state.received_shares, (b.source_id, state.id): b}), []

    if msg.kind is Kind.SHARE_ECHO:
        e = msg.payload
        if state.phase is not Phase.SHARES_SENT or not state.echo_sent or msg.recipient is not None:
            return unchanged
        if not isinstance(e, EchoPayload) or msg.sender in state.echo_from:
            return unchanged
        shares = dict(state.received_shares)
        for b in e.shares:
            # a holder can only vouch for shares addressed to itself
            if b.recipient_id == msg.sender and len(b.share_bytes) * 8 == state.params.m:
                shares.setdefault((b.source_id, msg.sender), b)
        echoed = dict(state.echoed_commitments)
        for c in e.commitments:
            if c.party_id != msg.sender:
                echoed.setdefault((msg.sender, c.party_id), c)
        return replace(
            state,
            received_shares=shares,
            echoed_commitments=echoed,
            echo_from=state.echo_from | {msg.sender},
        ), []

    if msg.kind is Kind.REVEAL:
        r = msg.payload
        if state.phase is not Phase.VERIFIED or msg.recipient is not None:
            return unchanged
        if not isinstance(r, RevealPayload) or msg.sender in state.reveals:
            return unchanged
        return replace(state, reveals={**state.reveals, msg.sender: r}), []

    return unchanged


def _on_tick(state: PartyState, tick: Tick) -> tuple[PartyState, list[ProtocolMessage]]:
    p = state.params
    if state.phase is Phase.INIT:
        c = commit(state.own_secret)
        return replace(state, phase=Phase.COMMITTED), [ProtocolMessage(Kind.COMMIT, state.id, c)]

    if state.phase is Phase.COMMITTED:
        missing = [j for j in state.others if j not in state.received_commitments]
        if missing:
            return _abort(state, f"missing commitments from {missing}")
        rng = random.Random(state.rng_seed)
        bundles = make_shares(state.own_secret, p.n, p.t, rng)
        out = [ProtocolMessage(Kind.SHARE, state.id, b, recipient=b.recipient_id) for b in bundles]
        return replace(state, phase=Phase.SHARES_SENT), out

    if state.phase is Phase.SHARES_SENT and not state.echo_sent:
        missing = [j for j in state.others if (j, state.id) not in state.received_shares]
        if missing:
            return _abort(state, f"missing shares from {missing}")
        held = tuple(state.received_shares[(j, state.id)] for j in state.others)
        seen = tuple(state.received_commitments[j] for j in state.others)
        echo = ProtocolMessage(Kind.SHARE_ECHO, state.id, EchoPayload(held, seen))
        return replace(state, echo_sent=True), [echo]

    if state.phase is Phase.SHARES_SENT:
        missing = [j for j in state.others if j not in state.echo_from]
        if missing:
            return _abort(state, f"missing shares: no echo from {missing}")
        reconstructed = {}
        for source in state.others:
            verdict, secret = _verify(state, source)
            if not verdict.ok:
                return _abort(state, f"source {source} failed {verdict.check}: {verdict.detail}")
            reconstructed[source] = secret
        mine = state.own_secret
        reveal = ProtocolMessage(
            Kind.REVEAL, state.id, RevealPayload(mine.bytes, mine.claimed_entropy.value_millibits)
        )
        return replace(state, phase=Phase.VERIFIED, reconstructed=reconstructed), [reveal]

    if state.phase is Phase.VERIFIED:
        missing = [j for j in state.others if j not in state.reveals]
        if missing:
            return _abort(state, f"missing reveals from {missing}")
        for j in state.others:
            r = state.reveals[j]
            if r.secret != state.reconstructed[j]:
                return _abort(state, f"reveal of {j} differs from its verified reconstruction")
            opened = SecretInput(j, r.secret, EntropyEstimate(r.claimed_entropy_millibits, 0, 0))
            if not verify_opening(state.received_commitments[j], opened):
                return _abort(state, f"reveal of {j} does not open its commitment")
        revealed = replace(state, phase=Phase.REVEALED)
        secrets = [state.own_secret.bytes] + [state.reveals[j].secret for j in state.others]
        key = derive_key(secrets, p.kappa)
        return replace(revealed, phase=Phase.DONE, derived_key=key), []

    return state, []


def _verify(state: PartyState, source: int) -> tuple[Verdict, bytes | None]:
    p = state.params
    c = state.received_commitments.get(source)
    if c is None:
        return Verdict(source, False, "missing_commitment"), None
    for (holder, src), echoed in sorted(state.echoed_commitments.items()):
        if src == source and echoed != c:
            return Verdict(source, False, "equivocation", f"holder {holder} saw a different commitment"), None
    bundles = [b for (src, _), b in state.received_shares.items() if src == source]
    if len(bundles) < p.t:
        return Verdict(source, False, "missing_shares", f"{len(bundles)} of {p.t} shares"), None
    try:
        secret, bad = reconstruct_checked(bundles, p.t)
    except SharingError as exc:
        return Verdict(source, False, "share_consistency", str(exc)), None
    if bad:
        return Verdict(source, False, "share_consistency", f"shares of holders {bad} are off the polynomial"), None
    opened = SecretInput(source, secret, EntropyEstimate(c.claimed_entropy_millibits, 0, 0))
    if not verify_opening(c, opened):
        return Verdict(source, False, "commitment", "reconstruction does not open the commitment"), None
    floor_mb = (p.gamma - p.delta) * 1000
    if c.claimed_entropy_millibits < floor_mb:
        return Verdict(
            source, False, "entropy", f"claimed {c.claimed_entropy_millibits} mb < gamma - delta = {floor_mb} mb"
        ), None
    return Verdict(source, True), secret


def verify_source(state: PartyState, source: int) -> Verdict:
    """Reconstruct a source's secret from the shares in hand and check it.

    Checks, in order: the echoed commitments agree with the received one,
    at least t shares exist, all shares lie on one degree-(t-1) polynomial,
    the reconstruction opens the commitment, and the committed entropy
    claim is at least gamma - delta.
    """
    return _verify(state, source)[0]


def derive_key(secrets: Sequence[bytes], kappa: int) -> bytes:
    """K = H(s_1 xor ... xor s_n), kappa bits of SHAKE-256 output."""
    if not secrets:
        raise ProtocolError("need at least one secret")
    acc = bytes(len(secrets[0]))
    try:
        for s in secrets:
            acc = xor_bytes(acc, s)
    except CommitmentError as exc:
        raise ProtocolError(str(exc)) from exc
    return shake(TAG_KEY, kappa, acc)


def linear_combination(secrets: Sequence[bytes], coeffs: Sequence[int]) -> bytes:
    """Byte-wise sum of c_i * s_i over GF(2^8)."""
    if len(secrets) != len(coeffs) or not secrets:
        raise ProtocolError("need one coefficient per secret")
    width = len(secrets[0])
    if any(len(s) != width for s in secrets):
        raise ProtocolError("secrets differ in length")
    if not any(coeffs):
        raise ProtocolError("all-zero coefficients discard every source")
    acc = bytearray(width)
    for c, s in zip(coeffs, secrets):
        row = MUL_TABLE[c]
        for i, b in enumerate(s):
            acc[i] ^= int(row[b])
    return bytes(acc)


def derive_linear_key(secrets: Sequence[bytes], coeffs: Sequence[int], kappa: int) -> bytes:
    """H(sum c_i * s_i); all-one coefficients give ``derive_key``."""
    return shake(TAG_KEY, kappa, linear_combination(secrets, coeffs))


def hybrid_combine(k_qkd: bytes, k_entropy: bytes) -> bytes:
    """H(k_qkd xor k_entropy) at the common key width."""
    try:
        mixed = xor_bytes(k_qkd, k_entropy)
    except CommitmentError as exc:
        raise ProtocolError(str(exc)) from exc
    return shake(TAG_HYBRID, 8 * len(mixed), mixed)

