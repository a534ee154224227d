"""Deterministic in-memory network for protocol runs.

Channels are authenticated and confidential: every delivery carries its
true origin, and only the addressed party sees a message. Broadcasts are
atomic (one payload, every other party). Corrupted parties run the honest
state machine, but their outbound messages pass through an adversary hook
which may alter, drop or, for ``equivocate_commit``, split a broadcast into
per-recipient variants.

The orchestrator is synchronous: in round r every message sent in round
r-1 is delivered, then every live party receives ``Tick(r)``.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .entropy import EntropyEstimate
from .finite_field import MUL_TABLE, gf_pow
from .params import ProtocolParams
from .protocol import (
    BROADCAST_KINDS,
    TERMINAL,
    Kind,
    PartyState,
    Phase,
    ProtocolMessage,
    Tick,
    new_party,
    step,
)
from .sharing import SecretInput, ShareBundle

ROUNDS = 5
# round 2 starts with shares delivered and no echo sent
END_OF_SHARE_PHASE = 2


class SimnetError(ValueError):
    pass


class Behavior(enum.Enum):
    PASSIVE_COLLUDE = "passive_collude"
    TAMPER_SHARE = "tamper_share"
    TAMPER_REVEAL = "tamper_reveal"
    EQUIVOCATE_COMMIT = "equivocate_commit"
    DROP_MESSAGES = "drop_messages"


ATTACK_BEHAVIORS = (
    Behavior.TAMPER_SHARE,
    Behavior.TAMPER_REVEAL,
    Behavior.EQUIVOCATE_COMMIT,
    Behavior.DROP_MESSAGES,
)

Delivery = tuple[int, ProtocolMessage]
Hook = Callable[[ProtocolMessage, list[int], int], list[Delivery]]


def flip_bit(data: bytes, byte: int = 0, bit: int = 0) -> bytes:
    buf = bytearray(data)
    buf[byte % len(buf)] ^= 1 << (bit % 8)
    return bytes(buf)


@dataclass
class AdversarySpec:
    """Corrupted party set plus one behavior.

    Behavior parameters:
      tamper_share:      target (recipient id, default: every recipient), byte, bit
      tamper_reveal:     byte, bit
      equivocate_commit: targets (recipients that get the forged commitment;
                         default: the lowest-id recipient)
      drop_messages:     kinds (default: all), targets (only honored for
                         point-to-point Share messages; broadcasts are atomic)

    ``hook`` overrides the behavior with a custom callable
    ``hook(msg, recipients, round) -> [(recipient, msg), ...]``.
    """

    corrupted: frozenset[int] = frozenset()
    behavior: Behavior | None = None
    params: dict = field(default_factory=dict)
    hook: Hook | None = None

    def __post_init__(self):
        self.corrupted = frozenset(self.corrupted)
        if isinstance(self.behavior, str):
            self.behavior = Behavior(self.behavior)

    def to_dict(self) -> dict:
        return {
            "corrupted": sorted(self.corrupted),
            "behavior": self.behavior.value if self.behavior else None,
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySpec":
        unknown = set(d) - {"corrupted", "behavior", "params"}
        if unknown:
            raise SimnetError(f"unknown adversary fields: {sorted(unknown)}")
        try:
            behavior = Behavior(d["behavior"]) if d.get("behavior") else None
        except ValueError as exc:
            raise SimnetError(str(exc)) from exc
        return cls(frozenset(int(x) for x in d.get("corrupted", [])), behavior, dict(d.get("params", {})))

    def make_hook(self) -> Hook | None:
        if self.hook is not None:
            return self.hook
        b, prm = self.behavior, self.params
        if b is None or b is Behavior.PASSIVE_COLLUDE:
            return None
        if b is Behavior.TAMPER_SHARE:
            return _tamper_share_hook(prm.get("target"), prm.get("byte", 0), prm.get("bit", 0))
        if b is Behavior.TAMPER_REVEAL:
            return _tamper_reveal_hook(prm.get("byte", 0), prm.get("bit", 0))
        if b is Behavior.EQUIVOCATE_COMMIT:
            return _equivocate_hook(prm.get("targets"))
        if b is Behavior.DROP_MESSAGES:
            kinds = prm.get("kinds")
            kinds = {Kind(k) for k in kinds} if kinds else None
            return _drop_hook(kinds, prm.get("targets"))
        raise SimnetError(f"unsupported behavior {b}")


def _fanout(msg: ProtocolMessage, recipients: list[int]) -> list[Delivery]:
    return [(r, msg) for r in recipients]


def _tamper_share_hook(target: int | None, byte: int, bit: int) -> Hook:
    def hook(msg, recipients, rnd):
        if msg.kind is Kind.SHARE and (target is None or msg.recipient == target):
            b = msg.payload
            forged = replace(b, share_bytes=flip_bit(b.share_bytes, byte, bit))
            msg = replace(msg, payload=forged)
        return _fanout(msg, recipients)

    return hook


def _tamper_reveal_hook(byte: int, bit: int) -> Hook:
    def hook(msg, recipients, rnd):
        if msg.kind is Kind.REVEAL:
            msg = replace(msg, payload=replace(msg.payload, secret=flip_bit(msg.payload.secret, byte, bit)))
        return _fanout(msg, recipients)

    return hook


def _equivocate_hook(targets: Sequence[int] | None) -> Hook:
    def hook(msg, recipients, rnd):
        if msg.kind is not Kind.COMMIT:
            return _fanout(msg, recipients)
        chosen = set(targets) if targets else {min(recipients)}
        c = msg.payload
        forged = replace(msg, payload=replace(c, digest=flip_bit(c.digest)))
        return [(r, forged if r in chosen else msg) for r in recipients]

    return hook


def _drop_hook(kinds: set[Kind] | None, targets: Sequence[int] | None) -> Hook:
    def hook(msg, recipients, rnd):
        if kinds is not None and msg.kind not in kinds:
            return _fanout(msg, recipients)
        if msg.kind is Kind.SHARE and targets:
            return [] if msg.recipient in targets else _fanout(msg, recipients)
        return []

    return hook


@dataclass
class NetworkConfig:
    n: int
    delivery_order: str = "round_robin"
    seed: int = 0
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    parallel: bool = False

    def __post_init__(self):
        if self.delivery_order not in ("round_robin", "seeded_shuffle"):
            raise SimnetError(f"unknown delivery order {self.delivery_order!r}")
        bad = [c for c in self.adversary.corrupted if not 1 <= c <= self.n]
        if bad:
            raise SimnetError(f"corrupted ids {bad} outside [1, {self.n}]")


@dataclass(frozen=True)
class TranscriptEntry:
    round: int
    sender: int
    recipient: int
    kind: str
    payload_hex: str
    altered: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "round": self.round,
                "sender": self.sender,
                "recipient": self.recipient,
                "kind": self.kind,
                "payload_hex": self.payload_hex,
            },
            sort_keys=True,
        )


def key_digest(key: bytes) -> str:
    """Printable fingerprint of a key; the key itself is never logged."""
    return hashlib.sha3_256(b"entropy-ka key digest" + key).hexdigest()[:32]


@dataclass
class PartyOutcome:
    id: int
    phase: Phase
    key: bytes | None
    abort_reason: str | None
    corrupted: bool

    def to_dict(self, reveal_key: bool = False) -> dict:
        d = {
            "id": self.id,
            "phase": self.phase.value,
            "corrupted": self.corrupted,
            "abort_reason": self.abort_reason,
            "key_digest": key_digest(self.key) if self.key is not None else None,
        }
        if reveal_key:
            d["key_hex"] = self.key.hex() if self.key is not None else None
        return d


@dataclass
class SessionOutcome:
    parties: dict[int, PartyOutcome]
    transcript: list[TranscriptEntry]
    adversary_view: list[TranscriptEntry]
    states: dict[int, PartyState]
    halted_at: int | None = None

    @property
    def honest(self) -> list[PartyOutcome]:
        return [p for p in self.parties.values() if not p.corrupted]

    @property
    def all_honest_done(self) -> bool:
        return all(p.phase is Phase.DONE for p in self.honest)

    @property
    def all_honest_aborted(self) -> bool:
        return all(p.phase is Phase.ABORTED for p in self.honest)

    @property
    def honest_keys(self) -> set[bytes]:
        return {p.key for p in self.honest if p.phase is Phase.DONE}

    @property
    def agreed(self) -> bool:
        return self.all_honest_done and len(self.honest_keys) == 1

    @property
    def split(self) -> bool:
        """Honest parties disagree: mixed Done/Aborted, or different keys."""
        if self.halted_at is not None:
            return False
        phases = {p.phase for p in self.honest}
        return len(phases) > 1 or len(self.honest_keys) > 1

    @property
    def altered_to_honest(self) -> bool:
        honest_ids = {p.id for p in self.honest}
        return any(e.altered and e.recipient in honest_ids for e in self.transcript)

    @property
    def invalid_accepted(self) -> bool:
        """An honest party finished despite receiving an altered message."""
        return self.altered_to_honest and any(p.phase is Phase.DONE for p in self.honest)

    def summary(self, reveal_key: bool = False) -> dict:
        return {
            "parties": [self.parties[i].to_dict(reveal_key) for i in sorted(self.parties)],
            "agreed": self.agreed,
            "split": self.split,
            "invalid_accepted": self.invalid_accepted,
            "messages": len(self.transcript),
            "halted_at": self.halted_at,
        }

    def transcript_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.transcript)


def _party_seed(seed: int, party: int) -> str:
    return f"entropy-ka/{seed}/party/{party}"


def generate_secrets(params: ProtocolParams, seed: int, claimed_bits: float | None = None) -> list[SecretInput]:
    """Uniform m-bit secrets from a seeded generator, claiming gamma bits each."""
    rng = random.Random(f"entropy-ka/{seed}/secrets")
    claim = EntropyEstimate.certified(params.gamma if claimed_bits is None else claimed_bits)
    return [SecretInput(i, rng.randbytes(params.m // 8), claim) for i in range(1, params.n + 1)]


def run_session(
    config: NetworkConfig,
    params: ProtocolParams,
    secrets: Sequence[SecretInput],
    halt_before_tick: int | None = None,
) -> SessionOutcome:
    """Drive every party to Done or Aborted.

    ``halt_before_tick`` stops the run after round r's deliveries but before
    its tick; ``END_OF_SHARE_PHASE`` leaves every party holding its shares
    with no echo sent.
    """
    if len(secrets) != params.n or config.n != params.n:
        raise SimnetError(f"need exactly n = {params.n} secrets and a matching network")
    ids = list(range(1, params.n + 1))
    by_id = {s.party_id: s for s in secrets}
    if sorted(by_id) != ids:
        raise SimnetError("secrets must cover party ids 1..n exactly once")
    states = {i: new_party(i, params, by_id[i], _party_seed(config.seed, i)) for i in ids}
    corrupted = config.adversary.corrupted
    hook = config.adversary.make_hook()
    transcript: list[TranscriptEntry] = []
    view: list[TranscriptEntry] = []
    pending: list[tuple[int, int, ProtocolMessage, bool]] = []  # (origin, recipient, msg, altered)
    halted = None
    pool = ThreadPoolExecutor(max_workers=len(ids)) if config.parallel else None

    try:
        for rnd in range(ROUNDS + 1):
            inbox: dict[int, list[ProtocolMessage]] = {i: [] for i in ids}
            for origin, recipient, msg, altered in _order(pending, config, rnd):
                # authenticity: the transport, not the payload, names the sender
                if msg.sender != origin:
                    continue
                entry = TranscriptEntry(rnd, origin, recipient, msg.kind.value, msg.payload_bytes().hex(), altered)
                transcript.append(entry)
                if recipient in corrupted:
                    view.append(entry)
                inbox[recipient].append(msg)
            pending = []
            do_tick = rnd < ROUNDS and (halt_before_tick is None or rnd < halt_before_tick)

            def run(i: int) -> tuple[PartyState, list[ProtocolMessage]]:
                st, out = states[i], []
                for msg in inbox[i]:
                    st, emitted = step(st, msg)
                    out += emitted
                if do_tick:
                    st, emitted = step(st, Tick(rnd))
                    out += emitted
                return st, out

            results = list(pool.map(run, ids)) if pool else [run(i) for i in ids]
            for i, (st, out) in zip(ids, results):
                states[i] = st
                for msg in out:
                    pending += _route(i, msg, ids, hook if i in corrupted else None, rnd)
            if halt_before_tick is not None and rnd >= halt_before_tick:
                halted = rnd
                break
            if not pending and all(s.phase in TERMINAL for s in states.values()):
                break
    finally:
        if pool:
            pool.shutdown()

    parties = {
        i: PartyOutcome(i, st.phase, st.derived_key, st.abort_reason, i in corrupted) for i, st in states.items()
    }
    return SessionOutcome(parties, transcript, view, states, halted)


def _route(origin: int, msg: ProtocolMessage, ids: list[int], hook: Hook | None, rnd: int):
    if msg.kind in BROADCAST_KINDS:
        recipients = [j for j in ids if j != origin]
    else:
        recipients = [msg.recipient]
    deliveries = _fanout(msg, recipients) if hook is None else hook(msg, recipients, rnd)
    out = []
    for recipient, sent in deliveries:
        if recipient not in recipients:
            continue
        out.append((origin, recipient, sent, sent != msg))
    return out


def _order(pending, config: NetworkConfig, rnd: int):
    if config.delivery_order == "round_robin":
        return list(pending)
    shuffled = list(pending)
    random.Random(f"entropy-ka/{config.seed}/deliver/{rnd}").shuffle(shuffled)
    return shuffled


# ---------------------------------------------------------------------------
# collusion probe
# ---------------------------------------------------------------------------


@dataclass
class CollusionReport:
    n: int
    t: int
    colluders: list[int]
    width_bits: int
    sources: dict[int, dict]
    passed: bool
    reconstructs: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "colluders": self.colluders,
            "width_bits": self.width_bits,
            "sources": {str(k): v for k, v in self.sources.items()},
            "passed": self.passed,
            "reconstructs": self.reconstructs,
        }


MAX_PROBE_POLYS = 1 << 16


def consistent_secret_counts(points: Sequence[tuple[int, int]], t: int, width_bits: int = 8) -> np.ndarray:
    """For every candidate secret, count the degree-(t-1) polynomials through ``points``.

    Enumerates all 256^(t-1) choices of the non-constant coefficients; each
    choice and each point determines one implied secret, and the choice is
    consistent when all points imply the same one.
    """
    free = t - 1
    total = 256**free
    if total > MAX_PROBE_POLYS:
        raise SimnetError(f"probe instance too large: 256^{free} polynomials")
    if not 1 <= width_bits <= 8:
        raise SimnetError("secret width must be 1..8 bits")
    alphabet = 1 << width_bits
    grid = np.indices((256,) * free).reshape(free, -1).astype(np.uint8) if free else np.zeros((0, 1), np.uint8)
    if not points:
        counts = np.full(256, max(total, 1), dtype=np.int64)
        return counts[:alphabet]
    implied = []
    for x, y in points:
        acc = np.full(grid.shape[1] if free else 1, y, dtype=np.uint8)
        for k in range(free):
            acc ^= MUL_TABLE[grid[k], gf_pow(x, k + 1)]
        implied.append(acc)
    agree = np.ones_like(implied[0], dtype=bool)
    for other in implied[1:]:
        agree &= other == implied[0]
    counts = np.bincount(implied[0][agree], minlength=256)
    return counts[:alphabet]


def collusion_probe(config: NetworkConfig, t: int | None = None, width_bits: int = 8) -> CollusionReport:
    """Enumerate the secrets consistent with the colluders' shares.

    The session runs with one-byte secrets and halts at the end of share
    distribution. For each honest source the colluders' shares are the
    points; with fewer than t colluders every candidate must be consistent
    with the same multiplicity (exact, zero tolerance). Commitment digests
    are excluded from the view: on one-byte secrets they are trivially
    invertible, and hiding relies on the source entropy, not on the sharing.
    """
    n = config.n
    params = ProtocolParams(n=n, t=t, m=8, kappa=8, gamma=width_bits, delta=0,
                            epsilon_log2=0, q_queries_log2=None, q_memory_log2=None)
    colluders = sorted(config.adversary.corrupted)
    rng = random.Random(f"entropy-ka/{config.seed}/probe")
    claim = EntropyEstimate.certified(width_bits)
    secrets = [SecretInput(i, bytes([rng.randrange(1 << width_bits)]), claim) for i in range(1, n + 1)]
    outcome = run_session(replace(config, adversary=AdversarySpec(frozenset(colluders), Behavior.PASSIVE_COLLUDE)),
                          params, secrets, halt_before_tick=END_OF_SHARE_PHASE)
    held: dict[int, list[tuple[int, int]]] = {}
    for e in outcome.adversary_view:
        if e.kind == Kind.SHARE.value:
            share = ShareBundle(e.sender, e.recipient, bytes.fromhex(e.payload_hex)[4:])
            held.setdefault(e.sender, []).append((share.recipient_id, share.share_bytes[0]))
    sources = {}
    passed = True
    reconstructs = True
    for i in range(1, n + 1):
        if i in colluders:
            continue
        pts = sorted(held.get(i, []))
        counts = consistent_secret_counts(pts, params.t, width_bits)
        support = int((counts > 0).sum())
        uniform = bool(np.all(counts == counts[0]) and counts[0] > 0)
        true_secret = secrets[i - 1].bytes[0]
        sources[i] = {
            "points": len(pts),
            "consistent_secrets": support,
            "multiplicity": int(counts.max()),
            "uniform": uniform,
            "contains_true_secret": bool(counts[true_secret] > 0),
        }
        passed &= uniform and support == (1 << width_bits)
        reconstructs &= support == 1 and counts[true_secret] > 0
    if len(colluders) >= params.t:
        passed = False
    return CollusionReport(n, params.t, colluders, width_bits, sources, passed, reconstructs and bool(sources))


# ---------------------------------------------------------------------------
# adversarial matrix
# ---------------------------------------------------------------------------


@dataclass
class MatrixRun:
    behavior: str
    corrupted: list[int]
    params: dict
    in_model: bool
    outcome: str  # "done", "abort" or "split"
    invalid_accepted: bool
    split: bool
    reasons: list[str]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MatrixSummary:
    runs: list[MatrixRun]

    @property
    def in_model(self) -> list[MatrixRun]:
        return [r for r in self.runs if r.in_model]

    @property
    def wins(self) -> list[MatrixRun]:
        return [r for r in self.in_model if r.invalid_accepted or r.split]

    @property
    def out_of_model_wins(self) -> list[MatrixRun]:
        return [r for r in self.runs if not r.in_model and (r.invalid_accepted or r.split)]

    @property
    def attacks_aborted(self) -> bool:
        return all(r.outcome == "abort" for r in self.in_model if r.behavior != Behavior.PASSIVE_COLLUDE.value)

    def to_dict(self) -> dict:
        return {
            "runs": len(self.runs),
            "in_model_runs": len(self.in_model),
            "in_model_wins": len(self.wins),
            "out_of_model_runs": len(self.runs) - len(self.in_model),
            "out_of_model_wins": len(self.out_of_model_wins),
            "attacks_aborted": self.attacks_aborted,
            "distinguishing_condition": "not empirically testable; covered by the entropy floor and bound arithmetic",
            "details": [r.to_dict() for r in self.runs],
        }


def behavior_variants(behavior: Behavior, n: int, corrupted: Iterable[int]) -> list[dict]:
    """Parameter settings swept for one behavior."""
    honest = [j for j in range(1, n + 1) if j not in set(corrupted)]
    if behavior is Behavior.TAMPER_SHARE:
        return [{"target": j} for j in honest]
    if behavior is Behavior.EQUIVOCATE_COMMIT:
        return [{"targets": [j]} for j in honest]
    if behavior is Behavior.DROP_MESSAGES:
        return [{"kinds": [k.value]} for k in (Kind.COMMIT, Kind.SHARE, Kind.SHARE_ECHO, Kind.REVEAL)] + [
            {"kinds": [Kind.SHARE.value], "targets": [j]} for j in honest
        ]
    return [{}]


def classify(outcome: SessionOutcome) -> str:
    if outcome.split:
        return "split"
    return "done" if outcome.all_honest_done else "abort"


def adversarial_matrix(
    params: ProtocolParams,
    behaviors: Sequence[Behavior] = ATTACK_BEHAVIORS,
    max_corrupted: int | None = None,
    seed: int = 7,
    include_out_of_model: bool = False,
) -> MatrixSummary:
    """Run every behavior against every corrupted set of size <= t-1.

    With ``include_out_of_model`` sets of size t are swept too and reported
    separately; no claim is made about them.
    """
    n = params.n
    limit = params.t - 1 if max_corrupted is None else max_corrupted
    sizes = list(range(1, limit + 1)) + ([params.t] if include_out_of_model else [])
    secrets = generate_secrets(params, seed)
    runs = []
    for size in sizes:
        for corrupted in itertools.combinations(range(1, n + 1), size):
            for behavior in behaviors:
                for prm in behavior_variants(behavior, n, corrupted):
                    adv = AdversarySpec(frozenset(corrupted), behavior, prm)
                    out = run_session(NetworkConfig(n, seed=seed, adversary=adv), params, secrets)
                    runs.append(
                        MatrixRun(
                            behavior=behavior.value,
                            corrupted=list(corrupted),
                            params=prm,
                            in_model=size < params.t,
                            outcome=classify(out),
                            invalid_accepted=out.invalid_accepted,
                            split=out.split,
                            reasons=sorted({p.abort_reason for p in out.honest if p.abort_reason}),
                        )
                    )
    return MatrixSummary(runs)


def load_scenario(text: str) -> tuple[dict, AdversarySpec]:
    """Parse a scenario file {n, t, params, seed, adversary} or a bare adversary spec."""
    data = json.loads(text)
    if not isinstance(data, dict):
        raise SimnetError("scenario must be a JSON object")
    if "behavior" in data or "corrupted" in data:
        return {}, AdversarySpec.from_dict(data)
    if set(data) <= {"n", "t", "params", "seed", "adversary"}:
        adv = AdversarySpec.from_dict(data.get("adversary") or {})
        rest = {k: v for k, v in data.items() if k != "adversary"}
        return rest, adv
    raise SimnetError(f"unrecognized scenario fields: {sorted(data)}")

