"""Command-line interface.

Exit codes: 0 ok, 1 usage error or infeasible parameters, 2 protocol abort
(or an attack-suite win), 3 golden-vector mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import commitment, protocol
from .entropy import (
    Distribution,
    EntropyError,
    check_preservation_bound,
    collision_entropy,
    estimate_min_entropy,
    min_entropy,
    renyi_entropy,
    shannon_entropy,
)
from .params import (
    InfeasibleParameters,
    ParamsError,
    ProtocolParams,
    advantage_bound,
    hinf_floor,
    mitigation_check,
    reproduce_table,
    security_inequality,
    solve_gamma,
)
from .protocol import ProtocolError
from .simnet import (
    ATTACK_BEHAVIORS,
    AdversarySpec,
    NetworkConfig,
    SimnetError,
    adversarial_matrix,
    collusion_probe,
    generate_secrets,
    load_scenario,
    run_session,
)

EXIT_OK, EXIT_USAGE, EXIT_ABORT, EXIT_VECTORS = 0, 1, 2, 3
SEED_ENV = "ENTROPY_KA_SEED"
SCHEMA_VERSION = "1"
RENYI_ORDERS = (0.5, 2.0, 3.0, 4.0, float("inf"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))


def _resolve_seed(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            return 0
        try:
            seed = int(env, 0)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer")
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return seed


# -- simulate ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario, adversary = {}, AdversarySpec()
    if args.adversary:
        try:
            scenario, adversary = load_scenario(Path(args.adversary).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read adversary file: {exc}")
    extra = scenario.get("params", {})

    def pick(name, default):
        flag = getattr(args, name)
        if flag is not None:
            return flag
        if name in scenario:
            return scenario[name]
        return extra.get(name, default)

    try:
        params = ProtocolParams(
            n=pick("n", 5),
            t=pick("t", None),
            m=pick("m", 384),
            kappa=pick("kappa", 128),
            gamma=pick("gamma", 351),
            delta=pick("delta", 10),
            epsilon_log2=pick("epsilon_log2", 40),
        )
    except (ParamsError, TypeError) as exc:
        raise UsageError(str(exc))
    holds, text = security_inequality(params)
    if not holds:
        print(f"infeasible parameters: {text}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is None and "seed" in scenario:
        args.seed = int(scenario["seed"])
    seed = _resolve_seed(args)
    try:
        config = NetworkConfig(params.n, args.delivery_order, seed, adversary, args.parallel)
        outcome = run_session(config, params, generate_secrets(params, seed))
    except (SimnetError, ProtocolError) as exc:
        raise UsageError(str(exc))
    if args.out:
        Path(args.out).write_text(outcome.transcript_jsonl())
    report = {"schema_version": SCHEMA_VERSION, "seed": seed, "params": params.to_dict()}
    report.update(outcome.summary(reveal_key=args.reveal_key))
    _emit(report)
    return EXIT_OK if outcome.all_honest_done else EXIT_ABORT


# -- params / table ---------------------------------------------------------


def cmd_params(args) -> int:
    try:
        gamma = solve_gamma(args.n, args.m, args.kappa, args.delta, args.epsilon_log2)
    except InfeasibleParameters as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        p = ProtocolParams(n=args.n, m=args.m, kappa=args.kappa, gamma=gamma, delta=args.delta,
                           epsilon_log2=args.epsilon_log2)
    except ParamsError as exc:
        raise UsageError(str(exc))
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "params": p.to_dict(),
            "gamma": gamma,
            "hinf_S_bits": hinf_floor(p),
            "security_inequality": security_inequality(p)[1],
            "advantage_bound": advantage_bound(p).to_dict(),
            "mitigations": [v.to_dict() for v in mitigation_check(p)],
        }
    )
    return EXIT_OK


def cmd_table(args) -> int:
    try:
        report = reproduce_table(args.kappa, args.m, args.delta, args.epsilon_log2)
    except InfeasibleParameters as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit({"schema_version": SCHEMA_VERSION, **report.to_dict()})
    return EXIT_OK


# -- entropy ----------------------------------------------------------------


def _load_distributions(text: str) -> list[list[Distribution]]:
    """A file holds one distribution, one tuple of them, or a list of tuples."""
    data = json.loads(text)

    def depth(x):
        return 1 + depth(x[0]) if isinstance(x, list) and x else 0

    d = depth(data)
    if d == 1:
        data = [[data]]
    elif d == 2:
        data = [data]
    elif d != 3:
        raise EntropyError("expected a distribution, a tuple of distributions, or a list of tuples")
    return [[Distribution(p) for p in tup] for tup in data]


def _spectrum(d: Distribution, alpha: float | None) -> dict:
    out = {
        "size": d.size,
        "shannon": shannon_entropy(d),
        "collision": collision_entropy(d),
        "min": min_entropy(d),
        "renyi": {("inf" if a == float("inf") else repr(a)): renyi_entropy(d, a) for a in RENYI_ORDERS},
    }
    if alpha is not None:
        out["alpha"] = "inf" if alpha == float("inf") else alpha
        out["h_alpha"] = renyi_entropy(d, alpha)
    return out


def _bundled_fixtures() -> list[tuple[str, str]]:
    root = resources.files("entropy_ka") / "data" / "fixtures"
    return sorted((p.name, p.read_text()) for p in root.iterdir() if p.name.endswith(".json"))


def cmd_entropy(args) -> int:
    if args.alpha is not None and (args.alpha <= 0 or args.alpha == 1):
        raise UsageError("--alpha must be positive and different from 1 (Shannon is always reported)")
    try:
        if args.samples:
            data = json.loads(Path(args.samples).read_text())
            if not isinstance(data, dict) or "samples" not in data or "alphabet_size" not in data:
                raise EntropyError("samples file must hold {\"alphabet_size\": k, \"samples\": [...]}")
            est = estimate_min_entropy(data["samples"], int(data["alphabet_size"]), 2.0 ** -args.epsilon_log2)
            _emit({"schema_version": SCHEMA_VERSION, "estimate": est.to_dict()})
            return EXIT_OK
        if args.xor_sweep:
            sources = [(args.dist, Path(args.dist).read_text())] if args.dist else _bundled_fixtures()
            tuples, records = [], []
            for name, text in sources:
                for tup in _load_distributions(text):
                    tuples.append(tup)
                    rep = check_preservation_bound(tup)
                    records.append({"source": Path(name).name, **rep.to_dict(), "violations": rep.violations})
            bad = sum(1 for r in records if r["violations"])
            _emit({"schema_version": SCHEMA_VERSION, "tuples": len(records), "violations": bad,
                   "reports": records})
            return EXIT_OK if bad == 0 else EXIT_ABORT
        if not args.dist:
            raise UsageError("one of --dist, --samples or --xor-sweep is required")
        tuples = _load_distributions(Path(args.dist).read_text())
        if len(tuples) != 1 or len(tuples[0]) != 1:
            raise UsageError("--dist without --xor-sweep takes one distribution")
        _emit({"schema_version": SCHEMA_VERSION, **_spectrum(tuples[0][0], args.alpha)})
        return EXIT_OK
    except (OSError, ValueError) as exc:
        # EntropyError and json.JSONDecodeError are ValueErrors
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE


# -- attack suite -----------------------------------------------------------


def cmd_attack_suite(args) -> int:
    seed = _resolve_seed(args)
    params = ProtocolParams(n=args.n)
    matrix = adversarial_matrix(params, ATTACK_BEHAVIORS, seed=seed, include_out_of_model=args.out_of_model)
    probes = []
    for n in range(3, 6):
        t = n // 2 + 1
        for k in (0, t - 1):
            rep = collusion_probe(NetworkConfig(n, seed=seed, adversary=AdversarySpec(frozenset(range(1, k + 1)))))
            probes.append({"n": n, "t": t, "colluders": k, "passed": rep.passed})
    summary = matrix.to_dict()
    if not args.verbose:
        summary.pop("details")
    ok = not matrix.wins and matrix.attacks_aborted and all(p["passed"] for p in probes)
    _emit({"schema_version": SCHEMA_VERSION, "passed": ok, "matrix": summary, "collusion_probes": probes})
    return EXIT_OK if ok else EXIT_ABORT


# -- golden vectors ---------------------------------------------------------

VECTOR_FILE = "golden_vectors.txt"


def compute_vectors() -> dict[str, str]:
    """Fixed-input outputs of every hash-based primitive plus seeded runs."""
    secrets = [bytes(range(i, i + 48)) for i in (0, 48, 96)]
    key = bytes(range(32))
    salt = bytes(range(100, 132))
    v = {
        "commit": commitment.commit_digest(secrets[0], 351_000).hex(),
        "commit_zero": commitment.commit_digest(bytes(48), 0).hex(),
        "mac": commitment.entropy_mac(key, b"entropy-ka test message", salt).hex(),
        "mac_128": commitment.entropy_mac(key, b"", salt, 128).hex(),
        "derive_key": protocol.derive_key(secrets, 128).hex(),
        "derive_key_256": protocol.derive_key(secrets, 256).hex(),
        "derive_linear_key": protocol.derive_linear_key(secrets, [1, 2, 3], 128).hex(),
        "hybrid_combine": protocol.hybrid_combine(bytes(16), protocol.derive_key(secrets, 128)).hex(),
    }
    for n in (3, 4, 5):
        p = ProtocolParams(n=n)
        out = run_session(NetworkConfig(n, seed=42), p, generate_secrets(p, 42))
        v[f"run_n{n}_key"] = next(iter(out.honest_keys)).hex()
        v[f"run_n{n}_transcript_sha3"] = hashlib.sha3_256(out.transcript_jsonl().encode()).hexdigest()
    return v


def format_vectors(v: dict[str, str]) -> str:
    return "".join(f"{k} {v[k]}\n" for k in sorted(v))


def parse_vectors(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            name, value = line.split()
            out[name] = value
    return out


def cmd_vectors(args) -> int:
    target = Path(args.file) if args.file else Path(str(resources.files("entropy_ka") / "data" / VECTOR_FILE))
    fresh = compute_vectors()
    if args.write:
        target.write_text(format_vectors(fresh))
        print(f"wrote {len(fresh)} vectors to {target}")
        return EXIT_OK
    try:
        stored = parse_vectors(target.read_text())
    except (OSError, ValueError) as exc:
        print(f"cannot read vectors: {exc}", file=sys.stderr)
        return EXIT_VECTORS
    mismatched = sorted(k for k in fresh.keys() | stored.keys() if fresh.get(k) != stored.get(k))
    for k in mismatched:
        print(f"MISMATCH {k}: expected {stored.get(k)} got {fresh.get(k)}")
    print(f"{len(fresh) - len(mismatched)}/{len(fresh)} vectors match")
    return EXIT_VECTORS if mismatched else EXIT_OK


# -- entry point ------------------------------------------------------------


def _int_or_none(dest: str):
    return dict(type=int, default=None, dest=dest)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entropy-ka", description="Entropy-based multi-party key agreement toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run one protocol session on the simulated network")
    for flag in ("n", "t", "kappa", "m", "gamma", "delta"):
        sim.add_argument(f"--{flag}", **_int_or_none(flag))
    sim.add_argument("--log2-epsilon", **_int_or_none("epsilon_log2"))
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--adversary", help="adversary spec or scenario JSON file")
    sim.add_argument("--out", help="write the transcript here as JSON lines")
    sim.add_argument("--delivery-order", choices=("round_robin", "seeded_shuffle"), default="round_robin")
    sim.add_argument("--parallel", action="store_true", help="step parties concurrently within a round")
    sim.add_argument("--reveal-key", action="store_true", help="print keys instead of digests only")
    sim.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("params", cmd_params, "solve gamma and evaluate the security bounds"),
        ("table", cmd_table, "recompute the reference parameter table"),
    ):
        p = sub.add_parser(name, help=helptext)
        if name == "params":
            p.add_argument("--n", type=int, default=5)
        p.add_argument("--kappa", type=int, default=128)
        p.add_argument("--m", type=int, default=384)
        p.add_argument("--delta", type=int, default=10)
        p.add_argument("--log2-epsilon", type=int, default=40, dest="epsilon_log2")
        p.set_defaults(func=func)

    ent = sub.add_parser("entropy", help="entropy spectrum, estimation and XOR preservation")
    src = ent.add_mutually_exclusive_group()
    src.add_argument("--dist", help="JSON probability vector (or tuples of them with --xor-sweep)")
    src.add_argument("--samples", help="JSON {alphabet_size, samples}")
    ent.add_argument("--alpha", type=float, default=None)
    ent.add_argument("--xor-sweep", action="store_true", help="check min-entropy preservation under XOR")
    ent.add_argument("--log2-epsilon", type=float, default=40, dest="epsilon_log2")
    ent.set_defaults(func=cmd_entropy)

    atk = sub.add_parser("attack-suite", help="adversarial matrix and collusion probes")
    atk.add_argument("--n", type=int, default=5)
    atk.add_argument("--seed", type=int, default=None)
    atk.add_argument("--out-of-model", action="store_true", help="also sweep t corruptions (reported only)")
    atk.add_argument("--verbose", action="store_true", help="include every run")
    atk.set_defaults(func=cmd_attack_suite)

    vec = sub.add_parser("vectors", help="verify (or rewrite) the golden vectors")
    vec.add_argument("--write", action="store_true")
    vec.add_argument("--file", help="vector file (default: the packaged copy)")
    vec.set_defaults(func=cmd_vectors)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"entropy-ka: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
