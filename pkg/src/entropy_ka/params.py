"""Security parameterization: entropy floor, minimal per-source entropy,
adversary advantage terms and the reference n = 3..7 parameter table.

Everything is computed in the log2 domain on integers; terms such as
2^-1536 never touch floating point except as their exponent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

NEG_INF = float("-inf")


class ParamsError(ValueError):
    pass


class InfeasibleParameters(ParamsError):
    """The requested security level cannot be met; message holds the inequality."""


def default_threshold(n: int) -> int:
    """Honest-majority threshold floor(n/2) + 1."""
    return n // 2 + 1


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol and adversary parameters, all in bits.

    ``epsilon_log2`` is -log2(epsilon). ``q_queries_log2`` is log2 of the
    adversary's hash queries and ``q_memory_log2`` log2 of its quantum memory;
    None means no queries / no memory. ``zeta`` is an optional extra margin
    added to the right-hand side of the security inequality.
    """

    n: int = 5
    t: int | None = None
    m: int = 384
    kappa: int = 128
    gamma: int = 351
    delta: int = 10
    epsilon_log2: int = 40
    lambda_bits: int = 256
    q_queries_log2: int | None = 64
    q_memory_log2: int | None = 64
    zeta: int = 0

    def __post_init__(self):
        if self.t is None:
            object.__setattr__(self, "t", default_threshold(self.n))
        self.validate()

    def validate(self) -> None:
        if not 2 <= self.n <= 255:
            raise ParamsError(f"n must lie in [2, 255], got {self.n}")
        if not 2 <= self.t <= self.n:
            raise ParamsError(f"threshold must satisfy 2 <= t <= n, got t={self.t}, n={self.n}")
        if self.m <= 0 or self.m % 8:
            raise ParamsError(f"m must be a positive multiple of 8, got {self.m}")
        if self.kappa <= 0 or self.kappa % 8:
            raise ParamsError(f"kappa must be a positive multiple of 8, got {self.kappa}")
        if not self.gamma > self.delta >= 0:
            raise ParamsError(f"need gamma > delta >= 0, got gamma={self.gamma}, delta={self.delta}")
        if self.epsilon_log2 < 0 or self.zeta < 0:
            raise ParamsError("epsilon_log2 and zeta must be non-negative")
        if self.lambda_bits <= 0:
            raise ParamsError("lambda must be positive")

    def with_(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def hinf_floor(p: ProtocolParams) -> int:
    """Guaranteed min-entropy of the XOR of all secrets: max(0, n(gamma-delta) - (n-1)m)."""
    return max(0, p.n * (p.gamma - p.delta) - (p.n - 1) * p.m)


def required_entropy(p: ProtocolParams) -> int:
    return p.kappa + p.epsilon_log2 + p.zeta


def security_inequality(p: ProtocolParams) -> tuple[bool, str]:
    """Check n(gamma-delta) - (n-1)m >= kappa + log2(1/eps) [+ zeta]."""
    lhs = p.n * (p.gamma - p.delta) - (p.n - 1) * p.m
    rhs = required_entropy(p)
    holds = lhs >= rhs
    extra = f" + {p.zeta}" if p.zeta else ""
    text = (
        f"n(gamma-delta) - (n-1)m >= kappa + log2(1/eps){' + zeta' if p.zeta else ''}: "
        f"{p.n}*({p.gamma}-{p.delta}) - {p.n - 1}*{p.m} = {lhs} "
        f"{'>=' if holds else '<'} {p.kappa} + {p.epsilon_log2}{extra} = {rhs}"
    )
    return holds, text


def solve_gamma(n: int, m: int, kappa: int, delta: int, epsilon_log2: int, zeta: int = 0) -> int:
    """Smallest integer gamma meeting the security inequality.

    This is ceil((kappa + log2(1/eps) + zeta + n*delta + (n-1)*m) / n).

    Raises:
        InfeasibleParameters: the minimal gamma exceeds m.
    """
    if n < 1:
        raise ParamsError("n must be positive")
    num = kappa + epsilon_log2 + zeta + n * delta + (n - 1) * m
    gamma = -(-num // n)
    if gamma > m:
        raise InfeasibleParameters(
            f"minimal gamma = ceil({num}/{n}) = {gamma} exceeds m = {m}: "
            f"no source over {m}-bit strings can carry that much min-entropy"
        )
    return gamma


def log2_sum(values) -> float:
    """log2(sum 2**v) over finite v; -inf if nothing is finite."""
    finite = [v for v in values if v != NEG_INF]
    if not finite:
        return NEG_INF
    top = max(finite)
    return top + math.log2(sum(2.0 ** (v - top) for v in finite))


def _json_log(v: float) -> float | None:
    return None if v == NEG_INF else v


@dataclass
class BoundReport:
    hinf_S_bits: int
    feasible: bool
    margin_bits: int
    terms_log2: dict[str, float]
    active_win_log2: dict[str, float]
    verification_log2: dict[str, float]
    comm_cost_bits: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "hinf_S_bits": self.hinf_S_bits,
            "feasible": self.feasible,
            "margin_bits": self.margin_bits,
            "terms_log2": {k: _json_log(v) for k, v in self.terms_log2.items()},
            "active_win_log2": {k: _json_log(v) for k, v in self.active_win_log2.items()},
            "verification_log2": {k: _json_log(v) for k, v in self.verification_log2.items()},
            "comm_cost_bits": self.comm_cost_bits,
            "notes": list(self.notes),
        }


def comm_cost_bits(n: int, m: int) -> int:
    """Point-to-point share traffic: every party sends m bits to n-1 others."""
    return n * (n - 1) * m


def comm_cost_kb(n: int, m: int) -> float:
    return comm_cost_bits(n, m) / (8 * 1024)


def advantage_bound(p: ProtocolParams) -> BoundReport:
    """Evaluate the adversary-advantage terms as log2 values.

    Distinguishing advantage:
        2^-kappa + q^2/2^m + n^2/2^lambda + 2^(log2 Q - (n*gamma - (n-1)m))
    Active win probability:
        q^2/2^m + 2^-(gamma-delta) + n^2/2^lambda
    Invalid-share verification:
        q^2/2^m + 2^-(gamma-delta)
    A term whose driver is absent (no queries, no memory) is -inf.
    """
    raw_floor = p.n * p.gamma - (p.n - 1) * p.m
    collision = NEG_INF if p.q_queries_log2 is None else 2 * p.q_queries_log2 - p.m
    auth = 2 * math.log2(p.n) - p.lambda_bits
    memory = NEG_INF if p.q_memory_log2 is None else p.q_memory_log2 - raw_floor
    guess = -(p.gamma - p.delta)
    terms = {"key": float(-p.kappa), "collision": float(collision), "auth": auth, "memory": float(memory)}
    terms["total"] = log2_sum(terms.values())
    active = {"collision": float(collision), "entropy_fraud": float(guess), "auth": auth}
    active["total"] = log2_sum(active.values())
    verification = {"collision": float(collision), "entropy_guess": float(guess)}
    verification["total"] = log2_sum(verification.values())

    holds, text = security_inequality(p)
    notes = [] if holds else [f"security inequality violated: {text}"]
    over = [k for k in ("key", "collision", "auth", "memory") if terms[k] > -p.kappa]
    notes += [f"term {k} = 2^{terms[k]:.3f} exceeds 2^-{p.kappa}" for k in over]
    floor = hinf_floor(p)
    return BoundReport(
        hinf_S_bits=floor,
        feasible=holds and not over,
        margin_bits=floor - p.kappa - p.epsilon_log2,
        terms_log2=terms,
        active_win_log2=active,
        verification_log2=verification,
        comm_cost_bits=comm_cost_bits(p.n, p.m),
        notes=notes,
    )


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    inequality: str

    def to_dict(self) -> dict:
        return asdict(self)


def mitigation_check(p: ProtocolParams) -> list[Verdict]:
    """Collision-search, quantum-memory and estimation-margin constraints."""
    q_mem = p.q_memory_log2 or 0
    bht = p.m >= 3 * p.kappa
    mem = p.gamma >= p.kappa + q_mem
    margin, margin_text = security_inequality(p)
    return [
        Verdict("bht_collision", bht, f"m >= 3*kappa: {p.m} {'>=' if bht else '<'} {3 * p.kappa}"),
        Verdict(
            "quantum_memory",
            mem,
            f"gamma >= kappa + log2 Q: {p.gamma} {'>=' if mem else '<'} {p.kappa} + {q_mem} = {p.kappa + q_mem}",
        ),
        Verdict("delta_margin", margin, margin_text),
    ]


# Reference parameterization for kappa = 128, m = 384, delta = 10,
# eps = 2^-40, as printed: n -> (gamma, H_inf(S), comm KB, margin).
REFERENCE_TABLE = {
    3: (315, 135, 0.42, 7),
    4: (340, 168, 0.84, 40),
    5: (351, 169, 1.41, 41),
    6: (352, 172, 2.25, 44),
    7: (359, 179, 3.15, 51),
}
KB_TOLERANCE = 0.005  # printed values carry two decimals


@dataclass
class TableRow:
    n: int
    m: int
    gamma: int
    hinf_at_gamma: int
    hinf_at_printed_gamma: int
    comm_kb: float
    margin: int
    printed: dict
    matches: dict

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TableReport:
    kappa: int
    m: int
    delta: int
    epsilon_log2: int
    rows: list[TableRow]
    discrepancies: list[dict]

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "m": self.m,
            "delta": self.delta,
            "epsilon_log2": self.epsilon_log2,
            "rows": [r.to_dict() for r in self.rows],
            "discrepancies": list(self.discrepancies),
        }


def reproduce_table(kappa: int = 128, m: int = 384, delta: int = 10, epsilon_log2: int = 40, n_range=range(3, 8)) -> TableReport:
    """Recompute each reference row and flag cells that disagree.

    gamma is the minimal gamma from ``solve_gamma``. H_inf(S) and the margin
    H_inf(S) - kappa are evaluated at the printed gamma, so each cell checks
    one formula against one printed number. The KB column uses
    n(n-1)m / (8*1024).
    """
    rows, discrepancies = [], []
    for n in n_range:
        gamma = solve_gamma(n, m, kappa, delta, epsilon_log2)
        floor_solved = max(0, n * (gamma - delta) - (n - 1) * m)
        kb = comm_cost_kb(n, m)
        printed = REFERENCE_TABLE.get(n)
        if printed is None:
            pdict, matches = {}, {}
            floor_printed, margin = floor_solved, floor_solved - kappa
        else:
            p_gamma, p_hinf, p_kb, p_margin = printed
            floor_printed = max(0, n * (p_gamma - delta) - (n - 1) * m)
            margin = floor_printed - kappa
            pdict = {"gamma": p_gamma, "hinf": p_hinf, "comm_kb": p_kb, "margin": p_margin}
            matches = {
                "gamma": gamma == p_gamma,
                "hinf": floor_printed == p_hinf,
                "comm_kb": abs(kb - p_kb) <= KB_TOLERANCE,
                "margin": margin == p_margin,
            }
            computed = {"gamma": gamma, "hinf": floor_printed, "comm_kb": kb, "margin": margin}
            for col, ok in matches.items():
                if not ok:
                    discrepancies.append({"n": n, "column": col, "computed": computed[col], "printed": pdict[col]})
        rows.append(TableRow(n, m, gamma, floor_solved, floor_printed, kb, margin, pdict, matches))
    return TableReport(kappa, m, delta, epsilon_log2, rows, discrepancies)
