import math

import pytest
from hypothesis import given, strategies as st

from entropy_ka.params import (
    InfeasibleParameters,
    ParamsError,
    ProtocolParams,
    advantage_bound,
    comm_cost_kb,
    default_threshold,
    hinf_floor,
    log2_sum,
    mitigation_check,
    reproduce_table,
    security_inequality,
    solve_gamma,
)

REF = ProtocolParams()


def test_reference_point_defaults():
    assert (REF.n, REF.t, REF.m, REF.kappa, REF.gamma, REF.delta) == (5, 3, 384, 128, 351, 10)
    assert default_threshold(7) == 4


def test_hinf_floor_examples():
    assert hinf_floor(REF) == 169
    assert 5 * (351 - 10) == 1705 and 4 * 384 == 1536
    assert hinf_floor(ProtocolParams(n=4, gamma=340)) == 168
    assert hinf_floor(ProtocolParams(n=6, m=64, gamma=74, delta=10, kappa=16)) == 64


def test_solve_gamma_examples():
    assert solve_gamma(5, 384, 128, 10, 40) == 351
    assert (128 + 40 + 50 + 4 * 384) / 5 == pytest.approx(350.8)
    assert solve_gamma(4, 384, 128, 10, 40) == 340
    assert solve_gamma(1, 384, 128, 0, 0) == 128


def test_solve_gamma_infeasible():
    with pytest.raises(InfeasibleParameters, match="exceeds m"):
        solve_gamma(5, 128, 128, 10, 40)


@given(st.integers(1, 12), st.sampled_from([128, 256, 384, 512]), st.sampled_from([64, 128]),
       st.integers(0, 20), st.integers(0, 64))
def test_solve_gamma_is_minimal(n, m, kappa, delta, eps):
    try:
        g = solve_gamma(n, m, kappa, delta, eps)
    except InfeasibleParameters:
        return
    ok = lambda gamma: n * (gamma - delta) - (n - 1) * m >= kappa + eps
    assert ok(g) and not ok(g - 1)


def test_security_inequality_text():
    holds, text = security_inequality(REF.with_(gamma=100))
    assert not holds
    assert "5*(100-10) - 4*384 = -1086" in text and "168" in text


def test_validation():
    for bad in (dict(n=1), dict(t=1), dict(t=6), dict(m=100), dict(kappa=0), dict(gamma=10, delta=10),
                dict(epsilon_log2=-1), dict(lambda_bits=0)):
        with pytest.raises(ParamsError):
            ProtocolParams(**bad)


def test_advantage_terms_at_reference_point():
    rep = advantage_bound(REF)
    t = rep.terms_log2
    assert t["key"] == -128
    assert t["collision"] == 2 * 64 - 384
    assert t["auth"] == pytest.approx(2 * math.log2(5) - 256)
    assert t["memory"] == 64 - (5 * 351 - 4 * 384)
    assert all(t[k] <= -128 for k in ("key", "collision", "auth", "memory"))
    assert rep.feasible and rep.hinf_S_bits == 169


def test_honest_only_advantage():
    rep = advantage_bound(REF.with_(q_queries_log2=None, q_memory_log2=None))
    expect = math.log2(2.0**-128 + 25 * 2.0**-256)
    assert rep.terms_log2["total"] == pytest.approx(expect)
    assert rep.terms_log2["collision"] == -math.inf
    assert rep.to_dict()["terms_log2"]["memory"] is None


def test_memory_boundary_is_flagged():
    raw = 5 * 351 - 4 * 384
    rep = advantage_bound(REF.with_(q_memory_log2=raw))
    assert rep.terms_log2["memory"] == 0
    assert not rep.feasible and any("memory" in n for n in rep.notes)


@given(st.integers(330, 384), st.integers(0, 2))
def test_terms_monotone_in_gamma(gamma, step):
    a = advantage_bound(REF.with_(gamma=gamma)).terms_log2
    b = advantage_bound(REF.with_(gamma=min(384, gamma + step))).terms_log2
    assert all(b[k] <= a[k] for k in a)


@given(st.sampled_from([384, 392, 512, 1024]))
def test_collision_term_monotone_in_m(m):
    a = advantage_bound(REF.with_(m=m, gamma=351)).terms_log2
    b = advantage_bound(REF.with_(m=m + 8, gamma=351)).terms_log2
    assert b["collision"] <= a["collision"]


def test_log2_sum():
    assert log2_sum([-math.inf]) == -math.inf
    assert log2_sum([0, 0]) == pytest.approx(1.0)
    assert log2_sum([-1536, -1536]) == pytest.approx(-1535)


def test_mitigations():
    assert all(v.passed for v in mitigation_check(REF))
    named = {v.name: v for v in mitigation_check(REF.with_(m=256, gamma=250))}
    assert not named["bht_collision"].passed and "256 < 384" in named["bht_collision"].inequality
    named = {v.name: v for v in mitigation_check(REF.with_(gamma=128, q_memory_log2=64))}
    assert not named["quantum_memory"].passed


def test_comm_cost():
    assert comm_cost_kb(5, 384) == 0.9375


def test_table_reproduction():
    rep = reproduce_table()
    rows = {r.n: r for r in rep.rows}
    assert rows[4].matches == {"gamma": True, "hinf": True, "comm_kb": False, "margin": True}
    assert rows[5].gamma == 351 and rows[5].hinf_at_printed_gamma == 169
    assert rows[3].hinf_at_printed_gamma == 3 * 305 - 768 == 147
    flagged = {(d["n"], d["column"]) for d in rep.discrepancies}
    assert {(n, "comm_kb") for n in range(3, 8)} <= flagged
    assert {(3, "hinf"), (6, "hinf"), (7, "hinf")} <= flagged
    assert not any(n in (4, 5) and c in ("gamma", "hinf") for n, c in flagged)
    assert rep.to_dict() == reproduce_table().to_dict()
