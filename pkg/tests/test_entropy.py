import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropy_ka.entropy import (
    Distribution,
    EntropyError,
    EntropyEstimate,
    check_preservation_bound,
    check_transformation_bound,
    collision_entropy,
    deviation_epsilon,
    estimate_min_entropy,
    min_entropy,
    renyi_entropy,
    shannon_entropy,
    xor_convolve,
    xor_convolve_direct,
)

SKEW = Distribution([0.5, 0.25, 0.25, 0.0])


@st.composite
def distributions(draw, bits=None):
    w = draw(st.integers(1, 4)) if bits is None else bits
    weights = draw(st.lists(st.floats(0, 1), min_size=1 << w, max_size=1 << w))
    if sum(weights) == 0:
        weights[0] = 1.0
    total = sum(weights)
    return Distribution([x / total for x in weights])


def test_renyi_examples():
    assert renyi_entropy(Distribution.uniform(1), 2) == pytest.approx(1.0)
    assert renyi_entropy(SKEW, 2) == pytest.approx(-math.log2(0.375), abs=1e-12)
    assert -math.log2(0.375) == pytest.approx(1.41504, abs=1e-5)
    for a in (0.5, 2, 7, float("inf")):
        assert renyi_entropy(Distribution.point_mass(3, 5), a) == 0.0


def test_renyi_rejects_bad_orders():
    for a in (0, -1, 1):
        with pytest.raises(EntropyError):
            renyi_entropy(SKEW, a)


def test_min_and_collision_examples():
    assert min_entropy(Distribution.uniform(5)) == pytest.approx(5.0)
    assert min_entropy(SKEW) == pytest.approx(1.0)
    assert min_entropy(Distribution.point_mass(2)) == 0.0
    assert collision_entropy(Distribution.uniform(2)) == pytest.approx(2.0)
    assert collision_entropy(Distribution([0.5, 0.5, 0, 0])) == pytest.approx(1.0)
    assert collision_entropy(SKEW) == pytest.approx(1.41504, abs=1e-5)


def test_distribution_validation():
    for bad in ([], [0.5, 0.25, 0.25], [1.5, -0.5], [0.5, 0.4]):
        with pytest.raises(EntropyError):
            Distribution(bad)
    d = Distribution.uniform(2)
    with pytest.raises(ValueError):
        d.probs[0] = 1.0


def test_distribution_json_roundtrip():
    d = Distribution.random(3, np.random.default_rng(1))
    back = Distribution.from_json(d.to_json())
    assert np.array_equal(back.probs, d.probs)
    with pytest.raises(EntropyError):
        Distribution.from_json('{"p": 1}')


@given(distributions())
def test_renyi_is_non_increasing_in_order(d):
    orders = [0.25, 0.5, 0.9, 1.5, 2, 4, 16]
    values = [renyi_entropy(d, a) for a in orders] + [min_entropy(d)]
    assert all(x >= y - 1e-9 for x, y in zip(values, values[1:]))
    assert renyi_entropy(d, 0.999) >= shannon_entropy(d) - 1e-6
    assert shannon_entropy(d) >= collision_entropy(d) - 1e-9
    assert 0 <= min_entropy(d) <= d.bits + 1e-12


def test_xor_convolve_examples():
    d = Distribution([0.75, 0.25])
    assert np.allclose(xor_convolve(d, d).probs, [0.625, 0.375])
    e = Distribution.random(3, np.random.default_rng(4))
    assert np.allclose(xor_convolve(e, Distribution.point_mass(3, 0)).probs, e.probs)
    assert np.allclose(xor_convolve(Distribution.uniform(3), e).probs, 1 / 8)


@given(st.integers(1, 4).flatmap(lambda w: st.tuples(distributions(w), distributions(w))))
def test_fwht_matches_direct_sum(pair):
    a, b = pair
    assert np.allclose(xor_convolve(a, b).probs, xor_convolve_direct(a, b).probs, atol=1e-12)


def test_xor_convolve_alphabet_mismatch():
    with pytest.raises(EntropyError):
        xor_convolve(Distribution.uniform(1), Distribution.uniform(2))


def test_preservation_examples():
    rep = check_preservation_bound([Distribution.uniform(3)] * 4)
    assert rep.exact_hinf == pytest.approx(3.0) and rep.preservation_floor == pytest.approx(3.0)
    assert rep.equality and rep.ok
    rep = check_preservation_bound([Distribution([0.75, 0.25])] * 2)
    assert rep.exact_hinf == pytest.approx(-math.log2(0.625))
    assert rep.exact_hinf == pytest.approx(0.678, abs=1e-3)
    assert rep.max_individual == pytest.approx(0.415, abs=1e-3)
    assert rep.ok


@settings(max_examples=300)
@given(st.integers(1, 3).flatmap(lambda w: st.lists(distributions(w), min_size=1, max_size=4)))
def test_preservation_never_violated(dists):
    assert check_preservation_bound(dists).violations == []


def test_preservation_random_sweep_w3():
    rng = np.random.default_rng(11)
    for i in range(1000):
        n = 2 + i % 3
        dists = [Distribution.random(3, rng, concentration=rng.choice([0.1, 1.0, 5.0])) for _ in range(n)]
        assert check_preservation_bound(dists).ok


def test_preservation_bad_widths():
    with pytest.raises(EntropyError):
        check_preservation_bound([Distribution.uniform(1), Distribution.uniform(2)])
    with pytest.raises(EntropyError):
        check_preservation_bound([])


@given(distributions(), st.data())
def test_transformation_preimage_bound(d, data):
    f = data.draw(st.lists(st.integers(0, d.size - 1), min_size=d.size, max_size=d.size))
    assert check_transformation_bound(d, f).holds("preimage")


def test_transformation_range_floor_counterexample():
    # constant map: f(X) is a point mass, but H_inf(X) - log2 1 = 1
    rep = check_transformation_bound(Distribution.uniform(1), [0, 0])
    assert rep.hinf_fx == 0.0 and rep.range_floor == 1.0
    assert not rep.holds("range")
    assert rep.holds("preimage")


def test_transformation_callable_and_bijection():
    d = Distribution.random(4, np.random.default_rng(2))
    rep = check_transformation_bound(d, lambda x: x ^ 0b1010)
    assert rep.hinf_fx == pytest.approx(min_entropy(d))
    assert rep.max_preimage == 1 and rep.range_size == 16
    with pytest.raises(EntropyError):
        check_transformation_bound(d, [0, 1])


def test_estimator_point_mass_and_errors():
    est = estimate_min_entropy([3] * 1000, 4, 1e-6)
    assert est.value_millibits == 0 and est.sample_count == 1000
    with pytest.raises(EntropyError):
        estimate_min_entropy([], 4, 0.1)
    with pytest.raises(EntropyError):
        estimate_min_entropy([4], 4, 0.1)
    with pytest.raises(EntropyError):
        estimate_min_entropy([0], 3, 0.1)
    with pytest.raises(EntropyError):
        estimate_min_entropy([0], 4, 1.5)


def test_estimator_uniform16_within_delta():
    rng = np.random.default_rng(20)
    for _ in range(5):
        est = estimate_min_entropy(rng.integers(0, 16, 10**6), 16, 2.0**-20)
        assert abs(est.bits - 4.0) <= est.delta_bits


def test_estimator_skewed_within_delta():
    rng = np.random.default_rng(21)
    p = np.array([0.5] + [0.5 / 15] * 15)
    for _ in range(5):
        est = estimate_min_entropy(rng.choice(16, 10**6, p=p), 16, 2.0**-20)
        assert abs(est.bits - 1.0) <= est.delta_bits


def test_estimator_delta_clamps_when_uninformative():
    # 4 samples over 256 symbols: eps_N dwarfs every frequency
    est = estimate_min_entropy([0, 1, 2, 3], 256, 0.01)
    assert est.delta_bits == pytest.approx(8.0)


def test_deviation_epsilon_shrinks_with_samples():
    assert deviation_epsilon(10**6, 16, 1e-6) < deviation_epsilon(10**4, 16, 1e-6)


def test_estimate_validation_and_certified():
    with pytest.raises(EntropyError):
        EntropyEstimate(-1, 0, 0)
    e = EntropyEstimate.certified(351, 0.0005)
    assert e.value_millibits == 351000 and e.accuracy_delta_millibits == 1
    assert e.to_dict()["value_millibits"] == 351000


@given(st.integers(1, 3).flatmap(lambda w: st.tuples(distributions(w), distributions(w), distributions(w))))
def test_xor_convolve_commutative_associative(triple):
    a, b, c = triple
    ab = xor_convolve(a, b)
    assert abs(ab.probs.sum() - 1) <= 1e-12 and (ab.probs >= 0).all()
    assert np.allclose(ab.probs, xor_convolve(b, a).probs, atol=1e-12)
    assert np.allclose(xor_convolve(ab, c).probs, xor_convolve(a, xor_convolve(b, c)).probs, atol=1e-12)
