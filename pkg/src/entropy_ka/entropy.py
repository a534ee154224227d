"""Rényi entropy calculators, an exact XOR min-entropy oracle, and a
plug-in min-entropy estimator for small alphabets.

All logarithms are base 2. Serialized entropies are integer millibits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

PROB_TOLERANCE = 1e-12
MAX_ESTIMATOR_ALPHABET = 1 << 16


class EntropyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Distribution:
    """Finite distribution over {0,1}^w, stored as a float64 array."""

    probs: np.ndarray

    def __init__(self, probs: Iterable[float]):
        arr = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise EntropyError("probabilities must be a non-empty flat list")
        size = arr.size
        if size & (size - 1):
            raise EntropyError(f"alphabet size {size} is not a power of two")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise EntropyError("probabilities must be finite and non-negative")
        if abs(float(arr.sum()) - 1.0) > PROB_TOLERANCE:
            raise EntropyError(f"probabilities sum to {arr.sum()!r}, not 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @property
    def bits(self) -> int:
        return self.size.bit_length() - 1

    @classmethod
    def uniform(cls, bits: int) -> "Distribution":
        size = 1 << bits
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, bits: int, at: int = 0) -> "Distribution":
        arr = np.zeros(1 << bits)
        arr[at] = 1.0
        return cls(arr)

    @classmethod
    def random(cls, bits: int, rng: np.random.Generator, concentration: float = 1.0) -> "Distribution":
        """Dirichlet draw; small ``concentration`` gives spiky distributions."""
        p = rng.dirichlet(np.full(1 << bits, concentration))
        # renormalize so the 1e-12 sum check survives float roundoff
        return cls(p / p.sum())

    def to_json(self) -> str:
        return json.dumps([float(p) for p in self.probs])

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(p, (int, float)) for p in data):
            raise EntropyError("distribution file must hold a JSON array of numbers")
        return cls(data)


@dataclass(frozen=True)
class EntropyEstimate:
    value_millibits: int
    accuracy_delta_millibits: int
    sample_count: int

    def __post_init__(self):
        if self.value_millibits < 0:
            raise EntropyError("min-entropy estimate cannot be negative")
        if self.accuracy_delta_millibits < 0:
            raise EntropyError("accuracy bound cannot be negative")

    @classmethod
    def certified(cls, bits: float, delta_bits: float = 0.0) -> "EntropyEstimate":
        """Externally certified bound, e.g. for full-size 384-bit sources."""
        return cls(round(bits * 1000), math.ceil(delta_bits * 1000), 0)

    @property
    def bits(self) -> float:
        return self.value_millibits / 1000

    @property
    def delta_bits(self) -> float:
        return self.accuracy_delta_millibits / 1000

    def to_dict(self) -> dict:
        return {
            "value_millibits": self.value_millibits,
            "accuracy_delta_millibits": self.accuracy_delta_millibits,
            "sample_count": self.sample_count,
        }


def shannon_entropy(d: Distribution) -> float:
    p = d.probs[d.probs > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def renyi_entropy(d: Distribution, alpha: float) -> float:
    """Rényi entropy of order ``alpha`` in bits.

    Raises:
        EntropyError: for alpha <= 0 or alpha == 1 (use shannon_entropy).
    """
    if not alpha > 0 or alpha == 1:
        raise EntropyError(f"Rényi order must be positive and != 1, got {alpha}")
    p = d.probs[d.probs > 0]
    if math.isinf(alpha):
        return min_entropy(d)
    # factor out the max so p**alpha does not underflow for large alpha
    pmax = float(p.max())
    s = float(((p / pmax) ** alpha).sum())
    return (alpha * math.log2(pmax) + math.log2(s)) / (1 - alpha) + 0.0


def min_entropy(d: Distribution) -> float:
    return -math.log2(float(d.probs.max())) + 0.0


def collision_entropy(d: Distribution) -> float:
    return renyi_entropy(d, 2)


def xor_convolve(a: Distribution, b: Distribution) -> Distribution:
    """Exact distribution of X xor Y for independent X ~ a, Y ~ b.

    Computed through the Walsh-Hadamard transform, which diagonalizes XOR
    convolution; ``xor_convolve_direct`` is the quadratic definition.
    """
    if a.size != b.size:
        raise EntropyError(f"alphabet mismatch: {a.size} vs {b.size}")
    out = _fwht(_fwht(a.probs) * _fwht(b.probs)) / a.size
    out = np.clip(out, 0.0, None)
    return Distribution(out / out.sum())


def xor_convolve_direct(a: Distribution, b: Distribution) -> Distribution:
    """Pr[z] = sum_x a(x) * b(z xor x), evaluated term by term."""
    if a.size != b.size:
        raise EntropyError(f"alphabet mismatch: {a.size} vs {b.size}")
    idx = np.arange(a.size)
    out = np.zeros(a.size)
    for x in range(a.size):
        out[idx] += a.probs[x] * b.probs[idx ^ x]
    return Distribution(out / out.sum())


def _fwht(v: np.ndarray) -> np.ndarray:
    v = np.array(v, dtype=np.float64)
    h = 1
    n = v.size
    while h < n:
        v = v.reshape(-1, 2, h)
        v = np.stack((v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]), axis=1)
        h *= 2
    return v.reshape(n)


@dataclass(frozen=True)
class PreservationReport:
    n: int
    width_bits: int
    gamma: float
    exact_hinf: float
    preservation_floor: float
    max_individual: float
    sum_floor: float
    equality: bool

    @property
    def violations(self) -> list[str]:
        # tolerance covers float roundoff in log2 only
        tol = 1e-9
        out = []
        if self.exact_hinf < self.preservation_floor - tol:
            out.append("preservation")
        if self.exact_hinf < self.max_individual - tol:
            out.append("max_individual")
        if self.exact_hinf < self.sum_floor - tol:
            out.append("sum_floor")
        return out

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "width_bits": self.width_bits,
            "gamma": self.gamma,
            "exact_hinf": self.exact_hinf,
            "preservation_floor": self.preservation_floor,
            "max_individual": self.max_individual,
            "sum_floor": self.sum_floor,
            "equality": self.equality,
            "violations": self.violations,
        }


def check_preservation_bound(dists: Sequence[Distribution], w: int | None = None) -> PreservationReport:
    """Compare the exact min-entropy of X_1 xor ... xor X_n with its lower bounds.

    Bounds checked, with gamma = min_i H_inf(X_i):
      * max(0, n*gamma - (n-1)*w)
      * max_i H_inf(X_i)
      * sum_i H_inf(X_i) - (n-1)*w
    """
    if not dists:
        raise EntropyError("need at least one distribution")
    w = dists[0].bits if w is None else w
    if any(d.bits != w for d in dists):
        raise EntropyError(f"all distributions must be over {w}-bit strings")
    n = len(dists)
    hs = [min_entropy(d) for d in dists]
    acc = dists[0]
    for d in dists[1:]:
        acc = xor_convolve(acc, d)
    exact = min_entropy(acc)
    gamma = min(hs)
    floor = max(0.0, n * gamma - (n - 1) * w)
    return PreservationReport(
        n=n,
        width_bits=w,
        gamma=gamma,
        exact_hinf=exact,
        preservation_floor=floor,
        max_individual=max(hs),
        sum_floor=sum(hs) - (n - 1) * w,
        equality=math.isclose(exact, floor, abs_tol=1e-9),
    )


@dataclass(frozen=True)
class TransformationReport:
    """Min-entropy of f(X) against two candidate lower bounds.

    ``range_floor`` is H_inf(X) - log2|range(f)|. It does not hold in
    general: a constant map sends any X to a point mass while the floor
    stays at H_inf(X). ``preimage_floor`` is H_inf(X) - log2 max_y |f^-1(y)|,
    which always holds since Pr[f(X) = y] <= |f^-1(y)| * max_x Pr[X = x].
    """

    hinf_fx: float
    hinf_x: float
    range_size: int
    max_preimage: int

    @property
    def range_floor(self) -> float:
        return self.hinf_x - math.log2(self.range_size)

    @property
    def preimage_floor(self) -> float:
        return self.hinf_x - math.log2(self.max_preimage)

    def holds(self, floor: str = "preimage", tol: float = 1e-9) -> bool:
        bound = self.preimage_floor if floor == "preimage" else self.range_floor
        return self.hinf_fx >= bound - tol and self.hinf_fx <= self.hinf_x + tol


def check_transformation_bound(d: Distribution, f: Callable[[int], int] | Sequence[int]) -> TransformationReport:
    """Push ``d`` through a deterministic map given as a callable or a lookup table."""
    table = [f(x) for x in range(d.size)] if callable(f) else list(f)
    if len(table) != d.size:
        raise EntropyError(f"map table has {len(table)} entries for an alphabet of {d.size}")
    image: dict[int, float] = {}
    preimage: dict[int, int] = {}
    for x, y in enumerate(table):
        image[y] = image.get(y, 0.0) + float(d.probs[x])
        preimage[y] = preimage.get(y, 0) + 1
    return TransformationReport(
        hinf_fx=-math.log2(max(image.values())) + 0.0,
        hinf_x=min_entropy(d),
        range_size=len(image),
        max_preimage=max(preimage.values()),
    )


def deviation_epsilon(sample_count: int, alphabet_size: int, epsilon: float) -> float:
    """Uniform deviation bound on empirical probabilities.

    By Hoeffding plus a union bound over the alphabet, every |p_hat(x) - p(x)|
    is at most this value with probability >= 1 - epsilon.
    """
    return math.sqrt(math.log(2 * alphabet_size / epsilon) / (2 * sample_count))


def estimate_min_entropy(samples, alphabet_size: int, epsilon: float) -> EntropyEstimate:
    """Plug-in min-entropy estimate with an accuracy bound.

    Args:
        samples: outcomes in [0, alphabet_size); list or integer array.
        alphabet_size: power of two, at most 2**16.
        epsilon: failure probability of the accuracy bound.

    Returns:
        EntropyEstimate whose delta is log2(p_max / (p_max - eps_N)), rounded
        up to a whole millibit. If p_max <= eps_N the bound is uninformative
        and delta is clamped to log2(alphabet_size).
    """
    if alphabet_size < 1 or alphabet_size & (alphabet_size - 1) or alphabet_size > MAX_ESTIMATOR_ALPHABET:
        raise EntropyError(f"alphabet size must be a power of two <= 2^16, got {alphabet_size}")
    if not 0 < epsilon < 1:
        raise EntropyError(f"epsilon must lie in (0, 1), got {epsilon}")
    arr = np.asarray(samples, dtype=np.int64).ravel()
    n = int(arr.size)
    if n == 0:
        raise EntropyError("no samples")
    if arr.min() < 0 or arr.max() >= alphabet_size:
        raise EntropyError("sample outside the alphabet")
    counts = np.bincount(arr, minlength=alphabet_size)
    p_max = int(counts.max()) / n
    value = -math.log2(p_max)
    eps_n = deviation_epsilon(n, alphabet_size, epsilon)
    full_width = math.log2(alphabet_size)
    if p_max > eps_n:
        delta = min(math.log2(p_max / (p_max - eps_n)), full_width)
    else:
        delta = full_width
    return EntropyEstimate(
        value_millibits=max(0, round(value * 1000)),
        accuracy_delta_millibits=math.ceil(delta * 1000),
        sample_count=n,
    )
