"""Multi-party key agreement from independent partial-entropy sources.

Parties commit to high-entropy secrets, Shamir-share them over GF(2^8),
cross-check the shares and reveal; the key is a hash of the XOR of all
secrets. The package also ships entropy calculators, a security-parameter
calculus and a deterministic network simulator with adversaries.
"""

from .entropy import Distribution, EntropyEstimate
from .params import ProtocolParams, advantage_bound, solve_gamma
from .protocol import derive_key, derive_linear_key, hybrid_combine
from .sharing import SecretInput, ShareBundle, make_shares, reconstruct_secret
from .simnet import AdversarySpec, Behavior, NetworkConfig, run_session

__version__ = "0.1.0"
