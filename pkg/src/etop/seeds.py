"""Deterministic derivation of named sub-seeds from one run seed.

Every source of randomness in a run (data sampling, pipeline sampling,
evaluation split, model initialization, ...) draws from its own named
stream so that adding a consumer never perturbs the others.
"""

import hashlib


def derive_seed(seed: int, label: str) -> int:
    """Map (seed, label) to a stable 64-bit sub-seed."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
