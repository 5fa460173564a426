"""Deterministic seed derivation.

Every random choice in the package flows from one root seed.  Child seeds
are derived by hashing the root together with a fixed label, so each stage
(and each pair training inside a stage) is reproducible in isolation.
"""

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def derive_seed(root: int, label: str) -> int:
    """Child seed for `label`, stable across processes and platforms."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & _MASK


def derive_seed_from_indices(root: int, indices) -> int:
    """Child seed derived from a set of row indices rather than a name.

    Used for per-pair classifier seeds: the seed depends only on *which*
    rows the pair uses, not on how the classes are numbered, so relabelling
    classes permutes trained models instead of changing them.
    """
    h = hashlib.sha256(str(root).encode())
    h.update(np.asarray(sorted(indices), dtype=np.int64).tobytes())
    return int.from_bytes(h.digest()[:8], "little") & _MASK
