"""Seed derivation.

Every sub-seed is a SHA-256 hash of the parent seed and a path of labels, so a
single experiment seed reproduces all sampling downstream of it.
"""
import hashlib

import numpy as np


def derive_seed(seed, *labels):
    h = hashlib.sha256(str(int(seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def rng_for(seed, *labels):
    return np.random.default_rng(derive_seed(seed, *labels) if labels else int(seed))
