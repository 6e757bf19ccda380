import hashlib

import numpy as np


def derive_seed(master_seed: int, *keys: str | int) -> int:
    """Child seed as a 64-bit BLAKE2b hash of the master seed and the keys.

    Stages and rollouts draw from their own child seeds, so any of them can be
    reproduced in isolation and the result never depends on execution order.
    """
    digest = hashlib.blake2b(digest_size=8)
    digest.update(str(int(master_seed)).encode())
    for key in keys:
        digest.update(b"\x1f")
        digest.update(str(key).encode())
    return int.from_bytes(digest.digest(), "big")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def draw_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))
