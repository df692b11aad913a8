"""Seed derivation and small shared helpers."""

from __future__ import annotations

import numpy as np

_SEED_MOD = 2**31 - 1


def child_seed(master: int, *keys) -> int:
    """Derive an independent child seed from a master seed and a key path.

    Strings are folded through their UTF-8 bytes so textual keys ("fold",
    "candidate") produce distinct streams.  The derivation is pure: the same
    (master, keys) always yields the same seed, regardless of platform or
    worker count.
    """
    words = [int(master) & 0xFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            data = k.encode("utf-8")
            words.append(0x53)  # tag keeps "0" distinct from 0
            words.append(len(data))
            words.extend(data)
        else:
            words.append(0x49)
            words.append(int(k) & 0xFFFFFFFF)
    # SeedSequence ignores trailing zero words; a non-zero terminator keeps
    # (..., 0) distinct from (...,)
    words.append(len(keys) + 1)
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1)[0]) % _SEED_MOD


def rng_for(master: int, *keys) -> np.random.Generator:
    """Generator seeded from :func:`child_seed`."""
    return np.random.default_rng(child_seed(master, *keys))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, strictly inside (0, 1)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    # keep probabilities strictly inside the open interval
    return np.clip(out, 1e-15, 1.0 - 1e-15)


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    """Mean binary cross-entropy; probabilities are clipped away from {0, 1}."""
    p = np.clip(np.asarray(p, dtype=float), 1e-15, 1.0 - 1e-15)
    y = np.asarray(y, dtype=float)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
