"""Stateless counter-based random streams.

Every variate is a pure function of ``(seed, stream_id, counter)``, computed with
the Philox4x64-10 bijection.  A chain owns the stream ``stream_id = chain index``
and addresses its draws by ``(step, purpose, round)``, so the numbers a chain sees
do not depend on how chains are batched or split across threads.

Gaussian variates are produced by inverse-CDF transformation of open-interval
uniforms, one uniform per variate.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Purpose",
    "RngStream",
    "batch_normal",
    "batch_uniform",
    "philox4x64",
]

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)


class Purpose(IntEnum):
    """Counter tag separating the independent uses of a chain's stream."""

    INIT = 0
    FORWARD = 1
    PROPOSAL = 2
    ACCEPT = 3
    LMC = 4
    GENERIC = 5


def _mulhilo(a: np.ndarray, b: np.uint64) -> tuple[np.ndarray, np.ndarray]:
    a_lo = a & _MASK32
    a_hi = a >> _SHIFT32
    b_lo = b & _MASK32
    b_hi = b >> _SHIFT32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _SHIFT32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _SHIFT32) + (cross >> _SHIFT32)
    return hi, a * b


def philox4x64(counter, key, rounds: int = 10) -> np.ndarray:
    """Philox4x64 block function.

    Parameters
    ----------
    counter : array_like of uint64, shape (..., 4)
    key : array_like of uint64, shape (..., 2)
        Broadcast against ``counter``.
    rounds : int

    Returns
    -------
    ndarray of uint64, shape (..., 4)
    """
    counter = np.asarray(counter, dtype=np.uint64)
    key = np.asarray(key, dtype=np.uint64)
    shape = np.broadcast_shapes(counter.shape[:-1], key.shape[:-1])
    c0, c1, c2, c3 = (np.broadcast_to(counter[..., i], shape).copy() for i in range(4))
    k0 = np.broadcast_to(key[..., 0], shape).copy()
    k1 = np.broadcast_to(key[..., 1], shape).copy()
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(c0, _M0)
            hi1, lo1 = _mulhilo(c2, _M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=-1)


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # 53 high bits, shifted by half an ulp: values lie strictly inside (0, 1)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def batch_uniform(seed: int, stream_ids, size: int, *, step: int = 0,
                  purpose: int = Purpose.GENERIC, round: int = 0) -> np.ndarray:
    """Uniforms on (0, 1) for many streams at one counter position.

    Returns an array of shape ``(len(stream_ids), size)``; row ``i`` depends only on
    ``(seed, stream_ids[i], step, purpose, round)``.
    """
    ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
    n_blocks = -(-size // 4)
    key = np.empty((ids.size, 1, 2), dtype=np.uint64)
    key[:, 0, 0] = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    key[:, 0, 1] = ids
    ctr = np.zeros((1, n_blocks, 4), dtype=np.uint64)
    ctr[0, :, 0] = np.arange(n_blocks, dtype=np.uint64)
    ctr[0, :, 1] = np.uint64(round)
    ctr[0, :, 2] = np.uint64(step)
    ctr[0, :, 3] = np.uint64(int(purpose))
    bits = philox4x64(ctr, key).reshape(ids.size, n_blocks * 4)[:, :size]
    return _to_unit(bits)


def batch_normal(seed: int, stream_ids, size: int, *, step: int = 0,
                 purpose: int = Purpose.GENERIC, round: int = 0) -> np.ndarray:
    """Standard normal variates, inverse-CDF of :func:`batch_uniform`."""
    return ndtri(batch_uniform(seed, stream_ids, size, step=step,
                               purpose=purpose, round=round))


@dataclass(frozen=True)
class RngStream:
    """One chain's view of the counter-based generator."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def uniform(self, size: int, *, step: int = 0, purpose: int = Purpose.GENERIC,
                round: int = 0) -> np.ndarray:
        return batch_uniform(self.seed, [self.stream_id], size, step=step,
                             purpose=purpose, round=round)[0]

    def normal(self, size: int, *, step: int = 0, purpose: int = Purpose.GENERIC,
               round: int = 0) -> np.ndarray:
        return ndtri(self.uniform(size, step=step, purpose=purpose, round=round))

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)
