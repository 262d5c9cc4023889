"""Counter-based random numbers (Philox4x32-10), vectorized over numpy arrays.

Every variate is a pure function of ``(seed, stream_id, counter)``, so an
ensemble can be generated in any order, in any number of chunks, on any
number of threads, and still come out bit-identical.

Layout of one Philox block: the 128-bit counter is
``(counter_lo, counter_hi, stream_lo, stream_hi)`` and the 64-bit key is the
seed.  A block yields four 32-bit words, which are packed into two doubles
in the open interval (0, 1).
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import UsageError

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53

UINT64_MAX = 2 ** 64 - 1


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : array_like of uint32, shape (..., 4)
    key : array_like of uint32, shape (..., 2)
        Broadcast against ``counter``.
    rounds : int
        Number of rounds; 10 is the standard strength.

    Returns
    -------
    numpy.ndarray of uint32, shape (..., 4)
    """
    counter = np.asarray(counter, dtype=np.uint64)
    key = np.asarray(key, dtype=np.uint64)
    c0, c1, c2, c3 = (counter[..., i] for i in range(4))
    k0, k1 = key[..., 0], key[..., 1]
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    return np.stack(np.broadcast_arrays(c0, c1, c2, c3), axis=-1).astype(np.uint32)


def _split64(values):
    values = np.asarray(values, dtype=np.uint64)
    return values & _MASK32, values >> _SHIFT32


def uniform_pair(seed, stream_ids, counters):
    """Two independent U(0, 1) arrays for each ``(stream_id, counter)`` cell.

    ``stream_ids`` and ``counters`` broadcast against each other; ``seed`` is a
    scalar.  Values never hit 0 or 1 exactly.
    """
    seed = _check_u64(seed, "seed")
    stream_ids, counters = np.broadcast_arrays(
        np.asarray(stream_ids, dtype=np.uint64), np.asarray(counters, dtype=np.uint64))
    s_lo, s_hi = _split64(stream_ids)
    n_lo, n_hi = _split64(counters)
    k_lo, k_hi = _split64(np.uint64(seed))

    # inline the block function on separate word arrays to avoid stacking
    c0, c1, c2, c3 = n_lo, n_hi, s_lo, s_hi
    k0, k1 = k_lo, k_hi
    for r in range(10):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    w0 = ((c1 << _SHIFT32) | c0) >> _SHIFT11
    w1 = ((c3 << _SHIFT32) | c2) >> _SHIFT11
    u0 = (w0.astype(np.float64) + 0.5) * _TWO_M53
    u1 = (w1.astype(np.float64) + 0.5) * _TWO_M53
    return u0, u1


def _check_u64(value, name):
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an unsigned 64-bit integer, got {value!r}") from None
    if not 0 <= value <= UINT64_MAX:
        raise UsageError(f"{name} must be in [0, 2**64), got {value}")
    return value


@dataclass(frozen=True)
class RandomStream:
    """Immutable handle on one counter-based stream.

    Draws never mutate the stream; use :meth:`advance` to move past the
    counters already consumed.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            object.__setattr__(self, name, _check_u64(getattr(self, name), name))

    def advance(self, n=1):
        return replace(self, counter=self.counter + int(n))

    def spawn(self, stream_id):
        """Same seed, fresh stream, counter reset to zero."""
        return RandomStream(self.seed, stream_id, 0)

    def uniforms(self, size=None):
        """Uniform pair(s) at counters ``counter, counter + 1, ...``.

        Returns two floats if ``size`` is None, else two arrays of that length.
        """
        if size is None:
            u0, u1 = uniform_pair(self.seed, self.stream_id, self.counter)
            return float(u0), float(u1)
        size = int(size)
        if self.counter + size - 1 > UINT64_MAX:
            raise UsageError("counter range overflows 64 bits")
        counters = np.arange(size, dtype=np.uint64) + np.uint64(self.counter)
        return uniform_pair(self.seed, self.stream_id, counters)
