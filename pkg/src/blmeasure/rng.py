"""Counter-based uniforms: value = hash(seed, index, counter, stream).

Every draw is a pure function of its coordinates, so a walk is reproduced
bit-for-bit no matter how samples are batched or split between workers.
"""

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(x):
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def bits(seed, index, counter, stream=0):
    with np.errstate(over="ignore"):
        s = _mix(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF) + _GOLD)
        s = _mix(s ^ (np.uint64(stream) * _GOLD + np.uint64(0x632BE59BD9B4E019)))
        i = np.asarray(index, np.uint64)
        c = np.asarray(counter, np.uint64)
        x = _mix(s ^ (i * _GOLD))
        return _mix(x + (c + np.uint64(1)) * _M2)


def uniform(seed, index, counter, stream=0):
    """Floats in [0, 1) with 53 random bits."""
    return (bits(seed, index, counter, stream) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
