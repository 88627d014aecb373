"""Counter-based random streams keyed by (seed, week, subsystem).

Any slice of a run can be regenerated in isolation and in any order, so
worker layout cannot influence the draws, and enabling or disabling a
coupling cannot shift another block's randomness.
"""

import numpy as np

SUBSYSTEMS = {
    "init": 0,
    "nk": 1,
    "seir": 2,
    "strain": 3,
    "vaccine": 4,
    "fiscal": 5,
    "resample": 6,
    "inject": 7,
}

_MAX_UINT64 = 2**64 - 1


def stream(seed, week, subsystem):
    """Fresh generator for one subsystem-week.

    The Philox key packs the run seed in the first word and
    (week << 8) | subsystem_id in the second, so streams never collide
    for week < 2**56.
    """
    if not 0 <= seed <= _MAX_UINT64:
        raise ValueError(f"seed must fit in uint64, got {seed}")
    if week < 0:
        raise ValueError(f"week must be non-negative, got {week}")
    sub_id = SUBSYSTEMS[subsystem]
    key = np.array([seed, (week << 8) | sub_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
