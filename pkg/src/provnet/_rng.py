"""Seeded per-simulation random substreams.

Each simulation draws from its own Philox-4x64 (10 rounds) generator whose
128-bit key is ``(seed XOR sim_index, seed)`` and whose counter starts at
``(0, 0, 0, stream)``. A simulation's draws therefore depend only on the
seed, its index and the stream tag, never on execution order.
"""

from numpy.random import Generator, Philox

MASK64 = (1 << 64) - 1

GLOBAL_STREAM = 1
LOCAL_STREAM = 2


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def substream(seed: int, index: int, stream: int) -> Generator:
    return Generator(Philox(key=[(seed ^ index) & MASK64, seed], counter=[0, 0, 0, stream]))
