"""Deterministic random streams built on SplitMix64.

Every stochastic draw in the lab comes from a stream seeded with
``derive_seed``: a pure function of the master seed plus the coordinates of
the draw site (iteration, candidate slot, run, purpose). There is no global
RNG state anywhere, which is what makes runs replayable and independent of
scheduling.

Seed coordinate conventions used across the package:

* purpose tags: 0=split, 1=sampling, 2=init, 3=shuffle, 4=policy-draw.
  Purpose tags are applied by the operation that consumes the stream
  (e.g. ``train`` derives its init and shuffle streams internally).
* candidate slot 0 means "no candidate" (base/checkpoint models);
  candidate j of an iteration uses slot j+1.
* run 0 is the simulation itself, run 1 is checkpoint-model training.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

PURPOSE_SPLIT = 0
PURPOSE_SAMPLE = 1
PURPOSE_INIT = 2
PURPOSE_SHUFFLE = 3
PURPOSE_POLICY = 4

RUN_MAIN = 0
RUN_CHECKPOINT = 1


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def splitmix64(value: int) -> int:
    """First output of a SplitMix64 stream seeded with ``value``."""
    return _mix((value + _GOLDEN) & MASK64)


def derive_seed(
    master: int,
    *,
    iteration: int = 0,
    candidate: int = 0,
    run: int = 0,
    purpose: int = 0,
) -> int:
    """Mix a master seed with draw-site coordinates into a stream seed.

    Absorption order (purpose, iteration, candidate, run) is fixed; changing
    it would silently re-seed every experiment.
    """
    seed = master & MASK64
    seed = splitmix64(seed ^ (purpose & MASK64))
    seed = splitmix64(seed ^ (iteration & MASK64))
    seed = splitmix64(seed ^ (candidate & MASK64))
    seed = splitmix64(seed ^ (run & MASK64))
    return seed


def repeat_seed(master: int, index: int) -> int:
    """Master seed for repeat ``index`` of an averaged experiment.

    Repeat 0 keeps the configured seed so single runs and repeats=1 agree.
    """
    if index == 0:
        return master & MASK64
    return splitmix64((master + index) & MASK64)


class SplitMix64:
    """SplitMix64 stream with the float/int helpers the lab needs.

    Bit-exact by construction: integer arithmetic plus the usual
    53-bit-mantissa float conversion.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64
        self._spare_normal: float | None = None

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform draw in [0, 1)."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def next_below(self, bound: int) -> int:
        """Unbiased uniform integer in [0, bound) via rejection."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            draw = self.next_uint64()
            if draw < limit:
                return draw % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def distinct_below(self, bound: int, count: int) -> list[int]:
        """``count`` distinct integers in [0, bound), in draw order."""
        if count > bound:
            raise ValueError(f"cannot draw {count} distinct values below {bound}")
        seen: set[int] = set()
        out: list[int] = []
        while len(out) < count:
            draw = self.next_below(bound)
            if draw not in seen:
                seen.add(draw)
                out.append(draw)
        return out

    def next_normal(self) -> float:
        """Standard normal draw (Box-Muller, pairs cached)."""
        if self._spare_normal is not None:
            value = self._spare_normal
            self._spare_normal = None
            return value
        u1 = 1.0 - self.next_float()  # (0, 1]; keeps log() finite
        u2 = self.next_float()
        radius = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = radius * math.sin(2.0 * math.pi * u2)
        return radius * math.cos(2.0 * math.pi * u2)
