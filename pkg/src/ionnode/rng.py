"""Counter-based random streams.

Every random number in a simulation is a pure function of ``(key, counter)``:
the ``counter``-th output of a SplitMix64 generator seeded with ``key``.
Streams can therefore be jumped to any position in O(1), which is what lets
the compiled heralding kernel skip thousands of failed attempts and the
Python trial code replay the heralding attempt exactly.
"""

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z):
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64(key, counter):
    return mix64(key + (counter + 1) * GAMMA)


def to_unit(x):
    """Map a 64-bit integer to a double in [0, 1) using its top 53 bits."""
    return (x >> 11) * _INV53


def derive_key(*parts):
    """Fold integers into a 64-bit stream key.

    Used to build independent per-trial streams from (master seed, tags,
    trial index) so that scheduling never changes results.
    """
    h = 0x6A09E667F3BCC908
    for p in parts:
        h = mix64(((h + GAMMA) & MASK64) ^ (int(p) & MASK64))
    return h


class Stream:
    """Sequential view of a counter-based random stream.

    Implements the subset of :class:`numpy.random.Generator` used by the
    simulator (``random``, ``normal``, ``exponential``, ``integers``), so
    library functions accept either.
    """

    __slots__ = ("key", "counter")

    def __init__(self, key, counter=0):
        self.key = int(key) & MASK64
        self.counter = int(counter)

    def __repr__(self):
        return f"Stream(key={self.key:#018x}, counter={self.counter})"

    def random(self):
        x = splitmix64(self.key, self.counter)
        self.counter += 1
        return to_unit(x)

    def take(self, n):
        return [self.random() for _ in range(n)]

    def normal(self, loc=0.0, scale=1.0):
        # Box-Muller; consumes exactly two draws
        u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log1p(-u1))
        return loc + scale * r * math.cos(2.0 * math.pi * u2)

    def exponential(self, scale=1.0):
        return -scale * math.log1p(-self.random())

    def integers(self, high):
        return min(int(self.random() * high), high - 1)

    def spawn(self, *tags):
        """Independent child stream keyed on this stream's key and ``tags``."""
        return Stream(derive_key(self.key, *tags))
