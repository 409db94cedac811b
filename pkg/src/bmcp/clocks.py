"""Deterministic Poisson clock streams keyed by (seed, clock object, index).

Every clock object (per-site recovery, per-directed-edge infection, two
global edge boosts) owns an arrival stream that is a pure function of the
master seed and the object identity.  Replaying from a fresh cursor
reproduces identical times bit for bit, which is what lets coupled replicas
read the same clocks without storing realized events.

The generator is a keyed SplitMix64 stream: a 64-bit object key is derived
by avalanche-mixing the seed with the packed object id, and the i-th output
word is ``mix64(key + i * GOLDEN)``.  Words map to uniforms in (0, 1) and to
exponential inter-arrival increments.  The compiled kernel replicates this
arithmetic exactly; ``tests/test_kernel_equivalence.py`` pins the contract.

Note on the boost clocks: the boost is a separate global rate-eps clock
applied at the current edge location, not a per-edge rate increase at the
boundary edge.  The two constructions need not be distinguishable
distributionally, but only the global-clock form supports the exact
right-edge couplings, so that is what is implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_OBJ_SALT = 0x8BADF00DDEADBEEF
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# Clock object kinds.  Directed edge (x, x+1) is EDGE_RIGHT at x; (x, x-1)
# is EDGE_LEFT at x.  Boost kinds ignore their site (global objects).
KIND_RECOVERY = 0
KIND_EDGE_RIGHT = 1
KIND_EDGE_LEFT = 2
KIND_BOOST_LEFT = 3
KIND_BOOST_RIGHT = 4

KIND_NAMES = {
    KIND_RECOVERY: "recovery",
    KIND_EDGE_RIGHT: "edge_right",
    KIND_EDGE_LEFT: "edge_left",
    KIND_BOOST_LEFT: "boost_left",
    KIND_BOOST_RIGHT: "boost_right",
}


def mix64(z: int) -> int:
    """Stafford mix13 finalizer on 64 bits."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def trial_seed(master_seed: int, trial_index: int) -> int:
    """splitmix(master, trial_index): the documented per-trial seed rule."""
    return mix64((master_seed + (trial_index + 1) * GOLDEN) & MASK64)


def object_code(kind: int, site: int) -> int:
    """Pack a clock object id into 64 bits (boosts pin site to 0)."""
    if kind in (KIND_BOOST_LEFT, KIND_BOOST_RIGHT):
        site = 0
    return ((site << 3) | kind) & MASK64


def object_key(seed: int, code: int) -> int:
    return mix64((seed ^ mix64((code ^ _OBJ_SALT) & MASK64)) & MASK64)


def uniform_word(key: int, index: int) -> float:
    """Uniform in (0, 1), strictly, for arrival index >= 1."""
    w = mix64((key + index * GOLDEN) & MASK64)
    return ((w >> 11) + 0.5) * _INV53


def increment(key: int, index: int, rate: float) -> float:
    return -math.log(uniform_word(key, index)) / rate


class ZeroRateObject(Exception):
    """Raised when a zero-rate clock object is polled."""


@dataclass(frozen=True)
class ClockObjectId:
    kind: int
    site: int = 0

    @classmethod
    def recovery(cls, site: int) -> "ClockObjectId":
        return cls(KIND_RECOVERY, site)

    @classmethod
    def edge(cls, site: int, direction: int) -> "ClockObjectId":
        if direction == 1:
            return cls(KIND_EDGE_RIGHT, site)
        if direction == -1:
            return cls(KIND_EDGE_LEFT, site)
        raise ValueError("direction must be +1 or -1")

    @classmethod
    def boost_left(cls) -> "ClockObjectId":
        return cls(KIND_BOOST_LEFT, 0)

    @classmethod
    def boost_right(cls) -> "ClockObjectId":
        return cls(KIND_BOOST_RIGHT, 0)

    @property
    def code(self) -> int:
        return object_code(self.kind, self.site)


class ClockField:
    """Seed-keyed clock realization over the whole lattice.

    Cursors only track iteration position; they never affect values.
    ``rates`` maps kinds to rates: recovery 1, edges lambda_i, boosts eps.
    """

    def __init__(self, master_seed: int, lambda_i: float, eps: float, recovery_rate: float = 1.0):
        self.master_seed = master_seed & MASK64
        self.rates = {
            KIND_RECOVERY: recovery_rate,
            KIND_EDGE_RIGHT: lambda_i,
            KIND_EDGE_LEFT: lambda_i,
            KIND_BOOST_LEFT: eps,
            KIND_BOOST_RIGHT: eps,
        }
        self._cursors: dict[int, tuple[int, float]] = {}

    def rate_of(self, obj: ClockObjectId) -> float:
        return self.rates[obj.kind]

    def arrival(self, obj: ClockObjectId, index: int) -> float:
        """Random-access i-th arrival (1-based); equals the i-th sequential one."""
        rate = self.rate_of(obj)
        if rate <= 0.0:
            raise ZeroRateObject(f"{KIND_NAMES[obj.kind]} has rate 0")
        key = object_key(self.master_seed, obj.code)
        t = 0.0
        for i in range(1, index + 1):
            t_new = t + increment(key, i, rate)
            if t_new <= t:
                t_new = math.nextafter(t, math.inf)
            t = t_new
        return t

    def next_arrival(self, obj: ClockObjectId, after: float) -> float:
        """Smallest arrival strictly greater than ``after``; advances the cursor."""
        rate = self.rate_of(obj)
        if rate <= 0.0:
            raise ZeroRateObject(f"{KIND_NAMES[obj.kind]} has rate 0")
        key = object_key(self.master_seed, obj.code)
        idx, t = self._cursors.get(obj.code, (0, 0.0))
        if t > after:
            # Cursor overshot a rewound query; restart from scratch.
            idx, t = 0, 0.0
        while t <= after:
            idx += 1
            t_new = t + increment(key, idx, rate)
            if t_new <= t:
                t_new = math.nextafter(t, math.inf)
            t = t_new
        self._cursors[obj.code] = (idx, t)
        return t

    def reset_cursors(self):
        self._cursors.clear()

    def view(self, space_offset: int = 0, time_offset: float = 0.0) -> "ClockFieldView":
        return ClockFieldView(self, space_offset, time_offset)

    def arrivals_in_box(self, lo: int, hi: int, t0: float, t1: float,
                        max_events: int = 10**8) -> "SpaceTimeRecord":
        """Materialize every arrival touching sites [lo, hi] in [t0, t1].

        Recovery and edge objects of each site in the interval are included;
        the two global boost streams are carried separately.
        """
        if t0 >= t1:
            raise ValueError("need t0 < t1")
        expected = (hi - lo + 1) * (self.rates[KIND_RECOVERY] + 2 * self.rates[KIND_EDGE_RIGHT])
        expected = (expected + 2 * self.rates[KIND_BOOST_RIGHT]) * (t1 - t0)
        if expected > max_events:
            raise BoxTooLarge(f"expected ~{expected:.3g} events exceeds cap {max_events}")
        events = []
        for site in range(lo, hi + 1):
            for kind in (KIND_RECOVERY, KIND_EDGE_RIGHT, KIND_EDGE_LEFT):
                if self.rates[kind] <= 0.0:
                    continue
                obj = ClockObjectId(kind, site)
                for t in self._stream_between(obj, t0, t1):
                    events.append((t, obj.code, kind, site))
        boosts = []
        for kind in (KIND_BOOST_LEFT, KIND_BOOST_RIGHT):
            if self.rates[kind] <= 0.0:
                continue
            obj = ClockObjectId(kind, 0)
            for t in self._stream_between(obj, t0, t1):
                boosts.append((t, obj.code, kind, 0))
        events.sort(key=lambda e: (e[0], e[1]))
        boosts.sort(key=lambda e: (e[0], e[1]))
        return SpaceTimeRecord(lo=lo, hi=hi, t0=t0, t1=t1, events=events, boosts=boosts)

    def _stream_between(self, obj: ClockObjectId, t0: float, t1: float):
        rate = self.rate_of(obj)
        key = object_key(self.master_seed, obj.code)
        t = 0.0
        idx = 0
        while True:
            idx += 1
            t_new = t + increment(key, idx, rate)
            if t_new <= t:
                t_new = math.nextafter(t, math.inf)
            t = t_new
            if t > t1:
                return
            if t >= t0:
                yield t


class ClockFieldView:
    """Read-only translated window onto a parent field.

    The view's object (x, tau) resolves to the parent's (x + space_offset,
    tau + time_offset); arrivals seen through the view are the parent's
    arrivals shifted by -time_offset, restricted to tau >= 0.  Boost objects
    translate in time only.
    """

    def __init__(self, parent: ClockField, space_offset: int, time_offset: float):
        if time_offset < 0:
            raise ValueError("time_offset must be >= 0")
        self.parent = parent
        self.space_offset = space_offset
        self.time_offset = time_offset
        self._cursors: dict[int, tuple[int, float]] = {}

    def _resolve(self, obj: ClockObjectId) -> ClockObjectId:
        if obj.kind in (KIND_BOOST_LEFT, KIND_BOOST_RIGHT):
            return obj
        return ClockObjectId(obj.kind, obj.site + self.space_offset)

    def rate_of(self, obj: ClockObjectId) -> float:
        return self.parent.rate_of(obj)

    def next_arrival(self, obj: ClockObjectId, after: float) -> float:
        parent_obj = self._resolve(obj)
        rate = self.parent.rate_of(parent_obj)
        if rate <= 0.0:
            raise ZeroRateObject(f"{KIND_NAMES[obj.kind]} has rate 0")
        key = object_key(self.parent.master_seed, parent_obj.code)
        target = after + self.time_offset
        idx, t = self._cursors.get(parent_obj.code, (0, 0.0))
        if t > target:
            idx, t = 0, 0.0
        while t <= target:
            idx += 1
            t_new = t + increment(key, idx, rate)
            if t_new <= t:
                t_new = math.nextafter(t, math.inf)
            t = t_new
        self._cursors[parent_obj.code] = (idx, t)
        return t - self.time_offset


class BoxTooLarge(Exception):
    pass


@dataclass
class SpaceTimeRecord:
    """Realized clock events in a space-time box.

    ``events`` rows are (time, object_code, kind, site) sorted by
    (time, object_code); ``boosts`` carries the global boost arrivals with
    the same sorting.  Serialization is canonical, so records regenerated
    from the same seed are byte-identical.
    """

    lo: int
    hi: int
    t0: float
    t1: float
    events: list[tuple[float, int, int, int]]
    boosts: list[tuple[float, int, int, int]]

    def merged(self) -> list[tuple[float, int, int, int]]:
        out = self.events + self.boosts
        out.sort(key=lambda e: (e[0], e[1]))
        return out

    def serialize(self) -> bytes:
        lines = [f"box {self.lo} {self.hi} {self.t0!r} {self.t1!r}"]
        for t, code, kind, site in self.merged():
            lines.append(f"{t!r} {code} {kind} {site}")
        return "\n".join(lines).encode()

    def covers(self, lo: int, hi: int, t0: float, t1: float) -> bool:
        return self.lo <= lo and self.hi >= hi and self.t0 <= t0 and self.t1 >= t1
