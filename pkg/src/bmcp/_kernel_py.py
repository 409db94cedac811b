"""Pure-Python simulation kernel.

Reference implementation of the event-driven hot loop.  The compiled kernel
in ``bmcp._speedups`` mirrors this module operation for operation; the two
must produce bit-identical trajectories (pinned by the kernel-equivalence
tests), so any change here must be transcribed there.

Scheduling discipline: each clock object has at most one live entry in the
event queue.  Recovery clocks are scheduled while their site is infected,
directed-edge clocks while their source is infected, boost clocks whenever
the variant uses them.  Entries whose object became irrelevant after being
scheduled are discarded at pop time without effect, which reproduces the
graphical construction exactly (such rings change nothing).
"""

from __future__ import annotations

import heapq
import math

from .clocks import GOLDEN, MASK64, mix64, object_code, object_key

INF = math.inf

# run_until status codes
REACHED = 1
EXTINCT = 2
INVALID = 3
PAUSED = 4

# window boundary modes
MODE_CLOSED = 0
MODE_FINITE = 1
MODE_HALF_LINE = 2

# edge sentinels used when the configuration is empty
R_NONE = -(2**62)
L_NONE = 2**62

_INV53 = 1.0 / 9007199254740992.0


class PySimState:
    backend = "python"

    def __init__(self, seed, lam_i, eps, variant, lo, hi, mode, guard,
                 initial_sites, start_time=0.0, space_offset=0,
                 collect_edge_steps=False, collect_events=False):
        if lo > hi:
            raise ValueError("window must satisfy lo <= hi")
        self.seed = seed & MASK64
        self.lam_i = float(lam_i)
        self.eps = float(eps)
        self.variant = int(variant)
        self.lo = int(lo)
        self.hi = int(hi)
        self.mode = int(mode)
        self.guard = int(guard)
        self.space_offset = int(space_offset)
        self.now = float(start_time)
        self.start_time = float(start_time)

        self.width = self.hi - self.lo + 1
        self.n_site_objs = 3 * self.width
        self.frozen_end = self.lo + self.guard if mode == MODE_HALF_LINE else self.lo
        # guard band bounds for invalidation
        if mode == MODE_FINITE:
            self.inv_left_end = self.lo + self.guard      # sites < this are guard
            self.inv_right_start = self.hi - self.guard   # sites > this are guard
        elif mode == MODE_HALF_LINE:
            self.inv_left_end = self.lo                    # left band is frozen, not invalidating
            self.inv_right_start = self.hi - self.guard
        else:
            self.inv_left_end = self.lo
            self.inv_right_start = self.hi + 1

        nw = (self.width + 63) // 64
        self.words = [0] * nw
        self.count = 0
        self.r_edge = R_NONE
        self.l_edge = L_NONE

        n = self.n_site_objs + 2
        self.keys = [0] * n
        self.key_ok = [0] * n
        self.cur_idx = [0] * n
        self.cur_time = [0.0] * n
        self.pending = [0] * n
        self.heap: list[tuple[float, int]] = []

        self.pops = 0
        self.applied = 0
        self.extinction_time = None
        self.invalid_reason = None
        self.status = 0

        self.collect_edge_steps = collect_edge_steps
        self.edge_steps_t: list[float] = []
        self.edge_steps_r: list[int] = []
        self.edge_steps_l: list[int] = []
        self.collect_events = collect_events
        self.events: list[tuple[float, int, int, int]] = []

        self.s_t: list[float] = []
        self.s_r: list[int] = []
        self.s_l: list[int] = []
        self.s_count: list[int] = []
        self.s_maxr: list[int] = []
        self.s_minr: list[int] = []
        self.s_configs: list[list[int]] = []

        self.debug_validate_every = 0

        for s in initial_sites:
            if s < self.lo or s > self.hi:
                raise ValueError(f"initial site {s} outside window")
            k = s - self.lo
            w, b = k >> 6, k & 63
            if not (self.words[w] >> b) & 1:
                self.words[w] |= 1 << b
                self.count += 1
                if self.r_edge == R_NONE or s > self.r_edge:
                    self.r_edge = s
                if self.l_edge == L_NONE or s < self.l_edge:
                    self.l_edge = s
        if self.count == 0:
            raise ValueError("initial configuration must be nonempty")
        self.run_max_r = self.r_edge
        self.run_min_r = self.r_edge

        # schedule clocks for the initial configuration
        for s in self._infected_sites():
            if s < self.frozen_end:
                # frozen guard: no recovery; only edges into the live interior
                if self.lam_i > 0.0:
                    if s + 1 >= self.frozen_end and s + 1 <= self.hi:
                        self._schedule(3 * (s - self.lo) + 1, self.now)
                    if s - 1 >= self.frozen_end:
                        self._schedule(3 * (s - self.lo) + 2, self.now)
            else:
                self._schedule_site(s, self.now)
        if self.eps > 0.0:
            if self.variant >= 1:
                self._schedule(self.n_site_objs + 1, self.now)  # boost right
            if self.variant == 2 and self.mode != MODE_HALF_LINE:
                self._schedule(self.n_site_objs, self.now)      # boost left
        if self.collect_edge_steps:
            self.edge_steps_t.append(self.now)
            self.edge_steps_r.append(self.r_edge)
            self.edge_steps_l.append(self.l_edge)

    # -- bit helpers -----------------------------------------------------

    def _bit(self, site):
        k = site - self.lo
        return (self.words[k >> 6] >> (k & 63)) & 1

    def _infected_sites(self):
        out = []
        for w, word in enumerate(self.words):
            while word:
                b = (word & -word).bit_length() - 1
                out.append(self.lo + 64 * w + b)
                word &= word - 1
        return out

    def config_words(self):
        return list(self.words)

    def infected_sites(self):
        return self._infected_sites()

    def reset_running_extremes(self):
        """Re-anchor the running edge extremes (start of a measurement window)."""
        self.run_max_r = self.r_edge
        self.run_min_r = self.r_edge

    # -- clock streams ---------------------------------------------------

    def _rate(self, obj):
        if obj >= self.n_site_objs:
            return self.eps
        kind = obj % 3
        return 1.0 if kind == 0 else self.lam_i

    def _key(self, obj):
        if not self.key_ok[obj]:
            if obj >= self.n_site_objs:
                kind = 3 + (obj - self.n_site_objs)
                code = object_code(kind, 0)
            else:
                kind = obj % 3
                gsite = self.lo + obj // 3 + self.space_offset
                code = object_code(kind, gsite)
            self.keys[obj] = object_key(self.seed, code)
            self.key_ok[obj] = 1
        return self.keys[obj]

    def _schedule(self, obj, after):
        if self.pending[obj]:
            return
        key = self._key(obj)
        rate = self._rate(obj)
        idx = self.cur_idx[obj]
        t = self.cur_time[obj]
        while t <= after:
            idx += 1
            w = mix64((key + idx * GOLDEN) & MASK64)
            u = ((w >> 11) + 0.5) * _INV53
            t_new = t + (-math.log(u) / rate)
            if t_new <= t:
                t_new = math.nextafter(t, INF)
            t = t_new
        self.cur_idx[obj] = idx
        self.cur_time[obj] = t
        self.pending[obj] = 1
        heapq.heappush(self.heap, (t, obj))

    def _schedule_site(self, site, after):
        slot = site - self.lo
        self._schedule(3 * slot, after)
        if self.lam_i > 0.0:
            if site + 1 <= self.hi:
                self._schedule(3 * slot + 1, after)
            target = site - 1
            if target >= self.lo and not (self.mode == MODE_HALF_LINE and target < self.frozen_end):
                self._schedule(3 * slot + 2, after)

    # -- state changes ---------------------------------------------------

    def _log_edges(self, t):
        if self.collect_edge_steps:
            self.edge_steps_t.append(t)
            self.edge_steps_r.append(self.r_edge)
            self.edge_steps_l.append(self.l_edge)

    def _scan_down(self, site):
        s = site
        while s >= self.lo:
            if self._bit(s):
                return s
            s -= 1
        return R_NONE

    def _scan_up(self, site):
        s = site
        while s <= self.hi:
            if self._bit(s):
                return s
            s += 1
        return L_NONE

    def _infect(self, site, t, kind, source):
        # no-op when target is outside the window (closed mode) or infected
        if site < self.lo or site > self.hi:
            if self.mode != MODE_CLOSED:
                self.invalid_reason = "window_overflow"
            return
        if self._bit(site):
            return
        if site < self.inv_left_end or site > self.inv_right_start:
            self.invalid_reason = "window_overflow"
            return
        k = site - self.lo
        self.words[k >> 6] |= 1 << (k & 63)
        self.count += 1
        self.applied += 1
        changed = False
        if site > self.r_edge or self.r_edge == R_NONE:
            self.r_edge = site
            changed = True
            if site > self.run_max_r:
                self.run_max_r = site
        if site < self.l_edge or self.l_edge == L_NONE:
            self.l_edge = site
            changed = True
        if changed:
            self._log_edges(t)
        if self.collect_events:
            self.events.append((t, kind, source, site))
        self._schedule_site(site, t)

    def _recover(self, site, t):
        k = site - self.lo
        self.words[k >> 6] &= ~(1 << (k & 63))
        self.count -= 1
        self.applied += 1
        changed = False
        if self.count == 0:
            self.r_edge = R_NONE
            self.l_edge = L_NONE
            self.extinction_time = t
            changed = True
        else:
            if site == self.r_edge:
                self.r_edge = self._scan_down(site - 1)
                changed = True
                if self.r_edge < self.run_min_r:
                    self.run_min_r = self.r_edge
            if site == self.l_edge:
                self.l_edge = self._scan_up(site + 1)
                changed = True
        if changed:
            self._log_edges(t)
        if self.collect_events:
            self.events.append((t, 0, site, site))

    def _record_sample(self, st, collect_config):
        self.s_t.append(st)
        self.s_r.append(self.r_edge)
        self.s_l.append(self.l_edge)
        self.s_count.append(self.count)
        self.s_maxr.append(self.run_max_r)
        self.s_minr.append(self.run_min_r)
        if collect_config:
            self.s_configs.append(list(self.words))

    def _validate_extremes(self):
        sites = self._infected_sites()
        if not sites:
            assert self.count == 0 and self.r_edge == R_NONE and self.l_edge == L_NONE
        else:
            assert self.count == len(sites)
            assert self.r_edge == sites[-1], (self.r_edge, sites[-1])
            assert self.l_edge == sites[0], (self.l_edge, sites[0])

    # -- main loop ---------------------------------------------------------

    def run_until(self, t_target, sample_times=None, collect_config=False,
                  max_pops=1 << 62, max_applied=1 << 62):
        if self.extinction_time is not None:
            raise RuntimeError("process already extinct; reset before stepping")
        if self.invalid_reason is not None:
            raise RuntimeError("trial already invalid")
        st = sample_times if sample_times is not None else []
        si = 0
        n_samples = len(st)
        heap = self.heap
        validate_every = self.debug_validate_every
        applied_stop = self.applied + max_applied
        while True:
            te = heap[0][0] if heap else INF
            if te > t_target:
                while si < n_samples and st[si] <= t_target:
                    self._record_sample(st[si], collect_config)
                    si += 1
                self.now = t_target
                self.status = REACHED
                return REACHED
            while si < n_samples and st[si] < te:
                self._record_sample(st[si], collect_config)
                si += 1
            te, obj = heapq.heappop(heap)
            self.now = te
            self.pops += 1
            if self.pops > max_pops:
                raise RuntimeError("event budget exhausted")
            self.pending[obj] = 0
            if obj >= self.n_site_objs:
                # global boost clocks: always rescheduled
                self._schedule(obj, te)
                if self.count > 0:
                    if obj == self.n_site_objs + 1 and self.variant >= 1:
                        self._infect(self.r_edge + 1, te, 4, self.r_edge)
                    elif obj == self.n_site_objs and self.variant == 2 and self.mode != MODE_HALF_LINE:
                        self._infect(self.l_edge - 1, te, 3, self.l_edge)
            else:
                kind = obj % 3
                site = self.lo + obj // 3
                if kind == 0:
                    self._recover(site, te)
                else:
                    if self._bit(site):
                        self._schedule(obj, te)
                        target = site + 1 if kind == 1 else site - 1
                        self._infect(target, te, kind, site)
            if validate_every and self.applied % validate_every == 0:
                self._validate_extremes()
            if self.extinction_time is not None:
                self.status = EXTINCT
                return EXTINCT
            if self.invalid_reason is not None:
                self.status = INVALID
                return INVALID
            if self.applied >= applied_stop:
                self.status = PAUSED
                return PAUSED
