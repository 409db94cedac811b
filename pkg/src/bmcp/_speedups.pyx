# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled simulation kernel.

Mirrors ``bmcp._kernel_py`` operation for operation; the two kernels must
produce bit-identical trajectories (see tests/test_kernel_equivalence.py).
Any semantic change must be made in both.
"""

cimport cython

from cpython.mem cimport PyMem_Malloc, PyMem_Free
from libc.math cimport log, nextafter, INFINITY
from libc.stdint cimport uint64_t, int64_t, uint8_t

REACHED = 1
EXTINCT = 2
INVALID = 3
PAUSED = 4

MODE_CLOSED = 0
MODE_FINITE = 1
MODE_HALF_LINE = 2

cdef int64_t C_R_NONE = -(<int64_t>1 << 62)
cdef int64_t C_L_NONE = (<int64_t>1 << 62)

R_NONE = C_R_NONE
L_NONE = C_L_NONE

cdef double INV53 = 1.0 / 9007199254740992.0
cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t OBJ_SALT = <uint64_t>0x8BADF00DDEADBEEF

# change-mask bits returned by the state-change cores
cdef int CH_APPLIED = 1
cdef int CH_EDGES = 2
cdef int CH_EXTINCT = 4
cdef int CH_INVALID = 8


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z ^= z >> 30
    z *= <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z *= <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline uint64_t obj_key(uint64_t seed, uint64_t code) noexcept nogil:
    return mix64(seed ^ mix64(code ^ OBJ_SALT))


cdef struct HeapE:
    double t
    int64_t o


cdef struct Cursor:
    int64_t idx
    double t


cdef inline bint _less(HeapE a, HeapE b) noexcept nogil:
    return a.t < b.t or (a.t == b.t and a.o < b.o)


@cython.final
cdef class CySimState:
    cdef public double now
    cdef public double start_time
    cdef public long pops
    cdef public long applied
    cdef public int status
    cdef public long lo
    cdef public long hi
    cdef public long count
    cdef public long r_edge
    cdef public long l_edge
    cdef public long run_max_r
    cdef public long run_min_r
    cdef public int mode
    cdef public int variant
    cdef public int guard
    cdef public long space_offset
    cdef public long debug_validate_every
    cdef public bint collect_edge_steps
    cdef public bint collect_events
    cdef public list events
    cdef public list edge_steps_t
    cdef public list edge_steps_r
    cdef public list edge_steps_l
    cdef public list s_t
    cdef public list s_r
    cdef public list s_l
    cdef public list s_count
    cdef public list s_maxr
    cdef public list s_minr
    cdef public list s_configs

    cdef bint ext_flag
    cdef double ext_time
    cdef bint inv_flag

    cdef uint64_t seed
    cdef double lam_i
    cdef double eps
    cdef long width
    cdef long n_site_objs
    cdef long frozen_end
    cdef long inv_left_end
    cdef long inv_right_start

    cdef uint64_t* words
    cdef long n_words
    cdef uint64_t* keys
    cdef Cursor* cur
    cdef uint8_t* pending
    cdef HeapE* heap
    cdef long heap_n

    backend = "cython"

    def __cinit__(self, *args, **kwargs):
        self.words = NULL
        self.keys = NULL
        self.cur = NULL
        self.pending = NULL
        self.heap = NULL

    def __dealloc__(self):
        PyMem_Free(self.words)
        PyMem_Free(self.keys)
        PyMem_Free(self.cur)
        PyMem_Free(self.pending)
        PyMem_Free(self.heap)

    def __init__(self, seed, lam_i, eps, variant, lo, hi, mode, guard,
                 initial_sites, start_time=0.0, space_offset=0,
                 collect_edge_steps=False, collect_events=False):
        cdef long s, k, n, i
        if lo > hi:
            raise ValueError("window must satisfy lo <= hi")
        self.seed = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
        self.lam_i = lam_i
        self.eps = eps
        self.variant = variant
        self.lo = lo
        self.hi = hi
        self.mode = mode
        self.guard = guard
        self.space_offset = space_offset
        self.now = start_time
        self.start_time = start_time

        self.width = self.hi - self.lo + 1
        self.n_site_objs = 3 * self.width
        self.frozen_end = self.lo + self.guard if mode == 2 else self.lo
        if mode == 1:
            self.inv_left_end = self.lo + self.guard
            self.inv_right_start = self.hi - self.guard
        elif mode == 2:
            self.inv_left_end = self.lo
            self.inv_right_start = self.hi - self.guard
        else:
            self.inv_left_end = self.lo
            self.inv_right_start = self.hi + 1

        self.n_words = (self.width + 63) // 64
        self.words = <uint64_t*>PyMem_Malloc(self.n_words * sizeof(uint64_t))
        for i in range(self.n_words):
            self.words[i] = 0
        self.count = 0
        self.r_edge = C_R_NONE
        self.l_edge = C_L_NONE

        n = self.n_site_objs + 2
        self.keys = <uint64_t*>PyMem_Malloc(n * sizeof(uint64_t))
        self.cur = <Cursor*>PyMem_Malloc(n * sizeof(Cursor))
        self.pending = <uint8_t*>PyMem_Malloc(n * sizeof(uint8_t))
        self.heap = <HeapE*>PyMem_Malloc(n * sizeof(HeapE))
        for i in range(n):
            self.keys[i] = 0  # 0 doubles as the not-yet-derived sentinel
            self.cur[i].idx = 0
            self.cur[i].t = 0.0
            self.pending[i] = 0
        self.heap_n = 0

        self.pops = 0
        self.applied = 0
        self.ext_flag = False
        self.ext_time = 0.0
        self.inv_flag = False
        self.status = 0
        self.debug_validate_every = 0

        self.collect_edge_steps = collect_edge_steps
        self.edge_steps_t = []
        self.edge_steps_r = []
        self.edge_steps_l = []
        self.collect_events = collect_events
        self.events = []
        self.s_t = []
        self.s_r = []
        self.s_l = []
        self.s_count = []
        self.s_maxr = []
        self.s_minr = []
        self.s_configs = []

        for site in initial_sites:
            s = site
            if s < self.lo or s > self.hi:
                raise ValueError(f"initial site {s} outside window")
            k = s - self.lo
            if not (self.words[k >> 6] >> (k & 63)) & <uint64_t>1:
                self.words[k >> 6] |= (<uint64_t>1) << (k & 63)
                self.count += 1
                if self.r_edge == C_R_NONE or s > self.r_edge:
                    self.r_edge = s
                if self.l_edge == C_L_NONE or s < self.l_edge:
                    self.l_edge = s
        if self.count == 0:
            raise ValueError("initial configuration must be nonempty")
        self.run_max_r = self.r_edge
        self.run_min_r = self.r_edge

        for s in self._infected_list():
            if s < self.frozen_end:
                if self.lam_i > 0.0:
                    if s + 1 >= self.frozen_end and s + 1 <= self.hi:
                        self._schedule(3 * (s - self.lo) + 1, self.now)
                    if s - 1 >= self.frozen_end:
                        self._schedule(3 * (s - self.lo) + 2, self.now)
            else:
                self._schedule_site(s, self.now)
        if self.eps > 0.0:
            if self.variant >= 1:
                self._schedule(self.n_site_objs + 1, self.now)
            if self.variant == 2 and self.mode != 2:
                self._schedule(self.n_site_objs, self.now)
        if self.collect_edge_steps:
            self.edge_steps_t.append(self.now)
            self.edge_steps_r.append(self.r_edge)
            self.edge_steps_l.append(self.l_edge)

    # -- python-facing state ------------------------------------------------

    @property
    def extinction_time(self):
        return self.ext_time if self.ext_flag else None

    @property
    def invalid_reason(self):
        return "window_overflow" if self.inv_flag else None

    # -- helpers ----------------------------------------------------------

    cdef inline bint _bit(self, long site) noexcept nogil:
        cdef long k = site - self.lo
        return (self.words[k >> 6] >> (k & 63)) & <uint64_t>1

    cdef list _infected_list(self):
        cdef list out = []
        cdef long w, b
        cdef uint64_t word
        for w in range(self.n_words):
            word = self.words[w]
            while word:
                b = 0
                while not (word >> b) & <uint64_t>1:
                    b += 1
                out.append(self.lo + 64 * w + b)
                word &= word - 1
        return out

    def infected_sites(self):
        return self._infected_list()

    def _infected_sites(self):
        return self._infected_list()

    def config_words(self):
        return [int(self.words[i]) for i in range(self.n_words)]

    def reset_running_extremes(self):
        """Re-anchor the running edge extremes (start of a measurement window)."""
        self.run_max_r = self.r_edge
        self.run_min_r = self.r_edge

    # -- heap ---------------------------------------------------------------

    # 4-ary implicit heap with hole bubbling; pop order is the unique
    # (time, object) minimum, so heap arity never affects trajectories.

    cdef inline void _heap_push(self, double t, long o) noexcept nogil:
        cdef long i = self.heap_n
        cdef long parent
        cdef HeapE e
        e.t = t
        e.o = o
        self.heap_n += 1
        while i > 0:
            parent = (i - 1) >> 2
            if _less(e, self.heap[parent]):
                self.heap[i] = self.heap[parent]
                i = parent
            else:
                break
        self.heap[i] = e

    cdef inline void _heap_pop(self) noexcept nogil:
        cdef long n = self.heap_n - 1
        cdef HeapE last = self.heap[n]
        cdef long i = 0
        cdef long c, best, j, lim
        self.heap_n = n
        if n == 0:
            return
        while True:
            c = 4 * i + 1
            if c >= n:
                break
            best = c
            lim = c + 4
            if lim > n:
                lim = n
            j = c + 1
            while j < lim:
                if _less(self.heap[j], self.heap[best]):
                    best = j
                j += 1
            if _less(self.heap[best], last):
                self.heap[i] = self.heap[best]
                i = best
            else:
                break
        self.heap[i] = last

    # -- clock streams ---------------------------------------------------

    cdef inline double _rate(self, long obj) noexcept nogil:
        if obj >= self.n_site_objs:
            return self.eps
        if obj % 3 == 0:
            return 1.0
        return self.lam_i

    cdef inline uint64_t _key(self, long obj) noexcept nogil:
        cdef long kind, gsite
        cdef uint64_t code
        cdef uint64_t k = self.keys[obj]
        if k == 0:
            # 0 marks a not-yet-derived key; a genuine zero key is re-derived
            # harmlessly (derivation is idempotent)
            if obj >= self.n_site_objs:
                kind = 3 + (obj - self.n_site_objs)
                code = <uint64_t>kind
            else:
                kind = obj % 3
                gsite = self.lo + obj // 3 + self.space_offset
                code = (<uint64_t>(<int64_t>gsite) << 3) | <uint64_t>kind
            k = obj_key(self.seed, code)
            self.keys[obj] = k
        return k

    cdef void _schedule(self, long obj, double after) noexcept nogil:
        cdef uint64_t key, w
        cdef double rate, t, t_new, u
        cdef int64_t idx
        if self.pending[obj]:
            return
        key = self._key(obj)
        rate = self._rate(obj)
        idx = self.cur[obj].idx
        t = self.cur[obj].t
        while t <= after:
            idx += 1
            w = mix64(key + (<uint64_t>idx) * GOLDEN)
            u = (<double>(w >> 11) + 0.5) * INV53
            t_new = t + (-log(u) / rate)
            if t_new <= t:
                t_new = nextafter(t, INFINITY)
            t = t_new
        self.cur[obj].idx = idx
        self.cur[obj].t = t
        self.pending[obj] = 1
        self._heap_push(t, obj)

    cdef void _schedule_site(self, long site, double after) noexcept nogil:
        cdef long slot = site - self.lo
        cdef long target
        self._schedule(3 * slot, after)
        if self.lam_i > 0.0:
            if site + 1 <= self.hi:
                self._schedule(3 * slot + 1, after)
            target = site - 1
            if target >= self.lo and not (self.mode == 2 and target < self.frozen_end):
                self._schedule(3 * slot + 2, after)

    # -- state-change cores (nogil; logging handled by the caller) ----------

    cdef int _infect(self, long site, double t) noexcept nogil:
        cdef long k
        cdef int changed = 0
        if site < self.lo or site > self.hi:
            if self.mode != 0:
                self.inv_flag = True
                return CH_INVALID
            return 0
        if self._bit(site):
            return 0
        if site < self.inv_left_end or site > self.inv_right_start:
            self.inv_flag = True
            return CH_INVALID
        k = site - self.lo
        self.words[k >> 6] |= (<uint64_t>1) << (k & 63)
        self.count += 1
        self.applied += 1
        changed = CH_APPLIED
        if site > self.r_edge or self.r_edge == C_R_NONE:
            self.r_edge = site
            changed |= CH_EDGES
            if site > self.run_max_r:
                self.run_max_r = site
        if site < self.l_edge or self.l_edge == C_L_NONE:
            self.l_edge = site
            changed |= CH_EDGES
        self._schedule_site(site, t)
        return changed

    cdef int _recover(self, long site, double t) noexcept nogil:
        cdef long k = site - self.lo
        cdef int changed = CH_APPLIED
        self.words[k >> 6] &= ~((<uint64_t>1) << (k & 63))
        self.count -= 1
        self.applied += 1
        if self.count == 0:
            self.r_edge = C_R_NONE
            self.l_edge = C_L_NONE
            self.ext_flag = True
            self.ext_time = t
            changed |= CH_EDGES | CH_EXTINCT
        else:
            if site == self.r_edge:
                self.r_edge = self._scan_down(site - 1)
                changed |= CH_EDGES
                if self.r_edge < self.run_min_r:
                    self.run_min_r = self.r_edge
            if site == self.l_edge:
                self.l_edge = self._scan_up(site + 1)
                changed |= CH_EDGES
        return changed

    cdef long _scan_down(self, long site) noexcept nogil:
        cdef long s = site
        while s >= self.lo:
            if self._bit(s):
                return s
            s -= 1
        return C_R_NONE

    cdef long _scan_up(self, long site) noexcept nogil:
        cdef long s = site
        while s <= self.hi:
            if self._bit(s):
                return s
            s += 1
        return C_L_NONE

    cdef void _log_edges(self, double t):
        self.edge_steps_t.append(t)
        self.edge_steps_r.append(self.r_edge)
        self.edge_steps_l.append(self.l_edge)

    cdef void _record_sample(self, double st, bint collect_config):
        self.s_t.append(st)
        self.s_r.append(self.r_edge)
        self.s_l.append(self.l_edge)
        self.s_count.append(self.count)
        self.s_maxr.append(self.run_max_r)
        self.s_minr.append(self.run_min_r)
        if collect_config:
            self.s_configs.append(self.config_words())

    def _validate_extremes(self):
        sites = self._infected_list()
        if not sites:
            assert self.count == 0 and self.r_edge == C_R_NONE and self.l_edge == C_L_NONE
        else:
            last = sites[len(sites) - 1]
            assert self.count == len(sites)
            assert self.r_edge == last, (self.r_edge, last)
            assert self.l_edge == sites[0], (self.l_edge, sites[0])

    # -- main loop ---------------------------------------------------------

    def run_until(self, t_target, sample_times=None, collect_config=False,
                  max_pops=None, max_applied=None):
        cdef double tt = t_target
        cdef double te
        cdef long obj, kind, site, target, source, i
        cdef long si = 0, n_samples
        cdef double* st_arr = NULL
        cdef long c_max_pops = <long>((<int64_t>1 << 62)) if max_pops is None else <long>max_pops
        cdef long applied_stop
        cdef long validate_every = self.debug_validate_every
        cdef bint cc = collect_config
        cdef bint log_edges = self.collect_edge_steps
        cdef bint log_events = self.collect_events
        cdef int ch
        cdef list st_list

        if self.ext_flag:
            raise RuntimeError("process already extinct; reset before stepping")
        if self.inv_flag:
            raise RuntimeError("trial already invalid")
        if max_applied is None:
            applied_stop = <long>((<int64_t>1 << 62))
        else:
            applied_stop = self.applied + <long>max_applied

        st_list = list(sample_times) if sample_times is not None else []
        n_samples = len(st_list)
        if n_samples:
            st_arr = <double*>PyMem_Malloc(n_samples * sizeof(double))
            for i in range(n_samples):
                st_arr[i] = st_list[i]
        try:
            while True:
                te = self.heap[0].t if self.heap_n > 0 else INFINITY
                if te > tt:
                    while si < n_samples and st_arr[si] <= tt:
                        self._record_sample(st_arr[si], cc)
                        si += 1
                    self.now = tt
                    self.status = 1
                    return 1
                while si < n_samples and st_arr[si] < te:
                    self._record_sample(st_arr[si], cc)
                    si += 1
                obj = self.heap[0].o
                self._heap_pop()
                self.now = te
                self.pops += 1
                if self.pops > c_max_pops:
                    raise RuntimeError("event budget exhausted")
                self.pending[obj] = 0
                ch = 0
                kind = 0
                source = 0
                if obj >= self.n_site_objs:
                    self._schedule(obj, te)
                    if self.count > 0:
                        if obj == self.n_site_objs + 1 and self.variant >= 1:
                            kind = 4
                            source = self.r_edge
                            ch = self._infect(self.r_edge + 1, te)
                        elif obj == self.n_site_objs and self.variant == 2 and self.mode != 2:
                            kind = 3
                            source = self.l_edge
                            ch = self._infect(self.l_edge - 1, te)
                else:
                    kind = obj % 3
                    site = self.lo + obj // 3
                    if kind == 0:
                        source = site
                        ch = self._recover(site, te)
                    else:
                        if self._bit(site):
                            self._schedule(obj, te)
                            source = site
                            target = site + 1 if kind == 1 else site - 1
                            ch = self._infect(target, te)
                if ch & CH_EDGES:
                    if log_edges:
                        self._log_edges(te)
                if ch & CH_APPLIED:
                    if log_events:
                        if kind == 0:
                            self.events.append((te, 0, source, source))
                        elif kind == 1 or kind == 4:
                            self.events.append((te, kind, source, source + 1))
                        else:
                            self.events.append((te, kind, source, source - 1))
                    if validate_every and self.applied % validate_every == 0:
                        self._validate_extremes()
                if ch & CH_EXTINCT:
                    self.status = 2
                    return 2
                if ch & CH_INVALID:
                    self.status = 3
                    return 3
                if self.applied >= applied_stop:
                    self.status = 4
                    return 4
        finally:
            PyMem_Free(st_arr)
