# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled binding search for the echo cascade.

Same encoding, successor order and results as ``_search_py``; see there
for the layout.  States live in a flat open-addressing table of fixed-width
byte keys so that tens of millions of them fit in memory.
"""
from libc.stdint cimport int32_t, uint8_t, uint32_t, uint64_t
from libc.stdlib cimport calloc, free, malloc, realloc
from libc.string cimport memcmp, memcpy, memset

cdef enum:
    MAXC = 25
    MAXP = 6
    MAXW = MAXC + 4
    MAXS = MAXP * MAXW
    MAXSENDS = 16
    DEAD = 7
    CNT = 0x07
    FLY = 0x38
    FLY_ONE = 0x08

cdef enum:
    ST_PASS = 0
    ST_FAIL = 1
    ST_INCONCLUSIVE = 2

PASS, FAIL, INCONCLUSIVE = ST_PASS, ST_FAIL, ST_INCONCLUSIVE


cdef struct Params:
    int n, f, k, K, R, levels, C, W, P, faulty, quorum, macro, S
    uint8_t all_spent


# ---------------------------------------------------------------- one process

cdef inline int popcount8(int m) noexcept nogil:
    cdef int c = 0
    while m:
        m &= m - 1
        c += 1
    return c


cdef int guards(const Params* p, uint8_t* b, int* sends) noexcept nogil:
    """Run the guards of one block to a fixpoint; returns the number of sends."""
    cdef int k = p.k, K = p.K, f = p.f, R = p.R, quorum = p.quorum, C = p.C
    cdef int bot = k, ns = 0, fired = 1, i, c, tot, mx, target, strong, weak, gate
    cdef uint8_t* A = b + C
    cdef uint8_t* SE = b + C + 1
    cdef uint8_t* SL = b + C + 2
    cdef uint8_t* D = b + C + 3
    while fired:
        fired = 0
        # G1
        for i in range(K):
            if not (SE[0] >> i) & 1 and (b[i] & CNT) >= f + 1:
                SE[0] |= 1 << i
                sends[ns] = i
                ns += 1
                fired = 1
        # G2
        if not (SE[0] >> bot) & 1:
            tot = 0
            mx = 0
            for i in range(K):
                c = b[i] & CNT
                tot += c
                if c > mx:
                    mx = c
            if tot - mx >= f + 1:
                SE[0] |= 1 << bot
                sends[ns] = bot
                ns += 1
                fired = 1
        # G3
        for i in range(K):
            if not (A[0] >> i) & 1 and (b[i] & CNT) >= quorum:
                A[0] |= 1 << i
                fired = 1
                if not SL[0] & 1:
                    SL[0] |= 1
                    sends[ns] = K + i
                    ns += 1
        gate = ((A[0] >> bot) & 1) or (A[0] & (A[0] - 1)) != 0
        # G4
        if not SL[0] & 2 and (A[0] & (A[0] - 1)) != 0:
            SL[0] |= 2
            sends[ns] = 2 * K + bot
            ns += 1
            fired = 1
        # G5
        if not SL[0] & 2:
            for i in range(K):
                if (b[K + i] & CNT) >= quorum:
                    SL[0] |= 2
                    sends[ns] = 2 * K + i
                    ns += 1
                    fired = 1
                    break
        # G6
        target = -1
        tot = 0
        for i in range(K):
            tot += b[2 * K + i] & CNT
        if tot >= quorum and gate:
            target = bot
        else:
            for i in range(k):
                if (b[2 * K + i] & CNT) >= quorum:
                    target = i
                    break
        if target >= 0:
            if R == 1:
                if not D[0]:
                    D[0] = 1 + ((target << 2) | (0 if target == bot else 1))
                    fired = 1
            elif not SL[0] & 4:
                SL[0] |= 4
                sends[ns] = 3 * K + target
                ns += 1
                fired = 1
        if R == 1:
            continue
        # G7
        if not SL[0] & 8:
            tot = 0
            target = -1
            for i in range(K):
                c = b[3 * K + i] & CNT
                tot += c
                if c >= quorum and target < 0:
                    target = i
            if target < 0 and tot >= quorum and gate:
                target = bot
            if target >= 0:
                SL[0] |= 8
                sends[ns] = 4 * K + target
                ns += 1
                fired = 1
        # G8
        if not D[0]:
            tot = 0
            strong = -1
            weak = -1
            for i in range(K):
                c = b[4 * K + i] & CNT
                tot += c
                if i < k:
                    if c >= quorum and strong < 0:
                        strong = i
                    if weak < 0 and c >= 1 and (b[3 * K + i] & CNT) >= f + 1:
                        weak = i
            if strong >= 0:
                D[0] = 1 + ((strong << 2) | 2)
            elif tot >= quorum and gate and weak >= 0:
                D[0] = 1 + ((weak << 2) | 1)
            elif (b[4 * K + bot] & CNT) >= quorum:
                D[0] = 1 + (bot << 2)
            if D[0]:
                fired = 1
    return ns


cdef inline int is_dead(const Params* p, const uint8_t* b, int L, int i) noexcept nogil:
    cdef int C = p.C
    cdef int sl = b[C + 2]
    if L == 0:
        return ((b[C + 1] >> p.k) & 1) and ((b[C] >> i) & 1)
    if L == 1:
        return sl & 2
    if L == 2:
        return b[C + 3] if p.R == 1 else sl & 4
    if L == 3:
        if not sl & 8:
            return 0
        return b[C + 3] or i == p.k or (b[L * p.K + i] & CNT) >= p.f + 1
    return b[C + 3]


cdef void bury(const Params* p, uint8_t* b) noexcept nogil:
    cdef int L, i, j
    for L in range(p.levels):
        for i in range(p.K):
            j = L * p.K + i
            if (b[j] & CNT) != DEAD and is_dead(p, b, L, i):
                b[j] = DEAD | p.all_spent


cdef void post(const Params* p, uint8_t* s, const int* sends, int ns) noexcept nogil:
    cdef int t, q, j
    for t in range(ns):
        for q in range(p.P):
            j = q * p.W + sends[t]
            if (s[j] & CNT) != DEAD:
                s[j] += FLY_ONE


cdef void canon(const Params* p, uint8_t* s, uint8_t* pids) noexcept nogil:
    """Insertion sort of the blocks, ties broken by pid."""
    cdef uint8_t tmp[MAXW]
    cdef int W = p.W, i, j, c
    cdef uint8_t tp
    for i in range(1, p.P):
        j = i
        while j > 0:
            c = memcmp(s + (j - 1) * W, s + j * W, W)
            if c < 0 or (c == 0 and pids[j - 1] < pids[j]):
                break
            memcpy(tmp, s + j * W, W)
            memcpy(s + j * W, s + (j - 1) * W, W)
            memcpy(s + (j - 1) * W, tmp, W)
            tp = pids[j]
            pids[j] = pids[j - 1]
            pids[j - 1] = tp
            j -= 1


cdef void decided(const Params* p, const uint8_t* s, int* count, int* mask) noexcept nogil:
    cdef int q, d, idx
    count[0] = 0
    mask[0] = 0
    for q in range(p.P):
        d = s[q * p.W + p.C + 3]
        if d:
            count[0] += 1
            idx = (d - 1) >> 2
            if idx < p.k:
                mask[0] |= 1 << idx


# ---------------------------------------------------------------- bursts

cdef struct Burst:
    uint8_t tc[MAXC]
    uint8_t tm[MAXC]


cdef struct Outcome:
    uint8_t flags[4]
    int ns
    int sends[MAXSENDS]


cdef void outcome(const Params* p, const uint8_t* blk, const uint8_t* am, Outcome* out) noexcept nogil:
    cdef uint8_t w[MAXW]
    cdef int cell
    memcpy(w, blk, p.W)
    for cell in range(p.C):
        w[cell] += am[cell]
    out.ns = guards(p, w, out.sends)
    memcpy(out.flags, w + p.C, 4)


cdef inline int same_outcome(const Outcome* a, const Outcome* b) noexcept nogil:
    if memcmp(a.flags, b.flags, 4) != 0 or a.ns != b.ns:
        return 0
    return memcmp(a.sends, b.sends, a.ns * sizeof(int)) == 0


cdef inline int burst_cmp(const Params* p, const Burst* a, const Burst* b) noexcept nogil:
    cdef int cell
    for cell in range(p.C):
        if a.tc[cell] != b.tc[cell]:
            return -1 if a.tc[cell] < b.tc[cell] else 1
        if a.tm[cell] != b.tm[cell]:
            return -1 if a.tm[cell] < b.tm[cell] else 1
    return 0


cdef struct Vec:
    # growable array of bursts
    Burst* items
    int n, cap


cdef int vec_push(Vec* v, const Burst* b) noexcept nogil:
    cdef Burst* ni
    if v.n == v.cap:
        v.cap = 64 if v.cap == 0 else v.cap * 2
        ni = <Burst*> realloc(v.items, v.cap * sizeof(Burst))
        if ni == NULL:
            return -1
        v.items = ni
    memcpy(&v.items[v.n], b, sizeof(Burst))
    v.n += 1
    return 0


cdef int vec_add_unique(const Params* p, Vec* v, const uint8_t* am) noexcept nogil:
    # amount vectors ride in ``tc``
    cdef Burst b
    cdef int i
    for i in range(v.n):
        if memcmp(v.items[i].tc, am, p.C) == 0:
            return 0
    memset(&b, 0, sizeof(Burst))
    memcpy(b.tc, am, p.C)
    return vec_push(v, &b)


cdef int firing(const Params* p, const uint8_t* blk, const Outcome* base, const uint8_t* am) noexcept nogil:
    """Fires, is quiet minus some last message, and needs every message."""
    cdef Outcome out, o2
    cdef uint8_t less[MAXC]
    cdef int cell, reachable = 0
    outcome(p, blk, am, &out)
    if same_outcome(&out, base):
        return 0
    memcpy(less, am, p.C)
    for cell in range(p.C):
        if am[cell]:
            less[cell] -= 1
            outcome(p, blk, less, &o2)
            less[cell] += 1
            if same_outcome(&o2, &out):
                return 0
            if same_outcome(&o2, base):
                reachable = 1
    return reachable


cdef int next_part(const Params* p, uint8_t* am, const uint8_t* avail, int lv) noexcept nogil:
    """Odometer over the amounts of one level; 0 once it wraps to zero."""
    cdef int i, cell
    for i in range(p.K):
        cell = lv * p.K + i
        if am[cell] < avail[cell]:
            am[cell] += 1
            return 1
        am[cell] = 0
    return 0


cdef int gated_ok(const Params* p, const uint8_t* blk, const Outcome* base, const uint8_t* am, int lv) noexcept nogil:
    cdef Outcome o
    cdef int i, have, total = 0, any_ = 0
    for i in range(p.K):
        total += (blk[lv * p.K + i] & CNT) + am[lv * p.K + i]
        any_ |= am[lv * p.K + i]
    if not any_:
        return 0
    outcome(p, blk, am, &o)
    if not same_outcome(&o, base):
        return 0
    if total == p.quorum:
        return 1
    for i in range(p.K):
        if not am[lv * p.K + i]:
            continue
        have = (blk[lv * p.K + i] & CNT) + am[lv * p.K + i]
        if lv == 3 and i < p.k and have == p.f + 1:
            continue
        if lv == 4 and i < p.k and have == 1:
            continue
        return 0
    return 1


cdef int split_rec(const Params* p, const uint8_t* blk, const uint8_t* am, int cell,
                   Burst* cur, Vec* out) noexcept nogil:
    cdef int a, x, copies, spare, fm, c, lo, j, clash
    if cell == p.C:
        return vec_push(out, cur)
    a = am[cell]
    if not a:
        cur.tc[cell] = 0
        cur.tm[cell] = 0
        return split_rec(p, blk, am, cell + 1, cur, out)
    x = blk[cell]
    copies = (x & FLY) >> 3
    spare = (~(x >> 6)) & ((1 << p.faulty) - 1)
    for fm in range(spare + 1):
        if (fm & spare) != fm:
            continue
        c = a - popcount8(fm)
        if c < 0 or c > copies:
            continue
        if fm and cell >= p.K:
            # above ECHO a faulty sender gets one value per level
            lo = cell - cell % p.K
            clash = 0
            for j in range(lo, cell):
                if cur.tm[j] & fm:
                    clash = 1
            if clash:
                continue
        cur.tc[cell] = c
        cur.tm[cell] = fm
        if split_rec(p, blk, am, cell + 1, cur, out) < 0:
            return -1
    cur.tc[cell] = 0
    cur.tm[cell] = 0
    return 0


cdef int bursts(const Params* p, const uint8_t* blk, Vec* out) noexcept nogil:
    """Firing bursts of one block, sorted; see the twin for the argument."""
    cdef uint8_t avail[MAXC]
    cdef uint8_t am[MAXC]
    cdef uint8_t w[MAXW]
    cdef int dummy[MAXSENDS]
    cdef Outcome base
    cdef Vec found, openers
    cdef Vec gated[3]
    cdef int idx[3]
    cdef int cell, x, lv, i, j, rc = 0, nl, more, anyx
    cdef Burst cur, tmpb
    memset(&found, 0, sizeof(Vec))
    memset(&openers, 0, sizeof(Vec))
    memset(gated, 0, sizeof(gated))
    for cell in range(p.C):
        x = blk[cell]
        avail[cell] = 0
        if (x & CNT) != DEAD:
            avail[cell] = ((x & FLY) >> 3) + popcount8((~(x >> 6)) & ((1 << p.faulty) - 1))
    memset(am, 0, MAXC)
    outcome(p, blk, am, &base)
    for lv in range(p.levels):
        while next_part(p, am, avail, lv):
            if firing(p, blk, &base, am):
                if vec_add_unique(p, &found, am) < 0:
                    rc = -1
                    break
                if lv == 0:
                    memcpy(w, blk, p.W)
                    for i in range(p.K):
                        w[i] += am[i]
                    guards(p, w, dummy)
                    if w[p.C] != blk[p.C] and vec_add_unique(p, &openers, am) < 0:
                        rc = -1
                        break
            elif lv >= 2 and gated_ok(p, blk, &base, am, lv):
                if vec_add_unique(p, &gated[lv - 2], am) < 0:
                    rc = -1
                    break
        memset(am, 0, MAXC)
        if rc < 0:
            break
    # an approval can open the gate and let higher sums fire in the same cascade
    nl = p.levels - 2
    if rc == 0 and openers.n and nl > 0:
        for i in range(openers.n):
            for j in range(nl):
                idx[j] = -1
            while True:
                # odometer over (nothing or one gated vector) per level
                more = 0
                for j in range(nl):
                    if idx[j] + 1 < gated[j].n:
                        idx[j] += 1
                        more = 1
                        break
                    idx[j] = -1
                if not more:
                    break
                memcpy(am, openers.items[i].tc, p.C)
                anyx = 0
                for j in range(nl):
                    if idx[j] >= 0:
                        anyx = 1
                        for cell in range(p.C):
                            am[cell] += gated[j].items[idx[j]].tc[cell]
                if anyx and firing(p, blk, &base, am):
                    if vec_add_unique(p, &found, am) < 0:
                        rc = -1
                        break
            if rc < 0:
                break
    out.n = 0
    memset(&cur, 0, sizeof(Burst))
    if rc == 0:
        for i in range(found.n):
            if split_rec(p, blk, found.items[i].tc, 0, &cur, out) < 0:
                rc = -1
                break
    free(found.items)
    free(openers.items)
    for j in range(3):
        free(gated[j].items)
    if rc < 0:
        return -1
    # insertion sort by the per-cell vector
    for i in range(1, out.n):
        j = i
        while j > 0 and burst_cmp(p, &out.items[j - 1], &out.items[j]) > 0:
            memcpy(&tmpb, &out.items[j], sizeof(Burst))
            memcpy(&out.items[j], &out.items[j - 1], sizeof(Burst))
            memcpy(&out.items[j - 1], &tmpb, sizeof(Burst))
            j -= 1
    return 0


cdef int singles(const Params* p, const uint8_t* blk, Vec* out) noexcept nogil:
    cdef Burst m
    cdef int cell, x, s
    out.n = 0
    for cell in range(p.C):
        x = blk[cell]
        if (x & CNT) == DEAD:
            continue
        if x & FLY:
            memset(&m, 0, sizeof(Burst))
            m.tc[cell] = 1
            if vec_push(out, &m) < 0:
                return -1
        for s in range(p.faulty):
            if not (x >> (6 + s)) & 1:
                memset(&m, 0, sizeof(Burst))
                m.tm[cell] = 1 << s
                if vec_push(out, &m) < 0:
                    return -1
    return 0


cdef void apply_burst(const Params* p, uint8_t* s, int q, const Burst* bu) noexcept nogil:
    cdef int W = p.W, K = p.K, o = q * W, cell, c, m, j, lo, i, ns
    cdef int sends[MAXSENDS]
    for cell in range(p.C):
        c = bu.tc[cell]
        m = bu.tm[cell]
        if not (c or m):
            continue
        j = o + cell
        s[j] = s[j] + c - c * FLY_ONE + popcount8(m)
        if m:
            if cell < K:
                s[j] |= m << 6
            else:
                lo = o + cell - cell % K
                for i in range(K):
                    s[lo + i] |= m << 6
    ns = guards(p, s + o, sends)
    post(p, s, sends, ns)
    bury(p, s + o)


# ---------------------------------------------------------------- state table

cdef struct Table:
    uint8_t* keys
    uint8_t* vals     # 0 empty, 1 undecided, 2 | mask << 2 decided
    size_t cap, count
    int kw


cdef inline uint64_t hash_key(const uint8_t* key, int kw) noexcept nogil:
    cdef uint64_t h = 1469598103934665603ULL
    cdef int i
    for i in range(kw):
        h ^= key[i]
        h *= 1099511628211ULL
    h ^= h >> 29
    h *= 0xbf58476d1ce4e5b9ULL
    h ^= h >> 32
    return h


cdef size_t find(Table* t, const uint8_t* key) noexcept nogil:
    cdef size_t mask = t.cap - 1
    cdef size_t i = hash_key(key, t.kw) & mask
    while t.vals[i] and memcmp(t.keys + i * t.kw, key, t.kw) != 0:
        i = (i + 1) & mask
    return i


cdef int grow_table(Table* t) noexcept nogil:
    cdef size_t old_cap = t.cap, i, j
    cdef uint8_t* ok = t.keys
    cdef uint8_t* ov = t.vals
    t.cap = old_cap * 2
    t.keys = <uint8_t*> malloc(t.cap * t.kw)
    t.vals = <uint8_t*> calloc(t.cap, 1)
    if t.keys == NULL or t.vals == NULL:
        return -1
    for i in range(old_cap):
        if ov[i]:
            j = find(t, ok + i * t.kw)
            memcpy(t.keys + j * t.kw, ok + i * t.kw, t.kw)
            t.vals[j] = ov[i]
    free(ok)
    free(ov)
    return 0


cdef int put(Table* t, const uint8_t* key, uint8_t val) noexcept nogil:
    cdef size_t i
    if (t.count + 1) * 10 > t.cap * 7:
        if grow_table(t) < 0:
            return -1
    i = find(t, key)
    if not t.vals[i]:
        memcpy(t.keys + i * t.kw, key, t.kw)
        t.count += 1
    t.vals[i] = val
    return 0


cdef inline int get(Table* t, const uint8_t* key) noexcept nogil:
    return t.vals[find(t, key)]


# ---------------------------------------------------------------- burst cache
# Bursts depend on one block only and blocks recur across many global
# states, so they are memoised per block.  The cache is simply cleared
# when full.

cdef enum:
    CACHE_SLOTS = 1 << 20
    CACHE_BURSTS = 1 << 21


cdef struct Cache:
    uint8_t* keys
    uint32_t* start
    int32_t* cnt      # -1 empty
    size_t used
    Vec arena


cdef int cache_init(Cache* c, int W) noexcept nogil:
    c.keys = <uint8_t*> malloc(<size_t> CACHE_SLOTS * W)
    c.start = <uint32_t*> malloc(CACHE_SLOTS * sizeof(uint32_t))
    c.cnt = <int32_t*> malloc(CACHE_SLOTS * sizeof(int32_t))
    memset(&c.arena, 0, sizeof(Vec))
    c.used = 0
    if c.keys == NULL or c.start == NULL or c.cnt == NULL:
        return -1
    memset(c.cnt, 0xff, CACHE_SLOTS * sizeof(int32_t))
    return 0


cdef void cache_free(Cache* c) noexcept nogil:
    free(c.keys)
    free(c.start)
    free(c.cnt)
    free(c.arena.items)


cdef int cached_bursts(const Params* p, Cache* c, const uint8_t* blk, Vec* out) noexcept nogil:
    cdef size_t i = hash_key(blk, p.W) & (CACHE_SLOTS - 1)
    cdef int j
    while c.cnt[i] >= 0:
        if memcmp(c.keys + i * p.W, blk, p.W) == 0:
            out.n = 0
            for j in range(c.cnt[i]):
                if vec_push(out, &c.arena.items[c.start[i] + j]) < 0:
                    return -1
            return 0
        i = (i + 1) & (CACHE_SLOTS - 1)
    if bursts(p, blk, out) < 0:
        return -1
    if (c.used + 1) * 10 > CACHE_SLOTS * 7 or c.arena.n + out.n > CACHE_BURSTS:
        memset(c.cnt, 0xff, CACHE_SLOTS * sizeof(int32_t))
        c.used = 0
        c.arena.n = 0
        i = hash_key(blk, p.W) & (CACHE_SLOTS - 1)
    memcpy(c.keys + i * p.W, blk, p.W)
    c.start[i] = c.arena.n
    c.cnt[i] = out.n
    c.used += 1
    for j in range(out.n):
        if vec_push(&c.arena, &out.items[j]) < 0:
            return -1
    return 0


# ---------------------------------------------------------------- search

cdef struct Frame:
    uint8_t state[MAXS]
    uint8_t pids[MAXP]
    Vec moves        # candidate bursts of the current slot
    int slot         # current slot, -1 before the first
    int next         # next burst index within ``moves``
    int mask, count
    int chosen_pid
    Burst chosen


cdef int advance(const Params* p, Cache* cache, Frame* fr) noexcept nogil:
    """Load the bursts of the next distinct slot; 0 when exhausted."""
    cdef int q
    while True:
        q = fr.slot + 1
        while q < p.P and q > 0 and memcmp(fr.state + (q - 1) * p.W, fr.state + q * p.W, p.W) == 0:
            q += 1  # same block as the previous slot: symmetric successors
        if q >= p.P:
            return 0
        fr.slot = q
        fr.next = 0
        if p.macro:
            if cached_bursts(p, cache, fr.state + q * p.W, &fr.moves) < 0:
                return -1
        else:
            if singles(p, fr.state + q * p.W, &fr.moves) < 0:
                return -1
        if fr.moves.n:
            return 1


cdef void initial(const Params* p, const int* inputs, uint8_t* s, uint8_t* pids) noexcept nogil:
    cdef int q, ns
    cdef int sends[MAXSENDS]
    memset(s, 0, p.S)
    for q in range(p.P):
        s[q * p.W + p.C + 1] = 1 << inputs[q]
        pids[q] = q
    for q in range(p.P):
        sends[0] = inputs[q]
        post(p, s, sends, 1)
    for q in range(p.P):
        ns = guards(p, s + q * p.W, sends)
        post(p, s, sends, ns)
    for q in range(p.P):
        bury(p, s + q * p.W)
    canon(p, s, pids)


def explore_echo(int n, int f, int k, int R, inputs, int faulty, long long max_states, bint macro=True):
    """Run the search; returns (status, states, locked, witness path).

    Same contract as the pure-Python twin.
    """
    cdef Params p
    cdef int P = len(inputs)
    if n > 6 or faulty > 2 or P > MAXP or k > 4 or R not in (1, 2):
        raise ValueError("compact search supports n <= 6, |V| <= 4 and at most 2 faulty senders")
    p.n = n
    p.f = f
    p.k = k
    p.K = k + 1
    p.R = R
    p.levels = 3 if R == 1 else 5
    p.C = p.levels * p.K
    p.W = p.C + 4
    p.P = P
    p.S = P * p.W
    p.faulty = faulty
    p.quorum = n - f
    p.macro = macro
    p.all_spent = ((1 << faulty) - 1) << 6
    cdef int c_inputs[MAXP]
    cdef int i
    for i in range(P):
        c_inputs[i] = inputs[i]

    cdef Table t
    t.kw = p.S
    t.cap = 1 << 16
    t.count = 0
    t.keys = <uint8_t*> malloc(t.cap * t.kw)
    t.vals = <uint8_t*> calloc(t.cap, 1)
    if t.keys == NULL or t.vals == NULL:
        raise MemoryError()

    cdef Cache cache
    if cache_init(&cache, p.W) < 0:
        cache_free(&cache)
        free(t.keys)
        free(t.vals)
        raise MemoryError()

    cdef int cap_frames = 256
    cdef Frame* frames = <Frame*> calloc(cap_frames, sizeof(Frame))
    cdef int depth = 0
    cdef Frame* fr
    cdef Frame* nf
    cdef Frame* grown
    cdef uint8_t nxt[MAXS]
    cdef uint8_t npids[MAXP]
    cdef int count, mask, known, r, status = ST_PASS, err = 0, j
    cdef long long locked_counts[16]
    memset(locked_counts, 0, sizeof(locked_counts))

    fr = &frames[0]
    initial(&p, c_inputs, fr.state, fr.pids)
    decided(&p, fr.state, &count, &mask)
    fr.count = count
    fr.mask = mask
    fr.slot = -1
    fr.next = 0
    put(&t, fr.state, 1 if not count else 2 | (mask << 2))
    depth = 1

    with nogil:
        while depth:
            fr = &frames[depth - 1]
            if fr.count and (fr.mask & (fr.mask - 1)):
                r = 0  # saturated: two branches already reachable
            elif fr.slot >= 0 and fr.next < fr.moves.n:
                r = 1
            else:
                r = advance(&p, &cache, fr)
                if r < 0:
                    err = 1
                    break
            if not r:
                # subtree done
                if fr.count:
                    put(&t, fr.state, 2 | (fr.mask << 2))
                    if depth > 1 and frames[depth - 2].count:
                        frames[depth - 2].mask |= fr.mask
                    if fr.count == 1:
                        locked_counts[fr.mask] += 1
                        if fr.mask & (fr.mask - 1):
                            status = ST_FAIL
                            break
                depth -= 1
                continue
            memcpy(nxt, fr.state, p.S)
            memcpy(npids, fr.pids, p.P)
            apply_burst(&p, nxt, fr.slot, &fr.moves.items[fr.next])
            canon(&p, nxt, npids)
            fr.chosen_pid = fr.pids[fr.slot]
            memcpy(&fr.chosen, &fr.moves.items[fr.next], sizeof(Burst))
            fr.next += 1
            decided(&p, nxt, &count, &mask)
            known = get(&t, nxt)
            if known:
                if count:
                    fr.mask |= known >> 2
                continue
            if <long long> t.count >= max_states:
                status = ST_INCONCLUSIVE
                break
            if put(&t, nxt, 1 if not count else 2 | (mask << 2)) < 0:
                err = 1
                break
            if depth == cap_frames:
                grown = <Frame*> realloc(frames, 2 * cap_frames * sizeof(Frame))
                if grown == NULL:
                    err = 1
                    break
                frames = grown
                memset(frames + cap_frames, 0, cap_frames * sizeof(Frame))
                cap_frames *= 2
            nf = &frames[depth]
            memcpy(nf.state, nxt, p.S)
            memcpy(nf.pids, npids, p.P)
            nf.count = count
            nf.mask = mask
            nf.slot = -1
            nf.next = 0
            nf.moves.n = 0
            depth += 1

    # witness: the bursts chosen on the way down to the failing frame
    path = []
    if status != ST_PASS and not err:
        for j in range(depth - 1):
            fr = &frames[j]
            path.append((fr.chosen_pid, (tuple(fr.chosen.tc[i] for i in range(p.C)),
                                         tuple(fr.chosen.tm[i] for i in range(p.C)))))
    states = t.count
    for j in range(cap_frames):
        free(frames[j].moves.items)
    free(frames)
    cache_free(&cache)
    free(t.keys)
    free(t.vals)
    if err:
        raise MemoryError("binding search ran out of memory")
    locked = {m: int(locked_counts[m]) for m in range(16) if locked_counts[m]}
    return status, states, locked, path
