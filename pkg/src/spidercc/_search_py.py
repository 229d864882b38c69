"""Binding search for the echo cascade over a compact state encoding.

This is the pure-Python twin of the compiled ``_search`` module; both
implement the same search and must return identical results.

Each running process is a block of ``C + 4`` bytes, where ``C`` is the
number of (level, value) cells (three levels for R = 1, five for R = 2,
value index ``k`` standing for ⊥).  Cell byte layout::

    bits 0-2  messages counted (7 marks a dead cell)
    bits 3-5  copies in flight to this process from correct senders
    bits 6-7  one bit per faulty sender: its menu entry is spent

followed by the approved set, the sent-ECHO set, the ECHO2..ECHO5 sent
flags and the decision (0 when undecided, else ``1 + (index << 2 | grade)``).

A cell is dead once no further delivery to it can change anything; its
count is replaced by the sentinel and its in-flight copies and menu
entries are dropped.  Together with sorting the blocks (processes are
interchangeable once awake, and machines only count messages) this gives
the canonical key used for memoisation.
"""
from __future__ import annotations

from itertools import product

DEAD = 7
CNT = 0x07
FLY = 0x38
FLY_ONE = 0x08
SPENT = 0xC0

PASS, FAIL, INCONCLUSIVE = 0, 1, 2


_BITS = [bin(m).count("1") for m in range(256)]


def _submasks(mask):
    """All submasks of ``mask`` in increasing order."""
    return [m for m in range(mask + 1) if m & mask == m]


def _order(burst):
    tc, tm = burst
    return [x for pair in zip(tc, tm) for x in pair]


class EchoSearch:
    def __init__(self, n, f, k, R, inputs, faulty, max_states, macro=True):
        if n > 6 or faulty > 2:
            raise ValueError("compact search supports n <= 6 and at most 2 faulty senders")
        self.n, self.f, self.k, self.R = n, f, k, R
        self.K = k + 1
        self.levels = 3 if R == 1 else 5
        self.C = self.levels * self.K
        self.W = self.C + 4
        self.P = len(inputs)
        self.faulty = faulty
        self.inputs = list(inputs)
        self.max_states = max_states
        self.quorum = n - f
        self.all_spent = ((1 << faulty) - 1) << 6
        self.macro = macro

    # -- one process ----------------------------------------------------

    def cnt(self, b, o, L, i):
        return b[o + L * self.K + i] & CNT

    def guards(self, b, o, sends):
        """Run the guards of the block at offset ``o`` to a fixpoint."""
        k, K, f, R, quorum = self.k, self.K, self.f, self.R, self.quorum
        C = self.C
        bot = k
        A, SE, SL, D = o + C, o + C + 1, o + C + 2, o + C + 3
        fired = True
        while fired:
            fired = False
            # G1
            for i in range(K):
                if not b[SE] >> i & 1 and b[o + i] & CNT >= f + 1:
                    b[SE] |= 1 << i
                    sends.append(i)
                    fired = True
            # G2
            if not b[SE] >> bot & 1:
                tot = mx = 0
                for i in range(K):
                    c = b[o + i] & CNT
                    tot += c
                    if c > mx:
                        mx = c
                if tot - mx >= f + 1:
                    b[SE] |= 1 << bot
                    sends.append(bot)
                    fired = True
            # G3
            for i in range(K):
                if not b[A] >> i & 1 and b[o + i] & CNT >= quorum:
                    b[A] |= 1 << i
                    fired = True
                    if not b[SL] & 1:
                        b[SL] |= 1
                        sends.append(K + i)
            gate = b[A] >> bot & 1 or (b[A] & (b[A] - 1)) != 0
            # G4
            if not b[SL] & 2 and (b[A] & (b[A] - 1)) != 0:
                b[SL] |= 2
                sends.append(2 * K + bot)
                fired = True
            # G5
            if not b[SL] & 2:
                for i in range(K):
                    if b[o + K + i] & CNT >= quorum:
                        b[SL] |= 2
                        sends.append(2 * K + i)
                        fired = True
                        break
            # G6
            target = -1
            tot = 0
            for i in range(K):
                tot += b[o + 2 * K + i] & CNT
            if tot >= quorum and gate:
                target = bot
            else:
                for i in range(k):
                    if b[o + 2 * K + i] & CNT >= quorum:
                        target = i
                        break
            if target >= 0:
                if R == 1:
                    if not b[D]:
                        b[D] = 1 + (target << 2 | (0 if target == bot else 1))
                        fired = True
                elif not b[SL] & 4:
                    b[SL] |= 4
                    sends.append(3 * K + target)
                    fired = True
            if R == 1:
                continue
            # G7
            if not b[SL] & 8:
                tot = 0
                target = -1
                for i in range(K):
                    c = b[o + 3 * K + i] & CNT
                    tot += c
                    if c >= quorum and target < 0:
                        target = i
                if target < 0 and tot >= quorum and gate:
                    target = bot
                if target >= 0:
                    b[SL] |= 8
                    sends.append(4 * K + target)
                    fired = True
            # G8
            if not b[D]:
                tot = 0
                strong = weak = -1
                for i in range(K):
                    c = b[o + 4 * K + i] & CNT
                    tot += c
                    if i < k:
                        if c >= quorum and strong < 0:
                            strong = i
                        if weak < 0 and c >= 1 and b[o + 3 * K + i] & CNT >= f + 1:
                            weak = i
                if strong >= 0:
                    b[D] = 1 + (strong << 2 | 2)
                elif tot >= quorum and gate and weak >= 0:
                    b[D] = 1 + (weak << 2 | 1)
                elif b[o + 4 * K + bot] & CNT >= quorum:
                    b[D] = 1 + (bot << 2)
                if b[D]:
                    fired = True

    def is_dead(self, b, o, L, i):
        C, K = self.C, self.K
        sl = b[o + C + 2]
        if L == 0:
            return b[o + C + 1] >> self.k & 1 and b[o + C] >> i & 1
        if L == 1:
            return sl & 2
        if L == 2:
            return b[o + C + 3] if self.R == 1 else sl & 4
        if L == 3:
            if not sl & 8:
                return False
            return b[o + C + 3] or i == self.k or b[o + L * K + i] & CNT >= self.f + 1
        return b[o + C + 3]

    def bury(self, b, o):
        """Replace dead cells of one block by the canonical sentinel."""
        K = self.K
        for L in range(self.levels):
            for i in range(K):
                j = o + L * K + i
                if b[j] & CNT != DEAD and self.is_dead(b, o, L, i):
                    b[j] = DEAD | self.all_spent

    def post(self, b, sends):
        for cell in sends:
            for q in range(self.P):
                j = q * self.W + cell
                if b[j] & CNT != DEAD:
                    b[j] += FLY_ONE

    # -- global state ---------------------------------------------------

    def canon(self, b, pids):
        W = self.W
        blocks = sorted(zip((bytes(b[q * W:(q + 1) * W]) for q in range(self.P)), pids))
        return bytearray(b"".join(x for x, _ in blocks)), [p for _, p in blocks]

    def initial(self):
        W = self.W
        b = bytearray(W * self.P)
        sends = []
        for q in range(self.P):
            o = q * W
            b[o + self.C + 1] = 1 << self.inputs[q]
            sends.append(self.inputs[q])
        self.post(b, sends)
        for q in range(self.P):
            more = []
            self.guards(b, q * W, more)
            self.post(b, more)
        for q in range(self.P):
            self.bury(b, q * W)
        return self.canon(b, list(range(self.P)))

    def outcome(self, blk, amounts):
        """Flags and sends after adding ``amounts`` to the counts of ``blk``."""
        w = bytearray(blk)
        for cell, a in enumerate(amounts):
            w[cell] += a
        sends = []
        self.guards(w, 0, sends)
        # sends matter too: equal flags can hide different ECHO3 values
        return bytes(w[self.C:]), tuple(sends)

    def firing(self, blk, base, m):
        """Whether amount vector ``m`` is a burst worth taking.

        It must fire something, be reachable as a quiet multiset plus one
        last message, and need every one of its messages for its outcome.
        """
        out = self.outcome(blk, m)
        if out == base:
            return False
        reachable = False
        for cell, a in enumerate(m):
            if a:
                less = list(m)
                less[cell] -= 1
                o2 = self.outcome(blk, less)
                if o2 == out:
                    return False
                if o2 == base:
                    reachable = True
        return reachable

    def amount_bursts(self, blk):
        """Firing amount vectors of one block (see ``bursts``)."""
        C, K, L = self.C, self.K, self.levels
        avail = [0] * C
        for cell in range(C):
            x = blk[cell]
            if x & CNT != DEAD:
                avail[cell] = ((x & FLY) >> 3) + _BITS[~(x >> 6) & ((1 << self.faulty) - 1)]
        zero = [0] * C
        base = self.outcome(blk, zero)
        found = set()
        per_level = []
        for lv in range(L):
            vecs = []
            for part in product(*(range(avail[lv * K + i] + 1) for i in range(K))):
                m = zero[:lv * K] + list(part) + zero[(lv + 1) * K:]
                vecs.append(m)
                if any(part) and self.firing(blk, base, m):
                    found.add(tuple(m))
            per_level.append(vecs)
        # an ECHO burst that approves a value can open the ⊥ gate, which
        # lets the sums of the higher levels fire in the same cascade
        A = blk[C]
        openers = []
        for m in per_level[0]:
            if any(m):
                w = bytearray(blk)
                for cell in range(K):
                    w[cell] += m[cell]
                self.guards(w, 0, [])
                if w[C] != A and self.firing(blk, base, m):
                    openers.append(m)
        if openers and L > 2:
            extras = [[zero]] + [self.gated(blk, base, lv, per_level[lv]) for lv in range(2, L)]
            for m0 in openers:
                for combo in product(*extras[1:]):
                    if not any(any(v) for v in combo):
                        continue
                    m = list(m0)
                    for v in combo:
                        m = [x + y for x, y in zip(m, v)]
                    if self.firing(blk, base, m):
                        found.add(tuple(m))
        return sorted(found)

    def gated(self, blk, base, lv, vecs):
        """Quiet vectors of level ``lv`` whose every message feeds a gated threshold."""
        K, f, quorum, k = self.K, self.f, self.quorum, self.k
        out = [[0] * self.C]
        for m in vecs:
            part = m[lv * K:(lv + 1) * K]
            if not any(part) or self.outcome(blk, m) != base:
                continue
            have = [(blk[lv * K + i] & CNT) + part[i] for i in range(K)]
            exact_sum = sum(have) == quorum
            ok = True
            for i in range(K):
                if not part[i] or exact_sum:
                    continue
                if lv == 3 and i < k and have[i] == f + 1:
                    continue
                if lv == 4 and i < k and have[i] == 1:
                    continue
                ok = False
                break
            if ok:
                out.append(m)
        return out

    def splits(self, blk, m):
        """Every way to source amount vector ``m`` from in-flight copies and faulty menus."""
        C, K = self.C, self.K
        options = []
        for cell in range(C):
            a = m[cell]
            if not a:
                options.append([(0, 0)])
                continue
            x = blk[cell]
            copies = (x & FLY) >> 3
            spare = ~(x >> 6) & ((1 << self.faulty) - 1)
            options.append([(a - _BITS[fm], fm) for fm in _submasks(spare) if 0 <= a - _BITS[fm] <= copies])
        out = []
        for choice in product(*options):
            # above ECHO a faulty sender gets one value per level
            ok = True
            for lv in range(1, self.levels):
                seen = 0
                for i in range(K):
                    fm = choice[lv * K + i][1]
                    if seen & fm:
                        ok = False
                    seen |= fm
            if ok:
                out.append((tuple(c for c, _ in choice), tuple(fm for _, fm in choice)))
        return out

    def bursts(self, b, q):
        """Bursts available to slot ``q``, sorted.

        A burst is a pair of per-cell vectors: correct copies and faulty
        sender mask.  Deliveries that fire nothing only raise counts, and
        every guard fires monotonically in the counts, so such quiet
        deliveries can always wait until the delivery that makes something
        fire.  What remains to try is each multiset that fires, is reachable
        as quiet messages plus one, and needs every one of its messages.
        """
        W = self.W
        blk = bytes(b[q * W:(q + 1) * W])
        out = []
        for m in self.amount_bursts(blk):
            out.extend(self.splits(blk, m))
        out.sort(key=_order)
        return out

    def apply(self, b, pids, q, burst):
        tc, tm = burst
        b = bytearray(b)
        W, K = self.W, self.K
        o = q * W
        for cell in range(self.C):
            c, m = tc[cell], tm[cell]
            if not (c or m):
                continue
            j = o + cell
            b[j] += c * (1 - FLY_ONE) + _BITS[m]
            if m:
                bits = m << 6
                if cell < K:
                    b[j] |= bits
                else:
                    lo = o + cell - cell % K
                    for i in range(K):
                        b[lo + i] |= bits
        sends = []
        self.guards(b, o, sends)
        self.post(b, sends)
        self.bury(b, o)
        return self.canon(b, pids)

    def decided(self, b):
        count = mask = 0
        for q in range(self.P):
            d = b[q * self.W + self.C + 3]
            if d:
                count += 1
                idx = (d - 1) >> 2
                if idx < self.k:
                    mask |= 1 << idx
        return count, mask

    def single(self, b, q):
        """Every single delivery available to slot ``q``, as one-message bursts."""
        o = q * self.W
        C = self.C
        out = []
        zero = (0,) * C
        for cell in range(C):
            x = b[o + cell]
            if x & CNT == DEAD:
                continue
            if x & FLY:
                out.append((zero[:cell] + (1,) + zero[cell + 1:], zero))
            for s in range(self.faulty):
                if not x >> (6 + s) & 1:
                    out.append((zero, zero[:cell] + (1 << s,) + zero[cell + 1:]))
        return out

    def moves(self, b, pids):
        """Yield (pid, burst, successor, successor pids)."""
        W = self.W
        prev = None
        for q in range(self.P):
            blk = b[q * W:(q + 1) * W]
            if blk == prev:
                continue  # same block, symmetric successors
            prev = blk
            for burst in (self.bursts(b, q) if self.macro else self.single(b, q)):
                nxt, npids = self.apply(b, pids, q, burst)
                yield pids[q], burst, nxt, npids

    # -- search ---------------------------------------------------------

    def run(self):
        table = {}  # key -> 0 for undecided states, 1 | mask << 1 for decided ones
        locked = {}
        root, pids = self.initial()
        table[bytes(root)] = 0
        count, mask = self.decided(root)
        # frame: [state, pids, moves iterator, mask, count, key]
        frames = [[root, pids, self.moves(root, pids), mask, count, bytes(root)]]
        path = []
        while frames:
            fr = frames[-1]
            saturated = fr[4] and fr[3] & (fr[3] - 1)
            mv = None if saturated else next(fr[2], None)
            if mv is None:
                frames.pop()
                if fr[4]:
                    table[fr[5]] = 1 | fr[3] << 1
                    if frames and frames[-1][4]:
                        frames[-1][3] |= fr[3]
                    if fr[4] == 1:
                        locked[fr[3]] = locked.get(fr[3], 0) + 1
                        if fr[3] & (fr[3] - 1):
                            return FAIL, len(table), locked, list(path)
                if path:
                    path.pop()
                continue
            pid, burst, nxt, npids = mv
            key = bytes(nxt)
            known = table.get(key)
            count, mask = self.decided(nxt)
            if known is not None:
                if count:
                    fr[3] |= known >> 1
                continue
            if len(table) >= self.max_states:
                return INCONCLUSIVE, len(table), locked, list(path)
            # decided states are stored once their subtree is done
            table[key] = 0 if not count else 1 | mask << 1
            path.append((pid, burst))
            frames.append([nxt, npids, self.moves(nxt, npids), mask, count, key])
        return PASS, len(table), locked, []


def explore_echo(n, f, k, R, inputs, faulty, max_states, macro=True):
    """Run the search; returns (status, states, locked, witness path).

    ``locked`` maps the branch mask seen from each first-decision state to
    the number of such states.  Witness steps are (pid, burst).
    """
    return EchoSearch(n, f, k, R, inputs, faulty, max_states, macro).run()
