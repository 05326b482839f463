# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled search kernel.

Mirrors ``_kernel_py`` statement for statement; floating-point operations
happen in the same order so results and node counts agree bit for bit.
"""
import time

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

DEF K_EG = 0
DEF K_ING = 1
DEF K_RD = 2

OPTIMAL, INFEASIBLE, TIMEOUT = 0, 1, 2


cdef class _Search:
    cdef int n, S, R
    cdef const double[:] req
    cdef const int[:] order
    cdef const double[:] rem
    cdef const double[:] minreq
    cdef const int[:] big
    cdef double big_min
    cdef double[:] clq
    cdef int nclq
    cdef double cmax, limit
    cdef const int[:] mid
    cdef double[:] mreq
    cdef int nmreq
    cdef const int[:] forced
    cdef const int[:] fclq
    cdef double fc_min
    cdef int[:] fcnt
    cdef const double[:] cap
    cdef const int[:] rack
    cdef const int[:] by_cap
    cdef const int[:] out_ptr
    cdef const int[:] out_nbr
    cdef const double[:] out_rate
    cdef const int[:] in_ptr
    cdef const int[:] in_nbr
    cdef const double[:] in_rate
    cdef const double[:] chan
    cdef double idle, dyn, onu_w, onu_cap, tol, tol_obj
    cdef int use_pn, max_active, idle_unused

    cdef int[:] host
    cdef double[:] load
    cdef int[:] cnt
    cdef double[:] eg
    cdef double[:] ing
    cdef int[:] ext
    cdef double[:] rd
    cdef int active, onus
    cdef double dynsum

    cdef int[:] log_kind
    cdef int[:] log_idx
    cdef double[:] log_val
    cdef int log_len

    cdef double[:] ch_delta
    cdef int[:] ch_s
    cdef double[:] ch_b

    cdef int[:] best_host
    cdef double best
    cdef int has_best
    cdef long long nodes, node_limit
    cdef double deadline
    cdef int aborted

    # leaf scratch
    cdef double[:] x_ld
    cdef int[:] x_cn
    cdef double[:] x_eg
    cdef double[:] x_ing
    cdef int[:] x_ext
    cdef double[:] x_rd

    def __init__(self, data):
        self.n, self.S, self.R = data.n, data.S, data.R
        self.req = data.req
        self.order = data.order
        self.rem = data.rem
        self.minreq = data.minreq
        self.big = data.big
        self.big_min = data.big_min
        self.nclq = int(data.big[0]) if data.n else 0
        self.clq = np.array([data.req[data.order[d]] for d in range(self.nclq)],
                            dtype=np.float64) if self.nclq else np.zeros(1)
        self.cmax = data.cap[data.by_cap[0]] if data.S else 0.0
        self.limit = self.cmax + data.tol_feas
        self.mid = data.mid
        self.nmreq = int(data.mid[0]) if data.n else 0
        self.mreq = np.array([data.req[data.order[d]] for d in range(self.nmreq)],
                             dtype=np.float64) if self.nmreq else np.zeros(1)
        self.forced = data.forced
        self.fclq = data.fclq
        self.fc_min = data.fc_min
        self.cap = data.cap
        self.rack = data.rack
        self.by_cap = data.by_cap
        self.out_ptr = data.out_ptr
        self.out_nbr = data.out_nbr
        self.out_rate = data.out_rate
        self.in_ptr = data.in_ptr
        self.in_nbr = data.in_nbr
        self.in_rate = data.in_rate
        self.chan = data.chan_cap
        self.idle, self.dyn = data.idle, data.dyn
        self.onu_w, self.onu_cap = data.onu_w, data.onu_cap
        self.use_pn = data.use_pn
        self.max_active = data.max_active
        self.idle_unused = data.idle_unused
        self.tol = data.tol_feas
        self.tol_obj = data.tol_obj

        cdef int S = self.S, n = self.n, RR = self.R * self.R
        self.host = np.full(n, -1, dtype=np.int32)
        self.load = np.zeros(S)
        self.cnt = np.zeros(S, dtype=np.int32)
        self.eg = np.zeros(S)
        self.ing = np.zeros(S)
        self.ext = np.zeros(S, dtype=np.int32)
        self.rd = np.zeros(RR)
        self.active = 0
        self.onus = 0
        self.dynsum = 0.0
        self.fcnt = np.zeros(S, dtype=np.int32)
        cdef int logcap = 6 * (len(data.out_nbr) + len(data.in_nbr)) + 8
        self.log_kind = np.zeros(logcap, dtype=np.int32)
        self.log_idx = np.zeros(logcap, dtype=np.int32)
        self.log_val = np.zeros(logcap)
        self.log_len = 0
        self.ch_delta = np.zeros(max(n * S, 1))
        self.ch_s = np.zeros(max(n * S, 1), dtype=np.int32)
        self.ch_b = np.zeros(max(n * S, 1))
        self.best_host = np.full(n, -1, dtype=np.int32)
        self.best = INFINITY
        self.has_best = 0
        self.nodes = 0
        self.node_limit = -1
        self.deadline = INFINITY
        self.aborted = 0
        self.x_ld = np.zeros(S)
        self.x_cn = np.zeros(S, dtype=np.int32)
        self.x_eg = np.zeros(S)
        self.x_ing = np.zeros(S)
        self.x_ext = np.zeros(S, dtype=np.int32)
        self.x_rd = np.zeros(RR)

    # -- leaf evaluation ---------------------------------------------------

    cdef int evaluate(self, int[:] host, double* pc_out, double* pn_out):
        cdef int n = self.n, S = self.S, R = self.R
        cdef int v, s, u, k, hu, hw, i, active = 0, onus = 0, feas = 1
        cdef double t, pc = 0.0
        for s in range(S):
            self.x_ld[s] = 0.0
            self.x_cn[s] = 0
            self.x_eg[s] = 0.0
            self.x_ing[s] = 0.0
            self.x_ext[s] = 0
        for i in range(R * R):
            self.x_rd[i] = 0.0
        for v in range(n):
            self.x_ld[host[v]] += self.req[v]
            self.x_cn[host[v]] += 1
        for s in range(S):
            if self.x_ld[s] > self.cap[s] + self.tol:
                feas = 0
        for u in range(n):
            hu = host[u]
            for k in range(self.out_ptr[u], self.out_ptr[u + 1]):
                hw = host[self.out_nbr[k]]
                if hu != hw:
                    t = self.out_rate[k]
                    self.x_eg[hu] += t
                    self.x_ing[hw] += t
                    self.x_ext[hu] = 1
                    self.x_ext[hw] = 1
                    if self.rack[hu] != self.rack[hw]:
                        self.x_rd[self.rack[hu] * R + self.rack[hw]] += t
        for s in range(S):
            if self.x_eg[s] > self.onu_cap + self.tol or self.x_ing[s] > self.onu_cap + self.tol:
                feas = 0
        for i in range(R * R):
            if self.x_rd[i] > self.chan[i] + self.tol:
                feas = 0
        for s in range(S):
            if self.x_cn[s] > 0:
                active += 1
                pc += self.idle + self.dyn * self.x_ld[s] / self.cap[s]
            elif self.idle_unused:
                pc += self.idle
        if active > self.max_active:
            feas = 0
        for s in range(S):
            onus += self.x_ext[s]
        pc_out[0] = pc
        pn_out[0] = self.onu_w * onus
        return feas

    cdef double excess(self, int[:] host):
        cdef int n = self.n, S = self.S, R = self.R
        cdef int v, s, u, k, hu, hw, i, active = 0
        cdef double t, ex = 0.0
        for s in range(S):
            self.x_ld[s] = 0.0
            self.x_cn[s] = 0
            self.x_eg[s] = 0.0
            self.x_ing[s] = 0.0
        for i in range(R * R):
            self.x_rd[i] = 0.0
        for v in range(n):
            self.x_ld[host[v]] += self.req[v]
            self.x_cn[host[v]] += 1
        for u in range(n):
            hu = host[u]
            for k in range(self.out_ptr[u], self.out_ptr[u + 1]):
                hw = host[self.out_nbr[k]]
                if hu != hw:
                    t = self.out_rate[k]
                    self.x_eg[hu] += t
                    self.x_ing[hw] += t
                    if self.rack[hu] != self.rack[hw]:
                        self.x_rd[self.rack[hu] * R + self.rack[hw]] += t
        for s in range(S):
            if self.x_ld[s] > self.cap[s] + self.tol:
                ex += self.x_ld[s] - self.cap[s]
            if self.x_eg[s] > self.onu_cap + self.tol:
                ex += self.x_eg[s] - self.onu_cap
            if self.x_ing[s] > self.onu_cap + self.tol:
                ex += self.x_ing[s] - self.onu_cap
            if self.x_cn[s] > 0:
                active += 1
        for i in range(R * R):
            if self.x_rd[i] > self.chan[i] + self.tol:
                ex += self.x_rd[i] - self.chan[i]
        if active > self.max_active:
            ex += active - self.max_active
        return ex

    # -- state updates -----------------------------------------------------

    cdef inline void _log(self, int kind, int idx, double val):
        self.log_kind[self.log_len] = kind
        self.log_idx[self.log_len] = idx
        self.log_val[self.log_len] = val
        self.log_len += 1

    cdef inline void _touch(self, int s):
        self.ext[s] += 1
        if self.ext[s] == 1:
            self.onus += 1

    cdef inline void _untouch(self, int s):
        self.ext[s] -= 1
        if self.ext[s] == 0:
            self.onus -= 1

    cdef int assign(self, int v, int s):
        cdef int R = self.R, ok = 1, k, hw, rs, rh, i
        cdef double t, cap_onu = self.onu_cap + self.tol
        self.load[s] += self.req[v]
        self.cnt[s] += 1
        self.fcnt[s] += self.forced[v]
        if self.cnt[s] == 1:
            self.active += 1
        self.dynsum += self.dyn * self.req[v] / self.cap[s]
        rs = self.rack[s]
        for k in range(self.out_ptr[v], self.out_ptr[v + 1]):
            hw = self.host[self.out_nbr[k]]
            if hw >= 0 and hw != s:
                t = self.out_rate[k]
                self._log(K_EG, s, self.eg[s])
                self.eg[s] += t
                self._log(K_ING, hw, self.ing[hw])
                self.ing[hw] += t
                if self.eg[s] > cap_onu or self.ing[hw] > cap_onu:
                    ok = 0
                self._touch(s)
                self._touch(hw)
                rh = self.rack[hw]
                if rs != rh:
                    i = rs * R + rh
                    self._log(K_RD, i, self.rd[i])
                    self.rd[i] += t
                    if self.rd[i] > self.chan[i] + self.tol:
                        ok = 0
        for k in range(self.in_ptr[v], self.in_ptr[v + 1]):
            hw = self.host[self.in_nbr[k]]
            if hw >= 0 and hw != s:
                t = self.in_rate[k]
                self._log(K_EG, hw, self.eg[hw])
                self.eg[hw] += t
                self._log(K_ING, s, self.ing[s])
                self.ing[s] += t
                if self.eg[hw] > cap_onu or self.ing[s] > cap_onu:
                    ok = 0
                self._touch(s)
                self._touch(hw)
                rh = self.rack[hw]
                if rs != rh:
                    i = rh * R + rs
                    self._log(K_RD, i, self.rd[i])
                    self.rd[i] += t
                    if self.rd[i] > self.chan[i] + self.tol:
                        ok = 0
        self.host[v] = s
        return ok

    cdef void unassign(self, int v, int s, int mark, double old_load, double old_dyn):
        cdef int k, hw, kind, idx
        self.host[v] = -1
        for k in range(self.out_ptr[v], self.out_ptr[v + 1]):
            hw = self.host[self.out_nbr[k]]
            if hw >= 0 and hw != s:
                self._untouch(s)
                self._untouch(hw)
        for k in range(self.in_ptr[v], self.in_ptr[v + 1]):
            hw = self.host[self.in_nbr[k]]
            if hw >= 0 and hw != s:
                self._untouch(s)
                self._untouch(hw)
        while self.log_len > mark:
            self.log_len -= 1
            kind = self.log_kind[self.log_len]
            idx = self.log_idx[self.log_len]
            if kind == K_EG:
                self.eg[idx] = self.log_val[self.log_len]
            elif kind == K_ING:
                self.ing[idx] = self.log_val[self.log_len]
            else:
                self.rd[idx] = self.log_val[self.log_len]
        self.load[s] = old_load
        self.dynsum = old_dyn
        self.fcnt[s] -= self.forced[v]
        self.cnt[s] -= 1
        if self.cnt[s] == 0:
            self.active -= 1

    # -- bounding ----------------------------------------------------------

    cdef double _fill(self, double left, double mr, int limit_new):
        cdef double cost = 0.0, a, take
        cdef int used = 0, j, s
        for j in range(self.S):
            s = self.by_cap[j]
            if left <= 0.0:
                break
            if self.cnt[s] > 0:
                a = self.cap[s] - self.load[s]
                if a < mr - self.tol:
                    continue
            else:
                if used >= limit_new or self.cap[s] < mr - self.tol:
                    continue
                used += 1
                a = self.cap[s]
            take = a if a < left else left
            cost += self.dyn * take / self.cap[s]
            left -= take
        return cost

    cdef double _clique_dyn(self, double remaining, int nbig):
        cdef double tol = self.tol, cost = 0.0, used = 0.0, lo, r, rest
        cdef int top = self.nclq - nbig, i = 0, j, s
        lo = self.clq[self.nclq - 1]
        for j in range(self.S):
            if i >= nbig:
                break
            s = self.by_cap[j]
            if self.cnt[s] > 0:
                if self.cap[s] - self.load[s] < lo - tol:
                    continue
            elif self.cap[s] < lo - tol:
                continue
            r = self.clq[top + i]
            cost += self.dyn * r / self.cap[s]
            used += r
            i += 1
        if i < nbig:
            return INFINITY
        rest = remaining - used
        if rest > 0.0:
            cost += self.dyn * rest / self.cmax
        return cost

    cdef int _boats(self, int nmid):
        cdef int i = self.nmreq - 1, j = self.nmreq - nmid, pairs = 0
        while j < i:
            if self.mreq[i] + self.mreq[j] <= self.limit:
                pairs += 1
                i -= 1
            j += 1
        return pairs

    cdef int _forced_onus(self, int nfc):
        cdef int s, extra = 0, room = 0, on
        for s in range(self.S):
            if self.cnt[s] > 0:
                on = self.ext[s] > 0
                if not on and self.fcnt[s] > 0:
                    extra += 1
                    on = 1
                if on and self.cap[s] - self.load[s] >= self.fc_min - self.tol:
                    room += 1
        if nfc > room:
            extra += nfc - room
        return extra

    cdef double bound(self, double remaining, double mr, int nbig, int nmid, int nfc):
        cdef double tol = self.tol, pn = 0.0, acc, a, best, c2, f, avail, mlo = INFINITY
        cdef double m2 = INFINITY
        cdef int s, j, k, fits_big = 0, fits_mid = 0, bt, two = 0, pairs
        if self.use_pn:
            pn = self.onu_w * (self.onus + self._forced_onus(nfc))
        if self.idle_unused:
            avail = 0.0
            for s in range(self.S):
                a = self.cap[s] - self.load[s]
                if a >= mr - tol:
                    avail += a
            if avail < remaining - tol:
                return INFINITY
            f = self._fill(remaining, mr, self.S)
            if nbig > 0:
                c2 = self._clique_dyn(remaining, nbig)
                if c2 > f:
                    f = c2
            return self.idle * self.S + self.dynsum + f + pn
        acc = 0.0
        if nmid > 0:
            mlo = self.mreq[self.nmreq - 1]
        if nmid > 1:
            m2 = mlo + self.mreq[self.nmreq - 2]
        for s in range(self.S):
            if self.cnt[s] > 0:
                a = self.cap[s] - self.load[s]
                if a >= mr - tol:
                    acc += a
                if a >= self.big_min - tol:
                    fits_big += 1
                if a >= mlo - tol:
                    fits_mid += 1
                if a >= m2 - tol:
                    two += 1
            elif self.cap[s] >= m2 - tol:
                two += 1
        k = 0
        if acc < remaining - tol:
            for j in range(self.S):
                s = self.by_cap[j]
                if self.cnt[s] == 0 and self.cap[s] >= mr - tol:
                    k += 1
                    acc += self.cap[s]
                    if acc >= remaining - tol:
                        break
            if acc < remaining - tol:
                return INFINITY
        if nbig - fits_big > k:
            k = nbig - fits_big
        if nmid > 0:
            pairs = self._boats(nmid) if nmid > 1 else 0
            if pairs > two:
                pairs = two
            bt = nmid - pairs - fits_mid
            if bt > k:
                k = bt
        if self.active + k > self.max_active:
            return INFINITY
        best = self.idle * k + self._fill(remaining, mr, k)
        if self.active + k + 1 <= self.max_active:
            c2 = self.idle * (k + 1) + self._fill(remaining, mr, self.S)
            if c2 < best:
                best = c2
        f = self.idle * self.active + self.dynsum + best + pn
        if nbig > 0:
            c2 = self._clique_dyn(remaining, nbig)
            avail = self.idle * (self.active + k) + self.dynsum + c2 + pn
            if avail > f:
                f = avail
        return f

    # -- search ------------------------------------------------------------

    cdef inline double _tol_abs(self):
        return self.tol_obj * (self.best if self.best > 1.0 else 1.0)

    cdef int _lex_possible(self):
        cdef int v, h
        for v in range(self.n):
            h = self.host[v]
            if h < 0:
                if self.best_host[v] > 0:
                    return 1
            elif h < self.best_host[v]:
                return 1
            elif h > self.best_host[v]:
                return 0
        return 0

    cdef int _lex_less(self):
        cdef int v
        for v in range(self.n):
            if self.host[v] < self.best_host[v]:
                return 1
            if self.host[v] > self.best_host[v]:
                return 0
        return 0

    cdef void _leaf(self):
        cdef double pc, pn, obj, tol
        cdef int v
        if not self.evaluate(self.host, &pc, &pn):
            return
        obj = pc + pn if self.use_pn else pc
        if self.has_best:
            tol = self._tol_abs()
            if obj < self.best - tol:
                pass
            elif obj <= self.best + tol and self._lex_less():
                pass
            else:
                return
        self.best = obj
        for v in range(self.n):
            self.best_host[v] = self.host[v]
        self.has_best = 1

    cdef double dfs(self, int d, double parent_bound):
        cdef int v, s, i, j, opening, onus0, mark, base, nch, cs
        cdef double rv, delta, b, old_load, old_dyn, front, r, kd, kb
        if self.node_limit >= 0 and self.nodes >= self.node_limit:
            self.aborted = 1
            return parent_bound
        if (self.nodes & 1023) == 0 and time.perf_counter() > self.deadline:
            self.aborted = 1
            return parent_bound
        self.nodes += 1
        if d == self.n:
            self._leaf()
            return INFINITY
        v = self.order[d]
        rv = self.req[v]
        base = d * self.S
        nch = 0
        for s in range(self.S):
            if self.load[s] + rv > self.cap[s] + self.tol:
                continue
            opening = self.cnt[s] == 0
            if opening and self.active >= self.max_active:
                continue
            onus0 = self.onus
            mark = self.log_len
            old_load = self.load[s]
            old_dyn = self.dynsum
            if self.assign(v, s):
                delta = self.dyn * rv / self.cap[s]
                if opening and not self.idle_unused:
                    delta += self.idle
                if self.use_pn:
                    delta += self.onu_w * (self.onus - onus0)
                b = self.bound(self.rem[d + 1], self.minreq[d + 1], self.big[d + 1],
                               self.mid[d + 1], self.fclq[d + 1])
                if b < parent_bound:
                    b = parent_bound
                if b < INFINITY:
                    # insertion sort keyed by (delta, s, b)
                    i = nch
                    while i > 0 and (self.ch_delta[base + i - 1] > delta or
                                     (self.ch_delta[base + i - 1] == delta and
                                      self.ch_s[base + i - 1] > s)):
                        self.ch_delta[base + i] = self.ch_delta[base + i - 1]
                        self.ch_s[base + i] = self.ch_s[base + i - 1]
                        self.ch_b[base + i] = self.ch_b[base + i - 1]
                        i -= 1
                    self.ch_delta[base + i] = delta
                    self.ch_s[base + i] = s
                    self.ch_b[base + i] = b
                    nch += 1
            self.unassign(v, s, mark, old_load, old_dyn)
        front = INFINITY
        for j in range(nch):
            b = self.ch_b[base + j]
            cs = self.ch_s[base + j]
            if self.aborted:
                if b < front:
                    front = b
                continue
            if self.has_best and b > self.best + self._tol_abs():
                continue
            mark = self.log_len
            old_load = self.load[cs]
            old_dyn = self.dynsum
            self.assign(v, cs)
            if self.has_best and b >= self.best - self._tol_abs() and not self._lex_possible():
                self.unassign(v, cs, mark, old_load, old_dyn)
                continue
            r = self.dfs(d + 1, b)
            self.unassign(v, cs, mark, old_load, old_dyn)
            if self.aborted and r < front:
                front = r
        return front


def evaluate_host(data, host):
    """Canonical leaf evaluation: (feasible, pc_w, pn_w)."""
    cdef _Search st = _Search(data)
    cdef double pc, pn
    cdef int[:] h = np.ascontiguousarray(host, dtype=np.int32)
    feas = st.evaluate(h, &pc, &pn)
    return bool(feas), pc, pn


cdef class Evaluator:
    """Reusable complete-placement evaluator (no per-call allocation)."""
    cdef _Search st

    def __init__(self, data):
        self.st = _Search(data)

    def evaluate(self, host):
        cdef double pc, pn
        cdef int[:] h = np.ascontiguousarray(host, dtype=np.int32)
        feas = self.st.evaluate(h, &pc, &pn)
        return bool(feas), pc, pn

    def excess(self, host):
        cdef int[:] h = np.ascontiguousarray(host, dtype=np.int32)
        return self.st.excess(h)


def host_excess(data, host):
    """See ``_kernel_py.host_excess``."""
    return Evaluator(data).excess(host)


def partial_bound(data, host):
    """Admissible bound for any partial host vector (-1 = unassigned)."""
    cdef _Search st = _Search(data)
    cdef double remaining = 0.0, mr = INFINITY
    cdef int d, v, s, ok = 1, nbig = 0, nfc = 0
    clq = []
    mreq = []
    for d in range(st.n):
        v = st.order[d]
        if host[v] >= 0:
            if not st.assign(v, int(host[v])):
                ok = 0
        else:
            remaining += st.req[v]
            if st.req[v] < mr:
                mr = st.req[v]
            if st.big[d] > st.big[d + 1]:
                nbig += 1
                clq.append(st.req[v])
            if st.mid[d] > st.mid[d + 1]:
                mreq.append(st.req[v])
            if st.fclq[d] > st.fclq[d + 1]:
                nfc += 1
    for s in range(st.S):
        if st.load[s] > st.cap[s] + st.tol:
            ok = 0
    if st.active > st.max_active:
        ok = 0
    if not ok:
        return INFINITY
    if nbig:
        st.clq = np.array(clq, dtype=np.float64)
        st.nclq = nbig
    if mreq:
        st.mreq = np.array(mreq, dtype=np.float64)
    st.nmreq = len(mreq)
    return st.bound(remaining, mr, nbig, len(mreq), nfc)


def branch_and_bound(data, node_limit=-1, time_limit=INFINITY, init_host=None):
    """Depth-first exact search; see ``_kernel_py.branch_and_bound``."""
    cdef _Search st = _Search(data)
    cdef double root, front, lb
    cdef int v
    st.node_limit = node_limit
    st.deadline = time.perf_counter() + time_limit if time_limit < INFINITY else INFINITY
    root = st.bound(st.rem[0], st.minreq[0], st.big[0], st.mid[0], st.fclq[0])
    if root == INFINITY:
        return INFEASIBLE, None, INFINITY, INFINITY, 0
    if init_host is not None:
        feas, pc, pn = evaluate_host(data, init_host)
        if feas:
            st.best = pc + pn if st.use_pn else pc
            for v in range(st.n):
                st.best_host[v] = int(init_host[v])
            st.has_best = 1
    front = st.dfs(0, root)
    best_host = [int(x) for x in st.best_host] if st.has_best else None
    if st.aborted:
        lb = front if not st.has_best or front < st.best else st.best
        return TIMEOUT, best_host, st.best, lb, st.nodes
    if st.has_best:
        return OPTIMAL, best_host, st.best, st.best, st.nodes
    return INFEASIBLE, None, INFINITY, INFINITY, st.nodes
