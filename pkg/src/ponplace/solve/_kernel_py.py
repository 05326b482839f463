"""Pure-Python search kernel.

Reference twin of ``_kernel.pyx``: the same arithmetic in the same order, so
both backends return bit-identical results and node counts.
"""
import math
import time

INF = math.inf

OPTIMAL, INFEASIBLE, TIMEOUT = 0, 1, 2


def evaluate_host(data, host):
    """Canonical leaf evaluation: (feasible, pc_w, pn_w)."""
    n, S, R = data.n, data.S, data.R
    req, cap, rack = data.req.tolist(), data.cap.tolist(), data.rack.tolist()
    host = [int(h) for h in host]
    tol = data.tol_feas
    ld = [0.0] * S
    cn = [0] * S
    for v in range(n):
        ld[host[v]] += req[v]
        cn[host[v]] += 1
    feas = True
    for s in range(S):
        if ld[s] > cap[s] + tol:
            feas = False
    eg = [0.0] * S
    ing = [0.0] * S
    ext = [0] * S
    rd = [0.0] * (R * R)
    ptr, nbr, rate = data.out_ptr.tolist(), data.out_nbr.tolist(), data.out_rate.tolist()
    for u in range(n):
        hu = host[u]
        for k in range(ptr[u], ptr[u + 1]):
            hw = host[nbr[k]]
            if hu != hw:
                t = rate[k]
                eg[hu] += t
                ing[hw] += t
                ext[hu] = 1
                ext[hw] = 1
                if rack[hu] != rack[hw]:
                    rd[rack[hu] * R + rack[hw]] += t
    for s in range(S):
        if eg[s] > data.onu_cap + tol or ing[s] > data.onu_cap + tol:
            feas = False
    chan = data.chan_cap.tolist()
    for i in range(R * R):
        if rd[i] > chan[i] + tol:
            feas = False
    active = 0
    pc = 0.0
    for s in range(S):
        if cn[s] > 0:
            active += 1
            pc += data.idle + data.dyn * ld[s] / cap[s]
        elif data.idle_unused:
            pc += data.idle
    if active > data.max_active:
        feas = False
    onus = 0
    for s in range(S):
        onus += ext[s]
    return feas, pc, data.onu_w * onus


def host_excess(data, host):
    """Total amount by which a complete host vector exceeds its limits:
    server GHz, ONU Gbps each way, rack-pair Gbps and surplus active servers.
    Zero exactly when ``evaluate_host`` reports feasible."""
    n, S, R = data.n, data.S, data.R
    req, cap, rack = data.req.tolist(), data.cap.tolist(), data.rack.tolist()
    host = [int(h) for h in host]
    tol = data.tol_feas
    ld = [0.0] * S
    cn = [0] * S
    for v in range(n):
        ld[host[v]] += req[v]
        cn[host[v]] += 1
    eg = [0.0] * S
    ing = [0.0] * S
    rd = [0.0] * (R * R)
    ptr, nbr, rate = data.out_ptr.tolist(), data.out_nbr.tolist(), data.out_rate.tolist()
    for u in range(n):
        hu = host[u]
        for k in range(ptr[u], ptr[u + 1]):
            hw = host[nbr[k]]
            if hu != hw:
                t = rate[k]
                eg[hu] += t
                ing[hw] += t
                if rack[hu] != rack[hw]:
                    rd[rack[hu] * R + rack[hw]] += t
    ex = 0.0
    active = 0
    for s in range(S):
        if ld[s] > cap[s] + tol:
            ex += ld[s] - cap[s]
        if eg[s] > data.onu_cap + tol:
            ex += eg[s] - data.onu_cap
        if ing[s] > data.onu_cap + tol:
            ex += ing[s] - data.onu_cap
        if cn[s] > 0:
            active += 1
    chan = data.chan_cap.tolist()
    for i in range(R * R):
        if rd[i] > chan[i] + tol:
            ex += rd[i] - chan[i]
    if active > data.max_active:
        ex += active - data.max_active
    return ex


class Evaluator:
    """Reusable complete-placement evaluator."""

    def __init__(self, data):
        self.data = data

    def evaluate(self, host):
        return evaluate_host(self.data, host)

    def excess(self, host):
        return host_excess(self.data, host)


class _Search:
    def __init__(self, data):
        self.n, self.S, self.R = data.n, data.S, data.R
        self.req = data.req.tolist()
        self.order = data.order.tolist()
        self.rem = data.rem.tolist()
        self.minreq = data.minreq.tolist()
        self.big = data.big.tolist()
        self.big_min = data.big_min
        nclq = data.big[0] if self.n else 0
        self.clq = [self.req[v] for v in self.order[:nclq]]
        self.cmax = float(data.cap[data.by_cap[0]]) if self.S else 0.0
        self.limit = self.cmax + data.tol_feas
        self.mid = data.mid.tolist()
        self.mreq = [self.req[v] for v in self.order[:self.mid[0] if self.n else 0]]
        self.forced = data.forced.tolist()
        self.fclq = data.fclq.tolist()
        self.fc_min = data.fc_min
        self.cap = data.cap.tolist()
        self.rack = data.rack.tolist()
        self.by_cap = data.by_cap.tolist()
        self.out_ptr = data.out_ptr.tolist()
        self.out_nbr = data.out_nbr.tolist()
        self.out_rate = data.out_rate.tolist()
        self.in_ptr = data.in_ptr.tolist()
        self.in_nbr = data.in_nbr.tolist()
        self.in_rate = data.in_rate.tolist()
        self.chan = data.chan_cap.tolist()
        self.idle, self.dyn = data.idle, data.dyn
        self.onu_w, self.onu_cap = data.onu_w, data.onu_cap
        self.use_pn = data.use_pn
        self.max_active = data.max_active
        self.idle_unused = data.idle_unused
        self.tol = data.tol_feas
        self.tol_obj = data.tol_obj
        self.data = data

        S = self.S
        self.host = [-1] * self.n
        self.load = [0.0] * S
        self.cnt = [0] * S
        self.eg = [0.0] * S
        self.ing = [0.0] * S
        self.ext = [0] * S
        self.rd = [0.0] * (self.R * self.R)
        self.active = 0
        self.onus = 0
        self.dynsum = 0.0
        self.fcnt = [0] * S
        # undo log of (array, index, previous value)
        self.log = []

        self.best_host = [-1] * self.n
        self.best = INF
        self.has_best = False
        self.nodes = 0
        self.node_limit = -1
        self.deadline = INF
        self.aborted = False

    # -- state updates ---------------------------------------------------

    def assign(self, v, s):
        """Place VM v on s; returns False when a partial ONU or rack-pair
        load already exceeds its capacity. Always undo with ``unassign``."""
        host, eg, ing, ext, rd, rack, log = (self.host, self.eg, self.ing, self.ext,
                                             self.rd, self.rack, self.log)
        R = self.R
        cap_onu = self.onu_cap + self.tol
        ok = True
        self.load[s] += self.req[v]
        self.cnt[s] += 1
        self.fcnt[s] += self.forced[v]
        if self.cnt[s] == 1:
            self.active += 1
        self.dynsum += self.dyn * self.req[v] / self.cap[s]
        rs = rack[s]
        for k in range(self.out_ptr[v], self.out_ptr[v + 1]):
            hw = host[self.out_nbr[k]]
            if hw >= 0 and hw != s:
                t = self.out_rate[k]
                log.append((eg, s, eg[s]))
                eg[s] += t
                log.append((ing, hw, ing[hw]))
                ing[hw] += t
                if eg[s] > cap_onu or ing[hw] > cap_onu:
                    ok = False
                self._touch(s)
                self._touch(hw)
                rh = rack[hw]
                if rs != rh:
                    i = rs * R + rh
                    log.append((rd, i, rd[i]))
                    rd[i] += t
                    if rd[i] > self.chan[i] + self.tol:
                        ok = False
        for k in range(self.in_ptr[v], self.in_ptr[v + 1]):
            hw = host[self.in_nbr[k]]
            if hw >= 0 and hw != s:
                t = self.in_rate[k]
                log.append((eg, hw, eg[hw]))
                eg[hw] += t
                log.append((ing, s, ing[s]))
                ing[s] += t
                if eg[hw] > cap_onu or ing[s] > cap_onu:
                    ok = False
                self._touch(s)
                self._touch(hw)
                rh = rack[hw]
                if rs != rh:
                    i = rh * R + rs
                    log.append((rd, i, rd[i]))
                    rd[i] += t
                    if rd[i] > self.chan[i] + self.tol:
                        ok = False
        host[v] = s
        return ok

    def _touch(self, s):
        self.ext[s] += 1
        if self.ext[s] == 1:
            self.onus += 1

    def _untouch(self, s):
        self.ext[s] -= 1
        if self.ext[s] == 0:
            self.onus -= 1

    def unassign(self, v, s, mark, old_load, old_dyn):
        host = self.host
        host[v] = -1
        for k in range(self.out_ptr[v], self.out_ptr[v + 1]):
            hw = host[self.out_nbr[k]]
            if hw >= 0 and hw != s:
                self._untouch(s)
                self._untouch(hw)
        for k in range(self.in_ptr[v], self.in_ptr[v + 1]):
            hw = host[self.in_nbr[k]]
            if hw >= 0 and hw != s:
                self._untouch(s)
                self._untouch(hw)
        log = self.log
        while len(log) > mark:
            arr, i, val = log.pop()
            arr[i] = val
        self.load[s] = old_load
        self.dynsum = old_dyn
        self.fcnt[s] -= self.forced[v]
        self.cnt[s] -= 1
        if self.cnt[s] == 0:
            self.active -= 1

    # -- bounding --------------------------------------------------------

    def _fill(self, left, mr, limit_new):
        """Cheapest fractional dynamic cost of ``left`` GHz over open
        residuals plus at most ``limit_new`` unopened servers."""
        cap, load, cnt, tol, dyn = self.cap, self.load, self.cnt, self.tol, self.dyn
        cost = 0.0
        used = 0
        for s in self.by_cap:
            if left <= 0.0:
                break
            if cnt[s] > 0:
                a = cap[s] - load[s]
                if a < mr - tol:
                    continue
            else:
                if used >= limit_new or cap[s] < mr - tol:
                    continue
                used += 1
                a = cap[s]
            take = a if a < left else left
            cost += dyn * take / cap[s]
            left -= take
        return cost

    def _clique_dyn(self, remaining, nbig):
        """Dynamic cost when the last ``nbig`` entries of ``clq`` (pairwise
        incompatible VMs, descending) take distinct hosts: largest VM on the
        largest eligible server and so on; everything else at the best
        possible rate. Infinite when too few eligible hosts remain."""
        cap, load, cnt, tol, dyn, clq = self.cap, self.load, self.cnt, self.tol, self.dyn, self.clq
        top = len(clq) - nbig
        lo = clq[len(clq) - 1]
        cost = 0.0
        used = 0.0
        i = 0
        for s in self.by_cap:
            if i >= nbig:
                break
            if cnt[s] > 0:
                if cap[s] - load[s] < lo - tol:
                    continue
            elif cap[s] < lo - tol:
                continue
            r = clq[top + i]
            cost += dyn * r / cap[s]
            used += r
            i += 1
        if i < nbig:
            return INF
        rest = remaining - used
        if rest > 0.0:
            cost += dyn * rest / self.cmax
        return cost

    def _boats(self, nmid):
        """Largest set of disjoint pairs among the last ``nmid`` entries of
        ``mreq`` that fit together under the largest capacity."""
        m = self.mreq
        i = len(m) - 1
        j = len(m) - nmid
        pairs = 0
        while j < i:
            if m[i] + m[j] <= self.limit:
                pairs += 1
                i -= 1
            j += 1
        return pairs

    def _forced_onus(self, nfc):
        """ONUs not yet on that must switch on: open servers holding a VM
        whose partner can never join it, plus one per unplaced incompatible
        forced VM beyond the ONU-on servers that could take it."""
        extra = 0
        room = 0
        for s in range(self.S):
            if self.cnt[s] > 0:
                on = self.ext[s] > 0
                if not on and self.fcnt[s] > 0:
                    extra += 1
                    on = True
                if on and self.cap[s] - self.load[s] >= self.fc_min - self.tol:
                    room += 1
        if nfc > room:
            extra += nfc - room
        return extra

    def bound(self, remaining, mr, nbig, nmid, nfc):
        tol = self.tol
        pn = self.onu_w * (self.onus + self._forced_onus(nfc)) if self.use_pn else 0.0
        cap, load, cnt = self.cap, self.load, self.cnt
        if self.idle_unused:
            avail = 0.0
            for s in range(self.S):
                a = cap[s] - load[s]
                if a >= mr - tol:
                    avail += a
            if avail < remaining - tol:
                return INF
            f = self._fill(remaining, mr, self.S)
            if nbig > 0:
                c = self._clique_dyn(remaining, nbig)
                if c > f:
                    f = c
            return self.idle * self.S + self.dynsum + f + pn
        acc = 0.0
        fits_big = 0
        fits_mid = 0
        two = 0
        mlo = self.mreq[len(self.mreq) - 1] if nmid > 0 else INF
        m2 = mlo + self.mreq[len(self.mreq) - 2] if nmid > 1 else INF
        for s in range(self.S):
            if cnt[s] > 0:
                a = cap[s] - load[s]
                if a >= mr - tol:
                    acc += a
                if a >= self.big_min - tol:
                    fits_big += 1
                if a >= mlo - tol:
                    fits_mid += 1
                if a >= m2 - tol:
                    two += 1
            elif cap[s] >= m2 - tol:
                two += 1
        k = 0
        if acc < remaining - tol:
            for s in self.by_cap:
                if cnt[s] == 0 and cap[s] >= mr - tol:
                    k += 1
                    acc += cap[s]
                    if acc >= remaining - tol:
                        break
            if acc < remaining - tol:
                return INF
        # pairwise-incompatible VMs each need a server of their own
        if nbig - fits_big > k:
            k = nbig - fits_big
        if nmid > 0:
            # mid-sized VMs go at most two to a server, and a pair needs a
            # server with room for the two smallest of them
            pairs = self._boats(nmid) if nmid > 1 else 0
            if pairs > two:
                pairs = two
            b = nmid - pairs - fits_mid
            if b > k:
                k = b
        if self.active + k > self.max_active:
            return INF
        best = self.idle * k + self._fill(remaining, mr, k)
        if self.active + k + 1 <= self.max_active:
            c2 = self.idle * (k + 1) + self._fill(remaining, mr, self.S)
            if c2 < best:
                best = c2
        lb = self.idle * self.active + self.dynsum + best + pn
        if nbig > 0:
            c = self._clique_dyn(remaining, nbig)
            alt = self.idle * (self.active + k) + self.dynsum + c + pn
            if alt > lb:
                lb = alt
        return lb

    # -- search ----------------------------------------------------------

    def _tol_abs(self):
        b = self.best
        return self.tol_obj * (b if b > 1.0 else 1.0)

    def _lex_possible(self):
        """Could a completion of the current partial be lexicographically
        smaller than the incumbent?"""
        host, best = self.host, self.best_host
        for v in range(self.n):
            h = host[v]
            if h < 0:
                if best[v] > 0:
                    return True
            elif h < best[v]:
                return True
            elif h > best[v]:
                return False
        return False

    def _leaf(self):
        feas, pc, pn = evaluate_host(self.data, self.host)
        if not feas:
            return
        obj = pc + pn if self.use_pn else pc
        if self.has_best:
            tol = self._tol_abs()
            if obj < self.best - tol:
                pass
            elif obj <= self.best + tol and self.host < self.best_host:
                pass
            else:
                return
        self.best = obj
        self.best_host = list(self.host)
        self.has_best = True

    def dfs(self, d, parent_bound):
        if self.node_limit >= 0 and self.nodes >= self.node_limit:
            self.aborted = True
            return parent_bound
        if (self.nodes & 1023) == 0 and time.perf_counter() > self.deadline:
            self.aborted = True
            return parent_bound
        self.nodes += 1
        if d == self.n:
            self._leaf()
            return INF
        v = self.order[d]
        rv = self.req[v]
        children = []
        for s in range(self.S):
            if self.load[s] + rv > self.cap[s] + self.tol:
                continue
            opening = self.cnt[s] == 0
            if opening and self.active >= self.max_active:
                continue
            onus0 = self.onus
            mark, old_load, old_dyn = len(self.log), self.load[s], self.dynsum
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
                if b < INF:
                    children.append((delta, s, b))
            self.unassign(v, s, mark, old_load, old_dyn)
        children.sort()
        front = INF
        for delta, s, b in children:
            if self.aborted:
                if b < front:
                    front = b
                continue
            if self.has_best and b > self.best + self._tol_abs():
                continue
            mark, old_load, old_dyn = len(self.log), self.load[s], self.dynsum
            self.assign(v, s)
            if self.has_best and b >= self.best - self._tol_abs() and not self._lex_possible():
                self.unassign(v, s, mark, old_load, old_dyn)
                continue
            r = self.dfs(d + 1, b)
            self.unassign(v, s, mark, old_load, old_dyn)
            if self.aborted and r < front:
                front = r
        return front


def partial_bound(data, host):
    """Admissible bound for any partial host vector (-1 = unassigned)."""
    st = _Search(data)
    remaining = 0.0
    mr = INF
    nbig = 0
    nfc = 0
    clq = []
    mreq = []
    ok = True
    for d in range(data.n):
        v = st.order[d]
        if host[v] >= 0:
            if not st.assign(v, int(host[v])):
                ok = False
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
    for s in range(data.S):
        if st.load[s] > st.cap[s] + st.tol:
            ok = False
    if st.active > st.max_active:
        ok = False
    if not ok:
        return INF
    st.clq = clq
    st.mreq = mreq
    return st.bound(remaining, mr, nbig, len(mreq), nfc)


def branch_and_bound(data, node_limit=-1, time_limit=INF, init_host=None):
    """Depth-first exact search.

    ``init_host`` optionally seeds the incumbent; an infeasible seed is
    ignored. Returns ``(status, host, objective, lower_bound, nodes)``;
    ``host`` is a list of server indices (VM index order) or None.
    """
    st = _Search(data)
    st.node_limit = node_limit
    st.deadline = time.perf_counter() + time_limit if time_limit < INF else INF
    root = st.bound(st.rem[0], st.minreq[0], st.big[0], st.mid[0], st.fclq[0])
    if root == INF:
        return INFEASIBLE, None, INF, INF, 0
    if init_host is not None:
        feas, pc, pn = evaluate_host(data, init_host)
        if feas:
            st.best = pc + pn if st.use_pn else pc
            st.best_host = [int(h) for h in init_host]
            st.has_best = True
    front = st.dfs(0, root)
    if st.aborted:
        lb = front if not st.has_best or front < st.best else st.best
        return TIMEOUT, (st.best_host if st.has_best else None), st.best, lb, st.nodes
    if st.has_best:
        return OPTIMAL, st.best_host, st.best, st.best, st.nodes
    return INFEASIBLE, None, INF, INF, st.nodes
