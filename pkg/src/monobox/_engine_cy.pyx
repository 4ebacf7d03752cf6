# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled refinement kernel.

Mirrors the portable engine in ``monobox.refine`` decision-for-decision and
float-for-float: same measure walks, same heap order (score desc, left edge
asc, id asc), same incremental certificate updates with a full refresh every
1024 splits.  Cross-backend equality is asserted by the test suite, so any
change here must be matched in ``refine.CoverState``.
"""

import numpy as np

from .funcs import OracleValueError

cdef double NAN = float("nan")

DEF MODE_EPS = 0
DEF MODE_BUDGET = 1
DEF MODE_STOCH = 2
DEF RECOMPUTE_EVERY = 1024


cdef inline double powi(double x, int p):
    cdef double r = 1.0
    cdef int i
    for i in range(p):
        r *= x
    return r


cdef int bisect_right_d(double[::1] arr, double x, Py_ssize_t n):
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < arr[mid]:
            hi = mid
        else:
            lo = mid + 1
    return <int> lo


cdef int bisect_left_d(double[::1] arr, double x, Py_ssize_t n):
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return <int> lo


# ---------------------------------------------------------------------------
# measure queries (mirror measure.Measure exactly)

cdef class MeasureView:
    cdef double[::1] p_lo, p_hi, p_d, p_cum, a_x, a_w, a_cum
    cdef Py_ssize_t n_p, n_a
    cdef double[::1] cuts  # scratch for quantile walks

    def __init__(self, p_lo, p_hi, p_d, p_cum, a_x, a_w, a_cum):
        self.p_lo = np.ascontiguousarray(p_lo, dtype=np.float64)
        self.p_hi = np.ascontiguousarray(p_hi, dtype=np.float64)
        self.p_d = np.ascontiguousarray(p_d, dtype=np.float64)
        self.p_cum = np.ascontiguousarray(p_cum, dtype=np.float64)
        self.a_x = np.ascontiguousarray(a_x, dtype=np.float64)
        self.a_w = np.ascontiguousarray(a_w, dtype=np.float64)
        self.a_cum = np.ascontiguousarray(a_cum, dtype=np.float64)
        self.n_p = self.p_lo.shape[0]
        self.n_a = self.a_x.shape[0]
        self.cuts = np.empty(2 * self.n_p + self.n_a + 2, dtype=np.float64)

    cdef double cdf_left(self, double x):
        cdef double dens = 0.0, part
        cdef int idx = bisect_right_d(self.p_lo, x, self.n_p) - 1
        if idx >= 0:
            part = x if x < self.p_hi[idx] else self.p_hi[idx]
            part = part - self.p_lo[idx]
            if part < 0.0:
                part = 0.0
            dens = self.p_cum[idx] + self.p_d[idx] * part
        cdef int adx = bisect_left_d(self.a_x, x, self.n_a)
        return dens + self.a_cum[adx]

    cdef double mass_at(self, double x):
        cdef int i
        if self.n_a == 0:
            return 0.0
        i = bisect_left_d(self.a_x, x, self.n_a)
        if i < self.n_a and self.a_x[i] == x:
            return self.a_w[i]
        return 0.0

    cdef double mass_open(self, double a, double b):
        if a == b:
            return 0.0
        cdef double v = self.cdf_left(b) - self.cdf_left(a) - self.mass_at(a)
        return v if v > 0.0 else 0.0

    cdef double density_at(self, double x):
        cdef int i = bisect_right_d(self.p_lo, x, self.n_p) - 1
        if i < 0 or x >= self.p_hi[i]:
            return 0.0
        return self.p_d[i]

    cdef Py_ssize_t merged_cuts(self, double a, double b):
        """Fill self.cuts with sorted deduped event positions in (a, b]."""
        cdef Py_ssize_t n = 0, i, j, k
        cdef double e, key
        cdef int i0 = bisect_right_d(self.p_lo, a, self.n_p)
        i = i0 - 1
        if i < 0:
            i = 0
        while i < self.n_p:
            if self.p_lo[i] >= b:
                break
            e = self.p_lo[i]
            if a < e < b:
                self.cuts[n] = e
                n += 1
            e = self.p_hi[i]
            if a < e < b:
                self.cuts[n] = e
                n += 1
            i += 1
        j = bisect_right_d(self.a_x, a, self.n_a)
        while j < self.n_a:
            if self.a_x[j] >= b:
                break
            self.cuts[n] = self.a_x[j]
            n += 1
            j += 1
        self.cuts[n] = b
        n += 1
        # insertion sort; event lists are tiny
        for i in range(1, n):
            key = self.cuts[i]
            k = i - 1
            while k >= 0 and self.cuts[k] > key:
                self.cuts[k + 1] = self.cuts[k]
                k -= 1
            self.cuts[k + 1] = key
        # dedupe in place
        j = 0
        for i in range(1, n):
            if self.cuts[i] != self.cuts[j]:
                j += 1
                self.cuts[j] = self.cuts[i]
        return j + 1

    cdef double quantile_walk(self, double a, double b, double target):
        cdef double acc = 0.0, prev = a, d, seg, w, cut
        cdef Py_ssize_t n, i
        if target <= 0.0:
            return a
        n = self.merged_cuts(a, b)
        for i in range(n):
            cut = self.cuts[i]
            d = self.density_at(0.5 * (prev + cut))
            seg = d * (cut - prev)
            if d > 0.0 and acc + seg >= target:
                return prev + (target - acc) / d
            acc += seg
            if cut < b:
                w = self.mass_at(cut)
                if w > 0.0 and acc + w >= target:
                    return cut
                acc += w
            prev = cut
        return b

    cdef double conditional_median(self, double a, double b):
        cdef double total = self.mass_open(a, b)
        if total <= 0.0:
            return 0.5 * (a + b)
        return self.quantile_walk(a, b, 0.5 * total)


# ---------------------------------------------------------------------------
# lazy max-heap keyed by (-score, left edge, id)

cdef class Heap:
    cdef double[::1] key
    cdef double[::1] lo
    cdef long[::1] ident
    cdef Py_ssize_t size, cap

    def __init__(self, Py_ssize_t cap):
        self.cap = cap
        self.size = 0
        self.key = np.empty(cap, dtype=np.float64)
        self.lo = np.empty(cap, dtype=np.float64)
        self.ident = np.empty(cap, dtype=np.int64)

    cdef void grow(self):
        cdef Py_ssize_t new_cap = self.cap * 2
        k = np.empty(new_cap, dtype=np.float64)
        l = np.empty(new_cap, dtype=np.float64)
        d = np.empty(new_cap, dtype=np.int64)
        k[: self.cap] = np.asarray(self.key)
        l[: self.cap] = np.asarray(self.lo)
        d[: self.cap] = np.asarray(self.ident)
        self.key = k
        self.lo = l
        self.ident = d
        self.cap = new_cap

    cdef inline bint less(self, Py_ssize_t i, Py_ssize_t j):
        if self.key[i] != self.key[j]:
            return self.key[i] < self.key[j]
        if self.lo[i] != self.lo[j]:
            return self.lo[i] < self.lo[j]
        return self.ident[i] < self.ident[j]

    cdef inline void swap(self, Py_ssize_t i, Py_ssize_t j):
        cdef double tk = self.key[i], tl = self.lo[i]
        cdef long td = self.ident[i]
        self.key[i] = self.key[j]
        self.lo[i] = self.lo[j]
        self.ident[i] = self.ident[j]
        self.key[j] = tk
        self.lo[j] = tl
        self.ident[j] = td

    cdef void push(self, double key, double lo, long ident):
        cdef Py_ssize_t i, parent
        if self.size == self.cap:
            self.grow()
        i = self.size
        self.key[i] = key
        self.lo[i] = lo
        self.ident[i] = ident
        self.size += 1
        while i > 0:
            parent = (i - 1) // 2
            if self.less(i, parent):
                self.swap(i, parent)
                i = parent
            else:
                break

    cdef long pop(self):
        """Remove and return the id of the minimum entry."""
        cdef long out = self.ident[0]
        cdef Py_ssize_t i = 0, left, right, best
        self.size -= 1
        if self.size > 0:
            self.key[0] = self.key[self.size]
            self.lo[0] = self.lo[self.size]
            self.ident[0] = self.ident[self.size]
            while True:
                left = 2 * i + 1
                right = left + 1
                best = i
                if left < self.size and self.less(left, best):
                    best = left
                if right < self.size and self.less(right, best):
                    best = right
                if best == i:
                    break
                self.swap(i, best)
                i = best
        return out


# ---------------------------------------------------------------------------
# main loop


def run_loop(f, p_lo, p_hi, p_d, p_cum, a_x, a_w, a_cum,
             int p, int policy, int mode, double eps_p, double eps2,
             long t_target, long max_iters, double f0, double f1):
    """Run the refinement loop; see refine._drive_python for the contract.

    Returns (status, breakpoints, values, trace_x, trace_sel, trace_xi,
    trace_sumsq).
    """
    cdef MeasureView mv = MeasureView(p_lo, p_hi, p_d, p_cum, a_x, a_w, a_cum)

    cdef Py_ssize_t cap = 4096
    if mode == MODE_BUDGET and 2 * t_target + 4 > cap:
        cap = 2 * t_target + 4

    lo_a = np.empty(cap, dtype=np.float64)
    hi_a = np.empty(cap, dtype=np.float64)
    flo_a = np.empty(cap, dtype=np.float64)
    fhi_a = np.empty(cap, dtype=np.float64)
    apow_a = np.empty(cap, dtype=np.float64)
    alive_a = np.zeros(cap, dtype=np.uint8)
    cdef double[::1] lo = lo_a
    cdef double[::1] hi = hi_a
    cdef double[::1] flo = flo_a
    cdef double[::1] fhi = fhi_a
    cdef double[::1] apow = apow_a
    cdef unsigned char[::1] alive = alive_a

    cdef Py_ssize_t tcap = 4096
    if mode == MODE_BUDGET and t_target + 2 > tcap:
        tcap = t_target + 2
    tx_a = np.empty(tcap, dtype=np.float64)
    ts_a = np.empty(tcap, dtype=np.float64)
    txi_a = np.empty(tcap, dtype=np.float64)
    tsq_a = np.empty(tcap, dtype=np.float64)
    cdef double[::1] tx = tx_a
    cdef double[::1] ts = ts_a
    cdef double[::1] txi = txi_a
    cdef double[::1] tsq = tsq_a

    cdef Heap heap_area = Heap(cap)
    cdef Heap heap_wid = Heap(cap)

    cdef double mass = mv.mass_open(0.0, 1.0)
    cdef double apw = powi(f1 - f0, p) * mass
    lo[0] = 0.0
    hi[0] = 1.0
    flo[0] = f0
    fhi[0] = f1
    apow[0] = apw
    alive[0] = 1
    heap_area.push(-apw, 0.0, 0)
    heap_wid.push(-mass, 0.0, 0)

    cdef Py_ssize_t nbox = 1
    cdef long t = 1
    cdef long n_pos = 1 if apw > 0.0 else 0
    cdef double xi = apw
    cdef double sumsq = apw * apw
    cdef long splits_since = 0
    cdef Py_ssize_t ntrace = 1
    tx[0] = NAN
    ts[0] = NAN
    txi[0] = xi
    tsq[0] = sumsq

    cdef int status = -1
    cdef bint use_width
    cdef long idx
    cdef double a, b, fa, fb, med, fm, mass1, mass2, apow1, apow2
    cdef double parent_apow, delta, dsq, v
    cdef Py_ssize_t i, i1, i2

    while True:
        if mode == MODE_EPS and xi <= eps_p:
            status = 0
            break
        if mode == MODE_STOCH and 0.25 * sumsq <= eps2:
            status = 0
            break
        if mode == MODE_BUDGET and t >= t_target:
            status = 1
            break
        if n_pos == 0:
            status = 3
            break
        if mode != MODE_BUDGET and t >= max_iters:
            status = 2
            break

        # select
        if policy == 1:
            use_width = True
        elif policy == 2:
            use_width = (t % 2 == 0)
        else:
            use_width = False
        if use_width:
            idx = heap_wid.pop()
            while alive[idx] == 0:
                idx = heap_wid.pop()
        else:
            idx = heap_area.pop()
            while alive[idx] == 0:
                idx = heap_area.pop()

        a = lo[idx]
        b = hi[idx]
        fa = flo[idx]
        fb = fhi[idx]
        med = mv.conditional_median(a, b)
        if not (a < med < b):
            med = 0.5 * (a + b)
        if not (a < med < b):
            status = 4
            break
        fm = f(med)
        if fm < fa - 1e-12 or fm > fb + 1e-12:
            raise OracleValueError(
                f"f({med}) = {fm} breaks monotonicity on "
                f"[{a}, {b}] -> [{fa}, {fb}]")
        if fm < fa:
            fm = fa
        elif fm > fb:
            fm = fb

        mass1 = mv.mass_open(a, med)
        mass2 = mv.mass_open(med, b)
        apow1 = powi(fm - fa, p) * mass1
        apow2 = powi(fb - fm, p) * mass2
        parent_apow = apow[idx]

        if nbox + 2 > cap:
            cap = cap * 2
            new = np.empty(cap, dtype=np.float64); new[:nbox] = lo_a[:nbox]
            lo_a = new; lo = lo_a
            new = np.empty(cap, dtype=np.float64); new[:nbox] = hi_a[:nbox]
            hi_a = new; hi = hi_a
            new = np.empty(cap, dtype=np.float64); new[:nbox] = flo_a[:nbox]
            flo_a = new; flo = flo_a
            new = np.empty(cap, dtype=np.float64); new[:nbox] = fhi_a[:nbox]
            fhi_a = new; fhi = fhi_a
            new = np.empty(cap, dtype=np.float64); new[:nbox] = apow_a[:nbox]
            apow_a = new; apow = apow_a
            newb = np.zeros(cap, dtype=np.uint8); newb[:nbox] = alive_a[:nbox]
            alive_a = newb; alive = alive_a

        alive[idx] = 0
        i1 = nbox
        lo[i1] = a; hi[i1] = med; flo[i1] = fa; fhi[i1] = fm
        apow[i1] = apow1; alive[i1] = 1
        i2 = nbox + 1
        lo[i2] = med; hi[i2] = b; flo[i2] = fm; fhi[i2] = fb
        apow[i2] = apow2; alive[i2] = 1
        nbox += 2

        heap_area.push(-apow1, a, i1)
        heap_area.push(-apow2, med, i2)
        heap_wid.push(-mass1, a, i1)
        heap_wid.push(-mass2, med, i2)

        if parent_apow > 0.0:
            n_pos -= 1
        if apow1 > 0.0:
            n_pos += 1
        if apow2 > 0.0:
            n_pos += 1

        delta = (apow1 + apow2) - parent_apow
        xi = xi + delta
        dsq = (apow1 * apow1 + apow2 * apow2) - parent_apow * parent_apow
        sumsq = sumsq + dsq
        t += 1
        splits_since += 1
        if splits_since == RECOMPUTE_EVERY:
            xi = 0.0
            sumsq = 0.0
            for i in range(nbox):
                if alive[i]:
                    v = apow[i]
                    xi += v
                    sumsq += v * v
            splits_since = 0

        if ntrace + 1 > tcap:
            tcap = tcap * 2
            new = np.empty(tcap, dtype=np.float64); new[:ntrace] = tx_a[:ntrace]
            tx_a = new; tx = tx_a
            new = np.empty(tcap, dtype=np.float64); new[:ntrace] = ts_a[:ntrace]
            ts_a = new; ts = ts_a
            new = np.empty(tcap, dtype=np.float64); new[:ntrace] = txi_a[:ntrace]
            txi_a = new; txi = txi_a
            new = np.empty(tcap, dtype=np.float64); new[:ntrace] = tsq_a[:ntrace]
            tsq_a = new; tsq = tsq_a
        tx[ntrace] = med
        ts[ntrace] = a
        txi[ntrace] = xi
        tsq[ntrace] = sumsq
        ntrace += 1

    # extract sorted breakpoints/values of live boxes
    ids = np.nonzero(alive_a[:nbox])[0]
    order = np.argsort(lo_a[ids], kind="stable")
    ids = ids[order]
    breaks = np.empty(len(ids) + 1, dtype=np.float64)
    vals = np.empty(len(ids) + 1, dtype=np.float64)
    breaks[:-1] = lo_a[ids]
    breaks[-1] = 1.0
    vals[:-1] = flo_a[ids]
    vals[-1] = fhi_a[ids[-1]]
    return (status, breaks, vals,
            tx_a[:ntrace].copy(), ts_a[:ntrace].copy(),
            txi_a[:ntrace].copy(), tsq_a[:ntrace].copy())
