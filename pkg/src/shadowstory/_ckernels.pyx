# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shadow kernels; same signatures and semantics as ``_pykernels``."""

from libc.math cimport exp, expm1
from libc.stdlib cimport malloc, free


def decay(double[:, ::1] W, double[::1] pool, Py_ssize_t nrows, Py_ssize_t ncols, double factor):
    cdef Py_ssize_t r, c
    cdef double released, w
    with nogil:
        for r in range(nrows):
            released = 0.0
            for c in range(ncols):
                w = W[r, c]
                if w != 0.0:
                    W[r, c] = w * factor
                    released += w - W[r, c]
            pool[r] += released


def match_transfer(double[:, ::1] W, double[::1] pool, double[:, ::1] G,
                   Py_ssize_t nrows, Py_ssize_t ncols, double rate):
    cdef Py_ssize_t r, c
    cdef double s, t, k, nw, overflow
    with nogil:
        for r in range(nrows):
            s = 0.0
            for c in range(ncols):
                s += G[r, c]
            if s <= 0.0 or pool[r] <= 0.0:
                continue
            t = rate * s
            if pool[r] < t:
                t = pool[r]
            k = t / s
            overflow = 0.0
            for c in range(ncols):
                if G[r, c] != 0.0:
                    nw = W[r, c] + k * G[r, c]
                    if nw > 1.0:
                        overflow += nw - 1.0
                        nw = 1.0
                    W[r, c] = nw
            pool[r] = pool[r] - t + overflow


def vi_gains(double[:, ::1] G, double[:, ::1] S, double[:, ::1] Winst,
             long[:, ::1] head_parts, long[:, ::1] part_cols,
             Py_ssize_t nrows, Py_ssize_t ncols):
    cdef Py_ssize_t r, c, s, nslots
    cdef long hp, pc
    cdef double cm
    with nogil:
        for r in range(nrows):
            nslots = 0
            for s in range(2):
                if head_parts[r, s] >= 0:
                    nslots += 1
            for c in range(ncols):
                if S[r, c] == 0.0:
                    G[r, c] = 0.0
                    continue
                if nslots == 0:
                    G[r, c] = S[r, c]
                    continue
                cm = 0.0
                for s in range(2):
                    hp = head_parts[r, s]
                    pc = part_cols[c, s]
                    if hp >= 0 and pc >= 0:
                        cm += Winst[hp, pc]
                G[r, c] = S[r, c] * (cm / nslots)


def consistency(double[:, ::1] Wvi, double[:, ::1] Winst,
                long[:, ::1] head_parts, long[:, ::1] part_cols,
                long[::1] row_arity, long[::1] col_arity,
                Py_ssize_t nrows, Py_ssize_t ncols, double rate,
                bint order2=False, bint reverse=False):
    cdef Py_ssize_t i, j, r, c
    cdef long hp0, hp1, pc0, pc1
    cdef int n, use0, use1
    cdef double p, q0, q1, mean, delta, qmin, qmax, share
    cdef double f1, f2
    if order2:
        f1 = 0.5 * -expm1(-rate)
        f2 = 2.0 / 3.0 * -expm1(-rate * 0.75)
    else:
        f1 = rate / 2.0
        f2 = rate / 2.0
    with nogil:
        for i in range(nrows):
            r = nrows - 1 - i if reverse else i
            hp0 = head_parts[r, 0]
            hp1 = head_parts[r, 1]
            for j in range(ncols):
                c = ncols - 1 - j if reverse else j
                p = Wvi[r, c]
                if p <= 0.0 or col_arity[c] != row_arity[r]:
                    continue
                pc0 = part_cols[c, 0]
                pc1 = part_cols[c, 1]
                use0 = hp0 >= 0 and pc0 >= 0
                use1 = hp1 >= 0 and pc1 >= 0
                n = use0 + use1
                if n == 0:
                    continue
                q0 = Winst[hp0, pc0] if use0 else 0.0
                q1 = Winst[hp1, pc1] if use1 else 0.0
                if use0 and use1:
                    qmin = q0 if q0 < q1 else q1
                    qmax = q0 if q0 > q1 else q1
                elif use0:
                    qmin = q0
                    qmax = q0
                else:
                    qmin = q1
                    qmax = q1
                mean = (q0 + q1) / n
                delta = (mean - p) * (f2 if n == 2 else f1)
                if delta > 0.0:
                    if delta > n * qmin:
                        delta = n * qmin
                    if delta > 1.0 - p:
                        delta = 1.0 - p
                elif delta < 0.0:
                    if delta < -n * (1.0 - qmax):
                        delta = -n * (1.0 - qmax)
                else:
                    continue
                Wvi[r, c] = p + delta
                share = delta / n
                if use0:
                    Winst[hp0, pc0] -= share
                if use1:
                    Winst[hp1, pc1] -= share


cdef void _clamp_redistribute(double* col, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t it, i
    cdef double excess, mass
    for it in range(m):
        excess = 0.0
        for i in range(m):
            if col[i] > 1.0:
                excess += col[i] - 1.0
                col[i] = 1.0
        if excess <= 0.0:
            return
        mass = 0.0
        for i in range(m):
            if col[i] > 0.0 and col[i] < 1.0:
                mass += col[i]
        if mass <= 0.0:
            return
        for i in range(m):
            if col[i] > 0.0 and col[i] < 1.0:
                col[i] += excess * col[i] / mass


cdef void _sharpen_field(double* w, double* f, char* mask, Py_ssize_t m,
                         Py_ssize_t cnt) noexcept nogil:
    cdef Py_ssize_t i
    cdef double total = 0.0, mean, fsum = 0.0, proj
    for i in range(m):
        total += w[i]
    mean = total / cnt
    for i in range(m):
        f[i] = w[i] * (w[i] - mean) if mask[i] else 0.0
        fsum += f[i]
    proj = fsum / total if total > 0.0 else 0.0
    for i in range(m):
        if mask[i]:
            f[i] -= w[i] * proj


def sharpen(double[:, ::1] W, Py_ssize_t nrows, Py_ssize_t ncols, double rate,
            bint order2=False):
    if nrows < 2 or ncols == 0:
        return
    cdef Py_ssize_t r, c, cnt
    cdef double old_sum, new_sum, mean, w, scale
    cdef int needs_clamp
    cdef double* col = <double*> malloc(3 * nrows * sizeof(double))
    cdef char* mask = <char*> malloc(nrows)
    if col == NULL or mask == NULL:
        free(col)
        free(mask)
        raise MemoryError()
    cdef double* half = col + nrows
    cdef double* f = col + 2 * nrows
    try:
        with nogil:
            for c in range(ncols):
                cnt = 0
                old_sum = 0.0
                for r in range(nrows):
                    w = W[r, c]
                    if w > 0.0:
                        cnt += 1
                        old_sum += w
                        mask[r] = 1
                    else:
                        mask[r] = 0
                    col[r] = w if w > 0.0 else 0.0
                if cnt < 2:
                    continue
                if order2:
                    _sharpen_field(col, f, mask, nrows, cnt)
                    for r in range(nrows):
                        half[r] = col[r] + 0.5 * rate * f[r]
                        if half[r] < 0.0:
                            half[r] = 0.0
                    _sharpen_field(half, f, mask, nrows, cnt)
                    for r in range(nrows):
                        col[r] = col[r] + rate * f[r] if mask[r] else 0.0
                else:
                    mean = old_sum / cnt
                    for r in range(nrows):
                        if mask[r]:
                            col[r] = col[r] + rate * col[r] * (col[r] - mean)
                new_sum = 0.0
                for r in range(nrows):
                    if col[r] < 0.0:
                        col[r] = 0.0
                    new_sum += col[r]
                scale = old_sum / new_sum if new_sum > 0.0 else 1.0
                needs_clamp = 0
                for r in range(nrows):
                    col[r] *= scale
                    if col[r] > 1.0:
                        needs_clamp = 1
                if needs_clamp:
                    _clamp_redistribute(col, nrows)
                for r in range(nrows):
                    W[r, c] = col[r]
    finally:
        free(col)
        free(mask)


def non_identity(double[:, ::1] W, long[:, ::1] pairs, Py_ssize_t nrows,
                 Py_ssize_t npairs, double rate, bint order2=False, bint reverse=False):
    cdef Py_ssize_t r, i, k
    cdef long a, b, tmp
    cdef double wa, wb, delta, tw
    cdef double frac = -expm1(-rate) if order2 else rate
    with nogil:
        for r in range(nrows):
            for i in range(npairs):
                k = npairs - 1 - i if reverse else i
                a = pairs[k, 0]
                b = pairs[k, 1]
                wa = W[r, a]
                wb = W[r, b]
                if wa <= 0.0 or wb <= 0.0 or wa == wb:
                    continue
                if wa < wb:
                    tmp = a
                    a = b
                    b = tmp
                    tw = wa
                    wa = wb
                    wb = tw
                delta = frac * wb
                if wa + delta > 1.0:
                    delta = 1.0 - wa
                W[r, a] = wa + delta
                W[r, b] = wb - delta


def decay_fund(double[:, ::1] W, double[::1] pool, double[:, ::1] R,
               Py_ssize_t nrows, Py_ssize_t ncols, double lam, double dt, double rscale):
    cdef Py_ssize_t r, c
    cdef double e = exp(-lam * dt)
    cdef double phi = -expm1(-lam * dt) / lam if lam > 0.0 else dt
    cdef double rs, s0, p0, p, phi_star, e_star, e_rem, total, w, k
    with nogil:
        for r in range(nrows):
            rs = 0.0
            s0 = 0.0
            for c in range(ncols):
                rs += rscale * R[r, c]
                s0 += W[r, c]
            p0 = pool[r]
            p = p0 + s0 * (1.0 - e) - rs * phi
            if p >= 0.0 or rs <= 0.0:
                for c in range(ncols):
                    W[r, c] = W[r, c] * e + rscale * R[r, c] * phi
            else:
                phi_star = p0 / (rs - lam * s0)
                e_star = 1.0 - lam * phi_star
                total = s0 + p0
                e_rem = e / e_star
                k = (1.0 - e_rem) * total / rs
                p = total
                for c in range(ncols):
                    w = W[r, c] * e_star + rscale * R[r, c] * phi_star
                    w = w * e_rem + k * rscale * R[r, c]
                    W[r, c] = w
                    p -= w
            for c in range(ncols):
                if W[r, c] > 1.0:
                    p += W[r, c] - 1.0
                    W[r, c] = 1.0
            pool[r] = p if p > 0.0 else 0.0
