"""Pure-Python/numpy shadow kernels (fallback for ``_ckernels``).

All kernels mutate their array arguments in place.  ``W`` arrays are
``(rows, cols)`` capacity buffers of which only ``[:nrows, :ncols]`` is live.

``order2`` selects the second-order form of a law (exact exponential flow or
a midpoint step) used inside the tick; the default is one explicit step of
the law.  ``reverse`` walks coupled groups in the opposite order so that a
forward and a reverse half-pass compose symmetrically.
"""

import math

import numpy as np


def decay(W, pool, nrows, ncols, factor):
    if nrows == 0 or ncols == 0:
        return
    live = W[:nrows, :ncols]
    before = live.sum(axis=1)
    live *= factor
    pool[:nrows] += before - live.sum(axis=1)


def match_transfer(W, pool, G, nrows, ncols, rate):
    for r in range(nrows):
        g = G[r, :ncols]
        s = g.sum()
        if s <= 0.0 or pool[r] <= 0.0:
            continue
        t = min(pool[r], rate * s)
        row = W[r, :ncols]
        row += (t / s) * g
        over = row > 1.0
        overflow = 0.0
        if over.any():
            overflow = float((row[over] - 1.0).sum())
            row[over] = 1.0
        pool[r] = pool[r] - t + overflow


def vi_gains(G, S, Winst, head_parts, part_cols, nrows, ncols):
    for r in range(nrows):
        slots = [s for s in range(2) if head_parts[r, s] >= 0]
        if not slots:
            G[r, :ncols] = S[r, :ncols]
            continue
        cm = np.zeros(ncols)
        for s in slots:
            cols = part_cols[:ncols, s]
            ok = cols >= 0
            vals = np.zeros(ncols)
            vals[ok] = Winst[head_parts[r, s], cols[ok]]
            cm += vals
        G[r, :ncols] = S[r, :ncols] * (cm / len(slots))


def consistency(Wvi, Winst, head_parts, part_cols, row_arity, col_arity, nrows, ncols, rate,
                order2=False, reverse=False):
    rows = range(nrows - 1, -1, -1) if reverse else range(nrows)
    for r in rows:
        hp0 = head_parts[r, 0]
        hp1 = head_parts[r, 1]
        cols = np.flatnonzero(Wvi[r, :ncols] > 0.0)
        if reverse:
            cols = cols[::-1]
        for c in cols:
            if col_arity[c] != row_arity[r]:
                continue
            cells = []
            if hp0 >= 0 and part_cols[c, 0] >= 0:
                cells.append((hp0, part_cols[c, 0]))
            if hp1 >= 0 and part_cols[c, 1] >= 0:
                cells.append((hp1, part_cols[c, 1]))
            n = len(cells)
            if n == 0:
                continue
            qs = [Winst[i, j] for i, j in cells]
            p = Wvi[r, c]
            mean = sum(qs) / n
            if order2:
                # mean(q) - p relaxes at rate*(n+1)/(2n); p takes n/(n+1) of the gap
                delta = (mean - p) * n / (n + 1) * -math.expm1(-rate * (n + 1) / (2 * n))
            else:
                delta = rate * (mean - p) / 2.0
            if delta > 0.0:
                delta = min(delta, n * min(qs), 1.0 - p)
            elif delta < 0.0:
                delta = max(delta, -n * (1.0 - max(qs)))
            else:
                continue
            Wvi[r, c] = p + delta
            share = delta / n
            for i, j in cells:
                Winst[i, j] -= share


def _sharpen_field(sub, mask, cnt):
    """Projected sharpening field; sums to zero over each column."""
    mean = sub.sum(axis=0) / cnt
    f = np.where(mask, sub * (sub - mean), 0.0)
    total = sub.sum(axis=0)
    proj = np.divide(f.sum(axis=0), total, out=np.zeros_like(total), where=total > 0)
    return f - np.where(mask, sub * proj, 0.0)


def sharpen(W, nrows, ncols, rate, order2=False):
    if nrows < 2 or ncols == 0:
        return
    M = W[:nrows, :ncols]
    mask = M > 0.0
    cnt = mask.sum(axis=0)
    cols = np.flatnonzero(cnt >= 2)
    if cols.size == 0:
        return
    sub = M[:, cols]
    m = mask[:, cols]
    k = cnt[cols]
    old_sum = sub.sum(axis=0)
    if order2:
        half = np.maximum(sub + 0.5 * rate * _sharpen_field(sub, m, k), 0.0)
        new = sub + rate * _sharpen_field(half, m, k)
    else:
        mean = old_sum / k
        new = np.where(m, sub + rate * sub * (sub - mean), 0.0)
    new = np.where(m, new, 0.0)
    np.maximum(new, 0.0, out=new)
    new_sum = new.sum(axis=0)
    scale = np.divide(old_sum, new_sum, out=np.ones_like(old_sum), where=new_sum > 0)
    new *= scale
    for j in np.flatnonzero((new > 1.0).any(axis=0)):
        new[:, j] = _clamp_redistribute(new[:, j])
    M[:, cols] = new


def _clamp_redistribute(col):
    col = col.copy()
    for _ in range(len(col)):
        over = col > 1.0
        if not over.any():
            break
        excess = (col[over] - 1.0).sum()
        col[over] = 1.0
        free = (col > 0.0) & (col < 1.0)
        mass = col[free].sum()
        if mass <= 0.0:
            break
        col[free] += excess * col[free] / mass
    return col


def non_identity(W, pairs, nrows, npairs, rate, order2=False, reverse=False):
    frac = -math.expm1(-rate) if order2 else rate
    ks = range(npairs - 1, -1, -1) if reverse else range(npairs)
    for r in range(nrows):
        for k in ks:
            a = pairs[k, 0]
            b = pairs[k, 1]
            wa = W[r, a]
            wb = W[r, b]
            if wa <= 0.0 or wb <= 0.0 or wa == wb:
                continue
            if wa < wb:
                a, b = b, a
                wa, wb = wb, wa
            delta = frac * wb
            if wa + delta > 1.0:
                delta = 1.0 - wa
            W[r, a] = wa + delta
            W[r, b] = wb - delta


def decay_fund(W, pool, R, nrows, ncols, lam, dt, rscale):
    """Exact joint flow of decay and pool-funded growth over ``dt``.

    Each weight decays at ``lam`` into the pool while growing at the fixed
    rate ``rscale * R``, paid from the pool.  When the pool runs dry the row
    switches to reinvesting what decays, in proportion to the rates.
    Overflow above 1 returns to the pool.
    """
    e = math.exp(-lam * dt)
    phi = -math.expm1(-lam * dt) / lam if lam > 0.0 else dt
    for r in range(nrows):
        w = W[r, :ncols]
        rates = rscale * R[r, :ncols]
        rs = float(rates.sum())
        s0 = float(w.sum())
        p0 = pool[r]
        p_end = p0 + s0 * (1.0 - e) - rs * phi
        if p_end >= 0.0 or rs <= 0.0:
            w *= e
            w += rates * phi
            p = p_end
        else:
            phi_star = p0 / (rs - lam * s0)
            e_star = 1.0 - lam * phi_star
            total = s0 + p0
            w *= e_star
            w += rates * phi_star
            e_rem = e / e_star
            w *= e_rem
            w += (1.0 - e_rem) * total / rs * rates
            p = total - float(w.sum())
        over = w > 1.0
        if over.any():
            p += float((w[over] - 1.0).sum())
            w[over] = 1.0
        pool[r] = max(p, 0.0)
