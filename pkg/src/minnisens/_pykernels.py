"""Pure numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; ``kernels`` picks one at import.
"""
import numpy as np

# Marching-squares segment table. Edges: 0 bottom, 1 right, 2 top, 3 left.
# Corner bits: 1 bottom-left, 2 bottom-right, 4 top-right, 8 top-left.
# Indexed by [case][center_above] -> tuple of (edge, edge) segments.
_CORNER_EDGES = ((3, 0), (0, 1), (1, 2), (2, 3))


def _build_table():
    table = []
    for case in range(16):
        above = [(case >> k) & 1 for k in range(4)]
        crossing = [e for e, (p, q) in enumerate(((0, 1), (1, 2), (3, 2), (0, 3))) if above[p] != above[q]]
        row = []
        for center in (0, 1):
            if len(crossing) == 2:
                row.append(((crossing[0], crossing[1]),))
            elif len(crossing) == 4:
                # cut off the two corners whose state differs from the center
                row.append(tuple(_CORNER_EDGES[k] for k in range(4) if above[k] != center))
            else:
                row.append(())
        table.append(tuple(row))
    return tuple(table)


SEGMENT_TABLE = _build_table()


def bias_points(mu_obs, frac_missing, pi0, gamma1, beta1):
    """Calibrated bias E[Y] - E[Y|G=1] at each (gamma1, beta1) pair, logistic links."""
    gamma1 = np.asarray(gamma1, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    pm = frac_missing
    eg = np.exp(gamma1)
    b = (pm - pi0) * eg + pm + pi0 - 1.0
    a2 = eg * pm
    c = 1.0 - pm
    x = _positive_root(a2, b, c)
    w = pi0 / (pi0 + eg * (1.0 + x) / (1.0 + x * eg) * (1.0 - pi0))
    mc = 1.0 - mu_obs
    eb = np.exp(beta1)
    bb = (mc - w) * eb + mc + w - 1.0
    y = _positive_root(eb * mc, bb, 1.0 - mc)
    marginal = (1.0 - pi0) * (y * eb) / (1.0 + y * eb) + pi0 * y / (1.0 + y)
    return marginal - mu_obs


def _positive_root(a, b, c):
    # positive root of a*x^2 + b*x - c = 0 for a, c > 0, cancellation-free
    disc = np.sqrt(b * b + 4.0 * a * c)
    return np.where(b >= 0, 2.0 * c / (b + disc), (disc - b) / (2.0 * a))


def grid_min_difference(threshold, ed_lo, ed_hi, rd_lo, rd_hi, n):
    """Closest grid node to the origin with ed*rd >= threshold.

    Returns (ed, rd, squared distance), or NaNs if no node qualifies.
    """
    ed = np.linspace(ed_lo, ed_hi, n)
    rd = np.linspace(rd_lo, rd_hi, n)
    best = (np.nan, np.nan, np.inf)
    chunk = max(1, 2_000_000 // n)
    for start in range(0, n, chunk):
        e = ed[start:start + chunk, None]
        d2 = np.where(e * rd[None, :] >= threshold, e * e + rd[None, :] ** 2, np.inf)
        k = int(np.argmin(d2))
        i, j = divmod(k, n)
        if d2[i, j] < best[2]:
            best = (float(ed[start + i]), float(rd[j]), float(d2[i, j]))
    return best


def grid_min_ratio(threshold, er_lo, er_hi, rr_lo, rr_hi, n):
    """Closest grid node to (1, 1) with (ER-1)(RR-1)/(ER*RR) >= threshold."""
    er = np.linspace(er_lo, er_hi, n)
    rr = np.linspace(rr_lo, rr_hi, n)
    best = (np.nan, np.nan, np.inf)
    chunk = max(1, 2_000_000 // n)
    fr = (rr - 1.0) / rr
    for start in range(0, n, chunk):
        e = er[start:start + chunk, None]
        g = (e - 1.0) / e * fr[None, :]
        d2 = np.where(g >= threshold, (e - 1.0) ** 2 + (rr[None, :] - 1.0) ** 2, np.inf)
        k = int(np.argmin(d2))
        i, j = divmod(k, n)
        if d2[i, j] < best[2]:
            best = (float(er[start + i]), float(rr[j]), float(d2[i, j]))
    return best


def marching_segments(field, level):
    """Level-crossing segments of a 2-D field (rows = y, columns = x).

    Returns an int64 array of shape (nseg, 2) of edge ids, ordered by cell in
    row-major order. Horizontal edge (i, j)-(i, j+1) has id 2*(i*ncols+j);
    vertical edge (i, j)-(i+1, j) has id 2*(i*ncols+j)+1. A node counts as
    above when its value is >= level.
    """
    f = np.asarray(field, dtype=float)
    nrows, ncols = f.shape
    if nrows < 2 or ncols < 2:
        return np.zeros((0, 2), dtype=np.int64)
    up = f >= level
    bl, br = up[:-1, :-1], up[:-1, 1:]
    tr, tl = up[1:, 1:], up[1:, :-1]
    case = bl * 1 + br * 2 + tr * 4 + tl * 8
    center = (f[:-1, :-1] + f[:-1, 1:] + f[1:, 1:] + f[1:, :-1]) / 4.0 >= level
    ii, jj = np.nonzero((case != 0) & (case != 15))
    out_a, out_b = [], []
    for i, j in zip(ii.tolist(), jj.tolist()):
        segs = SEGMENT_TABLE[case[i, j]][int(center[i, j])]
        for ea, eb in segs:
            out_a.append(_edge_id(i, j, ea, ncols))
            out_b.append(_edge_id(i, j, eb, ncols))
    if not out_a:
        return np.zeros((0, 2), dtype=np.int64)
    return np.column_stack([out_a, out_b]).astype(np.int64)


def _edge_id(i, j, edge, ncols):
    if edge == 0:
        return 2 * (i * ncols + j)
    if edge == 1:
        return 2 * (i * ncols + j + 1) + 1
    if edge == 2:
        return 2 * ((i + 1) * ncols + j)
    return 2 * (i * ncols + j) + 1
