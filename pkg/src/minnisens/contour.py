"""Equal-bias isobols and MinNI boundary curves, emitted as CSV or standalone SVG.

Surface isobols live in the (gamma1, beta1) log-odds plane with a linear
scale. They are traced by marching squares on a sampled bias field, then
each crossing is refined by bisection on the exact bias along its grid edge.
"""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import kernels, minni
from .errors import SensitivityError
from .summary import ObservedSummary
from .surface import bias_field

GAMMA1_BETA1 = "gamma1_beta1"
ED_RD = "ed_rd"
ER_RR = "er_rr"
PLANES = (GAMMA1_BETA1, ED_RD, ER_RR)
AXIS_LABELS = {GAMMA1_BETA1: ("gamma1", "beta1"), ED_RD: ("|ED_YU|", "|RD_UG|"), ER_RR: ("ER_YU", "RR_UG")}

DEFAULT_RESOLUTION = 256
DEFAULT_TOLERANCE = 1e-4
ZERO_SNAP = 1e-14
CSV_COLUMNS = ("plane", "level", "point_index", "x", "y")


@dataclass(frozen=True)
class Isobol:
    level: float  # label: absolute bias, or k in SE units for MinNI curves
    target: float  # value of the level equation: bias, or the threshold T / S
    polylines: tuple = ()  # each an (n, 2) array of (x, y)
    minni: Optional[tuple] = None
    note: str = ""


@dataclass(frozen=True)
class IsobolSet:
    plane: str
    isobols: tuple
    x_range: tuple
    y_range: tuple
    level_units: str = "absolute"
    meta: dict = field(default_factory=dict)

    @property
    def levels(self) -> tuple:
        return tuple(iso.level for iso in self.isobols)

    def points(self, level) -> np.ndarray:
        for iso in self.isobols:
            if iso.level == level:
                return np.vstack(iso.polylines) if iso.polylines else np.zeros((0, 2))
        raise KeyError(level)


def _snap(v: np.ndarray) -> np.ndarray:
    # the bias is identically zero on the axes; remove round-off so the sign is exact
    return np.where(np.abs(v) < ZERO_SNAP, 0.0, v)


def stitch(segments: np.ndarray) -> list[list[int]]:
    """Join segments sharing an edge id into ordered chains (closed chains repeat their start)."""
    adj = defaultdict(list)
    for k, (a, b) in enumerate(segments.tolist()):
        adj[a].append((b, k))
        adj[b].append((a, k))
    used = np.zeros(len(segments), dtype=bool)
    chains = []

    def walk(start):
        chain = [start]
        node = start
        while True:
            nxt = next(((m, k) for m, k in adj[node] if not used[k]), None)
            if nxt is None:
                return chain
            used[nxt[1]] = True
            node = nxt[0]
            chain.append(node)

    for node in sorted(n for n, nb in adj.items() if len(nb) == 1):
        if any(not used[k] for _, k in adj[node]):
            chains.append(walk(node))
    for node in sorted(adj):
        if any(not used[k] for _, k in adj[node]):
            chains.append(walk(node))
    return chains


def _edge_endpoints(ids: np.ndarray, ncols: int):
    cell, vertical = np.divmod(ids, 2)
    i, j = np.divmod(cell, ncols)
    return i, j, i + vertical, j + (1 - vertical)


def _refine_crossings(evaluate, xs, ys, ids, ncols, level, iters=60):
    """Bisect each crossing edge on the exact field; the 'above' end is >= level."""
    i0, j0, i1, j1 = _edge_endpoints(ids, ncols)
    x0, y0, x1, y1 = xs[j0], ys[i0], xs[j1], ys[i1]
    up0 = _snap(evaluate(x0, y0)) >= level
    lo = np.where(up0, 1.0, 0.0)  # t of the below end
    hi = 1.0 - lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = _snap(evaluate(x0 + mid * (x1 - x0), y0 + mid * (y1 - y0))) >= level
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    t = 0.5 * (lo + hi)
    return x0 + t * (x1 - x0), y0 + t * (y1 - y0)


def trace_levels(evaluate: Callable, xs: np.ndarray, ys: np.ndarray, levels: Sequence[float]) -> list[list[np.ndarray]]:
    """Polylines of evaluate(x, y) == level for each level on the grid xs by ys."""
    gx, gy = np.meshgrid(xs, ys)
    f = _snap(evaluate(gx, gy))
    ncols = xs.size
    out = []
    for level in levels:
        segs = kernels.marching_segments(f, float(level))
        if len(segs) == 0:
            out.append([])
            continue
        chains = stitch(segs)
        ids = np.array(sorted({e for c in chains for e in c}), dtype=np.int64)
        px, py = _refine_crossings(evaluate, xs, ys, ids, ncols, float(level))
        where = {e: k for k, e in enumerate(ids.tolist())}
        polys = []
        for c in chains:
            k = [where[e] for e in c]
            polys.append(np.column_stack([px[k], py[k]]))
        out.append(polys)
    return out


def isobol_surface(
    summary: ObservedSummary,
    pi0: float = 0.5,
    gamma1_range: tuple = (0.0, math.log(4.0)),
    beta1_range: tuple = (0.0, math.log(4.0)),
    levels: Sequence[float] = (),
    resolution: int = DEFAULT_RESOLUTION,
    tolerance: float = DEFAULT_TOLERANCE,
) -> IsobolSet:
    """Isobols of E[Y] - E[Y|G=1] over (gamma1, beta1) at fixed pi0; levels are absolute bias."""
    if resolution < 2:
        raise SensitivityError("resolution must be at least 2")
    xs = np.linspace(*gamma1_range, resolution)
    ys = np.linspace(*beta1_range, resolution)

    def evaluate(g, b):
        return bias_field(summary, pi0, g, b)

    traced = trace_levels(evaluate, xs, ys, levels)
    isobols = []
    for level, polys in zip(levels, traced):
        note = "" if polys else "level not attained in the plotted range"
        if polys:
            err = max(float(np.max(np.abs(_snap(evaluate(p[:, 0], p[:, 1])) - level))) for p in polys)
            if err > tolerance:
                note = f"tracing error {err:.3g} exceeds tolerance"
        isobols.append(Isobol(float(level), float(level), tuple(polys), None, note))
    meta = {"pi0": pi0, "resolution": resolution}
    return IsobolSet(GAMMA1_BETA1, tuple(isobols), tuple(gamma1_range), tuple(beta1_range), "absolute", meta)


def _log_samples(lo, hi, n):
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


def minni_curves(
    summary: ObservedSummary,
    scale: str,
    k_se_levels: Sequence[float],
    m: int = 2,
    n_points: int = 512,
    x_max: Optional[float] = None,
    y_max: Optional[float] = None,
) -> IsobolSet:
    """Boundaries of the indifference region for each budget k (in SE units), with MinNI points."""
    isobols = []
    if scale == minni.DIFFERENCE:
        plane = ED_RD
        y_max = 1.0 if y_max is None else y_max
        if x_max is None:
            x_max = 1.0 if summary.outcome_kind == "binary" else 2.0 * max(
                1.0, max(minni.difference_threshold(summary, k * summary.se_obs, m) for k in k_se_levels)
            )
        x_lo_range = 0.0
    elif scale == minni.RATIO:
        plane = ER_RR
        x_max = 3.0 if x_max is None else x_max
        y_max = 3.0 if y_max is None else y_max
        x_lo_range = 1.0
    else:
        raise SensitivityError(f"unknown scale {scale!r}")
    for k in k_se_levels:
        res = minni.minni_from_se(summary, scale, k, m)
        t = res.threshold
        if not res.feasible:
            isobols.append(Isobol(float(k), t, (), None, "infeasible"))
            continue
        if scale == minni.DIFFERENCE:
            lo = t / y_max
            polys = ()
            if 0 < lo < x_max:
                ed = _log_samples(lo, x_max, n_points)
                polys = (np.column_stack([ed, t / ed]),)
        else:
            u_hi = (x_max - 1.0) / x_max
            v_hi = (y_max - 1.0) / y_max
            u_lo = t / v_hi
            polys = ()
            if 0 < u_lo < u_hi:
                u = _log_samples(u_lo, u_hi, n_points)
                v = t / u
                polys = (np.column_stack([1.0 / (1.0 - u), 1.0 / (1.0 - v)]),)
        note = "" if polys else "curve outside the plotted range"
        isobols.append(Isobol(float(k), t, polys, res.index, note))
    meta = {"scale": scale, "m": m}
    return IsobolSet(plane, tuple(isobols), (x_lo_range, x_max), (x_lo_range, y_max), "se", meta)


def level_residual(iset: IsobolSet, summary: Optional[ObservedSummary] = None) -> float:
    """Largest |level equation - target| over every emitted point."""
    worst = 0.0
    for iso in iset.isobols:
        for p in iso.polylines:
            x, y = p[:, 0], p[:, 1]
            if iset.plane == GAMMA1_BETA1:
                if summary is None:
                    raise SensitivityError("surface isobols need the summary to re-evaluate")
                val = _snap(bias_field(summary, iset.meta["pi0"], x, y))
            elif iset.plane == ED_RD:
                val = np.abs(x * y)
            else:
                val = (x - 1.0) * (y - 1.0) / (x * y)
            worst = max(worst, float(np.max(np.abs(val - iso.target))))
    return worst


# -- emission --------------------------------------------------------------------------

def _num(x) -> str:
    return f"{float(x):.10g}"


def to_csv(iset: IsobolSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for iso in iset.isobols:
        k = 0
        for p in iso.polylines:
            for x, y in p:
                writer.writerow([iset.plane, _num(iso.level), k, _num(x), _num(y)])
                k += 1
    return buf.getvalue()


def parse_csv(text: str) -> dict:
    """(plane, level) -> (n, 2) array, inverse of :func:`to_csv` at 10 significant digits."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise SensitivityError("not an isobol CSV")
    pts = defaultdict(list)
    for row in reader:
        pts[(row["plane"], float(row["level"]))].append((float(row["x"]), float(row["y"])))
    return {k: np.array(v) for k, v in pts.items()}


SVG_W, SVG_H, MARGIN = 640, 480, 56


def to_svg(iset: IsobolSet) -> str:
    (x0, x1), (y0, y1) = iset.x_range, iset.y_range

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2 * MARGIN)

    def py(y):
        return SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2 * MARGIN)

    xl, yl = AXIS_LABELS[iset.plane]
    left, right, bottom, top = MARGIN, SVG_W - MARGIN, SVG_H - MARGIN, MARGIN
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
        f'<text x="{left}" y="{bottom + 16}" font-size="11">{x0:.3g}</text>',
        f'<text x="{right}" y="{bottom + 16}" font-size="11" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{left - 6}" y="{bottom}" font-size="11" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{left - 6}" y="{top + 4}" font-size="11" text-anchor="end">{y1:.3g}</text>',
        f'<text x="{(left + right) / 2:.3f}" y="{SVG_H - 16}" font-size="13" text-anchor="middle">{escape(xl)}</text>',
        f'<text x="16" y="{(top + bottom) / 2:.3f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + bottom) / 2:.3f})">{escape(yl)}</text>',
    ]
    for iso in iset.isobols:
        label = f"{iso.level:g}"
        for p in iso.polylines:
            d = " ".join(
                f"{'M' if k == 0 else 'L'}{px(x):.3f} {py(y):.3f}" for k, (x, y) in enumerate(p)
            )
            out.append(f'<path class="isobol" data-level="{label}" d="{d}" fill="none" stroke="black"/>')
            lx, ly = p[len(p) // 2]
            out.append(f'<text class="level" x="{px(lx):.3f}" y="{py(ly) - 4:.3f}" font-size="10">{label}</text>')
        if iso.minni is not None:
            a, b = iso.minni
            out.append(
                f'<circle class="minni" data-level="{label}" data-x="{a:.6f}" data-y="{b:.6f}" '
                f'cx="{px(a):.3f}" cy="{py(b):.3f}" r="3" fill="black"/>'
            )
            out.append(
                f'<text class="minni-label" x="{px(a) + 5:.3f}" y="{py(b) + 12:.3f}" font-size="9">'
                f'({a:.2f}, {b:.2f})</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(iset: IsobolSet, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(iset)
    if fmt == "svg":
        return to_svg(iset)
    raise SensitivityError(f"unsupported format {fmt!r}")
