"""Exact enumeration over small discrete (U, Y, G) joints.

A joint factorizes as f(u) f(y|u) f(g|u), so Y and G are independent given U
by construction. Moments are computed by summing the finite table directly,
never through the closed forms they are used to check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import SensitivityError
from .minni import (
    DIFFERENCE,
    RATIO,
    bound_difference,
    bound_difference_categorical,
    bound_ratio,
    bound_ratio_categorical,
    categorical_confounding,
    CategoricalBoundInput,
)
from .summary import BINARY
from .variance import VarianceInputs, variance_gap

PROB_TOL = 1e-12
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class JointDistribution:
    pi: np.ndarray  # Pr[U = u_i]
    pg_given_u: np.ndarray  # Pr[G=1 | U = u_i]
    y_support: np.ndarray
    y_probs: np.ndarray  # (m, len(y_support)), rows are f(y | u_i)

    @property
    def u_levels(self) -> int:
        return self.pi.size

    def table(self) -> np.ndarray:
        """Pr[U=u, Y=y, G=g] with shape (m, ny, 2); last axis is g = 0, 1."""
        pg = np.stack([1.0 - self.pg_given_u, self.pg_given_u], axis=1)
        return self.pi[:, None, None] * self.y_probs[:, :, None] * pg[:, None, :]


def _probs(name, v):
    a = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(a)) or np.any(a < -PROB_TOL) or np.any(a > 1 + PROB_TOL):
        raise SensitivityError(f"{name} entries must be probabilities")
    return np.clip(a, 0.0, 1.0)


def build_joint(pi, pg_given_u, py_given_u, y_support: Optional[Sequence[float]] = None) -> JointDistribution:
    """Joint from Pr[U], Pr[G=1|U] and the outcome law given U.

    A 1-D ``py_given_u`` is Pr[Y=1|U] for a binary outcome; a 2-D one gives
    rows of probabilities over ``y_support``.
    """
    pi = _probs("pi", pi)
    pg = _probs("pg_given_u", pg_given_u)
    py = _probs("py_given_u", py_given_u)
    if pi.ndim != 1 or pi.size < 2:
        raise SensitivityError("U needs at least 2 levels")
    if abs(pi.sum() - 1.0) > 1e-9:
        raise SensitivityError("pi must sum to 1")
    if py.ndim == 1:
        support = np.array([0.0, 1.0]) if y_support is None else np.asarray(y_support, dtype=float)
        if support.size != 2:
            raise SensitivityError("a probability vector describes a two-point outcome")
        py = np.stack([1.0 - py, py], axis=1)
    else:
        if y_support is None:
            raise SensitivityError("a 2-D outcome law needs y_support")
        support = np.asarray(y_support, dtype=float)
        if py.shape[1] != support.size:
            raise SensitivityError("outcome law does not match y_support")
        if np.any(np.abs(py.sum(axis=1) - 1.0) > 1e-9):
            raise SensitivityError("outcome law rows must sum to 1")
    if not (pg.shape == (pi.size,) and py.shape[0] == pi.size):
        raise SensitivityError("length mismatch between pi, pg_given_u and py_given_u")
    return JointDistribution(pi / pi.sum(), pg, support, py / py.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class ExactMoments:
    e_y: float
    e_y_given_g1: float
    e_y_given_g0: float
    pr_g0: float
    pr_u_given_g: np.ndarray  # (2, m), row g
    var_y: float
    var_y_given_g1: float
    e_y_given_u: np.ndarray
    var_y_given_u: np.ndarray
    defined: bool = True  # False when Pr[G=0] or Pr[G=1] is 0


def exact_moments(j: JointDistribution) -> ExactMoments:
    t = j.table()
    y = j.y_support
    p_g = t.sum(axis=(0, 1))
    p_yg = t.sum(axis=0)  # (ny, 2)
    p_y = p_yg.sum(axis=1)
    e_y = float(np.sum(p_y * y))
    var_y = float(np.sum(p_y * (y - e_y) ** 2))
    p_u = t.sum(axis=(1, 2))
    p_uy = t.sum(axis=2)
    e_y_u = (p_uy * y).sum(axis=1) / p_u
    var_y_u = (p_uy * (y[None, :] - e_y_u[:, None]) ** 2).sum(axis=1) / p_u
    defined = bool(p_g[0] > 0 and p_g[1] > 0)
    if defined:
        f_y_g = p_yg / p_g  # columns are f(y | g)
        e_g = (f_y_g * y[:, None]).sum(axis=0)
        var_g1 = float(np.sum(f_y_g[:, 1] * (y - e_g[1]) ** 2))
        pr_u_g = (t.sum(axis=1) / p_g).T
        e0, e1 = float(e_g[0]), float(e_g[1])
    else:
        e0 = e1 = var_g1 = float("nan")
        pr_u_g = np.full((2, j.u_levels), np.nan)
    return ExactMoments(e_y, e1, e0, float(p_g[0]), pr_u_g, var_y, var_g1, e_y_u, var_y_u, defined)


@dataclass
class IdentityReport:
    residuals: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)  # name -> (lhs, rhs, holds)
    skipped: dict = field(default_factory=dict)

    @property
    def bounds_hold(self) -> bool:
        return all(ok for _, _, ok in self.bounds.values())


def binary_parameters(mo: ExactMoments) -> dict:
    """ED, RD, ER, RR and the variance differences of a binary confounder."""
    p1 = mo.pr_u_given_g[1, 1]
    p0 = mo.pr_u_given_g[0, 1]
    e0, e1 = mo.e_y_given_u
    return {
        "ed_yu": float(e1 - e0),
        "rd_ug": float(p1 - p0),
        "er_yu": float(e1 / e0) if e0 != 0 else float("nan"),
        "rr_ug": float(p1 / p0) if p0 != 0 else float("nan"),
        "pr_u1_given_g0": float(p0),
        "vd_yu": float(mo.var_y_given_u[0] - mo.var_y_given_u[1]),
        "vd_ug": float(p0 * (1 - p0) - p1 * (1 - p1)),
    }


def _bound(report, name, lhs, rhs):
    report.bounds[name] = (float(lhs), float(rhs), bool(lhs <= rhs + BOUND_SLACK))


def check_identities(j: JointDistribution) -> IdentityReport:
    """Residuals of the exact binary-confounder identities and the categorical bounds."""
    rep = IdentityReport()
    mo = exact_moments(j)
    if not mo.defined:
        rep.skipped["all"] = "Pr[G=1] or Pr[G=0] is zero"
        return rep
    bias = mo.e_y - mo.e_y_given_g1
    rep.residuals["total_expectation"] = abs(
        mo.e_y - (mo.e_y_given_g1 * (1 - mo.pr_g0) + mo.e_y_given_g0 * mo.pr_g0)
    )

    pg_const = np.ptp(j.pg_given_u) == 0
    y_const = bool(np.all(np.ptp(j.y_probs, axis=0) == 0))
    if pg_const or y_const:
        rep.residuals["ignorability"] = abs(bias) + abs(mo.var_y - mo.var_y_given_g1)
    else:
        rep.skipped["ignorability"] = "confounded joint"

    if j.u_levels == 2:
        bp = binary_parameters(mo)
        rep.residuals["mean_decomposition"] = abs(bias + bp["ed_yu"] * bp["rd_ug"] * mo.pr_g0)
        rep.residuals["mean_difference_bound"] = abs(
            abs(bias) - bound_difference(bp["ed_yu"], bp["rd_ug"], mo.pr_g0)
        )
        vin = VarianceInputs(bp["vd_yu"], bp["vd_ug"], bp["ed_yu"], bp["rd_ug"], 1 - mo.pr_g0)
        rep.residuals["variance_gap"] = abs((mo.var_y - mo.var_y_given_g1) - variance_gap(vin))
        er, rr, p0 = bp["er_yu"], bp["rr_ug"], bp["pr_u1_given_g0"]
        if mo.e_y_given_g1 != 0 and math.isfinite(er) and math.isfinite(rr) and p0 > 0:
            ratio = mo.e_y_given_g0 / mo.e_y_given_g1
            rhs = (er - 1 + 1 / p0) / ((er - 1) * rr + 1 / p0)
            rep.residuals["ratio_decomposition"] = abs(ratio - rhs)
            if er > 0:
                _bound(rep, "ratio_bound", abs(mo.e_y / mo.e_y_given_g1 - 1), bound_ratio(er, rr, mo.pr_g0))
            else:
                rep.skipped["ratio_bound"] = "ER_YU <= 0"
        else:
            rep.skipped["ratio_decomposition"] = "ratio parameters undefined"
    else:
        for name in ("mean_decomposition", "variance_gap", "ratio_decomposition"):
            rep.skipped[name] = "exact identity needs a binary confounder"

    cat = categorical_confounding(mo.e_y_given_u, mo.pr_u_given_g[1], mo.pr_u_given_g[0])
    inp = CategoricalBoundInput(j.u_levels, mo.pr_g0, md_yu=cat.md_yu, md_ug=cat.md_ug)
    _bound(rep, "categorical_difference_bound", abs(bias), bound_difference_categorical(inp))
    if math.isnan(cat.mr_yu):
        rep.skipped["categorical_ratio_bound"] = "ratios undefined"
    elif not cat.concordant:
        rep.skipped["categorical_ratio_bound"] = "discordant: E[Y|G=0] > E[Y|G=1]"
    else:
        lhs = abs(mo.e_y / mo.e_y_given_g1 - 1)
        _bound(rep, "categorical_ratio_bound", lhs, bound_ratio_categorical(cat.mr_yu, cat.mr_ug))
    return rep


def random_joint(rng: np.random.Generator, m: int = 2, y_support: Optional[Sequence[float]] = None) -> JointDistribution:
    pi = rng.dirichlet(np.ones(m))
    pg = rng.uniform(0.02, 0.98, size=m)
    if y_support is None:
        return build_joint(pi, pg, rng.uniform(0.02, 0.98, size=m))
    py = rng.dirichlet(np.ones(len(y_support)), size=m)
    return build_joint(pi, pg, py, y_support)


def reflect_outcome(j: JointDistribution) -> JointDistribution:
    """Relabel Y -> min + max - Y, which reverses the ordering of E[Y|G=0] and E[Y|G=1]."""
    support = (j.y_support.min() + j.y_support.max()) - j.y_support
    return JointDistribution(j.pi, j.pg_given_u, support, j.y_probs)


def concordant(j: JointDistribution) -> JointDistribution:
    mo = exact_moments(j)
    return j if mo.e_y_given_g0 <= mo.e_y_given_g1 else reflect_outcome(j)


@dataclass
class SweepReport:
    seed: int
    n_joints: int
    max_residual: dict = field(default_factory=dict)
    bound_checks: dict = field(default_factory=dict)
    bound_violations: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_joints": self.n_joints,
            "max_residual": {k: float(v) for k, v in sorted(self.max_residual.items())},
            "bound_checks": dict(sorted(self.bound_checks.items())),
            "bound_violations": dict(sorted(self.bound_violations.items())),
        }


def sweep(n: int, seed: int, m_values: Sequence[int] = (2,), y_support=None, orient: bool = True) -> SweepReport:
    """Check every identity on `n` random joints drawn with a fixed seed.

    With ``orient`` each joint is relabelled (Y -> min+max-Y) when needed so the
    categorical ratio bound's ordering hypothesis holds.
    """
    rng = np.random.default_rng(seed)
    rep = SweepReport(seed, n)
    for _ in range(n):
        m = int(rng.choice(m_values))
        j = random_joint(rng, m, y_support)
        if orient:
            j = concordant(j)
        r = check_identities(j)
        for k, v in r.residuals.items():
            rep.max_residual[k] = max(rep.max_residual.get(k, 0.0), v)
        for k, (_, _, ok) in r.bounds.items():
            rep.bound_checks[k] = rep.bound_checks.get(k, 0) + 1
            rep.bound_violations[k] = rep.bound_violations.get(k, 0) + (not ok)
    return rep


def joint_from_ratio_parameters(er_yu, rr_ug, pr_u1_given_g0, pr_g0, e_y_u0) -> JointDistribution:
    """Binary-outcome joint with prescribed ER_YU, RR_UG, Pr[U=1|G=0], Pr[G=0] and E[Y|U=0]."""
    p0 = pr_u1_given_g0
    p1 = rr_ug * p0
    e1 = er_yu * e_y_u0
    if not (0 < p0 < 1 and 0 < p1 < 1 and 0 <= e_y_u0 <= 1 and 0 <= e1 <= 1 and 0 < pr_g0 < 1):
        raise SensitivityError("ratio parameters do not define a valid joint")
    pr_g1 = 1 - pr_g0
    pu1 = p1 * pr_g1 + p0 * pr_g0
    pg = [(1 - p1) * pr_g1 / (1 - pu1), p1 * pr_g1 / pu1]
    return build_joint([1 - pu1, pu1], pg, [e_y_u0, e1])


@dataclass(frozen=True)
class StratumJoint:
    label: str
    weight: float
    joint: JointDistribution


def exact_stratified_bias(strata: Sequence[StratumJoint]) -> tuple[dict, float]:
    """Per-stratum E[Y|X] - E[Y|X,G=1] and E[Y] - sum_x Pr[X=x] E[Y|X=x,G=1]."""
    per = {}
    e_y = adjusted = 0.0
    for s in strata:
        mo = exact_moments(s.joint)
        per[s.label] = mo.e_y - mo.e_y_given_g1
        e_y += s.weight * mo.e_y
        adjusted += s.weight * mo.e_y_given_g1
    return per, e_y - adjusted


# -- numeric constrained minimization -------------------------------------------------

@dataclass(frozen=True)
class NumericMinNI:
    point: Optional[tuple]
    feasible: bool
    grid_point: Optional[tuple] = None


def _constraint(scale):
    if scale == DIFFERENCE:
        return lambda x, y: x * y, (0.0, 0.0)
    return lambda x, y: (x - 1.0) * (y - 1.0) / (x * y), (1.0, 1.0)


def _bisect(fun, lo, hi, iters=200):
    # fun(lo) < 0 <= fun(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fun(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def _golden(fun, lo, hi, tol=1e-13):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * max(1.0, abs(a)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def numeric_minni(
    threshold: float,
    scale: str,
    domain_bounds: Optional[tuple] = None,
    outcome_kind: str = BINARY,
    n: int = 2000,
) -> NumericMinNI:
    """Closest point to no confounding on the infeasible side of the constraint, found numerically.

    An ``n`` x ``n`` grid search locates the best node satisfying the
    constraint; the point is then refined along the constraint boundary by
    bisection (boundary) and golden-section search (distance). ``domain_bounds``
    is ((x_lo, x_hi), (y_lo, y_hi)).
    """
    g, origin = _constraint(scale)
    if domain_bounds is None:
        if scale == DIFFERENCE:
            x_hi = 1.0 if outcome_kind == BINARY else 2.0 * max(1.0, threshold) + 1.0
            domain_bounds = ((0.0, x_hi), (0.0, 1.0))
        else:
            domain_bounds = ((1.0, 11.0), (1.0, 11.0))
    (x_lo, x_hi), (y_lo, y_hi) = domain_bounds
    grid = kernels.grid_min_difference if scale == DIFFERENCE else kernels.grid_min_ratio
    for _ in range(8):
        gx, gy, d2 = grid(threshold, x_lo, x_hi, y_lo, y_hi, n)
        on_edge = scale == RATIO and (gx >= x_hi or gy >= y_hi)
        if not on_edge:
            break
        x_hi, y_hi = 1.0 + 2.0 * (x_hi - 1.0), 1.0 + 2.0 * (y_hi - 1.0)
    if not math.isfinite(d2):
        return NumericMinNI(None, False)

    def boundary_y(x):
        return _bisect(lambda y: g(x, y) - threshold, y_lo, y_hi)

    def dist2(x):
        y = boundary_y(x)
        return (x - origin[0]) ** 2 + (y - origin[1]) ** 2

    h = (x_hi - x_lo) / (n - 1)
    lo, hi = max(x_lo, gx - 3 * h), min(x_hi, gx + 3 * h)
    # boundary must be reachable within the y domain
    if g(lo, y_hi) < threshold:
        lo = _bisect(lambda x: g(x, y_hi) - threshold, lo, hi)
    if g(lo, y_lo) >= threshold or lo >= hi:
        return NumericMinNI((gx, gy), True, (gx, gy))
    x = _golden(dist2, lo, hi)
    return NumericMinNI((x, boundary_y(x)), True, (gx, gy))
