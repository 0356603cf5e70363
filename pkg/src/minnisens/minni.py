"""Indifference regions and minimum-nonignorability (MinNI) indices.

Difference scale: the bias satisfies |E[Y] - E[Y|G=1]| = |ED_YU * RD_UG| Pr[G=0]
for a binary confounder, and at most (m-1) MD_YU MD_UG Pr[G=0] for an m-level
one. Ratio scale: |E[Y]/E[Y|G=1] - 1| <= |(ER-1)(RR-1)/(ER RR)| Pr[G=0]. The
MinNI is the boundary point of the indifference region closest to no
confounding, (0, 0) or (1, 1).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSummaryError, DiscordantAssociationError, NoAnalysisNeeded, SensitivityError
from .summary import BINARY, ObservedSummary, round_sig

DIFFERENCE = "difference"
RATIO = "ratio"
SCALES = (DIFFERENCE, RATIO)


@dataclass(frozen=True)
class MinNIResult:
    scale: str
    threshold: float
    index: Optional[tuple]
    k_sigma: float
    m_levels: int = 2
    feasible: bool = True
    outcome_kind: str = BINARY

    def rounded(self, digits: int = 2) -> Optional[tuple]:
        if self.index is None:
            return None
        return tuple(round(v, digits) for v in self.index)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "threshold": round_sig(self.threshold),
            "index": None if self.index is None else [round_sig(v) for v in self.index],
            "k_sigma": round_sig(self.k_sigma),
            "m_levels": self.m_levels,
            "feasible": self.feasible,
            "outcome_kind": self.outcome_kind,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def describe(self) -> str:
        names = ("|ED_YU|", "|RD_UG|") if self.scale == DIFFERENCE else ("ER_YU", "RR_UG")
        if not self.feasible:
            return f"MinNI ({self.scale}): infeasible, threshold {self.threshold:.6g} exceeds the parameter domain"
        a, b = self.rounded()
        return f"MinNI ({self.scale}): ({names[0]}, {names[1]}) = ({a:.2f}, {b:.2f}), threshold {self.threshold:.6g}"


def _check_missing(frac_missing: float):
    if frac_missing == 0.0:
        raise NoAnalysisNeeded()
    if not 0.0 < frac_missing < 1.0:
        raise DegenerateSummaryError("MinNI needs 0 < frac_missing < 1")


def difference_threshold(summary: ObservedSummary, k_sigma: float, m: int = 2) -> float:
    """Right-hand side of the difference-scale indifference region, k sigma / ((m-1) Pr[G=0])."""
    _check_missing(summary.frac_missing)
    if k_sigma < 0:
        raise SensitivityError("k_sigma must be nonnegative")
    if m < 2:
        raise SensitivityError("a confounder needs at least 2 levels")
    return k_sigma / ((m - 1) * summary.frac_missing)


def ratio_threshold(summary: ObservedSummary, k_cv: float) -> float:
    _check_missing(summary.frac_missing)
    if summary.mu_obs == 0 or not math.isfinite(summary.cv_obs):
        raise DegenerateSummaryError("coefficient of variation undefined for mu_obs = 0")
    return abs(k_cv) / summary.frac_missing


def difference_index(threshold: float, outcome_kind: str = BINARY) -> Optional[tuple]:
    """Closed-form closest point to the origin on |ED * RD| = threshold.

    RD is confined to (0, 1]; a binary outcome also confines ED, so the point
    exists only for threshold <= 1.
    """
    root = math.sqrt(threshold)
    if outcome_kind == BINARY:
        return (root, root) if threshold <= 1.0 else None
    return (max(threshold, root), min(1.0, root))


def ratio_index(threshold: float) -> Optional[tuple]:
    """Closest point to (1, 1) on (ER-1)(RR-1)/(ER RR) = threshold, both ratios > 1."""
    if threshold >= 1.0:
        return None
    v = 1.0 / (1.0 - math.sqrt(threshold))
    return (v, v)


def minni_difference(
    summary: ObservedSummary, k_sigma: float, m: int = 2, outcome_kind: Optional[str] = None
) -> MinNIResult:
    kind = outcome_kind or summary.outcome_kind
    t = difference_threshold(summary, k_sigma, m)
    index = difference_index(t, kind)
    return MinNIResult(DIFFERENCE, t, index, k_sigma, m, index is not None, kind)


def minni_ratio(summary: ObservedSummary, k_cv: float, m: int = 2) -> MinNIResult:
    """Ratio-scale MinNI; the categorical max-ratio version has the same closed form."""
    s = ratio_threshold(summary, k_cv)
    index = ratio_index(s)
    return MinNIResult(RATIO, s, index, k_cv, m, index is not None, summary.outcome_kind)


def minni_from_se(summary: ObservedSummary, scale: str, k_se: float, m: int = 2) -> MinNIResult:
    """MinNI with the bias budget given in standard errors of the observed mean."""
    k_sigma = k_se * summary.se_obs
    if scale == DIFFERENCE:
        return minni_difference(summary, k_sigma, m)
    if scale == RATIO:
        if summary.mu_obs == 0:
            raise DegenerateSummaryError("coefficient of variation undefined for mu_obs = 0")
        return minni_ratio(summary, k_sigma / summary.mu_obs, m)
    raise SensitivityError(f"unknown scale {scale!r}")


def bound_difference(ed_yu: float, rd_ug: float, pr_g0: float) -> float:
    """|ED * RD| Pr[G=0]; exact for a binary confounder."""
    return abs(ed_yu * rd_ug * pr_g0)


@dataclass(frozen=True)
class CategoricalBoundInput:
    m: int
    pr_g0: float
    md_yu: Optional[float] = None
    md_ug: Optional[float] = None
    mr_yu: Optional[float] = None
    mr_ug: Optional[float] = None

    def __post_init__(self):
        if self.m < 2:
            raise SensitivityError("m must be at least 2")
        if not 0.0 < self.pr_g0 < 1.0:
            raise SensitivityError("pr_g0 must lie in (0, 1)")
        for name in ("mr_yu", "mr_ug"):
            v = getattr(self, name)
            if v is not None and not v > 1.0:
                raise SensitivityError(f"{name} must exceed 1")


def bound_difference_categorical(inp: CategoricalBoundInput) -> float:
    """(m-1) |MD_YU MD_UG| Pr[G=0]."""
    if inp.md_yu is None or inp.md_ug is None:
        raise SensitivityError("md_yu and md_ug are required")
    return (inp.m - 1) * abs(inp.md_yu * inp.md_ug) * inp.pr_g0


def bound_ratio(er_yu: float, rr_ug: float, pr_g0: float) -> float:
    """Binary-confounder bound on |E[Y]/E[Y|G=1] - 1|."""
    if not rr_ug > 0:
        raise SensitivityError("rr_ug must be positive")
    if er_yu == 0:
        raise SensitivityError("er_yu must be nonzero")
    return abs((er_yu - 1.0) * (rr_ug - 1.0) / (er_yu * rr_ug)) * pr_g0


def bound_ratio_categorical(mr_yu: float, mr_ug: float) -> float:
    """Max-ratio bound on |E[Y]/E[Y|G=1] - 1| for an m-level confounder (no Pr[G=0] factor)."""
    if not (mr_yu >= 1.0 and mr_ug >= 1.0):
        raise SensitivityError("maximal ratios must be at least 1")
    return (mr_yu - 1.0) * (mr_ug - 1.0) / (mr_yu * mr_ug)


@dataclass(frozen=True)
class CategoricalConfounding:
    md_yu: float
    md_ug: float
    mr_yu: float
    mr_ug: float
    concordant: bool


def categorical_confounding(
    e_y_given_u: Sequence[float],
    pr_u_given_g1: Sequence[float],
    pr_u_given_g0: Sequence[float],
) -> CategoricalConfounding:
    """Maximal differences and ratios of an m-level confounder.

    ``concordant`` is True when E[Y|G=0] <= E[Y|G=1], the ordering under which
    the max-ratio bound is derived.
    """
    e = np.asarray(e_y_given_u, dtype=float)
    p1 = np.asarray(pr_u_given_g1, dtype=float)
    p0 = np.asarray(pr_u_given_g0, dtype=float)
    if not (e.shape == p1.shape == p0.shape) or e.ndim != 1 or e.size < 2:
        raise SensitivityError("need equal-length vectors over at least 2 levels")
    md_yu = float(e.max() - e.min())
    md_ug = float(np.max(p1 - p0))
    if e.min() > 0 and np.all(p0 > 0):
        mr_yu = float(e.max() / e.min())
        mr_ug = float(np.max(p1 / p0))
    else:
        mr_yu = mr_ug = float("nan")
    concordant = bool(np.dot(e, p0) <= np.dot(e, p1))
    return CategoricalConfounding(md_yu, md_ug, mr_yu, mr_ug, concordant)


def max_ratio_parameters(e_y_given_u, pr_u_given_g1, pr_u_given_g0) -> tuple:
    """(MR_YU, MR_UG), rejecting configurations the max-ratio bound does not cover."""
    c = categorical_confounding(e_y_given_u, pr_u_given_g1, pr_u_given_g0)
    if math.isnan(c.mr_yu):
        raise SensitivityError("ratios need positive E[Y|U] and Pr[U|G=0]")
    if not c.concordant:
        raise DiscordantAssociationError(
            "E[Y|G=0] > E[Y|G=1]: the associations run in opposite directions; "
            "no max-ratio bound is available for this configuration"
        )
    return c.mr_yu, c.mr_ug


def indifference_region_check(
    scale: str, first: float, second: float, summary: ObservedSummary, k: float, m: int = 2
) -> bool:
    """True iff the parameter pair lies in the indifference region.

    ``first, second`` are (ED, RD) with budget k = k*sigma on the difference
    scale, or (ER, RR) with k = k*CV on the ratio scale.
    """
    if scale == DIFFERENCE:
        if abs(second) > 1.0:
            raise SensitivityError("|RD_UG| must not exceed 1")
        return abs(first * second) <= difference_threshold(summary, k, m)
    if scale == RATIO:
        if not second > 0:
            raise SensitivityError("RR_UG must be positive")
        if first == 0:
            raise SensitivityError("ER_YU must be nonzero")
        lhs = abs((first - 1.0) * (second - 1.0) / (first * second))
        return lhs <= ratio_threshold(summary, k)
    raise SensitivityError(f"unknown scale {scale!r}")
