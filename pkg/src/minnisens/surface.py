"""Response-surface calibration for a binary unmeasured confounder U.

With Pr[U=0] = pi0, Pr[G=1|U=u] = expit(gamma0 + gamma1*u) and
E[Y|U=u] = q(beta0 + beta1*u), the two intercepts are fixed by matching the
observed Pr[G=1] and E[Y|G=1]; the marginal mean then follows.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import CalibrationError, DegenerateSummaryError, SensitivityError
from .summary import BINARY, ObservedSummary, round_sig

LOGISTIC = "logistic"
IDENTITY = "identity"
DEFAULT_PI0 = (0.1, 0.5, 0.9)


def expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def positive_root(a: float, b: float, c: float) -> float:
    """Positive root of a*x**2 + b*x - c = 0 with a, c > 0.

    The roots have product -c/a < 0, so exactly one is positive; this is the
    "+sqrt" root of the quadratic formula, evaluated without cancellation.
    """
    disc = b * b + 4.0 * a * c
    if disc < 0:
        raise CalibrationError(f"negative discriminant {disc!r}")
    root = math.sqrt(disc)
    x = 2.0 * c / (b + root) if b >= 0 else (root - b) / (2.0 * a)
    if not x > 0 or not math.isfinite(x):
        raise CalibrationError(f"calibration root is not positive and finite: {x!r}")
    return x


@dataclass(frozen=True)
class SurfaceParams:
    pi0: float
    gamma1: float
    beta1: float
    link: str = LOGISTIC

    def __post_init__(self):
        if not 0.0 < self.pi0 < 1.0:
            raise SensitivityError("pi0 must lie in (0, 1)")
        if not (math.isfinite(self.gamma1) and math.isfinite(self.beta1)):
            raise SensitivityError("gamma1 and beta1 must be finite")
        if self.link not in (LOGISTIC, IDENTITY):
            raise SensitivityError(f"unknown outcome link {self.link!r}")

    @classmethod
    def from_odds_ratios(cls, pi0, exp_gamma1, exp_beta1, link=LOGISTIC):
        if exp_gamma1 <= 0 or exp_beta1 <= 0:
            raise SensitivityError("odds ratios must be positive")
        return cls(pi0, math.log(exp_gamma1), math.log(exp_beta1), link)


@dataclass(frozen=True)
class SurfaceSolution:
    gamma0_hat: float
    beta0_hat: float
    marginal_mean: float
    conditional_mean: float
    bias: float
    pr_u0_given_g1: float


def pr_observed(pi0: float, gamma0: float, gamma1: float) -> float:
    """Pr[G=1] under the logistic missingness link."""
    return expit(gamma0 + gamma1) * (1.0 - pi0) + expit(gamma0) * pi0


def marginal_mean(pi0: float, beta0: float, beta1: float, link: str = LOGISTIC) -> float:
    """E[Y] = q(beta0 + beta1)(1 - pi0) + q(beta0) pi0."""
    q = expit if link == LOGISTIC else float
    return q(beta0 + beta1) * (1.0 - pi0) + q(beta0) * pi0


def conditional_mean(pi0, gamma0, gamma1, beta0, beta1, link=LOGISTIC) -> float:
    """E[Y|G=1], the observed-data mean implied by the model."""
    q = expit if link == LOGISTIC else float
    h1 = expit(gamma0 + gamma1) * (1.0 - pi0)
    h0 = expit(gamma0) * pi0
    return (q(beta0 + beta1) * h1 + q(beta0) * h0) / (h1 + h0)


def _check_summary(summary: ObservedSummary, link: str):
    pm = summary.frac_missing
    if not 0.0 < pm < 1.0:
        raise DegenerateSummaryError("calibration needs 0 < frac_missing < 1")
    if link == LOGISTIC:
        if summary.outcome_kind != BINARY:
            raise DegenerateSummaryError("the logistic outcome link needs a binary outcome")
        if not 0.0 < summary.mu_obs < 1.0:
            raise DegenerateSummaryError("degenerate outcome: mu_obs must lie in (0, 1)")


def calibrate(summary: ObservedSummary, params: SurfaceParams) -> SurfaceSolution:
    """Solve for (gamma0, beta0) given the sensitivity parameters, then the bias."""
    _check_summary(summary, params.link)
    pi0, g1, b1 = params.pi0, params.gamma1, params.beta1
    pm = summary.frac_missing
    eg = math.exp(g1)
    # Pr[G=0] = pi0/(1+x) + (1-pi0)/(1+x*eg), x = exp(gamma0)
    x = positive_root(eg * pm, (pm - pi0) * eg + pm + pi0 - 1.0, 1.0 - pm)
    w = pi0 / (pi0 + eg * (1.0 + x) / (1.0 + x * eg) * (1.0 - pi0))
    gamma0 = math.log(x)
    if params.link == LOGISTIC:
        # solver works with Pr[Y=0|G=1]
        mc = 1.0 - summary.mu_obs
        eb = math.exp(b1)
        y = positive_root(eb * mc, (mc - w) * eb + mc + w - 1.0, 1.0 - mc)
        beta0 = math.log(y)
        marginal = (1.0 - pi0) * (y * eb) / (1.0 + y * eb) + pi0 * y / (1.0 + y)
    else:
        beta0 = summary.mu_obs - (1.0 - w) * b1
        marginal = beta0 + (1.0 - pi0) * b1
    cond = conditional_mean(pi0, gamma0, g1, beta0, b1, params.link)
    return SurfaceSolution(
        gamma0_hat=gamma0,
        beta0_hat=beta0,
        marginal_mean=marginal,
        conditional_mean=cond,
        bias=marginal - summary.mu_obs,
        pr_u0_given_g1=w,
    )


def bias_at(summary: ObservedSummary, pi0: float, gamma1: float, beta1: float) -> float:
    return calibrate(summary, SurfaceParams(pi0, gamma1, beta1)).bias


def bias_field(summary: ObservedSummary, pi0: float, gamma1, beta1) -> np.ndarray:
    """Vectorized logistic-link bias at paired (gamma1, beta1) arrays."""
    _check_summary(summary, LOGISTIC)
    if not 0.0 < pi0 < 1.0:
        raise SensitivityError("pi0 must lie in (0, 1)")
    g, b = np.broadcast_arrays(np.asarray(gamma1, dtype=float), np.asarray(beta1, dtype=float))
    return np.asarray(kernels.bias_points(summary.mu_obs, summary.frac_missing, pi0, g, b))


@dataclass(frozen=True)
class GridCell:
    pi0: float
    exp_beta1: float
    exp_gamma1: float
    bias: float
    error: Optional[str] = None


def bias_grid(
    summary: ObservedSummary,
    pi0_values: Sequence[float] = DEFAULT_PI0,
    exp_beta1_values: Sequence[float] = (2.0, 3.0),
    exp_gamma1_values: Sequence[float] = (2.0, 3.0),
    link: str = LOGISTIC,
) -> list[GridCell]:
    """Bias over the Cartesian grid, pi0 outermost, then exp(beta1), then exp(gamma1).

    A cell that cannot be calibrated gets ``bias=nan`` and its error message.
    """
    cells = []
    for pi0 in pi0_values:
        for eb in exp_beta1_values:
            for eg in exp_gamma1_values:
                try:
                    params = SurfaceParams.from_odds_ratios(pi0, eg, eb, link)
                    bias, err = calibrate(summary, params).bias, None
                except SensitivityError as exc:
                    bias, err = float("nan"), str(exc)
                cells.append(GridCell(float(pi0), float(eb), float(eg), bias, err))
    return cells


GRID_COLUMNS = ("pi0", "exp_beta1", "exp_gamma1", "bias")


def grid_to_csv(cells: Sequence[GridCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_COLUMNS)
    for c in cells:
        bias = "NA" if math.isnan(c.bias) else f"{c.bias:.6f}"
        writer.writerow([f"{c.pi0:g}", f"{c.exp_beta1:g}", f"{c.exp_gamma1:g}", bias])
    return buf.getvalue()


def grid_to_json(cells: Sequence[GridCell]) -> str:
    rows = []
    for c in cells:
        row = {
            "pi0": c.pi0,
            "exp_beta1": c.exp_beta1,
            "exp_gamma1": c.exp_gamma1,
            "bias": None if math.isnan(c.bias) else round_sig(c.bias),
        }
        if c.error:
            row["error"] = c.error
        rows.append(row)
    return json.dumps({"cells": rows}, indent=2)
