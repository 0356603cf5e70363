"""Variance-gap decomposition and mean decompositions within strata of a discrete covariate X."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateSummaryError, NoAnalysisNeeded, SensitivityError
from .minni import MinNIResult, minni_difference
from .summary import DataSet, ObservedSummary, round_sig, summarize


@dataclass(frozen=True)
class VarianceInputs:
    vd_yu: float  # var(Y|U=0) - var(Y|U=1)
    vd_ug: float  # var(U|G=0) - var(U|G=1), binary U: p(1-p) with p = Pr[U=1|G]
    ed_yu: float
    rd_ug: float
    pr_g1: float

    def __post_init__(self):
        if not 0.0 <= self.pr_g1 <= 1.0:
            raise SensitivityError("pr_g1 must lie in [0, 1]")
        for name in ("vd_yu", "vd_ug", "ed_yu", "rd_ug"):
            if not math.isfinite(getattr(self, name)):
                raise SensitivityError(f"{name} must be finite")


def variance_gap(v: VarianceInputs) -> float:
    """var(Y) - var(Y|G=1) for a binary confounder."""
    ed2 = v.ed_yu * v.ed_yu
    inner = v.vd_yu * v.rd_ug + ed2 * v.vd_ug + ed2 * v.rd_ug * v.rd_ug * v.pr_g1
    return inner * (1.0 - v.pr_g1)


@dataclass(frozen=True)
class StratumSummary:
    stratum: str
    summary: ObservedSummary
    weight: float  # Pr[X = stratum] over observed and missing records


def _check_weights(strata: Sequence[StratumSummary]):
    if not strata:
        raise SensitivityError("no strata")
    total = sum(s.weight for s in strata)
    if abs(total - 1.0) > 1e-9 or any(s.weight < 0 for s in strata):
        raise SensitivityError(f"stratum weights must be nonnegative and sum to 1 (got {total!r})")


def strata_from_dataset(data: DataSet, ddof: int = 0) -> list[StratumSummary]:
    """Per-stratum summaries weighted by each stratum's share of all records."""
    labels = data.stratum_labels()
    if not labels:
        raise SensitivityError("data set has no stratum labels")
    if any(g is None for g in data.groups):
        raise SensitivityError("every record needs a stratum label")
    out = []
    for label in labels:
        sub = data.stratum(label)
        out.append(StratumSummary(str(label), summarize(sub, ddof), sub.n_total / data.n_total))
    return out


@dataclass(frozen=True)
class StratifiedBias:
    per_stratum: dict  # label -> signed bias E[Y|X] - E[Y|X,G=1]
    aggregate: float


def stratified_bias(
    strata: Sequence[StratumSummary], ed_by_stratum: dict, rd_by_stratum: dict
) -> StratifiedBias:
    """Per-stratum bias -ED_(X) RD_(X) Pr[G=0|X] and its weighted sum.

    Signs follow ED = E[Y|X,U=1] - E[Y|X,U=0], RD = Pr[U=1|X,G=1] - Pr[U=1|X,G=0].
    """
    _check_weights(strata)
    per = {}
    for s in sorted(strata, key=lambda s: s.stratum):
        if s.summary.n_observed == 0 or s.summary.frac_missing >= 1.0:
            raise DegenerateSummaryError(f"stratum {s.stratum!r} has no observed outcomes")
        try:
            ed, rd = ed_by_stratum[s.stratum], rd_by_stratum[s.stratum]
        except KeyError:
            raise SensitivityError(f"no ED/RD given for stratum {s.stratum!r}") from None
        per[s.stratum] = -ed * rd * s.summary.frac_missing
    weights = {s.stratum: s.weight for s in strata}
    aggregate = math.fsum(weights[k] * b for k, b in per.items())
    return StratifiedBias(per, aggregate)


@dataclass(frozen=True)
class StratumMinNI:
    stratum: str
    weight: float
    result: Optional[MinNIResult]
    note: str = ""


def stratified_minni(
    strata: Sequence[StratumSummary],
    k_sigma: Optional[float] = None,
    k_se: Optional[float] = None,
    m: int = 2,
) -> list[StratumMinNI]:
    """Difference-scale MinNI inside each stratum; failures are reported, not raised.

    Give exactly one of ``k_sigma`` (absolute) or ``k_se`` (in units of each
    stratum's own standard error).
    """
    if (k_sigma is None) == (k_se is None):
        raise SensitivityError("give exactly one of k_sigma or k_se")
    _check_weights(strata)
    out = []
    for s in sorted(strata, key=lambda s: s.stratum):
        ks = k_sigma if k_sigma is not None else k_se * s.summary.se_obs
        try:
            res = minni_difference(s.summary, ks, m)
            out.append(StratumMinNI(s.stratum, s.weight, res, "" if res.feasible else "infeasible"))
        except NoAnalysisNeeded:
            out.append(StratumMinNI(s.stratum, s.weight, None, "no analysis needed"))
        except SensitivityError as exc:
            out.append(StratumMinNI(s.stratum, s.weight, None, str(exc)))
    return out


STRATA_COLUMNS = ("stratum", "weight", "bias", "minni_ed", "minni_rd", "feasible")


def _fmt(x):
    return "" if x is None else f"{round_sig(x):.10g}"


def strata_table(minnis: Sequence[StratumMinNI], bias: Optional[StratifiedBias] = None) -> list[dict]:
    rows = []
    for s in minnis:
        index = s.result.index if s.result is not None else None
        rows.append(
            {
                "stratum": s.stratum,
                "weight": s.weight,
                "bias": None if bias is None else bias.per_stratum.get(s.stratum),
                "minni_ed": None if index is None else index[0],
                "minni_rd": None if index is None else index[1],
                "feasible": bool(s.result is not None and s.result.feasible),
                "note": s.note,
            }
        )
    return rows


def strata_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STRATA_COLUMNS)
    for r in rows:
        writer.writerow(
            [r["stratum"], _fmt(r["weight"]), _fmt(r["bias"]), _fmt(r["minni_ed"]),
             _fmt(r["minni_rd"]), "true" if r["feasible"] else "false"]
        )
    return buf.getvalue()


def strata_to_json(rows: Sequence[dict], bias: Optional[StratifiedBias] = None) -> str:
    def clean(v):
        return round_sig(v) if isinstance(v, float) else v

    doc = {"strata": [{k: clean(v) for k, v in r.items()} for r in rows]}
    if bias is not None:
        doc["aggregate_bias"] = round_sig(bias.aggregate)
    return json.dumps(doc, indent=2)
