"""Ingest outcome/missingness records and reduce them to observed summaries.

Every downstream analysis consumes an :class:`ObservedSummary`, either built
from raw records with :func:`summarize` or synthesized from published values
with :func:`synthesize_summary`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSummaryError, SensitivityError

BINARY = "binary"
CONTINUOUS = "continuous"
OUTCOME_KINDS = (BINARY, CONTINUOUS)
MISSING_TOKENS = ("", "NA")

SUMMARY_FIELDS = (
    "n_total",
    "n_missing",
    "frac_missing",
    "mu_obs",
    "sd_obs",
    "cv_obs",
    "se_obs",
    "outcome_kind",
)


def round_sig(x: float, digits: int = 10) -> float:
    """Round to `digits` significant digits (used for all JSON output)."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


@dataclass(frozen=True)
class Record:
    outcome: Optional[float]
    group: Optional[str] = None

    @property
    def observed(self) -> bool:
        return self.outcome is not None


@dataclass(frozen=True)
class DataSet:
    outcomes: tuple  # float or None per record
    groups: tuple  # label or None per record
    outcome_kind: str

    @property
    def n_total(self) -> int:
        return len(self.outcomes)

    @property
    def n_missing(self) -> int:
        return sum(1 for y in self.outcomes if y is None)

    @property
    def observed_values(self) -> np.ndarray:
        return np.array([y for y in self.outcomes if y is not None], dtype=float)

    def stratum(self, label) -> "DataSet":
        keep = [i for i, g in enumerate(self.groups) if g == label]
        return DataSet(
            tuple(self.outcomes[i] for i in keep),
            tuple(self.groups[i] for i in keep),
            self.outcome_kind,
        )

    def stratum_labels(self) -> list:
        return sorted({g for g in self.groups if g is not None}, key=str)


@dataclass(frozen=True)
class ObservedSummary:
    """Estimable quantities of the observed data.

    ``frac_missing`` is Pr[G=0], ``mu_obs`` is E[Y|G=1] and ``sd_obs`` is
    sigma_{Y|G=1}. For synthesized summaries ``n_total`` and ``n_missing``
    are rounded counts while ``frac_missing`` keeps the exact requested value.
    """

    n_total: int
    n_missing: int
    frac_missing: float
    mu_obs: float
    sd_obs: float
    cv_obs: float
    se_obs: float
    outcome_kind: str

    def __post_init__(self):
        if self.outcome_kind not in OUTCOME_KINDS:
            raise SensitivityError(f"unknown outcome_kind {self.outcome_kind!r}")
        if not 0.0 <= self.frac_missing <= 1.0:
            raise SensitivityError("frac_missing must lie in [0, 1]")
        if self.n_missing > self.n_total:
            raise SensitivityError("n_missing exceeds n_total")
        if self.sd_obs < 0 or self.se_obs < 0:
            raise SensitivityError("sd_obs and se_obs must be nonnegative")
        if self.outcome_kind == BINARY and not 0.0 <= self.mu_obs <= 1.0:
            raise SensitivityError("binary mu_obs must lie in [0, 1]")

    @property
    def n_observed(self) -> int:
        return self.n_total - self.n_missing

    @property
    def pr_observed(self) -> float:
        return 1.0 - self.frac_missing

    def to_dict(self) -> dict:
        out = {}
        for name in SUMMARY_FIELDS:
            value = getattr(self, name)
            out[name] = round_sig(value) if isinstance(value, float) else value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ObservedSummary":
        missing = [k for k in SUMMARY_FIELDS if k not in d]
        if missing:
            raise SensitivityError(f"summary is missing fields: {', '.join(missing)}")
        cv = d["cv_obs"]
        return cls(
            n_total=int(d["n_total"]),
            n_missing=int(d["n_missing"]),
            frac_missing=float(d["frac_missing"]),
            mu_obs=float(d["mu_obs"]),
            sd_obs=float(d["sd_obs"]),
            cv_obs=float("nan") if cv is None else float(cv),
            se_obs=float(d["se_obs"]),
            outcome_kind=d["outcome_kind"],
        )

    @classmethod
    def from_json(cls, text: str) -> "ObservedSummary":
        return cls.from_dict(json.loads(text))


def _check_outcome(value):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise SensitivityError(f"non-numeric outcome {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SensitivityError(f"non-finite outcome {value!r}")
    return value


def ingest_records(rows: Sequence[Record], outcome_kind: Optional[str] = None) -> DataSet:
    """Validate records and classify the outcome.

    Without an explicit ``outcome_kind`` the data are binary iff every present
    outcome is 0 or 1. An explicit ``"binary"`` flag on non-0/1 data is an error.
    """
    rows = list(rows)
    if not rows:
        raise SensitivityError("no records")
    outcomes = tuple(_check_outcome(r.outcome) for r in rows)
    groups = tuple(r.group for r in rows)
    is_binary = all(y in (0.0, 1.0) for y in outcomes if y is not None)
    if outcome_kind is None:
        outcome_kind = BINARY if is_binary else CONTINUOUS
    elif outcome_kind not in OUTCOME_KINDS:
        raise SensitivityError(f"unknown outcome_kind {outcome_kind!r}")
    elif outcome_kind == BINARY and not is_binary:
        raise SensitivityError("outcome_kind=binary but outcomes outside {0, 1} are present")
    return DataSet(outcomes, groups, outcome_kind)


def summarize(data: DataSet, ddof: int = 0) -> ObservedSummary:
    """Reduce a data set to its observed summary.

    ``ddof=0`` (default) is the population SD, for which binary data satisfy
    sd_obs**2 == mu_obs*(1 - mu_obs); ``ddof=1`` gives the sample SD.
    """
    y = data.observed_values
    n_obs = y.size
    if n_obs == 0:
        raise DegenerateSummaryError("no observed outcomes: the observed mean is not estimable")
    if ddof not in (0, 1) or n_obs - ddof < 1:
        raise SensitivityError("ddof must be 0 or 1 and leave at least one degree of freedom")
    mu = float(np.mean(y))
    if data.outcome_kind == BINARY and ddof == 0:
        sd = math.sqrt(max(mu * (1.0 - mu), 0.0))
    else:
        sd = float(np.std(y, ddof=ddof))
    n = data.n_total
    n_missing = data.n_missing
    return ObservedSummary(
        n_total=n,
        n_missing=n_missing,
        frac_missing=n_missing / n,
        mu_obs=mu,
        sd_obs=sd,
        cv_obs=sd / mu if mu != 0 else float("nan"),
        se_obs=sd / math.sqrt(n_obs),
        outcome_kind=data.outcome_kind,
    )


def synthesize_summary(
    mu_obs: float,
    frac_missing: float,
    n_observed: int,
    outcome_kind: str = BINARY,
    sd_obs: Optional[float] = None,
) -> ObservedSummary:
    """Build a summary from published values, e.g. to vary the missing fraction.

    Binary summaries recompute sd_obs from mu_obs; continuous ones need `sd_obs`.
    """
    if not 0.0 <= frac_missing < 1.0:
        raise SensitivityError("frac_missing must lie in [0, 1)")
    if n_observed < 1:
        raise SensitivityError("n_observed must be at least 1")
    if outcome_kind == BINARY:
        if not 0.0 <= mu_obs <= 1.0:
            raise SensitivityError("binary mu_obs must lie in [0, 1]")
        sd = math.sqrt(mu_obs * (1.0 - mu_obs))
    elif outcome_kind == CONTINUOUS:
        if sd_obs is None or sd_obs < 0:
            raise SensitivityError("continuous summaries need a nonnegative sd_obs")
        sd = float(sd_obs)
    else:
        raise SensitivityError(f"unknown outcome_kind {outcome_kind!r}")
    n_total = int(round(n_observed / (1.0 - frac_missing)))
    return ObservedSummary(
        n_total=n_total,
        n_missing=n_total - n_observed,
        frac_missing=float(frac_missing),
        mu_obs=float(mu_obs),
        sd_obs=sd,
        cv_obs=sd / mu_obs if mu_obs != 0 else float("nan"),
        se_obs=sd / math.sqrt(n_observed),
        outcome_kind=outcome_kind,
    )


def parse_outcome(field: str):
    field = field.strip()
    if field in MISSING_TOKENS:
        return None
    try:
        return float(field)
    except ValueError:
        raise SensitivityError(f"non-numeric outcome field {field!r}") from None


def read_csv(source, outcome_kind: Optional[str] = None) -> DataSet:
    """Read ``outcome[,stratum]`` CSV; empty or ``NA`` outcomes are missing."""
    if isinstance(source, (str, bytes)) and not isinstance(source, io.IOBase):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh, outcome_kind)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SensitivityError("empty CSV") from None
    if not header or header[0] != "outcome" or len(header) > 2:
        raise SensitivityError("CSV header must be 'outcome' or 'outcome,stratum'")
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if not fields:
            continue
        try:
            y = parse_outcome(fields[0])
        except SensitivityError as exc:
            raise SensitivityError(f"line {lineno}: {exc}") from None
        group = fields[1].strip() if len(header) == 2 and len(fields) > 1 else None
        rows.append(Record(y, group or None))
    return ingest_records(rows, outcome_kind)


def write_csv(data: DataSet, fh) -> None:
    has_groups = any(g is not None for g in data.groups)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["outcome", "stratum"] if has_groups else ["outcome"])
    for y, g in zip(data.outcomes, data.groups):
        cell = "NA" if y is None else f"{y:g}"
        writer.writerow([cell, g or ""] if has_groups else [cell])


def edinburgh_records() -> list[Record]:
    """Binary records with the Edinburgh survey counts (6136 students, 2308 missing, 2802 yes)."""
    return [Record(1.0)] * 2802 + [Record(0.0)] * (3828 - 2802) + [Record(None)] * 2308


def budget_from_se(summary: ObservedSummary, k_se: float) -> float:
    """Convert a bias budget in standard-error units to k*sigma units."""
    if k_se < 0:
        raise SensitivityError("k_se must be nonnegative")
    return k_se * summary.se_obs
