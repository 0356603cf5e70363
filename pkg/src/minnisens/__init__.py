"""Sensitivity of incomplete-data inferences to nonignorable missingness.

Missingness is modelled as arising from an unmeasured confounder U with Y and
G (the observation indicator) independent given U. The package calibrates
response surfaces, computes minimum-nonignorability (MinNI) indices, bounds
for categorical confounders, the variance gap, and checks all of them against
exact enumeration.
"""
from .contour import IsobolSet, emit, isobol_surface, minni_curves
from .errors import (
    CalibrationError,
    DegenerateSummaryError,
    DiscordantAssociationError,
    NoAnalysisNeeded,
    SensitivityError,
)
from .kernels import BACKEND
from .minni import MinNIResult, minni_difference, minni_from_se, minni_ratio
from .summary import ObservedSummary, Record, ingest_records, summarize, synthesize_summary
from .surface import SurfaceParams, SurfaceSolution, bias_grid, calibrate

__version__ = "0.1.0"
