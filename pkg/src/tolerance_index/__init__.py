"""Composite index of tolerant attitudes toward domestic violence from couple survey and diary data.

The package chains ingest, derived indicators, parallel analysis, a
confirmatory factor model, a principal-component composite and regression
validation, and ships a synthetic-data generator used to check each step.
"""

from __future__ import annotations

__version__ = "0.1.0"
