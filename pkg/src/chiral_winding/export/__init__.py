"""Artifact writers."""

from .histogram import HISTOGRAM_COLUMNS, Histogram, winding_histogram, write_histogram_csv
from .report import SCHEMA_VERSION, provenance_comments, read_document, write_document

__all__ = [
    "HISTOGRAM_COLUMNS",
    "Histogram",
    "winding_histogram",
    "write_histogram_csv",
    "SCHEMA_VERSION",
    "provenance_comments",
    "read_document",
    "write_document",
]
