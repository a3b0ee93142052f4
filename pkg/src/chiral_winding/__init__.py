"""Chiral winding - winding-number statistics of parametric chiral random matrices."""

__version__ = "0.1.0"
