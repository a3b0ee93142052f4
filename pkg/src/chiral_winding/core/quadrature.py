"""Composite Gauss-Legendre rules."""

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray


@lru_cache(maxsize=16)
def _reference_rule(order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def composite_rule(
    lower: float, upper: float, panels: int, order: int = 8
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [lower, upper].

    Returns:
        Tuple (nodes, weights), each of shape (panels, order).
    """
    if panels < 1 or order < 1:
        raise ValueError(f"panels and order must be positive, got {panels}, {order}")
    nodes, weights = _reference_rule(order)
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mids = 0.5 * (edges[1:] + edges[:-1])
    return mids[:, None] + half[:, None] * nodes, half[:, None] * weights


def panel_nodes(edges: NDArray[np.float64], order: int = 8) -> tuple[NDArray, NDArray]:
    """Gauss-Legendre nodes and weights on each interval between ``edges``."""
    nodes, weights = _reference_rule(order)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    return mids[:, None] + half[:, None] * nodes, half[:, None] * weights
