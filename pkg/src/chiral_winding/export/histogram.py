"""Plot-ready histogram of winding numbers with a Gaussian overlay."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from chiral_winding.analytic.moments import gaussian_pdf

HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "count", "gaussian_pdf_value")


@dataclass(frozen=True, eq=False)
class Histogram:
    """Unit-width bins centred on the integers spanned by the sample.

    Attributes:
        edges: Bin edges, length bins + 1.
        counts: Realizations per bin.
        pdf: Gaussian density at each bin centre.
    """

    edges: NDArray[np.float64]
    counts: NDArray[np.int64]
    pdf: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.edges.size != self.counts.size + 1 or self.pdf.size != self.counts.size:
            raise ValueError("edges must have one more entry than counts and pdf")

    @property
    def centres(self) -> NDArray[np.float64]:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def winding_histogram(windings: ArrayLike, mean: float, n: int, i2: float) -> Histogram:
    """Histogram of integer windings; the overlay is N(mean, sqrt(N) I2)."""
    windings = np.asarray(windings, dtype=np.int64)
    if windings.ndim != 1 or windings.size == 0:
        raise ValueError("windings must be a non-empty one-dimensional sample")
    lo, hi = int(windings.min()), int(windings.max())
    edges = np.arange(lo, hi + 2, dtype=float) - 0.5
    counts = np.bincount(windings - lo, minlength=hi - lo + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    return Histogram(edges=edges, counts=counts, pdf=np.atleast_1d(gaussian_pdf(centres, mean, n, i2)))


def write_histogram_csv(histogram: Histogram, path: Path | str, comments: Sequence[str] = ()) -> Path:
    """Write columns bin_left, bin_right, count, gaussian_pdf_value.

    ``comments`` are written verbatim above the header, one per line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        for line in comments:
            f.write(line + "\n")
        writer = csv.writer(f)
        writer.writerow(HISTOGRAM_COLUMNS)
        for i, count in enumerate(histogram.counts):
            writer.writerow(
                [
                    repr(float(histogram.edges[i])),
                    repr(float(histogram.edges[i + 1])),
                    int(count),
                    repr(float(histogram.pdf[i])),
                ]
            )
    return path
