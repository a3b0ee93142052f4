"""Complex Ginibre two-matrix ensemble.

A realization is a pair (K1, K2) of N x N matrices with i.i.d. entries of
density proportional to exp(-|z|^2), so E[K_jl] = 0 and E[|K_jl|^2] = 1.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from chiral_winding.core.coeff_model import CoefficientField
from chiral_winding.errors import NearSingularError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RETRY_OFFSET = 1e-9

DUMP_MAGIC = b"CWRZ"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of realization ``index``; independent of scheduling order."""
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be non-negative")
    sequence = np.random.SeedSequence([master_seed, index])
    return int(sequence.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Realization:
    """One sampled pair (K1, K2).

    Attributes:
        k1: First N x N complex matrix.
        k2: Second N x N complex matrix.
        n: Matrix dimension N.
        seed: 64-bit seed the matrices were drawn from.
    """

    k1: NDArray[np.complex128]
    k2: NDArray[np.complex128]
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        for name, matrix in (("k1", self.k1), ("k2", self.k2)):
            if matrix.shape != (self.n, self.n):
                raise ValueError(f"{name} must have shape ({self.n}, {self.n}), got {matrix.shape}")
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f"{name} has non-finite entries")
            matrix.setflags(write=False)

    @classmethod
    def sample(cls, n: int, seed: int) -> "Realization":
        """Draw K1, K2 from a Philox stream keyed by ``seed``."""
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"n must be a positive integer, got {n}")

        rng = np.random.Generator(np.random.Philox(int(seed)))
        scale = np.sqrt(0.5)
        draws = rng.standard_normal((2, 2, n, n))
        k1 = scale * (draws[0, 0] + 1j * draws[0, 1])
        k2 = scale * (draws[1, 0] + 1j * draws[1, 1])
        return cls(k1=k1, k2=k2, n=int(n), seed=int(seed))

    def scaled(self, factor: complex) -> "Realization":
        """Both matrices multiplied by the same constant."""
        return Realization(self.k1 * factor, self.k2 * factor, self.n, self.seed)

    def eval_k(self, field: CoefficientField, p: float, order: int = 0) -> NDArray[np.complex128]:
        """K(p) = a(p) K1 + b(p) K2, or its derivative for order 1."""
        if order not in (0, 1):
            raise ValueError(f"order must be 0 or 1, got {order}")
        a, b = field.evaluate(p, order)
        return a * self.k1 + b * self.k2

    def eval_k_grid(
        self, field: CoefficientField, p: ArrayLike, order: int = 0
    ) -> NDArray[np.complex128]:
        """Stack of K(p_i), or its p-derivative, with shape (len(p), N, N)."""
        v = field.evaluate(np.atleast_1d(np.asarray(p, dtype=float)), order)
        return v[:, 0, None, None] * self.k1 + v[:, 1, None, None] * self.k2

    def winding_density(self, field: CoefficientField, p: float) -> complex:
        """w(p) = tr(K(p)^{-1} K'(p)) from one LU factorization.

        Raises:
            NearSingularError: If K is ill-conditioned at p and at p +/- 1e-9.
        """
        for point in (p, p + RETRY_OFFSET, p - RETRY_OFFSET):
            value = self._density_at(field, point)
            if value is not None:
                if point != p:
                    logger.info("density at p=%.12f evaluated at shifted point %.12f", p, point)
                return value
        raise NearSingularError(f"K(p) is near-singular at p = {p:.12f} (seed {self.seed})", p=p)

    def _density_at(self, field: CoefficientField, p: float) -> complex | None:
        k = self.eval_k(field, p, 0)
        dk = self.eval_k(field, p, 1)
        lu_piv = lu_factor(k, check_finite=False)
        if reciprocal_condition(lu_piv, k) < 1.0 / CONDITION_LIMIT:
            return None
        return complex(np.trace(lu_solve(lu_piv, dk, check_finite=False)))


def reciprocal_condition(lu_piv: tuple[NDArray, NDArray], matrix: NDArray) -> float:
    """LAPACK 1-norm reciprocal condition estimate from an LU factorization."""
    lu, _ = lu_piv
    if not np.all(np.isfinite(lu)):
        return 0.0
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(matrix, 1), norm="1")
    if info != 0:
        return 0.0
    return float(rcond)


def sample(n: int, seed: int) -> Realization:
    return Realization.sample(n, seed)


def dump_realization(realization: Realization, path: Path | str) -> None:
    """Write magic, version, n, seed, then K1 and K2 as row-major complex128."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, realization.n, realization.seed))
        f.write(np.ascontiguousarray(realization.k1, dtype="<c16").tobytes())
        f.write(np.ascontiguousarray(realization.k2, dtype="<c16").tobytes())


def load_realization(path: Path | str) -> Realization:
    """Read a file written by dump_realization.

    Raises:
        ValueError: If the header or payload size does not match.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("realization dump is truncated")

    magic, version, n, seed = _HEADER.unpack_from(data)
    if magic != DUMP_MAGIC or version != DUMP_VERSION:
        raise ValueError(f"not a realization dump (magic={magic!r}, version={version})")

    payload = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    if payload.size != 2 * n * n:
        raise ValueError(f"expected {2 * n * n} entries, found {payload.size}")

    k1 = payload[: n * n].reshape(n, n).astype(np.complex128)
    k2 = payload[n * n :].reshape(n, n).astype(np.complex128)
    return Realization(k1=k1, k2=k2, n=n, seed=seed)
