"""Operator diagonals relative to a nest.

For an operator W and a nest X_s, each grid point gets the image projection
P_s onto the range of W X_s.  The diagonal of W relative to a partition is
the Riemann-type sum

    D = sum_k  (P_{s_k} - P_{s_{k-1}}) W (X_{s_k} - X_{s_{k-1}})

over consecutive partition points.  Under refinement these sums settle, in
the weak sense probed here, toward a limit intertwining the two nests:
D X_s = P_s D and D^T P_s = X_s D^T.  The refinement driver detects that
settling with a Cauchy criterion on a fixed probe set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linops import RANK_TOL, Projection, as_operator, op_norm, range_projection
from .nests import Nest, Partition, coarsest_partition, refine

__all__ = [
    "CONVERGED",
    "DIVERGED",
    "EXHAUSTED",
    "DiagonalReport",
    "DiagonalRow",
    "ImageNest",
    "adjoint_diagonal",
    "check_intertwining",
    "default_probes",
    "diagonal",
    "image_nest",
    "pairing_defect",
    "partial_diagonal",
]

CONVERGED = "converged"
DIVERGED = "diverged"
EXHAUSTED = "exhausted"

# Refinements on which the Cauchy defect may fail to decrease before the
# verdict flips to diverged.
_STALL_LIMIT = 3


@dataclass(frozen=True)
class ImageNest:
    """Image projections P_s onto the ranges of W X_s, one per grid point."""

    source: np.ndarray
    base: Nest
    projections: tuple[Projection, ...]

    @property
    def dim(self) -> int:
        return self.base.dim

    def p(self, j: int) -> np.ndarray:
        """Image projection matrix at grid index j."""
        return self.projections[j].matrix


def image_nest(w, nest: Nest, rank_tol: float = RANK_TOL) -> ImageNest:
    """Compute the image projections of W along every grid point of a nest."""
    w = as_operator(w)
    if w.shape[0] != nest.dim:
        raise ValueError(f"operator dim {w.shape[0]} does not match nest dim {nest.dim}")
    projections = tuple(range_projection(w, x, rank_tol) for x in nest.projections)
    return ImageNest(w, nest, projections)


def default_probes(dim: int, seed: int = 0, count: int = 8) -> np.ndarray:
    """Fixed probe set: ``count`` seeded unit vectors plus standard basis
    vectors at ``count`` evenly spaced coordinates.  Rows are probes."""
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal((count, dim))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    idx = np.unique(np.round(np.linspace(0, dim - 1, min(count, dim))).astype(int))
    basis = np.zeros((idx.size, dim))
    basis[np.arange(idx.size), idx] = 1.0
    return np.vstack([vs, basis])


def pairing_defect(delta, probes: np.ndarray) -> float:
    """max |(delta f, h)| over ordered probe pairs (f, h)."""
    return float(np.abs(probes @ delta @ probes.T).max())


def _check_image(w: np.ndarray, nest: Nest, img: ImageNest) -> None:
    if img.base is not nest and not np.array_equal(img.base.grid, nest.grid):
        raise ValueError("image nest was built over a different nest")
    if img.source is not w and not np.array_equal(img.source, w):
        raise ValueError("image nest was built from a different operator")


def partial_diagonal(w, nest: Nest, part: Partition, img: ImageNest) -> np.ndarray:
    """Diagonal sum of W over one partition, using precomputed image
    projections."""
    w = as_operator(w)
    _check_image(w, nest, img)
    d = np.zeros_like(w)
    for a, b in zip(part.indices[:-1], part.indices[1:]):
        dp = img.p(b) - img.p(a)
        dx = nest.x(b) - nest.x(a)
        d += dp @ w @ dx
    return d


def adjoint_diagonal(w, nest: Nest, part: Partition, img: ImageNest | None = None) -> np.ndarray:
    """Diagonal sum of the adjoint: sum_k dX_k W^T dP_k.

    Coincides with the transpose of :func:`partial_diagonal` up to round-off.
    """
    w = as_operator(w)
    if img is None:
        img = image_nest(w, nest)
    else:
        _check_image(w, nest, img)
    d = np.zeros_like(w)
    for a, b in zip(part.indices[:-1], part.indices[1:]):
        dp = img.p(b) - img.p(a)
        dx = nest.x(b) - nest.x(a)
        d += dx @ w.T @ dp
    return d


def check_intertwining(d, nest: Nest, img: ImageNest, part: Partition) -> float:
    """Worst intertwining defect of a diagonal at the partition points:
    max over s of ||D X_s - P_s D|| and ||D^T P_s - X_s D^T||."""
    d = np.asarray(d, dtype=float)
    worst = 0.0
    for j in part.indices:
        x = nest.x(j)
        p = img.p(j)
        worst = max(worst, op_norm(d @ x - p @ d), op_norm(d.T @ p - x @ d.T))
    return worst


@dataclass(frozen=True)
class DiagonalRow:
    """One refinement record: partition range, Cauchy defect against the
    previous sum (nan on the first row), norm of the sum, and its
    intertwining defect at the partition points."""

    range: float
    cauchy_defect: float
    norm: float
    intertwining: float


@dataclass
class DiagonalReport:
    """Outcome of a refinement schedule for one operator.

    ``partial_sums`` pairs each visited partition with its diagonal sum.
    ``final`` is the settled diagonal when the verdict is ``converged``,
    otherwise None (the last partial sum remains available).
    """

    partial_sums: list[tuple[Partition, np.ndarray]]
    verdict: str
    final: np.ndarray | None
    cauchy_history: list[float]
    history: list[DiagonalRow]
    eps: float

    @property
    def last(self) -> np.ndarray:
        """Deepest recorded partial sum (the settled one when converged)."""
        return self.partial_sums[-1][1]

    @property
    def last_partition(self) -> Partition:
        return self.partial_sums[-1][0]


def diagonal(
    w,
    nest: Nest,
    schedule: int = 6,
    eps: float | None = None,
    probes: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
    img: ImageNest | None = None,
    full_schedule: bool = False,
) -> DiagonalReport:
    """Refine the diagonal of W from the coarsest partition and watch the
    probe pairings settle.

    Starting from {0, T}, each of up to ``schedule`` refinements inserts
    midpoint grid points and recomputes the partition sum.  The Cauchy defect
    is max |((D' - D) f, h)| over ordered probe pairs.  Verdicts:

    * ``converged`` -- defect dropped to ``eps`` (default 1e-8 * (1 + ||W||));
    * ``diverged`` -- defect failed to decrease on three consecutive
      refinements;
    * ``exhausted`` -- schedule spent, or finest partition reached, without
      either of the above.

    With ``full_schedule`` the driver never stops early; verdicts are judged
    on the completed history.  That keeps partition depths aligned when
    several operators must be compared refinement by refinement.
    """
    w = as_operator(w)
    if schedule < 2:
        raise ValueError(f"schedule must be at least 2, got {schedule}")
    if eps is None:
        eps = 1e-8 * (1.0 + op_norm(w))
    if probes is None:
        probes = default_probes(nest.dim)
    if img is None:
        img = image_nest(w, nest, rank_tol)

    part = coarsest_partition(nest)
    d = partial_diagonal(w, nest, part, img)
    sums = [(part, d)]
    history = [
        DiagonalRow(part.range, math.nan, op_norm(d), check_intertwining(d, nest, img, part))
    ]
    cauchy: list[float] = []
    verdict = EXHAUSTED
    final = None
    stall = 0
    for _ in range(schedule):
        nxt = refine(part, nest)
        if nxt.indices == part.indices:
            break
        d_next = partial_diagonal(w, nest, nxt, img)
        defect = pairing_defect(d_next - d, probes)
        if cauchy and defect >= cauchy[-1]:
            stall += 1
        else:
            stall = 0
        cauchy.append(defect)
        part, d = nxt, d_next
        sums.append((part, d))
        history.append(
            DiagonalRow(part.range, defect, op_norm(d), check_intertwining(d, nest, img, part))
        )
        if not full_schedule:
            if defect <= eps:
                verdict = CONVERGED
                final = d
                break
            if stall >= _STALL_LIMIT:
                verdict = DIVERGED
                break
    if full_schedule and cauchy:
        if cauchy[-1] <= eps:
            verdict = CONVERGED
            final = d
        elif stall >= _STALL_LIMIT:
            verdict = DIVERGED
    return DiagonalReport(sums, verdict, final, cauchy, history, float(eps))
