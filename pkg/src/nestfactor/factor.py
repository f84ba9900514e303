"""Canonical triangular factorization of positive operators relative to a nest.

Given a PSD operator C, the factor is V = D^T sqrt(C) where D is the diagonal
of sqrt(C) relative to the nest.  V is upper triangular with respect to the
nest at the partition points, and the factorization residual ||V^T V - C|| is
controlled by how far D is from a coisometry:

    ||V^T V - C|| <= ||sqrt(C)||^2 * ||D D^T - I||.

The coisometry defect is reported, never enforced.  For positive definite C
the factor lines up with the Cholesky triangle, which serves as the
independent oracle here: the canonical route never touches it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .linops import (
    PSD_TOL,
    RANK_TOL,
    as_operator,
    op_norm,
    psd_sqrt,
    require_symmetric,
)
from .amplitude import DiagonalReport, ImageNest, diagonal, image_nest
from .nests import Nest, Partition

__all__ = [
    "FactorizationReport",
    "FactorizationRow",
    "NotPositiveDefiniteError",
    "admissibility",
    "canonical_factor",
    "cholesky_upper",
    "compare_to_cholesky",
    "triangularity_defect",
]


class NotPositiveDefiniteError(ValueError):
    """Cholesky hit a non-positive pivot.  ``pivot`` is the 1-based order of
    the first leading minor that is not positive definite."""

    def __init__(self, pivot: int):
        self.pivot = int(pivot)
        super().__init__(
            f"matrix is not positive definite: leading minor of order "
            f"{self.pivot} is not positive"
        )


def triangularity_defect(v, nest: Nest, indices=None) -> float:
    """max ||(I - X_s) V X_s|| over the selected grid points (all by default).

    Zero means V maps each nest subspace into itself, i.e. V is upper
    triangular relative to the nest.
    """
    v = np.asarray(v, dtype=float)
    eye = np.eye(nest.dim)
    sel = range(len(nest.grid)) if indices is None else indices
    worst = 0.0
    for j in sel:
        x = nest.x(j)
        worst = max(worst, op_norm((eye - x) @ v @ x))
    return worst


def admissibility(d, tol: float = RANK_TOL) -> tuple[float, int]:
    """Coisometry defect ||D D^T - I|| and rank defect dim - rank(D)."""
    d = np.asarray(d, dtype=float)
    gram = op_norm(d @ d.T - np.eye(d.shape[0]))
    sv = np.linalg.svd(d, compute_uv=False)
    if sv.size == 0 or sv[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sv > tol * sv[0]))
    return gram, d.shape[0] - rank


def cholesky_upper(c) -> np.ndarray:
    """Upper Cholesky triangle with positive diagonal: C = R^T R.

    Raises :class:`NotPositiveDefiniteError` carrying the pivot index when C
    is not positive definite.
    """
    c = as_operator(c)
    require_symmetric(c)
    r, info = lapack.dpotrf(c, lower=0, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info)
    if info < 0:
        raise ValueError(f"cholesky failed on argument {-info}")
    return r


def compare_to_cholesky(v, r) -> float:
    """Distance ||S V - R|| after aligning row signs to the positive diagonal
    of R.  S is the diagonal sign matrix making diag(S V) nonnegative, which
    minimizes the distance over the sign gauge when V is close to +/-R
    row-wise."""
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    signs = np.where(np.diag(v) < 0.0, -1.0, 1.0)
    return op_norm(signs[:, None] * v - r)


@dataclass(frozen=True)
class FactorizationRow:
    """Per-refinement record of the factorization diagnostics."""

    range: float
    residual: float
    admissibility_defect: float
    triangularity: float
    cholesky_distance: float


@dataclass
class FactorizationReport:
    """Canonical factorization of one PSD operator over one nest.

    ``v = d.T @ sqrt_c`` for the deepest diagonal ``d`` reached by the
    refinement schedule.  ``admissibility`` is (||D D^T - I||, rank defect).
    ``history`` records the diagnostics at every refinement level;
    ``cholesky_distance`` entries are nan when C is not positive definite.
    """

    sqrt_c: np.ndarray
    diag_report: DiagonalReport
    d: np.ndarray
    v: np.ndarray
    residual: float
    triangularity: float
    admissibility: tuple[float, int]
    history: list[FactorizationRow]
    image: ImageNest

    @property
    def final_partition(self) -> Partition:
        return self.diag_report.last_partition


def canonical_factor(
    c,
    nest: Nest,
    schedule: int = 6,
    eps: float | None = None,
    probes: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
    full_schedule: bool = False,
) -> FactorizationReport:
    """Factor a PSD operator as V^T V with V triangular relative to the nest.

    Runs the diagonal refinement of sqrt(C), forms V = D^T sqrt(C) at the
    deepest partition, and measures residual, triangularity at the partition
    points, and the coisometry defect of D.  Nothing is rejected on
    admissibility grounds; defects are reported as numbers.  Non-PSD input
    propagates the square-root error.
    """
    c = as_operator(c)
    sqrt_c = psd_sqrt(c, psd_tol)
    img = image_nest(sqrt_c, nest, rank_tol)
    rep = diagonal(
        sqrt_c,
        nest,
        schedule=schedule,
        eps=eps,
        probes=probes,
        rank_tol=rank_tol,
        img=img,
        full_schedule=full_schedule,
    )
    try:
        chol = cholesky_upper(c)
    except NotPositiveDefiniteError:
        chol = None
    history = []
    for part_j, d_j in rep.partial_sums:
        v_j = d_j.T @ sqrt_c
        history.append(
            FactorizationRow(
                range=part_j.range,
                residual=op_norm(v_j.T @ v_j - c),
                admissibility_defect=admissibility(d_j, rank_tol)[0],
                triangularity=triangularity_defect(v_j, nest, part_j.indices),
                cholesky_distance=math.nan if chol is None else compare_to_cholesky(v_j, chol),
            )
        )
    d = rep.final if rep.final is not None else rep.last
    v = d.T @ sqrt_c
    return FactorizationReport(
        sqrt_c=sqrt_c,
        diag_report=rep,
        d=d,
        v=v,
        residual=history[-1].residual,
        triangularity=history[-1].triangularity,
        admissibility=admissibility(d, rank_tol),
        history=history,
        image=img,
    )
