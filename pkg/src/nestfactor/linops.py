"""Dense real linear algebra kernel for the coordinate model of L2(0, T).

Operators are plain square ``numpy.ndarray`` matrices.  Everything here is
real and finite-dimensional; adjoints are transposes.  Target sizes are a few
hundred rows, with dimensions up to about 1024 considered the design boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotPositiveError",
    "NotSymmetricError",
    "Projection",
    "Spectrum",
    "as_operator",
    "asymmetry",
    "grid_embed",
    "grid_points",
    "identity_projection",
    "op_norm",
    "pairing",
    "projection_from_basis",
    "psd_sqrt",
    "range_projection",
    "require_symmetric",
    "sym_eig",
    "zero_projection",
]

# Relative tolerances shared across the package.
SYM_TOL = 1e-12     # symmetry: max |A_ij - A_ji| <= SYM_TOL * (1 + ||A||)
PSD_TOL = 1e-12     # eigenvalue clamping threshold, relative to ||C||
RANK_TOL = 1e-10    # numerical rank: singular values > RANK_TOL * sigma_max


class NotSymmetricError(ValueError):
    """An operation required a symmetric matrix and got something else.

    ``defect`` is the measured asymmetry max |A_ij - A_ji|, ``bound`` the
    tolerance it exceeded.
    """

    def __init__(self, defect: float, bound: float):
        self.defect = float(defect)
        self.bound = float(bound)
        super().__init__(
            f"matrix is not symmetric: asymmetry {self.defect:.6e} "
            f"exceeds {self.bound:.6e}"
        )


class NotPositiveError(ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue
    beyond round-off.  Carries the offending eigenvalue."""

    def __init__(self, eigenvalue: float, bound: float):
        self.eigenvalue = float(eigenvalue)
        self.bound = float(bound)
        super().__init__(
            f"matrix is not positive semidefinite: eigenvalue "
            f"{self.eigenvalue:.6e} below -{self.bound:.6e}"
        )


def as_operator(a) -> np.ndarray:
    """Coerce to a dense square float matrix and reject non-finite entries."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("operator entries must be finite")
    return a


def op_norm(a) -> float:
    """Operator norm: the largest singular value."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def asymmetry(a) -> float:
    """Entrywise asymmetry max |A_ij - A_ji|."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.abs(a - a.T).max())


def require_symmetric(a: np.ndarray, tol: float = SYM_TOL) -> None:
    """Raise :class:`NotSymmetricError` unless A is symmetric within
    ``tol * (1 + ||A||)``."""
    defect = asymmetry(a)
    bound = tol * (1.0 + op_norm(a))
    if defect > bound:
        raise NotSymmetricError(defect, bound)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric operator.

    ``eigenvalues`` are ascending; ``eigenvectors`` holds the matching
    orthonormal eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class Projection:
    """Orthogonal projection stored as a dense matrix together with its rank."""

    matrix: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def defects(self) -> dict[str, float]:
        """Idempotence, symmetry and trace defects of the stored matrix."""
        p = self.matrix
        return {
            "idempotence": op_norm(p @ p - p),
            "symmetry": op_norm(p - p.T),
            "trace": abs(float(np.trace(p)) - float(self.rank)),
        }


def zero_projection(dim: int) -> Projection:
    return Projection(np.zeros((dim, dim)), 0)


def identity_projection(dim: int) -> Projection:
    return Projection(np.eye(dim), dim)


def projection_from_basis(u: np.ndarray) -> Projection:
    """Projection onto the span of the orthonormal columns of ``u``."""
    u = np.asarray(u, dtype=float)
    p = u @ u.T
    p = 0.5 * (p + p.T)
    return Projection(p, u.shape[1])


def sym_eig(a, tol: float = SYM_TOL) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Non-symmetric input raises :class:`NotSymmetricError` carrying the
    measured asymmetry.
    """
    a = as_operator(a)
    require_symmetric(a, tol)
    w, v = np.linalg.eigh(a)
    return Spectrum(w, v)


def psd_sqrt(c, tol: float = PSD_TOL) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol * ||C||, 0)`` are treated as round-off and clamped
    to zero; anything further below raises :class:`NotPositiveError` with the
    offending eigenvalue.
    """
    spec = sym_eig(c)
    w, v = spec.eigenvalues, spec.eigenvectors
    scale = float(np.abs(w).max()) if w.size else 0.0
    bound = tol * scale
    if w.size and w[0] < -bound:
        raise NotPositiveError(w[0], bound)
    root = np.sqrt(np.clip(w, 0.0, None))
    s = (v * root) @ v.T
    return 0.5 * (s + s.T)


def range_projection(w, x: Projection, rank_tol: float = RANK_TOL) -> Projection:
    """Orthogonal projection onto the column span of ``W @ X``.

    The numerical rank keeps singular values above ``rank_tol`` times the
    largest one.  ``W @ X == 0`` yields the zero projection, not an error.
    """
    w = as_operator(w)
    m = w @ x.matrix
    u, sv, _ = np.linalg.svd(m, full_matrices=False)
    if sv.size == 0 or sv[0] <= 0.0:
        return zero_projection(w.shape[0])
    rank = int(np.count_nonzero(sv > rank_tol * sv[0]))
    if rank == 0:
        return zero_projection(w.shape[0])
    return projection_from_basis(u[:, :rank])


def pairing(a, f, g) -> float:
    """Inner product (A f, g) in the coordinate model."""
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (a.shape[1],) or g.shape != (a.shape[0],):
        raise ValueError(
            f"pairing dimensions disagree: A is {a.shape}, f {f.shape}, g {g.shape}"
        )
    return float(g @ (a @ f))


def grid_points(n: int, horizon: float) -> np.ndarray:
    """Midpoints of the uniform n-cell grid on [0, horizon]."""
    h = horizon / n
    return (np.arange(n) + 0.5) * h


def grid_embed(kernel, n: int, horizon: float) -> np.ndarray:
    """Discretize an integral operator with the given kernel on [0, horizon].

    Returns the matrix ``A_ij = h * kernel(t_i, t_j)`` over the midpoint grid
    with cell width ``h = horizon / n``.  Coordinates carry the sqrt(h)
    scaling of sampled functions, so this matrix acts on coordinate vectors
    exactly as the integral operator acts on samples and the transpose is the
    adjoint.

    The kernel may be vectorized or scalar; non-finite values raise a
    ``ValueError`` naming the offending grid point.
    """
    if n < 2:
        raise ValueError(f"grid size must be at least 2, got {n}")
    if not (horizon > 0.0 and np.isfinite(horizon)):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    t = grid_points(n, horizon)
    rows = t[:, None]
    cols = t[None, :]
    try:
        values = np.asarray(kernel(rows, cols), dtype=float)
        if values.shape != (n, n):
            raise ValueError
    except (ValueError, TypeError):
        values = np.vectorize(kernel, otypes=[float])(rows, cols)
    if not np.isfinite(values).all():
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(
            f"kernel value not finite at t={t[i]!r}, tau={t[j]!r} "
            f"(grid indices {i}, {j})"
        )
    return (horizon / n) * values
