"""Stability experiments for the canonical triangular factorization.

The central question: when a family of positive operators converges to a
limit, do the triangular factors follow?  Plain norm convergence is not
enough; the image projections must converge as well (regular convergence).
This module provides

* a regular-convergence checker over a probe set,
* a harness comparing factors of a family against the factor of its limit,
  with a four-term bound certifying each weak pairing defect,
* a uniformity diagnostic across partitions and family members,
* the Gram-block projection formula available for positive definite
  operators, cross-checkable against the SVD route,
* an explicit family where the operators converge in norm but the image
  projections escape, so the factors cannot follow, and
* block-diagonal channel assemblies whose factorizations reduce to the
  channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve

from .linops import (
    PSD_TOL,
    RANK_TOL,
    Projection,
    as_operator,
    grid_embed,
    op_norm,
    psd_sqrt,
    require_symmetric,
    zero_projection,
)
from .nests import (
    Nest,
    channel_nest,
    channel_projections,
    coarsest_partition,
    full_partition,
    refine,
    standard_nest,
)
from .amplitude import default_probes, image_nest, pairing_defect, partial_diagonal
from .factor import FactorizationReport, canonical_factor

__all__ = [
    "ChannelAssembly",
    "ConvergenceReport",
    "ConvergenceRow",
    "CounterexampleInstance",
    "OperatorFamily",
    "SingularGramError",
    "anticausal_exp_kernel",
    "channel_assembly",
    "channel_volterra_family",
    "counterexample_family",
    "counterexample_instance",
    "exp_volterra_matrix",
    "exp_volterra_operator",
    "gap_term_sweep",
    "pairing_gap_decomposition",
    "posdef_projection",
    "regular_convergence_check",
    "stability_harness",
    "uniformity_diagnostic",
    "volterra_family",
]

PASS = "pass"
FAIL = "fail"


class SingularGramError(ValueError):
    """The restricted Gram block of the operator cannot be inverted.  Carries
    a condition number estimate."""

    def __init__(self, cond: float):
        self.cond = float(cond)
        super().__init__(
            f"restricted Gram block is numerically singular "
            f"(condition estimate {self.cond:.3e})"
        )


@dataclass(frozen=True)
class OperatorFamily:
    """A parametrized family of operators with its limit.

    ``alphas`` ascend; ``members[i]`` belongs to ``alphas[i]``.
    """

    label: str
    alphas: tuple[float, ...]
    members: tuple[np.ndarray, ...]
    limit: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "limit", as_operator(self.limit))
        object.__setattr__(self, "members", tuple(as_operator(m) for m in self.members))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.members) != len(self.alphas) or not self.members:
            raise ValueError("need one member per alpha, at least one of each")
        if any(b <= a for a, b in zip(self.alphas[:-1], self.alphas[1:])):
            raise ValueError(f"alphas must be strictly ascending, got {self.alphas}")
        dim = self.limit.shape[0]
        if any(m.shape[0] != dim for m in self.members):
            raise ValueError("family members must share the limit's dimension")

    @property
    def dim(self) -> int:
        return self.limit.shape[0]


@dataclass(frozen=True)
class ConvergenceRow:
    """Per-member defects.  Fields not measured by a given check are nan.

    ``term1`` .. ``term4`` bound the weak pairing defect: refinement error of
    the limit factor, refinement error of the member factor, partition-sum
    difference, and square-root difference.  ``bound_margin`` is the smallest
    slack of that bound over the probe pairs.
    """

    alpha: float
    op_defect: float
    proj_defect: float
    max_pairing: float = math.nan
    term1: float = math.nan
    term2: float = math.nan
    term3: float = math.nan
    term4: float = math.nan
    bound_margin: float = math.nan


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    verdict: str
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS


def _strong_defect(delta: np.ndarray, f_cols: np.ndarray) -> float:
    """max ||delta f|| over probe columns."""
    return float(np.linalg.norm(delta @ f_cols, axis=0).max())


def regular_convergence_check(
    fam: OperatorFamily,
    nest: Nest,
    probes: np.ndarray | None = None,
    tol: float | None = None,
    rank_tol: float = RANK_TOL,
) -> ConvergenceReport:
    """Check strong convergence of the members and of their image projections.

    Per member: op defect = max ||(W_a - W) f|| over probes, projection
    defect = max ||(P_a(s) - P(s)) f|| over grid points and probes.  The
    verdict passes when both defects at the largest alpha sit below ``tol``
    (default 0.01 * (1 + ||W||)) and both have decreased at least twofold
    from the smallest alpha (families starting below ``tol`` count as
    decreased).
    """
    if probes is None:
        probes = default_probes(nest.dim)
    if tol is None:
        tol = 0.01 * (1.0 + op_norm(fam.limit))
    f_cols = probes.T
    limit_img = image_nest(fam.limit, nest, rank_tol)
    rows = []
    worst_points = []
    for alpha, w in zip(fam.alphas, fam.members):
        img = image_nest(w, nest, rank_tol)
        proj_defect = 0.0
        worst_j = 0
        for j in range(len(nest.grid)):
            val = _strong_defect(img.p(j) - limit_img.p(j), f_cols)
            if val > proj_defect:
                proj_defect, worst_j = val, j
        rows.append(
            ConvergenceRow(
                alpha=alpha,
                op_defect=_strong_defect(w - fam.limit, f_cols),
                proj_defect=proj_defect,
            )
        )
        worst_points.append(float(nest.grid[worst_j]))

    def decreased(first: float, last: float) -> bool:
        return first >= 2.0 * last or first <= tol

    last = rows[-1]
    failure = None
    if last.op_defect > tol:
        failure = (
            f"operator defect {last.op_defect:.3e} at alpha={last.alpha:g} "
            f"exceeds tol {tol:.3e}"
        )
    elif last.proj_defect > tol:
        failure = (
            f"projection defect {last.proj_defect:.3e} at alpha={last.alpha:g}, "
            f"s={worst_points[-1]:g} exceeds tol {tol:.3e}"
        )
    elif not decreased(rows[0].op_defect, last.op_defect):
        failure = "operator defect did not decrease twofold across the family"
    elif not decreased(rows[0].proj_defect, last.proj_defect):
        failure = "projection defect did not decrease twofold across the family"
    return ConvergenceReport(rows, PASS if failure is None else FAIL, failure)


def stability_harness(
    fam: OperatorFamily,
    nest: Nest,
    schedule: int = 6,
    eps: float | None = None,
    probes: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> ConvergenceReport:
    """Factor every member and the limit, then compare the factors weakly.

    All runs share the refinement schedule (no early stopping), so partition
    depths line up and the deepest partial sum of each run stands in for its
    diagonal limit.  Per member the report records the strong defects of the
    square roots and their image projections, the max weak pairing defect
    max |((V - V_a) f, g)| over probe pairs, and the four bounding terms
    evaluated at the mid-schedule partition (the bound holds for any
    partition; mid-schedule keeps the refinement terms visible).

    Verdict passes when the pairing defect at the largest alpha is at most
    ``eps`` (default 1e-3 * (1 + ||C||)) and decreases along the family.
    """
    if probes is None:
        probes = default_probes(nest.dim)
    if eps is None:
        eps = 1e-3 * (1.0 + op_norm(fam.limit))
    f_cols = probes.T
    lim = canonical_factor(
        fam.limit, nest, schedule, probes=probes, rank_tol=rank_tol,
        psd_tol=psd_tol, full_schedule=True,
    )
    sums = lim.diag_report.partial_sums
    mid = len(sums) // 2
    sq, v, d_fin, d_mid = lim.sqrt_c, lim.v, lim.d, sums[mid][1]
    sqf = sq @ f_cols
    rows = []
    for alpha, c_a in zip(fam.alphas, fam.members):
        rep = canonical_factor(
            c_a, nest, schedule, probes=probes, rank_tol=rank_tol,
            psd_tol=psd_tol, full_schedule=True,
        )
        sums_a = rep.diag_report.partial_sums
        sq_a, v_a, d_fin_a, d_mid_a = rep.sqrt_c, rep.v, rep.d, sums_a[mid][1]
        proj_defect = max(
            _strong_defect(rep.image.p(j) - lim.image.p(j), f_cols)
            for j in range(len(nest.grid))
        )
        pair0 = f_cols.T @ ((v - v_a) @ f_cols)
        m1 = np.abs(((d_fin - d_mid) @ f_cols).T @ sqf)
        m2 = np.abs(((d_fin_a - d_mid_a) @ f_cols).T @ (sq_a @ f_cols))
        m3 = np.abs(((d_mid - d_mid_a) @ f_cols).T @ sqf)
        m4 = np.abs((d_mid_a @ f_cols).T @ ((sq - sq_a) @ f_cols))
        bound = m1 + m2 + m3 + m4
        gi, fi = np.unravel_index(np.argmax(np.abs(pair0)), pair0.shape)
        rows.append(
            ConvergenceRow(
                alpha=alpha,
                op_defect=_strong_defect(sq_a - sq, f_cols),
                proj_defect=proj_defect,
                max_pairing=float(np.abs(pair0).max()),
                term1=float(m1[gi, fi]),
                term2=float(m2[gi, fi]),
                term3=float(m3[gi, fi]),
                term4=float(m4[gi, fi]),
                bound_margin=float((bound - np.abs(pair0)).min()),
            )
        )
    failure = None
    last = rows[-1]
    if last.max_pairing > eps:
        failure = (
            f"pairing defect {last.max_pairing:.3e} at alpha={last.alpha:g} "
            f"exceeds eps {eps:.3e}"
        )
    else:
        for prev, cur in zip(rows[:-1], rows[1:]):
            if cur.max_pairing >= prev.max_pairing and cur.max_pairing > eps:
                failure = (
                    f"pairing defect did not decrease from alpha={prev.alpha:g} "
                    f"to alpha={cur.alpha:g}"
                )
                break
    return ConvergenceReport(rows, PASS if failure is None else FAIL, failure)


def gap_term_sweep(
    fam: OperatorFamily,
    nest: Nest,
    schedule: int = 6,
    probes: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> list[tuple]:
    """Four-term bound across every refinement level and family member.

    One row per (partition range, alpha): max weak pairing defect of the
    final factors, the four bounding terms split at that level's partition,
    and the worst slack of the bound over probe pairs.  All runs share the
    full refinement schedule, so levels line up across operators.  Rows are
    grouped by level, members ascending within each level.
    """
    if probes is None:
        probes = default_probes(nest.dim)
    f_cols = probes.T
    lim = canonical_factor(
        fam.limit, nest, schedule, probes=probes, rank_tol=rank_tol,
        psd_tol=psd_tol, full_schedule=True,
    )
    sums = lim.diag_report.partial_sums
    sq = lim.sqrt_c
    sqf = sq @ f_cols
    members = []
    for alpha, c_a in zip(fam.alphas, fam.members):
        rep = canonical_factor(
            c_a, nest, schedule, probes=probes, rank_tol=rank_tol,
            psd_tol=psd_tol, full_schedule=True,
        )
        pair0 = np.abs(f_cols.T @ ((lim.v - rep.v) @ f_cols))
        members.append((alpha, rep, pair0))
    rows = []
    for level, (part, d_lvl) in enumerate(sums):
        for alpha, rep, pair0 in members:
            d_lvl_a = rep.diag_report.partial_sums[level][1]
            sq_a = rep.sqrt_c
            m1 = np.abs(((lim.d - d_lvl) @ f_cols).T @ sqf)
            m2 = np.abs(((rep.d - d_lvl_a) @ f_cols).T @ (sq_a @ f_cols))
            m3 = np.abs(((d_lvl - d_lvl_a) @ f_cols).T @ sqf)
            m4 = np.abs((d_lvl_a @ f_cols).T @ ((sq - sq_a) @ f_cols))
            bound = m1 + m2 + m3 + m4
            gi, fi = np.unravel_index(np.argmax(pair0), pair0.shape)
            rows.append((
                part.range,
                alpha,
                float(pair0.max()),
                float(m1[gi, fi]),
                float(m2[gi, fi]),
                float(m3[gi, fi]),
                float(m4[gi, fi]),
                float((bound - pair0).min()),
            ))
    return rows


def pairing_gap_decomposition(
    c,
    c_alpha,
    nest: Nest,
    part,
    f,
    g,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> tuple[float, float, float, float]:
    """Four-term bound on the weak gap between the factors of two PSD
    operators, evaluated at one partition and one probe pair.

    With D the deepest available diagonal (full nest partition standing in
    for the limit) and D_part the sum at the given partition, the terms are

        t1 = |(sqrt(C) f,       (D - D_part) g)|          for C,
        t2 = |(sqrt(C_a) f,     (D_a - D_part_a) g)|      for C_a,
        t3 = |(sqrt(C) f,       (D_part - D_part_a) g)|,
        t4 = |((sqrt(C) - sqrt(C_a)) f,  D_part_a g)|,

    and t1 + t2 + t3 + t4 >= |((V - V_a) f, g)| up to round-off, where
    V = D^T sqrt(C) and V_a = D_a^T sqrt(C_a).
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    sq = psd_sqrt(as_operator(c), psd_tol)
    sq_a = psd_sqrt(as_operator(c_alpha), psd_tol)
    img = image_nest(sq, nest, rank_tol)
    img_a = image_nest(sq_a, nest, rank_tol)
    fine = full_partition(nest)
    d_fin = partial_diagonal(sq, nest, fine, img)
    d_par = partial_diagonal(sq, nest, part, img)
    d_fin_a = partial_diagonal(sq_a, nest, fine, img_a)
    d_par_a = partial_diagonal(sq_a, nest, part, img_a)
    t1 = abs(float((sq @ f) @ ((d_fin - d_par) @ g)))
    t2 = abs(float((sq_a @ f) @ ((d_fin_a - d_par_a) @ g)))
    t3 = abs(float((sq @ f) @ ((d_par - d_par_a) @ g)))
    t4 = abs(float(((sq - sq_a) @ f) @ (d_par_a @ g)))
    return t1, t2, t3, t4


def uniformity_diagnostic(
    fam: OperatorFamily,
    nest: Nest,
    schedule: int = 6,
    probes: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> np.ndarray:
    """Cauchy defects of the square-root diagonals across refinements, per
    member: entry (i, j) is the probe-pairing defect of member i at
    refinement step j.  Columns past the finest partition are zero.  The
    headline statistic is the column-wise sup over members; no pass
    threshold is attached."""
    if probes is None:
        probes = default_probes(nest.dim)
    out = np.zeros((len(fam.members), schedule))
    for i, c_a in enumerate(fam.members):
        sq = psd_sqrt(as_operator(c_a), psd_tol)
        img = image_nest(sq, nest, rank_tol)
        part = coarsest_partition(nest)
        d = partial_diagonal(sq, nest, part, img)
        for j in range(schedule):
            nxt = refine(part, nest)
            if nxt.indices == part.indices:
                break
            d_next = partial_diagonal(sq, nest, nxt, img)
            out[i, j] = pairing_defect(d_next - d, probes)
            part, d = nxt, d_next
    return out


def _range_basis(proj: Projection) -> np.ndarray:
    """Orthonormal basis of the range of a projection, as columns."""
    m = proj.matrix
    diag = np.diag(m)
    if np.count_nonzero(m - np.diag(diag)) == 0 and np.isin(diag, (0.0, 1.0)).all():
        return np.eye(proj.dim)[:, diag == 1.0]
    u, _, _ = np.linalg.svd(m)
    return u[:, : proj.rank]


def posdef_projection(
    c,
    nest: Nest,
    s: float,
    sqrt_c: np.ndarray | None = None,
    cond_limit: float = 1e12,
) -> Projection:
    """Image projection of sqrt(C) at a grid point, via the Gram block of a
    positive definite C:

        P_s = sqrt(C) U (U^T C U)^{-1} U^T sqrt(C)

    with U an orthonormal basis of the range of X_s (the leading coordinates
    on the standard nest).  A numerically singular Gram block raises
    :class:`SingularGramError` with a condition estimate.
    """
    c = as_operator(c)
    require_symmetric(c)
    grid = nest.grid
    j = int(np.argmin(np.abs(grid - s)))
    if abs(grid[j] - s) > 1e-12 * max(1.0, nest.horizon):
        raise ValueError(f"s={s!r} is not a grid point of the nest")
    xp = nest.projections[j]
    if xp.rank == 0:
        return zero_projection(nest.dim)
    if sqrt_c is None:
        sqrt_c = psd_sqrt(c)
    u = _range_basis(xp)
    gram = u.T @ c @ u
    gram = 0.5 * (gram + gram.T)
    evals = np.linalg.eigvalsh(gram)
    if evals[0] <= 0.0 or evals[-1] > cond_limit * evals[0]:
        cond = math.inf if evals[0] <= 0.0 else float(evals[-1] / evals[0])
        raise SingularGramError(cond)
    solved = cho_solve(cho_factor(gram, lower=False), u.T @ sqrt_c)
    p = (sqrt_c @ u) @ solved
    p = 0.5 * (p + p.T)
    return Projection(p, xp.rank)


class CounterexampleInstance(NamedTuple):
    """One member of the projection-escape family, with its closed forms."""

    w: np.ndarray       # limit: the diagonal operator with entries 1/k
    w_n: np.ndarray     # perturbed member, ||W_n - W|| <= 2/n
    m: Projection       # the fixed subspace spanned by basis vectors 2..N
    p: Projection       # projection onto closure(W M)
    p_n: Projection     # projection onto W_n M; stays far from p


def counterexample_instance(n: int, trunc: int) -> CounterexampleInstance:
    """Operators converging in norm whose image projections do not follow.

    In the ``trunc``-dimensional truncation, the limit sends basis vector
    phi_k to (1/k) phi_k.  The member W_n agrees except on span{phi_1,
    phi_n}:

        W_n phi_1 = phi_1 + (1/n) phi_n
        W_n phi_n = (1/n) phi_1 + (2/n^2) phi_n

    Then ||W_n - W|| <= 2/n, while the projection onto W_n M is
    I - psi psi^T / ||psi||^2 for psi = phi_1 - (n/2) phi_n, so
    ||(P_n - P) phi_1||^2 = 1 - 1/(1 + n^2/4) tends to one.
    """
    if n < 2:
        raise ValueError(f"member index must be at least 2, got {n}")
    if trunc < n + 1:
        raise ValueError(f"truncation {trunc} too small for member index {n}")
    k = np.arange(1, trunc + 1, dtype=float)
    w = np.diag(1.0 / k)
    w_n = w.copy()
    i1 = n - 1
    w_n[0, 0] = 1.0
    w_n[i1, 0] = 1.0 / n
    w_n[0, i1] = 1.0 / n
    w_n[i1, i1] = 2.0 / n**2
    eye = np.eye(trunc)
    m_mat = eye.copy()
    m_mat[0, 0] = 0.0
    p = eye - np.outer(eye[0], eye[0])
    psi = eye[0] - (n / 2.0) * eye[i1]
    psi = psi / np.linalg.norm(psi)
    p_n = eye - np.outer(psi, psi)
    return CounterexampleInstance(
        w=w,
        w_n=w_n,
        m=Projection(m_mat, trunc - 1),
        p=Projection(p, trunc - 1),
        p_n=Projection(p_n, trunc - 1),
    )


def counterexample_family(
    n_values=(2, 4, 8, 16, 32), trunc: int = 64
) -> tuple[OperatorFamily, Nest]:
    """The projection-escape family over the three-step nest {0, M, full}."""
    n_values = tuple(int(n) for n in n_values)
    inst = counterexample_instance(n_values[0], trunc)
    members = [counterexample_instance(n, trunc).w_n for n in n_values]
    fam = OperatorFamily(
        label=f"projection-escape trunc={trunc}",
        alphas=tuple(float(n) for n in n_values),
        members=tuple(members),
        limit=inst.w,
    )
    nest = Nest(
        1.0,
        np.array([0.0, 0.5, 1.0]),
        (zero_projection(trunc), inst.m, Projection(np.eye(trunc), trunc)),
    )
    return fam, nest


@dataclass
class ChannelAssembly:
    """Block-diagonal assembly of per-channel factorizations.

    ``report`` factors the assembled operator over the assembled nest;
    ``channel_reports`` factor each block over its own nest.
    ``assembly_defect`` measures ||V_global - blockdiag(V_l)``; the channel
    projections commute with the assembled nest and operator up to
    ``commutation_defect``.
    """

    operator: np.ndarray
    nest: Nest
    report: FactorizationReport
    channel_reports: list[FactorizationReport]
    channels: list[Projection]
    assembly_defect: float
    commutation_defect: float
    min_eigenvalue: float
    channel_min_eigenvalues: list[float]


def channel_assembly(
    blocks,
    block_nests,
    schedule: int = 6,
    eps: float | None = None,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> ChannelAssembly:
    """Assemble PSD blocks into one block-diagonal operator and factor both
    ways: per channel and globally.  All runs share the refinement schedule.
    """
    blocks = [as_operator(b) for b in blocks]
    block_nests = list(block_nests)
    if not blocks or len(blocks) != len(block_nests):
        raise ValueError("need one nest per channel block")
    for b, bn in zip(blocks, block_nests):
        if b.shape[0] != bn.dim:
            raise ValueError("channel block and nest dimensions disagree")
    c = block_diag(*blocks)
    nest = channel_nest(block_nests)
    chans = channel_projections([bn.dim for bn in block_nests])
    channel_reports = [
        canonical_factor(b, bn, schedule, eps=eps, rank_tol=rank_tol,
                         psd_tol=psd_tol, full_schedule=True)
        for b, bn in zip(blocks, block_nests)
    ]
    report = canonical_factor(c, nest, schedule, eps=eps, rank_tol=rank_tol,
                              psd_tol=psd_tol, full_schedule=True)
    assembly_defect = op_norm(report.v - block_diag(*[r.v for r in channel_reports]))
    commutation = 0.0
    for f_l in chans:
        commutation = max(commutation, op_norm(f_l.matrix @ c - c @ f_l.matrix))
        for j in range(len(nest.grid)):
            x = nest.x(j)
            commutation = max(commutation, op_norm(f_l.matrix @ x - x @ f_l.matrix))
    return ChannelAssembly(
        operator=c,
        nest=nest,
        report=report,
        channel_reports=channel_reports,
        channels=chans,
        assembly_defect=assembly_defect,
        commutation_defect=commutation,
        min_eigenvalue=float(np.linalg.eigvalsh(c)[0]),
        channel_min_eigenvalues=[float(np.linalg.eigvalsh(b)[0]) for b in blocks],
    )


def anticausal_exp_kernel(kappa: float):
    """Smooth anticausal kernel kappa * exp(tau - t) supported on tau > t."""

    def kernel(t, tau):
        return np.where(tau > t, kappa * np.exp(tau - t), 0.0)

    return kernel


def exp_volterra_matrix(kappa: float, n: int, horizon: float = 1.0) -> np.ndarray:
    """Upper triangular I + L with L the midpoint embedding of the smooth
    anticausal kernel; invertible with unit diagonal."""
    if abs(kappa) >= 1.0:
        raise ValueError(f"kernel weight must satisfy |kappa| < 1, got {kappa}")
    return np.eye(n) + grid_embed(anticausal_exp_kernel(kappa), n, horizon)


def exp_volterra_operator(kappa: float, n: int, horizon: float = 1.0) -> np.ndarray:
    """Positive definite test operator C = (I + L)^T (I + L)."""
    m = exp_volterra_matrix(kappa, n, horizon)
    return m.T @ m


def volterra_family(kappa: float, alphas, n: int, horizon: float = 1.0) -> OperatorFamily:
    """Norm-convergent family C_a built from kernel weights
    kappa * (1 - 1/alpha) increasing toward kappa."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kernel weight must lie in (0, 1), got {kappa}")
    alphas = tuple(float(a) for a in alphas)
    members = tuple(
        exp_volterra_operator(kappa * (1.0 - 1.0 / a), n, horizon) for a in alphas
    )
    return OperatorFamily(
        label=f"volterra kappa={kappa:g} n={n}",
        alphas=alphas,
        members=members,
        limit=exp_volterra_operator(kappa, n, horizon),
    )


def channel_volterra_family(
    kappa: float,
    alphas,
    n_per_channel: int,
    channels: int,
    horizon: float = 1.0,
) -> tuple[OperatorFamily, Nest]:
    """Channel family: block l carries the scaled operator (1/l) C_a, so the
    global minimum eigenvalue decays like 1/channels while every channel
    factors with its own lower bound."""
    if channels < 1:
        raise ValueError(f"need at least one channel, got {channels}")
    base = volterra_family(kappa, alphas, n_per_channel, horizon)
    scales = [1.0 / l for l in range(1, channels + 1)]
    members = tuple(
        block_diag(*[s * m for s in scales]) for m in base.members
    )
    limit = block_diag(*[s * base.limit for s in scales])
    nest = channel_nest([standard_nest(n_per_channel)] * channels)
    fam = OperatorFamily(
        label=f"channel volterra kappa={kappa:g} n={n_per_channel} L={channels}",
        alphas=base.alphas,
        members=members,
        limit=limit,
    )
    return fam, nest
