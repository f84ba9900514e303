"""Nest-relative operator diagonals and triangular factorization.

A nest is an increasing chain of orthogonal projections indexed by a grid on
[0, T].  For a positive operator C the package builds the partition-limit
diagonal of a chosen square root, assembles the triangular factor
V = D^T sqrt(C), and measures how all of it behaves under perturbations of C:
strong convergence of image projections, weak convergence of the factors, a
four-term bound that splits the weak gap into refinement and perturbation
parts, and an explicit family where projection stability fails.
"""

from .linops import (
    NotPositiveError,
    NotSymmetricError,
    Projection,
    Spectrum,
    as_operator,
    asymmetry,
    grid_embed,
    grid_points,
    identity_projection,
    op_norm,
    pairing,
    projection_from_basis,
    psd_sqrt,
    range_projection,
    require_symmetric,
    sym_eig,
    zero_projection,
)
from .nests import (
    Nest,
    NestDefects,
    Partition,
    channel_nest,
    channel_projections,
    coarsest_partition,
    full_partition,
    increments,
    partition,
    refine,
    standard_nest,
    truncation_projection,
    validate,
)
from .amplitude import (
    DiagonalReport,
    DiagonalRow,
    ImageNest,
    adjoint_diagonal,
    check_intertwining,
    default_probes,
    diagonal,
    image_nest,
    pairing_defect,
    partial_diagonal,
)
from .factor import (
    FactorizationReport,
    FactorizationRow,
    NotPositiveDefiniteError,
    admissibility,
    canonical_factor,
    cholesky_upper,
    compare_to_cholesky,
    triangularity_defect,
)
from .stability import (
    ChannelAssembly,
    ConvergenceReport,
    ConvergenceRow,
    CounterexampleInstance,
    OperatorFamily,
    SingularGramError,
    anticausal_exp_kernel,
    channel_assembly,
    channel_volterra_family,
    counterexample_family,
    counterexample_instance,
    exp_volterra_matrix,
    exp_volterra_operator,
    gap_term_sweep,
    pairing_gap_decomposition,
    posdef_projection,
    regular_convergence_check,
    stability_harness,
    uniformity_diagnostic,
    volterra_family,
)
from .serialize import (
    load_nest,
    read_matrix_csv,
    save_nest,
    write_matrix_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelAssembly",
    "ConvergenceReport",
    "ConvergenceRow",
    "CounterexampleInstance",
    "DiagonalReport",
    "DiagonalRow",
    "FactorizationReport",
    "FactorizationRow",
    "ImageNest",
    "Nest",
    "NestDefects",
    "NotPositiveDefiniteError",
    "NotPositiveError",
    "NotSymmetricError",
    "OperatorFamily",
    "Partition",
    "Projection",
    "SingularGramError",
    "Spectrum",
    "adjoint_diagonal",
    "admissibility",
    "anticausal_exp_kernel",
    "as_operator",
    "asymmetry",
    "canonical_factor",
    "channel_assembly",
    "channel_nest",
    "channel_projections",
    "channel_volterra_family",
    "check_intertwining",
    "cholesky_upper",
    "coarsest_partition",
    "compare_to_cholesky",
    "counterexample_family",
    "counterexample_instance",
    "default_probes",
    "diagonal",
    "exp_volterra_matrix",
    "exp_volterra_operator",
    "full_partition",
    "gap_term_sweep",
    "grid_embed",
    "grid_points",
    "identity_projection",
    "image_nest",
    "increments",
    "load_nest",
    "op_norm",
    "pairing",
    "pairing_defect",
    "pairing_gap_decomposition",
    "partial_diagonal",
    "partition",
    "posdef_projection",
    "projection_from_basis",
    "psd_sqrt",
    "range_projection",
    "read_matrix_csv",
    "refine",
    "regular_convergence_check",
    "require_symmetric",
    "save_nest",
    "stability_harness",
    "standard_nest",
    "sym_eig",
    "triangularity_defect",
    "truncation_projection",
    "uniformity_diagnostic",
    "validate",
    "volterra_family",
    "write_matrix_csv",
    "zero_projection",
]
