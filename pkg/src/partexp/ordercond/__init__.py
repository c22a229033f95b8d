"""Order-condition verification for partitioned exponential integrators.

Two-partition vector fields are analyzed over a fixed universe of 104
bi-colored rooted trees of order at most three.  Each node is one of four
kinds: round nodes N and P stand for the partition vector fields (or their
nonlinear remainders in the split setting), square nodes L and M stand for
the corresponding matrix arguments.  Square nodes carry at most one child.

`trees` enumerates the universe with symmetry factors and densities,
`bseries` provides exact-rational series arithmetic over the universe, and
`engine` expands each method family's one-step map into such a series and
compares it against the order conditions.
"""
from .trees import (
    KINDS,
    ROUND_KINDS,
    SQUARE_KINDS,
    Tree,
    canon,
    density,
    enumerate_trees,
    index_map,
    inv_gamma_s,
    inv_gamma_w,
    node,
    serialize_trees,
    sigma,
)
from .bseries import (
    BSeries,
    compose_function,
    exact_series,
    matrix_apply,
    matrix_function,
    phi_weights,
    psi_weights,
    yn_series,
    zero_series,
)
from .engine import (
    OrderReport,
    TableauReport,
    classical_stage_weights,
    numerical_bseries,
    numerical_bseries_diagonal_sepirk,
    numerical_bseries_expw,
    numerical_bseries_pepirkw,
    numerical_bseries_pexpw,
    numerical_bseries_psepirk,
    numerical_bseries_sepirk,
    verify_order,
    verify_tableau,
)

__all__ = [
    "KINDS", "ROUND_KINDS", "SQUARE_KINDS", "Tree", "canon", "density",
    "enumerate_trees", "index_map", "inv_gamma_s", "inv_gamma_w", "node",
    "serialize_trees", "sigma",
    "BSeries", "compose_function", "exact_series", "matrix_apply",
    "matrix_function", "phi_weights", "psi_weights", "yn_series",
    "zero_series",
    "OrderReport", "TableauReport", "classical_stage_weights",
    "numerical_bseries", "numerical_bseries_diagonal_sepirk",
    "numerical_bseries_expw", "numerical_bseries_pepirkw",
    "numerical_bseries_pexpw", "numerical_bseries_psepirk",
    "numerical_bseries_sepirk", "verify_order", "verify_tableau",
]
