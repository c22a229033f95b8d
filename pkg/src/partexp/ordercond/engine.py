"""Series expansion of one integrator step, and order verification.

Each `numerical_bseries_*` function expands a method family's one-step map
into an exact-rational series over the tree universe.  The stage maps mirror
the integrator formulations term by term; all arithmetic is `Fraction`, so a
method of order p produces residuals that are exactly zero on every tree of
order <= p.

W-form methods (pexpw, pepirkw, expw) are compared against targets that
vanish on square-bearing trees; split-form methods (psepirk, sepirk) are
compared against the classical densities on all trees.  Unpartitioned
methods are verified on the trees built from partition-1 kinds only, since
their expansions cannot reach partition-2 differentials.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

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
from .trees import Tree, enumerate_trees

_ROUND = ("N", "P")
_SQUARE = ("L", "M")


def _difference_combo(kind: str, nodes: Sequence[BSeries], j: int) -> BSeries:
    """Series of h Delta^(j-1) f(y_n) along the given node sequence."""
    out = zero_series()
    for r in range(j):
        w = Fraction((-1) ** (j - 1 - r) * comb(j - 1, r))
        out.accumulate(compose_function(kind, nodes[r]), w)
    return out


def _combo_of(term_fn, nodes: Sequence[BSeries], j: int) -> BSeries:
    """Forward-difference combination of arbitrary per-node series."""
    out = zero_series()
    for r in range(j):
        w = Fraction((-1) ** (j - 1 - r) * comb(j - 1, r))
        out.accumulate(term_fn(nodes[r]), w)
    return out


# ---------------------------------------------------------------------------
# exponential W-methods (k-vector stage maps)

def _bseries_expw_core(s, A, G, weights) -> BSeries:
    P = len(s)
    yn = yn_series()
    k: list[list[Optional[BSeries]]] = [[None] * s[q] for q in range(P)]
    for i in range(max(s)):
        for q in range(P):
            if i >= s[q]:
                continue
            u = yn.copy()
            coupling = zero_series()
            for m in range(P):
                for j in range(min(i, s[m])):
                    u.accumulate(k[m][j], A[q][m][i][j])
                    coupling.accumulate(k[m][j], G[q][m][i][j])
            arg = compose_function(_ROUND[q], u) + matrix_apply(_SQUARE[q], coupling)
            k[q][i] = matrix_function(_SQUARE[q], phi_weights(1), G[q][q][i][i], arg)
    y1 = yn.copy()
    for q in range(P):
        for i in range(s[q]):
            y1.accumulate(k[q][i], weights[q][i])
    return y1


def numerical_bseries_pexpw(t, use_embedded: bool = False) -> BSeries:
    w = t.bhat if use_embedded else t.b
    if w is None:
        raise ValueError(f"{t.name}: no embedded weights")
    return _bseries_expw_core(t.s, t.A, t.G, w)


def numerical_bseries_expw(t, use_embedded: bool = False) -> BSeries:
    w = t.bhat if use_embedded else t.b
    if w is None:
        raise ValueError(f"{t.name}: no embedded weights")
    return _bseries_expw_core((t.s,), ((t.alpha,),), ((t.gamma,),), (w,))


# ---------------------------------------------------------------------------
# EPIRK W-methods (Psi-weighted forward differences of f along own stages)

def numerical_bseries_pepirkw(t, use_embedded: bool = False) -> BSeries:
    P = len(t.s)
    yn = yn_series()
    lead = [compose_function(_ROUND[m], yn) for m in range(P)]
    nodes: list[list[BSeries]] = [[yn] for _ in range(P)]
    for i in range(1, max(t.s)):
        fresh = {}
        for q in range(P):
            if i > t.s[q] - 1:
                continue
            row = i - 1
            Y = yn.copy()
            for m in range(P):
                term = matrix_function(_SQUARE[m], psi_weights(t.p[q][m][0]),
                                       t.g[q][m][row][0], lead[m])
                Y.accumulate(term, t.a[q][m][row][0])
                for j in range(2, min(i, t.s[m]) + 1):
                    combo = _difference_combo(_ROUND[m], nodes[m], j)
                    term = matrix_function(_SQUARE[m], psi_weights(t.p[q][m][j - 1]),
                                           t.g[q][m][row][j - 1], combo)
                    Y.accumulate(term, t.a[q][m][row][j - 1])
            fresh[q] = Y
        for q, Y in fresh.items():
            nodes[q].append(Y)

    w = t.bhat if use_embedded else t.b
    if w is None:
        raise ValueError(f"{t.name}: no embedded weights")
    y1 = yn.copy()
    for m in range(P):
        row = t.s[m] - 1
        term = matrix_function(_SQUARE[m], psi_weights(t.p[m][m][0]),
                               t.g[m][m][row][0], lead[m])
        y1.accumulate(term, w[m][0])
        for j in range(2, t.s[m] + 1):
            combo = _difference_combo(_ROUND[m], nodes[m], j)
            term = matrix_function(_SQUARE[m], psi_weights(t.p[m][m][j - 1]),
                                   t.g[m][m][row][j - 1], combo)
            y1.accumulate(term, w[m][j - 1])
    return y1


# ---------------------------------------------------------------------------
# split EPIRK methods (round kinds are nonlinear remainders here)

def _split_rhs(part: int, a: BSeries) -> BSeries:
    """Series of h f_part(B(a)) = h (N_part + L_part y)(B(a))."""
    return compose_function(_ROUND[part], a) + matrix_apply(_SQUARE[part], a)


def numerical_bseries_psepirk(t, use_embedded: bool = False) -> BSeries:
    yn = yn_series()
    hF = _split_rhs(0, yn) + _split_rhs(1, yn)

    def remainder_plus_other(part):
        other = 1 - part
        return lambda a: (compose_function(_ROUND[part], a)
                          + compose_function(_ROUND[other], a)
                          + matrix_apply(_SQUARE[other], a))

    nodes = [yn]
    for i in range(1, t.s):
        row = i - 1
        Y = yn.copy()
        for part in range(2):
            term = matrix_function(_SQUARE[part], psi_weights(t.p[part][0]),
                                   t.g[part][row][0], hF)
            Y.accumulate(term, t.a[part][row][0])
            for l in range(2, i + 1):
                combo = _combo_of(remainder_plus_other(part), nodes, l)
                term = matrix_function(_SQUARE[part], psi_weights(t.p[part][l - 1]),
                                       t.g[part][row][l - 1], combo)
                Y.accumulate(term, t.a[part][row][l - 1])
        nodes.append(Y)

    w = t.bhat if use_embedded else t.b
    if w is None:
        raise ValueError(f"{t.name}: no embedded weights")
    y1 = yn.copy()
    row = t.s - 1
    for part in range(2):
        term = matrix_function(_SQUARE[part], psi_weights(t.p[part][0]),
                               t.g[part][row][0], hF)
        y1.accumulate(term, w[part][0])
        for l in range(2, t.s + 1):
            combo = _combo_of(remainder_plus_other(part), nodes, l)
            term = matrix_function(_SQUARE[part], psi_weights(t.p[part][l - 1]),
                                   t.g[part][row][l - 1], combo)
            y1.accumulate(term, w[part][l - 1])
    return y1


def numerical_bseries_sepirk(t, use_embedded: bool = False) -> BSeries:
    yn = yn_series()
    hf = _split_rhs(0, yn)
    nodes = [yn]
    for i in range(1, t.s):
        row = i - 1
        Y = yn.copy()
        term = matrix_function("L", psi_weights(t.p[0]), t.g[row][0], hf)
        Y.accumulate(term, t.a[row][0])
        for l in range(2, i + 1):
            combo = _difference_combo("N", nodes, l)
            term = matrix_function("L", psi_weights(t.p[l - 1]), t.g[row][l - 1], combo)
            Y.accumulate(term, t.a[row][l - 1])
        nodes.append(Y)

    w = t.bhat if use_embedded else t.b
    if w is None:
        raise ValueError(f"{t.name}: no embedded weights")
    y1 = yn.copy()
    row = t.s - 1
    term = matrix_function("L", psi_weights(t.p[0]), t.g[row][0], hf)
    y1.accumulate(term, w[0])
    for l in range(2, t.s + 1):
        combo = _difference_combo("N", nodes, l)
        term = matrix_function("L", psi_weights(t.p[l - 1]), t.g[row][l - 1], combo)
        y1.accumulate(term, w[l - 1])
    return y1


def numerical_bseries_diagonal_sepirk(s: int, a, g, p, b) -> BSeries:
    """Split EPIRK variant whose matrix functions only ever act on their own
    partition's vectors (per-partition stage sequences, diagonal final row).

    Kept as a reference construction: its expansion cannot reach trees whose
    square root sits over the other partition's node, so it stalls at order
    one no matter the coefficients.  Blocks are indexed a[j][k][row][col]
    (stage partition j, function partition k), g likewise, p[j][k] holds Psi
    weight rows, b[k] the diagonal final weights.
    """
    yn = yn_series()
    hf = [_split_rhs(k, yn) for k in range(2)]
    nodes: list[list[BSeries]] = [[yn], [yn]]
    for i in range(1, s):
        row = i - 1
        fresh = []
        for j in range(2):
            Y = yn.copy()
            for k in range(2):
                term = matrix_function(_SQUARE[k], psi_weights(p[j][k][0]),
                                       g[j][k][row][0], hf[k])
                Y.accumulate(term, a[j][k][row][0])
                for l in range(2, i + 1):
                    combo = _difference_combo(_ROUND[k], nodes[k], l)
                    term = matrix_function(_SQUARE[k], psi_weights(p[j][k][l - 1]),
                                           g[j][k][row][l - 1], combo)
                    Y.accumulate(term, a[j][k][row][l - 1])
            fresh.append(Y)
        for j in range(2):
            nodes[j].append(fresh[j])
    y1 = yn.copy()
    row = s - 1
    for k in range(2):
        term = matrix_function(_SQUARE[k], psi_weights(p[k][k][0]),
                               g[k][k][row][0], hf[k])
        y1.accumulate(term, b[k][0])
        for l in range(2, s + 1):
            combo = _difference_combo(_ROUND[k], nodes[k], l)
            term = matrix_function(_SQUARE[k], psi_weights(p[k][k][l - 1]),
                                   g[k][k][row][l - 1], combo)
            y1.accumulate(term, b[k][l - 1])
    return y1


# ---------------------------------------------------------------------------
# classical elementary weights (independent cross-check for degenerate cases)

def classical_stage_weights(A_nodes, b_nodes, tree: Tree) -> Fraction:
    """Elementary weight of a round-only tree for a two-family RK scheme.

    The scheme has one node list per family, node 0 being y_n (zero row):
    node r of family q is y_n + sum_m sum_rp A_nodes[q][m][r][rp] h f_m(node
    rp of family m), and the output weights are b_nodes[m][r] on h f_m(node
    r of family m).  Descending an edge therefore switches the node family
    to the child function's partition.  This is the textbook
    elementary-weight recursion and shares no code with the series engine.
    """
    kind_part = {"N": 0, "P": 1}

    def weight_in(fam: int, r: int, sub: Tree) -> Fraction:
        m = kind_part[sub.kind]
        total = Fraction(0)
        for rp in range(len(A_nodes[fam][m][r])):
            w = Fraction(A_nodes[fam][m][r][rp])
            if w == 0:
                continue
            prod = w
            for c in sub.children:
                prod *= weight_in(m, rp, c)
                if prod == 0:
                    break
            total += prod
        return total

    m = kind_part[tree.kind]
    total = Fraction(0)
    for r in range(len(b_nodes[m])):
        w = Fraction(b_nodes[m][r])
        if w == 0:
            continue
        prod = w
        for c in tree.children:
            prod *= weight_in(m, r, c)
            if prod == 0:
                break
        total += prod
    return total


# ---------------------------------------------------------------------------
# verification

@dataclass
class OrderReport:
    order: int
    target: str
    ok: bool
    max_residual: Fraction
    violations: list

    def __str__(self):
        state = "PASS" if self.ok else "FAIL"
        if self.max_residual == 0:
            shown = "0"
        else:
            approx = float(self.max_residual)
            # exact rationals this small underflow the float range
            shown = f"{approx:.3e}" if approx > 0.0 else "<1e-300"
        return f"order {self.order}: {state} (max residual {shown})"


@dataclass
class TableauReport:
    name: str
    order_ok: bool
    embedded_ok: bool
    max_residual: Fraction
    first_violation: Optional[int]
    primary: OrderReport
    embedded: Optional[OrderReport]


def _kind_set(t: Tree) -> frozenset:
    out = {t.kind}
    for c in t.children:
        out |= _kind_set(c)
    return frozenset(out)


def verify_order(series: BSeries, target: str, p: int,
                 restrict: Optional[frozenset] = None) -> OrderReport:
    """Compare a one-step series against the order-p conditions.

    `target` is 'W' or 'S'.  `restrict`, when given, limits the check to
    trees whose node kinds all lie in the set (used for unpartitioned
    methods).  Violations list 1-based tree indices with (got, want); index
    0 flags a wrong empty-tree coefficient.
    """
    exact = exact_series(target)
    violations = []
    max_res = Fraction(0)
    if series.empty != 1:
        violations.append((0, series.empty, Fraction(1)))
        max_res = abs(series.empty - 1)
    for i, t in enumerate(enumerate_trees()):
        if t.order > p:
            continue
        if restrict is not None and not _kind_set(t) <= restrict:
            continue
        got = series.coeffs[i]
        want = exact.coeffs[i]
        if got != want:
            violations.append((i + 1, got, want))
            res = abs(got - want)
            if res > max_res:
                max_res = res
    return OrderReport(order=p, target=target, ok=not violations,
                       max_residual=max_res, violations=violations)


def numerical_bseries(tableau, use_embedded: bool = False) -> BSeries:
    """Dispatch a tableau to its family's series expansion."""
    from ..tableaus import (
        ExpwTableau, PepirkwTableau, PexpwTableau, PsepirkTableau, SepirkTableau)
    if isinstance(tableau, PexpwTableau):
        return numerical_bseries_pexpw(tableau, use_embedded)
    if isinstance(tableau, PepirkwTableau):
        return numerical_bseries_pepirkw(tableau, use_embedded)
    if isinstance(tableau, PsepirkTableau):
        return numerical_bseries_psepirk(tableau, use_embedded)
    if isinstance(tableau, ExpwTableau):
        return numerical_bseries_expw(tableau, use_embedded)
    if isinstance(tableau, SepirkTableau):
        return numerical_bseries_sepirk(tableau, use_embedded)
    raise TypeError(f"no series expansion for {type(tableau).__name__}")


def verify_tableau(tableau, order: Optional[int] = None) -> TableauReport:
    """Verify a tableau's claimed order (and embedded order, if present)."""
    from ..tableaus import (
        ExpwTableau, PepirkwTableau, PexpwTableau, PsepirkTableau, SepirkTableau)
    if isinstance(tableau, (PexpwTableau, PepirkwTableau)):
        target, restrict = "W", None
    elif isinstance(tableau, PsepirkTableau):
        target, restrict = "S", None
    elif isinstance(tableau, ExpwTableau):
        target, restrict = "W", frozenset({"N", "L"})
    elif isinstance(tableau, SepirkTableau):
        target, restrict = "S", frozenset({"N", "L"})
    else:
        raise TypeError(f"no verification rule for {type(tableau).__name__}")

    p = tableau.order if order is None else order
    primary = verify_order(numerical_bseries(tableau), target, p, restrict)
    embedded = None
    embedded_ok = True
    if tableau.bhat is not None and tableau.embedded_order > 0:
        embedded = verify_order(numerical_bseries(tableau, use_embedded=True),
                                target, tableau.embedded_order, restrict)
        embedded_ok = embedded.ok
    first = primary.violations[0][0] if primary.violations else None
    return TableauReport(
        name=tableau.name,
        order_ok=primary.ok,
        embedded_ok=embedded_ok,
        max_residual=primary.max_residual,
        first_violation=first,
        primary=primary,
        embedded=embedded,
    )
