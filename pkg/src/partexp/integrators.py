"""Single-step maps and fixed/adaptive drivers for the method families.

Five steppers share the same calling convention: ``step(tableau, ivp, y_n,
h, tol)`` where ``tol`` controls the Krylov phi/psi actions inside the
step.  All of them evaluate matrix functions through the krylov module, so
stage formulas here mirror the exact-rational stage maps used by the
order-condition engine; what is order-verified is what runs.

Drivers: `integrate_fixed` repeats a step with a final shortened step that
lands exactly on tf; `integrate_adaptive` wraps the embedded estimate in an
elementary step-size controller (accept iff the scaled-RMS estimate is at
or below the tolerance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .krylov import ConvergenceFailure, phi_action_adaptive, psi_action_info
from .operators import LinearOperatorHandle
from .tableaus import (
    ExpwTableau,
    PepirkwTableau,
    PexpwTableau,
    PsepirkTableau,
    SepirkTableau,
    as_float,
)

__all__ = [
    "PartitionedIvp",
    "StepOutcome",
    "ControllerState",
    "StepFailure",
    "StiffnessFailure",
    "IntegrationStats",
    "FixedResult",
    "AdaptiveResult",
    "forward_difference",
    "step_expw",
    "step_pexpw",
    "step_pepirkw",
    "step_psepirk",
    "step_sepirk",
    "step_function_for",
    "integrate_fixed",
    "integrate_adaptive",
]

WProvider = Union[LinearOperatorHandle, Callable[[np.ndarray], LinearOperatorHandle]]


@dataclass
class PartitionedIvp:
    """An initial value problem split into partition right-hand sides.

    `f[m]` maps a state vector to the partition-m component of the RHS;
    their sum is the full RHS.  `W[m]` is either a fixed operator or a
    callable evaluated at the step's base point (the per-step Jacobian
    approximation).  `split`, when present, carries per-partition pairs
    (L, N) with f_m(y) = L_m y + N_m(y); the split steppers require it.
    `full_jacobian`, when present, maps a state to the dense Jacobian of
    the full RHS; reference solvers use it for stiff integration.
    """

    y0: np.ndarray
    t0: float
    tf: float
    f: tuple
    W: tuple
    split: Optional[tuple] = None
    name: str = ""
    full_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)
        self.f = tuple(self.f)
        self.W = tuple(self.W)
        if len(self.f) != len(self.W):
            raise ValueError("need one W approximation per partition RHS")
        if self.split is not None:
            self.split = tuple(self.split)
            if len(self.split) != len(self.f):
                raise ValueError("need one (L, N) pair per partition")
        if not self.tf > self.t0:
            raise ValueError("tf must exceed t0")

    @property
    def partitions(self) -> int:
        return len(self.f)

    def full_rhs(self, y: np.ndarray) -> np.ndarray:
        total = self.f[0](y)
        for fm in self.f[1:]:
            total = total + fm(y)
        return total

    def W_at(self, m: int, y: np.ndarray) -> LinearOperatorHandle:
        provider = self.W[m]
        if isinstance(provider, LinearOperatorHandle):
            return provider
        return provider(y)


@dataclass
class StepOutcome:
    y_next: np.ndarray
    err_est: float
    krylov_dims: tuple
    accepted: bool = True
    rhs_evals: int = 0

    @property
    def krylov_dim_total(self) -> int:
        return int(sum(self.krylov_dims))


@dataclass
class ControllerState:
    """Elementary controller parameters and running state."""

    h: float
    p_hat: int
    safety: float = 0.9
    facmin: float = 0.2
    facmax: float = 5.0
    consecutive_rejects: int = 0

    def __post_init__(self):
        if not (0 < self.facmin < 1 < self.facmax):
            raise ValueError("need 0 < facmin < 1 < facmax")
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if self.p_hat < 1:
            raise ValueError("error-estimate order must be at least 1")


class StepFailure(RuntimeError):
    """A single step could not be completed (Krylov breakdown or non-finite
    stage values)."""

    def __init__(self, message: str, t: Optional[float] = None,
                 partition: Optional[int] = None):
        if partition is not None:
            message = f"partition {partition + 1}: {message}"
        if t is not None:
            message = f"t={t:.6g}: {message}"
        super().__init__(message)
        self.t = t
        self.partition = partition
        # drivers attach the counters accumulated before the failure
        self.stats: Optional["IntegrationStats"] = None


class StiffnessFailure(RuntimeError):
    """Adaptive step size underflowed; the problem is too stiff for the
    method at this tolerance."""

    def __init__(self, t: float, y: np.ndarray, stats: "IntegrationStats"):
        super().__init__(
            f"step size underflow at t={t:.6g}; integration abandoned")
        self.t = t
        self.y = y
        self.stats = stats


@dataclass
class IntegrationStats:
    steps: int = 0
    accepts: int = 0
    rejects: int = 0
    rhs_evals: int = 0
    krylov_dim_total: int = 0


@dataclass
class FixedResult:
    y: np.ndarray
    t: float
    stats: IntegrationStats


@dataclass
class AdaptiveResult:
    y: np.ndarray
    t: float
    stats: IntegrationStats
    history: list = field(default_factory=list)


def forward_difference(values: Sequence[np.ndarray], j: int) -> np.ndarray:
    """j-th forward difference at the head of a node-value sequence."""
    if j < 0:
        raise ValueError("difference order must be nonnegative")
    if len(values) < j + 1:
        raise ValueError(f"need {j + 1} values for a {j}-th difference, got {len(values)}")
    out = None
    for r in range(j + 1):
        term = ((-1) ** (j - r) * comb(j, r)) * np.asarray(values[r], dtype=float)
        out = term if out is None else out + term
    return out


def _check_finite(v: np.ndarray, what: str, partition: Optional[int] = None):
    if not np.all(np.isfinite(v)):
        raise StepFailure(f"non-finite values in {what}", partition=partition)


class _Hints:
    """Per-site Krylov dimension hints, cleared on large step-size changes."""

    def __init__(self):
        self._dims: dict = {}
        self._h: Optional[float] = None

    def refresh(self, h: float) -> None:
        if self._h is not None and not (0.5 <= h / self._h <= 2.0):
            self._dims.clear()
        self._h = h

    def get(self, key) -> Optional[int]:
        return self._dims.get(key)

    def put(self, key, decomp) -> None:
        if decomp.M > 0:
            self._dims[key] = decomp.M


# ---------------------------------------------------------------------------
# exponential W steps (k-vector stage maps)


def _expw_core(s, A, G, b, bhat, fs, Ws, y_n, h, tol, hints):
    P = len(s)
    n = y_n.shape[0]
    k = [[None] * s[q] for q in range(P)]
    dims = [0] * P
    rhs_evals = 0
    for i in range(max(s)):
        for q in range(P):
            if i >= s[q]:
                continue
            u = y_n.copy()
            coupling = np.zeros(n)
            any_coupling = False
            for m in range(P):
                for j in range(min(i, s[m])):
                    if A[q][m][i][j] != 0.0:
                        u = u + A[q][m][i][j] * k[m][j]
                    if G[q][m][i][j] != 0.0:
                        coupling = coupling + G[q][m][i][j] * k[m][j]
                        any_coupling = True
            arg = h * fs[q](u)
            rhs_evals += 1
            if any_coupling:
                arg = arg + h * Ws[q].apply(coupling)
            _check_finite(arg, f"stage {i + 1} input", partition=q)
            try:
                vec, decomp = phi_action_adaptive(
                    Ws[q], arg, h * G[q][q][i][i], 1, tol,
                    hint=hints.get(("k", q, i)))
            except ConvergenceFailure as exc:
                raise StepFailure(str(exc), partition=q) from exc
            if not decomp.converged:
                raise StepFailure(
                    f"Krylov subspace cap reached before the requested "
                    f"tolerance (M={decomp.M})", partition=q)
            hints.put(("k", q, i), decomp)
            dims[q] += decomp.M
            _check_finite(vec, f"stage {i + 1} vector", partition=q)
            k[q][i] = vec
    y1 = y_n.copy()
    for q in range(P):
        for i in range(s[q]):
            if b[q][i] != 0.0:
                y1 = y1 + b[q][i] * k[q][i]
    yhat = None
    if bhat is not None:
        yhat = y_n.copy()
        for q in range(P):
            for i in range(s[q]):
                if bhat[q][i] != 0.0:
                    yhat = yhat + bhat[q][i] * k[q][i]
    return y1, yhat, tuple(dims), rhs_evals


def _scaled_rms(diff: np.ndarray, y_old: np.ndarray, y_new: np.ndarray) -> float:
    scale = 1.0 + np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((diff / scale) ** 2)))


def _finish(y_n, y1, yhat, dims, rhs_evals) -> StepOutcome:
    _check_finite(y1, "step result")
    err = 0.0
    if yhat is not None:
        err = _scaled_rms(y1 - yhat, y_n, y1)
    return StepOutcome(y_next=y1, err_est=err, krylov_dims=dims,
                       rhs_evals=rhs_evals)


def step_expw(tableau: ExpwTableau, ivp: PartitionedIvp, y_n: np.ndarray,
              h: float, tol: float, hints: Optional[_Hints] = None) -> StepOutcome:
    if ivp.partitions != 1:
        raise ValueError("step_expw drives single-partition problems")
    hints = hints if hints is not None else _Hints()
    W = ivp.W_at(0, y_n)
    y1, yhat, dims, evals = _expw_core(
        (tableau.s,), ((as_float(tableau.alpha),),), ((as_float(tableau.gamma),),),
        (as_float(tableau.b),),
        (as_float(tableau.bhat),) if tableau.bhat is not None else None,
        ivp.f, (W,), y_n, h, tol, hints)
    return _finish(y_n, y1, yhat, dims, evals)


def step_pexpw(tableau: PexpwTableau, ivp: PartitionedIvp, y_n: np.ndarray,
               h: float, tol: float, hints: Optional[_Hints] = None) -> StepOutcome:
    P = tableau.partitions
    if ivp.partitions != P:
        raise ValueError(
            f"tableau has {P} partitions, problem has {ivp.partitions}")
    hints = hints if hints is not None else _Hints()
    Ws = tuple(ivp.W_at(m, y_n) for m in range(P))
    A = tuple(tuple(as_float(tableau.A[q][m]) for m in range(P)) for q in range(P))
    G = tuple(tuple(as_float(tableau.G[q][m]) for m in range(P)) for q in range(P))
    b = tuple(as_float(r) for r in tableau.b)
    bhat = tuple(as_float(r) for r in tableau.bhat) if tableau.bhat is not None else None
    y1, yhat, dims, evals = _expw_core(
        tableau.s, A, G, b, bhat, ivp.f, Ws, y_n, h, tol, hints)
    return _finish(y_n, y1, yhat, dims, evals)


# ---------------------------------------------------------------------------
# EPIRK W steps (Psi-weighted forward differences of f along own stages)


def step_pepirkw(tableau: PepirkwTableau, ivp: PartitionedIvp, y_n: np.ndarray,
                 h: float, tol: float, hints: Optional[_Hints] = None) -> StepOutcome:
    P = tableau.partitions
    if ivp.partitions != P:
        raise ValueError(
            f"tableau has {P} partitions, problem has {ivp.partitions}")
    hints = hints if hints is not None else _Hints()
    Ws = tuple(ivp.W_at(m, y_n) for m in range(P))
    a = tuple(tuple(as_float(tableau.a[q][m]) for m in range(P)) for q in range(P))
    g = tuple(tuple(as_float(tableau.g[q][m]) for m in range(P)) for q in range(P))
    p = tableau.p
    dims = [0] * P
    rhs_evals = P
    # hfs[m][r] = h f_m(node r of partition m); node 0 is y_n
    hfs = [[h * ivp.f[m](y_n)] for m in range(P)]
    for m in range(P):
        _check_finite(hfs[m][0], "base RHS", partition=m)

    def psi_term(q_or_b, m, row, j, vec, site):
        weights = [float(x) for x in p[q_or_b][m][j - 1]]
        try:
            out, decomp = psi_action_info(
                Ws[m], vec, h * g[q_or_b][m][row][j - 1], weights, tol,
                hint=hints.get(site))
        except ConvergenceFailure as exc:
            raise StepFailure(str(exc), partition=m) from exc
        if not decomp.converged:
            raise StepFailure(
                f"Krylov subspace cap reached before the requested "
                f"tolerance (M={decomp.M})", partition=m)
        hints.put(site, decomp)
        dims[m] += decomp.M
        return out

    def combo(m, j):
        return forward_difference(hfs[m][:j], j - 1)

    for i in range(1, max(tableau.s)):
        fresh = {}
        for q in range(P):
            if i > tableau.s[q] - 1:
                continue
            row = i - 1
            Y = y_n.copy()
            for m in range(P):
                if a[q][m][row][0] != 0.0:
                    term = psi_term(q, m, row, 1, hfs[m][0], ("stage", q, m, row, 1))
                    Y = Y + a[q][m][row][0] * term
                for j in range(2, min(i, tableau.s[m]) + 1):
                    if a[q][m][row][j - 1] == 0.0:
                        continue
                    term = psi_term(q, m, row, j, combo(m, j),
                                    ("stage", q, m, row, j))
                    Y = Y + a[q][m][row][j - 1] * term
            _check_finite(Y, f"stage {i + 1} value", partition=q)
            fresh[q] = Y
        for q, Y in fresh.items():
            hfs[q].append(h * ivp.f[q](Y))
            rhs_evals += 1

    b = tuple(as_float(r) for r in tableau.b)
    bhat = tuple(as_float(r) for r in tableau.bhat) if tableau.bhat is not None else None
    y1 = y_n.copy()
    yhat = y_n.copy() if bhat is not None else None
    for m in range(P):
        row = tableau.s[m] - 1
        for j in range(1, tableau.s[m] + 1):
            wb = b[m][j - 1]
            wh = bhat[m][j - 1] if bhat is not None else 0.0
            if wb == 0.0 and wh == 0.0:
                continue
            vec = hfs[m][0] if j == 1 else combo(m, j)
            term = psi_term(m, m, row, j, vec, ("final", m, j))
            if wb != 0.0:
                y1 = y1 + wb * term
            if yhat is not None and wh != 0.0:
                yhat = yhat + wh * term
    return _finish(y_n, y1, yhat, tuple(dims), rhs_evals)


# ---------------------------------------------------------------------------
# split EPIRK steps (exact L parts, differences of nonlinear remainders)


def _require_split(ivp: PartitionedIvp, expected: int):
    if ivp.split is None:
        raise ValueError("this stepper needs the (L, N) splitting on the problem")
    if ivp.partitions != expected:
        raise ValueError(f"expected {expected} partition(s), got {ivp.partitions}")


def step_psepirk(tableau: PsepirkTableau, ivp: PartitionedIvp, y_n: np.ndarray,
                 h: float, tol: float, hints: Optional[_Hints] = None) -> StepOutcome:
    _require_split(ivp, 2)
    hints = hints if hints is not None else _Hints()
    Ls = tuple(ivp.split[m][0] for m in range(2))
    Ns = tuple(ivp.split[m][1] for m in range(2))
    a = tuple(as_float(blk) for blk in tableau.a)
    g = tuple(as_float(blk) for blk in tableau.g)
    dims = [0, 0]
    rhs_evals = 0

    # per unified node r: hvals[part][r] = h (N_part + f_other)(node r)
    hvals: list[list[np.ndarray]] = [[], []]

    def push_node(y: np.ndarray):
        nonlocal rhs_evals
        n1, n2 = Ns[0](y), Ns[1](y)
        l1, l2 = Ls[0].apply(y), Ls[1].apply(y)
        rhs_evals += 2
        hvals[0].append(h * (n1 + n2 + l2))
        hvals[1].append(h * (n2 + n1 + l1))

    push_node(y_n)
    hF = h * (Ns[0](y_n) + Ns[1](y_n) + Ls[0].apply(y_n) + Ls[1].apply(y_n))
    rhs_evals += 2
    _check_finite(hF, "base RHS")

    def psi_term(part, row, l, vec, site):
        weights = [float(x) for x in tableau.p[part][l - 1]]
        try:
            out, decomp = psi_action_info(
                Ls[part], vec, h * g[part][row][l - 1], weights, tol,
                hint=hints.get(site))
        except ConvergenceFailure as exc:
            raise StepFailure(str(exc), partition=part) from exc
        if not decomp.converged:
            raise StepFailure(
                f"Krylov subspace cap reached before the requested "
                f"tolerance (M={decomp.M})", partition=part)
        hints.put(site, decomp)
        dims[part] += decomp.M
        return out

    for i in range(1, tableau.s):
        row = i - 1
        Y = y_n.copy()
        for part in range(2):
            if a[part][row][0] != 0.0:
                Y = Y + a[part][row][0] * psi_term(part, row, 1, hF,
                                                   ("stage", part, row, 1))
            for l in range(2, i + 1):
                if a[part][row][l - 1] == 0.0:
                    continue
                vec = forward_difference(hvals[part][:l], l - 1)
                Y = Y + a[part][row][l - 1] * psi_term(part, row, l, vec,
                                                       ("stage", part, row, l))
        _check_finite(Y, f"stage {i + 1} value")
        push_node(Y)

    b = tuple(as_float(r) for r in tableau.b)
    bhat = tuple(as_float(r) for r in tableau.bhat) if tableau.bhat is not None else None
    y1 = y_n.copy()
    yhat = y_n.copy() if bhat is not None else None
    row = tableau.s - 1
    for part in range(2):
        for l in range(1, tableau.s + 1):
            wb = b[part][l - 1]
            wh = bhat[part][l - 1] if bhat is not None else 0.0
            if wb == 0.0 and wh == 0.0:
                continue
            vec = hF if l == 1 else forward_difference(hvals[part][:l], l - 1)
            term = psi_term(part, row, l, vec, ("final", part, l))
            if wb != 0.0:
                y1 = y1 + wb * term
            if yhat is not None and wh != 0.0:
                yhat = yhat + wh * term
    return _finish(y_n, y1, yhat, tuple(dims), rhs_evals)


def step_sepirk(tableau: SepirkTableau, ivp: PartitionedIvp, y_n: np.ndarray,
                h: float, tol: float, hints: Optional[_Hints] = None) -> StepOutcome:
    _require_split(ivp, 1)
    hints = hints if hints is not None else _Hints()
    L, N = ivp.split[0]
    a = as_float(tableau.a)
    g = as_float(tableau.g)
    dims = [0]
    rhs_evals = 1
    hN = [h * N(y_n)]
    hf = hN[0] + h * L.apply(y_n)
    _check_finite(hf, "base RHS")

    def psi_term(row, l, vec, site):
        weights = [float(x) for x in tableau.p[l - 1]]
        try:
            out, decomp = psi_action_info(L, vec, h * g[row][l - 1], weights,
                                          tol, hint=hints.get(site))
        except ConvergenceFailure as exc:
            raise StepFailure(str(exc)) from exc
        if not decomp.converged:
            raise StepFailure(
                f"Krylov subspace cap reached before the requested "
                f"tolerance (M={decomp.M})")
        hints.put(site, decomp)
        dims[0] += decomp.M
        return out

    for i in range(1, tableau.s):
        row = i - 1
        Y = y_n.copy()
        if a[row][0] != 0.0:
            Y = Y + a[row][0] * psi_term(row, 1, hf, ("stage", row, 1))
        for l in range(2, i + 1):
            if a[row][l - 1] == 0.0:
                continue
            vec = forward_difference(hN[:l], l - 1)
            Y = Y + a[row][l - 1] * psi_term(row, l, vec, ("stage", row, l))
        _check_finite(Y, f"stage {i + 1} value")
        hN.append(h * N(Y))
        rhs_evals += 1

    b = as_float(tableau.b)
    bhat = as_float(tableau.bhat) if tableau.bhat is not None else None
    y1 = y_n.copy()
    yhat = y_n.copy() if bhat is not None else None
    row = tableau.s - 1
    for l in range(1, tableau.s + 1):
        wb = b[l - 1]
        wh = bhat[l - 1] if bhat is not None else 0.0
        if wb == 0.0 and wh == 0.0:
            continue
        vec = hf if l == 1 else forward_difference(hN[:l], l - 1)
        term = psi_term(row, l, vec, ("final", l))
        if wb != 0.0:
            y1 = y1 + wb * term
        if yhat is not None and wh != 0.0:
            yhat = yhat + wh * term
    return _finish(y_n, y1, yhat, tuple(dims), rhs_evals)


_STEPPERS = (
    (PexpwTableau, step_pexpw),
    (PepirkwTableau, step_pepirkw),
    (PsepirkTableau, step_psepirk),
    (ExpwTableau, step_expw),
    (SepirkTableau, step_sepirk),
)


def step_function_for(tableau):
    for cls, fn in _STEPPERS:
        if isinstance(tableau, cls):
            return fn
    raise TypeError(f"no stepper for {type(tableau).__name__}")


# ---------------------------------------------------------------------------
# drivers


def integrate_fixed(tableau, ivp: PartitionedIvp, h: float,
                    krylov_tol: float = 1e-12) -> FixedResult:
    """March from t0 to tf with constant step h (last step shortened)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    span = ivp.tf - ivp.t0
    if span / h > 10_000_000:
        raise ValueError("step count limit exceeded")
    step = step_function_for(tableau)
    hints = _Hints()
    stats = IntegrationStats()
    t = ivp.t0
    y = ivp.y0.copy()
    tiny = 1e-12 * span
    while t < ivp.tf - tiny:
        h_step = min(h, ivp.tf - t)
        hints.refresh(h_step)
        try:
            out = step(tableau, ivp, y, h_step, krylov_tol, hints=hints)
        except StepFailure as exc:
            failure = StepFailure(str(exc), t=t)
            failure.stats = stats
            raise failure from exc
        y = out.y_next
        t = ivp.tf if h_step >= ivp.tf - t - tiny else t + h_step
        stats.steps += 1
        stats.accepts += 1
        stats.rhs_evals += out.rhs_evals
        stats.krylov_dim_total += out.krylov_dim_total
    return FixedResult(y=y, t=ivp.tf, stats=stats)


def integrate_adaptive(tableau, ivp: PartitionedIvp, tol: float,
                       controller: Optional[ControllerState] = None,
                       krylov_tol: Optional[float] = None) -> AdaptiveResult:
    """March with the elementary embedded-error controller.

    Accept iff the scaled-RMS embedded difference is at most tol; the step
    factor is safety*(tol/err)^(1/(p_hat+1)) clamped to [facmin, facmax],
    with growth disabled until the first accept after any rejection.  A
    step size below 1e-14*(tf - t0) raises StiffnessFailure.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if tableau.bhat is None or tableau.embedded_order < 1:
        raise ValueError(f"{tableau.name}: adaptive driver needs an embedded weight row")
    if krylov_tol is None:
        krylov_tol = max(1e-14, 1e-3 * tol)
    span = ivp.tf - ivp.t0
    if controller is None:
        controller = ControllerState(h=span / 100.0,
                                     p_hat=tableau.embedded_order)
    step = step_function_for(tableau)
    hints = _Hints()
    stats = IntegrationStats()
    history: list[tuple[float, float, float, bool]] = []
    t = ivp.t0
    y = ivp.y0.copy()
    h = controller.h
    growth_clamped = False
    floor = 1e-14 * span
    tiny = 1e-12 * span
    while t < ivp.tf - tiny:
        if h < floor:
            raise StiffnessFailure(t, y, stats)
        h_step = min(h, ivp.tf - t)
        hints.refresh(h_step)
        failed = False
        try:
            out = step(tableau, ivp, y, h_step, krylov_tol, hints=hints)
            err = out.err_est
        except StepFailure:
            failed = True
            err = math.inf
        stats.steps += 1
        if not failed:
            stats.rhs_evals += out.rhs_evals
            stats.krylov_dim_total += out.krylov_dim_total
        if not failed and err <= tol:
            y = out.y_next
            t = ivp.tf if h_step >= ivp.tf - t - tiny else t + h_step
            stats.accepts += 1
            controller.consecutive_rejects = 0
            history.append((t, h_step, err, True))
            cap = 1.0 if growth_clamped else controller.facmax
            if err == 0.0:
                factor = cap
            else:
                factor = controller.safety * (tol / err) ** (1.0 / (controller.p_hat + 1))
                factor = min(cap, max(controller.facmin, factor))
            growth_clamped = False
            h = h_step * factor
        else:
            stats.rejects += 1
            controller.consecutive_rejects += 1
            history.append((t, h_step, err, False))
            growth_clamped = True
            if failed or err == math.inf:
                factor = controller.facmin
            else:
                factor = controller.safety * (tol / err) ** (1.0 / (controller.p_hat + 1))
                factor = min(1.0, max(controller.facmin, factor))
            h = h_step * factor
    controller.h = h
    return AdaptiveResult(y=y, t=ivp.tf, stats=stats, history=history)
