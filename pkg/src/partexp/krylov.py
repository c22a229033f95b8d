"""Adaptive Arnoldi/Lanczos evaluation of phi_k(scale*A) b and Psi(scale*A) b.

The subspace is grown one vector at a time with modified Gram-Schmidt plus a
single reorthogonalization pass.  At pre-determined checkpoint dimensions the
a-posteriori estimate

    s_M = beta * h_{M+1,M} * | e_M^T phi_1(scale * H_M) e_1 |

of the phi_1 approximation error is evaluated, and growth stops once
s_M <= tol.  Higher phi_k converge at least as fast as phi_1, so one bound
serves every weight of a Psi combination.  A subspace-size hint carried over
from the previous timestep skips the checkpoints below it.  Happy breakdown
(subdiagonal element at rounding level) marks the subspace invariant and the
projected evaluation exact.

phi_k(scale*A) b is then approximated by  beta * V_M phi_k(scale*H_M) e_1,
with the whole phi chain on H_M obtained from one augmented-matrix
exponential and cached on the decomposition.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .operators import LinearOperatorHandle
from .phifuncs import MAX_PHI_INDEX, phi_chain_dense

__all__ = [
    "DEFAULT_SCHEDULE",
    "MAX_SUBSPACE",
    "ConvergenceSchedule",
    "KrylovDecomposition",
    "ConvergenceFailure",
    "build_adaptive",
    "phi_action",
    "phi_action_adaptive",
    "psi_action",
    "psi_action_info",
]

DEFAULT_SCHEDULE = (1, 2, 3, 4, 6, 8, 11, 15, 20, 27, 36, 46, 57, 70, 85, 100)
MAX_SUBSPACE = 100
_BREAKDOWN_REL = 1e-14


class ConvergenceFailure(RuntimeError):
    """The subspace hit its cap without meeting the requested tolerance."""


class ConvergenceSchedule:
    """Ascending checkpoint dimensions at which the error estimate is evaluated."""

    def __init__(self, indices: Sequence[int] = DEFAULT_SCHEDULE):
        idx = tuple(int(i) for i in indices)
        if not idx or any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 1:
            raise ValueError("schedule must be ascending positive integers")
        self.indices = idx

    def checkpoints(self, cap: int, hint: Optional[int] = None) -> set[int]:
        """Checkpoint set for a subspace capped at `cap`.

        With a hint from the previous timestep, checking starts at the
        schedule index immediately preceding the hint; everything below is
        skipped.  The cap itself is always a checkpoint.
        """
        pts = [i for i in self.indices if i <= cap]
        if hint is not None and hint > 0:
            below = [i for i in pts if i <= hint]
            if below:
                start = below[-1]
                pts = [i for i in pts if i >= start]
        out = set(pts)
        out.add(cap)
        return out


class KrylovDecomposition:
    """Arnoldi factorization A V_M = V_M H_M + h_next v_{M+1} e_M^T."""

    def __init__(self, V: np.ndarray, H: np.ndarray, beta: float, M: int,
                 h_next: float, converged: bool, n: int, checks=None):
        self.V = V
        self.H = H
        self.beta = beta
        self.M = M
        self.h_next = h_next
        self.converged = converged
        self.n = n
        self.checks = checks or []  # (dimension, error estimate) pairs, in order
        self._chains: dict[float, list[np.ndarray]] = {}

    def phi_chain(self, scale: float, K: int) -> list[np.ndarray]:
        """[phi_0(scale H)e_1, ..., phi_K(scale H)e_1], cached per scale."""
        key = float(scale)
        cached = self._chains.get(key)
        if cached is not None and len(cached) > K:
            return cached
        e1 = np.zeros(self.M)
        e1[0] = 1.0
        chain = phi_chain_dense(key * self.H, e1, max(K, 1))
        self._chains[key] = chain
        return chain


def _trivial_decomposition(n: int) -> KrylovDecomposition:
    return KrylovDecomposition(
        V=np.zeros((n, 0)), H=np.zeros((0, 0)), beta=0.0, M=0,
        h_next=0.0, converged=True, n=n)


def build_adaptive(op: LinearOperatorHandle, b: np.ndarray, scale: float,
                   tol: float, hint: Optional[int] = None,
                   schedule: Optional[ConvergenceSchedule] = None) -> KrylovDecomposition:
    """Grow a Krylov subspace for op until phi_1(scale*op) b is resolved to tol."""
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    b = np.asarray(b, dtype=float)
    n = op.dim
    if b.shape != (n,):
        raise ValueError(f"operator dim {n} got vector of shape {b.shape}")
    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        return _trivial_decomposition(n)
    if not math.isfinite(beta):
        raise FloatingPointError("non-finite input vector in Krylov build")

    schedule = schedule or ConvergenceSchedule()
    cap = min(n, MAX_SUBSPACE)
    checkpoints = schedule.checkpoints(cap, hint)
    anorm = op.norm_estimate()
    breakdown_tol = _BREAKDOWN_REL * max(anorm, 1.0)

    V = np.zeros((n, cap + 1))
    H = np.zeros((cap + 1, cap))
    V[:, 0] = b / beta
    checks: list[tuple[int, float]] = []

    M = cap
    h_next = 0.0
    converged = False
    for m in range(1, cap + 1):
        w = op.apply(V[:, m - 1])
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("non-finite operator action in Krylov build")
        # symmetric operators only need the last two projections up front;
        # the reorthogonalization pass below still runs over everything
        lo = max(0, m - 2) if op.symmetric else 0
        for i in range(lo, m):
            hij = float(V[:, i] @ w)
            w -= hij * V[:, i]
            H[i, m - 1] += hij
        for i in range(m):
            c = float(V[:, i] @ w)
            w -= c * V[:, i]
            H[i, m - 1] += c
        h_next = float(np.linalg.norm(w))
        H[m, m - 1] = h_next

        if h_next <= breakdown_tol:
            # invariant subspace: the projected evaluation is exact
            M, converged = m, True
            checks.append((m, 0.0))
            break
        if m in checkpoints:
            e1 = np.zeros(m)
            e1[0] = 1.0
            u = phi_chain_dense(scale * H[:m, :m], e1, 1)[1]
            s = beta * h_next * abs(float(u[m - 1]))
            checks.append((m, s))
            if s <= tol:
                M, converged = m, True
                break
        if m < cap:
            V[:, m] = w / h_next

    return KrylovDecomposition(
        V=V[:, :M], H=np.array(H[:M, :M]), beta=beta, M=M,
        h_next=h_next, converged=converged, n=n, checks=checks)


def phi_action(decomp: KrylovDecomposition, scale: float, k: int) -> np.ndarray:
    """beta * V_M phi_k(scale*H_M) e_1, the projected phi_k(scale*A) b."""
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_PHI_INDEX:
        raise ValueError(f"phi index must be an integer in [0, {MAX_PHI_INDEX}], got {k!r}")
    if decomp.M == 0:
        return np.zeros(decomp.n)
    chain = decomp.phi_chain(scale, k)
    return decomp.beta * (decomp.V @ chain[k])


def phi_action_adaptive(op: LinearOperatorHandle, b: np.ndarray, scale: float, k: int,
                        tol: float, hint: Optional[int] = None
                        ) -> tuple[np.ndarray, KrylovDecomposition]:
    """Build a subspace and evaluate one phi_k action."""
    decomp = build_adaptive(op, b, scale, tol, hint=hint)
    return phi_action(decomp, scale, k), decomp


def psi_action_info(op: LinearOperatorHandle, b: np.ndarray, scale: float,
                    weights: Sequence[float], tol: float, hint: Optional[int] = None
                    ) -> tuple[np.ndarray, KrylovDecomposition]:
    """Psi(scale*A) b = sum_k p_k phi_k(scale*A) b from one subspace build."""
    w = [float(x) for x in weights]
    if len(w) == 0:
        raise ValueError("psi weights must be non-empty")
    b = np.asarray(b, dtype=float)
    if b.shape != (op.dim,):
        raise ValueError(f"operator dim {op.dim} got vector of shape {b.shape}")
    if scale == 0.0:
        # phi_k(0) = 1/k!, no subspace needed
        factor = sum(w[k - 1] / math.factorial(k) for k in range(1, len(w) + 1))
        return factor * b, _trivial_decomposition(op.dim)
    decomp = build_adaptive(op, b, scale, tol, hint=hint)
    if decomp.M == 0:
        return np.zeros(op.dim), decomp
    chain = decomp.phi_chain(scale, len(w))
    combo = w[0] * chain[1]
    for k in range(2, len(w) + 1):
        combo = combo + w[k - 1] * chain[k]
    return decomp.beta * (decomp.V @ combo), decomp


def psi_action(op: LinearOperatorHandle, b: np.ndarray, scale: float,
               weights: Sequence[float], tol: float,
               hint: Optional[int] = None) -> np.ndarray:
    return psi_action_info(op, b, scale, weights, tol, hint=hint)[0]
