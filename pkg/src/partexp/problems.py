"""Benchmark initial value problems with two-way RHS splittings.

Each constructor returns a PartitionedIvp whose partition functions sum to
the monolithic right-hand side, whose W handles carry the per-partition
Jacobian information the steppers consume, and whose `split` field carries
exact (L, N) pairs for the split steppers.  All randomness is drawn from a
named generator with an explicit seed so runs are reproducible.

The four problems:

- lorenz96: the cyclic shell model on N grid points; partition 1 is a
  seeded random linear map A y, partition 2 the remainder, and both W
  handles are diagonal Jacobian approximations.
- semilinear_parabolic: a 1-D heat equation with a bounded nonlinearity
  and a forcing chosen so the solution is x(1-x)e^t; time dependence is
  removed by augmenting the state with t.
- allen_cahn: 2-D phase separation with periodic diffusion against a
  cubic reaction; the reaction stiffness grows with gamma.
- gray_scott: a reversible three-species reaction-diffusion system whose
  diffusion Jacobian is block diagonal by species and whose reaction
  Jacobian is block diagonal after regrouping by grid point.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .integrators import PartitionedIvp
from .operators import (
    BlockDiagonalOperator,
    CallableOperator,
    DenseOperator,
    DiagonalOperator,
    IndexPermutation,
    PermutedOperator,
    zero_operator,
)

__all__ = [
    "lorenz96",
    "lorenz96_rhs",
    "lorenz96_jacobian",
    "semilinear_parabolic",
    "semilinear_exact",
    "allen_cahn",
    "gray_scott",
    "PROBLEM_NAMES",
    "PRESET_NAMES",
    "make_problem",
]

DEFAULT_SEED = 42


# ---------------------------------------------------------------------------
# Lorenz-96


def lorenz96_rhs(y: np.ndarray, forcing: float) -> np.ndarray:
    """Cyclic advection-damping-forcing right-hand side."""
    return (
        -np.roll(y, 1) * (np.roll(y, 2) - np.roll(y, -1)) - y + forcing
    )


def lorenz96_jacobian(y: np.ndarray) -> np.ndarray:
    """Dense Jacobian of lorenz96_rhs at y (cyclic indexing)."""
    n = y.shape[0]
    J = np.zeros((n, n))
    for j in range(n):
        J[j, (j - 1) % n] += -(y[(j - 2) % n] - y[(j + 1) % n])
        J[j, (j - 2) % n] += -y[(j - 1) % n]
        J[j, (j + 1) % n] += y[(j - 1) % n]
        J[j, j] += -1.0
    return J


def lorenz96(N: int = 40, forcing: float = 8.0,
             seed: int = DEFAULT_SEED) -> PartitionedIvp:
    """Lorenz-96 split into a random linear map and the remainder.

    Partition 1 is A y for a seeded random matrix A with entries uniform
    on [-1, 1]; partition 2 is the full RHS minus A y.  W handles are the
    diagonals of the corresponding Jacobian parts.  The initial state is
    a seeded uniform [0, 1) vector advanced over [0, 0.3] by a tight
    explicit reference solve, and the integration window is [0, 0.3].
    """
    if N < 4:
        raise ValueError(f"need at least 4 components, got {N}")
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(N, N))
    raw = rng.uniform(0.0, 1.0, size=N)

    def full(y):
        return lorenz96_rhs(y, forcing)

    spin = solve_ivp(
        lambda t, y: full(y), (0.0, 0.3), raw,
        method="DOP853", rtol=1e-12, atol=1e-12)
    if not spin.success:
        raise RuntimeError(f"initial-state spin-up failed: {spin.message}")
    y0 = spin.y[:, -1]

    def f1(y):
        return A @ y

    def f2(y):
        return full(y) - A @ y

    # diag(J) is -1 for every component once N >= 4 (the cyclic neighbor
    # offsets never wrap onto the diagonal), so both approximations are
    # constant in y.
    W1 = DiagonalOperator(np.diag(A))
    W2 = DiagonalOperator(-np.ones(N) - np.diag(A))

    def N2(y):
        return f2(y)

    return PartitionedIvp(
        y0=y0, t0=0.0, tf=0.3,
        f=(f1, f2), W=(W1, W2),
        split=((DenseOperator(A), lambda y: np.zeros(N)),
               (zero_operator(N), N2)),
        name="lorenz96",
        full_jacobian=lorenz96_jacobian,
    )


# ---------------------------------------------------------------------------
# 1-D semilinear parabolic problem (augmented autonomous form)


def _semilinear_grid(n: int) -> tuple[np.ndarray, float]:
    dx = 1.0 / (n + 1)
    x = dx * np.arange(1, n + 1)
    return x, dx


def semilinear_exact(n: int, t: float) -> np.ndarray:
    """Augmented state [x(1-x)e^t; t] on the n-point interior grid."""
    x, _ = _semilinear_grid(n)
    return np.append(x * (1.0 - x) * math.exp(t), t)


def semilinear_parabolic(n: int = 500) -> PartitionedIvp:
    """Heat equation with bounded nonlinearity and manufactured forcing.

    The forcing is chosen so the exact PDE solution is x(1-x)e^t under
    homogeneous Dirichlet conditions.  The state is augmented with t so
    the system is autonomous: partition 1 is the (linear) diffusion of
    the y part, partition 2 the nonlinearity, forcing, and clock.
    """
    if n < 3:
        raise ValueError(f"need at least 3 grid points, got {n}")
    x, dx = _semilinear_grid(n)
    inv_dx2 = 1.0 / (dx * dx)

    def lap(v):
        out = np.empty(n)
        out[0] = (-2.0 * v[0] + v[1]) * inv_dx2
        out[-1] = (v[-2] - 2.0 * v[-1]) * inv_dx2
        out[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) * inv_dx2
        return out

    def forcing(t):
        S = x * (1.0 - x) * math.exp(t)
        return S + 2.0 * math.exp(t) - 1.0 / (1.0 + S * S)

    def forcing_t(t):
        S = x * (1.0 - x) * math.exp(t)
        return S + 2.0 * math.exp(t) + 2.0 * S * S / (1.0 + S * S) ** 2

    def f1(ybar):
        return np.append(lap(ybar[:n]), 0.0)

    def f2(ybar):
        y, t = ybar[:n], ybar[n]
        return np.append(1.0 / (1.0 + y * y) + forcing(t), 1.0)

    W1 = CallableOperator(
        n + 1,
        lambda v: np.append(lap(v[:n]), 0.0),
        norm_hint=4.0 * inv_dx2,
        symmetric=True,
    )

    def W2(ybar):
        y, t = ybar[:n], ybar[n]
        d = -2.0 * y / (1.0 + y * y) ** 2
        c = forcing_t(t)

        def act(v):
            return np.append(d * v[:n] + c * v[n], 0.0)

        return CallableOperator(
            n + 1, act,
            norm_hint=max(float(np.max(np.abs(d))), float(np.sum(np.abs(c)))),
        )

    def full_jacobian(ybar):
        y, t = ybar[:n], ybar[n]
        J = np.zeros((n + 1, n + 1))
        idx = np.arange(n)
        J[idx, idx] = -2.0 * inv_dx2 - 2.0 * y / (1.0 + y * y) ** 2
        J[idx[:-1], idx[:-1] + 1] = inv_dx2
        J[idx[1:], idx[1:] - 1] = inv_dx2
        J[:n, n] = forcing_t(t)
        return J

    y0 = semilinear_exact(n, 0.0)
    return PartitionedIvp(
        y0=y0, t0=0.0, tf=1.0,
        f=(f1, f2), W=(W1, W2),
        split=((W1, lambda y: np.zeros(n + 1)),
               (zero_operator(n + 1), f2)),
        name="semilinear",
        full_jacobian=full_jacobian,
    )


# ---------------------------------------------------------------------------
# 2-D Allen-Cahn


def _periodic_laplacian(nx: int, dx: float):
    inv_dx2 = 1.0 / (dx * dx)

    def lap(flat):
        u = flat.reshape(nx, nx)
        out = (
            np.roll(u, 1, axis=0) + np.roll(u, -1, axis=0)
            + np.roll(u, 1, axis=1) + np.roll(u, -1, axis=1)
            - 4.0 * u
        ) * inv_dx2
        return out.ravel()

    return lap, inv_dx2


def allen_cahn(nx: int = 64, alpha: float = 1.0,
               gamma: float = 10.0) -> PartitionedIvp:
    """Phase separation: periodic diffusion against a cubic reaction."""
    if nx < 8:
        raise ValueError(f"need at least an 8x8 grid, got {nx}")
    dx = 1.0 / nx
    lap, inv_dx2 = _periodic_laplacian(nx, dx)
    n = nx * nx

    coord = dx * np.arange(nx)
    X, Y = np.meshgrid(coord, coord, indexing="ij")
    u0 = 0.4 + 0.1 * (X + Y) + 0.1 * np.sin(10.0 * X) * np.sin(20.0 * Y)

    def f1(u):
        return alpha * lap(u)

    def f2(u):
        return gamma * (u - u ** 3)

    W1 = CallableOperator(
        n, lambda v: alpha * lap(v),
        norm_hint=8.0 * alpha * inv_dx2, symmetric=True)

    def W2(u):
        return DiagonalOperator(gamma * (1.0 - 3.0 * u * u))

    return PartitionedIvp(
        y0=u0.ravel(), t0=0.0, tf=0.5,
        f=(f1, f2), W=(W1, W2),
        split=((W1, lambda y: np.zeros(n)),
               (zero_operator(n), f2)),
        name="allen-cahn",
    )


# ---------------------------------------------------------------------------
# Reversible Gray-Scott


def gray_scott(nx: int = 50, *, D_U: float = 2.0, D_V: float = 1.0,
               D_P: float = 0.1, k1: float = 1.0, k2: float = 0.055,
               km1: float = 0.001, km2: float = 0.001, flow: float = 0.028,
               seed: int = DEFAULT_SEED) -> PartitionedIvp:
    """Three-species reversible Gray-Scott on a periodic unit square.

    The state is [U; V; P] grouped by species.  Partition 1 is diffusion
    with a per-species block-diagonal Jacobian; partition 2 is the local
    reaction, whose Jacobian is exposed in its point-grouped form: an
    index permutation wrapped around a block-diagonal operator with one
    3x3 block per grid point.
    """
    if nx < 8:
        raise ValueError(f"need at least an 8x8 grid, got {nx}")
    dx = 1.0 / nx
    lap, inv_dx2 = _periodic_laplacian(nx, dx)
    n = nx * nx
    diff = (D_U, D_V, D_P)

    def f1(y):
        return np.concatenate([
            diff[s] * lap(y[s * n:(s + 1) * n]) for s in range(3)
        ])

    W1 = BlockDiagonalOperator([
        CallableOperator(
            n,
            (lambda d: (lambda v: d * lap(v)))(d),
            norm_hint=8.0 * d * inv_dx2,
            symmetric=True,
        )
        for d in diff
    ])

    def reaction(y):
        U, V, P = y[:n], y[n:2 * n], y[2 * n:]
        rU = -k1 * U * V * V + flow * (1.0 - U) + km1 * V ** 3
        rV = k1 * U * V * V - (flow + k2) * V - km1 * V ** 3 + km2 * P
        rP = -km2 * P - flow * P
        return np.concatenate([rU, rV, rP])

    # point-major position of species-major index s*n + i is 3*i + s
    fwd = np.empty(3 * n, dtype=np.intp)
    for s in range(3):
        fwd[s * n:(s + 1) * n] = 3 * np.arange(n) + s
    perm = IndexPermutation(fwd)

    def W2(y):
        U, V = y[:n], y[n:2 * n]
        blocks = np.zeros((n, 3, 3))
        blocks[:, 0, 0] = -k1 * V * V - flow
        blocks[:, 0, 1] = -2.0 * k1 * U * V + 3.0 * km1 * V * V
        blocks[:, 1, 0] = k1 * V * V
        blocks[:, 1, 1] = 2.0 * k1 * U * V - (flow + k2) - 3.0 * km1 * V * V
        blocks[:, 1, 2] = km2
        blocks[:, 2, 2] = -km2 - flow
        inner = BlockDiagonalOperator([DenseOperator(B) for B in blocks])
        return PermutedOperator(inner, perm)

    rng = np.random.default_rng(seed)
    U0 = np.ones((nx, nx))
    V0 = np.zeros((nx, nx))
    P0 = np.zeros((nx, nx))
    lo, hi = (3 * nx) // 8, (5 * nx) // 8
    shape = (hi - lo, hi - lo)
    U0[lo:hi, lo:hi] = 0.5 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0, shape))
    V0[lo:hi, lo:hi] = 0.25 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0, shape))

    y0 = np.concatenate([U0.ravel(), V0.ravel(), P0.ravel()])
    return PartitionedIvp(
        y0=y0, t0=0.0, tf=5.0,
        f=(f1, reaction), W=(W1, W2),
        split=((W1, lambda y: np.zeros(3 * n)),
               (zero_operator(3 * n), reaction)),
        name="gray-scott",
    )


# ---------------------------------------------------------------------------
# Catalog


PROBLEM_NAMES = ("lorenz96", "semilinear", "allen-cahn", "gray-scott")
PRESET_NAMES = ("allen-cahn-I", "allen-cahn-II", "allen-cahn-III")

_AC_GAMMAS = {"allen-cahn-I": 10.0, "allen-cahn-II": 100.0,
              "allen-cahn-III": 1000.0}


def make_problem(name: str, *, paper_scale: bool = False,
                 seed: int = DEFAULT_SEED, **overrides) -> PartitionedIvp:
    """Build a catalog problem by name at test size or full size."""
    if name == "lorenz96":
        return lorenz96(seed=seed, **overrides)
    if name == "semilinear":
        overrides.setdefault("n", 500)
        return semilinear_parabolic(**overrides)
    if name == "allen-cahn":
        overrides.setdefault("nx", 150 if paper_scale else 64)
        return allen_cahn(**overrides)
    if name in _AC_GAMMAS:
        overrides.setdefault("nx", 300 if paper_scale else 64)
        overrides.setdefault("gamma", _AC_GAMMAS[name])
        return allen_cahn(**overrides)
    if name == "gray-scott":
        overrides.setdefault("nx", 100 if paper_scale else 50)
        return gray_scott(seed=seed, **overrides)
    raise KeyError(name)
