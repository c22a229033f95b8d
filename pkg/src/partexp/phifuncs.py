"""Dense kernels for the phi and psi functions of exponential integrators.

phi_0(z) = exp(z) and, for k >= 1,

    phi_k(z) = int_0^1 exp((1-theta) z) theta^(k-1) / (k-1)! dtheta

with the equivalent series  phi_k(z) = sum_{i>=0} z^i / (k+i)!  and the
recurrence  phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.

Psi functions are method-specific linear combinations

    Psi_j(z) = sum_{k=1}^{j} p_{j,k} phi_k(z).

Everything in this module is dense and small-matrix: these kernels are called
on Krylov-projected Hessenberg matrices and double as test oracles.  Large
operators never come through here directly.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

__all__ = [
    "MAX_PHI_INDEX",
    "phi_scalar",
    "expm_dense",
    "phi_chain_dense",
    "psi_apply_dense",
]

# Highest phi index supported anywhere in the package.
MAX_PHI_INDEX = 12

# Below this |z| a 25-term series is exact to double precision and the
# exp-seeded recurrence is catastrophically cancelling.
_SERIES_SWITCH = 0.5
_SERIES_TERMS_FIXED = 25
_SERIES_TERMS_CAP = 150

# Pade-13 coefficients for expm (numerator b[13]..b[0] of the [13/13]
# diagonal approximant) and the scaling threshold theta_13.
_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_PADE13_THETA = 5.371920351148152


def _phi_series(k: int, z: complex, nterms: int, adaptive: bool = False):
    """Truncated series sum_{i=0}^{nterms-1} z^i / (k+i)!."""
    term = 1.0 / math.factorial(k)
    acc = term
    for i in range(1, nterms):
        term = term * z / (k + i)
        acc += term
        if adaptive and abs(term) < 1e-18 * abs(acc):
            break
    return acc


def phi_scalar(k: int, z):
    """Evaluate phi_k(z) for a real or complex scalar z, k <= 12.

    For |z| < 0.5 a fixed 25-term series is used; the exp-seeded recurrence
    divides by z at every index and would lose all accuracy there.  The
    recurrence takes over once |z| >= k + 2, where each division damps
    rounding instead of amplifying it.  In between (moderate |z|, higher k)
    an adaptive-length series bridges the gap: the recurrence would compound
    a factor 1/|z| per index and miss the 1e-13 target for k >= 4.
    """
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_PHI_INDEX:
        raise ValueError(f"phi index must be an integer in [0, {MAX_PHI_INDEX}], got {k!r}")
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise ValueError(f"phi argument must be finite, got {z!r}")
    is_real = not isinstance(z, complex) and zc.imag == 0.0

    az = abs(zc)
    if k == 0:
        out = np.exp(zc)
    elif az < _SERIES_SWITCH:
        out = _phi_series(k, zc, _SERIES_TERMS_FIXED)
    elif az < k + 2:
        out = _phi_series(k, zc, _SERIES_TERMS_CAP, adaptive=True)
    else:
        out = np.exp(zc)
        for j in range(k):
            out = (out - 1.0 / math.factorial(j)) / zc
    if is_real:
        return float(out.real) if isinstance(out, complex) else float(np.real(out))
    return complex(out)


def expm_dense(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by [13/13] Pade with norm-based scaling and squaring."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expm_dense needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("expm_dense needs finite entries")
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    squarings = 0
    if norm > _PADE13_THETA:
        squarings = int(math.ceil(math.log2(norm / _PADE13_THETA)))
        A = A / (2.0**squarings)

    b = _PADE13_B
    ident = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        E = E @ E
        if not np.all(np.isfinite(E)):
            raise FloatingPointError(
                f"overflow while squaring the exponential (input 1-norm {norm:.3e})")
    return E


def phi_chain_dense(A: np.ndarray, b: np.ndarray, K: int) -> list[np.ndarray]:
    """Return [phi_0(A) b, phi_1(A) b, ..., phi_K(A) b] from one exponential.

    Builds the augmented matrix

        M = [[A, b e_1^T], [0, N]]

    with b in the first appended column and N the K x K nilpotent upshift,
    so that exp(M)[0:n, n+k-1] = phi_k(A) b for k = 1..K while the top-left
    block is exp(A) itself.
    """
    if not isinstance(K, (int, np.integer)) or K < 0 or K > MAX_PHI_INDEX:
        raise ValueError(f"chain length K must be an integer in [0, {MAX_PHI_INDEX}], got {K!r}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"phi_chain_dense needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"vector length {b.shape[0]} does not match matrix dimension {n}")

    if K == 0:
        return [expm_dense(A) @ b]

    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        z = np.zeros(n)
        return [z.copy() for _ in range(K + 1)]

    M = np.zeros((n + K, n + K))
    M[:n, :n] = A
    M[:n, n] = b / beta
    for j in range(K - 1):
        M[n + j, n + j + 1] = 1.0
    E = expm_dense(M)
    out = [E[:n, :n] @ b]
    for k in range(1, K + 1):
        out.append(beta * E[:n, n + k - 1])
    return out


def psi_apply_dense(weights: Sequence[float], A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Evaluate Psi(A) b = sum_k p_k phi_k(A) b for weights p = (p_1, ..., p_j)."""
    w = [float(x) for x in weights]
    if len(w) == 0:
        raise ValueError("psi weights must be non-empty")
    chain = phi_chain_dense(A, b, len(w))
    out = w[0] * chain[1]
    for k in range(2, len(w) + 1):
        out = out + w[k - 1] * chain[k]
    return out
