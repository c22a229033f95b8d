"""Exact-rational series arithmetic over the fixed tree universe.

A series holds one coefficient per tree plus a coefficient for the empty
tree (the identity contribution).  Three operations build everything else:

* `compose_function(kind, a)` -- series of h * f(B(a)) for the round node
  kind standing for f: coefficient on a tree is the product of `a` over the
  root's children when the root kind matches, else zero.
* `matrix_apply(kind, a, scale)` -- series of scale * h * W * B(a) for the
  square node kind standing for W: a bare node picks up the empty
  coefficient, a single-child root picks up the child coefficient.
* `matrix_function(kind, weights, scale, a)` -- series of
  sum_i c_i (scale h W)^i B(a); the i = 0 term passes `a` through whole.

Each operation consumes exactly one power of h per node it adds, so h never
appears explicitly.  All coefficients are `fractions.Fraction`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

from .trees import ROUND_KINDS, SQUARE_KINDS, canon, enumerate_trees, index_map, inv_gamma_s, inv_gamma_w

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _structure():
    """Per-tree lookup data: (kind, child positions) with 0-based positions."""
    trees = enumerate_trees()
    idx = index_map()
    table = []
    for t in trees:
        child_pos = tuple(idx[canon(c)] for c in t.children)
        table.append((t.kind, child_pos))
    return tuple(table)


_STRUCT = None


def _struct():
    global _STRUCT
    if _STRUCT is None:
        _STRUCT = _structure()
    return _STRUCT


@dataclass
class BSeries:
    empty: Fraction
    coeffs: list

    def copy(self) -> "BSeries":
        return BSeries(self.empty, list(self.coeffs))

    def __add__(self, other: "BSeries") -> "BSeries":
        return BSeries(self.empty + other.empty,
                       [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "BSeries") -> "BSeries":
        return BSeries(self.empty - other.empty,
                       [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def scaled(self, c) -> "BSeries":
        c = Fraction(c)
        return BSeries(self.empty * c, [x * c for x in self.coeffs])

    def accumulate(self, other: "BSeries", weight=_ONE) -> None:
        w = Fraction(weight)
        if w == 0:
            return
        self.empty += other.empty * w
        self.coeffs = [a + b * w for a, b in zip(self.coeffs, other.coeffs)]


def zero_series() -> BSeries:
    return BSeries(_ZERO, [_ZERO] * len(enumerate_trees()))


def yn_series() -> BSeries:
    return BSeries(_ONE, [_ZERO] * len(enumerate_trees()))


def exact_series(kind: str) -> BSeries:
    """Order-condition target: 'W' zeroes square-bearing trees, 'S' keeps all."""
    trees = enumerate_trees()
    if kind == "W":
        coeffs = [inv_gamma_w(t) for t in trees]
    elif kind == "S":
        coeffs = [inv_gamma_s(t) for t in trees]
    else:
        raise ValueError(f"kind must be 'W' or 'S', got {kind!r}")
    return BSeries(_ONE, coeffs)


def compose_function(kind: str, a: BSeries) -> BSeries:
    """Series of h f(B(a)) where `kind` is the round node standing for f."""
    if kind not in ROUND_KINDS:
        raise ValueError(f"compose_function needs a round kind, got {kind!r}")
    if a.empty != 1:
        raise ValueError("composition requires a series expanded around y_n"
                         " (empty coefficient 1)")
    out = zero_series()
    for pos, (root, child_pos) in enumerate(_struct()):
        if root != kind:
            continue
        val = _ONE
        for cp in child_pos:
            val *= a.coeffs[cp]
            if val == 0:
                break
        out.coeffs[pos] = val
    return out


def matrix_apply(kind: str, a: BSeries, scale=_ONE) -> BSeries:
    """Series of scale * h W B(a) where `kind` is the square node for W."""
    if kind not in SQUARE_KINDS:
        raise ValueError(f"matrix_apply needs a square kind, got {kind!r}")
    scale = Fraction(scale)
    out = zero_series()
    if scale == 0:
        return out
    for pos, (root, child_pos) in enumerate(_struct()):
        if root != kind:
            continue
        if not child_pos:
            out.coeffs[pos] = scale * a.empty
        elif len(child_pos) == 1:
            out.coeffs[pos] = scale * a.coeffs[child_pos[0]]
    return out


def matrix_function(kind: str, weights: Sequence, scale, a: BSeries) -> BSeries:
    """Series of sum_i c_i (scale h W)^i applied to B(a).

    `weights` lists c_0, c_1, ... ; powers beyond the tree depth vanish, so
    only the first four matter at this order.
    """
    if not weights:
        raise ValueError("matrix_function needs at least the constant weight")
    out = a.scaled(weights[0])
    cur = a
    for c in weights[1:4]:
        cur = matrix_apply(kind, cur, scale)
        out.accumulate(cur, c)
    return out


def phi_weights(k: int, terms: int = 4) -> tuple:
    """Taylor weights of phi_k: c_i = 1/(k+i)!."""
    if k < 0:
        raise ValueError("phi index must be nonnegative")
    return tuple(Fraction(1, factorial(k + i)) for i in range(terms))


def psi_weights(p_row: Sequence, terms: int = 4) -> tuple:
    """Taylor weights of Psi = sum_k p_row[k-1] phi_k (k starts at 1)."""
    out = []
    for i in range(terms):
        c = Fraction(0)
        for k, p in enumerate(p_row, start=1):
            if p != 0:
                c += Fraction(p) / factorial(k + i)
        out.append(c)
    return tuple(out)
