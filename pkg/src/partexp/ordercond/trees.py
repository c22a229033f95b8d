"""Bi-colored rooted trees of order <= 3 over four node kinds.

Kinds, in canonical order: N (round, partition 1), L (square, partition 1),
P (round, partition 2), M (square, partition 2).  Square nodes model matrix
multiplications and therefore carry at most one child; round nodes branch
freely.

The universe is enumerated in a fixed order:

* 1-4      bare nodes N, L, P, M;
* 5-20     two-node trees, root x child over all kind pairs;
* 21-40    round roots N then P over the ten unordered child pairs
           NN, NL, NP, NM, LL, LP, LM, PP, PM, MM;
* 41-104   three-node chains root-middle-leaf over all kind triples.

Indices here are 1-based to match that fixed numbering; `index_map` returns
0-based positions into the tuple from `enumerate_trees`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

KINDS = ("N", "L", "P", "M")
ROUND_KINDS = frozenset({"N", "P"})
SQUARE_KINDS = frozenset({"L", "M"})

_KIND_POS = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class Tree:
    kind: str
    children: tuple["Tree", ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _KIND_POS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind in SQUARE_KINDS and len(self.children) > 1:
            raise ValueError("square nodes carry at most one child")

    @property
    def order(self) -> int:
        return 1 + sum(c.order for c in self.children)

    @property
    def has_square(self) -> bool:
        return self.kind in SQUARE_KINDS or any(c.has_square for c in self.children)


def node(kind: str, *children: Tree) -> Tree:
    return Tree(kind, tuple(children))


def _sort_key(t: Tree):
    return (_KIND_POS[t.kind], tuple(_sort_key(c) for c in t.children))


def canon(t: Tree) -> str:
    """Canonical text form; children ordered by kind precedence."""
    if not t.children:
        return t.kind
    kids = sorted(t.children, key=_sort_key)
    return f"{t.kind}({','.join(canon(c) for c in kids)})"


def sigma(t: Tree) -> int:
    """Symmetry factor: product over child multiplicities and child factors."""
    out = 1
    seen: dict[str, int] = {}
    for c in t.children:
        out *= sigma(c)
        key = canon(c)
        seen[key] = seen.get(key, 0) + 1
    for count in seen.values():
        out *= factorial(count)
    return out


def density(t: Tree) -> int:
    """Classical tree density gamma: order times child densities."""
    out = t.order
    for c in t.children:
        out *= density(c)
    return out


def inv_gamma_s(t: Tree) -> Fraction:
    """Split-form order-condition value 1/gamma."""
    return Fraction(1, density(t))


def inv_gamma_w(t: Tree) -> Fraction:
    """W-form order-condition value: zero whenever a square node appears."""
    if t.has_square:
        return Fraction(0)
    return Fraction(1, density(t))


@lru_cache(maxsize=1)
def enumerate_trees() -> tuple[Tree, ...]:
    out: list[Tree] = []
    for k in KINDS:
        out.append(node(k))
    for r in KINDS:
        for c in KINDS:
            out.append(node(r, node(c)))
    pairs = [(a, b) for i, a in enumerate(KINDS) for b in KINDS[i:]]
    for r in ("N", "P"):
        for a, b in pairs:
            out.append(node(r, node(a), node(b)))
    for r in KINDS:
        for m in KINDS:
            for leaf in KINDS:
                out.append(node(r, node(m, node(leaf))))
    assert len(out) == 104
    return tuple(out)


@lru_cache(maxsize=1)
def index_map() -> dict:
    """Canonical form -> 0-based position in `enumerate_trees()`."""
    return {canon(t): i for i, t in enumerate(enumerate_trees())}


def serialize_trees() -> str:
    """One line per tree: index, canonical form, order, sigma, densities."""
    lines = []
    for i, t in enumerate(enumerate_trees(), start=1):
        lines.append(
            f"{i:>3} {canon(t):<12} order={t.order} sigma={sigma(t)}"
            f" 1/gammaS={inv_gamma_s(t)} 1/gammaW={inv_gamma_w(t)}")
    return "\n".join(lines) + "\n"
