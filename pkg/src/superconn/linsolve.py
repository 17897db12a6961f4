"""Sparse exact linear algebra over the Gaussian rationals.

Vectors are dicts from hashable column labels to GaussianRational.  The
Eliminator keeps a fully reduced row basis (no pivot column appears in any
other stored row), so reducing a fresh vector is a single pass.  Solving
uses an augmented column carried through the same elimination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Tuple

from .scalars import GR_ONE, GR_ZERO, GaussianRational, _as_gr

Vec = Dict[Hashable, GaussianRational]

_RHS = ("#rhs#",)


def _default_key(c) -> str:
    return repr(c)


class Eliminator:
    """Incremental reduced row elimination with labeled columns."""

    __slots__ = ("order_key", "pivots")

    def __init__(self, order_key: Optional[Callable] = None):
        self.order_key = order_key or _default_key
        self.pivots: Dict[Hashable, Vec] = {}

    def reduce(self, vec: Vec) -> Vec:
        """Remainder of vec modulo the stored row space."""
        out = {c: v for c, v in vec.items() if v}
        for c in [c for c in out if c in self.pivots]:
            coef = out.pop(c, GR_ZERO)
            if not coef:
                continue
            for d, v in self.pivots[c].items():
                if d == c:
                    continue
                nv = out.get(d, GR_ZERO) - coef * v
                if nv:
                    out[d] = nv
                else:
                    out.pop(d, None)
        return out

    def insert(self, vec: Vec) -> Optional[Hashable]:
        """Add vec to the row space; returns its new pivot column, or None
        if vec was already in the span."""
        red = self.reduce(vec)
        if not red:
            return None
        piv = min(red, key=self.order_key)
        inv = red[piv].inverse()
        row = {c: v * inv for c, v in red.items()}
        for r0 in self.pivots.values():
            coef = r0.get(piv)
            if not coef:
                continue
            for c, v in row.items():
                nv = r0.get(c, GR_ZERO) - coef * v
                if nv:
                    r0[c] = nv
                else:
                    r0.pop(c, None)
        self.pivots[piv] = row
        return piv

    def rank(self) -> int:
        return len(self.pivots)

    def contains(self, vec: Vec) -> bool:
        return not self.reduce(vec)


@dataclass
class SolveReport:
    """Outcome of one linear solve, with ranks for diagnostics."""

    solution: Optional[Vec]
    rank: int
    augmented_rank: int

    @property
    def consistent(self) -> bool:
        return self.rank == self.augmented_rank


def solve_linear_report(equations: Iterable[Tuple[Vec, object]],
                        order_key: Optional[Callable] = None) -> SolveReport:
    """Solve the system {coeffs . x = rhs}.  Free unknowns are set to zero;
    the report keeps coefficient and augmented ranks either way."""
    base = order_key or _default_key

    def key(c):
        if c is _RHS:
            return (1, "")
        return (0, base(c))

    elim = Eliminator(key)
    for coeffs, rhs in equations:
        vec: Vec = {c: v for c, v in coeffs.items() if v}
        r = _as_gr(rhs)
        if r:
            vec[_RHS] = r
        elim.insert(vec)
    aug = elim.rank()
    inconsistent = _RHS in elim.pivots
    rank = aug - 1 if inconsistent else aug
    if inconsistent:
        return SolveReport(None, rank, aug)
    sol: Vec = {}
    for piv, row in elim.pivots.items():
        val = row.get(_RHS)
        if val:
            sol[piv] = val
    return SolveReport(sol, rank, aug)


def solve_linear(equations: Iterable[Tuple[Vec, object]],
                 order_key: Optional[Callable] = None) -> Optional[Vec]:
    return solve_linear_report(equations, order_key).solution


def kernel_basis(equations: Iterable[Vec], columns: List[Hashable],
                 order_key: Optional[Callable] = None) -> List[Vec]:
    """Basis of homogeneous solutions in the listed unknowns, one vector per
    free column, in the order the columns are given."""
    elim = Eliminator(order_key)
    for coeffs in equations:
        elim.insert(dict(coeffs))
    out: List[Vec] = []
    for c in columns:
        if c in elim.pivots:
            continue
        v: Vec = {c: GR_ONE}
        for p, row in elim.pivots.items():
            a = row.get(c)
            if a:
                v[p] = -a
        out.append(v)
    return out


def rank_of(vectors: Iterable[Vec], order_key: Optional[Callable] = None) -> int:
    elim = Eliminator(order_key)
    for v in vectors:
        elim.insert(dict(v))
    return elim.rank()
