"""Bigraded differential forms with exact scalar coefficients.

A form is a finite sum of terms f * dz^I wedge dzbar^J with I, J strictly
increasing index tuples.  The canonical generator order puts all dz factors
(ascending) before all dzbar factors (ascending); every constructor and
operation re-sorts into that order, tracking the sign of the permutation.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Tuple

from .scalars import (GR_ONE, GaussianRational, RingMismatchError, RingSpec,
                      Scalar, _as_gr)

IndexTuple = Tuple[int, ...]


def _merge(u: IndexTuple, v: IndexTuple):
    """Merge two strictly increasing tuples of odd generators.

    Returns (sign, merged) where sign is the parity of the shuffle, or
    None if an index repeats (the product is zero)."""
    if not u:
        return 1, v
    if not v:
        return 1, u
    sign = 1
    out = []
    i = j = 0
    while i < len(u) and j < len(v):
        if u[i] == v[j]:
            return None
        if u[i] < v[j]:
            out.append(u[i])
            i += 1
        else:
            # v[j] jumps over the remaining len(u)-i generators of u
            if (len(u) - i) % 2:
                sign = -sign
            out.append(v[j])
            j += 1
    out.extend(u[i:])
    out.extend(v[j:])
    return sign, tuple(out)


def _normalize_indices(ring: RingSpec, idx: Iterable[int]) -> Optional[Tuple[int, IndexTuple]]:
    """Sort a raw generator tuple, returning (sign, sorted) or None if repeated."""
    idx = tuple(idx)
    for i in idx:
        if not 1 <= i <= ring.nvars:
            raise ValueError(f"generator index {i} out of range 1..{ring.nvars}")
    sign = 1
    lst = list(idx)
    # insertion sort, counting transpositions; fine at this arity
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(lst)):
        if lst[i - 1] == lst[i]:
            return None
    return sign, tuple(lst)


class Form:
    """Finite sum of (p,q)-graded terms; possibly of mixed degree."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingSpec, terms: dict):
        self.ring = ring
        self.terms = {k: s for k, s in terms.items() if s}

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(ring: RingSpec) -> Form:
        return Form(ring, {})

    @staticmethod
    def from_scalar(s: Scalar) -> Form:
        return Form(s.ring, {((), ()): s} if s else {})

    @staticmethod
    def const(ring: RingSpec, c) -> Form:
        return Form.from_scalar(Scalar.const(ring, c))

    @staticmethod
    def term(s: Scalar, dz: Iterable[int] = (), dzbar: Iterable[int] = ()) -> Form:
        """s * dz^I wedge dzbar^J, with I, J given in any order."""
        ni = _normalize_indices(s.ring, dz)
        nj = _normalize_indices(s.ring, dzbar)
        if ni is None or nj is None or not s:
            return Form(s.ring, {})
        si, I = ni
        sj, J = nj
        return Form(s.ring, {(I, J): s.scale(si * sj)})

    @staticmethod
    def dz(ring: RingSpec, index: int = 1) -> Form:
        return Form.term(Scalar.one(ring), (index,), ())

    @staticmethod
    def dzbar(ring: RingSpec, index: int = 1) -> Form:
        return Form.term(Scalar.one(ring), (), (index,))

    # -- additive structure ----------------------------------------------

    def __add__(self, other: Form) -> Form:
        if self.ring != other.ring:
            raise RingMismatchError(f"{self.ring} vs {other.ring}")
        if not self.terms:
            return other
        if not other.terms:
            return self
        terms = dict(self.terms)
        for k, s in other.terms.items():
            acc = terms.get(k)
            tot = s if acc is None else acc + s
            if tot:
                terms[k] = tot
            elif acc is not None:
                del terms[k]
        return Form(self.ring, terms)

    def __sub__(self, other: Form) -> Form:
        return self + (-other)

    def __neg__(self) -> Form:
        return Form(self.ring, {k: -s for k, s in self.terms.items()})

    def scale(self, c) -> Form:
        c = _as_gr(c)
        if not c:
            return Form(self.ring, {})
        return Form(self.ring, {k: s.scale(c) for k, s in self.terms.items()})

    # -- wedge ------------------------------------------------------------

    def wedge(self, other) -> Form:
        """Supercommutative product; signs follow total generator degree."""
        if isinstance(other, Scalar):
            other = Form.from_scalar(other)
        elif isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if self.ring != other.ring:
            raise RingMismatchError(f"{self.ring} vs {other.ring}")
        terms: dict = {}
        for (i1, j1), s1 in self.terms.items():
            for (i2, j2), s2 in other.terms.items():
                mi = _merge(i1, i2)
                if mi is None:
                    continue
                mj = _merge(j1, j2)
                if mj is None:
                    continue
                # move the dz block of the second factor past the dzbar
                # block of the first
                sign = mi[0] * mj[0]
                if (len(i2) * len(j1)) % 2:
                    sign = -sign
                s = s1 * s2
                if sign < 0:
                    s = -s
                if not s:
                    continue
                key = (mi[1], mj[1])
                acc = terms.get(key)
                tot = s if acc is None else acc + s
                if tot:
                    terms[key] = tot
                elif acc is not None:
                    del terms[key]
        return Form(self.ring, terms)

    def __mul__(self, other) -> Form:
        return self.wedge(other)

    def __rmul__(self, other) -> Form:
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if isinstance(other, Scalar):
            return Form.from_scalar(other).wedge(self)
        return NotImplemented

    # -- differentials ----------------------------------------------------

    def partial(self) -> Form:
        """Holomorphic Dolbeault differential: sum over i of
        dz^i wedge d/dz_i applied to coefficients."""
        out = Form.zero(self.ring)
        n = self.ring.nvars
        for (I, J), s in self.terms.items():
            for i in range(1, n + 1):
                ds = s.wirtinger("z", i)
                if not ds:
                    continue
                m = _merge((i,), I)
                if m is None:
                    continue
                sign, nI = m
                out = out + Form(self.ring, {(nI, J): ds.scale(sign)})
        return out

    def dbar(self) -> Form:
        """Antiholomorphic Dolbeault differential."""
        out = Form.zero(self.ring)
        n = self.ring.nvars
        for (I, J), s in self.terms.items():
            for i in range(1, n + 1):
                ds = s.wirtinger("zbar", i)
                if not ds:
                    continue
                m = _merge((i,), J)
                if m is None:
                    continue
                sign, nJ = m
                if len(I) % 2:
                    sign = -sign  # dzbar^i passes the dz block first
                out = out + Form(self.ring, {(I, nJ): ds.scale(sign)})
        return out

    def d(self) -> Form:
        return self.partial() + self.dbar()

    def conj(self) -> Form:
        """Conjugation: dz^I dzbar^J goes to dzbar^I dz^J, reordered into
        canonical position; intertwines the two differentials."""
        terms = {}
        for (I, J), s in self.terms.items():
            sign = -1 if (len(I) * len(J)) % 2 else 1
            cs = s.conj().scale(sign)
            key = (J, I)
            acc = terms.get(key)
            terms[key] = cs if acc is None else acc + cs
        return Form(self.ring, {k: s for k, s in terms.items() if s})

    # -- grading ----------------------------------------------------------

    def component(self, p: int, q: int) -> Form:
        return Form(self.ring,
                    {k: s for k, s in self.terms.items()
                     if len(k[0]) == p and len(k[1]) == q})

    def bidegrees(self) -> list:
        return sorted({(len(I), len(J)) for (I, J) in self.terms})

    def homogeneous_parts(self) -> list:
        """Split into (p, q, Form) triples, sorted by bidegree."""
        buckets: dict = {}
        for (I, J), s in self.terms.items():
            buckets.setdefault((len(I), len(J)), {})[(I, J)] = s
        return [(p, q, Form(self.ring, t)) for (p, q), t in sorted(buckets.items())]

    def is_homogeneous(self) -> bool:
        return len(self.bidegrees()) <= 1

    def total_degree_parity(self) -> int:
        """Parity of |I|+|J|; requires all terms to agree."""
        pars = {(len(I) + len(J)) % 2 for (I, J) in self.terms}
        if len(pars) > 1:
            raise ValueError("mixed-parity form")
        return pars.pop() if pars else 0

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.ring, frozenset((k, hash(s)) for k, s in self.terms.items())))

    def eps_part(self) -> Form:
        base = self.ring.undualized()
        return Form(base, {k: s.eps_part() for k, s in self.terms.items()})

    def const_part(self) -> Form:
        base = self.ring.undualized()
        return Form(base, {k: s.const_part() for k, s in self.terms.items()})

    def lift(self, ring: RingSpec) -> Form:
        if ring == self.ring:
            return self
        return Form(ring, {k: s.lift(ring) for k, s in self.terms.items()})

    def map_scalars(self, fn) -> Form:
        return Form(self.ring, {k: fn(s) for k, s in self.terms.items()})

    def poly_degree(self) -> int:
        if not self.terms:
            return 0
        return max(s.poly_degree() for s in self.terms.values())

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0]))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for (I, J), s in self.sorted_terms():
            gens = [f"dz{i}" for i in I] + [f"dw{j}" for j in J]
            head = "^".join(gens)
            bits.append(f"({s})" + ("*" + head if head else ""))
        return " + ".join(bits)


def wedge(a: Form, b: Form) -> Form:
    return a.wedge(b)
