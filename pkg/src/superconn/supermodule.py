"""Graded bundles, form-valued sections, and coefficient-linear operators.

An operator is stored as a finite sum of homogeneous blocks.  A block of
tridegree (p, q, r) maps degree-j basis sections to (p,q)-form combinations
of degree-(j+r) basis sections, encoded per source degree as a matrix of
forms.  The action on a general section picks up the Koszul sign
(-1)^{(p+q+r) * |omega|} when the operator moves past a coefficient form
omega; composition and the supertrace below are consistent with that rule
(enforced by the property tests, not rederived here).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .forms import Form
from .scalars import RingMismatchError, RingSpec, Scalar


class GradingError(ValueError):
    """Bundle shapes or degrees do not line up."""


class GradedBundle:
    """Finitely supported map from integer degree to rank."""

    __slots__ = ("ranks",)

    def __init__(self, ranks: Dict[int, int]):
        for j, r in ranks.items():
            if r < 1:
                raise GradingError(f"rank at degree {j} must be >= 1, got {r}")
        self.ranks = dict(sorted(ranks.items()))

    def degrees(self) -> List[int]:
        return list(self.ranks)

    def rank(self, j: int) -> int:
        return self.ranks.get(j, 0)

    def shift(self, k: int) -> GradedBundle:
        """Degree-j data moves to degree j - k."""
        return GradedBundle({j - k: r for j, r in self.ranks.items()})

    def super_rank(self) -> int:
        return sum(r if j % 2 == 0 else -r for j, r in self.ranks.items())

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedBundle):
            return NotImplemented
        return self.ranks == other.ranks

    def __hash__(self) -> int:
        return hash(tuple(self.ranks.items()))

    def __repr__(self) -> str:
        return f"GradedBundle({self.ranks})"


class Section:
    """Form-valued section: one column vector of forms per degree."""

    __slots__ = ("ring", "bundle", "comps")

    def __init__(self, ring: RingSpec, bundle: GradedBundle, comps: Dict[int, tuple]):
        self.ring = ring
        self.bundle = bundle
        clean = {}
        for j, vec in comps.items():
            if bundle.rank(j) != len(vec):
                raise GradingError(f"degree {j}: expected {bundle.rank(j)} entries")
            if any(v for v in vec):
                clean[j] = tuple(vec)
        self.comps = clean

    @staticmethod
    def zero(ring: RingSpec, bundle: GradedBundle) -> Section:
        return Section(ring, bundle, {})

    @staticmethod
    def basis(ring: RingSpec, bundle: GradedBundle, j: int, idx: int) -> Section:
        vec = [Form.zero(ring)] * bundle.rank(j)
        vec[idx] = Form.const(ring, 1)
        return Section(ring, bundle, {j: tuple(vec)})

    def vector(self, j: int) -> tuple:
        got = self.comps.get(j)
        if got is None:
            z = Form.zero(self.ring)
            return tuple([z] * self.bundle.rank(j))
        return got

    def __add__(self, other: Section) -> Section:
        if self.bundle != other.bundle or self.ring != other.ring:
            raise GradingError("section mismatch")
        comps = {}
        for j in set(self.comps) | set(other.comps):
            a, b = self.vector(j), other.vector(j)
            comps[j] = tuple(x + y for x, y in zip(a, b))
        return Section(self.ring, self.bundle, comps)

    def __sub__(self, other: Section) -> Section:
        return self + (-other)

    def __neg__(self) -> Section:
        return Section(self.ring, self.bundle,
                       {j: tuple(-f for f in vec) for j, vec in self.comps.items()})

    def lmul(self, w: Form) -> Section:
        """Left module action of a form."""
        return Section(self.ring, self.bundle,
                       {j: tuple(w.wedge(f) for f in vec) for j, vec in self.comps.items()})

    def map_forms(self, fn: Callable[[Form], Form]) -> Section:
        return Section(self.ring, self.bundle,
                       {j: tuple(fn(f) for f in vec) for j, vec in self.comps.items()})

    def dbar(self) -> Section:
        return self.map_forms(lambda f: f.dbar())

    def partial(self) -> Section:
        return self.map_forms(lambda f: f.partial())

    def shift(self, k: int) -> Section:
        return Section(self.ring, self.bundle.shift(k),
                       {j - k: vec for j, vec in self.comps.items()})

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Section):
            return NotImplemented
        return (self.ring == other.ring and self.bundle == other.bundle
                and self.comps == other.comps)

    def __repr__(self) -> str:
        return f"Section({self.comps})"


TriDegree = Tuple[int, int, int]
FormMatrix = Tuple[Tuple[Form, ...], ...]


def _zero_matrix(ring: RingSpec, rows: int, cols: int) -> list:
    z = Form.zero(ring)
    return [[z] * cols for _ in range(rows)]


class SuperOperator:
    """Coefficient-linear operator between graded bundles, stored as
    tridegree-homogeneous blocks of form matrices."""

    __slots__ = ("ring", "source", "target", "blocks")

    def __init__(self, ring: RingSpec, source: GradedBundle, target: GradedBundle,
                 blocks: Dict[TriDegree, Dict[int, FormMatrix]]):
        # trusts callers inside this module; use .build for raw data
        self.ring = ring
        self.source = source
        self.target = target
        self.blocks = blocks

    # -- construction -----------------------------------------------------

    @staticmethod
    def build(ring: RingSpec, source: GradedBundle, target: GradedBundle,
              entries: Iterable[Tuple[int, int, int, int, Form]]) -> SuperOperator:
        """Assemble from (r, source_degree, row, col, form) contributions.
        Forms of mixed bidegree are split into homogeneous blocks."""
        acc: Dict[TriDegree, Dict[int, list]] = {}
        for r, j, row, col, form in entries:
            if form.is_zero():
                continue
            rows, cols = target.rank(j + r), source.rank(j)
            if not (0 <= row < rows and 0 <= col < cols):
                raise GradingError(
                    f"entry ({row},{col}) outside {rows}x{cols} block at degree {j}, shift {r}")
            for p, q, part in form.homogeneous_parts():
                mats = acc.setdefault((p, q, r), {})
                mat = mats.get(j)
                if mat is None:
                    mat = mats[j] = _zero_matrix(ring, rows, cols)
                mat[row][col] = mat[row][col] + part
        return SuperOperator(ring, source, target, _freeze(acc))

    @staticmethod
    def from_matrices(ring: RingSpec, source: GradedBundle, target: GradedBundle,
                      r: int, mats: Dict[int, Iterable[Iterable[Form]]]) -> SuperOperator:
        entries = []
        for j, mat in mats.items():
            for row, rowvec in enumerate(mat):
                for col, f in enumerate(rowvec):
                    entries.append((r, j, row, col, f))
        return SuperOperator.build(ring, source, target, entries)

    @staticmethod
    def zero(ring: RingSpec, source: GradedBundle, target: GradedBundle) -> SuperOperator:
        return SuperOperator(ring, source, target, {})

    @staticmethod
    def identity(ring: RingSpec, bundle: GradedBundle) -> SuperOperator:
        one = Form.const(ring, 1)
        entries = [(0, j, i, i, one) for j, rk in bundle.ranks.items() for i in range(rk)]
        return SuperOperator.build(ring, bundle, bundle, entries)

    @staticmethod
    def single_entry(ring: RingSpec, source: GradedBundle, target: GradedBundle,
                     r: int, j: int, row: int, col: int, form: Form) -> SuperOperator:
        return SuperOperator.build(ring, source, target, [(r, j, row, col, form)])

    # -- linear structure --------------------------------------------------

    def __add__(self, other: SuperOperator) -> SuperOperator:
        self._check_parallel(other)
        return SuperOperator.build(self.ring, self.source, self.target,
                                   list(self._entries()) + list(other._entries()))

    def __sub__(self, other: SuperOperator) -> SuperOperator:
        return self + (-other)

    def __neg__(self) -> SuperOperator:
        return self.map_entries(lambda f: -f)

    def scale(self, c) -> SuperOperator:
        return self.map_entries(lambda f: f.scale(c))

    def map_entries(self, fn: Callable[[Form], Form]) -> SuperOperator:
        """Apply fn to every entry; blocks are re-split by the results'
        actual bidegrees (fn may change them)."""
        entries = [(r, j, row, col, fn(f))
                   for (_p, _q, r), mats in self.blocks.items()
                   for j, mat in mats.items()
                   for row, rowvec in enumerate(mat)
                   for col, f in enumerate(rowvec)]
        return SuperOperator.build(self.ring, self.source, self.target, entries)

    def _entries(self):
        for (_p, _q, r), mats in self.blocks.items():
            for j, mat in mats.items():
                for row, rowvec in enumerate(mat):
                    for col, f in enumerate(rowvec):
                        if f:
                            yield (r, j, row, col, f)

    def _check_parallel(self, other: SuperOperator) -> None:
        if self.ring != other.ring:
            raise RingMismatchError(f"{self.ring} vs {other.ring}")
        if self.source != other.source or self.target != other.target:
            raise GradingError("operators between different bundles")

    # -- grading accessors ---------------------------------------------------

    def tridegrees(self) -> List[TriDegree]:
        return sorted(self.blocks)

    def component(self, p: int, q: int, r: int) -> SuperOperator:
        mats = self.blocks.get((p, q, r))
        if not mats:
            return SuperOperator.zero(self.ring, self.source, self.target)
        return SuperOperator(self.ring, self.source, self.target, {(p, q, r): mats})

    def q_component(self, q: int) -> SuperOperator:
        picked = {k: v for k, v in self.blocks.items() if k[1] == q}
        return SuperOperator(self.ring, self.source, self.target, picked)

    def homogeneous_parts(self) -> List[Tuple[TriDegree, SuperOperator]]:
        return [(k, SuperOperator(self.ring, self.source, self.target, {k: m}))
                for k, m in sorted(self.blocks.items())]

    def total_degrees(self) -> List[int]:
        return sorted({p + q + r for (p, q, r) in self.blocks})

    def block_matrix(self, pqr: TriDegree, j: int) -> FormMatrix:
        r = pqr[2]
        mats = self.blocks.get(pqr, {})
        got = mats.get(j)
        if got is not None:
            return got
        z = Form.zero(self.ring)
        return tuple(tuple([z] * self.source.rank(j))
                     for _ in range(self.target.rank(j + r)))

    # -- the operator calculus -------------------------------------------------

    def apply(self, s: Section) -> Section:
        """Act on a section, inserting the Koszul sign past coefficients."""
        if s.bundle != self.source or s.ring != self.ring:
            raise GradingError("section does not match operator source")
        out: Dict[int, list] = {}
        for (p, q, r), mats in self.blocks.items():
            odd = (p + q + r) % 2
            for j, mat in mats.items():
                vec = s.comps.get(j)
                if vec is None:
                    continue
                tj = j + r
                dest = out.get(tj)
                if dest is None:
                    dest = out[tj] = [Form.zero(self.ring)] * self.target.rank(tj)
                for col, w in enumerate(vec):
                    if not w:
                        continue
                    for dp, dq, part in w.homogeneous_parts():
                        if odd and (dp + dq) % 2:
                            part = -part
                        for row in range(len(mat)):
                            e = mat[row][col]
                            if e:
                                dest[row] = dest[row] + part.wedge(e)
        return Section(self.ring, self.target, {j: tuple(v) for j, v in out.items()})

    def compose(self, other: SuperOperator) -> SuperOperator:
        """self after other."""
        if other.target != self.source:
            raise GradingError("composition shape mismatch")
        if self.ring != other.ring:
            raise RingMismatchError(f"{self.ring} vs {other.ring}")
        entries = []
        for (pS, qS, rS), matsS in self.blocks.items():
            for (pT, qT, rT), matsT in other.blocks.items():
                sign = -1 if ((pT + qT) * rS) % 2 else 1
                r = rS + rT
                for j, matT in matsT.items():
                    matS = matsS.get(j + rT)
                    if matS is None:
                        continue
                    inner = len(matT)
                    for row in range(len(matS)):
                        for col in range(len(matT[0]) if inner else 0):
                            acc = Form.zero(self.ring)
                            for a in range(inner):
                                x, y = matS[row][a], matT[a][col]
                                if x and y:
                                    acc = acc + x.wedge(y)
                            if acc:
                                entries.append((r, j, row, col, acc.scale(sign)))
        return SuperOperator.build(self.ring, other.source, self.target, entries)

    def bracket(self, other: SuperOperator) -> SuperOperator:
        """Supercommutator, extended bilinearly over homogeneous blocks."""
        out = SuperOperator.zero(self.ring, self.source, self.target)
        for (pS, qS, rS), S in self.homogeneous_parts():
            for (pT, qT, rT), T in other.homogeneous_parts():
                st = S.compose(T)
                ts = T.compose(S)
                if ((pS + qS + rS) * (pT + qT + rT)) % 2:
                    out = out + st + ts
                else:
                    out = out + st - ts
        return out

    def power(self, k: int) -> SuperOperator:
        if self.source != self.target:
            raise GradingError("powers need an endomorphism")
        out = SuperOperator.identity(self.ring, self.source)
        for _ in range(k):
            out = out.compose(self)
        return out

    def supertrace(self) -> Form:
        """Sum over degree-preserving blocks of (-1)^j tr, a form."""
        if self.source != self.target:
            raise GradingError("supertrace needs an endomorphism")
        tot = Form.zero(self.ring)
        for (p, q, r), mats in self.blocks.items():
            if r != 0:
                continue
            for j, mat in mats.items():
                tr = Form.zero(self.ring)
                for i in range(len(mat)):
                    tr = tr + mat[i][i]
                tot = tot + (tr if j % 2 == 0 else -tr)
        return tot

    def shift(self, k: int) -> SuperOperator:
        """Reindex degree-j data to degree j-k (no signs; see connection
        shifting for the differential-sign variant)."""
        blocks = {pqr: {j - k: mat for j, mat in mats.items()}
                  for pqr, mats in self.blocks.items()}
        return SuperOperator(self.ring, self.source.shift(k), self.target.shift(k), blocks)

    def dbar(self) -> SuperOperator:
        """Entrywise antiholomorphic differential; as an operator this is
        the supercommutator of the bare dbar with self."""
        return self.map_entries(lambda f: f.dbar())

    def partial(self) -> SuperOperator:
        return self.map_entries(lambda f: f.partial())

    def conj_transpose(self, fn: Optional[Callable[[Form], Form]] = None) -> SuperOperator:
        """Transpose each block matrix and conjugate entries (r negated)."""
        conj = fn or (lambda f: f.conj())
        entries = []
        for (_p, _q, r), mats in self.blocks.items():
            for j, mat in mats.items():
                for row, rowvec in enumerate(mat):
                    for col, f in enumerate(rowvec):
                        if f:
                            entries.append((-r, j + r, col, row, conj(f)))
        return SuperOperator.build(self.ring, self.target, self.source, entries)

    # -- ring extension -----------------------------------------------------

    def lift(self, ring: RingSpec) -> SuperOperator:
        return SuperOperator(ring, self.source, self.target,
                             {k: {j: tuple(tuple(f.lift(ring) for f in row) for row in mat)
                                  for j, mat in mats.items()}
                              for k, mats in self.blocks.items()})

    def eps_part(self) -> SuperOperator:
        return _rering(self.map_entries(lambda f: f.eps_part().lift(self.ring)),
                       self.ring.undualized())

    def const_part(self) -> SuperOperator:
        return _rering(self.map_entries(lambda f: f.const_part().lift(self.ring)),
                       self.ring.undualized())

    # -- structure ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.blocks

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SuperOperator):
            return NotImplemented
        return (self.ring == other.ring and self.source == other.source
                and self.target == other.target and self.blocks == other.blocks)

    def poly_degree(self) -> int:
        degs = [f.poly_degree()
                for mats in self.blocks.values()
                for mat in mats.values() for row in mat for f in row]
        return max(degs, default=0)

    def __repr__(self) -> str:
        bits = []
        for pqr, mats in sorted(self.blocks.items()):
            bits.append(f"{pqr}:{sorted(mats)}")
        return f"SuperOperator[{', '.join(bits) or '0'}]"


def _freeze(acc: Dict[TriDegree, Dict[int, list]]) -> Dict[TriDegree, Dict[int, FormMatrix]]:
    out: Dict[TriDegree, Dict[int, FormMatrix]] = {}
    for pqr, mats in acc.items():
        kept = {}
        for j, mat in mats.items():
            if any(f for row in mat for f in row):
                kept[j] = tuple(tuple(row) for row in mat)
        if kept:
            out[pqr] = kept
    return out


def _rering(op: SuperOperator, ring: RingSpec) -> SuperOperator:
    """Rebuild an eps-free operator over the plain ring."""
    entries = []
    for (_p, _q, r), mats in op.blocks.items():
        for j, mat in mats.items():
            for row, rowvec in enumerate(mat):
                for col, f in enumerate(rowvec):
                    if f.is_zero():
                        continue
                    entries.append((r, j, row, col,
                                    Form(ring, {k: Scalar(ring, dict(s.terms))
                                                for k, s in f.terms.items()})))
    return SuperOperator.build(ring, op.source, op.target, entries)


def operator_exp(t: SuperOperator, max_power: Optional[int] = None) -> SuperOperator:
    """exp of a nilpotent endomorphism (exact factorials)."""
    if t.source != t.target:
        raise GradingError("exp needs an endomorphism")
    cap = max_power if max_power is not None else 4 * t.ring.nvars + 4
    out = SuperOperator.identity(t.ring, t.source)
    powk = SuperOperator.identity(t.ring, t.source)
    fact = 1
    for k in range(1, cap + 1):
        powk = powk.compose(t)
        if powk.is_zero():
            return out
        fact *= k
        out = out + powk.scale(Fraction(1, fact))
    raise GradingError("operator is not nilpotent within the expected bound")


def operator_log_unipotent(u: SuperOperator, max_power: Optional[int] = None) -> SuperOperator:
    """log of a unipotent endomorphism 1 + N with N nilpotent."""
    n = u - SuperOperator.identity(u.ring, u.source)
    cap = max_power if max_power is not None else 4 * u.ring.nvars + 4
    out = SuperOperator.zero(u.ring, u.source, u.target)
    powk = SuperOperator.identity(u.ring, u.source)
    for k in range(1, cap + 1):
        powk = powk.compose(n)
        if powk.is_zero():
            return out
        out = out + powk.scale(Fraction(1 if k % 2 else -1, k))
    raise GradingError("operator is not unipotent within the expected bound")
