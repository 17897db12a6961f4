"""Flat antiholomorphic superconnections and the constructions on them.

A superconnection coefficient here is an odd operator whose homogeneous
blocks all have tridegree (0, q, 1-q): the q = 0 block is the complex
differential, q = 1 is the connection form, and q >= 2 are the higher
correctors.  The full differential on sections is the entrywise dbar plus
this coefficient, and its square is measured by the residue operators
computed below.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Tuple

from .forms import Form
from .linsolve import Eliminator, SolveReport, kernel_basis, solve_linear_report
from .scalars import GR_ZERO, RingSpec, Scalar, UnsupportedRingError
from .supermodule import (GradedBundle, GradingError, Section, SuperOperator,
                          operator_exp, operator_log_unipotent)


class FlatnessError(ValueError):
    """A construction needed a flat input or produced a non-flat result."""


class PreconditionError(ValueError):
    """The input is outside the class an algorithm is proven to handle."""


class ObstructionError(RuntimeError):
    """A staged linear problem has no solution in the search space."""

    def __init__(self, message: str, stage: Optional[int] = None,
                 reports: Optional[list] = None):
        super().__init__(message)
        self.stage = stage
        self.reports = reports or []


class TruncationOverflow(RuntimeError):
    """Enlarging the degree bound changed the answer, so the requested
    bound was too small to be conclusive."""

    def __init__(self, message: str, bound: int, detail: Optional[dict] = None):
        super().__init__(message)
        self.bound = bound
        self.detail = detail or {}


def _check_coefficient_shape(coeff: SuperOperator) -> None:
    for (p, q, r) in coeff.tridegrees():
        if p != 0 or r != 1 - q or q < 0:
            raise GradingError(
                f"coefficient block {(p, q, r)} is not of shape (0, q, 1-q)")


class DbarSuperconnection:
    """Bundle with a (0, *)-form coefficient making sections a complex."""

    __slots__ = ("ring", "bundle", "coeff")

    def __init__(self, ring: RingSpec, bundle: GradedBundle, coeff: SuperOperator):
        if coeff.ring != ring:
            raise GradingError("coefficient ring mismatch")
        if coeff.source != bundle or coeff.target != bundle:
            raise GradingError("coefficient must be an endomorphism of the bundle")
        _check_coefficient_shape(coeff)
        self.ring = ring
        self.bundle = bundle
        self.coeff = coeff

    @staticmethod
    def from_components(ring: RingSpec, bundle: GradedBundle,
                        gamma: Optional[SuperOperator] = None,
                        a: Optional[SuperOperator] = None,
                        betas: Iterable[SuperOperator] = ()) -> DbarSuperconnection:
        total = SuperOperator.zero(ring, bundle, bundle)
        named = [((0,), gamma), ((1,), a)]
        named.extend(((), b) for b in betas)
        for q_expect, op in named:
            if op is None or op.is_zero():
                continue
            for (p, q, r) in op.tridegrees():
                if q_expect and q not in q_expect:
                    raise GradingError(f"component at q={q}, expected q={q_expect}")
                if not q_expect and q < 2:
                    raise GradingError(f"higher corrector at q={q} must have q >= 2")
            total = total + op
        return DbarSuperconnection(ring, bundle, total)

    def component(self, q: int) -> SuperOperator:
        return self.coeff.component(0, q, 1 - q)

    def gamma(self) -> SuperOperator:
        return self.component(0)

    def connection_form(self) -> SuperOperator:
        return self.component(1)

    def q_levels(self) -> List[int]:
        return sorted(q for (_p, q, _r) in self.coeff.tridegrees())

    def dbar_apply(self, s: Section) -> Section:
        return s.dbar() + self.coeff.apply(s)

    def square_operator(self) -> SuperOperator:
        """Coefficient of the squared differential."""
        return self.coeff.dbar() + self.coeff.compose(self.coeff)

    def residue(self, q: int) -> SuperOperator:
        return self.square_operator().component(0, q, 2 - q)

    def is_flat(self) -> bool:
        return self.square_operator().is_zero()

    def is_holomorphic_complex(self) -> bool:
        levels = self.q_levels()
        if any(q != 0 for q in levels):
            return False
        return self.coeff.dbar().is_zero()

    def poly_degree(self) -> int:
        return self.coeff.poly_degree()

    def lift(self, ring: RingSpec) -> DbarSuperconnection:
        return DbarSuperconnection(ring, self.bundle, self.coeff.lift(ring))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DbarSuperconnection):
            return NotImplemented
        return (self.ring == other.ring and self.bundle == other.bundle
                and self.coeff == other.coeff)

    def __repr__(self) -> str:
        return f"DbarSuperconnection(levels={self.q_levels()}, bundle={self.bundle})"


def flatness_residues(conn: DbarSuperconnection) -> Dict[int, SuperOperator]:
    """Nonzero residues of the squared differential, keyed by form degree."""
    sq = conn.square_operator()
    out: Dict[int, SuperOperator] = {}
    for (p, q, r), piece in sq.homogeneous_parts():
        if p != 0 or r != 2 - q:
            raise GradingError(f"unexpected residue block {(p, q, r)}")
        out[q] = out.get(q, SuperOperator.zero(conn.ring, conn.bundle,
                                               conn.bundle)) + piece
    return out


def from_complex(ring: RingSpec, bundle: GradedBundle,
                 diffs: Dict[int, Iterable[Iterable[Scalar]]]) -> DbarSuperconnection:
    """Superconnection of a complex of free modules: the matrices give the
    degree-raising maps, and there is no connection form."""
    entries = []
    for j, mat in diffs.items():
        for row, rowvec in enumerate(mat):
            for col, s in enumerate(rowvec):
                if s:
                    entries.append((1, j, row, col, Form.from_scalar(s)))
    gamma = SuperOperator.build(ring, bundle, bundle, entries)
    return DbarSuperconnection(ring, bundle, gamma)


# -- gauge action ----------------------------------------------------------


class GaugeParameter:
    """Strict even parameter: blocks of tridegree (0, k, -k) with k >= 1."""

    __slots__ = ("op",)

    def __init__(self, op: SuperOperator):
        if op.source != op.target:
            raise GradingError("gauge parameter must be an endomorphism")
        for (p, q, r) in op.tridegrees():
            if p != 0 or r != -q or q < 1:
                raise GradingError(
                    f"parameter block {(p, q, r)} is not of shape (0, k, -k)")
        self.op = op

    @staticmethod
    def zero(ring: RingSpec, bundle: GradedBundle) -> GaugeParameter:
        return GaugeParameter(SuperOperator.zero(ring, bundle, bundle))

    def level(self, k: int) -> SuperOperator:
        return self.op.component(0, k, -k)

    def levels(self) -> List[int]:
        return sorted(q for (_p, q, _r) in self.op.tridegrees())

    def exp(self) -> SuperOperator:
        return operator_exp(self.op)

    def inverse(self) -> GaugeParameter:
        return GaugeParameter(-self.op)

    def is_zero(self) -> bool:
        return self.op.is_zero()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaugeParameter):
            return NotImplemented
        return self.op == other.op

    def __repr__(self) -> str:
        return f"GaugeParameter(levels={self.levels()})"


def gauge(conn: DbarSuperconnection, phi: GaugeParameter) -> DbarSuperconnection:
    """Conjugate the differential by the exponential of the parameter."""
    if phi.op.source != conn.bundle:
        raise GradingError("parameter bundle mismatch")
    g = phi.exp()
    gi = GaugeParameter(-phi.op).exp()
    coeff = gi.compose(g.dbar()) + gi.compose(conn.coeff).compose(g)
    return DbarSuperconnection(conn.ring, conn.bundle, coeff)


def compose_parameters(first: GaugeParameter, second: GaugeParameter) -> GaugeParameter:
    """Parameter of gauging by `first` and then by `second`."""
    prod = first.exp().compose(second.exp())
    return GaugeParameter(operator_log_unipotent(prod))


# -- twisting, sums, shifts, cones ------------------------------------------


def mc_residue(conn: DbarSuperconnection, alpha: SuperOperator) -> SuperOperator:
    """Failure of the twisted coefficient to keep the square zero."""
    return (alpha.dbar() + conn.coeff.compose(alpha)
            + alpha.compose(conn.coeff) + alpha.compose(alpha))


def twist(conn: DbarSuperconnection, alpha: SuperOperator,
          check: bool = True) -> DbarSuperconnection:
    _check_coefficient_shape(alpha)
    if alpha.source != conn.bundle or alpha.target != conn.bundle:
        raise GradingError("twist cochain bundle mismatch")
    if check:
        if not conn.is_flat():
            raise FlatnessError("twisting a non-flat connection")
        if not mc_residue(conn, alpha).is_zero():
            raise FlatnessError("twist cochain fails the structure equation")
    return DbarSuperconnection(conn.ring, conn.bundle, conn.coeff + alpha)


@dataclass
class DirectSum:
    conn: DbarSuperconnection
    incl_first: SuperOperator
    incl_second: SuperOperator
    proj_first: SuperOperator
    proj_second: SuperOperator


def direct_sum(c1: DbarSuperconnection, c2: DbarSuperconnection) -> DirectSum:
    if c1.ring != c2.ring:
        raise GradingError("direct sum over different rings")
    ring = c1.ring
    b1, b2 = c1.bundle, c2.bundle
    ranks: Dict[int, int] = {}
    for j in set(b1.degrees()) | set(b2.degrees()):
        ranks[j] = b1.rank(j) + b2.rank(j)
    total = GradedBundle(ranks)
    one = Form.const(ring, 1)
    inc1 = SuperOperator.build(ring, b1, total,
                               [(0, j, i, i, one)
                                for j in b1.degrees() for i in range(b1.rank(j))])
    inc2 = SuperOperator.build(ring, b2, total,
                               [(0, j, b1.rank(j) + i, i, one)
                                for j in b2.degrees() for i in range(b2.rank(j))])
    pr1 = SuperOperator.build(ring, total, b1,
                              [(0, j, i, i, one)
                               for j in b1.degrees() for i in range(b1.rank(j))])
    pr2 = SuperOperator.build(ring, total, b2,
                              [(0, j, i, b1.rank(j) + i, one)
                               for j in b2.degrees() for i in range(b2.rank(j))])
    coeff = (inc1.compose(c1.coeff).compose(pr1)
             + inc2.compose(c2.coeff).compose(pr2))
    conn = DbarSuperconnection(ring, total, coeff)
    return DirectSum(conn, inc1, inc2, pr1, pr2)


def shift_connection(conn: DbarSuperconnection, k: int) -> DbarSuperconnection:
    """Reindex degrees down by k; the level-q coefficient picks up the sign
    (-1)^(k(q+1)), which keeps squares zero and matches the cone below."""
    total = SuperOperator.zero(conn.ring, conn.bundle.shift(k),
                               conn.bundle.shift(k))
    for (p, q, r), piece in conn.coeff.homogeneous_parts():
        moved = piece.shift(k)
        if (k * (q + 1)) % 2:
            moved = -moved
        total = total + moved
    return DbarSuperconnection(conn.ring, conn.bundle.shift(k), total)


def is_chain_map(f: SuperOperator, src: DbarSuperconnection,
                 tgt: DbarSuperconnection) -> bool:
    if f.source != src.bundle or f.target != tgt.bundle:
        raise GradingError("chain map bundle mismatch")
    comm = f.dbar() + tgt.coeff.compose(f) - f.compose(src.coeff)
    return comm.is_zero()


@dataclass
class Cone:
    conn: DbarSuperconnection
    parts: DirectSum
    alpha: SuperOperator


def cone(f: SuperOperator, src: DbarSuperconnection, tgt: DbarSuperconnection,
         check: bool = True) -> Cone:
    """Mapping cone of an even endomorphism-degree chain map."""
    if f.tridegrees() not in ([], [(0, 0, 0)]):
        raise GradingError("cone expects a degree-preserving (0,0)-form map")
    if check and not is_chain_map(f, src, tgt):
        raise FlatnessError("cone of a map that does not commute with the differentials")
    shifted = shift_connection(src, 1)
    ds = direct_sum(shifted, tgt)
    entries = []
    mats = f.blocks.get((0, 0, 0), {})
    for j, mat in mats.items():
        for row, rowvec in enumerate(mat):
            for col, form in enumerate(rowvec):
                if form:
                    entries.append((1, j - 1, row, col, form))
    ftilde = SuperOperator.build(f.ring, shifted.bundle, tgt.bundle, entries)
    alpha = ds.incl_second.compose(ftilde).compose(ds.proj_first)
    return Cone(twist(ds.conn, alpha, check=check), ds, alpha)


# -- internal hom ------------------------------------------------------------


class HomBasis:
    """Elementary-operator coordinates on the internal hom bundle.

    The element at (k, j, s, t) sends the t-th degree-j generator of the
    source to the s-th degree-(j+k) generator of the target.
    """

    def __init__(self, src: GradedBundle, tgt: GradedBundle):
        self.src = src
        self.tgt = tgt
        self.elements: Dict[int, List[Tuple[int, int, int]]] = {}
        self.index: Dict[Tuple[int, int, int, int], int] = {}
        for j in src.degrees():
            for jt in tgt.degrees():
                k = jt - j
                for s in range(tgt.rank(jt)):
                    for t in range(src.rank(j)):
                        lst = self.elements.setdefault(k, [])
                        self.index[(k, j, s, t)] = len(lst)
                        lst.append((j, s, t))
        self.bundle = GradedBundle({k: len(v) for k, v in self.elements.items()})

    def to_operator(self, ring: RingSpec, sec: Section) -> SuperOperator:
        """Read a section of the hom bundle as an operator."""
        entries = []
        for k, vec in sec.comps.items():
            for idx, form in enumerate(vec):
                if not form:
                    continue
                j, s, t = self.elements[k][idx]
                entries.append((k, j, s, t, form))
        return SuperOperator.build(ring, self.src, self.tgt, entries)


def hom_connection(src: DbarSuperconnection,
                   tgt: DbarSuperconnection) -> Tuple[DbarSuperconnection, HomBasis]:
    """Superconnection on the internal hom, from the supercommutator with
    the two coefficients."""
    if src.ring != tgt.ring:
        raise GradingError("hom over different rings")
    ring = src.ring
    basis = HomBasis(src.bundle, tgt.bundle)
    one = Form.const(ring, 1)
    entries = []
    for k, elems in basis.elements.items():
        sign = -1 if k % 2 else 1
        for col, (j, s, t) in enumerate(elems):
            e = SuperOperator.single_entry(ring, src.bundle, tgt.bundle,
                                           k, j, s, t, one)
            image = tgt.coeff.compose(e) - e.compose(src.coeff).scale(sign)
            for (p, q, rc), mats in image.blocks.items():
                if p != 0 or rc != k + 1 - q:
                    raise GradingError("hom differential left the expected shape")
                for j2, mat in mats.items():
                    for s2 in range(len(mat)):
                        for t2 in range(len(mat[0])):
                            form = mat[s2][t2]
                            if form:
                                row = basis.index[(rc, j2, s2, t2)]
                                entries.append((1 - q, k, row, col, form))
    coeff = SuperOperator.build(ring, basis.bundle, basis.bundle, entries)
    return DbarSuperconnection(ring, basis.bundle, coeff), basis


# -- flattening sections of operators into labeled vectors -------------------


def _op_vector(op: SuperOperator) -> dict:
    out = {}
    for (p, q, r), mats in op.blocks.items():
        for j, mat in mats.items():
            for row, rowvec in enumerate(mat):
                for col, form in enumerate(rowvec):
                    for fkey, s in form.terms.items():
                        for tkey, c in s.terms.items():
                            out[((p, q, r), j, row, col, fkey, tkey)] = c
    return out


def _section_vector(sec: Section) -> dict:
    out = {}
    for j, vec in sec.comps.items():
        for idx, form in enumerate(vec):
            for fkey, s in form.terms.items():
                for tkey, c in s.terms.items():
                    out[(j, idx, fkey, tkey)] = c
    return out


# -- degree-zero hom cohomology ----------------------------------------------


@dataclass
class H0Result:
    dimension: int
    kernel_dim: int
    image_dim: int
    degree_bound: int


def _monomials_upto(nvars: int, bound: int) -> List[Tuple[tuple, tuple]]:
    def exps(total_slots, budget):
        if total_slots == 0:
            yield ()
            return
        for head in range(budget + 1):
            for tail in exps(total_slots - 1, budget - head):
                yield (head,) + tail
    out = []
    for combined in exps(2 * nvars, bound):
        out.append((combined[:nvars], combined[nvars:]))
    out.sort()
    return out


def h0_hom(src: DbarSuperconnection, tgt: DbarSuperconnection,
           degree_bound: int, probe: bool = True) -> H0Result:
    """Dimension of degree-zero closed maps modulo exact ones, with all
    coefficients truncated to polynomial degree at most the bound."""
    if src.ring.kind != "poly":
        raise UnsupportedRingError("hom cohomology runs on the polynomial model")
    ring = src.ring
    hconn, basis = hom_connection(src, tgt)
    hb = hconn.bundle
    rank0 = hb.rank(0)
    if rank0 == 0:
        return H0Result(0, 0, 0, degree_bound)
    mons = _monomials_upto(ring.nvars, degree_bound)
    columns = [(idx, mon) for idx in range(rank0) for mon in mons]

    def d_of_generator(k: int, idx: int, mon, fkey) -> dict:
        coeffvec = [Form.zero(ring)] * hb.rank(k)
        coeffvec[idx] = Form.term(Scalar.monomial(ring, mon[0], mon[1]),
                                  fkey[0], fkey[1])
        sec = Section(ring, hb, {k: tuple(coeffvec)})
        return _section_vector(hconn.dbar_apply(sec))

    equations = {}
    for (idx, mon) in columns:
        for label, c in d_of_generator(0, idx, mon, ((), ())).items():
            equations.setdefault(label, {})[(idx, mon)] = c
    kernel = kernel_basis(list(equations.values()), columns)

    def image_rank(pot_bound: int) -> int:
        pots = []
        pmons = _monomials_upto(ring.nvars, pot_bound)
        for q in range(ring.nvars + 1):
            k = -1 - q
            if hb.rank(k) == 0:
                continue
            for fkey in _dzbar_keys(ring.nvars, q):
                for idx in range(hb.rank(k)):
                    for mon in pmons:
                        pots.append(d_of_generator(k, idx, mon, ((), fkey)))
        allowed = {(0, idx, ((), ()), (mon[0], mon[1], 0, False))
                   for idx in range(rank0) for mon in mons}
        bad_rows: Dict[object, dict] = {}
        for i, vec in enumerate(pots):
            for label, c in vec.items():
                if label not in allowed:
                    bad_rows.setdefault(label, {})[i] = c
        combos = kernel_basis(list(bad_rows.values()), list(range(len(pots))))
        elim = Eliminator()
        for combo in combos:
            image = {}
            for i, w in combo.items():
                for label, c in pots[i].items():
                    if label not in allowed:
                        continue
                    nv = image.get(label)
                    nv = c * w if nv is None else nv + c * w
                    image[label] = nv
            image = {lab: v for lab, v in image.items() if v}
            if image:
                elim.insert(image)
        return elim.rank()

    img = image_rank(degree_bound + 1)
    if probe:
        again = image_rank(degree_bound + 3)
        if again != img:
            raise TruncationOverflow(
                "image rank changed when the potential degree bound grew",
                degree_bound, {"image_rank": img, "probed_rank": again})
    return H0Result(len(kernel) - img, len(kernel), img, degree_bound)


def _dzbar_keys(nvars: int, q: int) -> List[tuple]:
    return [tuple(c) for c in combinations(range(1, nvars + 1), q)]


# -- completion to flatness ---------------------------------------------------


@dataclass
class CompletionResult:
    conn: DbarSuperconnection
    added: Dict[int, SuperOperator]
    degree_bound: int


def bracket_solve(gamma_op: SuperOperator, rhs: SuperOperator, x_q: int,
                  x_r: int, bound: int) -> SolveReport:
    """Solve [gamma, X] = -rhs for X of tridegree (0, x_q, x_r), with X's
    antiholomorphic support copied from the right-hand side.  The bracket
    is the supercommutator, so the sign follows the parity of X."""
    ring = gamma_op.ring
    bundle = gamma_op.source
    rhs_vec = _op_vector(rhs)
    zbar_degs = set()
    fkeys = set()
    for ((_p, _q, _r), _j, _row, _col, fkey, tkey) in rhs_vec:
        zbar_degs.add(tkey[1])
        fkeys.add(fkey[1])
    sign = -1 if (x_q + x_r) % 2 == 0 else 1
    columns = []
    images = []
    zmons = sorted({a for a, _b in _monomials_upto(ring.nvars, bound)})
    for j in bundle.degrees():
        rows = bundle.rank(j + x_r)
        cols = bundle.rank(j)
        for row in range(rows):
            for col in range(cols):
                for jj in fkeys:
                    if len(jj) != x_q:
                        continue
                    for b in zbar_degs:
                        for a in zmons:
                            form = Form.term(Scalar.monomial(ring, a, b), (), jj)
                            if form.is_zero():
                                continue
                            e = SuperOperator.single_entry(
                                ring, bundle, bundle, x_r, j, row, col, form)
                            br = gamma_op.compose(e) + e.compose(gamma_op).scale(sign)
                            columns.append((j, row, col, jj, a, b))
                            images.append(_op_vector(br))
    equations: Dict[object, dict] = {}
    for lab in rhs_vec:
        equations[lab] = {}
    for cidx, vec in enumerate(images):
        for lab, c in vec.items():
            equations.setdefault(lab, {})[columns[cidx]] = c
    eqs = [(coeffs, -rhs_vec.get(lab, GR_ZERO))
           for lab, coeffs in equations.items()]
    return solve_linear_report(eqs)


def solution_operator(ring: RingSpec, bundle: GradedBundle, x_r: int,
                      solution: dict) -> SuperOperator:
    entries = []
    for (j, row, col, jj, a, b), c in solution.items():
        entries.append((x_r, j, row, col,
                        Form.term(Scalar.monomial(ring, a, b, 0, c), (), jj)))
    return SuperOperator.build(ring, bundle, bundle, entries)


def complete_to_flat(conn: DbarSuperconnection,
                     degree_bound: Optional[int] = None,
                     probe_extra: int = 2) -> CompletionResult:
    """Extend the differential and connection form by higher correctors so
    the total square vanishes, solving one level at a time."""
    ring = conn.ring
    if ring.kind != "poly":
        raise UnsupportedRingError("completion runs on the polynomial model")
    gamma_op = conn.gamma()
    if not gamma_op.dbar().is_zero():
        raise PreconditionError("the complex differential must be holomorphic")
    residues = flatness_residues(conn)
    if 0 in residues:
        raise PreconditionError("the complex differential does not square to zero")
    if 1 in residues:
        raise PreconditionError("the connection form does not commute with "
                                "the differential")
    bound = degree_bound if degree_bound is not None else conn.poly_degree() + 2
    current = conn
    added: Dict[int, SuperOperator] = {}
    for q in range(2, ring.nvars + 1):
        res = current.residue(q)
        if res.is_zero():
            continue
        if not gamma_op.bracket(res).is_zero():
            raise PreconditionError(
                f"level-{q} residue is not closed under the differential")
        report = bracket_solve(gamma_op, res, q, 1 - q, bound)
        used = bound
        reports = [report]
        if report.solution is None:
            retry = bracket_solve(gamma_op, res, q, 1 - q, bound + probe_extra)
            reports.append(retry)
            if retry.solution is not None:
                report, used = retry, bound + probe_extra
            else:
                gap0 = report.augmented_rank - report.rank
                gap1 = retry.augmented_rank - retry.rank
                if gap1 > gap0:
                    raise TruncationOverflow(
                        f"level-{q} corrector search is inconclusive at the bound",
                        bound, {"gaps": (gap0, gap1)})
                raise ObstructionError(
                    f"no level-{q} corrector exists in the search space",
                    stage=q, reports=reports)
        x = solution_operator(ring, conn.bundle, 1 - q, report.solution)
        added[q] = x
        current = DbarSuperconnection(ring, conn.bundle, current.coeff + x)
        bound = max(bound, used)
    if not current.is_flat():
        raise FlatnessError("completion finished without reaching flatness")
    return CompletionResult(current, added, bound)
