"""Hermitian metrics, the induced holomorphic differential, and curvature.

A metric assigns every bundle degree a positive Hermitian matrix of
scalars with an exact inverse inside the ring.  Its sesquilinear pairing
on sections determines a second differential D of pure dz-type through

    dbar(s1, s2) = (D s1, s2) + (-1)^{|s1|} (s1, Dbar s2),

solved here block by block and then re-verified against the defining
equation on a spanning set of sections.  The square of D + Dbar is the
curvature, whose supertraces give closed trace forms; on the rational
function model of the line these integrate to exact rational numbers.
The tail of the module checks the metric-rescaling and first-order
variation laws, and searches bounded polynomial spaces for d- and
dbar-partial-potentials of a given form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Dict, List, Optional, Tuple

from .connection import DbarSuperconnection, FlatnessError, TruncationOverflow
from .forms import Form
from .linsolve import SolveReport, solve_linear_report
from .scalars import (GR_I, GR_ONE, GR_ZERO, GaussianRational, PiRational,
                      RingSpec, Scalar, UnsupportedRingError, _as_gr, gr,
                      integrate_p1)
from .supermodule import GradedBundle, GradingError, Section, SuperOperator


class MetricError(ValueError):
    """The proposed metric data is not Hermitian, invertible, or positive."""


ScalarMatrix = Tuple[Tuple[Scalar, ...], ...]


# ---------------------------------------------------------------------------
# exact matrix arithmetic over the scalar ring
# ---------------------------------------------------------------------------

def _mat_from_rows(rows) -> ScalarMatrix:
    return tuple(tuple(row) for row in rows)


def _mat_mul(a: ScalarMatrix, b: ScalarMatrix) -> ScalarMatrix:
    out = []
    for i in range(len(a)):
        row = []
        for j in range(len(b[0])):
            acc = None
            for k in range(len(b)):
                term = a[i][k] * b[k][j]
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return _mat_from_rows(out)


def _mat_conj_transpose(a: ScalarMatrix) -> ScalarMatrix:
    return tuple(tuple(a[i][j].conj() for i in range(len(a)))
                 for j in range(len(a[0])))


def _mat_identity(ring: RingSpec, n: int) -> ScalarMatrix:
    one, zero = Scalar.one(ring), Scalar.zero(ring)
    return tuple(tuple(one if i == j else zero for j in range(n))
                 for i in range(n))


def _mat_eq(a: ScalarMatrix, b: ScalarMatrix) -> bool:
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def _det(a: ScalarMatrix) -> Scalar:
    n = len(a)
    if n == 1:
        return a[0][0]
    total = None
    for i in range(n):
        if not a[i][0]:
            continue
        minor = tuple(row[1:] for r, row in enumerate(a) if r != i)
        piece = a[i][0] * _det(minor)
        if i % 2:
            piece = -piece
        total = piece if total is None else total + piece
    return total if total is not None else Scalar.zero(a[0][0].ring)


def _unit_inverse(s: Scalar) -> Scalar:
    """Invert a unit of the scalar ring.

    Units are the nonzero constants on the polynomial model and the
    elements c (1+z zbar)^j on the rational-function model; a dual-number
    unit splits as body plus eps part and inverts by the square-zero rule.
    """
    ring = s.ring
    if ring.dual:
        body_inv = _unit_inverse(s.const_part()).lift(ring)
        eps = s.eps_part().lift(ring)
        if not eps:
            return body_inv
        return body_inv - body_inv * eps * body_inv * Scalar.eps_unit(ring)
    if s.is_zero():
        raise MetricError("zero is not invertible")
    if ring.kind == "poly":
        if not s.is_constant():
            raise MetricError(f"{s!r} is not a unit of the polynomial ring")
        return Scalar.const(ring, s.constant_value().inverse())
    mmax = max(m for (_a, _b, m, _e) in s.terms)
    poly = s * Scalar.p1_power(ring, mmax)
    kdeg = max(a[0] for (a, _b, _m, _e) in poly.terms)
    c = poly.constant_value()
    if not c or poly != Scalar.p1_power(ring, kdeg).scale(c):
        raise MetricError(f"{s!r} is not a unit of the rational-function ring")
    return Scalar.p1_power(ring, mmax - kdeg).scale(c.inverse())


def _mat_inverse(a: ScalarMatrix) -> ScalarMatrix:
    """Adjugate-over-determinant inverse; needs the determinant to be a
    ring unit, which is what the admissible metric classes guarantee."""
    ring = a[0][0].ring
    n = len(a)
    det_inv = _unit_inverse(_det(a))
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = tuple(tuple(v for c, v in enumerate(r) if c != i)
                          for k, r in enumerate(a) if k != j)
            cof = _det(minor) if n > 1 else Scalar.one(ring)
            if (i + j) % 2:
                cof = -cof
            row.append(cof * det_inv)
        rows.append(row)
    inv = _mat_from_rows(rows)
    if not _mat_eq(_mat_mul(a, inv), _mat_identity(ring, n)):
        raise MetricError("inverse verification failed")
    return inv


def _positive_unit(s: Scalar) -> Optional[bool]:
    """Decide positivity of a scalar where exact recognition is possible.

    Returns True/False for constants and for single-weight units of the
    rational-function model, None when the sign is not decidable inside
    the ring (conjugated metrics produce such principal minors)."""
    if s.ring.dual:
        s = s.const_part()
    if s.is_zero():
        return False
    if s.is_constant():
        c = s.constant_value()
        return not c.im and c.re > 0
    if s.ring.kind == "p1":
        try:
            _unit_inverse(s)
        except MetricError:
            return None
        mmax = max(m for (_a, _b, m, _e) in s.terms)
        c = (s * Scalar.p1_power(s.ring, mmax)).constant_value()
        return not c.im and c.re > 0
    return None


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

class HermitianMetric:
    """Per-degree positive Hermitian scalar matrices with exact inverses."""

    __slots__ = ("ring", "bundle", "blocks", "inverses")

    def __init__(self, ring: RingSpec, bundle: GradedBundle,
                 blocks: Dict[int, ScalarMatrix],
                 inverses: Optional[Dict[int, ScalarMatrix]] = None,
                 require_positive: bool = True):
        self.ring = ring
        self.bundle = bundle
        clean: Dict[int, ScalarMatrix] = {}
        for j in bundle.degrees():
            r = bundle.rank(j)
            mat = blocks.get(j)
            if mat is None:
                raise MetricError(f"no metric block for degree {j}")
            mat = _mat_from_rows(mat)
            if len(mat) != r or any(len(row) != r for row in mat):
                raise MetricError(f"degree {j} block is not {r}x{r}")
            for row in mat:
                for s in row:
                    if s.ring != ring:
                        raise MetricError("metric entry in the wrong ring")
            if not _mat_eq(mat, _mat_conj_transpose(mat)):
                raise MetricError(f"degree {j} block is not Hermitian")
            clean[j] = mat
        self.blocks = clean
        if inverses is None:
            inverses = {j: _mat_inverse(m) for j, m in clean.items()}
        else:
            inverses = {j: _mat_from_rows(m) for j, m in inverses.items()}
            for j, mat in clean.items():
                if not _mat_eq(_mat_mul(mat, inverses[j]),
                               _mat_identity(ring, len(mat))):
                    raise MetricError(f"supplied inverse fails at degree {j}")
        self.inverses = inverses
        if require_positive:
            self._check_positive()

    def _check_positive(self) -> None:
        for j, mat in self.blocks.items():
            for k in range(1, len(mat) + 1):
                lead = tuple(row[:k] for row in mat[:k])
                verdict = _positive_unit(_det(lead))
                if verdict is False:
                    raise MetricError(f"degree {j} block is not positive")
                if verdict is None and k == len(mat):
                    raise MetricError(
                        f"cannot certify positivity of the degree {j} block")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def standard(ring: RingSpec, bundle: GradedBundle) -> HermitianMetric:
        """The identity matrix in every degree."""
        return HermitianMetric(
            ring, bundle,
            {j: _mat_identity(ring, bundle.rank(j)) for j in bundle.degrees()})

    @staticmethod
    def constant(ring: RingSpec, bundle: GradedBundle,
                 entries: Dict[int, list]) -> HermitianMetric:
        """Constant coefficient matrices; entries may be rationals or
        GaussianRationals and are checked for Hermitian positivity."""
        blocks = {
            j: tuple(tuple(Scalar.const(ring, _as_gr(v)) for v in row)
                     for row in entries[j])
            for j in bundle.degrees()}
        return HermitianMetric(ring, bundle, blocks)

    @staticmethod
    def p1_weighted(ring: RingSpec, bundle: GradedBundle,
                    weights: Dict[int, int],
                    factors: Optional[Dict[int, list]] = None) -> HermitianMetric:
        """(1+z zbar)^(-weight_j) times a constant positive factor in each
        degree; the rank-one block with weight k models the line bundle of
        degree k."""
        if ring.kind != "p1":
            raise UnsupportedRingError("weighted metrics live on the line model")
        blocks = {}
        for j in bundle.degrees():
            r = bundle.rank(j)
            fac = (factors or {}).get(j)
            if fac is None:
                base = _mat_identity(ring, r)
            elif isinstance(fac, (list, tuple)):
                base = tuple(tuple(Scalar.const(ring, _as_gr(v)) for v in row)
                             for row in fac)
            else:
                c = Scalar.const(ring, _as_gr(fac))
                base = tuple(tuple(c if a == b else Scalar.zero(ring)
                                   for b in range(r)) for a in range(r))
            w = Scalar.p1_power(ring, -weights.get(j, 0))
            blocks[j] = tuple(tuple(w * v for v in row) for row in base)
        return HermitianMetric(ring, bundle, blocks)

    def conjugated(self, g: Dict[int, ScalarMatrix],
                   g_inv: Dict[int, ScalarMatrix]) -> HermitianMetric:
        """Pull back along an invertible polynomial change of frame g with
        explicit inverse: the new block is g-dagger h g."""
        blocks, inverses = {}, {}
        for j, h in self.blocks.items():
            gj = _mat_from_rows(g[j])
            gi = _mat_from_rows(g_inv[j])
            if not _mat_eq(_mat_mul(gj, gi), _mat_identity(self.ring, len(gj))):
                raise MetricError(f"frame change at degree {j} is not invertible")
            blocks[j] = _mat_mul(_mat_conj_transpose(gj), _mat_mul(h, gj))
            inverses[j] = _mat_mul(gi, _mat_mul(self.inverses[j],
                                                _mat_conj_transpose(gi)))
        return HermitianMetric(self.ring, self.bundle, blocks, inverses)

    def rescaled(self, t) -> HermitianMetric:
        """Scale the degree-j block by t^(-j).  This direction is the one
        under which the degree-shift blocks of the induced differential
        scale as t^(i-1) and the trace forms as t^(p-k)."""
        t = Fraction(t)
        if not t:
            raise MetricError("rescaling by zero is not invertible")
        blocks = {j: tuple(tuple(s.scale(t ** (-j)) for s in row) for row in m)
                  for j, m in self.blocks.items()}
        inverses = {j: tuple(tuple(s.scale(t ** j) for s in row) for row in m)
                    for j, m in self.inverses.items()}
        return HermitianMetric(self.ring, self.bundle, blocks, inverses,
                               require_positive=t > 0)

    def perturbed(self, delta: SuperOperator) -> HermitianMetric:
        """First-order deformation h + eps h delta by a self-adjoint
        endomorphism, with the exact square-zero inverse."""
        dmats = _endomorphism_matrices(self, delta)
        ring = self.ring.dualized()
        eps = Scalar.eps_unit(ring)
        blocks, inverses = {}, {}
        for j, h in self.blocks.items():
            bump = _mat_mul(h, dmats[j])
            hi = self.inverses[j]
            back = _mat_mul(hi, _mat_mul(bump, hi))
            blocks[j] = tuple(
                tuple(h[a][b].lift(ring) + bump[a][b].lift(ring) * eps
                      for b in range(len(h)))
                for a in range(len(h)))
            inverses[j] = tuple(
                tuple(hi[a][b].lift(ring) - back[a][b].lift(ring) * eps
                      for b in range(len(h)))
                for a in range(len(h)))
        return HermitianMetric(ring, self.bundle, blocks, inverses)

    # -- access -----------------------------------------------------------

    def matrix(self, j: int) -> ScalarMatrix:
        return self.blocks[j]

    def inverse(self, j: int) -> ScalarMatrix:
        return self.inverses[j]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HermitianMetric):
            return NotImplemented
        return (self.ring == other.ring and self.bundle == other.bundle
                and self.blocks == other.blocks)

    def __repr__(self) -> str:
        return f"HermitianMetric(degrees={sorted(self.blocks)})"


def _endomorphism_matrices(h: HermitianMetric,
                           delta: SuperOperator) -> Dict[int, ScalarMatrix]:
    """Extract the per-degree scalar matrices of a degree-zero endomorphism
    and enforce self-adjointness against the metric."""
    if delta.source != h.bundle or delta.target != h.bundle:
        raise MetricError("perturbation does not act on the metric's bundle")
    if delta.ring != h.ring:
        raise MetricError("perturbation lives in the wrong ring")
    bad = [pqr for pqr in delta.tridegrees() if pqr != (0, 0, 0)]
    if bad:
        raise MetricError(f"perturbation has non-scalar blocks {bad}")
    out: Dict[int, ScalarMatrix] = {}
    zero = Scalar.zero(h.ring)
    for j in h.bundle.degrees():
        mat = delta.block_matrix((0, 0, 0), j)
        rows = tuple(tuple(f.terms.get(((), ()), zero) for f in row)
                     for row in mat)
        bump = _mat_mul(h.blocks[j], rows)
        if not _mat_eq(bump, _mat_conj_transpose(bump)):
            raise MetricError(f"perturbation is not self-adjoint at degree {j}")
        out[j] = rows
    return out


# ---------------------------------------------------------------------------
# the pairing and the induced differential
# ---------------------------------------------------------------------------

_QUARTER_TURNS = (GR_ONE, GR_I, gr(-1), gr(0, -1))


def _phase(n: int) -> GaussianRational:
    """The exact value of i**n."""
    return _QUARTER_TURNS[n % 4]


def pairing(h: HermitianMetric, s1: Section, s2: Section) -> Form:
    """Sesquilinear form-valued pairing: antilinear in the first slot,
    linear in the second, with the Koszul sign when a form passes the
    first section.

    The degree-j summand carries an extra factor i**j.  That factor makes
    the pairing graded-Hermitian, (s2, s1) equals the sign twist
    (-1)**(|s1||s2|) times the conjugate of (s1, s2), which is exactly
    the symmetry needed for the two compatibility equations below to pin
    down the same differential.  Without it the two equations contradict
    each other on any complex with a nonzero degree-raising block."""
    out = Form.zero(h.ring)
    for j in h.bundle.degrees():
        v1 = s1.comps.get(j)
        v2 = s2.comps.get(j)
        if v1 is None or v2 is None:
            continue
        hj = h.blocks[j]
        twist = _phase(j)
        for a, w1 in enumerate(v1):
            if not w1:
                continue
            cw1 = w1.conj()
            for b, w2 in enumerate(v2):
                if not w2 or not hj[a][b]:
                    continue
                hform = Form.from_scalar(hj[a][b])
                for p2, q2, part in w2.homogeneous_parts():
                    piece = cw1.wedge(part).wedge(hform)
                    if ((p2 + q2) * j) % 2:
                        piece = -piece
                    out = out + piece.scale(twist)
    return out


@dataclass
class ChernData:
    """The metric side of a flat structure: the coefficient blocks of the
    induced dz-type differential, with the curvature and trace forms
    filled in as they are computed."""

    ring: RingSpec
    bundle: GradedBundle
    metric: HermitianMetric
    dee: SuperOperator
    curv: Optional[SuperOperator] = None
    forms: Dict[int, Form] = field(default_factory=dict)

    def beta(self, i: int) -> SuperOperator:
        """The homogeneous component of tridegree (i, 0, i-1)."""
        return self.dee.component(i, 0, i - 1)

    def apply_d(self, s: Section) -> Section:
        """The full differential: entrywise holomorphic derivative plus
        the coefficient blocks."""
        return s.partial() + self.dee.apply(s)


def _spanning_sections(ring: RingSpec,
                       bundle: GradedBundle) -> List[Tuple[Section, int]]:
    """Basis sections dressed by a few scalars and form factors, enough to
    exercise every sign path in the pairing identities."""
    if ring.kind == "poly":
        dress = [Scalar.one(ring), Scalar.variable(ring, 1),
                 Scalar.variable(ring, ring.nvars, conjugate=True)]
    else:
        dress = [Scalar.one(ring), Scalar.variable(ring, 1),
                 Scalar.variable(ring, 1, conjugate=True),
                 Scalar.p1_power(ring, -1)]
    factors = [((), ()), ((1,), ()), ((), (1,)), ((1,), (1,))]
    out = []
    for j in bundle.degrees():
        for idx in range(bundle.rank(j)):
            base = Section.basis(ring, bundle, j, idx)
            for sc in dress:
                for dz, dzbar in factors:
                    w = Form.term(sc, dz, dzbar)
                    out.append((base.lmul(w), (len(dz) + len(dzbar) + j) % 2))
    return out


def _check_defining_equation(M: DbarSuperconnection, h: HermitianMetric,
                             dee: SuperOperator) -> None:
    secs = _spanning_sections(M.ring, M.bundle)
    d_of = [s.partial() + dee.apply(s) for s, _ in secs]
    dbar_of = [M.dbar_apply(s) for s, _ in secs]
    for i1, (s1, par1) in enumerate(secs):
        for i2, (s2, _par2) in enumerate(secs):
            pr = pairing(h, s1, s2)
            sign = -1 if par1 else 1
            direct = pairing(h, d_of[i1], s2) \
                + pairing(h, s1, dbar_of[i2]).scale(sign)
            if pr.dbar() != direct:
                raise MetricError("the defining equation fails on the "
                                  f"spanning pair ({i1}, {i2})")
            swapped = pairing(h, dbar_of[i1], s2) \
                + pairing(h, s1, d_of[i2]).scale(sign)
            if pr.partial() != swapped:
                raise MetricError("the conjugate equation fails on the "
                                  f"spanning pair ({i1}, {i2})")


def chern_D(M: DbarSuperconnection, h: HermitianMetric,
            check_spanning: bool = True) -> ChernData:
    """Solve the defining equation for the dz-type differential.

    The block solution pairs basis sections of degrees j1 and j2 and reads
    off the unique component mapping j1 to j2; the result is conjugate
    transposed against the inverse metric.  The defining equation, its
    conjugate, the square, and the block degree law are then re-verified,
    the equations on a spanning set of dressed sections.
    """
    if h.ring != M.ring or h.bundle != M.bundle:
        raise MetricError("metric does not match the connection data")
    if not M.is_flat():
        raise FlatnessError("the metric calculus needs a flat structure")
    ring, bundle = M.ring, M.bundle
    degrees = bundle.degrees()
    entries = []
    for j1 in degrees:
        r1 = bundle.rank(j1)
        for j2 in degrees:
            r2 = bundle.rank(j2)
            i = j2 - j1 + 1
            if i < 0:
                continue
            rows = [[Form.zero(ring) for _ in range(r2)] for _ in range(r1)]
            if j1 == j2:
                hj = h.blocks[j1]
                for a in range(r1):
                    for b in range(r2):
                        rows[a][b] = Form.from_scalar(hj[a][b]).dbar()
            block = M.coeff.blocks.get((0, i, 1 - i), {}).get(j2)
            if block is not None:
                sign = -1 if (j1 * (1 + i)) % 2 else 1
                hj = h.blocks[j1]
                for a in range(r1):
                    for b in range(r2):
                        acc = Form.zero(ring)
                        for c in range(r1):
                            if hj[a][c] and block[c][b]:
                                acc = acc + Form.from_scalar(hj[a][c]).wedge(block[c][b])
                        rows[a][b] = rows[a][b] - acc.scale(sign)
            hi = h.inverses[j2]
            for a in range(r1):
                for b in range(r2):
                    acc = Form.zero(ring)
                    for c in range(r2):
                        if rows[a][c] and hi[c][b]:
                            acc = acc + rows[a][c].wedge(Form.from_scalar(hi[c][b]))
                    f = acc.conj().scale(_phase(i - 1))
                    if f:
                        entries.append((i - 1, j1, b, a, f))
    dee = SuperOperator.build(ring, bundle, bundle, entries)
    for (p, q, r) in dee.tridegrees():
        if q != 0 or r != p - 1:
            raise MetricError(f"solved differential has a stray block ({p},{q},{r})")
    if not (dee.partial() + dee.compose(dee)).is_zero():
        raise MetricError("the induced differential does not square to zero")
    if check_spanning:
        _check_defining_equation(M, h, dee)
    return ChernData(ring, bundle, h, dee)


# ---------------------------------------------------------------------------
# curvature and trace forms
# ---------------------------------------------------------------------------

def _curvature_of(data: ChernData, M: DbarSuperconnection) -> SuperOperator:
    if data.curv is not None:
        return data.curv
    gam = M.coeff
    curv = data.dee.dbar() + gam.partial() + data.dee.bracket(gam)
    for (p, q, r) in curv.tridegrees():
        if r != p - q:
            raise MetricError(f"curvature has a stray block ({p},{q},{r})")
    total = data.dee + gam
    if not (curv.partial() + curv.dbar() + total.bracket(curv)).is_zero():
        raise MetricError("the curvature fails its differential identity")
    data.curv = curv
    return curv


def curvature(M: DbarSuperconnection, h: HermitianMetric) -> SuperOperator:
    """The square of the combined differential, as a pure matrix operator
    with blocks of tridegree (p, q, p-q) only."""
    return _curvature_of(chern_D(M, h), M)


def _chern_form_of(data: ChernData, M: DbarSuperconnection, k: int) -> Form:
    got = data.forms.get(k)
    if got is not None:
        return got
    curv = _curvature_of(data, M)
    w = curv.power(k).supertrace()
    if not w.d().is_zero():
        raise MetricError(f"trace form {k} is not closed")
    for (p, q) in w.bidegrees():
        if p != q:
            raise MetricError(f"trace form {k} has an off-diagonal ({p},{q}) part")
    if k == 0 and w != Form.const(data.ring, data.bundle.super_rank()):
        raise MetricError("trace form 0 is not the super-rank")
    data.forms[k] = w
    return w


def chern_form(M: DbarSuperconnection, h: HermitianMetric, k: int,
               diagonal: bool = False) -> Form:
    """Supertrace of the k-th curvature power: a d-closed form whose
    bidegree-(p, q) parts vanish off the diagonal.  With diagonal=True
    only the (k, k) component is returned."""
    if k < 0:
        raise ValueError("the power must be nonnegative")
    w = _chern_form_of(chern_D(M, h), M, k)
    return w.component(k, k) if diagonal else w


def chern_number(M: DbarSuperconnection, h: HermitianMetric, k: int) -> Fraction:
    """(1/k!) (i/2 pi)^k times the integral of the k-th trace form over
    the line model, with all pi and i bookkeeping exact.  The power zero
    returns the super-rank."""
    if M.ring.kind != "p1":
        raise UnsupportedRingError("exact numbers live on the line model")
    if k < 0:
        raise ValueError("the power must be nonnegative")
    if k == 0:
        return Fraction(M.bundle.super_rank())
    top = chern_form(M, h, k).component(1, 1)
    area = PiRational(GR_ZERO)
    for (_dz, _dzbar), s in top.terms.items():
        area = area + integrate_p1(s)
    # dz wedge dzbar carries -2i times the area measure the integral uses
    value = area.coefficient * gr(0, -2)
    ik = GR_ONE
    for _ in range(k):
        ik = ik * GR_I
    value = value * ik.scale(Fraction(1, 2 ** k * factorial(k)))
    if k > 1:
        if value:
            raise MetricError(f"trace form {k} left a residual pi power")
        return Fraction(0)
    if value.im:
        raise MetricError(f"number for power {k} came out non-real: {value}")
    return value.re


# ---------------------------------------------------------------------------
# rescaling and variation laws
# ---------------------------------------------------------------------------

@dataclass
class RescaleReport:
    """Outcome of the exponent law checks for one rescaling."""

    t: Fraction
    k: int
    beta_levels: Tuple[int, ...]
    diagonal_levels: Tuple[int, ...]
    base_form: Form
    scaled_form: Form


def rescale_and_check(M: DbarSuperconnection, h: HermitianMetric, k: int,
                      t) -> RescaleReport:
    """Recompute the metric differential and trace form after scaling the
    degree-j metric block by t^j, and assert the exact exponent laws

        beta_i(t) = t^(i-1) beta_i,   w_k^(p,p)(t) = t^(p-k) w_k^(p,p).
    """
    t = Fraction(t)
    if not t:
        raise ValueError("the rescaling parameter must be nonzero")
    base = chern_D(M, h)
    scaled = chern_D(M, h.rescaled(t))
    levels = sorted({p for (p, _q, _r) in base.dee.tridegrees()}
                    | {p for (p, _q, _r) in scaled.dee.tridegrees()})
    for i in levels:
        if scaled.beta(i) != base.beta(i).scale(t ** (i - 1)):
            raise AssertionError(f"component {i} violates the exponent law")
    w0 = _chern_form_of(base, M, k)
    wt = _chern_form_of(scaled, M, k)
    diag = sorted({p for (p, _q) in w0.bidegrees()}
                  | {p for (p, _q) in wt.bidegrees()})
    for p in diag:
        if wt.component(p, p) != w0.component(p, p).scale(t ** (p - k)):
            raise AssertionError(f"the ({p},{p}) part violates the exponent law")
    return RescaleReport(t, k, tuple(levels), tuple(diag), w0, wt)


@dataclass
class VariationReport:
    """Outcome of the first-order variation checks for one perturbation."""

    k: int
    eps_form: Form
    potential: Form
    delta_dee: SuperOperator


def variation_check(M: DbarSuperconnection, h: HermitianMetric,
                    deltah: SuperOperator, k: int) -> VariationReport:
    """Deform the metric by h + eps h deltah in dual-number arithmetic and
    assert that the eps part of the k-th trace form is k dbar partial of
    the supertrace of deltah composed with the (k-1)-st curvature power,
    and that the differential moves by the commutator with deltah."""
    if M.ring.dual:
        raise UnsupportedRingError("perturb from the plain ring")
    base = chern_D(M, h)
    hp = h.perturbed(deltah)
    lifted = M.lift(hp.ring)
    bumped = chern_D(lifted, hp)
    expected = deltah.partial() + base.dee.bracket(deltah)
    if bumped.dee.eps_part() != expected:
        raise AssertionError("the differential variation is not the commutator")
    wk = _chern_form_of(bumped, lifted, k)
    eps_form = wk.eps_part()
    if k == 0:
        potential = Form.zero(M.ring)
    else:
        curv = _curvature_of(base, M)
        inner = deltah.compose(curv.power(k - 1)).supertrace()
        potential = inner.partial().dbar().scale(k)
    if eps_form != potential:
        raise AssertionError("the eps part of the trace form is not the "
                             "predicted double derivative")
    return VariationReport(k, eps_form, potential, bumped.dee.eps_part())


# ---------------------------------------------------------------------------
# bounded exactness witnesses
# ---------------------------------------------------------------------------

@dataclass
class WitnessReport:
    """A potential for a closed form, or the rank data showing none fits
    below the degree bound."""

    kind: str
    bound: int
    eta: Optional[Form]
    rank: int
    augmented_rank: int

    @property
    def found(self) -> bool:
        return self.eta is not None


def _monomial_pairs(nvars: int, bound: int) -> List[Tuple[tuple, tuple]]:
    def exps(slots: int, budget: int):
        if slots == 0:
            yield ()
            return
        for head in range(budget + 1):
            for rest in exps(slots - 1, budget - head):
                yield (head,) + rest
    out = []
    for a in exps(nvars, bound):
        for b in exps(nvars, bound - sum(a)):
            out.append((a, b))
    return out


def _witness_solve(w: Form, kind: str, bound: int):
    ring = w.ring
    n = ring.nvars
    apply_op = (lambda f: f.d()) if kind == "d" else (lambda f: f.partial().dbar())
    want = set(w.bidegrees())
    spots = set()
    for p in range(n + 1):
        for q in range(n + 1):
            if kind == "d":
                if (p + 1, q) in want or (p, q + 1) in want:
                    spots.add((p, q))
            elif (p + 1, q + 1) in want:
                spots.add((p, q))
    basis = []
    for (p, q) in sorted(spots):
        for dz in combinations(range(1, n + 1), p):
            for dzbar in combinations(range(1, n + 1), q):
                for a, b in _monomial_pairs(n, bound):
                    basis.append(Form.term(Scalar.monomial(ring, a, b), dz, dzbar))
    columns: Dict[tuple, Dict[int, GaussianRational]] = {}
    for idx, cand in enumerate(basis):
        for ij, s in apply_op(cand).terms.items():
            for key, c in s.terms.items():
                columns.setdefault((ij, key), {})[idx] = c
    rhs: Dict[tuple, GaussianRational] = {}
    for ij, s in w.terms.items():
        for key, c in s.terms.items():
            rhs[(ij, key)] = c
    rows = sorted(set(columns) | set(rhs), key=repr)
    system = [(columns.get(rk, {}), rhs.get(rk, GR_ZERO)) for rk in rows]
    report = solve_linear_report(system, order_key=lambda c: f"{c:09d}")
    if report.solution is None:
        return None, report
    eta = Form.zero(ring)
    for idx, v in sorted(report.solution.items()):
        eta = eta + basis[idx].scale(v)
    if apply_op(eta) != w:
        raise AssertionError("witness verification failed")
    return eta, report


def exactness_witness(w: Form, kind: str,
                      degree_bound: Optional[int] = None) -> WitnessReport:
    """Search the polynomial forms of bounded degree for a potential with
    d eta = w (kind 'd') or dbar partial eta = w (kind 'ddbar').

    Both differentials lower total monomial degree by exactly one, so the
    equation splits along the degree grading and any solvable instance is
    solvable within degree(w) plus the order of the operator.  A failure
    at or beyond that threshold is therefore a genuine non-exactness
    certificate, while a failure under a smaller caller-supplied bound is
    inconclusive and raises a truncation overflow telling the caller how
    far to raise the bound.
    """
    if w.ring.kind != "poly":
        raise UnsupportedRingError("witness search runs on the polynomial model")
    if w.ring.dual:
        raise UnsupportedRingError("witness search runs on the plain ring")
    if kind not in ("d", "ddbar"):
        raise ValueError(f"unknown witness kind {kind!r}")
    if w.is_zero():
        return WitnessReport(kind, 0, Form.zero(w.ring), 0, 0)
    settled = w.poly_degree() + (1 if kind == "d" else 2)
    bound = settled if degree_bound is None else degree_bound
    eta, report = _witness_solve(w, kind, bound)
    if eta is not None:
        return WitnessReport(kind, bound, eta, report.rank, report.augmented_rank)
    if bound < settled:
        raise TruncationOverflow(
            "witness search was cut off by the degree bound", bound,
            {"required": settled, "rank": report.rank,
             "augmented_rank": report.augmented_rank})
    return WitnessReport(kind, bound, None, report.rank, report.augmented_rank)
