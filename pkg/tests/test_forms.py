"""Form algebra tests: wedge signs, Dolbeault differentials, conjugation.

The conjugation and wedge signs are cross-checked against an independent
real-coordinate expansion (dz = dx + i dy, dzbar = dx - i dy) built inside
the test, so the sign conventions are pinned by something other than the
implementation itself."""

import itertools
import random
from fractions import Fraction

import pytest

from superconn.forms import Form, wedge
from superconn.scalars import GR_I, GR_ONE, GaussianRational, RingSpec, Scalar, gr

P1R = RingSpec.poly(1)
P2 = RingSpec.poly(2)
P3 = RingSpec.poly(3)
Q1 = RingSpec.p1()


def rand_gr(rng):
    return GaussianRational(Fraction(rng.randint(-2, 2)), Fraction(rng.randint(-2, 2)))


def rand_scalar(rng, ring, max_deg=2):
    s = Scalar.zero(ring)
    for _ in range(rng.randint(0, 2)):
        a = tuple(rng.randint(0, max_deg) for _ in range(ring.nvars))
        b = tuple(rng.randint(0, max_deg) for _ in range(ring.nvars))
        m = rng.randint(0, 2) if ring.kind == "p1" else 0
        s = s + Scalar.monomial(ring, a, b, m, rand_gr(rng))
    return s


def rand_form(rng, ring, max_gens=2):
    f = Form.zero(ring)
    n = ring.nvars
    for _ in range(rng.randint(0, 3)):
        I = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, min(max_gens, n)))))
        J = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, min(max_gens, n)))))
        f = f + Form.term(rand_scalar(rng, ring), I, J)
    return f


# -- real-coordinate oracle ----------------------------------------------

class RealForm:
    """Exterior algebra over generators x1,y1,..,xn,yn with GaussianRational
    coefficients; an independent model for sign conventions."""

    def __init__(self, terms=None):
        self.terms = {k: c for k, c in (terms or {}).items() if c}

    @staticmethod
    def gen(i):
        return RealForm({(i,): GR_ONE})

    @staticmethod
    def const(c):
        return RealForm({(): c})

    def __add__(self, other):
        t = dict(self.terms)
        for k, c in other.terms.items():
            acc = t.get(k)
            tot = c if acc is None else acc + c
            if tot:
                t[k] = tot
            elif acc is not None:
                del t[k]
        return RealForm(t)

    def scale(self, c):
        return RealForm({k: v * c for k, v in self.terms.items()})

    def wedge(self, other):
        out = RealForm()
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                merged = list(k1)
                sign = 1
                ok = True
                for g in k2:
                    pos = len(merged)
                    while pos > 0 and merged[pos - 1] > g:
                        pos -= 1
                        sign = -sign
                    if pos > 0 and merged[pos - 1] == g:
                        ok = False
                        break
                    merged.insert(pos, g)
                if ok:
                    out = out + RealForm({tuple(merged): (c1 * c2).scale(sign)})
        return out

    def conj(self):
        return RealForm({k: c.conj() for k, c in self.terms.items()})

    def __eq__(self, other):
        return self.terms == other.terms


def to_real(form: Form) -> RealForm:
    """Expand constant-coefficient generators dz_k = dx_k + i dy_k,
    dzbar_k = dx_k - i dy_k (coefficients must be constants)."""
    out = RealForm()
    for (I, J), s in form.terms.items():
        assert s.is_constant(), "oracle only handles constant coefficients"
        acc = RealForm.const(s.constant_value())
        for k in I:
            dx, dy = RealForm.gen(2 * k - 1), RealForm.gen(2 * k)
            acc = acc.wedge(dx + dy.scale(GR_I))
        for k in J:
            dx, dy = RealForm.gen(2 * k - 1), RealForm.gen(2 * k)
            acc = acc.wedge(dx + dy.scale(-GR_I))
        out = out + acc
    return out


def test_wedge_square_zero_and_sign():
    a = Form.dz(P2, 1)
    assert a.wedge(a).is_zero()
    b = Form.dzbar(P2, 2)
    # supercommutativity of odd generators
    assert a.wedge(b) == -(b.wedge(a))


def test_wedge_example_reordering():
    # (dzbar2) wedge (dz1) = -dz1 wedge dzbar2
    lhs = Form.dzbar(P2, 2).wedge(Form.dz(P2, 1))
    rhs = Form.term(Scalar.const(P2, -1), (1,), (2,))
    assert lhs == rhs


def test_wedge_against_real_oracle():
    rng = random.Random(5)
    for _ in range(80):
        n = rng.choice((1, 2, 3))
        ring = RingSpec.poly(n)

        def const_form():
            f = Form.zero(ring)
            for _ in range(rng.randint(1, 2)):
                I = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, n))))
                J = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, n))))
                f = f + Form.term(Scalar.const(ring, rand_gr(rng)), I, J)
            return f

        a, b = const_form(), const_form()
        assert to_real(a.wedge(b)) == to_real(a).wedge(to_real(b))


def test_conj_against_real_oracle():
    # conj(dz1 wedge dzbar2) = -dz2 wedge dzbar1, and generally conjugation
    # must agree with complex conjugation of the real-coordinate expansion.
    lhs = Form.term(Scalar.one(P2), (1,), (2,)).conj()
    assert lhs == Form.term(Scalar.const(P2, -1), (2,), (1,))
    rng = random.Random(9)
    for _ in range(60):
        n = rng.choice((1, 2, 3))
        ring = RingSpec.poly(n)
        f = Form.zero(ring)
        for _ in range(2):
            I = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, n))))
            J = tuple(sorted(rng.sample(range(1, n + 1), rng.randint(0, n))))
            f = f + Form.term(Scalar.const(ring, rand_gr(rng)), I, J)
        assert to_real(f.conj()) == to_real(f).conj()


def test_wedge_supercommutative_random():
    rng = random.Random(21)
    for _ in range(200):
        ring = rng.choice((P2, P3, Q1))
        a, b = rand_form(rng, ring), rand_form(rng, ring)
        for pa, qa, ha in a.homogeneous_parts():
            for pb, qb, hb in b.homogeneous_parts():
                sign = -1 if ((pa + qa) * (pb + qb)) % 2 else 1
                assert ha.wedge(hb) == hb.wedge(ha).scale(sign)


def test_wedge_associative_random():
    rng = random.Random(22)
    for _ in range(100):
        ring = rng.choice((P2, Q1))
        a, b, c = (rand_form(rng, ring) for _ in range(3))
        assert a.wedge(b).wedge(c) == a.wedge(b.wedge(c))


def test_dbar_example():
    # dbar(zbar2^2 dz1) = -2 zbar2 dz1 wedge dzbar2
    s = Scalar.monomial(P2, (0, 0), (0, 2))
    f = Form.term(s, (1,), ())
    expect = Form.term(Scalar.monomial(P2, (0, 0), (0, 1), c=gr(-2)), (1,), (2,))
    assert f.dbar() == expect


def test_differentials_square_zero():
    rng = random.Random(31)
    for _ in range(80):
        ring = rng.choice((P2, P3, Q1))
        f = rand_form(rng, ring)
        assert f.partial().partial().is_zero()
        assert f.dbar().dbar().is_zero()
        assert f.d().d().is_zero()
        # partial and dbar anticommute
        assert f.partial().dbar() == -(f.dbar().partial())


def test_leibniz():
    rng = random.Random(37)
    for _ in range(80):
        ring = rng.choice((P2, Q1))
        a, b = rand_form(rng, ring), rand_form(rng, ring)
        for p, q, ha in a.homogeneous_parts():
            sign = -1 if (p + q) % 2 else 1
            assert (ha.wedge(b)).dbar() == ha.dbar().wedge(b) + ha.wedge(b.dbar()).scale(sign)
            assert (ha.wedge(b)).d() == ha.d().wedge(b) + ha.wedge(b.d()).scale(sign)


def test_conj_intertwines_differentials():
    rng = random.Random(41)
    for _ in range(60):
        ring = rng.choice((P2, P3, Q1))
        f = rand_form(rng, ring)
        assert f.dbar().conj() == f.conj().partial()
        assert f.conj().conj() == f


def test_component_projection():
    rng = random.Random(43)
    for _ in range(40):
        f = rand_form(rng, P2)
        total = Form.zero(P2)
        for p in range(3):
            for q in range(3):
                total = total + f.component(p, q)
        assert total == f


def test_top_degree_truncation():
    # on n variables a (0, n+1)-form is zero
    f = Form.term(Scalar.one(P2), (), (1, 2))
    assert f.wedge(Form.dzbar(P2, 1)).is_zero()
