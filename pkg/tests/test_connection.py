"""Superconnection structure checks.

The squared differential is pinned against a brute-force expansion on
random sections, and the gauge action is pinned against the exact
component transformation laws, which are worked out independently of the
implementation.
"""

import random
from fractions import Fraction
from math import comb

import pytest

from superconn import gen
from superconn.connection import (DbarSuperconnection, FlatnessError,
                                  GradingError, ObstructionError,
                                  PreconditionError, complete_to_flat,
                                  compose_parameters, cone, direct_sum,
                                  flatness_residues, gauge, h0_hom,
                                  hom_connection, is_chain_map, mc_residue,
                                  shift_connection, twist)
from superconn.forms import Form
from superconn.scalars import RingSpec, Scalar
from superconn.supermodule import GradedBundle, SuperOperator

P2 = RingSpec.poly(2)
P3 = RingSpec.poly(3)


def test_koszul_is_flat():
    for ring in (P2, P3):
        k = gen.koszul_connection(ring)
        assert k.is_flat()
        assert k.is_holomorphic_complex()
        assert k.bundle.rank(1) == ring.nvars


def test_square_matches_brute_force_on_sections():
    for seed in range(12):
        rng = random.Random(4000 + seed)
        base = gen.rand_complex(rng, P2)
        phi = gen.rand_parameter(rng, base)
        conn = gauge(base, phi)
        # perturb one block so the squared differential is nonzero too
        bundle = conn.bundle
        degs = bundle.degrees()
        j = degs[rng.randrange(len(degs))]
        noise = SuperOperator.single_entry(
            P2, bundle, bundle, 0, j, 0, 0,
            Form.term(gen.rand_poly(rng, P2), (), (rng.randint(1, 2),)))
        dirty = DbarSuperconnection(P2, bundle, conn.coeff + noise)
        sq = dirty.square_operator()
        s = gen.rand_section(rng, dirty)
        twice = dirty.dbar_apply(dirty.dbar_apply(s))
        assert twice == sq.apply(s)


def test_flatness_residue_ladder():
    rng = random.Random(77)
    base = gen.rand_complex(rng, P2)
    conn = gauge(base, gen.rand_parameter(rng, base))
    assert conn.is_flat()
    assert flatness_residues(conn) == {}
    gm = conn.gamma()
    a = conn.connection_form()
    b2 = conn.component(2)
    # assemble the residues from components by hand
    assert gm.compose(gm).is_zero()
    assert (gm.dbar() + gm.compose(a) + a.compose(gm)).is_zero()
    assert (a.dbar() + a.compose(a) + gm.compose(b2) + b2.compose(gm)).is_zero()


def test_gauge_of_flat_is_flat_and_group_action():
    for seed in range(10):
        rng = random.Random(8100 + seed)
        base = gen.rand_complex(rng, P2)
        p1 = gen.rand_parameter(rng, base, deg=1)
        p2 = gen.rand_parameter(rng, base, deg=1)
        g1 = gauge(base, p1)
        assert g1.is_flat()
        step = gauge(g1, p2)
        combined = gauge(base, compose_parameters(p1, p2))
        assert step == combined
        back = gauge(g1, p1.inverse())
        assert back == base


def test_gauge_component_transformation_laws():
    half = Fraction(1, 2)
    for seed in range(12):
        rng = random.Random(913 + seed)
        base = gen.rand_complex(rng, P2)
        conn = gauge(base, gen.rand_parameter(rng, base))
        phi = gen.rand_parameter(rng, conn)
        out = gauge(conn, phi)
        gm, a = conn.gamma(), conn.connection_form()
        f1, f2 = phi.level(1), phi.level(2)
        assert out.gamma() == gm
        assert out.connection_form() == a + gm.bracket(f1)
        quad = (gm.compose(f1).compose(f1)
                + f1.compose(f1).compose(gm)).scale(half) \
            - f1.compose(gm).compose(f1)
        expect_b2 = (conn.component(2) + gm.bracket(f2) + quad
                     + f1.dbar() + a.bracket(f1))
        assert out.component(2) == expect_b2


def test_twist_by_gauge_difference():
    conn = None
    for seed in range(8):
        rng = random.Random(6200 + seed)
        base = gen.rand_complex(rng, P2)
        conn = gauge(base, gen.rand_parameter(rng, base, deg=1))
        alpha = gen.rand_twist_cochain(rng, conn)
        assert mc_residue(conn, alpha).is_zero()
        assert twist(conn, alpha).is_flat()
    bad = SuperOperator.single_entry(
        P2, conn.bundle, conn.bundle, 0,
        conn.bundle.degrees()[0], 0, 0, Form.dzbar(P2, 1))
    if not mc_residue(conn, bad).is_zero():
        with pytest.raises(FlatnessError):
            twist(conn, bad)


def test_direct_sum_structure():
    rng = random.Random(31)
    c1 = gen.rand_complex(rng, P2)
    c2 = gen.rand_complex(rng, P2)
    ds = direct_sum(c1, c2)
    assert ds.conn.is_flat()
    assert ds.proj_first.compose(ds.incl_first) == SuperOperator.identity(
        P2, c1.bundle)
    assert ds.proj_second.compose(ds.incl_first).is_zero()
    assert ds.conn.coeff.compose(ds.incl_first) == ds.incl_first.compose(c1.coeff)
    total = (ds.incl_first.compose(ds.proj_first)
             + ds.incl_second.compose(ds.proj_second))
    assert total == SuperOperator.identity(P2, ds.conn.bundle)


def test_shift_connection_signs_and_flatness():
    for seed in range(8):
        rng = random.Random(411 + seed)
        base = gen.rand_complex(rng, P2)
        conn = gauge(base, gen.rand_parameter(rng, base))
        for k in (1, 2, -1):
            sh = shift_connection(conn, k)
            assert sh.is_flat()
            assert sh.bundle == conn.bundle.shift(k)
            assert sh.gamma() == (conn.gamma().shift(k) if k % 2 == 0
                                  else -conn.gamma().shift(k))
            assert sh.connection_form() == conn.connection_form().shift(k)
        assert shift_connection(shift_connection(conn, 1), -1) == conn


def test_cone_of_identity_and_chain_maps():
    rng = random.Random(555)
    base = gen.rand_complex(rng, P2)
    conn = gauge(base, gen.rand_parameter(rng, base, deg=1))
    ident = SuperOperator.identity(P2, conn.bundle)
    assert is_chain_map(ident, conn, conn)
    c = cone(ident, conn, conn)
    assert c.conn.is_flat()
    other = gen.rand_complex(rng, P2)
    zero = SuperOperator.zero(P2, conn.bundle, other.bundle)
    cz = cone(zero, conn, other)
    assert cz.conn.is_flat()
    bad = SuperOperator.single_entry(
        P2, conn.bundle, conn.bundle, 0, conn.bundle.degrees()[0], 0, 0,
        Form.from_scalar(Scalar.variable(P2, 1, True)))
    assert not is_chain_map(bad, conn, conn)
    with pytest.raises(FlatnessError):
        cone(bad, conn, conn)


def test_hom_connection_flat_for_flat_arguments():
    for seed in range(6):
        rng = random.Random(7210 + seed)
        mb = gen.rand_complex(rng, P2)
        m = gauge(mb, gen.rand_parameter(rng, mb, deg=1))
        nb = gen.rand_complex(rng, P2)
        n = gauge(nb, gen.rand_parameter(rng, nb, deg=1))
        h, _basis = hom_connection(m, n)
        assert h.is_flat()
        assert h.bundle.total_rank() == sum(
            m.bundle.rank(j) * n.bundle.rank(j + k)
            for k in h.bundle.degrees() for j in m.bundle.degrees())


def test_hom_differential_matches_operator_bracket():
    rng = random.Random(99)
    m = gen.rand_complex(rng, P2)
    n = gauge(m, gen.rand_parameter(rng, m, deg=1))
    h, basis = hom_connection(m, n)
    sec = gen.rand_section(rng, h)
    # reading sections back as operators turns the hom differential into
    # the graded commutator with the two coefficients
    op = basis.to_operator(P2, sec)
    image = basis.to_operator(P2, h.dbar_apply(sec))
    direct = op.dbar() + n.coeff.compose(op)
    for (p, q, r), piece in op.homogeneous_parts():
        tail = piece.compose(m.coeff)
        direct = direct + (tail if (p + q + r) % 2 else -tail)
    assert image == direct


def test_h0_hom_counts_polynomial_maps():
    unit2 = gen.unit_connection(P2)
    for d in (0, 1, 2, 3):
        res = h0_hom(unit2, unit2, d)
        assert res.dimension == comb(2 + d, 2)
    unit3 = gen.unit_connection(P3)
    assert h0_hom(unit3, unit3, 2).dimension == comb(3 + 2, 3)


def test_h0_hom_shifted_target_vanishes():
    unit = gen.unit_connection(P2)
    assert h0_hom(unit, shift_connection(unit, 1), 2).dimension == 0


def test_h0_hom_koszul_endomorphisms():
    k2 = gen.koszul_connection(P2)
    assert h0_hom(k2, k2, 2).dimension == 1
    assert h0_hom(k2, k2, 3).dimension == 1


def test_h0_hom_two_term_quotient():
    # maps from the free line to the complex presenting the quotient by a
    # power of the first coordinate: classes of polynomial degree at most
    # three, reduced modulo that power
    for kdeg in (1, 2):
        target = gen.two_term_connection(
            P2, Scalar.variable(P2, 1) ** kdeg, base_degree=-1)
        res = h0_hom(gen.unit_connection(P2), target, 3)
        assert res.dimension == comb(2 + 3, 2) - comb(2 + 3 - kdeg, 2)


def test_completion_recovers_flatness():
    good = 0
    for seed in range(12):
        rng = random.Random(2026 + seed)
        truncated, witness = gen.rand_completion_instance(rng, P2)
        if truncated.is_flat():
            continue
        good += 1
        result = complete_to_flat(truncated)
        assert result.conn.is_flat()
        assert result.conn.gamma() == witness.gamma()
        assert result.conn.connection_form() == witness.connection_form()
        assert set(result.added) <= {2}
    assert good >= 4


def test_completion_three_variables():
    rng = random.Random(5150)
    while True:
        truncated, _witness = gen.rand_completion_instance(rng, P3, deg=1)
        if not truncated.is_flat():
            break
    result = complete_to_flat(truncated)
    assert result.conn.is_flat()


def test_completion_obstruction_detected():
    bundle = GradedBundle({0: 1})
    a = SuperOperator.single_entry(
        P2, bundle, bundle, 0, 0, 0, 0,
        Form.term(Scalar.variable(P2, 1, True), (), (2,)))
    conn = DbarSuperconnection.from_components(P2, bundle, a=a)
    with pytest.raises(ObstructionError):
        complete_to_flat(conn)


def test_completion_precondition_checks():
    bundle = GradedBundle({0: 1, 1: 1})
    # differential that is not holomorphic
    gm = SuperOperator.single_entry(
        P2, bundle, bundle, 1, 0, 0, 0,
        Form.from_scalar(Scalar.variable(P2, 1, True)))
    conn = DbarSuperconnection.from_components(P2, bundle, gamma=gm)
    with pytest.raises(PreconditionError):
        complete_to_flat(conn)
    # connection form that does not commute with the differential
    gm2 = SuperOperator.single_entry(
        P2, bundle, bundle, 1, 0, 0, 0,
        Form.from_scalar(Scalar.variable(P2, 1)))
    a2 = SuperOperator.single_entry(
        P2, bundle, bundle, 0, 0, 0, 0,
        Form.term(Scalar.variable(P2, 2, True), (), (1,)))
    conn2 = DbarSuperconnection.from_components(P2, bundle, gamma=gm2, a=a2)
    assert not conn2.residue(1).is_zero()
    with pytest.raises(PreconditionError):
        complete_to_flat(conn2)


def test_from_components_shape_validation():
    bundle = GradedBundle({0: 1, 1: 1})
    a = SuperOperator.single_entry(
        P2, bundle, bundle, 0, 0, 0, 0,
        Form.term(Scalar.one(P2), (), (1,)))
    with pytest.raises(GradingError):
        DbarSuperconnection.from_components(P2, bundle, gamma=a)
    bad = SuperOperator.single_entry(
        P2, bundle, bundle, 0, 0, 0, 0, Form.dz(P2, 1))
    with pytest.raises(GradingError):
        DbarSuperconnection(P2, bundle, bad)
