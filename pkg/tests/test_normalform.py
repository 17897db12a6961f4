"""Elimination and normalization checks.

The round-trip oracle: gauging a holomorphic complex by a parameter in
the supported class and normalizing must return a connection with no
levels above the connection form, together with a parameter that
reproduces it exactly from the input.
"""

import random

import pytest

from superconn import gen
from superconn.connection import (DbarSuperconnection, GaugeParameter,
                                  PreconditionError, gauge)
from superconn.forms import Form
from superconn.normalform import (NormalizationCertificate,
                                  eliminate_variable, normalize)
from superconn.scalars import RingSpec, Scalar, UnsupportedRingError
from superconn.supermodule import GradedBundle, SuperOperator

P2 = RingSpec.poly(2)
P3 = RingSpec.poly(3)


def assert_normal(cert: NormalizationCertificate,
                  conn: DbarSuperconnection) -> None:
    assert all(q <= 1 for q in cert.normal.q_levels())
    assert cert.normal.is_flat()
    assert cert.normal.gamma() == conn.gamma()
    assert gauge(conn, cert.phi_total) == cert.normal


def test_normalize_trivial_on_complexes():
    for ring in (P2, P3):
        k = gen.koszul_connection(ring)
        cert = normalize(k)
        assert cert.phi_total.is_zero()
        assert cert.normal == k


def test_normalize_round_trip_two_variables():
    done = 0
    for seed in range(14):
        rng = random.Random(600 + seed)
        conn, base, phi = gen.rand_gauged_instance(
            rng, P2, first_variable_only=True)
        if phi.is_zero():
            continue
        done += 1
        cert = normalize(conn)
        assert_normal(cert, conn)
        assert cert.normal.gamma() == base.gamma()
    assert done >= 10


def test_normalize_round_trip_three_variables():
    # seeds picked so both higher levels are present before normalization
    for seed in (5, 35, 77, 93):
        rng = random.Random(seed)
        conn, base, phi = gen.rand_gauged_instance(
            rng, P3, first_variable_only=True, deg=2)
        assert not conn.component(2).is_zero()
        assert not conn.component(3).is_zero()
        cert = normalize(conn)
        assert_normal(cert, conn)
        assert cert.normal.gamma() == base.gamma()


def test_eliminate_variable_is_a_no_op_on_clean_input():
    conn = gen.koszul_connection(P2)
    out, phi = eliminate_variable(conn, 2)
    assert phi.is_zero()
    assert out == conn


def test_eliminate_single_variable_cleans_only_that_one():
    # parameter whose level-one part avoids the last generator, so the
    # connection form stays admissible, but whose level-two part uses it
    rng = random.Random(12)
    base = gen.koszul_connection(P3)
    bundle = base.bundle
    entries = []
    for j in bundle.degrees():
        if bundle.rank(j - 1):
            entries.append((-1, j, 0, 0,
                            Form.term(gen.rand_poly(rng, P3, deg=1), (), (2,))))
        if bundle.rank(j - 2):
            entries.append((-2, j, 0, 0,
                            Form.term(gen.rand_poly(rng, P3, deg=1), (), (1, 3))))
    phi = GaugeParameter(SuperOperator.build(P3, bundle, bundle, entries))
    conn = gauge(base, phi)
    dirty = False
    for q in conn.q_levels():
        if q >= 1:
            for (_pp, _qq, _rr), mats in conn.component(q).blocks.items():
                for _j, mat in mats.items():
                    for rowvec in mat:
                        for form in rowvec:
                            dirty = dirty or any(
                                3 in key[1] for key in form.terms)
    assert dirty
    out, step = eliminate_variable(conn, 3)
    assert out.is_flat()
    assert gauge(conn, step) == out
    for q in out.q_levels():
        if q >= 1:
            for (_pp, _qq, _rr), mats in out.component(q).blocks.items():
                for _j, mat in mats.items():
                    for rowvec in mat:
                        for form in rowvec:
                            assert all(3 not in key[1] for key in form.terms)


def test_connection_form_in_last_variable_is_rejected():
    # gauging a two-term complex by a parameter whose level-one part
    # carries the last generator pushes that generator into the
    # connection form, which no strict polynomial gauge can remove
    bundle = GradedBundle({0: 1, 1: 1})
    gm = SuperOperator.single_entry(
        P2, bundle, bundle, 1, 0, 0, 0,
        Form.from_scalar(Scalar.variable(P2, 1)))
    base = DbarSuperconnection.from_components(P2, bundle, gamma=gm)
    phi = GaugeParameter(SuperOperator.single_entry(
        P2, bundle, bundle, -1, 1, 0, 0,
        Form.term(Scalar.variable(P2, 1, True), (), (2,))))
    conn = gauge(base, phi)
    assert conn.is_flat()
    with pytest.raises(PreconditionError):
        normalize(conn)
    with pytest.raises(PreconditionError):
        eliminate_variable(conn, 2)


def test_eliminate_rejects_bad_inputs():
    conn = gen.koszul_connection(P2)
    with pytest.raises(PreconditionError):
        eliminate_variable(conn, 1)
    with pytest.raises(PreconditionError):
        eliminate_variable(conn, 3)
    bundle = conn.bundle
    noise = SuperOperator.single_entry(
        P2, bundle, bundle, 0, 0, 0, 0,
        Form.term(Scalar.variable(P2, 1, True), (), (1,)))
    bent = DbarSuperconnection(P2, bundle, conn.coeff + noise)
    if not bent.is_flat():
        with pytest.raises(PreconditionError):
            eliminate_variable(bent, 2)
    with pytest.raises(UnsupportedRingError):
        normalize(gen.unit_connection(RingSpec.p1()))


def test_normalize_keeps_connection_form_when_unremovable():
    # the normal form may legitimately retain a first-generator
    # connection form; only the higher levels are guaranteed to vanish
    rng = random.Random(3344)
    found = False
    for _ in range(20):
        conn, base, phi = gen.rand_gauged_instance(
            rng, P2, first_variable_only=True)
        cert = normalize(conn)
        assert_normal(cert, conn)
        if not cert.normal.connection_form().is_zero():
            found = True
            break
    assert found
