"""Strict-gauge elimination of the higher coefficient levels.

One antiholomorphic direction is cleaned at a time, from the last index
down to the second.  Within one direction the levels are repaired in
ascending order: the repair parameter at level k is the canonical
antiderivative of the offending part of level k + 1, so each stage is a
single exact cancellation and no linear solving is involved.  What makes
the recursion close up is that a repair never reintroduces the direction
being cleaned: the connection form is required to be free of it, and
every pollution term produced by the gauge action is then free of it as
well.  Once the direction carries no generator anywhere, flatness forces
the coefficients to be independent of the conjugate variable too.

After all passes only the differential and the connection form survive,
because a form of antiholomorphic degree two or more cannot live on a
single remaining generator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .connection import (DbarSuperconnection, GaugeParameter,
                         PreconditionError, compose_parameters, gauge)
from .forms import Form
from .scalars import UnsupportedRingError
from .supermodule import SuperOperator


def _uses_dzbar(op: SuperOperator, m: int) -> bool:
    """Whether any entry of the operator carries the m-th antiholomorphic
    generator."""
    for (_p, _q, _r), mats in op.blocks.items():
        for _j, mat in mats.items():
            for rowvec in mat:
                for form in rowvec:
                    for (_dz, dzbar) in form.terms:
                        if m in dzbar:
                            return True
    return False


def _depends_on_zbar(op: SuperOperator, m: int) -> bool:
    """Whether any coefficient depends on the m-th conjugate variable."""
    i = m - 1
    for (_p, _q, _r), mats in op.blocks.items():
        for _j, mat in mats.items():
            for rowvec in mat:
                for form in rowvec:
                    for s in form.terms.values():
                        for (_a, b, _mp, _e) in s.terms:
                            if b[i]:
                                return True
    return False


def eliminate_variable(conn: DbarSuperconnection,
                       m: int) -> tuple[DbarSuperconnection, GaugeParameter]:
    """Gauge away every occurrence of the m-th antiholomorphic generator
    from the levels above the connection form, m >= 2.

    The connection form itself must be free of that generator: removing a
    generator from level one would mean trivializing a one-variable
    antiholomorphic connection, whose solution leaves the polynomial
    coefficients, so such inputs are rejected.
    """
    ring = conn.ring
    if ring.kind != "poly":
        raise UnsupportedRingError("elimination runs on the polynomial model")
    if not 2 <= m <= ring.nvars:
        raise PreconditionError(
            f"variable index {m} is not eliminable; the first generator "
            "carries the residual connection")
    if not conn.is_flat():
        raise PreconditionError("elimination needs a flat superconnection")
    if _uses_dzbar(conn.connection_form(), m):
        raise PreconditionError(
            f"the connection form carries the generator conj(dz_{m}); "
            "this input is outside the exactly solvable class")
    bundle = conn.bundle
    current = conn
    total = GaugeParameter.zero(ring, bundle)
    for k in range(1, ring.nvars):
        beta = current.component(k + 1)
        repairs: dict = {}
        for (_p, _q, _r), mats in beta.blocks.items():
            for j, mat in mats.items():
                for row, rowvec in enumerate(mat):
                    for col, form in enumerate(rowvec):
                        for (dz, dzbar), s in form.terms.items():
                            if m not in dzbar:
                                continue
                            rest = tuple(x for x in dzbar if x != m)
                            # moving the new generator past the remaining
                            # ones costs the merge sign
                            sigma = -1 if sum(1 for x in rest if x < m) % 2 else 1
                            f = s.antideriv_zbar(m).scale(-sigma)
                            key = (j, row, col)
                            repairs[key] = repairs.get(key, Form.zero(ring)) \
                                + Form.term(f, dz, rest)
        if not repairs:
            continue
        phi = GaugeParameter(SuperOperator.build(
            ring, bundle, bundle,
            [(-k, j, row, col, f) for (j, row, col), f in repairs.items()]))
        current = gauge(current, phi)
        total = compose_parameters(total, phi)
        assert not _uses_dzbar(current.component(k + 1), m), \
            "stage cancellation was not exact"
    for q in current.q_levels():
        if q >= 1:
            assert not _uses_dzbar(current.component(q), m), \
                "a cleaned level regained the eliminated generator"
    assert not _depends_on_zbar(current.coeff, m), \
        "flatness failed to force out the conjugate variable"
    return current, total


@dataclass
class NormalizationCertificate:
    """Outcome of the full elimination, with the composed parameter.

    The gauge equation relating the input to the normal form is
    re-verified by direct computation before this object is returned, so
    holding one is proof that the normal form is strictly gauge
    equivalent to the input.
    """

    phi_total: GaugeParameter
    normal: DbarSuperconnection


def normalize(conn: DbarSuperconnection) -> NormalizationCertificate:
    """Strictly gauge the superconnection until only the differential and
    the connection form remain, one variable at a time from the last."""
    ring = conn.ring
    if ring.kind != "poly":
        raise UnsupportedRingError("normalization runs on the polynomial model")
    if not conn.is_flat():
        raise PreconditionError("normalization needs a flat superconnection")
    current = conn
    total = GaugeParameter.zero(ring, conn.bundle)
    for m in range(ring.nvars, 1, -1):
        current, step = eliminate_variable(current, m)
        total = compose_parameters(total, step)
    for q in current.q_levels():
        if q >= 2:
            raise AssertionError("a higher level survived normalization")
    gamma = current.gamma()
    assert gamma.compose(gamma).is_zero()
    assert current.residue(1).is_zero()
    assert current.residue(2).is_zero()
    if gauge(conn, total) != current:
        raise AssertionError("the composed parameter fails the gauge equation")
    return NormalizationCertificate(phi_total=total, normal=current)
