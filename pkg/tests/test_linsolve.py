"""Exact linear algebra checks, self-validating plus a hand example."""

import random
from fractions import Fraction

from superconn.linsolve import (Eliminator, kernel_basis, rank_of,
                                solve_linear, solve_linear_report)
from superconn.scalars import GR_ONE, GR_ZERO, GaussianRational, gr


def rand_gr(rng):
    return GaussianRational(Fraction(rng.randint(-4, 4), rng.randint(1, 3)),
                            Fraction(rng.randint(-2, 2), 1))


def eval_row(coeffs, x):
    tot = GR_ZERO
    for c, v in coeffs.items():
        xv = x.get(c)
        if xv:
            tot = tot + v * xv
    return tot


def test_hand_example():
    # x + 2y = 5, 3x - y = 1  =>  x = 1, y = 2
    eqs = [({"x": gr(1), "y": gr(2)}, 5),
           ({"x": gr(3), "y": gr(-1)}, 1)]
    sol = solve_linear(eqs)
    assert sol == {"x": gr(1), "y": gr(2)}


def test_inconsistent_reports_ranks():
    eqs = [({"x": gr(1), "y": gr(1)}, 1),
           ({"x": gr(2), "y": gr(2)}, 3)]
    rep = solve_linear_report(eqs)
    assert rep.solution is None
    assert not rep.consistent
    assert rep.rank == 1 and rep.augmented_rank == 2


def test_random_consistent_systems():
    for seed in range(25):
        rng = random.Random(900 + seed)
        cols = [f"u{i}" for i in range(rng.randint(1, 6))]
        x0 = {c: rand_gr(rng) for c in cols}
        eqs = []
        for _ in range(rng.randint(1, 8)):
            coeffs = {c: rand_gr(rng) for c in cols if rng.random() < 0.7}
            eqs.append((coeffs, eval_row(coeffs, x0)))
        sol = solve_linear(eqs)
        assert sol is not None
        for coeffs, rhs in eqs:
            assert eval_row(coeffs, sol) == rhs


def test_kernel_basis_properties():
    for seed in range(25):
        rng = random.Random(1700 + seed)
        cols = [f"v{i}" for i in range(rng.randint(2, 6))]
        eqs = []
        for _ in range(rng.randint(1, 5)):
            eqs.append({c: rand_gr(rng) for c in cols if rng.random() < 0.6})
        basis = kernel_basis(eqs, cols)
        for vec in basis:
            for coeffs in eqs:
                assert not eval_row(coeffs, vec)
        # rank-nullity over the listed unknowns
        restricted = [{c: v for c, v in e.items() if c in cols} for e in eqs]
        assert rank_of(restricted) + len(basis) == len(cols)
        assert rank_of(basis) == len(basis)


def test_eliminator_reduce_membership():
    elim = Eliminator()
    rows = [{"a": gr(1), "b": gr(2)}, {"b": gr(1), "c": gr(-1)}]
    for r in rows:
        elim.insert(dict(r))
    # combination of the two rows reduces to nothing
    combo = {"a": gr(2), "b": gr(5), "c": gr(-1)}
    assert elim.contains(combo)
    assert not elim.contains({"a": GR_ONE})
    assert elim.rank() == 2
