"""Seeded instance generators used by the tests and the command line.

Everything takes an explicit random.Random so runs are reproducible from a
seed alone.  Complexes are assembled from unit, two-term, and full Koszul
blocks; gauge parameters come in a general flavor and in the restricted
flavor every one of whose terms carries the first antiholomorphic
generator, which is the class the normalization pipeline accepts.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from typing import List, Tuple

from .connection import (DbarSuperconnection, GaugeParameter, direct_sum,
                         from_complex, gauge)
from .forms import Form
from .scalars import GaussianRational, RingSpec, Scalar
from .supermodule import GradedBundle, Section, SuperOperator


def rand_gr(rng: random.Random, span: int = 3,
            denominators: Tuple[int, ...] = (1, 1, 2)) -> GaussianRational:
    return GaussianRational(
        Fraction(rng.randint(-span, span), rng.choice(denominators)),
        Fraction(rng.randint(-span, span), rng.choice(denominators)))


def rand_gr_nonzero(rng: random.Random, span: int = 3) -> GaussianRational:
    while True:
        c = rand_gr(rng, span)
        if c:
            return c


def rand_poly(rng: random.Random, ring: RingSpec, deg: int = 2,
              terms: int = 3, holomorphic: bool = False) -> Scalar:
    s = Scalar.zero(ring)
    for _ in range(rng.randint(1, terms)):
        budget = rng.randint(0, deg)
        a = _split_exponents(rng, ring.nvars, budget)
        if holomorphic:
            b = (0,) * ring.nvars
        else:
            b = _split_exponents(rng, ring.nvars, rng.randint(0, deg - budget)
                                 if deg > budget else 0)
        s = s + Scalar.monomial(ring, a, b, 0, rand_gr(rng, 2))
    return s


def _split_exponents(rng: random.Random, nvars: int, budget: int) -> tuple:
    out = [0] * nvars
    for _ in range(budget):
        out[rng.randrange(nvars)] += 1
    return tuple(out)


# -- holomorphic complexes ----------------------------------------------------


def koszul_connection(ring: RingSpec, base_degree: int = 0) -> DbarSuperconnection:
    """The complex contracting the coordinate ideal: exterior powers of the
    free module, with the differential inserting the coordinate covector."""
    n = ring.nvars
    subsets: List[List[tuple]] = []
    for size in range(n + 1):
        subsets.append([tuple(c) for c in combinations(range(1, n + 1), size)])
    ranks = {base_degree + size: len(subsets[size]) for size in range(n + 1)}
    bundle = GradedBundle(ranks)
    diffs = {}
    for size in range(n):
        src, tgt = subsets[size], subsets[size + 1]
        mat = [[Scalar.zero(ring) for _ in src] for _ in tgt]
        for col, s_key in enumerate(src):
            for i in range(1, n + 1):
                if i in s_key:
                    continue
                merged = tuple(sorted(s_key + (i,)))
                sign = (-1) ** sum(1 for x in s_key if x < i)
                row = tgt.index(merged)
                mat[row][col] = mat[row][col] + Scalar.variable(ring, i).scale(sign)
        diffs[base_degree + size] = mat
    return from_complex(ring, bundle, diffs)


def unit_connection(ring: RingSpec, degree: int = 0,
                    rank: int = 1) -> DbarSuperconnection:
    bundle = GradedBundle({degree: rank})
    return DbarSuperconnection(
        ring, bundle, SuperOperator.zero(ring, bundle, bundle))


def two_term_connection(ring: RingSpec, s: Scalar,
                        base_degree: int = 0) -> DbarSuperconnection:
    bundle = GradedBundle({base_degree: 1, base_degree + 1: 1})
    return from_complex(ring, bundle, {base_degree: [[s]]})


def rand_complex(rng: random.Random, ring: RingSpec,
                 max_blocks: int = 2) -> DbarSuperconnection:
    """Direct sum of a few holomorphic blocks with bounded ranks."""
    blocks = []
    for _ in range(rng.randint(1, max_blocks)):
        kind = rng.random()
        shift = rng.randint(-1, 1)
        if kind < 0.3:
            blocks.append(unit_connection(ring, degree=shift))
        elif kind < 0.75 or ring.nvars > 2:
            p = rand_poly(rng, ring, deg=2, terms=2, holomorphic=True)
            if not p:
                p = Scalar.variable(ring, 1)
            blocks.append(two_term_connection(ring, p, base_degree=shift))
        else:
            blocks.append(koszul_connection(ring, base_degree=shift))
    conn = blocks[0]
    for extra in blocks[1:]:
        conn = direct_sum(conn, extra).conn
    return conn


# -- gauge parameters ---------------------------------------------------------


def rand_parameter(rng: random.Random, conn: DbarSuperconnection,
                   deg: int = 2, density: float = 0.6,
                   first_variable_only: bool = False) -> GaugeParameter:
    """Strict parameter on the bundle of the given connection.  With
    first_variable_only every term is a multiple of the first
    antiholomorphic generator, the class the normalizer accepts."""
    ring = conn.ring
    bundle = conn.bundle
    n = ring.nvars
    entries = []
    for k in range(1, n + 1):
        if first_variable_only:
            keys = [(1,) + tuple(c) for c in combinations(range(2, n + 1), k - 1)]
        else:
            keys = [tuple(c) for c in combinations(range(1, n + 1), k)]
        for j in bundle.degrees():
            rows, cols = bundle.rank(j - k), bundle.rank(j)
            for row in range(rows):
                for col in range(cols):
                    if rng.random() > density:
                        continue
                    jj = keys[rng.randrange(len(keys))]
                    coeff = rand_poly(rng, ring, deg=deg, terms=2)
                    if not coeff:
                        continue
                    entries.append((-k, j, row, col, Form.term(coeff, (), jj)))
    return GaugeParameter(SuperOperator.build(ring, bundle, bundle, entries))


def rand_gauged_instance(rng: random.Random, ring: RingSpec,
                         first_variable_only: bool = False,
                         deg: int = 2) -> Tuple[DbarSuperconnection,
                                                DbarSuperconnection,
                                                GaugeParameter]:
    """A flat connection made by gauging a holomorphic complex; returns
    (gauged, underlying complex, parameter used)."""
    base = rand_complex(rng, ring)
    phi = rand_parameter(rng, base, deg=deg,
                         first_variable_only=first_variable_only)
    return gauge(base, phi), base, phi


def rand_completion_instance(rng: random.Random, ring: RingSpec,
                             deg: int = 2) -> Tuple[DbarSuperconnection,
                                                    DbarSuperconnection]:
    """A (differential, connection form) pair that satisfies the first two
    structure equations and is known to admit a flat completion; returns
    (truncated, full flat witness)."""
    full, _base, _phi = rand_gauged_instance(rng, ring, deg=deg)
    truncated = DbarSuperconnection.from_components(
        ring, full.bundle, gamma=full.gamma(), a=full.connection_form())
    return truncated, full


def rand_section(rng: random.Random, conn: DbarSuperconnection,
                 deg: int = 2) -> Section:
    ring = conn.ring
    comps = {}
    for j in conn.bundle.degrees():
        vec = []
        for _ in range(conn.bundle.rank(j)):
            f = Form.zero(ring)
            for _ in range(rng.randint(0, 2)):
                f = f + Form.term(rand_poly(rng, ring, deg=deg, terms=2),
                                  (), _rand_subset(rng, ring.nvars))
            vec.append(f)
        comps[j] = tuple(vec)
    return Section(ring, conn.bundle, comps)


def _rand_subset(rng: random.Random, nvars: int) -> tuple:
    return tuple(i for i in range(1, nvars + 1) if rng.random() < 0.4)


def rand_twist_cochain(rng: random.Random,
                       conn: DbarSuperconnection) -> SuperOperator:
    """A cochain satisfying the structure equation over the given flat
    connection: the difference of a gauge transform and the original."""
    phi = rand_parameter(rng, conn, deg=1)
    return gauge(conn, phi).coeff - conn.coeff
