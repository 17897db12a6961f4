"""Exact coefficient rings for the superconnection calculus.

Two function models are supported, both with Gaussian-rational coefficients:

* ``poly``: polynomials in z_1..z_n and their conjugates (a polydisc model);
* ``p1``: rational functions z^a zbar^b (1+z zbar)^(-m) in one variable,
  closed under Wirtinger derivatives and, for decaying terms, exactly
  integrable over the complex line.

Either ring may be extended by a square-zero real infinitesimal ``eps``,
used for first-order variation bookkeeping.  No floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Iterator, Union


class RingMismatchError(ValueError):
    """Two operands live in different coefficient rings."""


class UnsupportedRingError(ValueError):
    """Operation is not defined on this ring."""


class DivergentIntegralError(ValueError):
    """A term fails the decay condition for exact integration."""


RationalLike = Union[int, Fraction]

_F0 = Fraction(0)
_F1 = Fraction(1)


class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    def __add__(self, other: GaussianRational) -> GaussianRational:
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: GaussianRational) -> GaussianRational:
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> GaussianRational:
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other: GaussianRational) -> GaussianRational:
        # fast path: real times real is the common case
        if not self.im and not other.im:
            return GaussianRational(self.re * other.re, _F0)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def scale(self, q: RationalLike) -> GaussianRational:
        return GaussianRational(self.re * q, self.im * q)

    def inverse(self) -> GaussianRational:
        norm = self.re * self.re + self.im * self.im
        if not norm:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return GaussianRational(self.re / norm, -self.im / norm)

    def __truediv__(self, other: GaussianRational) -> GaussianRational:
        return self * other.inverse()

    def conj(self) -> GaussianRational:
        return GaussianRational(self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __repr__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


GR_ZERO = GaussianRational()
GR_ONE = GaussianRational(1)
GR_I = GaussianRational(0, 1)


def gr(re: RationalLike = 0, im: RationalLike = 0) -> GaussianRational:
    return GaussianRational(re, im)


@dataclass(frozen=True)
class RingSpec:
    """Which function model coefficients live in, and whether the
    square-zero infinitesimal extension is switched on."""

    kind: str  # "poly" | "p1"
    nvars: int
    dual: bool = False

    def __post_init__(self):
        if self.kind not in ("poly", "p1"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "p1" and self.nvars != 1:
            raise ValueError("the rational-function model is one-variable")
        if self.nvars < 1:
            raise ValueError("need at least one variable")

    @staticmethod
    def poly(nvars: int, dual: bool = False) -> RingSpec:
        return RingSpec("poly", nvars, dual)

    @staticmethod
    def p1(dual: bool = False) -> RingSpec:
        return RingSpec("p1", 1, dual)

    def dualized(self) -> RingSpec:
        return RingSpec(self.kind, self.nvars, True)

    def undualized(self) -> RingSpec:
        return RingSpec(self.kind, self.nvars, False)


# A term key is (a, b, m, eps): z^a zbar^b (1+z zbar)^(-m), optionally
# multiplied by eps.  For "poly" rings m is always 0.
TermKey = tuple  # (tuple[int, ...], tuple[int, ...], int, bool)


def _check_same_ring(x: Scalar, y: Scalar) -> None:
    if x.ring != y.ring:
        raise RingMismatchError(f"{x.ring} vs {y.ring}")


def _reduce_p1(items: dict) -> dict:
    """Canonicalize p1 keys: z zbar (1+z zbar)^(-m) rewrites as
    (1+z zbar)^(-(m-1)) - (1+z zbar)^(-m), so canonical keys never have
    a, b and m all positive."""
    out: dict = {}
    work = list(items.items())
    while work:
        (a, b, m, eps), c = work.pop()
        if not c:
            continue
        if m >= 1 and a[0] >= 1 and b[0] >= 1:
            na, nb = (a[0] - 1,), (b[0] - 1,)
            work.append(((na, nb, m - 1, eps), c))
            work.append(((na, nb, m, eps), -c))
            continue
        key = (a, b, m, eps)
        acc = out.get(key)
        tot = c if acc is None else acc + c
        if tot:
            out[key] = tot
        elif acc is not None:
            del out[key]
    return out


class Scalar:
    """Element of a RingSpec ring: finite sum of monomial terms with
    GaussianRational coefficients, kept in canonical form."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: RingSpec, terms: dict):
        self.ring = ring
        if ring.kind == "p1" and terms:
            terms = _reduce_p1(terms)
        self.terms = terms

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(ring: RingSpec) -> Scalar:
        return Scalar(ring, {})

    @staticmethod
    def const(ring: RingSpec, c) -> Scalar:
        c = _as_gr(c)
        if not c:
            return Scalar(ring, {})
        n = ring.nvars
        key = ((0,) * n, (0,) * n, 0, False)
        return Scalar(ring, {key: c})

    @staticmethod
    def one(ring: RingSpec) -> Scalar:
        return Scalar.const(ring, GR_ONE)

    @staticmethod
    def monomial(ring: RingSpec, a, b, m: int = 0, c=GR_ONE, eps: bool = False) -> Scalar:
        """Build c * z^a zbar^b (1+z zbar)^(-m), optionally times eps."""
        a, b = tuple(a), tuple(b)
        if len(a) != ring.nvars or len(b) != ring.nvars:
            raise ValueError("exponent vectors must have one entry per variable")
        if any(e < 0 for e in a + b):
            raise ValueError("negative exponent")
        if m < 0 or (m > 0 and ring.kind != "p1"):
            raise ValueError(f"bad denominator power {m} for {ring.kind} ring")
        if eps and not ring.dual:
            raise ValueError("eps term in a non-dual ring")
        c = _as_gr(c)
        if not c:
            return Scalar(ring, {})
        return Scalar(ring, {(a, b, m, eps): c})

    @staticmethod
    def variable(ring: RingSpec, index: int = 1, conjugate: bool = False) -> Scalar:
        """The coordinate z_index, or its conjugate (1-based index)."""
        n = ring.nvars
        if not 1 <= index <= n:
            raise ValueError(f"variable index {index} out of range 1..{n}")
        e = tuple(1 if i == index - 1 else 0 for i in range(n))
        z = (0,) * n
        return Scalar(ring, {((z, e, 0, False) if conjugate else (e, z, 0, False)): GR_ONE})

    @staticmethod
    def eps_unit(ring: RingSpec) -> Scalar:
        if not ring.dual:
            raise UnsupportedRingError("eps lives in the dual extension only")
        n = ring.nvars
        return Scalar(ring, {((0,) * n, (0,) * n, 0, True): GR_ONE})

    @staticmethod
    def p1_power(ring: RingSpec, m: int) -> Scalar:
        """(1+z zbar)^m for any integer m, expanded into canonical keys."""
        if ring.kind != "p1":
            raise UnsupportedRingError("p1_power needs the rational-function model")
        if m <= 0:
            return Scalar(ring, {((0,), (0,), -m, False): GR_ONE})
        terms = {}
        for i in range(m + 1):
            terms[((i,), (i,), 0, False)] = GaussianRational(
                factorial(m) // (factorial(i) * factorial(m - i)))
        return Scalar(ring, terms)

    # -- ring operations ------------------------------------------------

    def __add__(self, other: Scalar) -> Scalar:
        _check_same_ring(self, other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        terms = dict(self.terms)
        for k, c in other.terms.items():
            acc = terms.get(k)
            tot = c if acc is None else acc + c
            if tot:
                terms[k] = tot
            elif acc is not None:
                del terms[k]
        return Scalar(self.ring, terms)

    def __sub__(self, other: Scalar) -> Scalar:
        return self + (-other)

    def __neg__(self) -> Scalar:
        return Scalar(self.ring, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other) -> Scalar:
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        _check_same_ring(self, other)
        terms: dict = {}
        for (a1, b1, m1, e1), c1 in self.terms.items():
            for (a2, b2, m2, e2), c2 in other.terms.items():
                if e1 and e2:
                    continue  # eps^2 = 0
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                    m1 + m2,
                    e1 or e2,
                )
                c = c1 * c2
                acc = terms.get(key)
                tot = c if acc is None else acc + c
                if tot:
                    terms[key] = tot
                elif acc is not None:
                    del terms[key]
        return Scalar(self.ring, terms)

    __rmul__ = __mul__

    def scale(self, c) -> Scalar:
        c = _as_gr(c)
        if not c:
            return Scalar(self.ring, {})
        return Scalar(self.ring, {k: v * c for k, v in self.terms.items()})

    def __pow__(self, n: int) -> Scalar:
        if n < 0:
            raise ValueError("negative power")
        out = Scalar.one(self.ring)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> Scalar:
        """Complex conjugation: swaps z and zbar exponents, conjugates
        coefficients; eps is real."""
        return Scalar(self.ring,
                      {(b, a, m, e): c.conj() for (a, b, m, e), c in self.terms.items()})

    # -- calculus -------------------------------------------------------

    def wirtinger(self, kind: str, index: int = 1) -> Scalar:
        """Wirtinger derivative d/dz_index ('z') or d/dzbar_index ('zbar')."""
        n = self.ring.nvars
        if not 1 <= index <= n:
            raise ValueError(f"variable index {index} out of range 1..{n}")
        if kind not in ("z", "zbar"):
            raise ValueError("kind must be 'z' or 'zbar'")
        i = index - 1
        terms: dict = {}

        def put(key, c):
            acc = terms.get(key)
            tot = c if acc is None else acc + c
            if tot:
                terms[key] = tot
            elif acc is not None:
                del terms[key]

        for (a, b, m, e), c in self.terms.items():
            if kind == "z":
                if a[i]:
                    na = a[:i] + (a[i] - 1,) + a[i + 1:]
                    put((na, b, m, e), c.scale(a[i]))
                if m:
                    # d/dz (1+z zbar)^(-m) = -m zbar (1+z zbar)^(-m-1)
                    nb = b[:i] + (b[i] + 1,) + b[i + 1:]
                    put((a, nb, m + 1, e), c.scale(-m))
            else:
                if b[i]:
                    nb = b[:i] + (b[i] - 1,) + b[i + 1:]
                    put((a, nb, m, e), c.scale(b[i]))
                if m:
                    na = a[:i] + (a[i] + 1,) + a[i + 1:]
                    put((na, b, m + 1, e), c.scale(-m))
        return Scalar(self.ring, terms)

    def antideriv_zbar(self, index: int = 1) -> Scalar:
        """Canonical zbar_index-antiderivative, term by term:
        zbar^b maps to zbar^(b+1)/(b+1).  Polynomial model only."""
        if self.ring.kind != "poly":
            raise UnsupportedRingError("antiderivative is defined on the polynomial model")
        i = index - 1
        terms = {}
        for (a, b, m, e), c in self.terms.items():
            nb = b[:i] + (b[i] + 1,) + b[i + 1:]
            terms[(a, nb, m, e)] = c.scale(Fraction(1, b[i] + 1))
        return Scalar(self.ring, terms)

    # -- structure ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.ring, frozenset(self.terms.items())))

    def eps_part(self) -> Scalar:
        """Coefficient of eps, as a scalar of the non-dual ring."""
        base = self.ring.undualized()
        return Scalar(base, {(a, b, m, False): c
                             for (a, b, m, e), c in self.terms.items() if e})

    def const_part(self) -> Scalar:
        """The eps-free part, as a scalar of the non-dual ring."""
        base = self.ring.undualized()
        return Scalar(base, {(a, b, m, False): c
                             for (a, b, m, e), c in self.terms.items() if not e})

    def lift(self, ring: RingSpec) -> Scalar:
        """Reinterpret in an extension of the ring (same kind, dual on)."""
        if ring == self.ring:
            return self
        if ring.kind != self.ring.kind or ring.nvars != self.ring.nvars or not ring.dual:
            raise RingMismatchError(f"cannot lift {self.ring} into {ring}")
        return Scalar(ring, dict(self.terms))

    def poly_degree(self) -> int:
        """Largest total monomial degree |a|+|b| (0 for the zero scalar)."""
        if not self.terms:
            return 0
        return max(sum(a) + sum(b) for (a, b, _m, _e) in self.terms)

    def constant_value(self) -> GaussianRational:
        """The coefficient of the constant monomial."""
        n = self.ring.nvars
        return self.terms.get(((0,) * n, (0,) * n, 0, False), GR_ZERO)

    def is_constant(self) -> bool:
        n = self.ring.nvars
        zero_key = ((0,) * n, (0,) * n, 0, False)
        return all(k == zero_key for k in self.terms)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kc: (kc[0][3], kc[0][2], kc[0][0], kc[0][1]))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for (a, b, m, e), c in self.sorted_terms():
            f = [repr(c)]
            for i, p in enumerate(a):
                if p:
                    f.append(f"z{i+1}" + (f"^{p}" if p > 1 else ""))
            for i, p in enumerate(b):
                if p:
                    f.append(f"w{i+1}" + (f"^{p}" if p > 1 else ""))
            if m:
                f.append(f"u^-{m}")
            if e:
                f.append("eps")
            bits.append("*".join(f))
        return " + ".join(bits)


def _as_gr(c) -> GaussianRational:
    if isinstance(c, GaussianRational):
        return c
    if isinstance(c, (int, Fraction)):
        return GaussianRational(c)
    raise TypeError(f"cannot coerce {type(c).__name__} to GaussianRational")


@dataclass(frozen=True)
class PiRational:
    """An exact Gaussian-rational multiple of pi."""

    coefficient: GaussianRational

    def __add__(self, other: PiRational) -> PiRational:
        return PiRational(self.coefficient + other.coefficient)

    def __neg__(self) -> PiRational:
        return PiRational(-self.coefficient)

    def scale(self, c) -> PiRational:
        return PiRational(self.coefficient * _as_gr(c))

    def is_zero(self) -> bool:
        return not self.coefficient

    def rational(self) -> Fraction:
        """The coefficient as a plain rational; requires a real value."""
        if self.coefficient.im:
            raise ValueError(f"coefficient {self.coefficient} is not real")
        return self.coefficient.re

    def __repr__(self) -> str:
        return f"({self.coefficient})*pi"


def integrate_p1(s: Scalar) -> PiRational:
    """Exact integral of s against (i/2) dz wedge dzbar over the complex
    line.  Angular symmetry kills terms with a != b; a term with a = b
    integrates to pi * a! (m-a-2)!/(m-1)! and must satisfy m >= a+2."""
    if s.ring.kind != "p1":
        raise UnsupportedRingError("exact integration is defined on the rational-function model")
    if s.ring.dual:
        raise UnsupportedRingError("integrate the eps and constant parts separately")
    total = GR_ZERO
    for (a, b, m, _e), c in s.terms.items():
        if a[0] != b[0]:
            continue  # the angular integral vanishes exactly
        k = a[0]
        if m < k + 2:
            raise DivergentIntegralError(
                f"term z^{k} zbar^{k} (1+z zbar)^(-{m}) is not integrable")
        total = total + c.scale(Fraction(factorial(k) * factorial(m - k - 2), factorial(m - 1)))
    return PiRational(total)
