"""Exact complex exponents with rational real and imaginary parts.

Term merging and lattice lookups depend on exact equality of exponents, so
these never touch floating point until a power is actually evaluated.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

RationalLike = Union[int, str, Fraction]

_ZERO = Fraction(0)


def rat(x) -> Fraction:
    """Coerce ints, strings like '2/3', floats of integral value, or Fractions."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if x != int(x):
            raise TypeError(
                f"refusing to coerce non-integral float {x!r} to an exact rational; "
                "pass a Fraction or 'p/q' string"
            )
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


class QExp:
    """One exact complex exponent: re + im*i with re, im rational."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", rat(re))
        object.__setattr__(self, "im", rat(im))

    def __setattr__(self, name, value):
        raise AttributeError("QExp is immutable")

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        other = as_qexp(other)
        return QExp(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        other = as_qexp(other)
        return QExp(self.re - other.re, self.im - other.im)

    def __mul__(self, other):
        other = as_qexp(other)
        return QExp(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __neg__(self):
        return QExp(-self.re, -self.im)

    def conjugate(self):
        return QExp(self.re, -self.im)

    # -- predicates ----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.re == _ZERO and self.im == _ZERO

    def is_real(self) -> bool:
        return self.im == _ZERO

    def is_imaginary(self) -> bool:
        return self.re == _ZERO

    # -- conversions ---------------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def sort_key(self):
        return (self.re, self.im)

    def to_json(self):
        return [[self.re.numerator, self.re.denominator],
                [self.im.numerator, self.im.denominator]]

    @classmethod
    def from_json(cls, data) -> "QExp":
        (rn, rd), (im_n, im_d) = data
        return cls(Fraction(rn, rd), Fraction(im_n, im_d))

    # -- plumbing ------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, QExp):
            try:
                other = as_qexp(other)
            except TypeError:
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == _ZERO:
            return f"QExp({self.re})"
        return f"QExp({self.re}, {self.im})"


def as_qexp(x) -> QExp:
    """Coerce a rational-like or (re, im) pair to a QExp."""
    if isinstance(x, QExp):
        return x
    if isinstance(x, tuple) and len(x) == 2:
        return QExp(x[0], x[1])
    if isinstance(x, complex):
        return QExp(rat(x.real), rat(x.imag))
    return QExp(rat(x))


QE_ZERO = QExp(0)
QE_ONE = QExp(1)


def qvec(*entries) -> tuple:
    """Build a tuple of QExp from mixed rational-likes / (re, im) pairs."""
    return tuple(as_qexp(e) for e in entries)


def qvec_zero(n: int) -> tuple:
    return (QE_ZERO,) * n


def qvec_conj(v: tuple) -> tuple:
    return tuple(e.conjugate() for e in v)


def qvec_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def qvec_pad(v: tuple, n: int) -> tuple:
    """Zero-pad an exponent vector on the right to length n."""
    if len(v) > n:
        raise ValueError(f"cannot shrink exponent vector of length {len(v)} to {n}")
    if len(v) == n:
        return v
    return v + (QE_ZERO,) * (n - len(v))


def qvec_sort_key(v: tuple):
    return tuple(e.sort_key() for e in v)


def qvec_is_real(v: tuple) -> bool:
    return all(e.is_real() for e in v)


def qvec_to_json(v: tuple):
    return [e.to_json() for e in v]


def qvec_from_json(data) -> tuple:
    return tuple(QExp.from_json(e) for e in data)
