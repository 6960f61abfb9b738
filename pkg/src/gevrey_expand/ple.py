"""Exact symbolic algebra for finite sums of terms z^beta zeta^gamma xi.

A term is a product of complex powers of the log-scale variables
z_{-1}, ..., z_k, complex powers of the subordinate variables
zeta_1, ..., zeta_ell, and a coefficient xi (a spectral field or a complex
scalar).  Exponents are exact complex rationals; merging and class
bookkeeping never compare floats.  Coefficients are double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NoCommonClassError, PlusClassError
from .exponents import (
    QE_ZERO,
    QExp,
    qvec_add,
    qvec_conj,
    qvec_from_json,
    qvec_is_real,
    qvec_pad,
    qvec_sort_key,
    qvec_to_json,
    rat,
)
from .spectral import SpectralField, apply_resolvent, apply_stokes, bilinear_B_with_report


def _xi_is_field(xi) -> bool:
    return isinstance(xi, SpectralField)


def _xi_is_zero(xi) -> bool:
    if _xi_is_field(xi):
        return xi.is_zero()
    return xi == 0


def _xi_conj(xi):
    if _xi_is_field(xi):
        return xi.conj()
    return complex(xi).conjugate()


def _xi_scale(xi, c):
    if _xi_is_field(xi):
        return xi.scaled(c)
    return complex(xi) * complex(c)


def _xi_add(a, b):
    if _xi_is_field(a) != _xi_is_field(b):
        raise TypeError("cannot mix scalar and field coefficients in one sum")
    if _xi_is_field(a):
        return a + b
    return complex(a) + complex(b)


class PLETerm:
    """One term z^beta zeta^gamma xi.

    ``beta`` has length k+2 and is indexed by j = -1..k (tuple slot j+1);
    ``gamma`` has length ell.
    """

    __slots__ = ("beta", "gamma", "xi")

    def __init__(self, beta, gamma, xi):
        object.__setattr__(self, "beta", tuple(beta))
        object.__setattr__(self, "gamma", tuple(gamma))
        object.__setattr__(self, "xi", xi)

    def __setattr__(self, name, value):
        raise AttributeError("PLETerm is immutable")

    def beta_at(self, j: int) -> QExp:
        """Exponent of z_j, j in [-1, k]."""
        return self.beta[j + 1]

    def gamma_at(self, j: int) -> QExp:
        """Exponent of zeta_j, j in [1, ell]."""
        return self.gamma[j - 1]

    @property
    def k(self) -> int:
        return len(self.beta) - 2

    @property
    def ell(self) -> int:
        return len(self.gamma)

    def key(self):
        return (self.beta, self.gamma)

    def sort_key(self):
        return (qvec_sort_key(self.beta), qvec_sort_key(self.gamma))

    def conj(self) -> "PLETerm":
        return PLETerm(qvec_conj(self.beta), qvec_conj(self.gamma), _xi_conj(self.xi))

    def __repr__(self):
        return f"PLETerm(beta={self.beta}, gamma={self.gamma}, xi={self.xi!r})"


@dataclass(frozen=True)
class ClassDescriptor:
    """Largest admissible class level m and the common real part mu there."""

    m: int
    mu: Fraction | None
    real_symmetric: bool
    empty: bool = False


class PLESum:
    """Canonical finite sum of :class:`PLETerm` with fixed dims (k, ell).

    Terms sharing (beta, gamma) are merged by coefficient addition and
    exact-zero coefficients dropped; the term list is sorted by the
    lexicographic (beta, gamma) key, so equal sums have identical layouts.
    """

    __slots__ = ("terms", "k", "ell", "scalar", "_descr")

    def __init__(self, terms, k: int, ell: int, scalar: bool | None = None):
        if k < -1 or ell < 0:
            raise ValueError("dims must satisfy k >= -1, ell >= 0")
        merged: dict = {}
        for t in terms:
            if t.k != k or t.ell != ell:
                raise ValueError("term dims disagree with the sum; pad first")
            cur = merged.get(t.key())
            merged[t.key()] = t.xi if cur is None else _xi_add(cur, t.xi)
        kept = [PLETerm(b, g, xi) for (b, g), xi in merged.items()
                if not _xi_is_zero(xi)]
        kept.sort(key=PLETerm.sort_key)
        if scalar is None:
            if not kept:
                raise ValueError("empty sum needs an explicit scalar flag")
            scalar = not _xi_is_field(kept[0].xi)
        for t in kept:
            if _xi_is_field(t.xi) == scalar:
                raise TypeError("coefficient kind disagrees with the sum's flag")
        object.__setattr__(self, "terms", tuple(kept))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "scalar", bool(scalar))
        object.__setattr__(self, "_descr", None)

    def __setattr__(self, name, value):
        raise AttributeError("PLESum is immutable")

    # -- constructors ----------------------------------------------------------
    @classmethod
    def from_terms(cls, terms, k=None, ell=None, scalar=None) -> "PLESum":
        terms = list(terms)
        kk = max([t.k for t in terms], default=-1 if k is None else k)
        ll = max([t.ell for t in terms], default=0 if ell is None else ell)
        kk = kk if k is None else max(k, kk)
        ll = ll if ell is None else max(ell, ll)
        padded = [pad_term(t, kk, ll) for t in terms]
        return cls(padded, kk, ll, scalar=scalar)

    @classmethod
    def zero(cls, k=-1, ell=0, scalar=True) -> "PLESum":
        return cls((), k, ell, scalar=scalar)

    @classmethod
    def constant(cls, xi, k=-1, ell=0) -> "PLESum":
        """The z/zeta-independent sum with a single coefficient."""
        t = PLETerm((QE_ZERO,) * (k + 2), (QE_ZERO,) * ell, xi)
        return cls((t,), k, ell)

    # -- structure ---------------------------------------------------------------
    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def pad(self, k: int, ell: int) -> "PLESum":
        """Embed into wider dims by zero-padding exponent vectors."""
        if k == self.k and ell == self.ell:
            return self
        return PLESum([pad_term(t, k, ell) for t in self.terms], k, ell,
                      scalar=self.scalar)

    def map_coefficients(self, fn, scalar=None) -> "PLESum":
        return PLESum([PLETerm(t.beta, t.gamma, fn(t)) for t in self.terms],
                      self.k, self.ell,
                      scalar=self.scalar if scalar is None else scalar)

    def __add__(self, other: "PLESum") -> "PLESum":
        if self.scalar != other.scalar and self.terms and other.terms:
            raise TypeError("cannot add scalar-valued and field-valued sums")
        k = max(self.k, other.k)
        ell = max(self.ell, other.ell)
        a, b = self.pad(k, ell), other.pad(k, ell)
        scalar = self.scalar if self.terms or not other.terms else other.scalar
        return PLESum(a.terms + b.terms, k, ell, scalar=scalar)

    def __sub__(self, other: "PLESum") -> "PLESum":
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "PLESum":
        c = complex(c)
        if c == 0:
            return PLESum.zero(self.k, self.ell, scalar=self.scalar)
        return self.map_coefficients(lambda t: _xi_scale(t.xi, c))

    def __neg__(self):
        return self.scaled(-1.0)

    def conj(self) -> "PLESum":
        return PLESum([t.conj() for t in self.terms], self.k, self.ell,
                      scalar=self.scalar)

    # -- class bookkeeping ----------------------------------------------------------
    def descriptor(self) -> ClassDescriptor:
        if self._descr is None:
            object.__setattr__(self, "_descr", classify(self))
        return self._descr

    def dims_used(self) -> tuple:
        """Deepest z index and zeta index actually carrying a nonzero exponent."""
        kz = -2
        lz = 0
        for t in self.terms:
            for j in range(self.k, -2, -1):
                if not t.beta_at(j).is_zero():
                    kz = max(kz, j)
                    break
            for j in range(self.ell, 0, -1):
                if not t.gamma_at(j).is_zero():
                    lz = max(lz, j)
                    break
        return kz, lz

    # -- serialization ------------------------------------------------------------
    def to_json_dict(self, field_encoder=None) -> dict:
        def encode_xi(xi):
            if _xi_is_field(xi):
                if field_encoder is not None:
                    return field_encoder(xi)
                return {"field": xi.to_json_dict()}
            return {"scalar": [xi.real, xi.imag]}

        return {
            "k": self.k,
            "ell": self.ell,
            "scalar": self.scalar,
            "terms": [
                {"beta": qvec_to_json(t.beta), "gamma": qvec_to_json(t.gamma),
                 "xi": encode_xi(t.xi)}
                for t in self.terms
            ],
        }

    @classmethod
    def from_json_dict(cls, data, field_decoder=None) -> "PLESum":
        def decode_xi(d):
            if "scalar" in d:
                re, im = d["scalar"]
                return complex(re, im)
            if "field" in d:
                return SpectralField.from_json_dict(d["field"])
            if field_decoder is not None:
                return field_decoder(d)
            raise ValueError(f"cannot decode coefficient {d!r}")

        terms = [PLETerm(qvec_from_json(t["beta"]), qvec_from_json(t["gamma"]),
                         decode_xi(t["xi"]))
                 for t in data["terms"]]
        return cls(terms, data["k"], data["ell"], scalar=data["scalar"])

    def __repr__(self):
        return (f"PLESum(k={self.k}, ell={self.ell}, n_terms={self.n_terms}, "
                f"scalar={self.scalar})")


def pad_term(t: PLETerm, k: int, ell: int) -> PLETerm:
    return PLETerm(qvec_pad(t.beta, k + 2), qvec_pad(t.gamma, ell), t.xi)


def term(beta, gamma, xi) -> PLETerm:
    """Convenience constructor coercing rational-likes in the exponents."""
    from .exponents import as_qexp
    return PLETerm(tuple(as_qexp(b) for b in beta),
                   tuple(as_qexp(g) for g in gamma), xi)


# -- classification ---------------------------------------------------------------

def is_real_symmetric(p: PLESum, rtol: float = 1e-12) -> bool:
    """Conjugation-closed term set with conjugate coefficients."""
    table = {t.key(): t.xi for t in p.terms}
    for t in p.terms:
        partner_key = (qvec_conj(t.beta), qvec_conj(t.gamma))
        partner = table.get(partner_key)
        if partner is None:
            return False
        want = _xi_conj(t.xi)
        if _xi_is_field(want):
            if not want.allclose(partner, rtol=rtol):
                return False
        else:
            scale = max(abs(want), abs(partner), 1e-300)
            if abs(want - partner) > rtol * scale:
                return False
    return True


def classify(p: PLESum) -> ClassDescriptor:
    """Largest m with Re(beta_j) = 0 for all j < m and a common Re(beta_m).

    Raises :class:`NoCommonClassError` when even the top level disagrees
    (heterogeneous Re(beta_{-1})).
    """
    rs = is_real_symmetric(p)
    if p.is_zero():
        return ClassDescriptor(m=p.k, mu=None, real_symmetric=True, empty=True)
    for j in range(-1, p.k + 1):
        col = [t.beta_at(j).re for t in p.terms]
        if all(c == 0 for c in col):
            continue
        if all(c == col[0] for c in col):
            return ClassDescriptor(m=j, mu=col[0], real_symmetric=rs)
        if j == -1:
            bad = next(c for c in col if c != col[0])
            raise NoCommonClassError(
                f"terms disagree at level -1: Re(beta_-1) takes both {col[0]} "
                f"and {bad}; no common class"
            )
        return ClassDescriptor(m=j - 1, mu=Fraction(0), real_symmetric=rs)
    return ClassDescriptor(m=p.k, mu=Fraction(0), real_symmetric=rs)


def in_class(p: PLESum, m: int, mu) -> bool:
    """Membership in the class at level m with decay exponent Re(beta_m) = mu."""
    mu = rat(mu)
    if m < -1 or m > p.k:
        return False
    for t in p.terms:
        for j in range(-1, m):
            if t.beta_at(j).re != 0:
                return False
        if t.beta_at(m).re != mu:
            return False
    return True


# -- the linear operators ----------------------------------------------------------

def op_M(p: PLESum, j: int) -> PLESum:
    """Multiply each term by its z_j exponent (exponents unchanged)."""
    if j < -1 or j > p.k:
        raise ValueError(f"index {j} outside [-1, {p.k}]")
    out = [PLETerm(t.beta, t.gamma, _xi_scale(t.xi, complex(t.beta_at(j))))
           for t in p.terms]
    return PLESum(out, p.k, p.ell, scalar=p.scalar)


def op_R(p: PLESum) -> PLESum:
    """Sum over j >= 0 of z_0^{-1}..z_j^{-1} (M_j p): the log-scale shift.

    Drops the decay exponent by exactly one on level-0 classes; powers of
    z_{-1} are untouched.
    """
    if p.k < 0:
        raise ValueError("shift operator needs k >= 0")
    one = QExp(1)
    out = []
    for t in p.terms:
        for j in range(0, p.k + 1):
            bj = t.beta_at(j)
            if bj.is_zero():
                continue
            beta = list(t.beta)
            for i in range(0, j + 1):
                beta[i + 1] = beta[i + 1] - one
            out.append(PLETerm(tuple(beta), t.gamma, _xi_scale(t.xi, complex(bj))))
    return PLESum(out, p.k, p.ell, scalar=p.scalar)


def op_ZA(p: PLESum) -> PLESum:
    """Apply the shifted inverse (A + beta_{-1})^{-1} to every coefficient.

    Requires Re(beta_{-1}) = 0 termwise so each shift i*omega keeps the
    inverse bounded; raises the coefficient regularity by one power of A.
    """
    if p.scalar:
        raise TypeError("resolvent lift needs field-valued coefficients")
    out = []
    for t in p.terms:
        b = t.beta_at(-1)
        if b.re != 0:
            raise NoCommonClassError(
                f"resolvent lift requires Re(beta_-1) = 0, found {b.re}"
            )
        out.append(PLETerm(t.beta, t.gamma, apply_resolvent(t.xi, float(b.im))))
    return PLESum(out, p.k, p.ell, scalar=False)


def op_A_plus_M(p: PLESum) -> PLESum:
    """Apply (A + M_{-1}): multiply coefficients by (lambda + beta_{-1})."""
    if p.scalar:
        raise TypeError("needs field-valued coefficients")
    out = [PLETerm(t.beta, t.gamma, apply_stokes(t.xi, complex(t.beta_at(-1))))
           for t in p.terms]
    return PLESum(out, p.k, p.ell, scalar=False)


def dzeta(p: PLESum, j: int) -> PLESum:
    """Partial derivative in zeta_j: gamma_j multiplies and decrements."""
    if j < 1 or j > p.ell:
        raise ValueError(f"zeta index {j} outside [1, {p.ell}]")
    one = QExp(1)
    out = []
    for t in p.terms:
        gj = t.gamma_at(j)
        if gj.is_zero():
            continue
        gamma = list(t.gamma)
        gamma[j - 1] = gamma[j - 1] - one
        out.append(PLETerm(t.beta, tuple(gamma), _xi_scale(t.xi, complex(gj))))
    return PLESum(out, p.k, p.ell, scalar=p.scalar)


def multiply(q: PLESum, p: PLESum) -> PLESum:
    """Product of a scalar-valued sum with any sum: exponents add termwise."""
    if not q.scalar:
        raise TypeError("left factor must be scalar-valued")
    k = max(q.k, p.k)
    ell = max(q.ell, p.ell)
    qq, pp = q.pad(k, ell), p.pad(k, ell)
    out = []
    for tq in qq.terms:
        for tp in pp.terms:
            out.append(PLETerm(qvec_add(tq.beta, tp.beta),
                               qvec_add(tq.gamma, tp.gamma),
                               _xi_scale(tp.xi, tq.xi)))
    return PLESum(out, k, ell, scalar=p.scalar)


def bilinear_lift(p: PLESum, q: PLESum, cap=None, cap_policy="raise",
                  report_sink=None) -> PLESum:
    """Termwise bilinear term of field coefficients with exponent addition."""
    if p.scalar or q.scalar:
        raise TypeError("bilinear lift needs field-valued sums")
    k = max(p.k, q.k)
    ell = max(p.ell, q.ell)
    pp, qq = p.pad(k, ell), q.pad(k, ell)
    out = []
    for tp in pp.terms:
        for tq in qq.terms:
            field, report = bilinear_B_with_report(
                tp.xi, tq.xi, cap=cap, cap_policy=cap_policy)
            if report is not None and report_sink is not None:
                report_sink.append(report)
            out.append(PLETerm(qvec_add(tp.beta, tq.beta),
                               qvec_add(tp.gamma, tq.gamma), field))
    return PLESum(out, k, ell, scalar=False)


# -- plus-class validation -----------------------------------------------------------

@dataclass(frozen=True)
class PlusClassReport:
    """Outcome of the substitution-function check, with the split Z = p_* + q."""

    ok: bool
    p_star: PLESum
    q: PLESum
    failures: tuple

    def raise_if_failed(self):
        if not self.ok:
            clause, msg = self.failures[0]
            raise PlusClassError(f"{clause}: {msg}", clause=clause)


def is_plus_class(Z: PLESum, m: int, rtol: float = 1e-12) -> PlusClassReport:
    """Validate a substitution function Z = p_*(zeta) + q(z, zeta).

    p_* collects the z-free terms with real gamma and real scalar
    coefficients and must satisfy p_*(1,...,1) = 1.  The remainder q must be
    conjugation-closed, lie in the level-m class with zero decay exponent,
    have beta_{-1} identically zero, and satisfy Re(beta) < 0 in the
    lexicographic order.
    """
    if not Z.scalar:
        raise PlusClassError("substitution functions must be scalar-valued",
                             clause="scalar_coefficients")
    failures = []
    star_terms, q_terms = [], []
    for t in Z.terms:
        z_free = all(t.beta_at(j).is_zero() for j in range(-1, Z.k + 1))
        if z_free and qvec_is_real(t.gamma) and abs(complex(t.xi).imag) <= rtol:
            star_terms.append(t)
        else:
            q_terms.append(t)
    p_star = PLESum(star_terms, Z.k, Z.ell, scalar=True)
    q = PLESum(q_terms, Z.k, Z.ell, scalar=True)

    unit = sum(complex(t.xi).real for t in p_star.terms)
    if abs(unit - 1.0) > rtol:
        failures.append(("p_star_unit", f"p_*(1) = {unit!r}, expected 1"))

    if not is_real_symmetric(q, rtol=rtol):
        failures.append(("q_real_symmetric",
                         "q is not conjugation-closed with conjugate coefficients"))
    if not in_class(q, m, 0):
        failures.append(("class_membership",
                         f"a q-term leaves the level-{m} class with zero decay"))
    zeros = (Fraction(0),) * (Z.k + 2)
    for t in q.terms:
        if not t.beta_at(-1).is_zero():
            failures.append(("beta_minus_one_zero",
                             f"q-term has beta_-1 = {t.beta_at(-1)!r} != 0"))
            break
    for t in q.terms:
        re_vec = tuple(e.re for e in t.beta)
        if not re_vec < zeros:
            failures.append(("beta_negative",
                             f"q-term Re(beta) = {re_vec} is not lexicographically "
                             "below zero"))
            break
    return PlusClassReport(ok=not failures, p_star=p_star, q=q,
                           failures=tuple(failures))
