"""Seeded random fields, term sums, and subordinate systems.

Shared by the property-test suite and the command-line identity runner so
the same seed reproduces the same draws in both places.  Ranges are chosen
so random systems stay evaluable from t = 100 on (small coefficients, tails
no deeper than the third log level).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import EvaluationError, LogDomainError
from .exponents import QE_ZERO, QExp
from .ple import PLESum, PLETerm, pad_term
from .spectral import DomainConfig, SpectralField, leray_project
from .subordinate import SubordinateSystem

DEFAULT_DOMAIN = DomainConfig(truncation=64)


def rng_from_seed(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_rational(rng, lo, hi, max_den=4) -> Fraction:
    """Uniform-ish exact rational in [lo, hi] with a small denominator."""
    import math
    lo, hi = float(lo), float(hi)
    den = int(rng.integers(1, max_den + 1))
    lo_n = math.ceil(lo * den)
    hi_n = math.floor(hi * den)
    if hi_n < lo_n:
        hi_n = lo_n
    return Fraction(int(rng.integers(lo_n, hi_n + 1)), den)


def random_modes(rng, band: int, count: int) -> np.ndarray:
    """Distinct nonzero integer modes inside the componentwise band."""
    seen = set()
    out = []
    while len(out) < count:
        k = tuple(int(x) for x in rng.integers(-band, band + 1, size=3))
        if k == (0, 0, 0) or k in seen:
            continue
        seen.add(k)
        out.append(k)
    return np.asarray(out, np.int64)


def random_solenoidal_field(rng, domain=DEFAULT_DOMAIN, count=4, band=3,
                            scale=1.0, real=True) -> SpectralField:
    """Random divergence-free zero-mean field; conjugate-symmetric if real."""
    modes = random_modes(rng, band, count)
    coef = (rng.standard_normal((count, 3))
            + 1j * rng.standard_normal((count, 3))) * scale
    raw = SpectralField.from_modes(
        domain, {tuple(m): c for m, c in zip(modes, coef)})
    out = leray_project(raw)
    if real:
        out = out.real_part()
    if out.is_zero():  # pathological draw; try again deterministically
        return random_solenoidal_field(rng, domain, count, band, scale, real)
    return out


def random_complexified_field(rng, domain=DEFAULT_DOMAIN, count=4, band=3,
                              scale=1.0) -> SpectralField:
    """Solenoidal field with no conjugate symmetry (a genuine complex point)."""
    return random_solenoidal_field(rng, domain, count, band, scale, real=False)


def random_exponent_vector(rng, k: int, m: int, mu: Fraction,
                           oscillatory=True):
    """beta in the level-m set: Re zero above m, Re(beta_m) = mu, free below."""
    beta = []
    for j in range(-1, k + 1):
        if j < m:
            re = Fraction(0)
        elif j == m:
            re = mu
        else:
            re = random_rational(rng, -2, 2)
        if oscillatory and rng.random() < 0.5:
            im = random_rational(rng, -2, 2)
        else:
            im = Fraction(0)
        beta.append(QExp(re, im))
    return tuple(beta)


def random_ple_sum(rng, domain=DEFAULT_DOMAIN, k=1, ell=0, m=0,
                   mu=Fraction(1, 2), n_pairs=2, field_coef=True,
                   sys_depths=None, oscillatory=True, band=2,
                   scale=1.0) -> PLESum:
    """Conjugation-closed random sum in the level-m class with Re(beta_m) = -mu.

    Terms come in conjugate pairs (self-paired when the draw lands real), so
    the result is real-symmetric by construction.
    """
    mu = Fraction(mu)
    terms = []
    for _ in range(n_pairs):
        beta = random_exponent_vector(rng, k, m, -mu, oscillatory)
        gamma = []
        for _j in range(ell):
            if rng.random() < 0.6:
                gamma.append(QExp(random_rational(rng, -1, 1),
                                  random_rational(rng, -1, 1)
                                  if (oscillatory and rng.random() < 0.4)
                                  else 0))
            else:
                gamma.append(QE_ZERO)
        gamma = tuple(gamma)
        if field_coef:
            xi = random_complexified_field(rng, domain, count=3, band=band,
                                           scale=scale)
        else:
            xi = complex(rng.standard_normal(), rng.standard_normal()) * scale
        t1 = PLETerm(beta, gamma, xi)
        terms.extend([t1, t1.conj()])
    return PLESum.from_terms(terms, k=k, ell=ell)


def random_plus_function(rng, s_k: int, ell: int, m: int,
                         max_coef=0.18) -> PLESum:
    """A substitution function 1 + q with small coefficients.

    Tail exponents start at levels m+1..min(s_k, 3) with negative real
    parts, so the function is evaluable and close to 1 from t = 100 on.
    """
    if s_k < m + 1:
        raise ValueError("need s_k >= m + 1 to place a decaying tail")
    k = s_k
    one = PLETerm((QE_ZERO,) * (k + 2), (QE_ZERO,) * ell, 1.0 + 0.0j)
    terms = [one]
    n_parts = int(rng.integers(1, 3))
    for _ in range(n_parts):
        j0 = int(rng.integers(m + 1, min(s_k, 3) + 1))
        beta = [QE_ZERO] * (k + 2)
        lead = random_rational(rng, Fraction(1, 4), 1)
        beta[j0 + 1] = QExp(-lead)
        for j in range(j0 + 1, min(s_k, 3) + 1):
            if rng.random() < 0.3:
                beta[j + 1] = QExp(random_rational(rng, -1, 1))
        if m >= 0 and rng.random() < 0.35:
            slot = int(rng.integers(0, m + 1))
            beta[slot + 1] = QExp(0, random_rational(rng, -2, 2))
        gamma = [QE_ZERO] * ell
        if ell and rng.random() < 0.5:
            gamma[int(rng.integers(0, ell))] = QExp(
                random_rational(rng, -1, 1),
                random_rational(rng, -1, 1) if rng.random() < 0.3 else 0)
        coef = complex(rng.uniform(-max_coef, max_coef),
                       rng.uniform(-max_coef, max_coef))
        t1 = PLETerm(tuple(beta), tuple(gamma), 0.5 * coef)
        terms.extend([t1, t1.conj()])
    return PLESum.from_terms(terms, k=k, ell=ell)


def random_subordinate_system(rng, size: int, m: int = 0,
                              t_checks=(100.0, 1e3, 1e4, 1e6),
                              max_tries: int = 200) -> SubordinateSystem:
    """Random valid system of the given size, evaluable at the check times.

    Redraws (deterministically from the generator stream) until every Y_k
    stays above 0.55 on the check grid; coefficients are small enough that
    this succeeds quickly.
    """
    for _ in range(max_tries):
        depths = []
        s = max(m + 1, 1)
        for _k in range(size):
            s = min(3, s + int(rng.integers(0, 2)))
            depths.append(s)
        entries = []
        try:
            for idx, s_k in enumerate(depths, start=1):
                entries.append((s_k, random_plus_function(rng, s_k, idx - 1, m)))
            sys = SubordinateSystem(entries, m)
            y = sys.eval_Y(np.asarray(t_checks, float))
            if y.size == 0 or float(np.min(y)) >= 0.55:
                return sys
        except (EvaluationError, LogDomainError):
            continue
    raise RuntimeError("could not draw a valid subordinate system")
