"""Iterated logarithms, subordinate-variable systems, and sum evaluation.

The log-scale variables are z_{-1} = e^t, z_0 = t, z_1 = ln t, ... and the
subordinate variables are evaluated recursively: Y_k(t) substitutes the
earlier Y_j into the substitution function Z_k along the log chain.  All
evaluation happens in log space (powers via exp(beta * ln z)), so e^t never
overflows: the only place t enters directly is the exponent beta_{-1} * t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate

from .errors import BuildError, EvaluationError, LogDomainError
from .ple import (
    PLESum,
    dzeta,
    in_class,
    is_plus_class,
    is_real_symmetric,
    multiply,
    op_M,
    op_R,
)

#: exponent guard for exp() in term evaluation
EVAL_EXPONENT_GUARD = 700.0

_TWO_PI_HI = 6.283185307179586
#: 2*pi - _TWO_PI_HI to double-double accuracy
_TWO_PI_LO = 2.4492935982947064e-16
_SPLITTER = 134217729.0  # 2^27 + 1, Dekker splitting constant


def _two_prod(a, x):
    """Exact product a*x = hi + lo of doubles (Dekker/Veltkamp split)."""
    hi = a * x
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cx = _SPLITTER * x
    x_hi = cx - (cx - x)
    x_lo = x - x_hi
    lo = ((a_hi * x_hi - hi) + a_hi * x_lo + a_lo * x_hi) + a_lo * x_lo
    return hi, lo


def reduced_phase(coef: float, x):
    """coef * x reduced mod 2*pi with ~1e-15 absolute accuracy.

    Large phases like omega * t lose absolute precision if formed naively
    (one ulp of 2e6 is already 5e-10), which would spoil pointwise
    comparisons between the complex-power and sinusoid evaluation paths.
    The product is formed exactly (double-double) and the multiple of 2*pi
    removed against a two-term split of the constant.
    """
    x = np.asarray(x, dtype=np.float64)
    hi, lo = _two_prod(float(coef), x)
    r = np.fmod(hi, _TWO_PI_HI)          # exact: hi - n*TWO_PI_HI, IEEE fmod
    n = np.floor(hi / _TWO_PI_HI)        # off-by-one harmless: costs ~2e-16
    return r - n * _TWO_PI_LO + lo

_E0_CACHE = [0.0]  # E_m(0) for m = 0, 1, 2, ...


def iterated_exp_at_zero(m: int) -> float:
    """E_m(0): 0, 1, e, e^e, ...; saturates to inf once it overflows."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    while len(_E0_CACHE) <= m:
        prev = _E0_CACHE[-1]
        _E0_CACHE.append(math.exp(prev) if prev < 700.0 else math.inf)
    return _E0_CACHE[m]


def iterated_log(m: int, t):
    """L_m(t): e^t for m = -1, t for m = 0, then m-fold logarithms.

    Defined for t > E_{m-1}(0) when m >= 1 (the value is 0 at t = E_m(0) and
    positive beyond it); any t is fine for m <= 0.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if m < -1:
        raise ValueError("level must be >= -1")
    if m == -1:
        out = np.exp(t_arr)
    elif m == 0:
        out = t_arr
    else:
        lo = iterated_exp_at_zero(m - 1)
        if np.any(t_arr <= lo):
            raise LogDomainError(
                f"L_{m} needs t > E_{m - 1}(0) = {lo:.6g} (and is positive only "
                f"for t > E_{m}(0) = {iterated_exp_at_zero(m):.6g})"
            )
        out = t_arr
        for _ in range(m):
            out = np.log(out)
    return out if isinstance(t, np.ndarray) else float(out)


@dataclass(frozen=True)
class LogChain:
    """The vector (L_{-1}(t), ..., L_k(t)) and its logs, with domain checks."""

    k: int

    def __post_init__(self):
        if self.k < -1:
            raise ValueError("chain depth must be >= -1")

    def domain_start(self) -> float:
        """Positivity threshold: every entry is positive for t > E_k(0)."""
        return iterated_exp_at_zero(max(self.k, 0))

    def log_values(self, t) -> np.ndarray:
        """Array of ln L_j(t) for j = -1..k (so entry [0] is t itself).

        Requires L_j(t) > 0 for every 0 <= j <= k; the last entry
        ln L_k = L_{k+1} may be negative.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.empty((self.k + 2,) + t_arr.shape)
        out[0] = t_arr                       # ln z_{-1} = ln e^t = t
        level = t_arr                        # L_0
        for j in range(0, self.k + 1):
            if np.any(level <= 0.0):
                raise LogDomainError(
                    f"L_{j}(t) <= 0: evaluation needs t > E_{self.k}(0) = "
                    f"{self.domain_start():.6g}"
                )
            level = np.log(level)            # L_{j+1} = ln L_j
            out[j + 1] = level
        return out if np.ndim(t) else out[:, 0]


def _term_factors(p: PLESum, logz: np.ndarray, log_zeta) -> np.ndarray:
    """(n_terms, nt) complex factors exp(beta . ln z + gamma . ln zeta).

    Real and imaginary exponent parts are accumulated separately; every
    imaginary contribution is phase-reduced mod 2*pi before summation so the
    result keeps full precision even when beta_{-1} * t is huge.
    """
    nt = logz.shape[1]
    out = np.empty((p.n_terms, nt), dtype=np.complex128)
    for i, t in enumerate(p.terms):
        w_re = np.zeros(nt)
        w_im = np.zeros(nt)
        for j, b in enumerate(t.beta):
            if b.is_zero():
                continue
            x = logz[j]
            if b.re != 0:
                w_re = w_re + float(b.re) * x
            if b.im != 0:
                w_im = w_im + reduced_phase(float(b.im), x)
        for j, g in enumerate(t.gamma):
            if g.is_zero():
                continue
            x = log_zeta[j]
            if g.re != 0:
                w_re = w_re + float(g.re) * x
            if g.im != 0:
                w_im = w_im + reduced_phase(float(g.im), x)
        if w_re.size and float(np.max(w_re)) > EVAL_EXPONENT_GUARD:
            raise EvaluationError(
                f"term factor exponent {float(np.max(w_re)):.3g} exceeds "
                f"guard {EVAL_EXPONENT_GUARD:g}"
            )
        out[i] = np.exp(w_re) * (np.cos(w_im) + 1j * np.sin(w_im))
    return out


class SubordinateSystem:
    """Ordered substitution functions (s_k, Z_k) with level m.

    Derived data: the W_k sums implementing d/dt Y_k, and the smallest time
    T_min at which every log is defined and every Y_k(t) >= 1/2.
    """

    def __init__(self, entries, m: int, validate: bool = True):
        self.m = int(m)
        self.entries = []
        prev_s = 0
        for idx, (s_k, Z_k) in enumerate(entries, start=1):
            s_k = int(s_k)
            if s_k < 1:
                raise ValueError("subordinate depth s_k must be a positive integer")
            if s_k < prev_s:
                raise ValueError("depths s_k must be nondecreasing in k")
            prev_s = s_k
            Z_k = Z_k.pad(s_k, idx - 1)
            self.entries.append((s_k, Z_k))
        if self.m < 0:
            raise ValueError("level m must be nonnegative")
        self._W = None
        self._t_min = None
        if validate:
            self.validate()

    # -- structure ------------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def depths(self):
        return [s for s, _ in self.entries]

    @property
    def max_depth(self) -> int:
        return max(self.depths, default=0)

    def validate(self):
        for idx, (s_k, Z_k) in enumerate(self.entries, start=1):
            report = is_plus_class(Z_k, self.m)
            try:
                report.raise_if_failed()
            except Exception as exc:
                raise type(exc)(f"Z_{idx}: {exc}", getattr(exc, "clause", None)) \
                    from None

    # -- W recursion -------------------------------------------------------------
    @property
    def W(self):
        """Scalar sums with d/dt Y_k(t) = W_k(logs, earlier Y's)."""
        if self._W is None:
            self._W = build_W(self)
        return self._W

    # -- evaluation ----------------------------------------------------------------
    def eval_Y(self, t, strict: bool = True) -> np.ndarray:
        """Vector (Y_1(t), ..., Y_K(t)); shape (K,) or (K, nt) for array t.

        With ``strict`` the values are required to be real (tiny imaginary
        residue) and at least 1/2.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if self.size == 0:
            out = np.zeros((0,) + t_arr.shape)
            return out if np.ndim(t) else out[:, 0]
        chain = LogChain(self.max_depth)
        logz_full = np.atleast_2d(chain.log_values(t_arr))
        if logz_full.ndim == 1:
            logz_full = logz_full[:, None]
        ys = []
        log_ys = []
        for idx, (s_k, Z_k) in enumerate(self.entries, start=1):
            logz = logz_full[: s_k + 2]
            factors = _term_factors(Z_k, logz, log_ys)
            vals = np.zeros(t_arr.shape, dtype=np.complex128)
            for i, term_ in enumerate(Z_k.terms):
                vals = vals + factors[i] * complex(term_.xi)
            imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
            scale = float(np.max(np.abs(vals))) if vals.size else 0.0
            if strict and scale > 0 and imag > 1e-12 * max(scale, 1.0):
                raise EvaluationError(
                    f"Y_{idx} has imaginary residue {imag:.3g}"
                )
            real_vals = vals.real
            if strict and np.any(real_vals < 0.5):
                raise EvaluationError(
                    f"Y_{idx}(t) < 1/2 at t = "
                    f"{float(t_arr[np.argmin(real_vals)]):.6g}; "
                    f"evaluate at t >= T_min = {self.T_min:.6g}"
                )
            if np.any(real_vals <= 0.0):
                raise EvaluationError(f"Y_{idx}(t) <= 0; outside domain")
            ys.append(real_vals)
            log_ys.append(np.log(real_vals))
        out = np.stack(ys)
        return out if np.ndim(t) else out[:, 0]

    def _all_valid(self, t) -> bool:
        try:
            self.eval_Y(t, strict=True)
            return True
        except (EvaluationError, LogDomainError):
            return False

    @property
    def T_min(self) -> float:
        """Smallest time with all logs defined and all Y_k >= 1/2.

        Found by a decade scan up the reachable range followed by bisection;
        raises if no double-precision time qualifies.
        """
        if self._t_min is None:
            self._t_min = self._scan_t_min()
        return self._t_min

    def _scan_t_min(self) -> float:
        lo = LogChain(self.max_depth).domain_start() if self.size else 0.0
        if math.isinf(lo):
            raise LogDomainError(
                "the subordinate chain is too deep: its domain starts beyond "
                "double precision, so no T_min is reachable"
            )
        if self.size == 0:
            return 0.0
        probes = [lo + 10.0 ** e for e in range(-2, 16)]
        good = None
        prev = lo
        for t in probes:
            if self._all_valid(t):
                good = t
                break
            prev = t
        if good is None:
            raise LogDomainError("no T_min found below 1e16")
        for _ in range(60):
            mid = 0.5 * (prev + good)
            if self._all_valid(mid):
                good = mid
            else:
                prev = mid
            if good - prev <= 1e-3 * max(1.0, abs(good)):
                break
        return good

    # -- serialization ----------------------------------------------------------
    def to_json_dict(self, field_encoder=None) -> dict:
        return {
            "m": self.m,
            "entries": [{"s": s, "Z": Z.to_json_dict(field_encoder)}
                        for s, Z in self.entries],
        }

    @classmethod
    def from_json_dict(cls, data, validate=True) -> "SubordinateSystem":
        entries = [(e["s"], PLESum.from_json_dict(e["Z"]))
                   for e in data["entries"]]
        return cls(entries, data["m"], validate=validate)


def build_W(sys: SubordinateSystem):
    """The derivative sums: W_k = R Z_k + sum_{j<k} W_j dZ_k/dzeta_j.

    Each W_k must land in the level-0 class with decay exponent -1 and be
    conjugation-closed; a violation means an invalid Z_k slipped through
    validation.
    """
    ws = []
    for idx, (s_k, Z_k) in enumerate(sys.entries, start=1):
        w = op_R(Z_k)
        for j in range(1, idx):
            w = w + multiply(ws[j - 1].pad(s_k, idx - 1), dzeta(Z_k, j))
        if not w.is_zero():
            if not in_class(w, 0, -1):
                raise BuildError(
                    f"W_{idx} leaves the level-0 class with decay -1; "
                    f"Z_{idx} is invalid"
                )
            if not is_real_symmetric(w):
                raise BuildError(f"W_{idx} is not conjugation-closed")
        ws.append(w)
    return ws


def time_derivative(p: PLESum, sys: SubordinateSystem | None = None) -> PLESum:
    """Symbolic d/dt of t -> p(logs(t), Y(t)).

    Chain rule over the log-scale and subordinate variables:
    M_{-1} p + R p + sum_j W_j dp/dzeta_j.
    """
    out = op_M(p, -1)
    if p.k >= 0:
        out = out + op_R(p)
    if p.ell > 0:
        if sys is None or sys.size < p.ell:
            raise ValueError("sum depends on subordinate variables: pass the system")
        for j in range(1, p.ell + 1):
            dj = dzeta(p, j)
            if not dj.is_zero():
                out = out + multiply(sys.W[j - 1].pad(p.k, p.ell), dj)
    return out


def eval_sum(p: PLESum, t, sys: SubordinateSystem | None = None,
             strict: bool = True, rtol: float = 1e-12, domain=None):
    """Evaluate a sum at scalar time t: substitutes the log chain and Y's.

    Returns a complex scalar / SpectralField; conjugation-closed sums come
    back real (float, or a real-flagged field) after an imaginary-residue
    check.  ``domain`` is only needed for empty field-valued sums.
    """
    factors, xi_list, symmetric = eval_factors(p, np.asarray([float(t)]), sys)
    if p.scalar:
        total = complex(sum(f[0] * xi for f, xi in zip(factors, xi_list)))
        if symmetric:
            scale = max(abs(total), 1e-300)
            if strict and abs(total.imag) > rtol * max(scale, 1.0):
                raise EvaluationError(
                    f"imaginary residue {abs(total.imag):.3g} on a "
                    "conjugation-closed sum"
                )
            return total.real
        return total
    from .spectral import SpectralField
    if p.is_zero():
        if domain is None:
            raise EvaluationError("pass a domain to evaluate an empty field sum")
        return SpectralField.zero(domain)
    dom = xi_list[0].domain
    total = SpectralField.zero(dom)
    for f, xi in zip(factors, xi_list):
        total = total + xi.scaled(complex(f[0]))
    if symmetric and not total.is_zero():
        if strict and total.reality_residual() > 1e-8:
            raise EvaluationError(
                f"reality residue {total.reality_residual():.3g} on a "
                "conjugation-closed sum"
            )
        total = total.real_part()
    return total


def eval_factors(p: PLESum, ts: np.ndarray,
                 sys: SubordinateSystem | None = None):
    """Vectorized term factors over a time grid.

    Returns (factors, xi_list, symmetric): factors has shape
    (n_terms, len(ts)) and xi_list the matching coefficients.
    """
    ts = np.asarray(ts, dtype=np.float64)
    chain = LogChain(p.k)
    logz = chain.log_values(ts)
    if logz.ndim == 1:
        logz = logz[:, None]
    if p.ell > 0:
        if sys is None or sys.size < p.ell:
            raise EvaluationError(
                "sum depends on subordinate variables: pass the system")
        y = sys.eval_Y(ts)
        log_zeta = [np.log(y[j]) for j in range(p.ell)]
    else:
        log_zeta = []
    factors = _term_factors(p, logz, log_zeta)
    xi_list = [t.xi for t in p.terms]
    return factors, xi_list, is_real_symmetric(p)


@dataclass(frozen=True)
class IntegralBoundResult:
    """Samples of the convolution-with-decay ratio and its extremes."""

    t_grid: tuple
    ratios: tuple
    max_ratio: float
    last_ratio: float
    gamma: float = field(default=0.0)


def check_integral_bound(m: int, lam: float, gamma: float, T_star: float,
                         t_grid) -> IntegralBoundResult:
    """Ratio of int_0^t e^{-gamma (t-s)} L_m(T_*+s)^{-lam} ds to L_m(T_*+t)^{-lam}.

    Adaptive quadrature on the substituted integrand; the ratio is finite for
    all t and approaches 1/gamma from below-ish as t grows.
    """
    if lam <= 0 or gamma <= 0:
        raise ValueError("lam and gamma must be positive")
    if T_star <= iterated_exp_at_zero(m):
        raise ValueError(
            f"T_star must exceed E_{m}(0) = {iterated_exp_at_zero(m):.6g}")
    ratios = []
    grid = [float(t) for t in t_grid]
    for t in grid:
        if t == 0.0:
            ratios.append(0.0)
            continue

        def integrand(s, _t=t):
            return math.exp(-gamma * s) * iterated_log(m, T_star + _t - s) ** (-lam)

        val, err = _integrate.quad(integrand, 0.0, t, limit=200,
                                   epsabs=1e-13, epsrel=1e-11)
        if not math.isfinite(val) or err > max(1e-6 * abs(val), 1e-9):
            raise EvaluationError(
                f"quadrature did not converge at t={t} (err {err:.3g})")
        ratios.append(val * iterated_log(m, T_star + t) ** lam)
    return IntegralBoundResult(
        t_grid=tuple(grid), ratios=tuple(ratios),
        max_ratio=max(ratios), last_ratio=ratios[-1], gamma=gamma)
