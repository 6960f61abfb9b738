"""Truncated Fourier representation of the periodic function spaces.

Fields are sparse maps from integer wavevectors to complex 3-vectors.  The
viscosity and the largest period are normalized to 1 and 2*pi, so the
smallest diffusion eigenvalue is exactly 1.  All operators here are diagonal
or block-diagonal per mode except the bilinear term, which is an exact
convolution (direct summation for sparse supports, zero-padded FFT for dense
ones; no aliasing in either path).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainMismatchError,
    InvalidModeError,
    NormOverflowError,
    SupportCapError,
)

TWO_PI = 2.0 * math.pi

#: sparse/dense crossover for the convolution, in active modes per input
CONVOLUTION_CROSSOVER = 512

#: exponent bound for the Gevrey weight e^{sigma*sqrt(lam)} * lam^alpha
WEIGHT_EXPONENT_GUARD = 700.0


@dataclass(frozen=True)
class DomainConfig:
    """Periodic box and componentwise truncation bound.

    The largest period must equal 2*pi (use :meth:`rescaled` to normalize
    another box first).  ``truncation`` bounds every stored wavevector
    componentwise.
    """

    lengths: tuple = (TWO_PI, TWO_PI, TWO_PI)
    truncation: int = 128

    def __post_init__(self):
        if len(self.lengths) != 3 or any(l <= 0 for l in self.lengths):
            raise ValueError("lengths must be three positive reals")
        lmax = max(self.lengths)
        if abs(lmax - TWO_PI) > 1e-12 * TWO_PI:
            raise ValueError(
                f"largest period must be 2*pi after normalization, got {lmax!r}; "
                "use DomainConfig.rescaled(...)"
            )
        if int(self.truncation) < 1:
            raise ValueError("truncation bound must be a positive integer")
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))
        object.__setattr__(self, "truncation", int(self.truncation))

    @classmethod
    def rescaled(cls, lengths, truncation=128) -> "DomainConfig":
        """Normalize an arbitrary box so its largest period becomes 2*pi."""
        lmax = max(lengths)
        scale = TWO_PI / lmax
        return cls(tuple(l * scale for l in lengths), truncation)

    @property
    def wave_factors(self) -> np.ndarray:
        """Per-axis factors 2*pi/l_i mapping integer modes to wavevectors."""
        return TWO_PI / np.asarray(self.lengths)

    def k_L(self, modes) -> np.ndarray:
        """Physical wavevectors for an (n, 3) integer mode array."""
        return np.asarray(modes, dtype=np.float64) * self.wave_factors

    def eigenvalues(self, modes) -> np.ndarray:
        """Diffusion eigenvalues |k_L|^2 for an (n, 3) mode array."""
        kl = self.k_L(modes)
        return np.einsum("ij,ij->i", kl, kl)


@dataclass(frozen=True)
class WaveVector:
    """Nonzero integer wavevector with its domain-derived quantities."""

    k: tuple

    def __post_init__(self):
        k = tuple(int(c) for c in self.k)
        if k == (0, 0, 0):
            raise InvalidModeError("the zero wavevector is excluded (zero-mean space)")
        object.__setattr__(self, "k", k)

    def k_L(self, domain: DomainConfig) -> np.ndarray:
        return domain.k_L(np.asarray([self.k]))[0]

    def eigenvalue(self, domain: DomainConfig) -> float:
        return float(domain.eigenvalues(np.asarray([self.k]))[0])


def stokes_eigenvalue(k, domain: DomainConfig) -> float:
    """Eigenvalue |k_L|^2 of the diffusion operator at integer mode k."""
    if tuple(int(c) for c in k) == (0, 0, 0):
        raise InvalidModeError("the zero wavevector has no eigenvalue here")
    return WaveVector(tuple(k)).eigenvalue(domain)


@dataclass(frozen=True)
class GevreyIndex:
    """Norm indices (alpha, sigma); weight is lam^alpha * e^{sigma*sqrt(lam)}."""

    alpha: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.sigma < 0:
            raise ValueError("Gevrey indices must be nonnegative")


def gevrey_weights(lam: np.ndarray, alpha: float, sigma: float) -> np.ndarray:
    """Squared-norm weights lam^{2 alpha} e^{2 sigma sqrt(lam)}.

    Computed in log space; raises once sigma*sqrt(lam) + alpha*ln(lam) passes
    the e^700 guard.  This is the single weight implementation shared by the
    symbolic and solver paths.
    """
    lam = np.asarray(lam, dtype=np.float64)
    log_w = sigma * np.sqrt(lam) + alpha * np.log(lam)
    if log_w.size and float(np.max(log_w)) > WEIGHT_EXPONENT_GUARD:
        raise NormOverflowError(
            f"Gevrey weight exponent {float(np.max(log_w)):.3g} exceeds "
            f"guard {WEIGHT_EXPONENT_GUARD:g} (alpha={alpha}, sigma={sigma}, "
            f"max lambda={float(np.max(lam)):.6g})"
        )
    return np.exp(2.0 * log_w)


def coef_norm(lam: np.ndarray, coef: np.ndarray, alpha: float, sigma: float) -> float:
    """Gevrey norm of raw coefficient data (any leading shape, last axis 3)."""
    if lam.size == 0:
        return 0.0
    w = gevrey_weights(lam, alpha, sigma)
    mag2 = np.sum(np.abs(coef) ** 2, axis=-1)
    return float(np.sqrt(np.sum(w * mag2)))


def _canonical_order(modes: np.ndarray) -> np.ndarray:
    return np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))


class SpectralField:
    """Zero-mean, divergence-free spectral coefficient map.

    Immutable value object: ``modes`` is an (n, 3) integer array in canonical
    lexicographic order and ``coef`` the matching (n, 3) complex array.  The
    ``real`` flag asserts conjugate symmetry u_{-k} = conj(u_k).
    """

    __slots__ = ("domain", "modes", "coef", "real", "_lam")

    def __init__(self, domain, modes, coef, real=False, _skip_checks=False):
        modes = np.ascontiguousarray(np.asarray(modes, dtype=np.int64).reshape(-1, 3))
        coef = np.ascontiguousarray(np.asarray(coef, dtype=np.complex128).reshape(-1, 3))
        if modes.shape[0] != coef.shape[0]:
            raise ValueError("modes and coefficients disagree in length")
        if not _skip_checks:
            if modes.shape[0]:
                if np.any(np.all(modes == 0, axis=1)):
                    raise InvalidModeError("zero mode stored: field must be zero-mean")
                if np.max(np.abs(modes)) > domain.truncation:
                    raise InvalidModeError(
                        f"mode exceeds truncation bound {domain.truncation}"
                    )
                if np.unique(modes, axis=0).shape[0] != modes.shape[0]:
                    raise ValueError("duplicate modes in field constructor")
            # prune exact-zero coefficient rows, then sort canonically
            keep = np.any(coef != 0, axis=1)
            modes, coef = modes[keep], coef[keep]
            order = _canonical_order(modes) if modes.shape[0] else slice(0)
            modes, coef = modes[order], coef[order]
        modes.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "real", bool(real))
        object.__setattr__(self, "_lam", None)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_modes(cls, domain, entries, real=False) -> "SpectralField":
        """Build from a {(k1,k2,k3): 3-vector} mapping."""
        if not entries:
            return cls.zero(domain, real=real)
        modes = np.array(list(entries.keys()), dtype=np.int64)
        coef = np.array([np.asarray(v, dtype=np.complex128) for v in entries.values()])
        return cls(domain, modes, coef, real=real)

    @classmethod
    def zero(cls, domain, real=True) -> "SpectralField":
        return cls(domain, np.zeros((0, 3), np.int64), np.zeros((0, 3), np.complex128),
                   real=real, _skip_checks=True)

    # -- basic queries ---------------------------------------------------------
    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    def is_zero(self) -> bool:
        return self.n_modes == 0

    def eigenvalues(self) -> np.ndarray:
        if self._lam is None:
            object.__setattr__(self, "_lam", self.domain.eigenvalues(self.modes))
        return self._lam

    def band_extent(self) -> int:
        """Largest componentwise |k| over the support (0 for the zero field)."""
        if self.is_zero():
            return 0
        return int(np.max(np.abs(self.modes)))

    def as_dict(self) -> dict:
        return {tuple(m): c.copy() for m, c in zip(self.modes, self.coef)}

    # -- linear structure --------------------------------------------------------
    def _check_domain(self, other):
        if self.domain != other.domain:
            raise DomainMismatchError("fields live on different domains")

    def __add__(self, other):
        self._check_domain(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        modes = np.concatenate([self.modes, other.modes])
        coef = np.concatenate([self.coef, other.coef])
        umodes, inv = np.unique(modes, axis=0, return_inverse=True)
        acc = np.zeros((umodes.shape[0], 3), np.complex128)
        np.add.at(acc, inv, coef)
        return SpectralField(self.domain, umodes, acc, real=self.real and other.real)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "SpectralField":
        c = complex(c)
        if c == 0:
            return SpectralField.zero(self.domain)
        real = self.real and c.imag == 0.0
        return SpectralField(self.domain, self.modes, self.coef * c, real=real)

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scaled(-1.0)

    def conj(self) -> "SpectralField":
        """Complexification conjugate: coefficient at k becomes conj(coef at -k)."""
        return SpectralField(self.domain, -self.modes, np.conj(self.coef), real=self.real)

    # -- norms and checks --------------------------------------------------------
    def norm(self, g: GevreyIndex | None = None, alpha=None, sigma=None) -> float:
        if g is not None:
            alpha, sigma = g.alpha, g.sigma
        alpha = 0.0 if alpha is None else alpha
        sigma = 0.0 if sigma is None else sigma
        return coef_norm(self.eigenvalues(), self.coef, alpha, sigma)

    def h_norm(self) -> float:
        return self.norm(alpha=0.0, sigma=0.0)

    def divergence_residual(self) -> float:
        """Relative size of k_L . u_k over the support (0 for solenoidal)."""
        if self.is_zero():
            return 0.0
        kl = self.domain.k_L(self.modes)
        dots = np.abs(np.einsum("ij,ij->i", kl, self.coef))
        scale = np.linalg.norm(kl, axis=1) * np.linalg.norm(self.coef, axis=1)
        scale[scale == 0] = 1.0
        return float(np.max(dots / scale))

    def reality_residual(self) -> float:
        """Max relative defect of u_{-k} = conj(u_k) over the support."""
        if self.is_zero():
            return 0.0
        d = (self - self.conj()).h_norm()
        n = self.h_norm()
        return d / n if n > 0 else d

    def allclose(self, other, rtol=1e-12) -> bool:
        self._check_domain(other)
        scale = max(self.h_norm(), other.h_norm())
        if scale == 0.0:
            return True
        return (self - other).h_norm() <= rtol * scale

    def real_part(self) -> "SpectralField":
        """Project onto the real subspace: (u + conj(u)) / 2, flag set."""
        half = (self + self.conj()).scaled(0.5)
        return SpectralField(half.domain, half.modes, half.coef, real=True)

    # -- serialization ------------------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "lengths": list(self.domain.lengths),
            "truncation": self.domain.truncation,
            "real": self.real,
            "modes": [
                {"k": [int(a) for a in m],
                 "re": [float(x.real) for x in c],
                 "im": [float(x.imag) for x in c]}
                for m, c in zip(self.modes, self.coef)
            ],
        }

    @classmethod
    def from_json_dict(cls, data) -> "SpectralField":
        domain = DomainConfig(tuple(data["lengths"]), data["truncation"])
        n = len(data["modes"])
        modes = np.zeros((n, 3), np.int64)
        coef = np.zeros((n, 3), np.complex128)
        for i, entry in enumerate(data["modes"]):
            modes[i] = entry["k"]
            # assign parts separately: signed zeros survive bit-exactly
            coef[i].real = np.asarray(entry["re"], float)
            coef[i].imag = np.asarray(entry["im"], float)
        return cls(domain, modes, coef, real=data.get("real", False))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    def __repr__(self):
        return (f"SpectralField(n_modes={self.n_modes}, real={self.real}, "
                f"h_norm={self.h_norm():.6g})")


# -- pointwise/diagonal operators ------------------------------------------------

def leray_project(field: SpectralField) -> SpectralField:
    """Remove the gradient part: u_k -> u_k - (u_k . khat)(khat) per mode."""
    if field.is_zero():
        return field
    kl = field.domain.k_L(field.modes)
    khat = kl / np.linalg.norm(kl, axis=1, keepdims=True)
    dots = np.einsum("ij,ij->i", khat, field.coef)
    coef = field.coef - dots[:, None] * khat
    return SpectralField(field.domain, field.modes, coef, real=field.real)


def gevrey_norm(field: SpectralField, g: GevreyIndex) -> float:
    return field.norm(g)


def apply_resolvent(field: SpectralField, omega: float) -> SpectralField:
    """Divide each coefficient by (lambda + i*omega); bounded since lambda >= 1."""
    if field.is_zero():
        return field
    lam = field.eigenvalues()
    coef = field.coef / (lam + 1j * float(omega))[:, None]
    return SpectralField(field.domain, field.modes, coef,
                         real=field.real and omega == 0.0)


def apply_stokes(field: SpectralField, shift: complex = 0.0) -> SpectralField:
    """Multiply each coefficient by (lambda + shift)."""
    if field.is_zero():
        return field
    lam = field.eigenvalues()
    coef = field.coef * (lam + complex(shift))[:, None]
    real = field.real and complex(shift).imag == 0.0
    return SpectralField(field.domain, field.modes, coef, real=real)


def project_P_Lambda(field: SpectralField, lam_max: float) -> SpectralField:
    """Retain exactly the modes with eigenvalue <= lam_max (inf = identity)."""
    if field.is_zero() or math.isinf(lam_max):
        return field
    keep = field.eigenvalues() <= lam_max * (1.0 + 1e-12)
    return SpectralField(field.domain, field.modes[keep], field.coef[keep],
                         real=field.real)


def h_inner(u: SpectralField, v: SpectralField) -> complex:
    """H inner product sum_k u_k . conj(v_k) over the common support."""
    u._check_domain(v)
    if u.is_zero() or v.is_zero():
        return 0.0 + 0.0j
    du, dv = u.as_dict(), v.as_dict()
    total = 0.0 + 0.0j
    for k, cu in du.items():
        cv = dv.get(k)
        if cv is not None:
            total += np.sum(cu * np.conj(cv))
    return complex(total)


# -- exact convolution (the bilinear term) ---------------------------------------

def _apply_cap(domain, modes, coef, cap, cap_policy):
    """Split by the componentwise band cap; raise or drop per policy."""
    if modes.shape[0] == 0 or cap is None:
        return modes, coef, None
    inside = np.max(np.abs(modes), axis=1) <= cap
    if np.all(inside):
        return modes, coef, None
    dropped_modes, dropped_coef = modes[~inside], coef[~inside]
    lam = domain.eigenvalues(dropped_modes)
    dropped_norm = coef_norm(lam, dropped_coef, 0.0, 0.0)
    lo = int(np.min(np.max(np.abs(dropped_modes), axis=1)))
    hi = int(np.max(np.abs(dropped_modes)))
    report = {"band": (lo, hi), "h_norm": dropped_norm}
    if cap_policy == "raise" and dropped_norm > 0.0:
        retained = SpectralField(domain, modes[inside], coef[inside])
        raise SupportCapError(
            f"convolution support exceeded cap {cap}: dropped band "
            f"|k|_inf in [{lo}, {hi}] with Gevrey (0,0) norm {dropped_norm:.6g}",
            retained=retained, dropped_band=(lo, hi), dropped_norm=dropped_norm,
        )
    return modes[inside], coef[inside], report


def _bilinear_direct(u, v, cap, cap_policy):
    domain = u.domain
    mu, cu = u.modes, u.coef
    mv, cv = v.modes, v.coef
    klv = domain.k_L(mv)
    # (u . grad) v in coefficients: i (u_{k'} . k''_L) v_{k''} at k' + k''
    dots = cu @ klv.T                       # (n, m)
    out = (1j * dots)[:, :, None] * cv[None, :, :]
    kout = (mu[:, None, :] + mv[None, :, :]).reshape(-1, 3)
    out = out.reshape(-1, 3)
    nonzero_mode = np.any(kout != 0, axis=1)
    kout, out = kout[nonzero_mode], out[nonzero_mode]
    if kout.shape[0] == 0:
        return kout.reshape(0, 3), out.reshape(0, 3), None
    umodes, inv = np.unique(kout, axis=0, return_inverse=True)
    acc = np.zeros((umodes.shape[0], 3), np.complex128)
    np.add.at(acc, inv, out)
    umodes, acc, report = _apply_cap(domain, umodes, acc, cap, cap_policy)
    return umodes, acc, report


def _bilinear_fft(u, v, cap, cap_policy):
    domain = u.domain
    ext = u.band_extent() + v.band_extent()
    size = 2 * ext + 2
    grid = 1
    while grid < size:
        grid *= 2
    fac = domain.wave_factors

    def dense(field):
        arr = np.zeros((3, grid, grid, grid), np.complex128)
        idx = np.mod(field.modes, grid)
        arr[:, idx[:, 0], idx[:, 1], idx[:, 2]] = field.coef.T
        return arr

    uu = dense(u)
    vv = dense(v)
    freq = np.fft.fftfreq(grid, d=1.0 / grid)
    kx = freq[:, None, None] * fac[0]
    ky = freq[None, :, None] * fac[1]
    kz = freq[None, None, :] * fac[2]
    u_phys = np.fft.ifftn(uu, axes=(1, 2, 3)) * grid**3
    w_hat = np.zeros_like(uu)
    for i in range(3):
        dvi = np.fft.ifftn(
            1j * np.stack([kx * vv[i], ky * vv[i], kz * vv[i]]), axes=(1, 2, 3)
        ) * grid**3
        prod = np.sum(u_phys * dvi, axis=0)
        w_hat[i] = np.fft.fftn(prod) / grid**3
    rng = np.arange(-ext, ext + 1)
    ii, jj, kk = np.meshgrid(rng, rng, rng, indexing="ij")
    kout = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    widx = np.mod(kout, grid)
    coef = w_hat[:, widx[:, 0], widx[:, 1], widx[:, 2]].T
    keep = np.any(coef != 0, axis=1) & np.any(kout != 0, axis=1)
    kout, coef = kout[keep], coef[keep]
    kout, coef, report = _apply_cap(domain, kout, coef, cap, cap_policy)
    return kout, coef, report


def bilinear_B(u: SpectralField, v: SpectralField, cap=None, cap_policy="raise",
               method="auto"):
    """Exact spectral bilinear term: Leray projection of (u . grad) v.

    ``cap`` bounds the componentwise output band (default: the domain
    truncation).  With ``cap_policy='raise'`` exceeding it raises
    :class:`SupportCapError` carrying the retained part and the dropped
    band's norm; with ``'truncate'`` the capped field is returned and the
    drop recorded on ``field.cap_report`` wrapper returned by
    :func:`bilinear_B_with_report`.
    """
    out, _ = bilinear_B_with_report(u, v, cap=cap, cap_policy=cap_policy,
                                    method=method)
    return out


def bilinear_B_with_report(u, v, cap=None, cap_policy="raise", method="auto"):
    """Like :func:`bilinear_B` but also returns the drop report (or None)."""
    u._check_domain(v)
    if cap is None:
        cap = u.domain.truncation
    if u.is_zero() or v.is_zero():
        return SpectralField.zero(u.domain, real=u.real and v.real), None
    if method == "auto":
        method = "direct" if max(u.n_modes, v.n_modes) <= CONVOLUTION_CROSSOVER \
            else "fft"
    if method == "direct":
        modes, coef, report = _bilinear_direct(u, v, cap, cap_policy)
    elif method == "fft":
        modes, coef, report = _bilinear_fft(u, v, cap, cap_policy)
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    raw = SpectralField(u.domain, modes, coef, real=u.real and v.real)
    return leray_project(raw), report
