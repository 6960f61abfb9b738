"""Real sinusoidal representation and its complex-power conversion.

A real term is z^beta zeta^gamma (product of cos/sin factors) xi with real
rational exponents and a real coefficient.  Converting to complex powers
replaces cos(w L_j) by (z_{j-1}^{iw} + z_{j-1}^{-iw})/2 and its sine analogue
(and likewise cos(w ln zeta_j) by zeta_j^{+-iw}/2), producing a
conjugation-closed sum.  Converting back expands each conjugate pair into
2 Re[...] over products of sinusoids; the inverse direction needs one extra
log level z_{k+1} exactly when the last z-exponent carries an imaginary part
(the IP(k) property).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EvaluationError
from .exponents import QExp, rat
from .ple import PLESum, PLETerm, is_real_symmetric
from .spectral import SpectralField
from .subordinate import LogChain, reduced_phase


@dataclass(frozen=True)
class SinFactor:
    """One sinusoid factor: kind(omega * argument).

    ``target`` is "z" with index in [0, k] (argument L_index(t)) or "zeta"
    with index in [1, ell] (argument ln zeta_index).
    """

    kind: str
    omega: Fraction
    target: str
    index: int

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ValueError("factor kind must be 'cos' or 'sin'")
        if self.target not in ("z", "zeta"):
            raise ValueError("factor target must be 'z' or 'zeta'")
        object.__setattr__(self, "omega", rat(self.omega))

    def sort_key(self):
        return (self.target, self.index, self.kind, self.omega)

    def to_json(self):
        return {"kind": self.kind,
                "omega": [self.omega.numerator, self.omega.denominator],
                "target": self.target, "index": self.index}

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], Fraction(*d["omega"]), d["target"], d["index"])


def _xi_is_field(xi):
    return isinstance(xi, SpectralField)


class RealTerm:
    """z^beta zeta^gamma (prod of sinusoids) xi with everything real."""

    __slots__ = ("beta", "gamma", "factors", "xi")

    def __init__(self, beta, gamma, factors, xi):
        beta = tuple(rat(b) for b in beta)
        gamma = tuple(rat(g) for g in gamma)
        cleaned = []
        sign = 1.0
        zero_term = False
        for f in factors:
            if f.omega == 0:
                if f.kind == "sin":
                    zero_term = True
                continue  # cos(0) is the constant 1
            if f.omega < 0:
                f = SinFactor(f.kind, -f.omega, f.target, f.index)
                if f.kind == "sin":
                    sign = -sign
            cleaned.append(f)
        cleaned.sort(key=SinFactor.sort_key)
        if zero_term:
            xi = xi.scaled(0.0) if _xi_is_field(xi) else 0.0
        elif sign != 1.0:
            xi = xi.scaled(sign) if _xi_is_field(xi) else sign * xi
        k = len(beta) - 2
        ell = len(gamma)
        for f in cleaned:
            if f.target == "z" and not (0 <= f.index <= k):
                raise ValueError(f"z factor index {f.index} outside [0, {k}]")
            if f.target == "zeta" and not (1 <= f.index <= ell):
                raise ValueError(f"zeta factor index {f.index} outside [1, {ell}]")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "factors", tuple(cleaned))
        object.__setattr__(self, "xi", xi)

    def __setattr__(self, name, value):
        raise AttributeError("RealTerm is immutable")

    @property
    def k(self):
        return len(self.beta) - 2

    @property
    def ell(self):
        return len(self.gamma)

    def key(self):
        return (self.beta, self.gamma, self.factors)

    def pad(self, k, ell):
        beta = self.beta + (Fraction(0),) * (k + 2 - len(self.beta))
        gamma = self.gamma + (Fraction(0),) * (ell - len(self.gamma))
        return RealTerm(beta, gamma, self.factors, self.xi)


class RealSum:
    """Canonical finite sum of real sinusoidal terms with dims (k, ell)."""

    __slots__ = ("terms", "k", "ell", "scalar")

    def __init__(self, terms, k, ell, scalar=None):
        merged = {}
        for t in terms:
            if t.k != k or t.ell != ell:
                t = t.pad(k, ell)
            cur = merged.get(t.key())
            if cur is None:
                merged[t.key()] = t.xi
            else:
                merged[t.key()] = (cur + t.xi) if _xi_is_field(t.xi) \
                    else cur + t.xi
        kept = []
        for (beta, gamma, factors), xi in merged.items():
            if _xi_is_field(xi):
                if xi.is_zero():
                    continue
            elif xi == 0:
                continue
            kept.append(RealTerm(beta, gamma, factors, xi))
        kept.sort(key=lambda t: (t.beta, t.gamma,
                                 tuple(f.sort_key() for f in t.factors)))
        if scalar is None:
            if not kept:
                raise ValueError("empty real sum needs an explicit scalar flag")
            scalar = not _xi_is_field(kept[0].xi)
        object.__setattr__(self, "terms", tuple(kept))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "scalar", bool(scalar))

    def __setattr__(self, name, value):
        raise AttributeError("RealSum is immutable")

    @property
    def n_terms(self):
        return len(self.terms)

    def eval(self, t, sys=None):
        """Direct evaluation along the log chain (real arithmetic)."""
        chain = LogChain(self.k)
        logz = chain.log_values(float(t))
        if self.ell > 0:
            if sys is None or sys.size < self.ell:
                raise EvaluationError("real sum needs the subordinate system")
            y = sys.eval_Y(float(t))
            log_zeta = np.log(y)
        else:
            log_zeta = np.zeros(0)
        total = None
        for term_ in self.terms:
            w = 0.0
            for j, b in enumerate(term_.beta):
                if b != 0:
                    w += float(b) * logz[j]
            for j, g in enumerate(term_.gamma):
                if g != 0:
                    w += float(g) * log_zeta[j]
            value = np.exp(w)
            for f in term_.factors:
                # logz[j] equals L_j(t) exactly (ln of level j-1); the same
                # reduced-phase product keeps this path consistent with the
                # complex-power evaluation to ~1e-15 even for huge omega * t
                if f.target == "z":
                    arg = reduced_phase(float(f.omega), logz[f.index])
                else:
                    arg = reduced_phase(float(f.omega), log_zeta[f.index - 1])
                value *= np.cos(arg) if f.kind == "cos" else np.sin(arg)
            piece = term_.xi.scaled(value) if _xi_is_field(term_.xi) \
                else term_.xi * value
            total = piece if total is None else total + piece
        if total is None:
            return 0.0 if self.scalar else None
        return total

    def to_json_dict(self):
        def enc(xi):
            if _xi_is_field(xi):
                return {"field": xi.to_json_dict()}
            return {"scalar": [float(xi), 0.0]}
        return {
            "k": self.k, "ell": self.ell, "scalar": self.scalar,
            "terms": [{"beta": [[b.numerator, b.denominator] for b in t.beta],
                       "gamma": [[g.numerator, g.denominator] for g in t.gamma],
                       "factors": [f.to_json() for f in t.factors],
                       "xi": enc(t.xi)} for t in self.terms],
        }

    @classmethod
    def from_json_dict(cls, data):
        terms = []
        for t in data["terms"]:
            xi = (SpectralField.from_json_dict(t["xi"]["field"])
                  if "field" in t["xi"] else t["xi"]["scalar"][0])
            terms.append(RealTerm(
                tuple(Fraction(a, b) for a, b in t["beta"]),
                tuple(Fraction(a, b) for a, b in t["gamma"]),
                tuple(SinFactor.from_json(f) for f in t["factors"]), xi))
        return cls(terms, data["k"], data["ell"], scalar=data["scalar"])


# -- conversions -------------------------------------------------------------------

def to_complex(rsum: RealSum) -> PLESum:
    """Replace each sinusoid by its half-sum of conjugate complex powers.

    The result is conjugation-closed and satisfies IP(k): a factor with
    argument L_j turns into powers of z_{j-1}, so the last variable z_k never
    acquires an imaginary exponent.
    """
    out_terms = []
    k, ell = rsum.k, rsum.ell
    for t in rsum.terms:
        base_beta = [QExp(b) for b in t.beta]
        base_gamma = [QExp(g) for g in t.gamma]
        pieces = [(tuple(base_beta), tuple(base_gamma), 1.0 + 0.0j)]
        for f in t.factors:
            w = f.omega
            new_pieces = []
            for beta, gamma, coef in pieces:
                for sgn in (+1, -1):
                    if f.kind == "cos":
                        c = coef * 0.5
                    else:
                        c = coef * (0.5 / 1j) * sgn
                    bump = QExp(0, sgn * w)
                    if f.target == "z":
                        slot = f.index  # z_{index-1} sits at tuple slot index
                        nb = list(beta)
                        nb[slot] = nb[slot] + bump
                        new_pieces.append((tuple(nb), gamma, c))
                    else:
                        ng = list(gamma)
                        ng[f.index - 1] = ng[f.index - 1] + bump
                        new_pieces.append((beta, tuple(ng), c))
            pieces = new_pieces
        for beta, gamma, coef in pieces:
            xi = t.xi.scaled(coef) if _xi_is_field(t.xi) else complex(t.xi) * coef
            out_terms.append(PLETerm(beta, gamma, xi))
    return PLESum(out_terms, k, ell, scalar=rsum.scalar)


def _field_real_imag(xi):
    if _xi_is_field(xi):
        re = xi.real_part()
        im = (xi - xi.conj()).scaled(0.5 / 1j)
        im = SpectralField(im.domain, im.modes, im.coef, real=True)
        return re, im
    z = complex(xi)
    return z.real, z.imag


def to_real(p: PLESum):
    """Expand a conjugation-closed sum into real sinusoidal terms.

    Returns (RealSum, (k_out, ell)): k_out = k when the input satisfies
    IP(k), else k + 1 because the leading phase cos/sin(w L_{k+1}) needs one
    deeper log level.
    """
    if not is_real_symmetric(p):
        raise EvaluationError("real-form conversion needs a conjugation-closed sum")
    k_out = p.k + (0 if check_IP(p) else 1)
    consumed = set()
    table = {t.key(): t for t in p.terms}
    out = []
    for t in p.terms:
        if t.key() in consumed:
            continue
        partner_key = (tuple(b.conjugate() for b in t.beta),
                       tuple(g.conjugate() for g in t.gamma))
        im_sig = tuple(b.im for b in t.beta) + tuple(g.im for g in t.gamma)
        if partner_key == t.key():
            # self-conjugate: exponents real, coefficient real
            consumed.add(t.key())
            re_xi, _ = _field_real_imag(t.xi)
            out.append(RealTerm([b.re for b in t.beta], [g.re for g in t.gamma],
                                (), re_xi))
            continue
        partner = table[partner_key]
        consumed.add(t.key())
        consumed.add(partner_key)
        rep = t if im_sig >= tuple(-x for x in im_sig) else partner
        out.extend(_expand_pair(rep, k_out))
    return RealSum(out, k_out, p.ell, scalar=p.scalar), (k_out, p.ell)


def _expand_pair(rep: PLETerm, k_out: int):
    """2 Re[z^beta zeta^gamma xi] as products of sinusoids.

    Enumerates cos/sin choices over the active frequencies; choices with an
    even number of sines assemble the real part of the phase product, odd
    ones the imaginary part.
    """
    freqs = []
    for j, b in enumerate(rep.beta):      # slot j is z_{j-1}; phase arg L_j
        if b.im != 0:
            freqs.append(("z", j, b.im))
    for j, g in enumerate(rep.gamma, start=1):
        if g.im != 0:
            freqs.append(("zeta", j, g.im))
    re_beta = [b.re for b in rep.beta] + [Fraction(0)] * (k_out - rep.k)
    re_gamma = [g.re for g in rep.gamma]
    re_xi, im_xi = _field_real_imag(rep.xi)
    out = []
    for mask in range(1 << len(freqs)):
        n_sin = bin(mask).count("1")
        factors = []
        for pos, (target, idx, w) in enumerate(freqs):
            kind = "sin" if (mask >> pos) & 1 else "cos"
            factors.append(SinFactor(kind, w, target, idx))
        if n_sin % 2 == 0:
            sign = (-1.0) ** (n_sin // 2)
            xi = re_xi.scaled(2.0 * sign) if _xi_is_field(re_xi) \
                else 2.0 * sign * re_xi
        else:
            sign = (-1.0) ** ((n_sin - 1) // 2)
            xi = im_xi.scaled(-2.0 * sign) if _xi_is_field(im_xi) \
                else -2.0 * sign * im_xi
        out.append(RealTerm(re_beta, re_gamma, factors, xi))
    return out


def check_IP(p: PLESum, k: int | None = None) -> bool:
    """True iff the deepest z-exponent is real in every term."""
    if k is not None and k != p.k:
        raise ValueError(f"sum has dim k={p.k}, asked about k={k}")
    return all(t.beta_at(p.k).im == 0 for t in p.terms)
