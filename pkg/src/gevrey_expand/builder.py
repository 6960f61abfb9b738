"""Recursive construction of the solution-expansion terms.

Given a force expansion aligned with an addition-closed exponent lattice,
each solution term solves a shifted-resolvent equation sourced by the force
term at that exponent, minus the bilinear interactions of earlier terms at
exactly-matching exponent pairs, minus (for m_* = 0) the drift generated by
differentiating the earlier term one unit shift below.
"""

from __future__ import annotations

import dataclasses
import json
from fractions import Fraction

from .errors import BuildError, LatticeError
from .exponents import rat
from .lattice import ExponentLattice
from .ple import (
    PLESum,
    bilinear_lift,
    dzeta,
    in_class,
    is_real_symmetric,
    multiply,
    op_R,
    op_ZA,
)
from .spectral import DomainConfig, GevreyIndex
from .subordinate import SubordinateSystem, eval_sum, time_derivative

SCHEMA_VERSION = "gevrey-expand/manifest-v1"


def build_chi(n: int, q_list, W_list, lattice: ExponentLattice,
              mt_list=None) -> PLESum:
    """Drift term at 0-based index n: R q_lambda + sum_j W_j dq_lambda/dzeta_j.

    Zero when m_* >= 1, when no earlier exponent sits exactly one unit below
    mu_n, or when the source term vanishes.
    """
    if lattice.m_star >= 1:
        return PLESum.zero(scalar=False)
    lam = lattice.unit_shift_source(n)
    if lam is None or lam >= len(q_list):
        return PLESum.zero(scalar=False)
    q_lam = q_list[lam]
    if q_lam.is_zero():
        return PLESum.zero(scalar=False)
    out = op_R(q_lam) if q_lam.k >= 0 else PLESum.zero(q_lam.k, q_lam.ell, scalar=False)
    ell = q_lam.ell if mt_list is None else min(q_lam.ell, mt_list[lam])
    for j in range(1, ell + 1):
        dj = dzeta(q_lam, j)
        if not dj.is_zero():
            out = out + multiply(W_list[j - 1].pad(q_lam.k, q_lam.ell), dj)
    return out


class ExpansionManifest:
    """The built expansion: lattice, forcing/solution/drift terms, bookkeeping."""

    def __init__(self, domain, gevrey, lattice, sys, p_list, q_list, chi_list,
                 M_list, Mt_list, class_checks, build_log, cap):
        self.domain = domain
        self.gevrey = gevrey
        self.lattice = dataclasses.replace(
            lattice, dims=tuple(zip(M_list, Mt_list)))
        self.sys = sys
        self.p_list = list(p_list)
        self.q_list = list(q_list)
        self.chi_list = list(chi_list)
        self.M_list = list(M_list)
        self.Mt_list = list(Mt_list)
        self.class_checks = list(class_checks)
        self.build_log = list(build_log)
        self.cap = cap
        self._derivatives = {}

    @property
    def n_built(self) -> int:
        return len(self.q_list)

    @property
    def m_star(self) -> int:
        return self.lattice.m_star

    def max_dims(self) -> tuple:
        if not self.M_list:
            return (self.m_star, 0)
        return (max(self.M_list), max(self.Mt_list))

    # -- evaluation helpers -------------------------------------------------------
    def partial_solution(self, t: float, N: int):
        """U_N(t): the first N solution terms evaluated and summed."""
        from .spectral import SpectralField
        total = SpectralField.zero(self.domain)
        for q in self.q_list[:N]:
            if not q.is_zero():
                total = total + eval_sum(q, t, self.sys, strict=False).real_part()
        return total

    def partial_force(self, t: float, N: int):
        from .spectral import SpectralField
        total = SpectralField.zero(self.domain)
        for p in self.p_list[:N]:
            if not p.is_zero():
                total = total + eval_sum(p, t, self.sys, strict=False).real_part()
        return total

    def solution_derivative(self, t: float, N: int):
        """dU_N/dt evaluated through the symbolic chain rule."""
        from .spectral import SpectralField
        total = SpectralField.zero(self.domain)
        for n in range(N):
            q = self.q_list[n]
            if q.is_zero():
                continue
            if n not in self._derivatives:
                self._derivatives[n] = time_derivative(q, self.sys)
            dq = self._derivatives[n]
            if not dq.is_zero():
                total = total + eval_sum(dq, t, self.sys, strict=False).real_part()
        return total

    # -- serialization ---------------------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "domain": {"lengths": list(self.domain.lengths),
                       "truncation": self.domain.truncation},
            "gevrey": {"alpha": self.gevrey.alpha, "sigma": self.gevrey.sigma},
            "cap": self.cap,
            "lattice": self.lattice.to_json_dict(),
            "system": self.sys.to_json_dict(),
            "M": self.M_list,
            "Mt": self.Mt_list,
            "p": [p.to_json_dict() for p in self.p_list],
            "q": [q.to_json_dict() for q in self.q_list],
            "chi": [c.to_json_dict() for c in self.chi_list],
            "class_checks": self.class_checks,
            "build_log": self.build_log,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, data) -> "ExpansionManifest":
        if data.get("schema") != SCHEMA_VERSION:
            raise BuildError(f"unknown manifest schema {data.get('schema')!r}")
        domain = DomainConfig(tuple(data["domain"]["lengths"]),
                              data["domain"]["truncation"])
        gevrey = GevreyIndex(data["gevrey"]["alpha"], data["gevrey"]["sigma"])
        lattice = ExponentLattice.from_json_dict(data["lattice"])
        sys = SubordinateSystem.from_json_dict(data["system"], validate=False)
        return cls(
            domain, gevrey, lattice, sys,
            [PLESum.from_json_dict(d) for d in data["p"]],
            [PLESum.from_json_dict(d) for d in data["q"]],
            [PLESum.from_json_dict(d) for d in data["chi"]],
            data["M"], data["Mt"], data["class_checks"], data["build_log"],
            data["cap"],
        )


def _aligned_forcing(forcing, lattice, log):
    """Place supplied force terms at their lattice indices, zeros elsewhere."""
    aligned = [PLESum.zero(scalar=False) for _ in lattice.mus]
    for mu, p in forcing:
        idx = lattice.index_of(rat(mu))
        if idx is None:
            raise LatticeError(f"force exponent {rat(mu)} is not a lattice member")
        if not aligned[idx].is_zero():
            raise BuildError(f"two force terms share the exponent {rat(mu)}")
        aligned[idx] = p
    supplied = sum(1 for p in aligned if not p.is_zero())
    if supplied < len(aligned):
        log.append(f"inserted {len(aligned) - supplied} zero force terms "
                   f"to align with the {len(aligned)}-member lattice")
    return aligned


def default_support_cap(forcing, lattice, n_max) -> int:
    """Forcing band extent convolved ceil(mu_N / mu_1) times."""
    extent = 0
    for _, p in forcing:
        for t in p.terms:
            extent = max(extent, t.xi.band_extent())
    if extent == 0:
        return 1
    ratio = lattice.mus[n_max - 1] / lattice.mus[0]
    folds = max(int(-(-ratio // 1)), 1)  # ceil(mu_N / mu_1)
    return extent * folds


def build_expansion(forcing, lattice: ExponentLattice, sys: SubordinateSystem,
                    gevrey: GevreyIndex, cap=None, n_max=None,
                    domain=None) -> ExpansionManifest:
    """Run the recursion q_n = resolvent(p_n - pair interactions - drift).

    ``forcing`` is a list of (mu, PLESum) pairs; lattice positions without a
    supplied term get zero sums.  Every exact pair search mu_i + mu_j = mu_n
    is enumerated over the lattice.  Class memberships are checked per term
    and recorded.
    """
    log: list = []
    if n_max is None:
        n_max = lattice.valid_n_max()
    if n_max > len(lattice):
        raise BuildError(f"n_max {n_max} exceeds the lattice size {len(lattice)}")
    if n_max > lattice.valid_n_max():
        log.append(
            f"warning: n_max {n_max} exceeds the closure-safe range "
            f"{lattice.valid_n_max()} for cutoff {lattice.cutoff}")
    aligned = _aligned_forcing(forcing, lattice, log)
    if domain is None:
        for p in aligned:
            if not p.is_zero():
                domain = p.terms[0].xi.domain
                break
    if domain is None:
        raise BuildError("no force term carries a field: pass a domain")
    if cap is None:
        cap = default_support_cap(forcing, lattice, n_max)
        log.append(f"support cap defaulted to {cap}")
    m_star = lattice.m_star

    checks: list = []

    def record(name, ok, detail=""):
        checks.append({"item": name, "passed": bool(ok), "detail": detail})
        if not ok:
            raise BuildError(f"class check failed for {name}: {detail}")

    for n in range(n_max):
        p_n = aligned[n]
        if not p_n.is_zero():
            mu_n = lattice.mus[n]
            if not in_class(p_n, m_star, -mu_n):
                raise BuildError(
                    f"force term at mu={mu_n} does not lie in the level-"
                    f"{m_star} class with exponent {-mu_n}")
            if not is_real_symmetric(p_n):
                raise BuildError(
                    f"force term at mu={mu_n} is not conjugation-closed")

    W_list = sys.W if sys.size else []
    q_list: list = []
    chi_list: list = []
    M_list: list = []
    Mt_list: list = []
    run_k, run_ell = m_star, 0
    for n in range(n_max):
        mu_n = lattice.mus[n]
        rhs = aligned[n]
        pairs = lattice.pairs_summing_to(n)
        for (i, j) in pairs:
            if q_list[i].is_zero() or q_list[j].is_zero():
                continue
            sink: list = []
            bprod = bilinear_lift(q_list[i], q_list[j], cap=cap,
                                  report_sink=sink)
            for rep in sink:
                log.append(f"n={n + 1}: convolution drop {rep}")
            if not bprod.is_zero():
                ok = in_class(bprod, m_star, -mu_n)
                record(f"B(q_{i + 1}, q_{j + 1}) at mu={mu_n}", ok,
                       f"expected class ({m_star}, {-mu_n})")
                rhs = rhs - bprod
        if pairs:
            log.append(
                f"n={n + 1}: {len(pairs)} exact pair(s) with mu_i+mu_j={mu_n}")
        chi = build_chi(n, q_list, W_list, lattice, Mt_list)
        if not chi.is_zero():
            ok = in_class(chi, m_star, -mu_n)
            record(f"chi_{n + 1}", ok, f"expected class ({m_star}, {-mu_n})")
            lam = lattice.unit_shift_source(n)
            log.append(f"n={n + 1}: drift source lambda={lam + 1} "
                       f"(mu_lambda+1={mu_n})")
            rhs = rhs - chi
        chi_list.append(chi)
        q_n = op_ZA(rhs) if not rhs.is_zero() else PLESum.zero(scalar=False)
        if not q_n.is_zero():
            record(f"q_{n + 1} class", in_class(q_n, m_star, -mu_n),
                   f"expected class ({m_star}, {-mu_n})")
            record(f"q_{n + 1} symmetry", is_real_symmetric(q_n),
                   "expected conjugation-closed")
        q_list.append(q_n)
        kz, lz = q_n.dims_used()
        run_ell = max(run_ell, lz)
        run_k = max(run_k, kz, sys.depths[run_ell - 1] if run_ell else 0)
        M_list.append(run_k)
        Mt_list.append(run_ell)
    return ExpansionManifest(domain, gevrey, lattice, sys, aligned[:n_max],
                             q_list, chi_list, M_list, Mt_list, checks, log,
                             cap)


def verify_manifest(manifest: ExpansionManifest):
    """Re-run every class and symmetry check; failures become report rows."""
    report = []

    def row(item, ok, detail=""):
        report.append({"item": item, "passed": bool(ok), "detail": detail})

    lat = manifest.lattice
    m_star = manifest.m_star
    bad = lat.closure_violations()
    row("lattice closure", not bad,
        "" if not bad else f"{len(bad)} sums escape below the cutoff")
    for n in range(manifest.n_built):
        mu_n = lat.mus[n]
        q = manifest.q_list[n]
        chi = manifest.chi_list[n]
        if q.is_zero():
            row(f"q_{n + 1}", True, "zero term: vacuous")
        else:
            row(f"q_{n + 1} class", in_class(q, m_star, -mu_n),
                f"membership at ({m_star}, {-mu_n})")
            row(f"q_{n + 1} symmetry", is_real_symmetric(q), "conjugation closure")
        if not chi.is_zero():
            row(f"chi_{n + 1} class", in_class(chi, m_star, -mu_n),
                f"membership at ({m_star}, {-mu_n})")
        for (i, j) in lat.pairs_summing_to(n):
            if i < len(manifest.q_list) and j < len(manifest.q_list):
                qi, qj = manifest.q_list[i], manifest.q_list[j]
                if qi.is_zero() or qj.is_zero():
                    continue
                prod = bilinear_lift(qi, qj, cap=manifest.cap,
                                     cap_policy="truncate")
                if not prod.is_zero():
                    row(f"B(q_{i + 1}, q_{j + 1}) class",
                        in_class(prod, m_star, -mu_n),
                        f"membership at ({m_star}, {-mu_n})")
    return report
