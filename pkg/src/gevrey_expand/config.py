"""Run configuration: parsing, cross-reference resolution, validation.

Configs are JSON; the same structure in YAML is accepted and normalized to
JSON on output.  Force terms may be given directly as complex-power sums or
in the real sinusoidal form (converted on load).  Field coefficients inside
term sums are references into the config's ``fields`` block, so one field
can back several terms; every reference must resolve.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import yaml

from .errors import ConfigError, PlusClassError
from .exponents import qvec_from_json
from .lattice import ExponentLattice, build_lattice
from .ple import PLESum, PLETerm
from .realform import RealSum, RealTerm, SinFactor, to_complex
from .spectral import DomainConfig, GevreyIndex, SpectralField, leray_project
from .subordinate import SubordinateSystem

CONFIG_SCHEMA = "gevrey-expand/config-v1"


@dataclass
class RunConfig:
    """Validated configuration for one pipeline run."""

    domain: DomainConfig
    gevrey: GevreyIndex
    rho_list: tuple
    sys: SubordinateSystem
    forcing: list              # [(Fraction mu, PLESum)], complex form
    forcing_real: list         # [(Fraction mu, RealSum | None)] as supplied
    generators: tuple
    m_star: int
    cutoff: Fraction
    n_max: int | None
    cap: int | None
    verify: dict
    out_dir: str
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    def lattice(self) -> ExponentLattice:
        return build_lattice(self.generators, self.m_star, self.cutoff)

    def normalized_json(self) -> str:
        return json.dumps(self.raw, indent=1, sort_keys=True)


def _get(data, path, default=None, required=False):
    cur = data
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(cur, dict) or part not in cur:
            if required:
                raise ConfigError("missing required key", path=".".join(walked))
            return default
        cur = cur[part]
    return cur


def _fraction(value, path) -> Fraction:
    try:
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return Fraction(int(value[0]), int(value[1]))
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational {value!r}: {exc}", path=path) from None
    raise ConfigError(f"expected a rational as [num, den], int, or 'p/q', "
                      f"got {value!r}", path=path)


def _parse_fields(data, domain, path="fields") -> dict:
    out = {}
    for name, spec in (data or {}).items():
        here = f"{path}.{name}"
        try:
            entries = {}
            for i, row in enumerate(spec["modes"]):
                k = tuple(int(x) for x in row["k"])
                vec = np.zeros(3, np.complex128)
                vec.real = np.asarray(row["re"], float)
                vec.imag = np.asarray(row.get("im", [0.0, 0.0, 0.0]), float)
                entries[k] = vec
            f = SpectralField.from_modes(domain, entries,
                                         real=bool(spec.get("real", True)))
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad field: {exc}", path=here) from None
        if spec.get("leray", False):
            f = leray_project(f)
        if f.divergence_residual() > 1e-12:
            raise ConfigError(
                f"field is not divergence-free (residual "
                f"{f.divergence_residual():.3g}); set 'leray': true to project",
                path=here)
        if f.real and f.reality_residual() > 1e-12:
            raise ConfigError("field marked real lacks conjugate symmetry",
                              path=here)
        out[name] = f
    return out


def _resolve_xi(d, fields, path):
    if "field_ref" in d:
        name = d["field_ref"]
        if name not in fields:
            raise ConfigError(f"unknown field reference {name!r}",
                              path=f"{path}.field_ref")
        return fields[name]
    if "scalar" in d:
        re, im = d["scalar"]
        return complex(re, im)
    if "field" in d:
        return SpectralField.from_json_dict(d["field"])
    raise ConfigError("coefficient needs 'field_ref', 'field', or 'scalar'",
                      path=path)


def _parse_ple_sum(data, fields, path) -> PLESum:
    try:
        terms = []
        for i, t in enumerate(data["terms"]):
            xi = _resolve_xi(t["xi"], fields, f"{path}.terms[{i}].xi")
            terms.append(PLETerm(qvec_from_json(t["beta"]),
                                 qvec_from_json(t["gamma"]), xi))
        return PLESum(terms, data["k"], data["ell"],
                      scalar=data.get("scalar"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad term sum: {exc}", path=path) from None


def _parse_real_sum(data, fields, path) -> RealSum:
    try:
        terms = []
        for i, t in enumerate(data["terms"]):
            xi = _resolve_xi(t["xi"], fields, f"{path}.terms[{i}].xi")
            factors = tuple(SinFactor.from_json(f) for f in t.get("factors", []))
            terms.append(RealTerm(
                tuple(Fraction(*b) for b in t["beta"]),
                tuple(Fraction(*g) for g in t.get("gamma", [])),
                factors, xi))
        return RealSum(terms, data["k"], data["ell"],
                       scalar=data.get("scalar"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad real term sum: {exc}", path=path) from None


def parse_config(data: dict, base_dir=".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", path="")
    schema = data.get("schema")
    if schema != CONFIG_SCHEMA:
        raise ConfigError(
            f"missing or unknown schema tag (expected {CONFIG_SCHEMA!r}, "
            f"got {schema!r})", path="schema")
    dom = _get(data, "domain", required=True)
    try:
        domain = DomainConfig(tuple(dom.get("lengths",
                                            (2 * np.pi,) * 3)),
                              dom.get("truncation", 48))
    except ValueError as exc:
        raise ConfigError(str(exc), path="domain") from None
    gev = _get(data, "gevrey", required=True)
    try:
        gevrey = GevreyIndex(float(gev.get("alpha", 0.5)),
                             float(gev.get("sigma", 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc), path="gevrey") from None
    rho_list = tuple(float(r) for r in gev.get("rho", (0.25, 0.5)))
    for r in rho_list:
        if not 0.0 < r < 1.0:
            raise ConfigError(f"rho = {r} outside (0, 1)", path="gevrey.rho")

    fields = _parse_fields(data.get("fields"), domain)

    sub = _get(data, "subordinate", required=True)
    m_sub = int(sub.get("m", 0))
    entries = []
    for i, e in enumerate(sub.get("entries", [])):
        here = f"subordinate.entries[{i}]"
        z = _parse_ple_sum(e["Z"], fields, f"{here}.Z")
        entries.append((int(e["s"]), z))
    try:
        sys = SubordinateSystem(entries, m_sub)
    except PlusClassError as exc:
        raise ConfigError(f"plusclass {exc.clause}: {exc}",
                          path="subordinate.entries") from None
    except ValueError as exc:
        raise ConfigError(str(exc), path="subordinate") from None

    force = _get(data, "force", required=True)
    m_star = int(force.get("m_star", m_sub))
    if m_star != m_sub:
        raise ConfigError(
            f"force.m_star = {m_star} disagrees with subordinate.m = {m_sub}",
            path="force.m_star")
    generators = tuple(_fraction(g, f"force.generators[{i}]")
                       for i, g in enumerate(force.get("generators", [])))
    if not generators:
        raise ConfigError("need at least one decay generator",
                          path="force.generators")
    forcing = []
    forcing_real = []
    for i, t in enumerate(force.get("terms", [])):
        here = f"force.terms[{i}]"
        mu = _fraction(t.get("mu"), f"{here}.mu")
        kind = t.get("kind", "ple")
        if kind == "real":
            rsum = _parse_real_sum(t["sum"], fields, f"{here}.sum")
            forcing.append((mu, to_complex(rsum)))
            forcing_real.append((mu, rsum))
        elif kind == "ple":
            forcing.append((mu, _parse_ple_sum(t["sum"], fields,
                                               f"{here}.sum")))
            forcing_real.append((mu, None))
        else:
            raise ConfigError(f"unknown term kind {kind!r}",
                              path=f"{here}.kind")
    if not forcing:
        raise ConfigError("force needs at least one term", path="force.terms")

    build = data.get("build", {})
    cutoff = _fraction(build.get("cutoff", [3, 1]), "build.cutoff")
    n_max = build.get("n_max")
    cap = build.get("cap")
    verify = data.get("verify", {})
    out_dir = _get(data, "output.dir", default="out")
    seed = int(data.get("seed", 0))
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    return RunConfig(domain=domain, gevrey=gevrey, rho_list=rho_list, sys=sys,
                     forcing=forcing, forcing_real=forcing_real,
                     generators=generators, m_star=m_star, cutoff=cutoff,
                     n_max=n_max, cap=cap, verify=verify, out_dir=out_dir,
                     seed=seed, raw=data)


def load_config(path) -> RunConfig:
    """Read JSON or YAML and validate into a RunConfig."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ConfigError("config file not found", path=path)
    with open(path) as handle:
        text = handle.read()
    try:
        if path.endswith((".yml", ".yaml")):
            data = yaml.safe_load(text)
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError:
                data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}", path=path) from None
    return parse_config(data, base_dir=os.path.dirname(path) or ".")
