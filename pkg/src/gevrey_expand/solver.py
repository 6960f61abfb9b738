"""Spectral Galerkin time integration of the evolution equation.

The state is the dense coefficient array over a componentwise band of modes.
The diffusion part is integrated exactly by per-mode e^{-lambda dt} factors;
the remaining terms go through classic RK4 on the transformed variable
(Lawson integrating-factor RK4) or, alternatively, implicit-in-A explicit
Euler.  The bilinear term is the exact convolution restricted to the band,
computed from a precomputed index pair table, so the truncated system is
integrated without aliasing.

Alongside the state the energy balance dE/dt = -2*enstrophy + power is
accumulated with the same RK4 weights; comparing it with the actual energy
change audits the scheme against the energy identity.

The inner loop is JIT compiled when numba is importable; a vectorized numpy
fallback produces the same trajectory (slower).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverDivergenceError
from .spectral import DomainConfig, SpectralField
from .subordinate import eval_factors

try:
    import numba as _numba

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    _numba = None
    HAVE_NUMBA = False

CHUNK_STEPS = 4000


def thread_cap() -> int | None:
    raw = os.environ.get("GEVREY_EXPAND_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            return None
    return None


if HAVE_NUMBA:
    _cap = thread_cap()
    if _cap is not None:
        try:
            _numba.set_num_threads(min(_cap, _numba.config.NUMBA_NUM_THREADS))
        except Exception:
            pass


@dataclass(frozen=True)
class SolverConfig:
    """Truncation band, time step, scheme, horizon, and sampling density."""

    band: int
    dt: float
    t0: float
    t1: float
    scheme: str = "ifrk4"
    n_samples: int = 32

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t1 <= self.t0:
            raise ValueError("horizon must satisfy t1 > t0")
        if self.scheme not in ("ifrk4", "imex-euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_samples < 8:
            raise ValueError("need at least 8 samples for decay fits")


class GalerkinBand:
    """Mode bookkeeping for a componentwise band |k_i| <= N, zero excluded."""

    def __init__(self, domain: DomainConfig, band: int):
        if band < 1 or band > domain.truncation:
            raise ValueError("band must satisfy 1 <= band <= domain truncation")
        self.domain = domain
        self.band = band
        rng = range(-band, band + 1)
        modes = [(i, j, k) for i in rng for j in rng for k in rng
                 if (i, j, k) != (0, 0, 0)]
        self.modes = np.array(modes, dtype=np.int64)
        self.index = {tuple(m): i for i, m in enumerate(modes)}
        self.k_L = domain.k_L(self.modes)
        self.lam = domain.eigenvalues(self.modes)
        khat = self.k_L / np.linalg.norm(self.k_L, axis=1, keepdims=True)
        eye = np.eye(3)[None, :, :]
        self.proj = eye - khat[:, :, None] * khat[:, None, :]
        self._pairs = None

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def pairs(self):
        """Index triples (a, b, out) with mode_a + mode_b = mode_out in band."""
        if self._pairs is None:
            ia, ib, io = [], [], []
            for a in range(self.n_modes):
                ma = self.modes[a]
                for b in range(self.n_modes):
                    s = (int(ma[0] + self.modes[b, 0]),
                         int(ma[1] + self.modes[b, 1]),
                         int(ma[2] + self.modes[b, 2]))
                    o = self.index.get(s)
                    if o is not None:
                        ia.append(a)
                        ib.append(b)
                        io.append(o)
            self._pairs = (np.asarray(ia, np.int64), np.asarray(ib, np.int64),
                           np.asarray(io, np.int64))
        return self._pairs

    def to_array(self, u: SpectralField) -> np.ndarray:
        arr = np.zeros((self.n_modes, 3), np.complex128)
        for m, c in zip(u.modes, u.coef):
            idx = self.index.get(tuple(m))
            if idx is None:
                raise ValueError(f"mode {tuple(m)} falls outside band {self.band}")
            arr[idx] = c
        return arr

    def to_field(self, arr: np.ndarray, real=False) -> SpectralField:
        return SpectralField(self.domain, self.modes.copy(), arr, real=real)


@dataclass
class Trajectory:
    """Sampled states of one run plus the energy-identity audit."""

    times: np.ndarray
    states: list
    config: SolverConfig
    band: int
    energy_drift: float
    nonlinear: bool
    info: dict = field(default_factory=dict)

    def sample_pairs(self):
        return list(zip(self.times, self.states))


# -- forcing adapters ---------------------------------------------------------------

class ExpansionForce:
    """Evaluates a list of term sums onto a band, vectorized over times."""

    def __init__(self, sums, sys, band: GalerkinBand):
        self.sums = [p for p in sums if not p.is_zero()]
        self.sys = sys
        self.band = band
        self._rows = []
        for p in self.sums:
            rows = [np.asarray([band.index[tuple(m)] for m in t.xi.modes],
                               np.int64) for t in p.terms]
            self._rows.append(rows)

    def dense_values(self, ts: np.ndarray) -> np.ndarray:
        out = np.zeros((ts.shape[0], self.band.n_modes, 3), np.complex128)
        for p, rows in zip(self.sums, self._rows):
            factors, xi_list, _ = eval_factors(p, ts, self.sys)
            for f, xi, r in zip(factors, xi_list, rows):
                out[:, r, :] += f[:, None, None] * xi.coef[None, :, :]
        return out

    def __call__(self, t: float) -> SpectralField:
        dense = self.dense_values(np.asarray([float(t)]))[0]
        return self.band.to_field(dense).real_part()


class CallableForce:
    """Wraps a plain t -> SpectralField callable for the stepping loop."""

    def __init__(self, fn, band: GalerkinBand):
        self.fn = fn
        self.band = band

    def dense_values(self, ts: np.ndarray) -> np.ndarray:
        out = np.zeros((ts.shape[0], self.band.n_modes, 3), np.complex128)
        for i, t in enumerate(ts):
            f = self.fn(float(t))
            if f is not None and not f.is_zero():
                out[i] = self.band.to_array(f)
        return out


class ZeroForce:
    def __init__(self, band):
        self.band = band

    def dense_values(self, ts):
        return np.zeros((ts.shape[0], self.band.n_modes, 3), np.complex128)


def as_force(force, band, sys=None):
    if force is None:
        return ZeroForce(band)
    if hasattr(force, "dense_values"):
        return force
    if callable(force):
        return CallableForce(force, band)
    raise TypeError("force must be None, a callable, or a dense adapter")


# -- kernels ----------------------------------------------------------------------

def _rhs_numpy(state, f_stage, nonlinear, ia, ib, io, kL, proj):
    ntraj = state.shape[0]
    out = np.broadcast_to(f_stage, state.shape).astype(np.complex128).copy()
    if nonlinear:
        dots = np.einsum("tpd,pd->tp", state[:, ia, :], kL[ib])
        contrib = (1j * dots)[:, :, None] * state[:, ib, :]
        raw = np.zeros_like(state)
        for tr in range(ntraj):
            np.add.at(raw[tr], io, contrib[tr])
        out -= np.einsum("mde,tme->tmd", proj, raw)
    return out


def _edot_numpy(state, f_stage, lam):
    diss = np.einsum("m,tmd->t", lam, np.abs(state) ** 2)
    work = np.einsum("tmd,md->t", np.conj(state), f_stage).real
    return np.stack([-diss + work, diss])


def _step_chunk_numpy(c, e_acc, nsteps, h, lam, Eh, Eh2, ia, ib, io, kL, proj,
                      f_nodes, f_mid, nonlinear):
    E1 = Eh[None, :, None]
    E2 = Eh2[None, :, None]
    for s in range(nsteps):
        k1 = _rhs_numpy(c, f_nodes[s], nonlinear, ia, ib, io, kL, proj)
        e1 = _edot_numpy(c, f_nodes[s], lam)
        ua = E2 * (c + 0.5 * h * k1)
        k2 = _rhs_numpy(ua, f_mid[s], nonlinear, ia, ib, io, kL, proj)
        e2 = _edot_numpy(ua, f_mid[s], lam)
        ub = E2 * c + 0.5 * h * k2
        k3 = _rhs_numpy(ub, f_mid[s], nonlinear, ia, ib, io, kL, proj)
        e3 = _edot_numpy(ub, f_mid[s], lam)
        uc = E1 * c + h * E2 * k3
        k4 = _rhs_numpy(uc, f_nodes[s + 1], nonlinear, ia, ib, io, kL, proj)
        e4 = _edot_numpy(uc, f_nodes[s + 1], lam)
        c[:] = E1 * c + (h / 6.0) * (E1 * k1 + 2.0 * E2 * (k2 + k3) + k4)
        e_acc += (h / 6.0) * (e1 + 2.0 * (e2 + e3) + e4)
    return c


if HAVE_NUMBA:

    @_numba.njit(cache=True, fastmath=True)
    def _rhs_jit(state, f_stage, nonlinear, ia, ib, io, kL, proj,
                 out):  # pragma: no cover - compiled
        ntraj, nm, _ = state.shape
        npair = ia.shape[0]
        for tr in range(ntraj):
            for m_ in range(nm):
                for d in range(3):
                    out[tr, m_, d] = f_stage[m_, d]
        if nonlinear:
            for tr in range(ntraj):
                raw = np.zeros((nm, 3), np.complex128)
                for p in range(npair):
                    a = ia[p]
                    b = ib[p]
                    o = io[p]
                    dot = (state[tr, a, 0] * kL[b, 0]
                           + state[tr, a, 1] * kL[b, 1]
                           + state[tr, a, 2] * kL[b, 2])
                    fph = 1j * dot
                    raw[o, 0] += fph * state[tr, b, 0]
                    raw[o, 1] += fph * state[tr, b, 1]
                    raw[o, 2] += fph * state[tr, b, 2]
                for m_ in range(nm):
                    v0, v1, v2 = raw[m_, 0], raw[m_, 1], raw[m_, 2]
                    out[tr, m_, 0] -= (proj[m_, 0, 0] * v0 + proj[m_, 0, 1] * v1
                                       + proj[m_, 0, 2] * v2)
                    out[tr, m_, 1] -= (proj[m_, 1, 0] * v0 + proj[m_, 1, 1] * v1
                                       + proj[m_, 1, 2] * v2)
                    out[tr, m_, 2] -= (proj[m_, 2, 0] * v0 + proj[m_, 2, 1] * v1
                                       + proj[m_, 2, 2] * v2)

    @_numba.njit(cache=True, fastmath=True)
    def _edot_jit(state, f_stage, lam, out_ed):  # pragma: no cover - compiled
        ntraj, nm, _ = state.shape
        for tr in range(ntraj):
            net = 0.0
            diss = 0.0
            for m_ in range(nm):
                for d in range(3):
                    cc = state[tr, m_, d]
                    ff = f_stage[m_, d]
                    diss += lam[m_] * (cc.real * cc.real + cc.imag * cc.imag)
                    net += (cc.conjugate() * ff).real
            out_ed[0, tr] = net - diss
            out_ed[1, tr] = diss

    @_numba.njit(cache=True, fastmath=True)
    def _step_chunk_jit(c, e_acc, nsteps, h, lam, Eh, Eh2, ia, ib, io, kL,
                        proj, f_nodes, f_mid, nonlinear):  # pragma: no cover
        ntraj, nm, _ = c.shape
        k1 = np.empty_like(c)
        k2 = np.empty_like(c)
        k3 = np.empty_like(c)
        k4 = np.empty_like(c)
        stage = np.empty_like(c)
        e1 = np.empty((2, ntraj))
        e2 = np.empty((2, ntraj))
        e3 = np.empty((2, ntraj))
        e4 = np.empty((2, ntraj))
        for s in range(nsteps):
            _rhs_jit(c, f_nodes[s], nonlinear, ia, ib, io, kL, proj, k1)
            _edot_jit(c, f_nodes[s], lam, e1)
            for tr in range(ntraj):
                for m_ in range(nm):
                    for d in range(3):
                        stage[tr, m_, d] = Eh2[m_] * (c[tr, m_, d]
                                                      + 0.5 * h * k1[tr, m_, d])
            _rhs_jit(stage, f_mid[s], nonlinear, ia, ib, io, kL, proj, k2)
            _edot_jit(stage, f_mid[s], lam, e2)
            for tr in range(ntraj):
                for m_ in range(nm):
                    for d in range(3):
                        stage[tr, m_, d] = (Eh2[m_] * c[tr, m_, d]
                                            + 0.5 * h * k2[tr, m_, d])
            _rhs_jit(stage, f_mid[s], nonlinear, ia, ib, io, kL, proj, k3)
            _edot_jit(stage, f_mid[s], lam, e3)
            for tr in range(ntraj):
                for m_ in range(nm):
                    for d in range(3):
                        stage[tr, m_, d] = (Eh[m_] * c[tr, m_, d]
                                            + h * Eh2[m_] * k3[tr, m_, d])
            _rhs_jit(stage, f_nodes[s + 1], nonlinear, ia, ib, io, kL, proj, k4)
            _edot_jit(stage, f_nodes[s + 1], lam, e4)
            for tr in range(ntraj):
                for m_ in range(nm):
                    for d in range(3):
                        c[tr, m_, d] = (Eh[m_] * c[tr, m_, d] + (h / 6.0) * (
                            Eh[m_] * k1[tr, m_, d]
                            + 2.0 * Eh2[m_] * (k2[tr, m_, d] + k3[tr, m_, d])
                            + k4[tr, m_, d]))
                for r in range(2):
                    e_acc[r, tr] += (h / 6.0) * (e1[r, tr]
                                                 + 2.0 * (e2[r, tr] + e3[r, tr])
                                                 + e4[r, tr])
        return c


def _step_chunk_imex(c, e_acc, nsteps, h, lam, ia, ib, io, kL, proj, f_nodes,
                     nonlinear):
    """Backward Euler in the diffusion, forward Euler elsewhere."""
    damp = 1.0 / (1.0 + h * lam)
    for s in range(nsteps):
        rhs = _rhs_numpy(c, f_nodes[s], nonlinear, ia, ib, io, kL, proj)
        e_acc += h * _edot_numpy(c, f_nodes[s], lam)
        c[:] = damp[None, :, None] * (c + h * rhs)
    return c


# -- driver -----------------------------------------------------------------------

def _sample_indices(cfg: SolverConfig):
    n_total = int(round((cfg.t1 - cfg.t0) / cfg.dt))
    if n_total < 1:
        raise ValueError("horizon shorter than one step")
    raw = np.geomspace(max(cfg.t0, cfg.dt), cfg.t1, cfg.n_samples) if cfg.t0 > 0 \
        else np.linspace(cfg.t0, cfg.t1, cfg.n_samples)
    idx = np.unique(np.clip(np.round((raw - cfg.t0) / cfg.dt).astype(int),
                            0, n_total))
    return n_total, idx


def integrate_many(u0_list, force, cfg: SolverConfig, nonlinear: bool,
                   sys=None, use_jit: bool = True, div_tol: float = 1e-10):
    """Integrate several initial states side by side; shared force and band.

    Returns one :class:`Trajectory` per initial state.  The linear part is
    advanced exactly; inputs must be divergence-free, zero-mean, and inside
    the band.
    """
    if not u0_list:
        raise ValueError("need at least one initial state")
    domain = u0_list[0].domain
    band = GalerkinBand(domain, cfg.band)
    for u0 in u0_list:
        if u0.divergence_residual() > div_tol:
            raise ValueError(
                f"initial state is not divergence-free "
                f"(residual {u0.divergence_residual():.3g})")
    c = np.stack([band.to_array(u0) for u0 in u0_list])
    ntraj = c.shape[0]
    adapter = as_force(force, band, sys)
    h = cfg.dt
    lam = band.lam
    Eh = np.exp(-lam * h)
    Eh2 = np.exp(-lam * 0.5 * h)
    ia, ib, io = band.pairs if nonlinear else (np.zeros(0, np.int64),) * 3
    n_total, sample_idx = _sample_indices(cfg)
    e_acc = np.zeros((2, ntraj))
    energy0 = 0.5 * np.sum(np.abs(c) ** 2, axis=(1, 2))
    energy_peak = energy0.copy()
    times_out = []
    states_out = [[] for _ in range(ntraj)]

    def record(step):
        t = cfg.t0 + step * h
        times_out.append(t)
        for tr in range(ntraj):
            states_out[tr].append(band.to_field(c[tr].copy()))

    stepper_jit = HAVE_NUMBA and use_jit and cfg.scheme == "ifrk4"
    if 0 in sample_idx:
        record(0)
    done = 0
    for target in sample_idx[sample_idx > 0]:
        while done < target:
            nsub = min(CHUNK_STEPS, target - done)
            t_start = cfg.t0 + done * h
            t_nodes = t_start + np.arange(nsub + 1) * h
            t_mids = t_start + (np.arange(nsub) + 0.5) * h
            f_nodes = adapter.dense_values(t_nodes)
            f_mid = adapter.dense_values(t_mids)
            if cfg.scheme == "imex-euler":
                _step_chunk_imex(c, e_acc, nsub, h, lam, ia, ib, io, band.k_L,
                                 band.proj, f_nodes, nonlinear)
            elif stepper_jit:
                _step_chunk_jit(c, e_acc, nsub, h, lam, Eh, Eh2, ia, ib, io,
                                band.k_L, band.proj, f_nodes, f_mid, nonlinear)
            else:
                _step_chunk_numpy(c, e_acc, nsub, h, lam, Eh, Eh2, ia, ib, io,
                                  band.k_L, band.proj, f_nodes, f_mid,
                                  nonlinear)
            done += nsub
            if not np.all(np.isfinite(c.view(np.float64))):
                raise SolverDivergenceError(
                    f"state became non-finite near t = {cfg.t0 + done * h:.6g}",
                    last_valid_t=t_start)
            energy_peak = np.maximum(energy_peak,
                                     0.5 * np.sum(np.abs(c) ** 2, axis=(1, 2)))
        record(done)

    energy1 = 0.5 * np.sum(np.abs(c) ** 2, axis=(1, 2))
    scale = np.maximum.reduce([energy0, energy1, energy_peak,
                               np.abs(e_acc[1]),
                               np.full(ntraj, 1e-300)])
    drift = np.abs(energy1 - energy0 - e_acc[0]) / scale
    times = np.asarray(times_out)
    out = []
    for tr in range(ntraj):
        out.append(Trajectory(
            times=times, states=states_out[tr], config=cfg, band=cfg.band,
            energy_drift=float(drift[tr]), nonlinear=nonlinear,
            info={"scheme": cfg.scheme, "jit": bool(stepper_jit),
                  "n_steps": n_total}))
    return out


def integrate(u0: SpectralField, force, cfg: SolverConfig, nonlinear: bool,
              sys=None, use_jit: bool = True) -> Trajectory:
    """Single-state convenience wrapper around :func:`integrate_many`."""
    return integrate_many([u0], force, cfg, nonlinear, sys=sys,
                          use_jit=use_jit)[0]
