"""Asymptotic expansions with subordinate variables for the periodic 3D
Navier-Stokes system: exact term algebra, recursive construction of the
solution expansion, and numerical verification of the predicted remainder
decay on spectral Galerkin truncations."""

from .builder import ExpansionManifest, build_chi, build_expansion, verify_manifest
from .exponents import QExp, rat
from .lattice import ExponentLattice, build_lattice
from .ple import (
    ClassDescriptor,
    PLESum,
    PLETerm,
    bilinear_lift,
    classify,
    dzeta,
    in_class,
    is_plus_class,
    is_real_symmetric,
    multiply,
    op_A_plus_M,
    op_M,
    op_R,
    op_ZA,
)
from .realform import RealSum, RealTerm, SinFactor, check_IP, to_complex, to_real
from .solver import (
    ExpansionForce,
    GalerkinBand,
    SolverConfig,
    Trajectory,
    integrate,
    integrate_many,
)
from .spectral import (
    DomainConfig,
    GevreyIndex,
    SpectralField,
    WaveVector,
    apply_resolvent,
    apply_stokes,
    bilinear_B,
    gevrey_norm,
    h_inner,
    leray_project,
    project_P_Lambda,
    stokes_eigenvalue,
)
from .subordinate import (
    LogChain,
    SubordinateSystem,
    build_W,
    check_integral_bound,
    eval_sum,
    iterated_exp_at_zero,
    iterated_log,
    time_derivative,
)
from .verifier import (
    DecayFit,
    defect_of_expansion,
    fit_decay_exponent,
    fode_experiment,
    remainder_norms,
    write_decay_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
