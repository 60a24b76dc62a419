"""Switching-law synthesis and certification for rank-deficient switched affine systems."""

from .design import (CertificateReport, LyapunovCertificate, SwitchingLaw,
                     certificate_from_blocks, design_switching, f_values, law_report,
                     lyapunov_value, select_mode, verify_certificate)
from .equilibria import (EquilibriumSpec, InteriorCertificate, NullspaceDecomposition,
                         check_interior_condition, check_zero_defective, compute_M,
                         correction_gain, diagnose_no_global_exponential,
                         nullspace_decomposition, residual_terms, solve_equilibrium)
from .errors import (AssumptionViolated, DomainError, HypothesisError, InteriorConditionFailed,
                     LmiInfeasible, NoEquilibrium, NotSingular, ParticularNullspaceUnsupported,
                     RankDeficient, SimulationDiverged, SolverError, SosInfeasible,
                     SwitchctlError)
from .rate import (RateCertificate, active_set, certify_rate, find_rho, g_h_evaluators, gamma,
                   rate_curve, sos_find_beta)
from .simulate import (SimulationConfig, Trajectory, metrics, simulate_closed_loop,
                       speed_bound_check)
from .sysmodel import (DisturbanceProfile, MotorParams, SimplexVector, SwitchedAffineSystem,
                       augment_with_integrator, build_dc_motor, convex_combination,
                       validate_system)

__version__ = "0.1.0"
