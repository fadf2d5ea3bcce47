"""Quasi-periodic Jacobi operators: cocycles, Weyl sections and dominated splittings."""
from .cocycle import CocycleKind, cocycle_matrix, iterate, le_relation_report, lyapunov
from .domination import (DominationCertificate, ProjPoint, Status, certify, contraction_profile,
                         proj_action, proj_derivative, sv_gap_crosscheck)
from .estimator import DominationClassifier, LyapunovTransformer
from .exceptions import (ConvergenceError, DegenerateError, DomainError, KernelHitError,
                         ModelParseError, ModelValidationError, PoleError, QPJError,
                         RetryLargerTruncation, SingularPhaseError, UsageError)
from .model import (GOLDEN, JacobiModel, PhaseGrid, TrigPoly, eval_poly, mean_log_abs,
                    orbit_grid, preset, sup_norm, translate, uniform_grid, zeros_on_circle)
from .modelfile import load_model, parse_model
from .spectrum import (ScanConfig, combes_thomas_check, decay_rate_check, persist, scan,
                       truncation_spectrum)
from .weyl import (green_diag, green_diag_direct, invariance_residual, m_field, m_minus_riccati,
                   m_minus_truncated, m_plus_truncated, sections, transversality_gap)

__version__ = "0.1.0"
