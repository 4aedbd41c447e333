"""Replica-symmetric theory of the rank-one spiked Wigner model, checked
against exact small-``n`` enumeration and Monte Carlo."""
from .prior import Prior, PriorMoments, moments, parse_prior, symmetry_defect
from .scalar_channel import (QuadratureRule, ReplicaCoefficients, asymmetry_gap, gauss_hermite,
                             psi, psi_bar, psi_derivatives, replica_coefficients)
from .rs_solver import (RsSolution, ThresholdReport, lambda_c, mmse, rho_star, rs_potential,
                        solve_qstar)
from .correction import (CltParams, CorrectionBundle, clt_params, correction_bundle, delta_rs,
                         detection_formulas, psi_rs_via_integral, solve_cavity_system)

__version__ = "0.1.0"
