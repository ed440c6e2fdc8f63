"""Replica-symmetric free energies and phase transitions for rank-one
matrix and order-3 tensor estimation under Gaussian noise."""

from .priors import (Prior, PriorError, construct_prior, discrete, gaussian,
                     gaussian_quantization, rademacher, sparse_rademacher)
from .scalar_channel import (DomainError, QuadratureConfig, QuadratureWarning,
                             ScalarChannel)
from .potentials import (ModelParams, f_aux3, f_pot2, f_pot3, make_params,
                         mutual_info_from_f)
from .solvers import (CriticalPoint, CriticalPointSet, RSResult, SolverConfig,
                      SolverError, ThresholdResult, enumerate_gamma2,
                      enumerate_gamma3, find_lambda_opt, inf_sup2,
                      inf_sup_aux3, rs_free_energy2, rs_free_energy3,
                      se_step2, se_step3)
from .identities import (CheckReport, ScalarFunction, envelope_phi,
                         verify_se_equivalence, verify_sup_inf)
from .oracle import (OracleEstimate, OracleParams, OracleSizeError,
                     UnsupportedPriorError, exact_free_energy2,
                     exact_free_energy3, exact_overlaps2, hamiltonian2,
                     hamiltonian3, replica_overlap2)

__version__ = "0.1.0"
