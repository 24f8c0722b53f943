"""Entropy-regularised optimal transport at finite dimension.

Classical multimarginal couplings, density-matrix couplings with a Hermitian
cost, and their bosonic/fermionic restrictions, each with primal/dual values
and a Sinkhorn-type solver.
"""

__version__ = "0.1.0"

from .classical import dual_value, primal_value, sinkhorn_classical
from .errors import (
    EOTError,
    InnerSolverFailure,
    InvalidInput,
    NumericalFailure,
    NumericalOverflow,
    OracleFailure,
    PauliViolation,
    SingularOperator,
)
from .quantum import QuantumProblem, nc_dual_value, nc_primal_value, sinkhorn_quantum
from .report import SolveReport, SweepRecord
from .symmetric import PauliStatus, SymmetricProblem, pauli_check, solve_symmetric

__all__ = [
    "__version__",
    "EOTError",
    "InnerSolverFailure",
    "InvalidInput",
    "NumericalFailure",
    "NumericalOverflow",
    "OracleFailure",
    "PauliStatus",
    "PauliViolation",
    "QuantumProblem",
    "SingularOperator",
    "SolveReport",
    "SweepRecord",
    "SymmetricProblem",
    "dual_value",
    "nc_dual_value",
    "nc_primal_value",
    "pauli_check",
    "primal_value",
    "sinkhorn_classical",
    "sinkhorn_quantum",
    "solve_symmetric",
]
