"""Bosonic and fermionic entropic transport with a single one-body marginal.

States live on the symmetric (bosons, sign ``+1``) or antisymmetric (fermions,
sign ``-1``) subspace of ``(C^d)^{(x)N}``. All exponentials are taken on that
subspace through the isometry from :func:`eot.herm.sym_isometry`, so
``Tr exp[(...)_pm]`` never picks up spurious contributions from its complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, PauliViolation
from .herm import (
    SubspaceIsometry,
    _parse_sign,
    check_density,
    check_hermitian,
    from_spectrum,
    hermitian_part,
    kron_sum,
    op_norm,
    partial_trace,
    permute_conjugate,
    spectral_exp,
    sym_isometry,
    trace_norm,
)
from .report import SolveReport, SweepRecord

SYMMETRY_TOL = 1e-10


def check_h_symmetric(H, d: int, N: int, tol: float = SYMMETRY_TOL) -> bool:
    """True when ``H`` is invariant under moving any factor to the last slot."""
    H = check_hermitian(H)
    if H.shape[0] != d**N:
        raise InvalidInput(f"Hamiltonian dimension {H.shape[0]} is not d**N = {d**N}")
    dims = (d,) * N
    return all(op_norm(permute_conjugate(H, i, dims) - H) < tol for i in range(N))


@dataclass(frozen=True)
class PauliStatus:
    max_eig: float
    min_eig: float
    classification: str  # "strict", "boundary" or "violates"

    def to_dict(self) -> dict:
        return {"max_eig": self.max_eig, "min_eig": self.min_eig, "classification": self.classification}


def pauli_check(gamma, N: int, tol: float = 1e-10) -> PauliStatus:
    """Classify ``gamma`` against ``0 < gamma < 1/N``."""
    if N < 1:
        raise InvalidInput(f"particle number must be positive, got {N}")
    lam = np.linalg.eigvalsh(check_hermitian(gamma))
    lo, hi = float(lam[0]), float(lam[-1])
    if hi > 1 / N + tol:
        cls = "violates"
    elif hi < 1 / N - tol and lo > tol:
        cls = "strict"
    else:
        cls = "boundary"
    return PauliStatus(max_eig=hi, min_eig=lo, classification=cls)


def shrink_to_interior(gamma, delta: float = 1e-6) -> np.ndarray:
    """``(1 - delta) gamma + delta 1/d``: pulls a boundary marginal strictly inside when ``d > N``."""
    gamma = check_hermitian(gamma)
    d = gamma.shape[0]
    return (1 - delta) * gamma + delta * np.eye(d) / d


@dataclass(frozen=True)
class SymmetricProblem:
    d: int
    N: int
    sign: int
    H: np.ndarray
    gamma: np.ndarray
    eps: float
    iso: SubspaceIsometry = field(init=False, repr=False)
    h_sub: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sign = _parse_sign(self.sign)
        d, N = int(self.d), int(self.N)
        if not self.eps > 0:
            raise InvalidInput(f"epsilon must be positive, got {self.eps!r}")
        iso = sym_isometry(d, N, sign)
        H = check_hermitian(self.H)
        if not check_h_symmetric(H, d, N):
            raise InvalidInput("Hamiltonian is not invariant under particle permutations")
        gamma = check_density(self.gamma)
        if gamma.shape[0] != d:
            raise InvalidInput(f"marginal has dimension {gamma.shape[0]}, expected {d}")
        for name, value in [("d", d), ("N", N), ("sign", sign), ("H", H), ("gamma", gamma),
                            ("eps", float(self.eps)), ("iso", iso), ("h_sub", iso.compress(H))]:
            object.__setattr__(self, name, value)

    @property
    def kind(self) -> str:
        return "bosonic" if self.sign > 0 else "fermionic"


def _exponent(U, prob: SymmetricProblem) -> np.ndarray:
    """``[(1/N)(+)U - H]`` compressed to the subspace, divided by eps."""
    U = check_hermitian(U)
    if U.shape[0] != prob.d:
        raise InvalidInput(f"potential has dimension {U.shape[0]}, expected {prob.d}")
    one_body = prob.iso.compress(kron_sum([U] * prob.N)) / prob.N
    return (one_body - prob.h_sub) / prob.eps


def sym_dual_value(U, prob: SymmetricProblem) -> float:
    """``Tr(U gamma) - eps Tr exp[((1/N)(+)U - H)_pm / eps] + eps``."""
    _, _, ew = spectral_exp(_exponent(U, prob))
    return float(np.trace(np.asarray(U) @ prob.gamma).real) - prob.eps * float(ew.sum()) + prob.eps


def subspace_state(U, prob: SymmetricProblem) -> np.ndarray:
    """``exp[((1/N)(+)U - H)_pm / eps]`` as a ``sub_dim`` square matrix (not normalised)."""
    _, V, ew = spectral_exp(_exponent(U, prob))
    return from_spectrum(ew, V)


def embed_symmetric_state(G_sub, iso: SubspaceIsometry) -> np.ndarray:
    G_sub = check_hermitian(G_sub)
    if G_sub.shape[0] != iso.sub_dim:
        raise InvalidInput(f"state dimension {G_sub.shape[0]} does not match subspace {iso.sub_dim}")
    return iso.expand(G_sub)


def one_body_marginal(G_sub, prob: SymmetricProblem) -> np.ndarray:
    """Common reduced operator of ``Q G_sub Q^dagger``, read off slot 0."""
    return partial_trace(prob.iso.expand(G_sub), 0, (prob.d,) * prob.N)


def sym_primal_value(G_sub, prob: SymmetricProblem) -> float:
    """``Tr(H Gamma) + eps Tr(Gamma log Gamma)`` for a state on the subspace."""
    G_sub = check_hermitian(G_sub)
    lam = np.linalg.eigvalsh(G_sub)
    lam = lam[lam > 0]
    return float(np.trace(prob.h_sub @ G_sub).real) + prob.eps * float(np.sum(lam * np.log(lam)))


def witness_linear_part(gamma, N: int, n: float) -> float:
    """``(n/(N-1)) (N gamma_max - 1)``, the linear term of the dual along the witness."""
    gmax = float(np.linalg.eigvalsh(check_hermitian(gamma))[-1])
    return n / (N - 1) * (N * gmax - 1)


def pauli_witness(prob: SymmetricProblem, n: float):
    """Potential along which the fermionic dual grows without bound when ``gamma_max > 1/N``.

    ``U = n |psi_1><psi_1| - n/(N-1) sum_{j>=2} |psi_j><psi_j|`` in the eigenbasis of
    ``gamma`` with ``psi_1`` its top eigenvector. On the antisymmetric subspace the
    one-body exponent is at most zero, so the nonlinear term is bounded by
    ``C binom(d, N)`` with ``C = eps exp(||H|| / eps)``.

    Returns
    -------
    U : ndarray
    lower_bound : float
        ``linear part - C binom(d, N)``; the dual at ``U`` lies strictly above it.
    """
    N = prob.N
    if N < 2:
        raise InvalidInput("the witness needs at least two particles")
    status = pauli_check(prob.gamma, N)
    if status.classification != "violates":
        raise InvalidInput(f"marginal does not violate the Pauli condition ({status.classification})")
    w, V = np.linalg.eigh(prob.gamma)
    u = np.full(prob.d, -n / (N - 1))
    u[-1] = n
    U = from_spectrum(u, V)
    C = prob.eps * math.exp(op_norm(prob.H) / prob.eps)
    lower = witness_linear_part(prob.gamma, N, n) - C * math.comb(prob.d, N)
    return U, lower


def solve_symmetric(
    prob: SymmetricProblem,
    tol: float = 1e-8,
    max_iter: int = 10000,
    max_halvings: int = 50,
):
    """Maximise the bosonic/fermionic dual over a single one-body potential.

    Damped fixed-point ascent ``U <- U + eta eps (log gamma - log gamma_hat(U))`` where
    ``gamma_hat`` is the one-body marginal of the current subspace state; ``eta`` is
    halved while the dual would decrease. Starts from ``U = N eps log gamma``.

    Returns
    -------
    state : ndarray
        Unit-trace state on the subspace (``sub_dim`` square).
    U : ndarray
    report : SolveReport

    Raises
    ------
    PauliViolation
        Fermionic marginal outside the strict condition ``0 < gamma < 1/N``.
    """
    if prob.sign < 0:
        status = pauli_check(prob.gamma, prob.N)
        if status.classification != "strict":
            raise PauliViolation(status)
    elif np.linalg.eigvalsh(prob.gamma)[0] <= 1e-12:
        raise InvalidInput("bosonic marginal must be full rank")
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    eps, gamma = prob.eps, prob.gamma
    w, V = np.linalg.eigh(gamma)
    log_gamma = from_spectrum(np.log(w), V)
    U = prob.N * eps * log_gamma
    value = sym_dual_value(U, prob)
    G = subspace_state(U, prob)
    marg = one_body_marginal(G, prob)
    residual = trace_norm(marg - gamma)
    trace = []
    eta = 1.0
    it = 0
    while residual >= tol and it < max_iter:
        it += 1
        mw, mV = np.linalg.eigh(hermitian_part(marg))
        direction = eps * (log_gamma - from_spectrum(np.log(mw), mV))
        slack = 1e-12 * max(1.0, abs(value))
        eta = min(1.0, 2 * eta)
        for _ in range(max_halvings):
            cand = hermitian_part(U + eta * direction)
            cand_value = sym_dual_value(cand, prob)
            if cand_value >= value - slack:
                break
            eta /= 2
        else:
            break
        U, value = cand, cand_value
        G = subspace_state(U, prob)
        marg = one_body_marginal(G, prob)
        residual = trace_norm(marg - gamma)
        trace.append(SweepRecord(it, value, [residual]))
    state = G / np.trace(G).real
    report = SolveReport(
        primal=sym_primal_value(state, prob),
        dual=sym_dual_value(U, prob),
        marginal_residuals=[residual],
        iterations=it,
        converged=residual < tol,
        trace=trace,
    )
    return state, U, report
