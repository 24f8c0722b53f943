"""Entropic optimal transport between density matrices.

The dual functional of potentials ``U = (U_0, ..., U_{N-1})`` is

    D(U) = sum_i Tr(U_i gamma_i) - eps Tr exp((+)U - H_m)/eps + eps,

with ``(+)`` the Kronecker sum and ``H_m = H - eps log(m_0 (x) ... (x) m_{N-1})``.
Its maximiser gives the primal optimum ``Gamma = exp(((+)U - H_m)/eps)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InnerSolverFailure, InvalidInput
from .herm import (
    check_density,
    check_dims,
    check_hermitian,
    embed,
    from_spectrum,
    hermitian_part,
    kron_sum,
    mat_log,
    op_norm,
    partial_trace,
    spectral_exp,
    trace_norm,
)
from .report import SolveReport, SweepRecord

log = logging.getLogger(__name__)

FULL_RANK_TOL = 1e-12


@dataclass(frozen=True)
class QuantumProblem:
    """Validated problem data; ``refs`` defaults to identities."""

    dims: tuple
    H: np.ndarray
    marginals: tuple
    eps: float
    refs: tuple | None = None
    h_m: np.ndarray = field(init=False, repr=False)
    log_marginals: tuple = field(init=False, repr=False)

    def __post_init__(self):
        dims = check_dims(self.dims)
        if not self.eps > 0:
            raise InvalidInput(f"epsilon must be positive, got {self.eps!r}")
        H = check_hermitian(self.H)
        if H.shape[0] != math.prod(dims):
            raise InvalidInput(f"Hamiltonian dimension {H.shape[0]} does not match dims {dims}")
        if len(self.marginals) != len(dims):
            raise InvalidInput(f"expected {len(dims)} marginals, got {len(self.marginals)}")
        gammas = []
        for i, (g, d) in enumerate(zip(self.marginals, dims)):
            g = check_density(g)
            if g.shape[0] != d:
                raise InvalidInput(f"marginal {i} has dimension {g.shape[0]}, expected {d}")
            if np.linalg.eigvalsh(g)[0] <= FULL_RANK_TOL:
                raise InvalidInput(f"marginal {i} is not full rank")
            gammas.append(g)
        refs = self.refs
        if refs is None:
            refs = tuple(np.eye(d, dtype=complex) for d in dims)
        if len(refs) != len(dims):
            raise InvalidInput(f"expected {len(dims)} reference operators, got {len(refs)}")
        log_refs = []
        for i, (m, d) in enumerate(zip(refs, dims)):
            m = check_hermitian(m)
            if m.shape[0] != d:
                raise InvalidInput(f"reference operator {i} has dimension {m.shape[0]}, expected {d}")
            log_refs.append(mat_log(m))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "marginals", tuple(gammas))
        object.__setattr__(self, "refs", tuple(check_hermitian(m) for m in refs))
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "h_m", H - self.eps * kron_sum(log_refs))
        object.__setattr__(self, "log_marginals", tuple(mat_log(g) for g in gammas))

    @property
    def N(self) -> int:
        return len(self.dims)

    @property
    def log_ref(self) -> np.ndarray:
        """``log`` of the product reference operator, i.e. ``(H - H_m)/eps``."""
        return (self.H - self.h_m) / self.eps


def _check_potentials(U, prob: QuantumProblem) -> list[np.ndarray]:
    if len(U) != prob.N:
        raise InvalidInput(f"expected {prob.N} potentials, got {len(U)}")
    U = [check_hermitian(u) for u in U]
    for i, (u, d) in enumerate(zip(U, prob.dims)):
        if u.shape[0] != d:
            raise InvalidInput(f"potential {i} has dimension {u.shape[0]}, expected {d}")
    return U


def gibbs_operator(U, prob: QuantumProblem) -> np.ndarray:
    """``exp(((+)U - H_m)/eps)``; a density matrix exactly when its trace is one."""
    U = _check_potentials(U, prob)
    _, V, ew = spectral_exp((kron_sum(U) - prob.h_m) / prob.eps)
    return from_spectrum(ew, V)


def umegaki(G, m=None, log_m=None) -> float:
    """Relative entropy ``Tr G (log G - log m)``; zero eigenvalues of ``G`` contribute nothing.

    ``m`` must be positive definite, so ``Tr(G log m)`` is always finite.
    Pass ``log_m`` directly to skip the logarithm. With neither given, ``m`` is the identity.
    """
    G = check_hermitian(G)
    lam = np.linalg.eigvalsh(G)
    lam = lam[lam > 0]
    value = float(np.sum(lam * np.log(lam)))
    if log_m is None and m is not None:
        log_m = mat_log(m)
    if log_m is not None:
        value -= float(np.trace(G @ log_m).real)
    return value


def nc_primal_value(G, prob: QuantumProblem) -> float:
    G = check_hermitian(G)
    if G.shape != prob.H.shape:
        raise InvalidInput(f"state dimension {G.shape[0]} does not match problem {prob.H.shape[0]}")
    return float(np.trace(prob.H @ G).real) + prob.eps * umegaki(G, log_m=prob.log_ref)


def nc_dual_value(U, prob: QuantumProblem) -> float:
    U = _check_potentials(U, prob)
    linear = sum(float(np.trace(u @ g).real) for u, g in zip(U, prob.marginals))
    _, _, ew = spectral_exp((kron_sum(U) - prob.h_m) / prob.eps)
    return linear - prob.eps * float(ew.sum()) + prob.eps


def nc_dual_gradient(U, prob: QuantumProblem) -> list[np.ndarray]:
    """Gradient of the dual for the pairing ``<A, B> = Tr(AB)``: ``gamma_j - P_j Gamma(U)``."""
    G = gibbs_operator(U, prob)
    return [g - partial_trace(G, j, prob.dims) for j, g in enumerate(prob.marginals)]


def marginal_residuals(G, prob: QuantumProblem) -> list[float]:
    """Trace-norm distance of each reduced operator of ``G`` to its target."""
    return [trace_norm(partial_trace(G, i, prob.dims) - g) for i, g in enumerate(prob.marginals)]


def h_eps_transform(
    j: int,
    U,
    prob: QuantumProblem,
    inner_tol: float = 1e-10,
    inner_max: int = 500,
    max_halvings: int = 50,
) -> np.ndarray:
    """Maximise the dual over slot ``j`` with the other potentials fixed.

    The maximiser ``V`` is characterised by ``P_j exp(... (+) V (+) ... - H_m)/eps = gamma_j``.
    It is found by the damped fixed-point iteration
    ``V <- V + eta * eps * (log gamma_j - log P_j Gamma(V))``, which is exact in one step
    when everything commutes. ``eta`` starts at 1 and is halved whenever the coordinate
    objective would decrease; after ``max_halvings`` failures a bounded line search is tried.

    Raises
    ------
    InnerSolverFailure
        If the marginal residual is still above ``inner_tol`` after ``inner_max`` steps.
    """
    U = _check_potentials(U, prob)
    if not 0 <= j < prob.N:
        raise InvalidInput(f"slot {j} out of range for {prob.N} factors")
    eps, dims = prob.eps, prob.dims
    gamma, log_gamma = prob.marginals[j], prob.log_marginals[j]
    rest = kron_sum([np.zeros_like(u) if i == j else u for i, u in enumerate(U)]) - prob.h_m

    def evaluate(V):
        _, W, ew = spectral_exp((rest + embed(V, j, dims)) / eps)
        value = float(np.trace(V @ gamma).real) - eps * float(ew.sum())
        return value, partial_trace(from_spectrum(ew, W), j, dims)

    V = U[j]
    value, P = evaluate(V)
    eta = 1.0
    residual = trace_norm(P - gamma)
    for _ in range(inner_max):
        if residual < inner_tol:
            return V
        w, W = np.linalg.eigh(hermitian_part(P))
        direction = eps * (log_gamma - from_spectrum(np.log(w), W))
        slack = 1e-12 * max(1.0, abs(value))
        eta = min(1.0, 2 * eta)
        for _ in range(max_halvings):
            cand = V + eta * direction
            cand_value, cand_P = evaluate(cand)
            if cand_value >= value - slack:
                break
            eta /= 2
        else:
            res = minimize_scalar(
                lambda t: -evaluate(V + t * direction)[0], bounds=(0.0, 1.0), method="bounded"
            )
            cand = V + res.x * direction
            cand_value, cand_P = evaluate(cand)
            if cand_value < value - slack:
                break
        V, value, P = hermitian_part(cand), cand_value, cand_P
        residual = trace_norm(P - gamma)
    if residual < inner_tol:
        return V
    raise InnerSolverFailure(
        f"(H, eps)-transform of slot {j} stalled at marginal residual {residual:.3g}",
        residual=residual,
    )


def renormalization_shifts(U, prob: QuantumProblem) -> np.ndarray:
    """Constants ``alpha_i`` (summing to zero) that equalise ``tr(U_i - eps log gamma_i)/d_i``."""
    s = np.array(
        [
            float(np.trace(u - prob.eps * lg).real) / d
            for u, lg, d in zip(U, prob.log_marginals, prob.dims)
        ]
    )
    return s.mean() - s


def renormalize(U, prob: QuantumProblem) -> list[np.ndarray]:
    """Translate potentials by ``alpha_i * 1`` with ``sum alpha_i = 0``; idempotent."""
    U = _check_potentials(U, prob)
    alpha = renormalization_shifts(U, prob)
    return [u + a * np.eye(d) for u, a, d in zip(U, alpha, prob.dims)]


def uniform_bound_excess(U, prob: QuantumProblem) -> list[float]:
    """``||U_i - eps log gamma_i|| - 2 ||H_m||`` per slot; positive values exceed the bound."""
    bound = 2 * op_norm(prob.h_m)
    return [op_norm(u - prob.eps * lg) - bound for u, lg in zip(U, prob.log_marginals)]


def sinkhorn_quantum(
    prob: QuantumProblem,
    tol: float = 1e-8,
    max_iter: int = 10000,
    inner_tol: float = 1e-10,
    inner_max: int = 500,
    bound_slack: float = 1e-6,
):
    """Noncommutative Sinkhorn: sweep the (H, eps)-transforms over slots, renormalising after each sweep.

    Potentials start at ``eps log gamma_i``. The loop stops once every reduced
    operator of ``Gamma(U)`` is within ``tol`` of its target in trace norm.

    Returns
    -------
    state : ndarray
        ``exp(((+)U - H_m)/eps)`` scaled to unit trace.
    U : list of ndarray
    report : SolveReport
    """
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    U = [prob.eps * lg for lg in prob.log_marginals]
    trace = []
    warnings = []
    converged = False
    residuals = marginal_residuals(gibbs_operator(U, prob), prob)
    sweep = 0
    while sweep < max_iter:
        sweep += 1
        for j in range(prob.N):
            U[j] = h_eps_transform(j, U, prob, inner_tol=inner_tol, inner_max=inner_max)
        U = renormalize(U, prob)
        excess = max(uniform_bound_excess(U, prob))
        if excess > bound_slack and not warnings:
            msg = f"sweep {sweep}: renormalised potentials exceed the 2||H|| bound by {excess:.3g}"
            log.warning(msg)
            warnings.append(msg)
        G = gibbs_operator(U, prob)
        residuals = marginal_residuals(G, prob)
        trace.append(SweepRecord(sweep, nc_dual_value(U, prob), residuals))
        log.debug("sweep %d residual %.3e", sweep, max(residuals))
        if max(residuals) < tol:
            converged = True
            break
    G = gibbs_operator(U, prob)
    state = G / np.trace(G).real
    report = SolveReport(
        primal=nc_primal_value(state, prob),
        dual=nc_dual_value(U, prob),
        marginal_residuals=residuals,
        iterations=sweep,
        converged=converged,
        trace=trace,
        warnings=warnings,
    )
    return state, U, report


def reconstruction_residual(G, U, prob: QuantumProblem) -> float:
    """``||G - exp(((+)U - H_m)/eps)||`` in operator norm."""
    return op_norm(np.asarray(G) - gibbs_operator(U, prob))
