"""Discrete multimarginal entropic optimal transport.

A problem is an N-way cost array ``c`` of shape ``(L_0, ..., L_{N-1})``, strictly
positive marginals ``mu_i`` of length ``L_i`` and strictly positive reference
weights ``refs_i`` (the counting measure when omitted). Potentials are a list
of N real vectors. All exponential sums go through ``logsumexp``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInput
from .herm import kron_sum_diagonal
from .report import SolveReport, SweepRecord

MASS_TOL = 1e-12


def check_marginal(mu, name: str = "marginal") -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise InvalidInput(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(mu)):
        raise InvalidInput(f"{name} has non-finite entries")
    if np.any(mu <= 0):
        raise InvalidInput(f"{name} must be strictly positive; prune zero-mass points first")
    if abs(mu.sum() - 1.0) > MASS_TOL:
        raise InvalidInput(f"{name} sums to {mu.sum()!r}, expected 1")
    return mu


def _check_problem(c, eps, marginals, refs):
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise InvalidInput("cost has non-finite entries")
    if not eps > 0:
        raise InvalidInput(f"epsilon must be positive, got {eps!r}")
    marginals = [check_marginal(mu, f"marginal {i}") for i, mu in enumerate(marginals)]
    if c.ndim != len(marginals) or c.shape != tuple(len(mu) for mu in marginals):
        raise InvalidInput(
            f"cost shape {c.shape} does not match marginal lengths {[len(mu) for mu in marginals]}"
        )
    refs = _check_refs(refs, c.shape)
    return c, float(eps), marginals, refs


def _check_refs(refs, shape):
    if refs is None:
        return [np.ones(n) for n in shape]
    refs = [np.asarray(r, dtype=float) for r in refs]
    if tuple(len(r) for r in refs) != tuple(shape):
        raise InvalidInput(f"reference weights do not match shape {shape}")
    for i, r in enumerate(refs):
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise InvalidInput(f"reference weights {i} must be finite and strictly positive")
    return refs


def product_measure(refs) -> np.ndarray:
    """Tensor product of the per-axis reference weights as an N-way array."""
    return np.exp(kron_sum_diagonal([np.log(np.asarray(r, dtype=float)) for r in refs]))


def marginal(pi, i: int) -> np.ndarray:
    pi = np.asarray(pi)
    axes = tuple(k for k in range(pi.ndim) if k != i)
    return pi.sum(axis=axes)


def rel_entropy(pi, sigma) -> float:
    """``sum pi log(pi / sigma)`` with the convention ``0 log 0 = 0``."""
    pi = np.asarray(pi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if pi.shape != sigma.shape:
        raise InvalidInput(f"shape mismatch {pi.shape} vs {sigma.shape}")
    if np.any(sigma <= 0):
        raise InvalidInput("reference measure must be strictly positive")
    if np.any(pi < 0):
        raise InvalidInput("coupling has negative entries")
    mask = pi > 0
    return float(np.sum(pi[mask] * np.log(pi[mask] / sigma[mask])))


def log_gibbs_kernel(c, eps: float, refs=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if not eps > 0:
        raise InvalidInput(f"epsilon must be positive, got {eps!r}")
    refs = _check_refs(refs, c.shape)
    return -c / eps + kron_sum_diagonal([np.log(r) for r in refs])


def gibbs_kernel(c, eps: float, refs=None) -> np.ndarray:
    """``exp(-c/eps)`` times the product reference measure."""
    return np.exp(log_gibbs_kernel(c, eps, refs))


def plan_from_potentials(phi, c, eps: float, refs=None) -> np.ndarray:
    """Coupling ``exp((sum_i phi_i - c)/eps)`` against the product reference."""
    return np.exp(kron_sum_diagonal(phi) / eps + log_gibbs_kernel(c, eps, refs))


def c_transform(j: int, phi, c) -> np.ndarray:
    """Unregularised c-transform: ``min`` over the other coordinates of ``c - sum_{i!=j} phi_i``.

    Not used by the solvers; it is the small-epsilon limit of ``c_eps_transform``.
    """
    c = np.asarray(c, dtype=float)
    others = [np.zeros_like(p) if i == j else np.asarray(p, float) for i, p in enumerate(phi)]
    axes = tuple(k for k in range(c.ndim) if k != j)
    return np.min(c - kron_sum_diagonal(others), axis=axes)


def c_eps_transform(j: int, phi, c, eps: float, mu_j, refs=None) -> np.ndarray:
    """Exact maximiser of the dual over potential ``j`` with the others held fixed."""
    c = np.asarray(c, dtype=float)
    refs = _check_refs(refs, c.shape)
    mu_j = check_marginal(mu_j, f"marginal {j}")
    others = [np.zeros(c.shape[i]) if i == j else np.asarray(p, float) for i, p in enumerate(phi)]
    log_refs = [np.zeros(c.shape[i]) if i == j else np.log(r) for i, r in enumerate(refs)]
    logits = (kron_sum_diagonal(others) - c) / eps + kron_sum_diagonal(log_refs)
    axes = tuple(k for k in range(c.ndim) if k != j)
    return -eps * logsumexp(logits, axis=axes) + eps * np.log(mu_j / refs[j])


def primal_value(pi, c, eps: float, refs=None) -> float:
    pi = np.asarray(pi, dtype=float)
    c = np.asarray(c, dtype=float)
    if pi.shape != c.shape:
        raise InvalidInput(f"coupling shape {pi.shape} does not match cost shape {c.shape}")
    sigma = product_measure(_check_refs(refs, c.shape))
    return float(np.sum(c * pi)) + eps * rel_entropy(pi, sigma)


def dual_value(phi, c, eps: float, marginals, refs=None) -> float:
    c = np.asarray(c, dtype=float)
    phi = [np.asarray(p, dtype=float) for p in phi]
    if tuple(len(p) for p in phi) != c.shape or len(marginals) != c.ndim:
        raise InvalidInput("potentials/marginals do not match the cost shape")
    linear = sum(float(p @ np.asarray(mu, float)) for p, mu in zip(phi, marginals))
    logits = kron_sum_diagonal(phi) / eps + log_gibbs_kernel(c, eps, refs)
    return linear - eps * float(np.exp(logsumexp(logits))) + eps


def marginal_residuals(pi, marginals) -> list[float]:
    """L1 distance between each marginal of ``pi`` and its target."""
    return [float(np.abs(marginal(pi, i) - mu).sum()) for i, mu in enumerate(marginals)]


def centre_potentials(phi, marginals) -> list[np.ndarray]:
    """Shift potentials by constants summing to zero so all ``<phi_i, mu_i>`` coincide."""
    s = np.array([float(p @ mu) for p, mu in zip(phi, marginals)])
    alpha = s.mean() - s
    return [p + a for p, a in zip(phi, alpha)]


def sinkhorn_classical(c, eps: float, marginals, refs=None, tol: float = 1e-10, max_iter: int = 10000):
    """Multimarginal Sinkhorn in log domain.

    Each sweep replaces potential ``j`` by its (c, eps)-transform for
    ``j = 0, ..., N-1`` in order, then centres the potentials. Stops once every
    marginal of the current coupling is within ``tol`` in L1.

    Returns
    -------
    plan : ndarray
        Coupling with the shape of ``c``.
    phi : list of ndarray
        Dual potentials.
    report : SolveReport
    """
    c, eps, marginals, refs = _check_problem(c, eps, marginals, refs)
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    phi = [np.zeros(n) for n in c.shape]
    trace = []
    converged = False
    residuals = marginal_residuals(plan_from_potentials(phi, c, eps, refs), marginals)
    sweep = 0
    while sweep < max_iter:
        sweep += 1
        for j in range(c.ndim):
            phi[j] = c_eps_transform(j, phi, c, eps, marginals[j], refs)
        phi = centre_potentials(phi, marginals)
        residuals = marginal_residuals(plan_from_potentials(phi, c, eps, refs), marginals)
        trace.append(SweepRecord(sweep, dual_value(phi, c, eps, marginals, refs), residuals))
        if max(residuals) < tol:
            converged = True
            break
    plan = plan_from_potentials(phi, c, eps, refs)
    report = SolveReport(
        primal=primal_value(plan, c, eps, refs),
        dual=dual_value(phi, c, eps, marginals, refs),
        marginal_residuals=residuals,
        iterations=sweep,
        converged=converged,
        trace=trace,
    )
    return plan, phi, report
