"""Independent reference solvers used to cross-check the Sinkhorn implementations.

Nothing here shares iteration code with :mod:`eot.classical` or :mod:`eot.quantum`:
the dual is maximised by simultaneous gradient ascent over all potentials, with
Barzilai-Borwein trial steps and Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalOverflow, OracleFailure
from .herm import hermitian_part, partial_trace
from .quantum import QuantumProblem, nc_dual_gradient, nc_dual_value


@dataclass(frozen=True)
class OracleConfig:
    step: float = 1.0
    max_iter: int = 50000
    tol: float = 1e-12
    fd_step: float = 1e-5
    armijo: float = 1e-4
    backtrack: float = 0.5


def _inner(a, b) -> float:
    return float(sum(np.real(np.vdot(x, y)) for x, y in zip(a, b)))


def _gradient_ascent(value_fn, grad_fn, x, size_fn, cfg: OracleConfig, increment_fn=None, history=None):
    """Maximise ``value_fn``; ``increment_fn(x, step)`` may supply ``f(x + step) - f(x)`` exactly.

    Accepted values are appended to ``history`` when a list is given.
    """
    value = value_fn(x)
    if history is not None:
        history.append(value)
    g = grad_fn(x)
    t = cfg.step
    prev = None
    for _ in range(cfg.max_iter):
        size = size_fn(g)
        if size < cfg.tol:
            return x, value
        gg = _inner(g, g)
        if prev is not None:
            s = [a - b for a, b in zip(x, prev[0])]
            y = [b - a for a, b in zip(g, prev[1])]
            sy = _inner(s, y)
            if sy > 0:
                t = _inner(s, s) / sy
        while True:
            step = [t * b for b in g]
            cand = [a + b for a, b in zip(x, step)]
            with np.errstate(over="ignore", invalid="ignore"):
                cand_value = value_fn(cand)
                gain = increment_fn(x, step) if increment_fn else cand_value - value
            if np.isfinite(cand_value) and np.isfinite(gain):
                if gain >= cfg.armijo * t * gg:
                    cand_g = grad_fn(cand)
                    break
                # at the noise floor of the objective, accept steps that shrink the gradient
                if increment_fn is None and gain >= -1e-14 * max(1.0, abs(value)):
                    cand_g = grad_fn(cand)
                    if _inner(cand_g, cand_g) < gg:
                        break
            t *= cfg.backtrack
            if t < 1e-20:
                raise OracleFailure(f"backtracking floor reached with gradient size {size:.3g}")
        prev = (x, g)
        x, value, g = cand, cand_value, cand_g
        if history is not None:
            history.append(value)
    raise OracleFailure(f"no convergence in {cfg.max_iter} steps (gradient size {size_fn(g):.3g})")


def brute_dual_ascent_classical(
    c, eps: float, marginals, refs=None, cfg: OracleConfig | None = None, history=None
):
    """Maximise the classical entropic dual by full-gradient ascent.

    Returns
    -------
    phi : list of ndarray
    value : float
    """
    cfg = cfg or OracleConfig()
    c = np.asarray(c, dtype=float)
    n = c.ndim
    marginals = [np.asarray(mu, dtype=float) for mu in marginals]
    refs = [np.ones(k) for k in c.shape] if refs is None else [np.asarray(r, float) for r in refs]
    log_sigma = np.zeros(c.shape)
    for i, r in enumerate(refs):
        log_sigma = log_sigma + np.log(r).reshape([-1 if k == i else 1 for k in range(n)])

    def log_plan(phi):
        total = -c / eps + log_sigma
        for i, p in enumerate(phi):
            total = total + (p / eps).reshape([-1 if k == i else 1 for k in range(n)])
        return total

    def value(phi):
        return sum(float(p @ mu) for p, mu in zip(phi, marginals)) - eps * float(
            np.exp(logsumexp(log_plan(phi)))
        ) + eps

    def grad(phi):
        plan = np.exp(log_plan(phi))
        return [mu - plan.sum(axis=tuple(k for k in range(n) if k != i)) for i, mu in enumerate(marginals)]

    def increment(phi, step):
        lin = sum(float(s @ mu) for s, mu in zip(step, marginals))
        shift = sum(
            (s / eps).reshape([-1 if k == i else 1 for k in range(n)]) for i, s in enumerate(step)
        )
        return lin - eps * float(np.sum(np.exp(log_plan(phi)) * np.expm1(shift)))

    def size(g):
        return max(float(np.abs(x).sum()) for x in g)

    phi, val = _gradient_ascent(
        value, grad, [np.zeros(k) for k in c.shape], size, cfg, increment, history
    )
    return phi, val


def oracle_plan_classical(phi, c, eps: float, refs=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    n = c.ndim
    refs = [np.ones(k) for k in c.shape] if refs is None else refs
    total = -c / eps
    for i, (p, r) in enumerate(zip(phi, refs)):
        shape = [-1 if k == i else 1 for k in range(n)]
        total = total + (np.asarray(p) / eps + np.log(np.asarray(r, float))).reshape(shape)
    return np.exp(total)


def brute_dual_ascent_quantum(prob: QuantumProblem, cfg: OracleConfig | None = None, history=None):
    """Maximise the quantum dual by simultaneous gradient ascent from ``U = 0``.

    Returns
    -------
    U : list of ndarray
    value : float
    """
    cfg = cfg or OracleConfig(tol=1e-10)

    def size(g):
        return max(float(np.abs(np.linalg.eigvalsh(hermitian_part(x))).sum()) for x in g)

    def value(U):
        try:
            return nc_dual_value([hermitian_part(u) for u in U], prob)
        except NumericalOverflow:
            return -np.inf

    def grad(U):
        return nc_dual_gradient([hermitian_part(u) for u in U], prob)

    U0 = [np.zeros((d, d), dtype=complex) for d in prob.dims]
    U, val = _gradient_ascent(value, grad, U0, size, cfg, history=history)
    return [hermitian_part(u) for u in U], val


def hermitian_basis(d: int):
    """Real-symmetric and imaginary-antisymmetric matrix units spanning the d x d Hermitian matrices."""
    for j in range(d):
        for k in range(j, d):
            E = np.zeros((d, d), dtype=complex)
            if j == k:
                E[j, j] = 1.0
                yield (j, k, "diag"), E
                continue
            E[j, k] = E[k, j] = 1.0
            yield (j, k, "re"), E
            F = np.zeros((d, d), dtype=complex)
            F[j, k], F[k, j] = 1j, -1j
            yield (j, k, "im"), F


def fd_gradient(f, U, fd_step: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of a real functional of a tuple of Hermitian matrices.

    Uses the pairing ``<G, E> = Tr(G E)``, so the result is directly comparable to
    analytic gradients such as :func:`eot.quantum.nc_dual_gradient`.
    """
    U = [np.asarray(u, dtype=complex) for u in U]
    out = []
    for i, u in enumerate(U):
        d = u.shape[0]
        G = np.zeros((d, d), dtype=complex)
        for (j, k, kind), E in hermitian_basis(d):
            plus = [v + fd_step * E if m == i else v for m, v in enumerate(U)]
            minus = [v - fd_step * E if m == i else v for m, v in enumerate(U)]
            fp, fm = f(plus), f(minus)
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise OracleFailure(f"functional is not finite near slot {i} direction {(j, k, kind)}")
            deriv = (fp - fm) / (2 * fd_step)
            if kind == "diag":
                G[j, j] = deriv
            elif kind == "re":
                G[j, k] += deriv / 2
                G[k, j] += deriv / 2
            else:
                G[j, k] += 1j * deriv / 2
                G[k, j] -= 1j * deriv / 2
        out.append(G)
    return out


def diagonal_bridge(c, eps: float, marginals, refs=None) -> QuantumProblem:
    """Embed a discrete problem as commuting operators in the product basis."""
    c = np.asarray(c, dtype=float)
    refs = [np.ones(k) for k in c.shape] if refs is None else refs
    return QuantumProblem(
        dims=c.shape,
        H=np.diag(c.ravel()).astype(complex),
        marginals=[np.diag(np.asarray(mu, float)).astype(complex) for mu in marginals],
        eps=eps,
        refs=[np.diag(np.asarray(r, float)).astype(complex) for r in refs],
    )


def diagonal_of_state(G, dims) -> np.ndarray:
    """Diagonal of a product-basis operator reshaped to an N-way array."""
    return np.real(np.diag(G)).reshape(tuple(dims))


def marginals_of(G, dims) -> list[np.ndarray]:
    return [partial_trace(G, i, dims) for i in range(len(dims))]
