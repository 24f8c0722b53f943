"""Solve problem files and re-check the reports they produce."""

from __future__ import annotations

import logging
import time

import numpy as np

from . import __version__
from . import classical, quantum, symmetric
from .errors import InvalidInput, PauliViolation
from .files import (
    SCHEMA_VERSION,
    ProblemFile,
    decode_matrix,
    encode_matrix,
    parse_problem,
    problem_to_dict,
)
from .herm import op_norm, trace_norm

log = logging.getLogger(__name__)

DEFAULT_TOL = {"classical": 1e-10, "quantum": 1e-8, "bosonic": 1e-8, "fermionic": 1e-8}
GAP_TOL = {"classical": 1e-8, "quantum": 1e-7, "bosonic": 1e-7, "fermionic": 1e-7}
RECONSTRUCTION_TOL = 1e-8
SHRINK_DELTA = 1e-6


def solver_config(pf: ProblemFile, tol=None, max_iter=None, shrink_boundary=False) -> dict:
    """Effective options: command-line overrides, then the file's ``solver`` block, then defaults."""
    opts = pf.solver
    cfg = {
        "tol": float(tol if tol is not None else opts.get("tol", DEFAULT_TOL[pf.kind])),
        "max_iter": int(max_iter if max_iter is not None else opts.get("max_iter", 10000)),
        "inner_tol": float(opts.get("inner_tol", 1e-10)),
        "inner_max": int(opts.get("inner_max", 500)),
        "seed": opts.get("seed"),
        "shrink_boundary": bool(shrink_boundary),
    }
    if not cfg["tol"] > 0 or cfg["max_iter"] < 1:
        raise InvalidInput("tol must be positive and max_iter at least 1")
    # the gap inherits the residual tolerance when that is looser than the default
    cfg["gap_tol"] = max(GAP_TOL[pf.kind], 10 * cfg["tol"])
    cfg["reconstruction_tol"] = max(RECONSTRUCTION_TOL, cfg["tol"])
    return cfg


def prune_classical(pf: ProblemFile):
    """Drop zero-mass support points. Returns ``(cost, marginals, refs, pruned)``."""
    keep, pruned = [], []
    for i, mu in enumerate(pf.marginals):
        if np.any(mu < 0):
            raise InvalidInput(f"marginals[{i}] has negative entries")
        keep.append(np.flatnonzero(mu > 0))
        pruned.append([int(k) for k in np.flatnonzero(mu == 0)])
    cost = pf.cost[np.ix_(*keep)]
    marginals = [mu[k] for mu, k in zip(pf.marginals, keep)]
    refs = None if pf.refs is None else [r[k] for r, k in zip(pf.refs, keep)]
    return cost, marginals, refs, pruned


def quantum_problem(pf: ProblemFile) -> quantum.QuantumProblem:
    return quantum.QuantumProblem(
        dims=tuple(pf.dims), H=pf.hamiltonian, marginals=pf.marginals, eps=pf.epsilon, refs=pf.refs
    )


def symmetric_problem(pf: ProblemFile, shrink_boundary: bool = False) -> symmetric.SymmetricProblem:
    gamma = pf.marginals[0]
    if shrink_boundary:
        gamma = symmetric.shrink_to_interior(gamma, SHRINK_DELTA)
    sign = 1 if pf.kind == "bosonic" else -1
    return symmetric.SymmetricProblem(
        d=pf.dims[0], N=pf.N, sign=sign, H=pf.hamiltonian, gamma=gamma, eps=pf.epsilon
    )


def solve_problem(pf: ProblemFile, cfg: dict, include_state: bool = True):
    """Run the solver for ``pf.kind`` and assemble the report document.

    Returns
    -------
    report : dict
    solve_report : SolveReport

    Raises
    ------
    PauliViolation
        Fermionic marginal outside the strict Pauli condition (after optional shrinking).
    """
    start = time.perf_counter()
    extra = {}
    if pf.kind == "classical":
        cost, marginals, refs, pruned = prune_classical(pf)
        plan, phi, rep = classical.sinkhorn_classical(
            cost, pf.epsilon, marginals, refs, tol=cfg["tol"], max_iter=cfg["max_iter"]
        )
        extra["pruned"] = pruned
        state, potentials = plan.tolist(), [p.tolist() for p in phi]
    elif pf.kind == "quantum":
        prob = quantum_problem(pf)
        G, U, rep = quantum.sinkhorn_quantum(
            prob, tol=cfg["tol"], max_iter=cfg["max_iter"],
            inner_tol=cfg["inner_tol"], inner_max=cfg["inner_max"],
        )
        extra["reconstruction_residual"] = quantum.reconstruction_residual(G, U, prob)
        state, potentials = encode_matrix(G), [encode_matrix(u) for u in U]
    else:
        if pf.kind == "fermionic":
            status = symmetric.pauli_check(pf.marginals[0], pf.N)
            extra["pauli"] = status.to_dict()
            if status.classification == "boundary" and not cfg["shrink_boundary"]:
                raise PauliViolation(status)
        prob = symmetric_problem(pf, cfg["shrink_boundary"])
        G, U, rep = symmetric.solve_symmetric(prob, tol=cfg["tol"], max_iter=cfg["max_iter"])
        extra["basis"] = [list(label) for label in prob.iso.labels]
        extra["reconstruction_residual"] = op_norm(G - symmetric.subspace_state(U, prob))
        state, potentials = encode_matrix(G), [encode_matrix(U)]
    wall = time.perf_counter() - start
    log.info("%s solve: converged=%s after %d sweeps", pf.kind, rep.converged, rep.iterations)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "kind": pf.kind,
        "config": cfg,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "primal": rep.primal,
        "dual": rep.dual,
        "gap": rep.gap,
        "marginal_residuals": list(rep.marginal_residuals),
        "warnings": list(rep.warnings),
    }
    doc.update(extra)
    doc["trace"] = [{"sweep": r.sweep, "dual": r.dual, "residuals": list(r.residuals)} for r in rep.trace]
    doc["wall_time"] = wall
    doc["problem"] = problem_to_dict(pf)
    if include_state:
        doc["state"] = state
        doc["potentials"] = potentials
    return doc, rep


def trace_rows(rep):
    """CSV rows ``sweep, dual_value, residual_1..N`` including the header."""
    n = len(rep.marginal_residuals)
    rows = [["sweep", "dual_value"] + [f"residual_{i + 1}" for i in range(n)]]
    for r in rep.trace:
        rows.append([r.sweep, repr(r.dual)] + [repr(x) for x in r.residuals])
    return rows


class MissingState(InvalidInput):
    pass


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def verify_report(doc: dict) -> list[tuple[str, bool, str]]:
    """Recompute the values stored in a report.

    Returns
    -------
    list of (check name, passed, detail)

    Raises
    ------
    MissingState
        The report was written without state or potentials.
    """
    if not isinstance(doc, dict) or "problem" not in doc or "config" not in doc:
        raise InvalidInput("not a report document")
    if "state" not in doc or "potentials" not in doc:
        raise MissingState("report has no state/potentials (written with --no-state?)")
    pf = parse_problem(doc["problem"])
    cfg = doc["config"]
    if pf.kind == "classical":
        cost, marginals, refs, _ = prune_classical(pf)
        plan = np.asarray(doc["state"], dtype=float)
        phi = [np.asarray(p, dtype=float) for p in doc["potentials"]]
        primal = classical.primal_value(plan, cost, pf.epsilon, refs)
        dual = classical.dual_value(phi, cost, pf.epsilon, marginals, refs)
        residuals = classical.marginal_residuals(plan, marginals)
        recon = float(np.max(np.abs(plan - classical.plan_from_potentials(phi, cost, pf.epsilon, refs))))
    elif pf.kind == "quantum":
        prob = quantum_problem(pf)
        G = decode_matrix(doc["state"], "state")
        U = [decode_matrix(u, f"potentials[{i}]") for i, u in enumerate(doc["potentials"])]
        primal = quantum.nc_primal_value(G, prob)
        dual = quantum.nc_dual_value(U, prob)
        residuals = quantum.marginal_residuals(G, prob)
        recon = quantum.reconstruction_residual(G, U, prob)
    else:
        prob = symmetric_problem(pf, bool(cfg.get("shrink_boundary")))
        G = decode_matrix(doc["state"], "state")
        U = decode_matrix(doc["potentials"][0], "potentials[0]")
        primal = symmetric.sym_primal_value(G, prob)
        dual = symmetric.sym_dual_value(U, prob)
        residuals = [trace_norm(symmetric.one_body_marginal(G, prob) - prob.gamma)]
        recon = op_norm(G - symmetric.subspace_state(U, prob))

    reported = [float(x) for x in doc["marginal_residuals"]]
    checks = [
        ("gap_field", _close(doc["gap"], doc["primal"] - doc["dual"], 1e-12),
         f"gap {doc['gap']!r} vs primal - dual {doc['primal'] - doc['dual']!r}"),
        ("primal_value", _close(primal, doc["primal"]), f"recomputed {primal!r}, reported {doc['primal']!r}"),
        ("dual_value", _close(dual, doc["dual"]), f"recomputed {dual!r}, reported {doc['dual']!r}"),
        ("marginal_residuals",
         max(residuals) < cfg["tol"] and len(reported) == len(residuals)
         and all(abs(a - b) <= 1e-9 for a, b in zip(residuals, reported)),
         f"recomputed max {max(residuals):.3e}, tolerance {cfg['tol']:.1e}"),
        ("duality_gap", abs(primal - dual) <= cfg["gap_tol"],
         f"|primal - dual| = {abs(primal - dual):.3e}, tolerance {cfg['gap_tol']:.1e}"),
        ("reconstruction", recon <= cfg["reconstruction_tol"],
         f"residual {recon:.3e}, tolerance {cfg['reconstruction_tol']:.1e}"),
    ]
    return checks
