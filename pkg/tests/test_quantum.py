import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eot import classical
from eot.errors import InnerSolverFailure, InvalidInput
from eot.herm import kron, kron_sum, mat_exp, mat_log, partial_trace, trace_norm
from eot.quantum import (
    QuantumProblem,
    gibbs_operator,
    h_eps_transform,
    marginal_residuals,
    nc_dual_gradient,
    nc_dual_value,
    nc_primal_value,
    reconstruction_residual,
    renormalization_shifts,
    renormalize,
    sinkhorn_quantum,
    umegaki,
)
from instances import random_density, random_hermitian, random_pure, random_weights

seeds = st.integers(0, 2**32 - 1)
DIMS = [(2, 2), (2, 3), (3, 3), (2, 2, 2)]


def random_problem(rng, dims, eps=0.5, norm=2.0, refs=False):
    H = random_hermitian(rng, math.prod(dims), norm=norm)
    marginals = [random_density(rng, d) for d in dims]
    m = [random_density(rng, d) * d for d in dims] if refs else None
    return QuantumProblem(dims=dims, H=H, marginals=marginals, eps=eps, refs=m)


def random_potentials(rng, dims, scale=1.0):
    return [random_hermitian(rng, d, norm=scale) for d in dims]


class TestProblem:
    def test_rejects_singular_marginal(self):
        with pytest.raises(InvalidInput):
            QuantumProblem((2, 2), np.zeros((4, 4)), [np.diag([1.0, 0.0]), np.eye(2) / 2], 1.0)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            QuantumProblem((2, 2), np.zeros((6, 6)), [np.eye(2) / 2] * 2, 1.0)

    def test_rejects_bad_eps(self):
        with pytest.raises(InvalidInput):
            QuantumProblem((2, 2), np.zeros((4, 4)), [np.eye(2) / 2] * 2, 0.0)

    def test_modified_hamiltonian(self, rng):
        prob = random_problem(rng, (2, 3), refs=True)
        expected = prob.H - prob.eps * kron_sum([mat_log(m) for m in prob.refs])
        assert np.allclose(prob.h_m, expected)


class TestUmegaki:
    def test_maximally_mixed(self):
        assert umegaki(np.eye(3) / 3) == pytest.approx(-math.log(3), abs=1e-14)

    def test_pure_state(self, rng):
        assert umegaki(random_pure(rng, 3)) == pytest.approx(0, abs=1e-12)

    def test_self(self, rng):
        G = random_density(rng, 4)
        assert umegaki(G, G) == pytest.approx(0, abs=1e-12)

    def test_diagonal_reduction(self, rng):
        p, q = random_weights(rng, 4), rng.uniform(0.5, 2, size=4)
        assert umegaki(np.diag(p), np.diag(q)) == pytest.approx(classical.rel_entropy(p, q), abs=1e-12)

    def test_nonnegative_for_states(self, rng):
        for _ in range(20):
            assert umegaki(random_density(rng, 3), random_density(rng, 3)) >= -1e-12


class TestDualValue:
    def test_zero_potentials(self):
        prob = QuantumProblem((2, 3), np.zeros((6, 6)), [np.eye(2) / 2, np.eye(3) / 3], 0.7)
        assert nc_dual_value([np.zeros((2, 2)), np.zeros((3, 3))], prob) == pytest.approx(-0.7 * 6 + 0.7)

    def test_diagonal_matches_classical(self, rng):
        c = rng.uniform(size=(2, 3))
        mu = [random_weights(rng, 2), random_weights(rng, 3)]
        phi = [rng.normal(size=2), rng.normal(size=3)]
        prob = QuantumProblem((2, 3), np.diag(c.ravel()), [np.diag(m) for m in mu], 0.4)
        value = nc_dual_value([np.diag(p) for p in phi], prob)
        assert value == pytest.approx(classical.dual_value(phi, c, 0.4, mu), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.sampled_from(DIMS))
    def test_translation_invariance(self, seed, dims):
        rng = np.random.default_rng(seed)
        prob = random_problem(rng, dims)
        U = random_potentials(rng, dims)
        alpha = rng.normal(size=len(dims))
        alpha -= alpha.mean()
        V = [u + a * np.eye(d) for u, a, d in zip(U, alpha, dims)]
        assert nc_dual_value(V, prob) == pytest.approx(nc_dual_value(U, prob), rel=1e-12, abs=1e-12)
        G = gibbs_operator(U, prob)
        assert np.max(np.abs(gibbs_operator(V, prob) - G)) < 1e-12 * max(1.0, np.max(np.abs(G)))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.sampled_from(DIMS))
    def test_weak_duality(self, seed, dims):
        rng = np.random.default_rng(seed)
        # a feasible state: the product of the marginals
        prob = random_problem(rng, dims, refs=bool(seed % 2))
        G = kron(*prob.marginals)
        U = random_potentials(rng, dims, scale=3.0)
        assert nc_dual_value(U, prob) <= nc_primal_value(G, prob) + 1e-12


class TestGradient:
    def test_zero_hamiltonian_zero_potentials(self):
        dims = (2, 3)
        gammas = [np.diag([0.3, 0.7]), np.diag([0.2, 0.3, 0.5])]
        prob = QuantumProblem(dims, np.zeros((6, 6)), gammas, 1.0)
        grads = nc_dual_gradient([np.zeros((2, 2)), np.zeros((3, 3))], prob)
        # Gamma(0) is the identity on the 6-dimensional space
        for g, gamma, d in zip(grads, gammas, dims):
            assert np.allclose(g, gamma - (6 / d) * np.eye(d))
        G = gibbs_operator([np.zeros((2, 2)), np.zeros((3, 3))], prob)
        G = G / np.trace(G)
        for j, (gamma, d) in enumerate(zip(gammas, dims)):
            assert np.allclose(gamma - partial_trace(G, j, dims), gamma - np.eye(d) / d)

    def test_vanishes_at_optimum(self, rng):
        prob = random_problem(rng, (2, 2))
        G, U, rep = sinkhorn_quantum(prob)
        assert all(trace_norm(g) < 1e-8 for g in nc_dual_gradient(U, prob))


class TestTransform:
    def test_diagonal_step_matches_classical_transform(self, rng):
        c = rng.uniform(size=(3, 2))
        mu = [random_weights(rng, 3), random_weights(rng, 2)]
        phi = [rng.normal(size=3), rng.normal(size=2)]
        eps = 0.3
        prob = QuantumProblem((3, 2), np.diag(c.ravel()), [np.diag(m) for m in mu], eps)
        V = h_eps_transform(1, [np.diag(p) for p in phi], prob)
        expected = classical.c_eps_transform(1, phi, c, eps, mu[1])
        assert np.allclose(V, np.diag(expected), atol=1e-10)

    def test_non_interacting(self, rng):
        A, B = random_hermitian(rng, 2), random_hermitian(rng, 3)
        H = np.kron(A, np.eye(3)) + np.kron(np.eye(2), B)
        gammas = [random_density(rng, 2), random_density(rng, 3)]
        prob = QuantumProblem((2, 3), H, gammas, 0.5)
        U = [np.zeros((2, 2)), np.zeros((3, 3))]
        U[0] = h_eps_transform(0, U, prob)
        U[1] = h_eps_transform(1, U, prob)
        G = gibbs_operator(U, prob)
        assert trace_norm(G - np.kron(*gammas)) < 1e-9

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.sampled_from(DIMS))
    def test_marginal_after_transform(self, seed, dims):
        rng = np.random.default_rng(seed)
        prob = random_problem(rng, dims)
        U = random_potentials(rng, dims)
        for j in range(len(dims)):
            before = nc_dual_value(U, prob)
            U[j] = h_eps_transform(j, U, prob, inner_tol=1e-10)
            G = gibbs_operator(U, prob)
            assert trace_norm(partial_trace(G, j, dims) - prob.marginals[j]) < 1e-10
            assert nc_dual_value(U, prob) >= before - 1e-10

    def test_coordinate_maximiser(self, rng):
        prob = random_problem(rng, (2, 2))
        U = random_potentials(rng, (2, 2))
        U[0] = h_eps_transform(0, U, prob)
        best = nc_dual_value(U, prob)
        for _ in range(20):
            W = list(U)
            W[0] = U[0] + 1e-3 * random_hermitian(rng, 2)
            assert nc_dual_value(W, prob) <= best + 1e-12

    def test_failure_carries_residual(self, rng):
        prob = random_problem(rng, (2, 2), eps=0.1)
        U = random_potentials(rng, (2, 2), scale=0.1)
        with pytest.raises(InnerSolverFailure) as info:
            h_eps_transform(0, U, prob, inner_tol=1e-30, inner_max=2)
        assert info.value.residual > 0


class TestRenormalize:
    def test_shifts_sum_to_zero(self, rng):
        prob = random_problem(rng, (2, 3, 2))
        U = random_potentials(rng, prob.dims, scale=5.0)
        assert abs(renormalization_shifts(U, prob).sum()) < 1e-14

    def test_centred_input_unchanged(self, rng):
        prob = random_problem(rng, (2, 3))
        U = renormalize(random_potentials(rng, prob.dims), prob)
        assert np.allclose(renormalization_shifts(U, prob), 0, atol=1e-14)

    def test_translation_class(self, rng):
        prob = random_problem(rng, (2, 2, 2))
        U = renormalize(random_potentials(rng, prob.dims), prob)
        beta = 0.8
        V = [U[0] + beta * np.eye(2), U[1] - beta * np.eye(2), U[2]]
        assert all(np.allclose(a, b, atol=1e-14) for a, b in zip(renormalize(V, prob), U))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.sampled_from(DIMS))
    def test_contract(self, seed, dims):
        rng = np.random.default_rng(seed)
        prob = random_problem(rng, dims)
        U = random_potentials(rng, dims, scale=3.0)
        R = renormalize(U, prob)
        assert np.max(np.abs(kron_sum(R) - kron_sum(U))) < 1e-14
        assert nc_dual_value(R, prob) == pytest.approx(nc_dual_value(U, prob), rel=1e-12, abs=1e-12)
        RR = renormalize(R, prob)
        assert max(np.max(np.abs(a - b)) for a, b in zip(RR, R)) < 1e-12


class TestSinkhorn:
    @pytest.mark.parametrize("dims", DIMS)
    def test_zero_hamiltonian_gives_product(self, rng, dims):
        gammas = [random_density(rng, d) for d in dims]
        prob = QuantumProblem(dims, np.zeros((math.prod(dims),) * 2), gammas, 0.5)
        G, U, rep = sinkhorn_quantum(prob)
        assert rep.converged
        assert trace_norm(G - kron(*gammas)) < 1e-9

    def test_gibbs_marginals(self, rng):
        eps = 0.5
        H = random_hermitian(rng, 6, norm=2.0)
        E = mat_exp(-H / eps)
        Z = np.trace(E).real
        gibbs = E / Z
        prob = QuantumProblem((2, 3), H, [partial_trace(gibbs, i, (2, 3)) for i in range(2)], eps)
        G, U, rep = sinkhorn_quantum(prob)
        assert rep.primal == pytest.approx(-eps * math.log(Z), abs=1e-8)
        assert trace_norm(G - gibbs) < 1e-8
        assert np.linalg.eigvalsh(G)[0] > 0

    def test_primal_at_gibbs_state(self, rng):
        eps = 0.7
        H = random_hermitian(rng, 4)
        E = mat_exp(-H / eps)
        Z = np.trace(E).real
        prob = QuantumProblem((2, 2), H, [np.eye(2) / 2] * 2, eps)
        assert nc_primal_value(E / Z, prob) == pytest.approx(-eps * math.log(Z), abs=1e-12)

    def test_primal_at_ground_state(self, rng):
        H = random_hermitian(rng, 4)
        w, V = np.linalg.eigh(H)
        psi = np.outer(V[:, 0], V[:, 0].conj())
        prob = QuantumProblem((2, 2), H, [np.eye(2) / 2] * 2, 0.3)
        assert nc_primal_value(psi, prob) == pytest.approx(w[0], abs=1e-12)

    def test_diagonal_matches_classical(self, rng):
        c = rng.uniform(size=(2, 2))
        mu = [random_weights(rng, 2), random_weights(rng, 2)]
        plan, _, crep = classical.sinkhorn_classical(c, 0.5, mu)
        prob = QuantumProblem((2, 2), np.diag(c.ravel()), [np.diag(m) for m in mu], 0.5)
        G, U, rep = sinkhorn_quantum(prob)
        assert np.max(np.abs(np.diag(G).real.reshape(2, 2) - plan)) < 1e-8
        assert rep.dual == pytest.approx(crep.dual, abs=1e-8)

    @settings(max_examples=12, deadline=None)
    @given(seeds, st.sampled_from(DIMS), st.sampled_from([0.25, 1.0]), st.booleans())
    def test_converged_run(self, seed, dims, eps, refs):
        prob = random_problem(np.random.default_rng(seed), dims, eps=eps, refs=refs)
        G, U, rep = sinkhorn_quantum(prob)
        assert rep.converged
        assert max(marginal_residuals(G, prob)) < 1e-8
        assert abs(rep.gap) < 1e-7
        assert reconstruction_residual(G, U, prob) < 1e-8
        assert np.trace(G).real == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(G)[0] > 0
        duals = rep.duals()
        assert all(b >= a - 1e-10 for a, b in zip(duals, duals[1:]))
        linear = sum(np.trace(u @ g).real for u, g in zip(U, prob.marginals))
        assert rep.dual == pytest.approx(linear, abs=1e-7)

    def test_max_iter(self, rng):
        prob = random_problem(rng, (3, 3), eps=0.25)
        _, _, rep = sinkhorn_quantum(prob, max_iter=1)
        assert not rep.converged and rep.iterations == 1 and len(rep.trace) == 1

    def test_bound_check_is_a_warning(self, rng):
        # strong coupling at small eps tends to push potentials past 2||H_m||
        found = False
        for _ in range(10):
            prob = random_problem(rng, (2, 2), eps=0.25)
            _, _, rep = sinkhorn_quantum(prob, bound_slack=-np.inf)
            assert rep.converged
            found = found or bool(rep.warnings)
        assert found

    def test_rejects_bad_tol(self, rng):
        with pytest.raises(InvalidInput):
            sinkhorn_quantum(random_problem(rng, (2, 2)), tol=0)
