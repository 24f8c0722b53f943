"""Dense Hermitian linear algebra on finite tensor-product spaces.

Operators are plain complex ``numpy`` arrays. Tensor factors are ordered as in
``numpy.kron``: the first factor is the most significant index. Slot indices
are zero-based throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySubspace,
    InvalidInput,
    NumericalFailure,
    NumericalOverflow,
    SingularOperator,
)

HERMITIAN_TOL = 1e-12
DENSITY_TOL = 1e-12
EXP_LIMIT = 700.0


def as_operator(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("operator has non-finite entries")
    return A


def check_hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate hermiticity relative to the largest entry and return the Hermitian part."""
    A = as_operator(A)
    scale = max(float(np.max(np.abs(A))), 1.0)
    err = float(np.max(np.abs(A - A.conj().T)))
    if err > tol * scale:
        raise InvalidInput(f"operator is not Hermitian (asymmetry {err:.3g})")
    return hermitian_part(A)


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return (A + A.conj().T) / 2


def check_density(G, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, nonnegative spectrum."""
    G = check_hermitian(G)
    tr = float(np.trace(G).real)
    if abs(tr - 1.0) > tol:
        raise InvalidInput(f"density matrix has trace {tr!r}, expected 1")
    lo = float(np.linalg.eigvalsh(G)[0])
    if lo < -tol:
        raise InvalidInput(f"density matrix has negative eigenvalue {lo:.3g}")
    return G


def check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0 or any(d < 1 for d in dims):
        raise InvalidInput(f"dims must be a non-empty list of positive integers, got {dims}")
    return dims


def eigh(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order and the unitary of eigenvectors."""
    A = check_hermitian(A)
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    return w, V


def from_spectrum(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    return hermitian_part((V * w) @ V.conj().T)


def spectral_exp(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues, eigenvectors and exponentiated eigenvalues of Hermitian ``X``."""
    w, V = np.linalg.eigh(hermitian_part(np.asarray(X, dtype=complex)))
    if w[-1] > EXP_LIMIT:
        raise NumericalOverflow(
            f"exponent eigenvalue {w[-1]:.6g} exceeds {EXP_LIMIT}", eigenvalue=float(w[-1])
        )
    return w, V, np.exp(w)


def mat_exp(A) -> np.ndarray:
    w, V = eigh(A)
    if w[-1] > EXP_LIMIT:
        raise NumericalOverflow(
            f"matrix exponential overflows: eigenvalue {w[-1]:.6g} > {EXP_LIMIT}",
            eigenvalue=float(w[-1]),
        )
    return from_spectrum(np.exp(w), V)


def mat_log(P, eig_floor: float = 1e-12) -> np.ndarray:
    w, V = eigh(P)
    bad = np.flatnonzero(w <= eig_floor)
    if bad.size:
        k = int(bad[0])
        raise SingularOperator(
            f"eigenvalue {k} is {w[k]:.3g}, not above the floor {eig_floor:g}", index=k
        )
    return from_spectrum(np.log(w), V)


def trace_norm(A) -> float:
    """Sum of singular values; for Hermitian input, sum of absolute eigenvalues."""
    A = np.asarray(A, dtype=complex)
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(A)))))


def op_norm(A) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    A = np.asarray(A, dtype=complex)
    return float(np.max(np.abs(np.linalg.eigvalsh(hermitian_part(A)))))


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def partial_trace(G, i: int, dims) -> np.ndarray:
    """Reduced operator on slot ``i``: trace out every other factor."""
    dims = check_dims(dims)
    G = as_operator(G)
    n = len(dims)
    total = math.prod(dims)
    if G.shape[0] != total:
        raise InvalidInput(f"operator dimension {G.shape[0]} does not match dims {dims}")
    if not 0 <= i < n:
        raise InvalidInput(f"slot {i} out of range for {n} factors")
    T = G.reshape(dims + dims)
    T = np.moveaxis(T, (i, n + i), (0, 1))
    rest = total // dims[i]
    T = T.reshape(dims[i], dims[i], rest, rest)
    return np.einsum("abkk->ab", T)


def embed(A, i: int, dims) -> np.ndarray:
    """``1 (x) ... (x) A (x) ... (x) 1`` with ``A`` in slot ``i``."""
    dims = check_dims(dims)
    A = as_operator(A)
    if not 0 <= i < len(dims):
        raise InvalidInput(f"slot {i} out of range for {len(dims)} factors")
    if A.shape[0] != dims[i]:
        raise InvalidInput(f"operator of dimension {A.shape[0]} cannot sit in slot {i} of dims {dims}")
    left = math.prod(dims[:i])
    right = math.prod(dims[i + 1 :])
    return np.kron(np.kron(np.eye(left), A), np.eye(right))


def kron_sum(U) -> np.ndarray:
    """Kronecker sum ``sum_i embed(U[i], i)``; dims are read off the operators."""
    U = [as_operator(u) for u in U]
    if not U:
        raise InvalidInput("Kronecker sum of an empty list")
    dims = tuple(u.shape[0] for u in U)
    return sum(embed(u, i, dims) for i, u in enumerate(U))


def kron_sum_diagonal(vectors) -> np.ndarray:
    """Kronecker sum of diagonal operators, returned as the N-way array of its diagonal."""
    vectors = [np.asarray(v) for v in vectors]
    n = len(vectors)
    out = np.zeros(tuple(len(v) for v in vectors), dtype=np.result_type(*vectors))
    for i, v in enumerate(vectors):
        shape = [1] * n
        shape[i] = len(v)
        out = out + v.reshape(shape)
    return out


# --- permutations and (anti)symmetric subspaces ---------------------------------


def _equal_dims(dims) -> tuple[int, int]:
    dims = check_dims(dims)
    if len(set(dims)) != 1:
        raise InvalidInput(f"permutations need equal factor dimensions, got {dims}")
    return dims[0], len(dims)


def permutation_operator(perm, d: int) -> np.ndarray:
    """Unitary sending ``v_0 (x) ... (x) v_{N-1}`` to ``v_{perm[0]} (x) ... (x) v_{perm[N-1]}``."""
    n = len(perm)
    total = d**n
    eye = np.eye(total).reshape((d,) * n + (total,))
    return np.transpose(eye, tuple(perm) + (n,)).reshape(total, total)


def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def symmetrizer(d: int, N: int, sign: int) -> np.ndarray:
    """Brute-force projector ``(1/N!) sum_sigma sgn(sigma)^k P_sigma`` on ``(C^d)^{(x)N}``."""
    sign = _parse_sign(sign)
    out = np.zeros((d**N, d**N), dtype=complex)
    for perm in itertools.permutations(range(N)):
        weight = 1 if sign > 0 else permutation_sign(perm)
        out += weight * permutation_operator(perm, d)
    return out / math.factorial(N)


def symmetrize_operator(M, d: int, N: int) -> np.ndarray:
    """Average ``P_sigma M P_sigma^dagger`` over all permutations of the N factors."""
    M = as_operator(M)
    out = np.zeros_like(M)
    for perm in itertools.permutations(range(N)):
        P = permutation_operator(perm, d)
        out += P @ M @ P.conj().T
    return hermitian_part(out / math.factorial(N))


def permute_conjugate(A, i: int, dims, inverse: bool = False) -> np.ndarray:
    """Move tensor factor ``i`` to the last slot (or back, with ``inverse=True``).

    On product operators ``A_0 (x) ... (x) A_{N-1}`` this yields
    ``A_0 (x) .. A_{i-1} (x) A_{i+1} (x) ... (x) A_{N-1} (x) A_i``.
    """
    d, n = _equal_dims(dims)
    A = as_operator(A)
    if A.shape[0] != d**n:
        raise InvalidInput(f"operator dimension {A.shape[0]} does not match dims {tuple(dims)}")
    if not 0 <= i < n:
        raise InvalidInput(f"slot {i} out of range for {n} factors")
    T = A.reshape((d,) * (2 * n))
    src, dst = (i, n + i), (n - 1, 2 * n - 1)
    if inverse:
        src, dst = dst, src
    return np.moveaxis(T, src, dst).reshape(d**n, d**n)


def _parse_sign(sign) -> int:
    if sign in (1, "+", "boson", "bosonic"):
        return 1
    if sign in (-1, "-", "fermion", "fermionic"):
        return -1
    raise InvalidInput(f"sign must be '+' or '-', got {sign!r}")


@dataclass(frozen=True)
class SubspaceIsometry:
    """Orthonormal basis of the symmetric (+) or antisymmetric (-) subspace.

    ``columns`` has shape ``(full_dim, sub_dim)``. ``labels[k]`` is the
    nondecreasing (bosons) or strictly increasing (fermions) tuple of one-particle
    indices defining basis vector ``k``.
    """

    d: int
    N: int
    sign: int
    columns: np.ndarray
    labels: tuple

    @property
    def full_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def sub_dim(self) -> int:
        return self.columns.shape[1]

    def compress(self, A) -> np.ndarray:
        """``Q^dagger A Q``."""
        return hermitian_part(self.columns.conj().T @ A @ self.columns)

    def expand(self, A) -> np.ndarray:
        """``Q A Q^dagger``."""
        return self.columns @ A @ self.columns.conj().T

    def projector(self) -> np.ndarray:
        return self.expand(np.eye(self.sub_dim))


def _occupation_key(labels, d):
    counts = [0] * d
    for k in labels:
        counts[k] += 1
    return tuple(counts)


def sym_isometry(d: int, N: int, sign) -> SubspaceIsometry:
    """Isometry onto the bosonic (``sign='+'``) or fermionic (``sign='-'``) N-particle space.

    Bosonic basis vectors are ordered lexicographically by occupation tuple;
    fermionic ones (Slater determinants) by their increasing index tuple.
    """
    sign = _parse_sign(sign)
    d, N = int(d), int(N)
    if d < 1 or N < 1:
        raise InvalidInput(f"need d >= 1 and N >= 1, got d={d}, N={N}")
    if sign < 0 and d < N:
        raise EmptySubspace(f"antisymmetric space of {N} particles in dimension {d} is {{0}}")
    if sign > 0:
        labels = sorted(
            itertools.combinations_with_replacement(range(d), N),
            key=lambda t: _occupation_key(t, d),
        )
    else:
        labels = list(itertools.combinations(range(d), N))
    strides = [d ** (N - 1 - k) for k in range(N)]
    Q = np.zeros((d**N, len(labels)), dtype=complex)
    for col, label in enumerate(labels):
        if sign > 0:
            orderings = set(itertools.permutations(label))
            for idx in orderings:
                Q[sum(s * k for s, k in zip(strides, idx)), col] = 1.0
            Q[:, col] /= math.sqrt(len(orderings))
        else:
            for perm in itertools.permutations(range(N)):
                idx = [label[p] for p in perm]
                Q[sum(s * k for s, k in zip(strides, idx)), col] = permutation_sign(perm)
            Q[:, col] /= math.sqrt(math.factorial(N))
    return SubspaceIsometry(d=d, N=N, sign=sign, columns=Q, labels=tuple(labels))


def subspace_dim(d: int, N: int, sign) -> int:
    if _parse_sign(sign) > 0:
        return math.comb(d + N - 1, N)
    return math.comb(d, N)
