"""JSON problem files (``schema_version`` 1) and their canonical serialisation.

Complex matrices are nested row-major lists whose entries are ``[re, im]``
pairs; plain numbers are accepted on input as real entries. Classical costs
are nested real lists of the cost tensor's shape.

Layout by ``kind``:

* ``classical``: ``cost``, ``marginals`` (vectors), optional ``refs`` (vectors).
* ``quantum``: ``hamiltonian``, ``marginals`` (matrices), optional ``refs`` (matrices).
* ``bosonic`` / ``fermionic``: ``hamiltonian`` on ``(C^d)^N`` with ``dims = [d] * N``
  and a single matrix in ``marginals``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput

SCHEMA_VERSION = 1
KINDS = ("classical", "quantum", "bosonic", "fermionic")
SOLVER_KEYS = ("tol", "max_iter", "inner_tol", "inner_max", "seed")


class ProblemFileError(InvalidInput):
    """Schema violation; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def encode_matrix(A) -> list:
    A = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def decode_matrix(obj, name: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ProblemFileError(name, "expected a non-empty list of rows")
    n = len(obj)
    if dim is not None and n != dim:
        raise ProblemFileError(name, f"expected {dim} rows, got {n}")
    out = np.zeros((n, n), dtype=complex)
    for r, row in enumerate(obj):
        if len(row) != n:
            raise ProblemFileError(f"{name}[{r}]", f"expected {n} entries, got {len(row)}")
        for k, z in enumerate(row):
            out[r, k] = _decode_scalar(z, f"{name}[{r}][{k}]")
    return out


def _decode_scalar(z, name: str) -> complex:
    if isinstance(z, bool):
        raise ProblemFileError(name, "expected a number or an [re, im] pair")
    if isinstance(z, (int, float)):
        value = complex(z)
    elif isinstance(z, list) and len(z) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in z
    ):
        value = complex(z[0], z[1])
    else:
        raise ProblemFileError(name, "expected a number or an [re, im] pair")
    if not np.isfinite(value):
        raise ProblemFileError(name, "non-finite entry")
    return value


def decode_vector(obj, name: str, length: int | None = None) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ProblemFileError(name, "expected a non-empty list of numbers")
    if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in obj):
        raise ProblemFileError(name, "expected real numbers")
    v = np.asarray(obj, dtype=float)
    if length is not None and v.size != length:
        raise ProblemFileError(name, f"expected length {length}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ProblemFileError(name, "non-finite entry")
    return v


def decode_tensor(obj, name: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFileError(name, "expected a nested list of real numbers") from None
    if arr.shape != shape:
        raise ProblemFileError(name, f"expected shape {list(shape)}, got {list(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise ProblemFileError(name, "non-finite entry")
    return arr


@dataclass
class ProblemFile:
    kind: str
    epsilon: float | None
    dims: list[int]
    marginals: list[np.ndarray]
    cost: np.ndarray | None = None
    hamiltonian: np.ndarray | None = None
    refs: list[np.ndarray] | None = None
    solver: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.dims)


def parse_problem(data, require_operator: bool = True) -> ProblemFile:
    """Validate a decoded JSON document. ``require_operator=False`` skips cost/hamiltonian/epsilon."""
    if not isinstance(data, dict):
        raise ProblemFileError("<root>", "expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProblemFileError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ProblemFileError("kind", f"expected one of {list(KINDS)}, got {kind!r}")
    dims = data.get("dims")
    if (
        not isinstance(dims, list)
        or not dims
        or any(isinstance(d, bool) or not isinstance(d, int) or d < 1 for d in dims)
    ):
        raise ProblemFileError("dims", "expected a non-empty list of positive integers")
    epsilon = data.get("epsilon")
    if require_operator or epsilon is not None:
        if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)) or not epsilon > 0:
            raise ProblemFileError("epsilon", f"expected a positive number, got {epsilon!r}")
        epsilon = float(epsilon)
    marginals = data.get("marginals")
    if not isinstance(marginals, list):
        raise ProblemFileError("marginals", "expected a list")
    refs = data.get("refs")
    if refs is not None and not isinstance(refs, list):
        raise ProblemFileError("refs", "expected a list")
    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ProblemFileError("solver", "expected an object")
    for key, value in solver.items():
        if key not in SOLVER_KEYS:
            raise ProblemFileError(f"solver.{key}", f"unknown option; allowed: {list(SOLVER_KEYS)}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProblemFileError(f"solver.{key}", "expected a number")
        if key in ("max_iter", "inner_max", "seed") and not isinstance(value, int):
            raise ProblemFileError(f"solver.{key}", "expected an integer")
        if key != "seed" and not value > 0:
            raise ProblemFileError(f"solver.{key}", "expected a positive value")

    pf = ProblemFile(kind=kind, epsilon=epsilon, dims=list(dims), marginals=[], solver=dict(solver))
    if kind == "classical":
        if len(marginals) != len(dims):
            raise ProblemFileError("marginals", f"expected {len(dims)} vectors, got {len(marginals)}")
        pf.marginals = [decode_vector(m, f"marginals[{i}]", d) for i, (m, d) in enumerate(zip(marginals, dims))]
        if require_operator:
            if "cost" not in data:
                raise ProblemFileError("cost", "required for kind 'classical'")
            pf.cost = decode_tensor(data["cost"], "cost", tuple(dims))
        if refs is not None:
            if len(refs) != len(dims):
                raise ProblemFileError("refs", f"expected {len(dims)} vectors, got {len(refs)}")
            pf.refs = [decode_vector(r, f"refs[{i}]", d) for i, (r, d) in enumerate(zip(refs, dims))]
        return pf

    if kind in ("bosonic", "fermionic"):
        if len(set(dims)) != 1:
            raise ProblemFileError("dims", "symmetric problems need equal one-particle dimensions")
        if len(marginals) != 1:
            raise ProblemFileError("marginals", "symmetric problems take exactly one one-body marginal")
        if refs is not None:
            raise ProblemFileError("refs", "not supported for symmetric problems")
        pf.marginals = [decode_matrix(marginals[0], "marginals[0]", dims[0])]
    else:
        if len(marginals) != len(dims):
            raise ProblemFileError("marginals", f"expected {len(dims)} matrices, got {len(marginals)}")
        pf.marginals = [decode_matrix(m, f"marginals[{i}]", d) for i, (m, d) in enumerate(zip(marginals, dims))]
        if refs is not None:
            if len(refs) != len(dims):
                raise ProblemFileError("refs", f"expected {len(dims)} matrices, got {len(refs)}")
            pf.refs = [decode_matrix(r, f"refs[{i}]", d) for i, (r, d) in enumerate(zip(refs, dims))]
    if require_operator:
        if "hamiltonian" not in data:
            raise ProblemFileError("hamiltonian", f"required for kind {kind!r}")
        pf.hamiltonian = decode_matrix(data["hamiltonian"], "hamiltonian", math.prod(dims))
    return pf


def problem_to_dict(pf: ProblemFile) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "kind": pf.kind}
    if pf.epsilon is not None:
        out["epsilon"] = pf.epsilon
    out["dims"] = list(pf.dims)
    if pf.kind == "classical":
        if pf.cost is not None:
            out["cost"] = pf.cost.tolist()
        out["marginals"] = [m.tolist() for m in pf.marginals]
        if pf.refs is not None:
            out["refs"] = [r.tolist() for r in pf.refs]
    else:
        if pf.hamiltonian is not None:
            out["hamiltonian"] = encode_matrix(pf.hamiltonian)
        out["marginals"] = [encode_matrix(m) for m in pf.marginals]
        if pf.refs is not None:
            out["refs"] = [encode_matrix(r) for r in pf.refs]
    if pf.solver:
        out["solver"] = dict(pf.solver)
    return out


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None


def load_problem(path, require_operator: bool = True) -> ProblemFile:
    return parse_problem(read_json(path), require_operator=require_operator)


def save_problem(pf: ProblemFile, path) -> None:
    Path(path).write_text(dumps(problem_to_dict(pf)))
