import json

import numpy as np
import pytest

from eot.files import (
    ProblemFile,
    ProblemFileError,
    decode_matrix,
    dumps,
    encode_matrix,
    load_problem,
    parse_problem,
    problem_to_dict,
    save_problem,
)
from instances import random_density

PROBLEMS = [
    "classical_2x2",
    "classical_pruned",
    "quantum_2x3",
    "fermionic_strict",
    "fermionic_pure",
    "bosonic_2",
]
PAULI_ONLY = ["pauli_strict", "pauli_boundary", "pauli_violates"]


def base_classical():
    return {
        "schema_version": 1,
        "kind": "classical",
        "epsilon": 1.0,
        "dims": [2, 2],
        "cost": [[0, 1], [1, 0]],
        "marginals": [[0.5, 0.5], [0.5, 0.5]],
    }


def base_quantum():
    return {
        "schema_version": 1,
        "kind": "quantum",
        "epsilon": 0.5,
        "dims": [2, 2],
        "hamiltonian": np.eye(4).tolist(),
        "marginals": [encode_matrix(np.eye(2) / 2)] * 2,
    }


class TestRoundTrip:
    @pytest.mark.parametrize("name", PROBLEMS)
    def test_byte_stable(self, data_dir, name):
        path = data_dir / f"{name}.json"
        text = path.read_text()
        assert dumps(problem_to_dict(load_problem(path))) == text

    @pytest.mark.parametrize("name", PAULI_ONLY)
    def test_byte_stable_without_operator(self, data_dir, name):
        path = data_dir / f"{name}.json"
        assert dumps(problem_to_dict(load_problem(path, require_operator=False))) == path.read_text()

    @pytest.mark.parametrize("name", PROBLEMS)
    def test_parse_serialise_parse(self, data_dir, name):
        first = load_problem(data_dir / f"{name}.json")
        second = parse_problem(json.loads(dumps(problem_to_dict(first))))
        assert first.kind == second.kind and first.dims == second.dims
        assert first.epsilon == second.epsilon and first.solver == second.solver
        for a, b in zip(first.marginals, second.marginals):
            assert np.array_equal(a, b)
        for a, b in [(first.cost, second.cost), (first.hamiltonian, second.hamiltonian)]:
            assert (a is None and b is None) or np.array_equal(a, b)

    def test_save_and_load(self, tmp_path, rng):
        G = random_density(rng, 3)
        pf = ProblemFile("quantum", 0.3, [3], [G], hamiltonian=np.diag([1.0, 2.0, 3.0]), refs=[np.eye(3)])
        save_problem(pf, tmp_path / "p.json")
        back = load_problem(tmp_path / "p.json")
        assert np.array_equal(back.marginals[0], G)
        assert np.array_equal(back.refs[0], np.eye(3))

    def test_complex_pairs(self, rng):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        enc = encode_matrix(A)
        assert enc[0][1] == [A[0, 1].real, A[0, 1].imag]
        assert np.array_equal(decode_matrix(enc, "m"), A)

    def test_plain_numbers_are_real(self):
        assert np.array_equal(decode_matrix([[1, 2], [3, 4]], "m"), np.array([[1, 2], [3, 4]], dtype=complex))


class TestValidation:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("schema_version", 2),
            ("kind", "continuous"),
            ("dims", [2, -2]),
            ("dims", "2x2"),
            ("epsilon", 0),
            ("epsilon", True),
            ("marginals", {"a": 1}),
            ("cost", [[0, 1]]),
            ("refs", 3),
            ("solver", []),
        ],
    )
    def test_field_named(self, field, value):
        data = base_classical()
        data[field] = value
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == field
        assert field in str(info.value)

    def test_missing_cost(self):
        data = base_classical()
        del data["cost"]
        with pytest.raises(ProblemFileError, match="cost"):
            parse_problem(data)

    def test_marginal_length(self):
        data = base_classical()
        data["marginals"][1] = [0.2, 0.3, 0.5]
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == "marginals[1]"

    def test_matrix_entry_named(self):
        data = base_quantum()
        data["marginals"][1] = [[[0.5, 0], "x"], [0, 0.5]]
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == "marginals[1][0][1]"

    def test_hamiltonian_dimension(self):
        data = base_quantum()
        data["hamiltonian"] = np.eye(3).tolist()
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == "hamiltonian"

    def test_symmetric_needs_one_marginal(self):
        data = base_quantum()
        data["kind"] = "fermionic"
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == "marginals"

    def test_symmetric_needs_equal_dims(self):
        data = base_quantum()
        data.update(kind="bosonic", dims=[2, 3], marginals=data["marginals"][:1])
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == "dims"

    @pytest.mark.parametrize("key,value", [("tolerance", 1e-8), ("tol", -1.0), ("max_iter", 2.5), ("tol", "x")])
    def test_solver_options(self, key, value):
        data = base_classical()
        data["solver"] = {key: value}
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.field == f"solver.{key}"

    def test_json_syntax_error_has_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "kind": "classical",\n  "dims": [2,\n}\n')
        with pytest.raises(ProblemFileError) as info:
            load_problem(path)
        assert "line 4" in str(info.value)
