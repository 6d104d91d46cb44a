"""JSON model files: load, validate with positioned errors, and emit.

Complex numbers serialize as two-element arrays [re, im]; matrices as
row-major nested arrays of those pairs.  Top-level keys:

``dim`` or ``factors``
    Hilbert-space dimension, or the tensor-factor dimensions.
``initial_state``
    A vector (list of pairs), a matrix (list of rows), or ``"pure:<k>"`` for
    the k-th computational basis state.
``conjugation_basis``
    Optional unitary matrix; identity when absent.
``grid``
    Strictly increasing list of times.
``steps``
    One entry per interval: ``{"unitary": M}`` or ``{"generator": H}`` (the
    step becomes exp(-i H dt) for the interval length dt).
``families``
    List of ``{"time_index": k, "projectors": [...]}``; each projector is
    ``{"label": s, "matrix": M}`` or ``{"label": s, "basis_indices": [...]}``.
``rho_final``
    Optional Hermitian PSD matrix for two-state commands.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import linalg
from .exceptions import ModelFileError, ModelValidationError
from .model import ProjectorFamily, QuantumModel, StateOperator, TimeGrid

__all__ = ["dump_model", "load_model", "model_from_dict", "model_to_dict"]


def _complex_to_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _matrix_to_json(m: np.ndarray) -> list:
    return [[_complex_to_pair(z) for z in row] for row in np.asarray(m, dtype=complex)]


def _vector_to_json(v: np.ndarray) -> list:
    return [_complex_to_pair(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def _pair(value, where: str) -> complex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(x, (int, float)) for x in value)):
        raise ModelFileError(f"{where}: expected a [re, im] pair, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def _vector(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ModelFileError(f"{where}: expected a non-empty list of [re, im] pairs")
    return np.array([_pair(x, f"{where}[{i}]") for i, x in enumerate(value)], dtype=complex)


def _matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ModelFileError(f"{where}: expected a nested list (matrix of [re, im] pairs)")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(value)]
    width = rows[0].size
    if any(r.size != width for r in rows):
        raise ModelFileError(f"{where}: ragged rows")
    return np.vstack(rows)


def _looks_like_matrix(value) -> bool:
    return (isinstance(value, list) and value and isinstance(value[0], list)
            and value[0] and isinstance(value[0][0], list))


def _initial_state(value, dim: int, where: str) -> StateOperator:
    if isinstance(value, str):
        if not value.startswith("pure:"):
            raise ModelFileError(f"{where}: named states must look like 'pure:<index>', got {value!r}")
        try:
            k = int(value.split(":", 1)[1])
        except ValueError:
            raise ModelFileError(f"{where}: bad basis index in {value!r}") from None
        if not 0 <= k < dim:
            raise ModelFileError(f"{where}: basis index {k} outside dimension {dim}")
        psi = np.zeros(dim, dtype=complex)
        psi[k] = 1.0
        return StateOperator.from_vector(psi)
    if _looks_like_matrix(value):
        return StateOperator(_matrix(value, where))
    return StateOperator.from_vector(_vector(value, where))


def model_from_dict(data: dict) -> tuple[QuantumModel, np.ndarray | None]:
    """Build a model (and the optional final operator) from parsed JSON.

    Every structural problem raises :class:`ModelFileError` carrying the key
    path; invariant violations from the model layer pass through as
    :class:`ModelValidationError`.
    """
    if not isinstance(data, dict):
        raise ModelFileError(f"top level: expected an object, got {type(data).__name__}")
    factors = None
    if "factors" in data:
        if not (isinstance(data["factors"], list)
                and all(isinstance(d, int) and d > 0 for d in data["factors"])):
            raise ModelFileError("factors: expected a list of positive integers")
        factors = tuple(data["factors"])
        dim = int(np.prod(factors))
        if "dim" in data and int(data["dim"]) != dim:
            raise ModelFileError(f"dim: {data['dim']} contradicts factors {factors}")
    elif "dim" in data:
        if not (isinstance(data["dim"], int) and data["dim"] > 0):
            raise ModelFileError("dim: expected a positive integer")
        dim = int(data["dim"])
    else:
        raise ModelFileError("top level: needs 'dim' or 'factors'")
    for key in ("initial_state", "grid", "steps", "families"):
        if key not in data:
            raise ModelFileError(f"top level: missing required key {key!r}")
    times = data["grid"]
    if not (isinstance(times, list) and len(times) >= 2
            and all(isinstance(t, (int, float)) for t in times)):
        raise ModelFileError("grid: expected a list of at least two numbers")
    if not isinstance(data["steps"], list) or len(data["steps"]) != len(times) - 1:
        raise ModelFileError(
            f"steps: expected {len(times) - 1} entries for {len(times)} grid times"
        )
    steps = []
    for i, entry in enumerate(data["steps"]):
        where = f"steps[{i}]"
        if not isinstance(entry, dict) or len(entry) != 1:
            raise ModelFileError(f"{where}: expected exactly one of 'unitary' or 'generator'")
        if "unitary" in entry:
            steps.append(_matrix(entry["unitary"], f"{where}.unitary"))
        elif "generator" in entry:
            h = _matrix(entry["generator"], f"{where}.generator")
            try:
                steps.append(linalg.exp_generator(h, float(times[i + 1]) - float(times[i])))
            except ValueError as exc:
                raise ModelFileError(f"{where}.generator: {exc}") from None
        else:
            raise ModelFileError(f"{where}: expected 'unitary' or 'generator'")
    grid = TimeGrid(times, steps)
    if not isinstance(data["families"], list):
        raise ModelFileError("families: expected a list")
    families = []
    for i, entry in enumerate(data["families"]):
        where = f"families[{i}]"
        if not isinstance(entry, dict) or "time_index" not in entry or "projectors" not in entry:
            raise ModelFileError(f"{where}: expected 'time_index' and 'projectors'")
        if not isinstance(entry["time_index"], int):
            raise ModelFileError(f"{where}.time_index: expected an integer")
        members = []
        for j, proj in enumerate(entry["projectors"]):
            pwhere = f"{where}.projectors[{j}]"
            if not isinstance(proj, dict) or "label" not in proj:
                raise ModelFileError(f"{pwhere}: expected an object with a 'label'")
            label = str(proj["label"])
            if "matrix" in proj:
                members.append((label, _matrix(proj["matrix"], f"{pwhere}.matrix")))
            elif "basis_indices" in proj:
                idx = proj["basis_indices"]
                if not (isinstance(idx, list) and all(isinstance(k, int) for k in idx)):
                    raise ModelFileError(f"{pwhere}.basis_indices: expected a list of integers")
                if any(not 0 <= k < dim for k in idx):
                    raise ModelFileError(f"{pwhere}.basis_indices: index outside dimension {dim}")
                p = np.zeros((dim, dim), dtype=complex)
                for k in idx:
                    p[k, k] = 1.0
                members.append((label, p))
            else:
                raise ModelFileError(f"{pwhere}: expected 'matrix' or 'basis_indices'")
        families.append(ProjectorFamily(entry["time_index"], members))
    conj = None
    if "conjugation_basis" in data:
        conj = _matrix(data["conjugation_basis"], "conjugation_basis")
    state = _initial_state(data["initial_state"], dim, "initial_state")
    model = QuantumModel(state, grid, families, conj, factors)
    rho_final = None
    if "rho_final" in data:
        rho_final = _matrix(data["rho_final"], "rho_final")
    return model, rho_final


def model_to_dict(model: QuantumModel, rho_final: np.ndarray | None = None) -> dict:
    """Serialize a model to the JSON structure ``model_from_dict`` reads."""
    data: dict = {}
    if model.factors is not None:
        data["factors"] = list(model.factors)
    else:
        data["dim"] = model.dim
    if model.initial_state.vector is not None:
        data["initial_state"] = _vector_to_json(model.initial_state.vector)
    else:
        data["initial_state"] = _matrix_to_json(model.initial_state.rho)
    if linalg.max_abs(model.conjugation_basis - np.eye(model.dim)) > 0:
        data["conjugation_basis"] = _matrix_to_json(model.conjugation_basis)
    data["grid"] = [float(t) for t in model.grid.times]
    data["steps"] = [{"unitary": _matrix_to_json(u)} for u in model.grid.step_unitaries]
    data["families"] = [
        {
            "time_index": fam.time_index,
            "projectors": [
                {"label": label, "matrix": _matrix_to_json(p)}
                for label, p in zip(fam.labels, fam.projectors)
            ],
        }
        for fam in model.families
    ]
    if rho_final is not None:
        data["rho_final"] = _matrix_to_json(rho_final)
    return data


def load_model(path) -> tuple[QuantumModel, np.ndarray | None]:
    """Read and validate a model file; errors carry file position or key path."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return model_from_dict(data)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    except ModelValidationError as exc:
        raise ModelValidationError(f"{path}: {exc}") from None


def dump_model(model: QuantumModel, path, rho_final: np.ndarray | None = None) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model, rho_final), indent=2) + "\n", encoding="utf-8"
    )
