"""Branch vectors and generalized records for pure-state models.

For a pure initial state the chain product of each history applied to the
state vector gives a branch vector whose squared norm is the history's
forwards probability.  Strong decoherence of the set is the same thing as
pairwise orthogonality of these branches, and exactly then one can build a
family of later-time projectors perfectly correlated with the histories: the
records constructed here are the rank-one projectors onto the unitarily
evolved, normalized branches.

Mixed initial states are refused rather than approximated; the imperfect-
records generalization is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .exceptions import ConditionNotSatisfiedError, MixedStateError
from .histories import (
    DecoherenceReport,
    TolerancePolicy,
    _single_chain,
    check_decoherence,
)
from .model import ProjectorFamily, QuantumModel, StateOperator, TimeGrid

__all__ = [
    "BranchVector",
    "OrthogonalityEquivalenceReport",
    "RecordSet",
    "branch_vectors",
    "construct_records",
    "strong_decoherence_iff_orthogonality",
]

ZERO_BRANCH_NORM = 1e-14  # branches with smaller norm get null records


@dataclass
class BranchVector:
    """Unnormalized chain image of the initial state for one history."""

    history: tuple
    vector: np.ndarray

    def norm_squared(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)


def _require_pure(model: QuantumModel, psi) -> np.ndarray:
    psi = linalg.as_vector(psi, "psi")
    if abs(float(np.linalg.norm(psi)) - 1.0) > 1e-10:
        raise ValueError("psi must be normalized")
    if not model.initial_state.is_pure():
        raise MixedStateError(
            f"model state has purity {model.initial_state.purity():.6f}; records need a pure state"
        )
    defect = linalg.max_abs(model.initial_state.rho - np.outer(psi, psi.conj()))
    if defect > 1e-10:
        raise ValueError(f"psi does not match the model's initial state (defect {defect:.3e})")
    return psi


def branch_vectors(model: QuantumModel, psi) -> list[BranchVector]:
    """Chain products applied to the pure initial state, one per history.

    The squared norms are the forwards candidate probabilities and sum to 1.
    """
    psi = _require_pure(model, psi)
    return [
        BranchVector(h, _single_chain(model, h) @ psi)
        for h in model.history_labels()
    ]


@dataclass
class OrthogonalityEquivalenceReport:
    """Branch orthogonality vs strong decoherence, at every truncation depth.

    ``per_depth`` holds, for each k = 1..n, the largest off-diagonal branch
    overlap of the first-k-family set, whether the strong decoherence check
    passes there, and whether the two verdicts agree.
    """

    agrees: bool
    per_depth: list[tuple[int, float, bool, bool]]
    gram: np.ndarray  # full-depth Gram matrix of the branches
    full_report: DecoherenceReport


def _truncated_model(model: QuantumModel, depth: int) -> QuantumModel:
    return QuantumModel(model.initial_state, model.grid, model.families[:depth],
                        model.conjugation_basis, model.factors)


def strong_decoherence_iff_orthogonality(
        model: QuantumModel, psi,
        tolerance: TolerancePolicy | None = None) -> OrthogonalityEquivalenceReport:
    """Check that branch orthogonality and strong decoherence agree.

    Both sides are evaluated at every truncation depth k <= n, the strongest
    finite version of the equivalence.
    """
    psi = _require_pure(model, psi)
    tolerance = tolerance or TolerancePolicy()
    per_depth = []
    agrees = True
    for depth in range(1, model.n_families + 1):
        sub = _truncated_model(model, depth)
        branches = branch_vectors(sub, psi)
        norms = [b.norm_squared() for b in branches]
        max_overlap = 0.0
        orthogonal = True
        for i in range(len(branches)):
            for j in range(i + 1, len(branches)):
                overlap = abs(complex(np.vdot(branches[i].vector, branches[j].vector)))
                max_overlap = max(max_overlap, overlap)
                if overlap > tolerance.pair_threshold(norms[i], norms[j]):
                    orthogonal = False
        strong = check_decoherence(sub, "forwards", "strong", tolerance).decoherent
        per_depth.append((depth, max_overlap, strong, orthogonal == strong))
        agrees &= orthogonal == strong
    full = check_decoherence(model, "forwards", "strong", tolerance)
    branches = branch_vectors(model, psi)
    m = len(branches)
    gram = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            gram[i, j] = np.vdot(branches[i].vector, branches[j].vector)
    return OrthogonalityEquivalenceReport(agrees, per_depth, gram, full)


@dataclass
class RecordSet:
    """Orthogonal record projections at a late time, one per nonzero branch.

    ``projections`` maps each history to its record projector (the zero
    matrix for null branches); ``residual`` completes the family to the
    identity.  ``correlation[i, j]`` is the weight branch j deposits on record
    i: diagonal equals the probability table, off-diagonals vanish.
    """

    time_index: int
    time: float
    histories: list[tuple]
    projections: dict
    residual: np.ndarray
    probabilities: dict
    correlation: np.ndarray
    extension_report: DecoherenceReport


def construct_records(model: QuantumModel, psi, time_index: int | None = None,
                      tolerance: TolerancePolicy | None = None) -> RecordSet:
    """Build record projectors at grid time ``time_index`` (default: last).

    Requires strong forwards decoherence; each branch vector is evolved to the
    record time, normalized, and turned into a rank-one projector.  The
    record family is verified to be perfectly correlated with the histories
    and to extend the history set without breaking strong decoherence.
    """
    psi = _require_pure(model, psi)
    tolerance = tolerance or TolerancePolicy()
    if time_index is None:
        time_index = model.grid.n_times - 1
    if not 0 <= time_index < model.grid.n_times:
        raise IndexError(f"record time index {time_index} outside the grid")
    if model.families and time_index < model.families[-1].time_index:
        raise ValueError(
            f"record time index {time_index} precedes the last family "
            f"(index {model.families[-1].time_index})"
        )
    base = check_decoherence(model, "forwards", "strong", tolerance)
    if not base.decoherent:
        raise ConditionNotSatisfiedError(
            f"strong forwards decoherence does not hold (classification: {base.classification}); "
            "records exist only for strongly decoherent sets"
        )
    branches = branch_vectors(model, psi)
    w = model.grid.cumulative(time_index)
    evolved = [w @ b.vector for b in branches]
    probabilities = {b.history: b.norm_squared() for b in branches}
    projections = {}
    units = []
    for b, v in zip(branches, evolved):
        nrm = float(np.linalg.norm(v))
        if nrm > ZERO_BRANCH_NORM:
            u = v / nrm
            projections[b.history] = np.outer(u, u.conj())
            units.append(u)
        else:
            projections[b.history] = np.zeros((model.dim, model.dim), dtype=complex)
            units.append(None)
    # Perfect correlation: branch j lands entirely on its own record.
    m = len(branches)
    correlation = np.zeros((m, m))
    for i in range(m):
        if units[i] is None:
            continue
        for j in range(m):
            correlation[i, j] = abs(complex(np.vdot(units[i], evolved[j]))) ** 2
    for i, b in enumerate(branches):
        if abs(correlation[i, i] - probabilities[b.history]) > 1e-9:
            raise ConditionNotSatisfiedError(
                f"record correlation diagonal {correlation[i, i]!r} deviates from "
                f"probability {probabilities[b.history]!r}"
            )
    off = correlation - np.diag(np.diag(correlation))
    if linalg.max_abs(off) > 1e-9:
        raise ConditionNotSatisfiedError(
            f"record correlation has off-diagonal weight {linalg.max_abs(off):.3e}"
        )
    residual = np.eye(model.dim, dtype=complex) - sum(projections.values())
    extension_report = _extension_check(model, time_index, branches, projections,
                                        residual, tolerance)
    return RecordSet(
        time_index=int(time_index),
        time=float(model.grid.times[time_index]),
        histories=[b.history for b in branches],
        projections=projections,
        residual=residual,
        probabilities=probabilities,
        correlation=correlation,
        extension_report=extension_report,
    )


def _extension_check(model, time_index, branches, projections, residual,
                     tolerance) -> DecoherenceReport:
    """Append the record family and re-run the strong forwards check.

    The records are hosted on a truncated grid padded with identity steps so
    the family sits at an interior time regardless of where ``time_index``
    falls; the padding does not change any functional value.
    """
    times = list(model.grid.times[: time_index + 1])
    steps = list(model.grid.step_unitaries[:time_index])
    gap = times[-1] - times[-2] if len(times) >= 2 else 1.0
    eye = np.eye(model.dim, dtype=complex)
    times += [times[-1] + gap, times[-1] + 2 * gap]
    steps += [eye, eye]
    members = [
        ("rec:" + ",".join(b.history), projections[b.history])
        for b in branches
        if linalg.max_abs(projections[b.history]) > 0
    ]
    if linalg.max_abs(residual) > 1e-12:
        members.append(("rec:none", residual))
    record_family = ProjectorFamily(time_index + 1, members)
    extended = QuantumModel(
        model.initial_state,
        TimeGrid(times, steps),
        list(model.families) + [record_family],
        model.conjugation_basis,
        model.factors,
    )
    report = check_decoherence(extended, "forwards", "strong", tolerance)
    if not report.decoherent:
        raise ConditionNotSatisfiedError(
            "record family fails to extend the history set consistently "
            f"(classification: {report.classification})"
        )
    return report
