"""History sets, decoherence functionals, probabilities and classification.

A history picks one member from each projector family; the chain operator of
a history is the ordered product of the family projectors conjugated back to
the initial time (latest time leftmost).  Writing ``L_h`` for that chain and
``rho`` for the initial state, the three functionals computed here are

* forwards:   D(h, h') = Tr(L_h rho L_h'^dagger)
* backwards:  D(h, h') = Tr(L_h^dagger rho L_h')
* two-state:  D(h, h') = Tr(rho_f L_h rho_i L_h'^dagger)

Diagonals are the candidate probabilities; a set is weakly decoherent when
the real parts of all off-diagonal entries vanish and strongly (also called
"medium") decoherent when their moduli do.  Off-diagonal entries are compared
against max(abs_floor, rel * sqrt(p_h p_h')) so zero-probability branches are
judged by the absolute floor.

Evaluation factorizes the state through its spectral columns: with
rho = C C^dagger, D(h, h') is the Hilbert-Schmidt inner product of L_h C and
L_h' C, so the cost is one chain product per history rather than per pair.
All functions here are pure; histories may be evaluated concurrently and the
reports assemble in a fixed lexicographic order regardless of evaluation
order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import (
    ConditionNotSatisfiedError,
    DegenerateNormalizationError,
    ModelValidationError,
)
from .model import (
    ProjectorFamily,
    QuantumModel,
    StateOperator,
    heisenberg_projector,
    time_reverse_operator,
)

__all__ = [
    "BothConditionsReport",
    "CoarseGrainReport",
    "CoarseGraining",
    "DecoherenceReport",
    "PageReport",
    "PairCheck",
    "TimeReversedSet",
    "TolerancePolicy",
    "TrivialityReport",
    "both_conditions_theorem_check",
    "candidate_probability_backwards",
    "candidate_probability_forwards",
    "check_decoherence",
    "check_two_state_decoherence",
    "coarse_grain_check",
    "decoherence_functional",
    "page_symmetric_cosmology_check",
    "pure_two_state_triviality_check",
    "time_reversed_history_set",
    "two_state_functional",
    "two_state_probability",
    "two_state_probability_table",
]

History = tuple  # tuple of member labels, one per family

PROBABILITY_SLACK = 1e-10  # candidate values may poke this far outside [0, 1]
NORMALIZATION_FLOOR = 1e-14  # below this, Tr(rho_f rho_i) counts as zero
MARGINAL_FACTOR = 1e3  # failed pairs within this factor of threshold are marginal


@dataclass(frozen=True)
class TolerancePolicy:
    """Pair threshold max(abs, rel * sqrt(p_h * p_h')) for off-diagonal checks."""

    rel: float = 1e-9
    abs: float = 1e-12

    def pair_threshold(self, p: float, q: float) -> float:
        return max(self.abs, self.rel * math.sqrt(max(p, 0.0) * max(q, 0.0)))


@dataclass(frozen=True)
class PairCheck:
    """One off-diagonal functional entry measured against its threshold."""

    left: History
    right: History
    value: complex
    measure: float
    threshold: float
    passed: bool
    ratio: float


@dataclass
class DecoherenceReport:
    """Full pair table plus classification for one direction and strength.

    ``probabilities`` is populated only when the set classifies as decoherent;
    for the two-state direction the diagonals are divided by ``normalization``
    (Tr(rho_f rho_i), 1.0 otherwise).
    """

    direction: str
    strength: str
    classification: str  # 'decoherent' | 'marginal' | 'not_decoherent'
    histories: list[History]
    diagonals: dict[History, float]
    pairs: list[PairCheck]
    probabilities: dict[History, float] | None
    tolerance: TolerancePolicy
    normalization: float = 1.0

    @property
    def decoherent(self) -> bool:
        return self.classification == "decoherent"

    def pair_values(self) -> dict[tuple[History, History], complex]:
        return {(p.left, p.right): p.value for p in self.pairs}

    def worst_pairs(self) -> list[PairCheck]:
        return sorted(self.pairs, key=lambda p: (-p.ratio, p.left, p.right))

    def max_offdiagonal(self) -> float:
        return max((p.measure for p in self.pairs), default=0.0)


def _chain_operators(model: QuantumModel) -> tuple[list[History], list[np.ndarray]]:
    """All histories with their chain operators L_h (latest projector leftmost)."""
    heis = [
        [heisenberg_projector(model, k, j) for j in range(len(fam))]
        for k, fam in enumerate(model.families)
    ]
    histories = model.history_labels()
    chains = []
    for idx in itertools.product(*[range(len(f)) for f in model.families]):
        chain = np.eye(model.dim, dtype=complex)
        for k, j in enumerate(idx):
            chain = heis[k][j] @ chain
        chains.append(chain)
    return histories, chains


def _state_columns(state: StateOperator) -> np.ndarray:
    cols = state.eigen_columns()
    if cols.size == 0:
        raise ModelValidationError("state has no support above the eigenvalue cutoff")
    return cols


def _clamp_probability(value: complex, what: str) -> float:
    p = float(np.real(value))
    if abs(np.imag(value)) > 1e-9:
        raise ModelValidationError(f"{what} has imaginary part {np.imag(value):.3e}")
    if p < -PROBABILITY_SLACK or p > 1.0 + PROBABILITY_SLACK:
        raise ModelValidationError(
            f"{what} = {p!r} lies outside [0, 1] beyond tolerance; model invariants are broken"
        )
    return min(max(p, 0.0), 1.0)


def _functional_matrix(model: QuantumModel, direction: str,
                       rho_i: StateOperator | None = None,
                       rho_f: np.ndarray | None = None):
    """Histories and the full matrix D[i, j] = functional(h_i, h_j)."""
    state = rho_i if rho_i is not None else model.initial_state
    histories, chains = _chain_operators(model)
    cols = _state_columns(state)
    if direction == "forwards":
        applied = [c @ cols for c in chains]
        weighted = applied
    elif direction == "backwards":
        applied = [c.conj().T @ cols for c in chains]
        weighted = applied
    elif direction == "two_state":
        applied = [c @ cols for c in chains]
        weighted = [rho_f @ a for a in applied]
    else:
        raise ValueError(f"unknown direction {direction!r}")
    m = len(histories)
    d = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(i, m):
            val = np.vdot(applied[j], weighted[i])
            d[i, j] = val
            d[j, i] = val.conjugate()
    return histories, d


def candidate_probability_forwards(model: QuantumModel, history) -> float:
    """Diagonal of the forwards functional: Tr(L_h rho L_h^dagger), in [0, 1]."""
    chain = _single_chain(model, history)
    cols = _state_columns(model.initial_state)
    applied = chain @ cols
    return _clamp_probability(np.vdot(applied, applied), f"forwards probability of {tuple(history)}")


def candidate_probability_backwards(model: QuantumModel, history) -> float:
    """Diagonal of the backwards functional: Tr(L_h^dagger rho L_h), in [0, 1]."""
    chain = _single_chain(model, history)
    cols = _state_columns(model.initial_state)
    applied = chain.conj().T @ cols
    return _clamp_probability(np.vdot(applied, applied), f"backwards probability of {tuple(history)}")


def _single_chain(model: QuantumModel, history) -> np.ndarray:
    idx = model.history_indices(tuple(history))
    chain = np.eye(model.dim, dtype=complex)
    for k, j in enumerate(idx):
        chain = heisenberg_projector(model, k, j) @ chain
    return chain


def decoherence_functional(model: QuantumModel, h, h_prime, direction: str = "forwards") -> complex:
    """Functional value for one ordered pair of histories.

    The diagonal (h == h') is real and equals the candidate probability for
    the chosen direction.
    """
    if direction not in ("forwards", "backwards"):
        raise ValueError(f"direction must be 'forwards' or 'backwards', got {direction!r}")
    a = _single_chain(model, h)
    b = _single_chain(model, h_prime)
    cols = _state_columns(model.initial_state)
    if direction == "backwards":
        a, b = a.conj().T, b.conj().T
    return complex(np.vdot(b @ cols, a @ cols))


def _classify(histories, d, probabilities_scale, strength, tolerance,
              direction, normalization=1.0) -> DecoherenceReport:
    tolerance = tolerance or TolerancePolicy()
    m = len(histories)
    diag = {h: float(d[i, i].real) for i, h in enumerate(histories)}
    scaled = {h: diag[h] / probabilities_scale for h in histories}
    pairs = []
    all_passed = True
    max_ratio = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            value = complex(d[i, j])
            measure = abs(value.real) if strength == "weak" else abs(value)
            thr = tolerance.pair_threshold(scaled[histories[i]], scaled[histories[j]])
            # thresholds are expressed on the normalized scale
            measure_scaled = measure / probabilities_scale
            passed = measure_scaled <= thr
            ratio = measure_scaled / thr if thr > 0 else float("inf")
            all_passed &= passed
            max_ratio = max(max_ratio, ratio)
            pairs.append(PairCheck(histories[i], histories[j], value,
                                   measure_scaled, thr, passed, ratio))
    if all_passed:
        classification = "decoherent"
    elif max_ratio <= MARGINAL_FACTOR:
        classification = "marginal"
    else:
        classification = "not_decoherent"
    probabilities = None
    if classification == "decoherent":
        probabilities = {
            h: _clamp_probability(scaled[h], f"probability of {h}") for h in histories
        }
    return DecoherenceReport(
        direction=direction,
        strength=strength,
        classification=classification,
        histories=list(histories),
        diagonals=diag,
        pairs=pairs,
        probabilities=probabilities,
        tolerance=tolerance,
        normalization=normalization,
    )


def check_decoherence(model: QuantumModel, direction: str = "forwards",
                      strength: str = "weak",
                      tolerance: TolerancePolicy | None = None) -> DecoherenceReport:
    """Evaluate every off-diagonal pair and classify the history set.

    ``strength='weak'`` tests |Re D| only; ``strength='strong'`` tests |D|.
    A set that fails but stays within MARGINAL_FACTOR of every threshold is
    classified marginal.  Probabilities (the diagonals) are reported only for
    decoherent sets.
    """
    if direction not in ("forwards", "backwards"):
        raise ValueError(f"direction must be 'forwards' or 'backwards', got {direction!r}")
    if strength not in ("weak", "strong"):
        raise ValueError(f"strength must be 'weak' or 'strong', got {strength!r}")
    histories, d = _functional_matrix(model, direction)
    return _classify(histories, d, 1.0, strength, tolerance, direction)


def _coerce_final_operator(rho_f, dim: int) -> np.ndarray:
    """Validate a final operator: Hermitian PSD, any trace (identity allowed)."""
    if isinstance(rho_f, StateOperator):
        return rho_f.rho
    m = linalg.as_matrix(rho_f, "final operator")
    if m.shape != (dim, dim):
        raise ModelValidationError(f"final operator shape {m.shape} does not match dimension {dim}")
    if linalg.max_abs(m - m.conj().T) > 1e-10:
        raise ModelValidationError("final operator must be Hermitian")
    if float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[0]) < -1e-10:
        raise ModelValidationError("final operator must be positive semidefinite")
    return m


def _two_state_normalization(rho_i: StateOperator, rho_f: np.ndarray) -> float:
    n = complex(np.trace(rho_f @ rho_i.rho))
    if abs(n) <= NORMALIZATION_FLOOR:
        raise DegenerateNormalizationError(
            f"Tr(rho_f rho_i) = {n!r} vanishes; two-state probabilities are undefined"
        )
    return float(n.real)


def check_two_state_decoherence(rho_i, rho_f, model: QuantumModel,
                                strength: str = "weak",
                                tolerance: TolerancePolicy | None = None) -> DecoherenceReport:
    """Two-state analog of :func:`check_decoherence`.

    Off-diagonals of Tr(rho_f L_h rho_i L_h'^dagger) are tested; reported
    probabilities are the diagonals divided by Tr(rho_f rho_i).
    """
    if strength not in ("weak", "strong"):
        raise ValueError(f"strength must be 'weak' or 'strong', got {strength!r}")
    if not isinstance(rho_i, StateOperator):
        rho_i = StateOperator(rho_i)
    rho_f = _coerce_final_operator(rho_f, model.dim)
    norm = _two_state_normalization(rho_i, rho_f)
    histories, d = _functional_matrix(model, "two_state", rho_i=rho_i, rho_f=rho_f)
    return _classify(histories, d, norm, strength, tolerance, "two_state", normalization=norm)


def two_state_functional(rho_i, rho_f, model: QuantumModel, h, h_prime) -> complex:
    """Tr(rho_f L_h rho_i L_h'^dagger) for independent initial/final operators.

    ``rho_f`` must be Hermitian positive semidefinite but need not be
    normalized (the identity is a valid choice, reducing the functional to
    the forwards one).  Raises if Tr(rho_f rho_i) vanishes.
    """
    if not isinstance(rho_i, StateOperator):
        rho_i = StateOperator(rho_i)
    rho_f = _coerce_final_operator(rho_f, model.dim)
    _two_state_normalization(rho_i, rho_f)
    a = _single_chain(model, h)
    b = _single_chain(model, h_prime)
    cols = _state_columns(rho_i)
    return complex(np.vdot(b @ cols, rho_f @ (a @ cols)))


def two_state_probability_table(rho_i, rho_f, model: QuantumModel,
                                tolerance: TolerancePolicy | None = None) -> dict[History, float]:
    """Normalized two-state probabilities for every history.

    Requires the two-state decoherence condition to hold for the set; raises
    :class:`ConditionNotSatisfiedError` otherwise.
    """
    report = check_two_state_decoherence(rho_i, rho_f, model, "weak", tolerance)
    if not report.decoherent:
        raise ConditionNotSatisfiedError(
            f"two-state decoherence does not hold (classification: {report.classification})"
        )
    return dict(report.probabilities)


def two_state_probability(rho_i, rho_f, model: QuantumModel, h,
                          tolerance: TolerancePolicy | None = None) -> float:
    """Two-state probability of one history, Tr(rho_f L_h rho_i L_h^dagger) / Tr(rho_f rho_i)."""
    table = two_state_probability_table(rho_i, rho_f, model, tolerance)
    return table[tuple(h)]


@dataclass
class CoarseGraining:
    """Per-family partition of member labels into labeled blocks.

    ``blocks`` holds one mapping per family, block label -> member labels.
    Blocks must be disjoint and cover every member of their family.
    """

    blocks: tuple[dict, ...]

    @classmethod
    def singletons(cls, model: QuantumModel) -> "CoarseGraining":
        return cls(tuple({lab: (lab,) for lab in fam.labels} for fam in model.families))

    def validate(self, model: QuantumModel) -> None:
        if len(self.blocks) != model.n_families:
            raise ValueError(
                f"graining has {len(self.blocks)} family entries, model has {model.n_families}"
            )
        for fam, mapping in zip(model.families, self.blocks):
            members = [str(m) for block in mapping.values() for m in block]
            if sorted(members) != sorted(fam.labels):
                raise ValueError(
                    f"blocks {mapping!r} do not partition family labels {fam.labels}"
                )

    def coarse_model(self, model: QuantumModel) -> QuantumModel:
        families = []
        for fam, mapping in zip(model.families, self.blocks):
            members = [
                (block_label, sum(fam.member(m) for m in block))
                for block_label, block in mapping.items()
            ]
            families.append(ProjectorFamily(fam.time_index, members))
        return QuantumModel(model.initial_state, model.grid, families,
                            model.conjugation_basis, model.factors)

    def fine_histories_of(self, coarse_history) -> list[History]:
        pools = [
            tuple(str(m) for m in mapping[label])
            for mapping, label in zip(self.blocks, coarse_history)
        ]
        return [tuple(h) for h in itertools.product(*pools)]


@dataclass
class CoarseGrainReport:
    """Additivity audit of a coarse-graining against the fine-grained table."""

    direction: str
    max_violation: float
    additive: bool
    per_history: dict[History, tuple[float, float]]  # coarse -> (direct, summed)
    tolerance: float


def coarse_grain_check(model: QuantumModel, graining: CoarseGraining,
                       direction: str = "forwards", atol: float = 1e-9) -> CoarseGrainReport:
    """Compare coarse candidate probabilities with sums of fine-grained ones.

    For a decoherent set the two agree; otherwise the largest discrepancy is
    the surviving interference, e.g. merging exactly two histories leaves
    2 Re D(h, h') behind.
    """
    graining.validate(model)
    coarse = graining.coarse_model(model)
    fine_table = {
        h: (candidate_probability_forwards(model, h) if direction == "forwards"
            else candidate_probability_backwards(model, h))
        for h in model.history_labels()
    }
    per_history = {}
    max_violation = 0.0
    for ch in coarse.history_labels():
        direct = (candidate_probability_forwards(coarse, ch) if direction == "forwards"
                  else candidate_probability_backwards(coarse, ch))
        summed = sum(fine_table[h] for h in graining.fine_histories_of(ch))
        per_history[ch] = (direct, summed)
        max_violation = max(max_violation, abs(direct - summed))
    return CoarseGrainReport(direction, max_violation, max_violation <= atol,
                             per_history, atol)


@dataclass
class BothConditionsReport:
    """Result of testing that forwards and backwards probabilities coincide.

    Applicable only when both weak decoherence conditions hold; then the two
    candidate tables must agree and both must equal the real part of the bare
    chain expectation Re Tr(L_h rho).
    """

    applicable: bool
    reason: str
    forwards: DecoherenceReport
    backwards: DecoherenceReport
    max_table_difference: float | None = None
    max_chain_difference: float | None = None
    chain_expectations: dict[History, float] = field(default_factory=dict)
    passed: bool | None = None


def both_conditions_theorem_check(model: QuantumModel,
                                  tolerance: TolerancePolicy | None = None,
                                  atol: float = 1e-9) -> BothConditionsReport:
    """When both weak conditions hold, verify the probability tables coincide."""
    fwd = check_decoherence(model, "forwards", "weak", tolerance)
    bwd = check_decoherence(model, "backwards", "weak", tolerance)
    if not (fwd.decoherent and bwd.decoherent):
        failed = []
        if not fwd.decoherent:
            failed.append("forwards")
        if not bwd.decoherent:
            failed.append("backwards")
        return BothConditionsReport(False, f"not applicable: {' and '.join(failed)} "
                                           "weak decoherence fails", fwd, bwd)
    rho = model.initial_state.rho
    chain_vals = {}
    for h in model.history_labels():
        chain_vals[h] = float(np.trace(_single_chain(model, h) @ rho).real)
    table_diff = max(abs(fwd.probabilities[h] - bwd.probabilities[h]) for h in fwd.probabilities)
    chain_diff = max(
        max(abs(fwd.probabilities[h] - chain_vals[h]), abs(bwd.probabilities[h] - chain_vals[h]))
        for h in fwd.probabilities
    )
    return BothConditionsReport(
        True, "both weak decoherence conditions hold", fwd, bwd,
        max_table_difference=table_diff, max_chain_difference=chain_diff,
        chain_expectations=chain_vals,
        passed=(table_diff <= atol and chain_diff <= atol),
    )


@dataclass
class TrivialityReport:
    """Audit of the single-state two-boundary condition for a pure state.

    When the condition holds, every probability equals |<psi|L_h|psi>|^2,
    coincides with <psi|L_h|psi> itself, and is therefore 0 or 1.
    """

    condition_holds: bool
    classification: str
    probabilities: dict[History, float]
    amplitudes: dict[History, complex]
    max_amplitude_defect: float | None = None
    all_zero_or_one: bool | None = None


def pure_two_state_triviality_check(model: QuantumModel, psi,
                                    tolerance: TolerancePolicy | None = None,
                                    atol: float = 1e-9) -> TrivialityReport:
    """Check the restrictive rho_i = rho_f = |psi><psi| condition and its 0/1 law.

    Both boundary slots are filled with the given pure state; the model
    contributes only its families and dynamics.
    """
    psi = linalg.as_vector(psi, "psi")
    state = StateOperator.from_vector(psi)
    report = check_two_state_decoherence(state, state.rho, model, "weak", tolerance)
    amplitudes = {}
    probabilities = {}
    for h in model.history_labels():
        amp = complex(psi.conj() @ (_single_chain(model, h) @ psi))
        amplitudes[h] = amp
        probabilities[h] = abs(amp) ** 2
    if not report.decoherent:
        return TrivialityReport(False, report.classification, probabilities, amplitudes)
    defect = max(
        max(abs(probabilities[h] - amplitudes[h].real), abs(amplitudes[h].imag))
        for h in amplitudes
    )
    trivial = all(min(p, abs(1.0 - p)) <= atol for p in probabilities.values())
    return TrivialityReport(True, report.classification, probabilities, amplitudes,
                            max_amplitude_defect=defect,
                            all_zero_or_one=(trivial and defect <= atol))


@dataclass
class TimeReversedSet:
    """Time-reversed history set living on the same grid and state.

    Each family moves to the mirror image of its time and its projectors are
    conjugated in the declared basis; family order reverses accordingly.  A
    history of the reversed set corresponds to the reversed label tuple of
    the original set.
    """

    model: QuantumModel
    family_map: tuple[tuple[int, int], ...]  # (reversed family idx, original family idx)

    @staticmethod
    def reversed_history(history) -> History:
        return tuple(reversed(tuple(history)))

    original_history = reversed_history


def time_reversed_history_set(model: QuantumModel, time_atol: float = 1e-9) -> TimeReversedSet:
    """Reflect the history set about t = 0 within the same model.

    Every family time t_k must have -t_k on the grid (and strictly inside
    it); the reversed family at -t_k carries the conjugated projectors
    B P^* B^dagger under the original labels.  Applying the operation twice
    returns the original set.
    """
    times = model.grid.times
    b = model.conjugation_basis
    placed = []  # (new_time_index, original_family_index, family)
    for k, fam in enumerate(model.families):
        target = -float(times[fam.time_index])
        hits = np.nonzero(np.abs(times - target) <= time_atol)[0]
        if hits.size == 0:
            raise ModelValidationError(
                f"grid does not admit reflection: no grid time at {target!r} "
                f"(mirror of family {k} at {float(times[fam.time_index])!r})"
            )
        j = int(hits[0])
        if not 0 < j < times.size - 1:
            raise ModelValidationError(
                f"reflected family time {target!r} is not strictly inside the grid"
            )
        members = [
            (label, time_reverse_operator(p, b))
            for label, p in zip(fam.labels, fam.projectors)
        ]
        placed.append((j, k, ProjectorFamily(j, members)))
    placed.sort(key=lambda item: item[0])
    reversed_model = QuantumModel(
        model.initial_state, model.grid, [fam for _, _, fam in placed],
        model.conjugation_basis, model.factors,
    )
    family_map = tuple((new_idx, orig_idx) for new_idx, (_, orig_idx, _) in enumerate(placed))
    return TimeReversedSet(reversed_model, family_map)


@dataclass
class PageReport:
    """Symmetric-cosmology audit: reversed-set probabilities match the originals.

    Preconditions (each reported with its defect): both boundary operators are
    fixed by time reversal, they commute, and the grid with its steps mirrors
    about t = 0.  Given those and two-state decoherence of both the original
    and the reversed set, the two probability tables must coincide.
    """

    preconditions: dict[str, tuple[bool, float]]
    preconditions_ok: bool
    original: DecoherenceReport | None = None
    time_reversed: DecoherenceReport | None = None
    applicable: bool = False
    reason: str = ""
    max_table_difference: float | None = None
    passed: bool | None = None


def page_symmetric_cosmology_check(rho_i, rho_f, model: QuantumModel,
                                   tolerance: TolerancePolicy | None = None,
                                   precond_atol: float = 1e-10,
                                   table_atol: float = 1e-9) -> PageReport:
    """Test time-symmetric-cosmology behavior for a boundary pair (rho_i, rho_f)."""
    from .model import _dynamics_symmetry_defect  # shared mirror-defect helper

    if not isinstance(rho_i, StateOperator):
        rho_i = StateOperator(rho_i)
    rho_f = _coerce_final_operator(rho_f, model.dim)
    b = model.conjugation_basis
    d_i = linalg.max_abs(rho_i.rho - time_reverse_operator(rho_i.rho, b))
    d_f = linalg.max_abs(rho_f - time_reverse_operator(rho_f, b))
    d_c = linalg.max_abs(rho_i.rho @ rho_f - rho_f @ rho_i.rho)
    times = model.grid.times
    centers = np.nonzero(np.abs(times) <= 1e-9)[0]
    if centers.size:
        grid_defect, dyn_defect, why = _dynamics_symmetry_defect(model, int(centers[0]))
        d_g = max(grid_defect, dyn_defect)
        grid_ok = not why
    else:
        d_g, grid_ok = float("inf"), False
    preconditions = {
        "initial_time_symmetric": (d_i <= precond_atol, d_i),
        "final_time_symmetric": (d_f <= precond_atol, d_f),
        "boundary_operators_commute": (d_c <= precond_atol, d_c),
        "grid_mirrors_about_zero": (grid_ok, d_g),
    }
    ok = all(flag for flag, _ in preconditions.values())
    if not ok:
        failed = [name for name, (flag, _) in preconditions.items() if not flag]
        return PageReport(preconditions, False, reason=f"precondition failed: {', '.join(failed)}")
    reversed_set = time_reversed_history_set(model)
    original = check_two_state_decoherence(rho_i, rho_f, model, "weak", tolerance)
    mirrored = check_two_state_decoherence(rho_i, rho_f, reversed_set.model, "weak", tolerance)
    if not (original.decoherent and mirrored.decoherent):
        which = []
        if not original.decoherent:
            which.append("original set")
        if not mirrored.decoherent:
            which.append("time-reversed set")
        return PageReport(preconditions, True, original, mirrored, False,
                          f"two-state decoherence fails for: {', '.join(which)}")
    diff = max(
        abs(original.probabilities[h] - mirrored.probabilities[reversed_set.reversed_history(h)])
        for h in original.probabilities
    )
    return PageReport(preconditions, True, original, mirrored, True,
                      "preconditions and both decoherence conditions hold",
                      max_table_difference=diff, passed=diff <= table_atol)
