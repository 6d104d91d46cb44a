"""Built-in models, the collapse-chain oracle, pre/post-selection, recoherence.

The spin scenario is an 18-dimensional system: a spin-1/2 particle and two
three-state pointers (ready/up/down).  The first step unitary copies the
particle's x-component onto pointer 1, the second copies the z-component onto
pointer 2, and the families ask "x up or down?" then "z up or down?" of the
particle alone.  This single model exercises almost every operation in the
package: it decoheres forwards but not backwards (unless |alpha|^2 = 1/2),
its branches are orthogonal pointer states, and with real amplitudes its
mirror extension recoheres.

``collapse_chain_enumerate`` walks every outcome sequence with explicit
project-and-renormalize steps; it is deliberately independent of the chain
machinery in :mod:`decohist.histories` so the two can check each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .exceptions import ModelValidationError
from .histories import (
    DecoherenceReport,
    TimeReversedSet,
    TolerancePolicy,
    check_decoherence,
    time_reversed_history_set,
)
from .model import (
    ProjectorFamily,
    QuantumModel,
    StateOperator,
    TimeGrid,
    evolve_state,
    partial_trace,
    time_reverse_operator,
)

__all__ = [
    "CollapseTrajectory",
    "RecoherenceAnalysis",
    "abl_probability",
    "abl_table",
    "collapse_chain_enumerate",
    "collapse_probability_table",
    "commuting_random_model",
    "haar_unitary",
    "random_model",
    "recoherence_scenario",
    "reverse_collapse_chain",
    "spin_model",
    "spin_post_selection",
    "spin_recoherence_base",
    "spin_symmetric_scenario",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

PLUS_X = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
MINUS_X = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
PLUS_Z = np.array([1.0, 0.0], dtype=complex)
MINUS_Z = np.array([0.0, 1.0], dtype=complex)

# Pointer basis order: 0 = ready, 1 = "up" record, 2 = "down" record.
_POINTER_DIM = 3


def _pointer_cycle(sign: str) -> np.ndarray:
    """Permutation the premeasurement applies to a pointer: ready -> record.

    The action on already-set pointers is a fixed cyclic completion, which
    makes the conditional map unitary without touching the reached states.
    """
    c = np.zeros((_POINTER_DIM, _POINTER_DIM), dtype=complex)
    order = (0, 1, 2) if sign == "+" else (0, 2, 1)
    for i, j in zip(order, order[1:] + order[:1]):
        c[j, i] = 1.0
    return c


def _premeasurement(projectors, pointer_slot: int) -> np.ndarray:
    """Controlled pointer shift: sum_s P_s (x) cycle_s on the chosen pointer."""
    out = np.zeros((2 * _POINTER_DIM * _POINTER_DIM,) * 2, dtype=complex)
    for sign, p in projectors:
        factors = [p, np.eye(_POINTER_DIM), np.eye(_POINTER_DIM)]
        factors[pointer_slot] = _pointer_cycle(sign)
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        out += term
    return out


def _spin_projectors(axis: np.ndarray) -> list[tuple[str, np.ndarray]]:
    return [("+", np.outer(axis, axis.conj()))] + [
        ("-", np.eye(2, dtype=complex) - np.outer(axis, axis.conj()))
    ]


def spin_model(alpha: complex, beta: complex | None = None) -> QuantumModel:
    """Two consecutive premeasurements of a spin-1/2, x then z.

    The particle starts in alpha |+x> + beta |-x| with both pointers ready;
    |alpha|^2 + |beta|^2 must be 1.  Families (one per measurement time) ask
    about the particle only.  Forwards probabilities come out as
    (p/2, p/2, q/2, q/2) with p = |alpha|^2, backwards all 1/4.
    """
    alpha = complex(alpha)
    if beta is None:
        if abs(alpha) > 1.0 + 1e-12:
            raise ModelValidationError(f"|alpha| = {abs(alpha)!r} exceeds 1")
        beta = complex(np.sqrt(max(0.0, 1.0 - abs(alpha) ** 2)))
    beta = complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise ModelValidationError(
            f"amplitudes not normalized: |alpha|^2 + |beta|^2 = {abs(alpha)**2 + abs(beta)**2!r}"
        )
    ready = np.zeros(_POINTER_DIM, dtype=complex)
    ready[0] = 1.0
    psi0 = np.kron(np.kron(alpha * PLUS_X + beta * MINUS_X, ready), ready)
    u1 = _premeasurement(_spin_projectors(PLUS_X), pointer_slot=1)
    u2 = _premeasurement(_spin_projectors(PLUS_Z), pointer_slot=2)
    eye = np.eye(psi0.size, dtype=complex)
    grid = TimeGrid([0.0, 1.0, 2.0, 3.0], [u1, u2, eye])
    eye9 = np.eye(_POINTER_DIM * _POINTER_DIM)
    families = [
        ProjectorFamily(1, [(f"x{s}", np.kron(p, eye9)) for s, p in _spin_projectors(PLUS_X)]),
        ProjectorFamily(2, [(f"z{s}", np.kron(p, eye9)) for s, p in _spin_projectors(PLUS_Z)]),
    ]
    return QuantumModel(StateOperator.from_vector(psi0), grid, families,
                        factors=(2, _POINTER_DIM, _POINTER_DIM))


def spin_post_selection() -> tuple[QuantumModel, np.ndarray, np.ndarray]:
    """Bare spin-1/2 with one z family and trivial dynamics, plus pre/post states.

    Returns (model, psi_initial, psi_final) with psi_initial = |+x> and
    psi_final = |+z>; conditioning on that final state forces the z+ outcome.
    """
    eye = np.eye(2, dtype=complex)
    grid = TimeGrid([0.0, 1.0, 2.0], [eye, eye])
    family = ProjectorFamily(1, [(f"z{s}", p) for s, p in _spin_projectors(PLUS_Z)])
    model = QuantumModel(StateOperator.from_vector(PLUS_X), grid, [family], factors=(2,))
    return model, PLUS_X.copy(), PLUS_Z.copy()


@dataclass
class CollapseTrajectory:
    """One outcome sequence of the project-and-renormalize evolution.

    ``labels`` are time-ordered.  For pure models ``states`` holds the
    normalized state after each projection and finally after the trailing
    evolution; it is ``None`` for mixed models (the probabilities are then
    aggregated over the state's spectral components).  For reverse chains the
    states follow the reverse procedure, ending at the reconstructed
    earliest-time state.
    """

    labels: tuple
    probability: float
    states: list[np.ndarray] | None = None


def _enumerate_pure(model: QuantumModel, psi: np.ndarray) -> list[CollapseTrajectory]:
    segments = []  # per family: product of steps reaching its time
    pos = 0
    for fam in model.families:
        w = np.eye(model.dim, dtype=complex)
        for i in range(pos, fam.time_index):
            w = model.grid.step_unitaries[i] @ w
        segments.append(w)
        pos = fam.time_index
    tail = np.eye(model.dim, dtype=complex)
    for i in range(pos, model.grid.n_times - 1):
        tail = model.grid.step_unitaries[i] @ tail
    trajectories = []
    for idx in itertools.product(*[range(len(f)) for f in model.families]):
        labels = tuple(f.labels[j] for f, j in zip(model.families, idx))
        state = psi.copy()
        prob = 1.0
        states = []
        for fam, seg, j in zip(model.families, segments, idx):
            state = fam.projectors[j] @ (seg @ state)
            p_step = float(np.vdot(state, state).real)
            prob *= p_step
            state = state / np.sqrt(p_step) if p_step > 1e-300 else np.zeros_like(state)
            states.append(state.copy())
        states.append(tail @ state)
        trajectories.append(CollapseTrajectory(labels, prob, states))
    return trajectories


def collapse_chain_enumerate(model: QuantumModel) -> list[CollapseTrajectory]:
    """All collapse trajectories with stepwise-product probabilities.

    This is the oracle for the forwards candidate probabilities: the product
    of stepwise collapse probabilities equals the chain-product trace formula,
    so the two tables must agree on every model.  Mixed initial states are
    handled as spectral mixtures of pure runs (trajectory states omitted).
    """
    state = model.initial_state
    if state.is_pure():
        return _enumerate_pure(model, state.state_vector())
    w, v = np.linalg.eigh((state.rho + state.rho.conj().T) / 2.0)
    table: dict[tuple, float] = {}
    order: list[tuple] = []
    for weight, k in zip(w, range(w.size)):
        if weight <= 1e-14:
            continue
        for traj in _enumerate_pure(model, v[:, k]):
            if traj.labels not in table:
                table[traj.labels] = 0.0
                order.append(traj.labels)
            table[traj.labels] += float(weight) * traj.probability
    return [CollapseTrajectory(labels, table[labels]) for labels in sorted(order)]


def collapse_probability_table(model: QuantumModel) -> dict[tuple, float]:
    return {t.labels: t.probability for t in collapse_chain_enumerate(model)}


def reverse_collapse_chain(model: QuantumModel, final_state) -> list[CollapseTrajectory]:
    """Run the collapse procedure backwards from a state at the final time.

    Steps are applied as adjoints from the last grid time down to the first,
    with the family projections encountered in reverse order.  Labels are
    reported time-ordered; the last recorded state is the reconstructed
    earliest-time state, which in general differs from the model's own
    initial state.
    """
    psi_f = linalg.as_vector(final_state, "final state")
    if abs(float(np.linalg.norm(psi_f)) - 1.0) > 1e-10:
        raise ValueError("final state must be normalized")
    segments = []  # adjoint products leading down to each family, last family first
    pos = model.grid.n_times - 1
    for fam in reversed(model.families):
        w = np.eye(model.dim, dtype=complex)
        for i in reversed(range(fam.time_index, pos)):
            w = model.grid.step_unitaries[i].conj().T @ w
        segments.append(w)
        pos = fam.time_index
    tail = np.eye(model.dim, dtype=complex)
    for i in reversed(range(0, pos)):
        tail = model.grid.step_unitaries[i].conj().T @ tail
    trajectories = []
    for idx in itertools.product(*[range(len(f)) for f in reversed(model.families)]):
        state = psi_f.copy()
        prob = 1.0
        states = []
        for fam, seg, j in zip(reversed(model.families), segments, idx):
            state = fam.projectors[j] @ (seg @ state)
            p_step = float(np.vdot(state, state).real)
            prob *= p_step
            state = state / np.sqrt(p_step) if p_step > 1e-300 else np.zeros_like(state)
            states.append(state.copy())
        states.append(tail @ state)
        labels = tuple(
            f.labels[j] for f, j in zip(reversed(model.families), idx)
        )[::-1]
        trajectories.append(CollapseTrajectory(labels, prob, states))
    return trajectories


def abl_probability(psi_initial, psi_final, model: QuantumModel, history) -> float:
    """Pre- and post-selected probability of one history (the ABL rule).

    Both conditioning states are pure; the numerator is the squared chain
    amplitude between them and the denominator sums the numerators over all
    histories.  A denominator at or below 1e-14 means the selection pair is
    impossible and raises.
    """
    table = abl_table(psi_initial, psi_final, model)
    return table[tuple(history)]


def abl_table(psi_initial, psi_final, model: QuantumModel) -> dict[tuple, float]:
    from .histories import _single_chain

    psi_i = linalg.as_vector(psi_initial, "initial state")
    psi_f = linalg.as_vector(psi_final, "final state")
    w_end = model.grid.cumulative(model.grid.n_times - 1)
    numerators = {}
    for h in model.history_labels():
        amp = complex(psi_f.conj() @ (w_end @ (_single_chain(model, h) @ psi_i)))
        numerators[h] = abs(amp) ** 2
    denom = sum(numerators.values())
    if denom <= 1e-14:
        raise ZeroDivisionError(
            f"pre/post-selection pair is impossible: denominator {denom!r}"
        )
    return {h: numerators[h] / denom for h in numerators}


def spin_recoherence_base(alpha: float, beta: float | None = None) -> QuantumModel:
    """Spin premeasurement model arranged so a mirror extension erases it.

    Unlike :func:`spin_model`, each projection happens first and the pointer
    copy follows inside the next interval; both couplings then sit strictly
    between the first family time and the central time 0, so the reflected
    half undoes them all by the mirror image of the first family time.
    Amplitudes must be real, otherwise the central state cannot be fixed by
    time reversal.
    """
    alpha = float(alpha)
    beta = float(np.sqrt(max(0.0, 1.0 - alpha**2))) if beta is None else float(beta)
    if abs(alpha**2 + beta**2 - 1.0) > 1e-12:
        raise ModelValidationError("amplitudes not normalized")
    ready = np.zeros(_POINTER_DIM, dtype=complex)
    ready[0] = 1.0
    psi0 = np.kron(np.kron(alpha * PLUS_X + beta * MINUS_X, ready), ready)
    u1 = _premeasurement(_spin_projectors(PLUS_X), pointer_slot=1)
    u2 = _premeasurement(_spin_projectors(PLUS_Z), pointer_slot=2)
    eye = np.eye(psi0.size, dtype=complex)
    grid = TimeGrid([-3.0, -2.0, -1.0, 0.0], [eye, u1, u2])
    eye9 = np.eye(_POINTER_DIM * _POINTER_DIM)
    families = [
        ProjectorFamily(1, [(f"x{s}", np.kron(p, eye9)) for s, p in _spin_projectors(PLUS_X)]),
        ProjectorFamily(2, [(f"z{s}", np.kron(p, eye9)) for s, p in _spin_projectors(PLUS_Z)]),
    ]
    return QuantumModel(StateOperator.from_vector(psi0), grid, families,
                        factors=(2, _POINTER_DIM, _POINTER_DIM))


@dataclass
class RecoherenceAnalysis:
    """Everything the mirror extension demonstrates.

    The witness for recoherence is the reduced purity of the kept factors
    returning, by the final time, to its initial value; the central claim is
    that this witness agrees with backwards decoherence of the time-reversed
    history set (and not with backwards decoherence of the original set).
    """

    extended_model: QuantumModel
    first_half_forwards: DecoherenceReport
    purity_curve: list[tuple[float, float]] | None
    reinterference: list[tuple[float, float]]
    reversed_set: TimeReversedSet
    reversed_backwards: DecoherenceReport
    original_backwards: DecoherenceReport
    recoherence_witness: bool | None
    equivalence_holds: bool | None
    purity_dip: float | None = None


def recoherence_scenario(base: QuantumModel, keep=(0,),
                         tolerance: TolerancePolicy | None = None,
                         atol: float = 1e-9) -> RecoherenceAnalysis:
    """Extend a pre-zero model through its own mirror image and analyze it.

    The base must have all families before time 0 and end exactly at 0 with a
    state there that time reversal fixes.  The extension appends the
    reflected times with each step replaced by its reflected image, giving a
    grid symmetric about 0.  The analysis checks forwards decoherence of the
    first half, tracks how off-diagonal functional weight returns as the
    history set is pushed into the mirrored half, and verifies that the
    purity-based recoherence witness matches backwards decoherence of the
    time-reversed set.
    """
    times = base.grid.times
    if abs(float(times[-1])) > 1e-12:
        raise ModelValidationError("recoherence base must end exactly at time 0")
    if not all(float(times[f.time_index]) < 0 for f in base.families):
        raise ModelValidationError("recoherence base families must all sit before time 0")
    if not base.families:
        raise ModelValidationError("recoherence base needs at least one family")
    b = base.conjugation_basis
    rho_c = evolve_state(base, base.grid.n_times - 1).rho
    defect = linalg.max_abs(rho_c - time_reverse_operator(rho_c, b))
    if defect > 1e-10:
        raise ModelValidationError(
            f"state at time 0 is not time-symmetric (defect {defect:.3e}); "
            "choose a central state fixed by time reversal"
        )
    ext_times = list(map(float, times)) + [-float(t) for t in reversed(times[:-1])]
    mirrored = [b @ u.T @ b.conj().T for u in reversed(base.grid.step_unitaries)]
    ext_steps = list(base.grid.step_unitaries) + mirrored
    extended = QuantumModel(
        base.initial_state,
        TimeGrid(ext_times, ext_steps),
        base.families,
        base.conjugation_basis,
        base.factors,
    )
    first_half = check_decoherence(extended, "forwards", "weak", tolerance)
    purity_curve = None
    witness = None
    dip = None
    if extended.factors is not None:
        purity_curve = []
        for k in range(extended.grid.n_times):
            reduced = partial_trace(evolve_state(extended, k), extended.factors, keep)
            purity_curve.append((float(extended.grid.times[k]), reduced.purity()))
        initial_purity = purity_curve[0][1]
        final_purity = purity_curve[-1][1]
        dip = initial_purity - min(p for _, p in purity_curve)
        witness = abs(final_purity - initial_purity) <= atol
    reversed_set = time_reversed_history_set(extended)
    reinterference = []
    rev_families = reversed_set.model.families
    for depth in range(1, len(rev_families) + 1):
        probe = QuantumModel(
            extended.initial_state, extended.grid,
            list(extended.families) + list(rev_families[:depth]),
            extended.conjugation_basis, extended.factors,
        )
        probe_report = check_decoherence(probe, "forwards", "strong", tolerance)
        t_probe = float(extended.grid.times[rev_families[depth - 1].time_index])
        reinterference.append((t_probe, probe_report.max_offdiagonal()))
    reversed_backwards = check_decoherence(reversed_set.model, "backwards", "weak", tolerance)
    original_backwards = check_decoherence(extended, "backwards", "weak", tolerance)
    equivalence = None if witness is None else (witness == reversed_backwards.decoherent)
    return RecoherenceAnalysis(
        extended_model=extended,
        first_half_forwards=first_half,
        purity_curve=purity_curve,
        reinterference=reinterference,
        reversed_set=reversed_set,
        reversed_backwards=reversed_backwards,
        original_backwards=original_backwards,
        recoherence_witness=witness,
        equivalence_holds=equivalence,
        purity_dip=dip,
    )


def spin_symmetric_scenario(alpha: float = 1.0 / np.sqrt(2.0)) -> RecoherenceAnalysis:
    """Mirror-extended spin model with real amplitudes (default balanced)."""
    return recoherence_scenario(spin_recoherence_base(alpha), keep=(0,))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _random_family(dim: int, time_index: int, rng: np.random.Generator,
                   n_members: int | None = None) -> ProjectorFamily:
    basis = haar_unitary(dim, rng)
    if n_members is None:
        n_members = int(rng.integers(2, min(dim, 4) + 1))
    cuts = sorted(rng.choice(np.arange(1, dim), size=n_members - 1, replace=False).tolist())
    bounds = [0] + cuts + [dim]
    blocks = {
        f"m{j}": list(range(bounds[j], bounds[j + 1])) for j in range(n_members)
    }
    return ProjectorFamily.from_basis(time_index, basis, blocks)


def random_model(seed: int, dim: int = 4, n_families: int = 2,
                 members_per_family: int | None = None, pure: bool = True,
                 trivial_dynamics: bool = False) -> QuantumModel:
    """Seeded random model: Haar steps and random orthogonal-basis families."""
    rng = np.random.default_rng(seed)
    n_times = n_families + 2
    eye = np.eye(dim, dtype=complex)
    steps = [
        eye.copy() if trivial_dynamics else haar_unitary(dim, rng)
        for _ in range(n_times - 1)
    ]
    grid = TimeGrid(np.arange(n_times, dtype=float), steps)
    families = [
        _random_family(dim, k + 1, rng, members_per_family)
        for k in range(n_families)
    ]
    if pure:
        psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        state = StateOperator.from_vector(psi / np.linalg.norm(psi))
    else:
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = a @ a.conj().T
        state = StateOperator(rho / np.trace(rho).real)
    return QuantumModel(state, grid, families)


def commuting_random_model(seed: int, dim: int = 4, n_families: int = 2) -> QuantumModel:
    """Random model whose families, dynamics and state share one eigenbasis.

    Everything commutes, so the set decoheres in both directions with
    generally nontrivial probabilities; useful as a constructed case where
    forwards and backwards tables must coincide.
    """
    rng = np.random.default_rng(seed)
    basis = haar_unitary(dim, rng)
    n_times = n_families + 2
    steps = []
    for _ in range(n_times - 1):
        phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=dim))
        steps.append(basis @ np.diag(phases) @ basis.conj().T)
    grid = TimeGrid(np.arange(n_times, dtype=float), steps)
    families = [_random_family_from_basis(basis, k + 1, rng) for k in range(n_families)]
    probs = rng.uniform(0.1, 1.0, size=dim)
    probs /= probs.sum()
    rho = basis @ np.diag(probs) @ basis.conj().T
    return QuantumModel(StateOperator(rho), grid, families)


def _random_family_from_basis(basis: np.ndarray, time_index: int,
                              rng: np.random.Generator) -> ProjectorFamily:
    dim = basis.shape[0]
    n_members = int(rng.integers(2, min(dim, 3) + 1))
    cuts = sorted(rng.choice(np.arange(1, dim), size=n_members - 1, replace=False).tolist())
    bounds = [0] + cuts + [dim]
    perm = rng.permutation(dim)
    blocks = {
        f"m{j}": [int(perm[i]) for i in range(bounds[j], bounds[j + 1])]
        for j in range(n_members)
    }
    return ProjectorFamily.from_basis(time_index, basis, blocks)
