"""Branch vectors, strong decoherence, and generalized records.

For a pure state, strong decoherence of the history set is the same thing as
pairwise orthogonality of the branch vectors, and exactly then a family of
later-time projectors perfectly correlated with the histories exists.  A bare
qubit without pointers shows the negative side: interfering branches, no
records.
"""

import numpy as np

import decohist as dh

model = dh.spin_model(0.6)
psi = model.initial_state.state_vector()

branches = dh.branch_vectors(model, psi)
print("branch squared norms (= forwards probabilities):")
for b in branches:
    print(f"  {b.history}: {b.norm_squared():.4f}")

equiv = dh.strong_decoherence_iff_orthogonality(model, psi)
print("\northogonality vs strong decoherence, per truncation depth:")
for depth, overlap, strong, agree in equiv.per_depth:
    print(f"  depth {depth}: max overlap {overlap:.2e}, strong passes = {strong}, "
          f"sides agree = {agree}")

records = dh.construct_records(model, psi)
print(f"\nrecord family built at t = {records.time}")
print("correlation matrix (rows: records, columns: branches):")
for row in records.correlation:
    print("  " + "  ".join(f"{x:6.4f}" for x in row))
print("extension with the record family:", records.extension_report.classification)

# the no-pointer control: branches overlap and record construction refuses
eye = np.eye(2, dtype=complex)
grid = dh.TimeGrid([0.0, 1.0, 2.0, 3.0], [eye, eye, eye])
plus_x = np.array([1.0, 1.0]) / np.sqrt(2.0)
px = np.outer(plus_x, plus_x.conj())
bare = dh.QuantumModel(
    dh.StateOperator.from_vector([1.0, 0.0]), grid,
    [dh.ProjectorFamily(1, [("x+", px), ("x-", np.eye(2) - px)]),
     dh.ProjectorFamily(2, [("z+", np.diag([1.0, 0.0])), ("z-", np.diag([0.0, 1.0]))])],
)
check = dh.strong_decoherence_iff_orthogonality(bare, np.array([1.0, 0.0], dtype=complex))
print(f"\nbare qubit: strong decoherence = {check.full_report.decoherent}, "
      f"max branch overlap = {np.max(np.abs(check.gram - np.diag(np.diag(check.gram)))):.4f}")
try:
    dh.construct_records(bare, np.array([1.0, 0.0], dtype=complex))
except dh.ConditionNotSatisfiedError as exc:
    print("record construction refused:", exc)
