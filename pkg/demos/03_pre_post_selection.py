"""Pre- and post-selected probabilities, two ways.

A qubit prepared in |+x> and post-selected in |+z> with one z measurement in
between: the ABL rule conditions on both boundary states, and the two-state
functional with a rank-one final operator gives the same answer.  With the
identity as final operator the two-state machinery collapses back onto the
ordinary forwards probabilities.
"""

import numpy as np

import decohist as dh

model, psi_i, psi_f = dh.spin_post_selection()

print("ABL table for |+x> -> measure z -> select |+z>:")
for h, p in dh.abl_table(psi_i, psi_f, model).items():
    print(f"  {h}: {p:.4f}")

rho_i = dh.StateOperator.from_vector(psi_i)
rho_f = np.outer(psi_f, psi_f.conj())
print("\ntwo-state probabilities with the same boundary pair:")
for h in model.history_labels():
    print(f"  {h}: {dh.two_state_probability(rho_i, rho_f, model, h):.4f}")

spin = dh.spin_model(0.6)
table = dh.two_state_probability_table(spin.initial_state, np.eye(spin.dim), spin)
print("\nidentity final operator on the pointer model (= forwards table):")
for h, p in sorted(table.items()):
    print(f"  {h}: {p:.4f}")

# the single-state two-boundary condition is far more restrictive: when it
# holds for a pure state, every probability is 0 or 1
eye = np.eye(3, dtype=complex)
grid = dh.TimeGrid([0.0, 1.0, 2.0], [eye, eye])
family = dh.ProjectorFamily.from_basis(1, np.eye(3), {f"e{j}": [j] for j in range(3)})
psi = np.array([0.0, 1.0, 0.0], dtype=complex)
m = dh.QuantumModel(dh.StateOperator.from_vector(psi), grid, [family])
rep = dh.pure_two_state_triviality_check(m, psi)
print(f"\neigenfamily model: condition holds = {rep.condition_holds}, "
      f"all the probabilities 0 or 1 = {rep.all_zero_or_one}")
print("  table:", {h: round(p, 4) for h, p in rep.probabilities.items()})
