"""Collapse chains run forwards and in reverse.

The project-and-renormalize walk over all outcome sequences is an
independent route to the forwards probabilities: the product of stepwise
collapse probabilities telescopes into the chain-product trace formula.
Running the same procedure backwards from a collapsed final state gives
different probabilities and does not return to the initial state.
"""

import numpy as np

import decohist as dh

model = dh.spin_model(0.6)

print("forward collapse trajectories:")
for traj in dh.collapse_chain_enumerate(model):
    engine = dh.candidate_probability_forwards(model, traj.labels)
    print(f"  {traj.labels}: chain product {traj.probability:.4f}, "
          f"trace formula {engine:.4f}")

# reverse from the state "spin up in z, both pointers reading up"
final = np.zeros(18, dtype=complex)
final[4] = 1.0
print("\nreverse trajectories from |+z, up, up>:")
for traj in dh.reverse_collapse_chain(model, final):
    if traj.probability > 1e-12:
        print(f"  {traj.labels}: probability {traj.probability:.4f}")

trajs = {t.labels: t for t in dh.reverse_collapse_chain(model, final)}
reconstructed = trajs[("x+", "z+")].states[-1]
psi0 = model.initial_state.state_vector()
print(f"\nfidelity of the reconstructed earliest-time state with the true one: "
      f"{abs(np.vdot(psi0, reconstructed))**2:.4f}")
