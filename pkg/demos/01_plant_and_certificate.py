"""Build the reference plant and inspect its stability certificate.

The plant is an unstable second-order system (open-loop eigenvalues 2
and 3) stabilized by static state feedback to closed-loop eigenvalues
-1 and -2.  The Lyapunov certificate P and the handful of scalar rates
derived from it drive everything else in the library.
"""

import numpy as np

from etcsim import build_plant, sym_eig_extremes

plant = build_plant(
    A=[[1.0, -2.0], [1.0, 4.0]],
    B=[[0.0], [1.0]],
    K=[[2.0, -8.0]],
    Q=np.eye(2),
    a=1.2,
    beta_fraction=0.8,   # target decay at 80% of the certified rate
)

np.set_printoptions(precision=6, suppress=True)
print("open-loop eigenvalues:  ", np.sort(np.linalg.eigvals(plant.A).real))
print("closed-loop eigenvalues:", np.sort(np.linalg.eigvals(plant.Abar).real))
print()
print("Lyapunov certificate P:")
print(plant.P)
lo, hi = sym_eig_extremes(plant.P)
print(f"certificate eigenvalue range: [{lo:.6f}, {hi:.6f}]")
print()

c = plant.constants
print(f"target decay rate beta      = {plant.beta:.6f}")
print(f"decay gap w                 = {c.decay_gap:.6f}")
print(f"guarded decay gap W         = {c.guarded_decay_gap:.6f}")
print(f"error growth (spectral)     = {c.growth_rate:.6f}")
print(f"error growth (infinity)     = {c.growth_rate_inf:.6f}")
print(f"error normalisation scale   = {c.error_scale:.6e}")
print()
print("The guarded gap must stay positive: pushing the margin factor to")
print("a = 10 makes the same target rate infeasible ->")
try:
    build_plant(A=plant.A, B=plant.B, K=plant.K, Q=plant.Q, a=10.0, beta_fraction=0.8)
except Exception as exc:
    print(f"  {type(exc).__name__}: {exc}")
