"""Conservation in the Schroedinger and wave Galerkin systems.

The supercritical focusing Schroedinger run concentrates, its gradient
grows many times over, and still mass and energy are kept to round-off
by the truncated dynamics.
"""
import numpy as np

from gus import build_space, EvolutionProblem, integrate
from gus.evolution import conservation_report

S = build_space("Periodic", 8.0, 128)
traj = integrate(EvolutionProblem("NSE", S, p=6), lambda x: 1.6 * np.exp(-x ** 2), T=0.5,
                 dt=5e-5, sample_stride=200, method="rk6")
rep = conservation_report(traj)
k2 = S.basis_norms * S.wavenumbers ** 2
grad = np.sqrt(np.sum(k2 * np.abs(traj.states) ** 2, axis=1))
print(f"NSE p=6: |Du| grew {grad.max() / grad[0]:.1f}x by t={traj.times[np.argmax(grad)]:.2f}")
for name in ("M", "E"):
    print(f"  {name} drift {rep.functionals[name].max_rel_drift:.1e}")

D = build_space("Dirichlet", np.pi, 64)
wave = integrate(EvolutionProblem("NonlinearWave", D, p=4), (lambda x: 2 * np.sin(x), lambda x: 0 * x),
                 T=1.0, dt=1e-3, sample_stride=100)
print(f"wave p=4: energy drift {conservation_report(wave).functionals['E'].max_rel_drift:.1e}")
