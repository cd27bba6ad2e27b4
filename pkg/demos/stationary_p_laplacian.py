"""A non-convex stationary problem solved by homotopy continuation.

Delta_4 u - Delta u = sin(pi x / beta) on (0, beta) with zero boundary
values.  The path from the identity map to the Galerkin residual is
followed in s; the result is checked against direct minimization of the
associated energy.
"""
import numpy as np
from scipy.optimize import minimize

from gus import build_space, project
from gus.stationary import (StationaryProblem, find_sphere_radius, p_laplacian_energy,
                            p_laplacian_operator, solve_stationary)

beta, K = 10.0, 16
S = build_space("Dirichlet", beta, K)
f = project(S, lambda x: -np.sin(np.pi * x / beta))
problem = StationaryProblem(S, p_laplacian_operator(S, p=4), f)
print(f"sphere condition holds on the L2 sphere of radius {find_sphere_radius(problem):g}")
u = solve_stationary(problem)
print(f"Galerkin residual {problem.residual_norm(u.coeffs):.1e}")

J, grad = p_laplacian_energy(S, f, 4)
best = minimize(J, np.zeros(S.dim), jac=grad, method="BFGS", options={"gtol": 1e-12})
d = best.x - u.coeffs
print(f"distance to the energy minimizer {np.sqrt(S.inner(d, d)):.1e}")
x = np.linspace(0, beta, 9)
print("u(x):", np.array2string(S.synth_at(u.coeffs, x), precision=3))
