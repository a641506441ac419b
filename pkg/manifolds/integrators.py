"""
Geodesic and parallel-transport ODE integration, and shooting for the
logarithm on manifolds without a closed-form kit.

Batches of geodesics are stacked into a single first-order system so one
`solve_ivp` call serves the whole batch.
"""
import logging

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import DomainExitError, ShootingError

logger = logging.getLogger(__name__)

ODE_METHOD = "DOP853"
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12

SHOOT_TOL = 1e-10
SHOOT_ACCEPT = 1e-8
SHOOT_MAX_ITER = 100
SHOOT_FD_STEP = 1e-7
SHOOT_MAX_HALVINGS = 30


def integrate_geodesic(manifold, X, V, W=None, t_final=1.0):
    """
    Integrate x'' = -Γ(x', x') (and optionally W' = -Γ(x', W)) from t=0 to t_final.

    Args:
        manifold: Catalog manifold
        X: (m, a) start points
        V: (m, a) initial velocities
        W: optional (m, a) vectors to parallel-transport along each geodesic
        t_final: integration horizon

    Returns:
        tuple: (end points, end velocities, transported W or None)
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m, a = X.shape
    blocks = 3 if W is not None else 2
    y0 = np.concatenate([X.ravel(), V.ravel()] + ([np.atleast_2d(W).astype(float).ravel()] if W is not None else []))
    if m == 0 or t_final == 0.0:
        W0 = None if W is None else np.atleast_2d(W).astype(float)
        return X.copy(), V.copy(), W0

    def rhs(t, y):
        state = y.reshape(blocks, m, a)
        x, v = state[0], state[1]
        out = [v, -manifold.christoffel(x, v, v)]
        if blocks == 3:
            out.append(-manifold.christoffel(x, v, state[2]))
        return np.concatenate([part.ravel() for part in out])

    sol = solve_ivp(rhs, (0.0, float(t_final)), y0, method=ODE_METHOD, rtol=ODE_RTOL, atol=ODE_ATOL)
    if not sol.success:
        raise DomainExitError(f"geodesic integration failed: {sol.message}")

    trajectory = sol.y.reshape(blocks, m, a, -1)
    positions = np.moveaxis(trajectory[0], -1, 1).reshape(-1, a)
    margins = manifold.domain_margin(positions).reshape(m, -1)
    exited = np.where(np.min(margins, axis=1) <= 0.0)[0]
    if exited.size:
        logger.warning(f"[Geodesic] {exited.size} of {m} geodesics left the domain of {manifold.name}")
        raise DomainExitError(f"{exited.size} geodesic(s) left the coordinate domain of {manifold.name}")

    final = sol.y[:, -1].reshape(blocks, m, a)
    X1 = manifold.project(final[0])
    V1 = manifold.tangent_project(X1, final[1])
    W1 = manifold.tangent_project(X1, final[2]) if blocks == 3 else None
    return X1, V1, W1


def ode_exp(manifold, X, V):
    return integrate_geodesic(manifold, X, V)[0]


def shoot_log(manifold, X, Y, tol=SHOOT_TOL, max_iter=SHOOT_MAX_ITER, return_residual=False):
    """
    Solve exp_x(v) = y for v by damped Newton with a finite-difference Jacobian.

    Starts from the chart-coordinate difference y − x. Only chart manifolds
    (ambient_dim == dim) are supported. With return_residual the per-pair
    residuals are returned instead of raising on the worst one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    m, n = X.shape
    V = Y - X
    residual = np.linalg.norm(ode_exp(manifold, X, V) - Y, axis=-1)

    iteration = 0
    for iteration in range(1, max_iter + 1):
        active = np.where(residual > tol)[0]
        if active.size == 0:
            break
        Xa, Va, Ya = X[active], V[active], Y[active]
        F = ode_exp(manifold, Xa, Va) - Ya
        scale = SHOOT_FD_STEP * np.maximum(1.0, np.linalg.norm(Va, axis=-1))
        J = np.empty((active.size, n, n))
        for j in range(n):
            step = np.zeros_like(Va)
            step[:, j] = scale
            J[:, :, j] = (ode_exp(manifold, Xa, Va + step) - Ya - F) / scale[:, None]
        delta = np.linalg.solve(J, -F[..., None])[..., 0]

        base = np.linalg.norm(F, axis=-1)
        t = np.ones(active.size)
        accepted = np.zeros(active.size, dtype=bool)
        trial_res = base.copy()
        for _ in range(SHOOT_MAX_HALVINGS):
            todo = ~accepted
            if not todo.any():
                break
            trial = Va[todo] + t[todo, None] * delta[todo]
            res = np.linalg.norm(ode_exp(manifold, Xa[todo], trial) - Ya[todo], axis=-1)
            better = res < base[todo]
            idx = np.where(todo)[0]
            accepted[idx[better]] = True
            trial_res[idx[better]] = res[better]
            Va[idx[better]] = trial[better]
            t[idx[~better]] *= 0.5
        if not accepted.any():
            break
        V[active] = Va
        residual[active] = trial_res

    worst = float(np.max(residual)) if residual.size else 0.0
    if return_residual:
        return V, residual
    if worst > SHOOT_ACCEPT:
        raise ShootingError(worst, iteration)
    logger.debug(f"[Shooting] {m} logs converged in {iteration} iterations (max residual {worst:.2e})")
    return V
