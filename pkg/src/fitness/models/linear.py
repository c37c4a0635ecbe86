"""L2-regularized logistic regression (L-BFGS) and linear SVM (subgradient descent).

Both minimise ``0.5 * ||w||^2 + C * sum_i s_i * loss_i`` with per-row weights
``s_i`` and an unpenalised intercept for logistic regression.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize, sparse


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_operator(X: np.ndarray):
    # one-hot heavy matrices multiply faster in CSR form
    if X.size and np.count_nonzero(X) < 0.25 * X.size:
        return sparse.csr_matrix(X)
    return X


def logistic_objective(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, weights: np.ndarray, C: float
) -> tuple[float, np.ndarray]:
    """Regularized weighted log-loss and its gradient; ``theta = [w..., b]``."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    sign = 2.0 * y - 1.0
    loss = np.logaddexp(0.0, -sign * z)
    f = 0.5 * float(w @ w) + C * float(weights @ loss)
    r = C * weights * (_sigmoid(z) - y)
    grad = np.empty_like(theta)
    grad[:-1] = w + X.T @ r
    grad[-1] = r.sum()
    return f, grad


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    C: float = 1.0,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> tuple[np.ndarray, float, int]:
    """L-BFGS on the regularized weighted log-loss, started from zero.

    Stops when the largest gradient entry falls below ``tol * C * sum(weights)``
    or after ``max_iter`` iterations. Returns ``(coef, intercept, iterations)``.
    """
    d = X.shape[1]
    M = _as_operator(X)
    res = optimize.minimize(
        logistic_objective,
        np.zeros(d + 1),
        args=(M, y, weights, C),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol * C * float(weights.sum()), "ftol": 1e-15},
    )
    theta = res.x
    return theta[:-1].copy(), float(theta[-1]), int(res.nit)


def fit_linear_svm(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    C: float = 1.0,
    epochs: int = 500,
) -> tuple[np.ndarray, float]:
    """Deterministic full-batch subgradient descent on the hinge loss.

    Uses the equivalent scaled problem ``lam/2 ||w||^2 + mean weighted hinge``
    with ``lam = 1 / (C * sum(weights))`` and step ``1 / (lam * t)``, with the
    usual projection onto the ball of radius ``1 / sqrt(lam)``. The intercept
    is learned as the coefficient of a constant input column.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    sign = 2.0 * y - 1.0
    total = float(weights.sum())
    lam = 1.0 / (C * total)
    radius = 1.0 / np.sqrt(lam)
    theta = np.zeros(d + 1)
    for t in range(1, epochs + 1):
        margin = sign * (Xa @ theta)
        active = margin < 1.0
        sub = (weights[active] * sign[active]) @ Xa[active] / total
        eta = 1.0 / (lam * t)
        theta = (1.0 - eta * lam) * theta + eta * sub
        norm = float(np.linalg.norm(theta))
        if norm > radius:
            theta *= radius / norm
    return theta[:-1], float(theta[-1])


def linear_scores(X: np.ndarray, coef: np.ndarray, intercept: float) -> np.ndarray:
    return _sigmoid(X @ coef + intercept)
