"""L2-penalized logistic regression fit by damped Newton iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, EmptyMatrix, SingleClass
from ..util import sigmoid


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    l2_strength: float
    converged: bool
    n_iterations: int

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "l2_strength": float(self.l2_strength),
            "converged": bool(self.converged),
            "n_iterations": int(self.n_iterations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(weights=np.array(d["weights"], dtype=float),
                   intercept=float(d["intercept"]),
                   l2_strength=float(d["l2_strength"]),
                   converged=bool(d["converged"]),
                   n_iterations=int(d["n_iterations"]))


def _expit(z: np.ndarray) -> np.ndarray:
    # unclipped, for exact gradients
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(weights, intercept, X, y, l2_strength):
    """Penalized negative log-likelihood and its gradient.

    The intercept is not penalized.  Returns ``(value, grad_w, grad_b)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    z = X @ w + intercept
    value = float(np.sum(np.logaddexp(0.0, z) - y * z)
                  + 0.5 * l2_strength * np.dot(w, w))
    p = _expit(z)
    grad_w = X.T @ (p - y) + l2_strength * w
    grad_b = float(np.sum(p - y))
    return value, grad_w, grad_b


def fit_logistic(X, y, l2_strength: float = 1.0, tol: float = 1e-8,
                 max_iter: int = 100) -> LogisticModel:
    """Newton iteration with step halving; converged when the gradient's
    infinity norm drops below ``tol``.

    If the budget runs out the best iterate seen is returned with
    ``converged=False`` rather than raising.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix()
    if X.shape[0] != y.shape[0]:
        raise DataError("row count of X and y differ")
    if np.unique(y).size < 2:
        raise SingleClass()
    if l2_strength < 0:
        raise DataError("l2_strength must be >= 0")

    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    obj, gw, gb = logistic_objective(w, b, X, y, l2_strength)
    best = (obj, w.copy(), b)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < tol:
            converged = True
            it -= 1
            break
        z = X @ w + b
        p = _expit(z)
        r = p * (1.0 - p)
        Xa = np.hstack([X, np.ones((n, 1))])
        H = (Xa * r[:, None]).T @ Xa
        H[np.arange(d), np.arange(d)] += l2_strength
        H[np.arange(d + 1), np.arange(d + 1)] += 1e-10  # keep solvable
        g = np.concatenate([gw, [gb]])
        try:
            delta = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            delta = -g  # fall back to gradient descent direction
        # halve the step until the penalized objective decreases
        step = 1.0
        for _ in range(60):
            w_new = w + step * delta[:d]
            b_new = b + step * delta[d]
            obj_new, gw_new, gb_new = logistic_objective(
                w_new, b_new, X, y, l2_strength)
            if obj_new <= obj:
                break
            step *= 0.5
        else:
            break  # no decrease possible; stop at current point
        w, b, obj, gw, gb = w_new, b_new, obj_new, gw_new, gb_new
        if obj < best[0]:
            best = (obj, w.copy(), b)
    if not converged and max(np.max(np.abs(gw), initial=0.0), abs(gb)) < tol:
        converged = True
    if not converged:
        _, w, b = best
    return LogisticModel(weights=w, intercept=b, l2_strength=l2_strength,
                         converged=converged, n_iterations=it)


def predict_proba_logistic(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.weights.shape[0]:
        raise DataError(f"expected {model.weights.shape[0]} columns, "
                        f"got {X.shape[1]}")
    return sigmoid(X @ model.weights + model.intercept)
