"""Entropy-balancing weights: match covariate means, stay close to uniform.

Minimizes sum w_j log(n w_j) subject to the weights summing to one and the
weighted covariate means hitting the targets. The solution has exponential
form in a dual coefficient vector, found by Newton iterations on the
log-sum-exp dual with step halving.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..errors import ConvergenceError, InfeasibleTargetsError, SchemaError

GRAD_TOL = 1e-10
MAX_ITER = 500


def entropy_balance_weights(
    covariates: np.ndarray, target_means: np.ndarray
) -> np.ndarray:
    """Strictly positive weights summing to one with exact mean balance.

    Raises :class:`InfeasibleTargetsError` when the targets lie outside the
    convex hull of the sample rows (no weights can reach them), and
    :class:`ConvergenceError` when the dual solver stalls, which happens
    when targets sit exactly on the hull boundary.
    """
    X = np.atleast_2d(np.asarray(covariates, dtype=float))
    if X.ndim != 2:
        raise SchemaError("covariates must be a 2-D array")
    n, k = X.shape
    target = np.broadcast_to(np.asarray(target_means, dtype=float), (k,))
    if n == 0:
        raise SchemaError("empty sample")
    if not (np.isfinite(X).all() and np.isfinite(target).all()):
        raise SchemaError("covariates and targets must be finite")

    # scale-invariant internal coordinates: center at the target, scale by
    # column spread so affine changes of the covariates leave iterates alone
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    D = (X - target) / scale

    zero_cols = np.abs(D).max(axis=0) == 0.0
    if zero_cols.all():
        return np.full(n, 1.0 / n)
    Dw = D[:, ~zero_cols]
    for j in np.flatnonzero(zero_cols):
        if abs(X[:, j].mean() - target[j]) > 0:
            raise InfeasibleTargetsError(
                f"column {j} is constant and does not equal its target"
            )

    _check_feasible(Dw)

    def weights_at(lam):
        logits = Dw @ lam
        logits -= logits.max()
        w = np.exp(logits)
        return w / w.sum()

    def grad_norm(lam):
        return float(np.linalg.norm(weights_at(lam) @ Dw))

    lam = np.zeros(Dw.shape[1])
    for _ in range(MAX_ITER):
        w = weights_at(lam)
        grad = w @ Dw
        gn = float(np.linalg.norm(grad))
        if gn < GRAD_TOL:
            return _finalize(w)
        centered = Dw - w @ Dw
        hess = (centered * w[:, None]).T @ centered
        try:
            step = np.linalg.solve(hess + 1e-14 * np.eye(len(lam)), grad)
        except np.linalg.LinAlgError:
            step = grad
        # halve until the dual improves; near the optimum the dual is float
        # flat, so a shrinking gradient norm also counts as progress
        current = _dual(Dw, lam)
        scale_step = 1.0
        for _ in range(60):
            trial = lam - scale_step * step
            if _dual(Dw, trial) < current or grad_norm(trial) < 0.5 * gn:
                lam = trial
                break
            scale_step *= 0.5
        else:
            break
    raise ConvergenceError(
        f"entropy balancing did not reach gradient norm {GRAD_TOL} in {MAX_ITER} iterations"
    )


def _dual(D: np.ndarray, lam: np.ndarray) -> float:
    logits = D @ lam
    peak = logits.max()
    return float(peak + np.log(np.exp(logits - peak).sum()))


def _finalize(w: np.ndarray) -> np.ndarray:
    if (w <= 0).any():
        raise ConvergenceError("entropy weights collapsed to zero")
    return w / w.sum()


def _check_feasible(D: np.ndarray) -> None:
    """LP feasibility of {w >= 0, sum w = 1, D'w = 0}."""
    n, k = D.shape
    A_eq = np.vstack([D.T, np.ones((1, n))])
    b_eq = np.concatenate([np.zeros(k), [1.0]])
    res = linprog(
        c=np.zeros(n),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * n,
        method="highs",
    )
    if not res.success:
        raise InfeasibleTargetsError(
            "infeasible targets: outside the convex hull of the sample"
        )
