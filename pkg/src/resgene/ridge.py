"""Closed-form ridge regression over the encoded SNP matrix.

Serves as the linear sanity baseline for the cross-validation harness.
The fit solves the regularized normal equations on centered data with a
Cholesky factorization, switching to the dual (n x n) system when there
are more SNPs than rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import FitError
from .stats import kfold_split


@dataclass(frozen=True)
class RidgeModel:
    """Fitted weights and intercept for a given penalty."""

    weights: np.ndarray
    intercept: float
    lam: float


def fit_ridge(x, y, lam: float, fit_intercept: bool = True) -> RidgeModel:
    """Solve w = (X'X + lam*I)^-1 X'y on (optionally centered) data.

    With ``fit_intercept`` the columns of X and the targets are centered
    first and the intercept is recovered as ybar - xbar'w; otherwise the
    intercept is fixed at zero.  For d >= n a positive penalty is required
    (the primal system is singular at lam = 0).

    Raises
    ------
    FitError
        Singular system at lam = 0, or a negative penalty.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise FitError(f"X shape {x.shape} incompatible with {y.size} targets")
    if lam < 0:
        raise FitError(f"penalty must be >= 0, got {lam}")
    n, d = x.shape
    if lam == 0.0 and d >= n:
        raise FitError(
            f"singular system: lam=0 needs more rows ({n}) than features ({d})"
        )

    if fit_intercept:
        x_mean = x.mean(axis=0)
        y_mean = float(y.mean())
        xc = x - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(d)
        y_mean = 0.0
        xc, yc = x, y

    try:
        if d <= n:
            gram = xc.T @ xc
            gram[np.diag_indices_from(gram)] += lam
            w = linalg.solve(gram, xc.T @ yc, assume_a="pos")
        else:
            # Dual form: w = X'(XX' + lam*I)^-1 y, identical solution.
            kernel = xc @ xc.T
            kernel[np.diag_indices_from(kernel)] += lam
            alpha = linalg.solve(kernel, yc, assume_a="pos")
            w = xc.T @ alpha
    except linalg.LinAlgError as exc:
        raise FitError(f"singular ridge system (lam={lam}): {exc}") from exc

    intercept = y_mean - float(x_mean @ w) if fit_intercept else 0.0
    return RidgeModel(weights=w, intercept=intercept, lam=lam)


def predict_ridge(model: RidgeModel, x) -> np.ndarray:
    """Evaluate Xw + intercept."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.size:
        raise FitError(
            f"X has {x.shape[1] if x.ndim == 2 else '?'} columns, "
            f"model expects {model.weights.size}"
        )
    return x @ model.weights + model.intercept


DEFAULT_LAMBDA_GRID = (0.1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class RidgePredictor:
    model: RidgeModel

    def __call__(self, rows) -> np.ndarray:
        return predict_ridge(self.model, np.asarray(rows, dtype=np.float64))


@dataclass(frozen=True)
class RidgeModelSpec:
    """Cross-validation plug-in: inner-CV penalty selection, then one fit.

    The penalty is chosen from the grid by mean squared error over an
    inner split of the training fold (smallest penalty wins ties), then
    the model is refit on the whole training fold.
    """

    lambdas: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    inner_folds: int = 5

    def __call__(self, x_rows, y, fold_seed: int) -> RidgePredictor:
        x = np.asarray(x_rows, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        lam = self.select_lambda(x, y, fold_seed)
        return RidgePredictor(model=fit_ridge(x, y, lam))

    def select_lambda(self, x, y, seed: int) -> float:
        n = len(y)
        k = min(self.inner_folds, n)
        if k < 2:
            return self.lambdas[len(self.lambdas) // 2]
        folds = kfold_split(n, k, seed)
        best_lam, best_mse = None, np.inf
        for lam in self.lambdas:
            sq_err, count = 0.0, 0
            for test_idx in folds:
                train_idx = np.setdiff1d(np.arange(n), test_idx,
                                         assume_unique=True)
                try:
                    model = fit_ridge(x[train_idx], y[train_idx], lam)
                except FitError:
                    sq_err, count = np.inf, 1
                    break
                resid = predict_ridge(model, x[test_idx]) - y[test_idx]
                sq_err += float(resid @ resid)
                count += len(test_idx)
            mse = sq_err / max(count, 1)
            if mse < best_mse:
                best_lam, best_mse = lam, mse
        return best_lam if best_lam is not None else self.lambdas[-1]
