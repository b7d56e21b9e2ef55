"""SIMPLS: partial least-squares by covariance deflation.

Latent variables are extracted one at a time from the cross-covariance
between predictors and responses. Each factor takes the dominant principal
direction of the current covariance, scores and loadings are computed from
it, and the covariance is deflated by projecting out the span of the
X-side loadings before the next extraction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateProblemError

# Score-norm underflow guard: factors with t't below this (times n) are dropped.
_SCORE_NORM_FLOOR = 1e-12
# Relative Frobenius threshold under which the deflated covariance counts as exhausted.
_COV_EXHAUSTED_REL = 1e-14
# Condition-number ceiling for the loadings-weights system.
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class PlsModel:
    """Fitted SIMPLS factors and regression coefficients.

    Attributes
    ----------
    weights : ndarray, shape (p, a)
        Rotated X-side loadings, one column per latent variable.
    x_loadings : ndarray, shape (p, a)
    y_loadings : ndarray, shape (m, a)
    x_scores : ndarray, shape (n, a)
    y_scores : ndarray, shape (n, a)
    coef : ndarray, shape (p, m)
        Regression coefficients mapping predictors to responses.
    n_lv : int
        Number of latent variables actually extracted (may be fewer than
        requested when rank is exhausted).
    """

    weights: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    x_scores: np.ndarray
    y_scores: np.ndarray
    coef: np.ndarray
    n_lv: int


def first_pc(C: np.ndarray) -> np.ndarray:
    """Dominant right singular direction of a covariance matrix.

    Parameters
    ----------
    C : ndarray, shape (m, p)

    Returns
    -------
    ndarray, shape (p,)
        Unit vector. The sign is fixed so the entry of largest magnitude
        is positive, which makes the result deterministic.

    Raises
    ------
    DegenerateProblemError
        If ``C`` is identically zero (rank exhausted).
    ValueError
        If ``C`` contains non-finite values.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if not np.all(np.isfinite(C)):
        raise ValueError("covariance matrix contains non-finite values")
    if not C.any():
        raise DegenerateProblemError("covariance matrix is zero: rank exhausted")
    _, _, vt = np.linalg.svd(C, full_matrices=False)
    w = vt[0]
    if w[np.argmax(np.abs(w))] < 0:
        w = -w
    return w


def fit_pls(X: np.ndarray, Y: np.ndarray, n_lv: int) -> PlsModel:
    """Fit a SIMPLS model with up to ``n_lv`` latent variables.

    Parameters
    ----------
    X : ndarray, shape (n, p)
    Y : ndarray, shape (n, m)
        Response matrix; a 1-D vector is treated as a single column.
    n_lv : int
        Requested number of latent variables. Values above ``min(n, p)``
        are clamped with a warning. Extraction stops early if the score
        norm underflows or the deflated covariance is exhausted.

    Returns
    -------
    PlsModel
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("X and Y must be 2-D arrays")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("X and Y must be finite")
    if n_lv < 1:
        raise ValueError(f"n_lv must be >= 1, got {n_lv}")

    n, p = X.shape
    m = Y.shape[1]
    max_lv = min(n, p)
    if n_lv > max_lv:
        warnings.warn(
            f"n_lv={n_lv} exceeds min(n, p)={max_lv}; clamping", stacklevel=2
        )
        n_lv = max_lv

    C = Y.T @ X  # (m, p) cross-covariance
    c_norm0 = np.linalg.norm(C)

    ws, ts, qs, us, ps = [], [], [], [], []
    for _ in range(n_lv):
        if np.linalg.norm(C) <= _COV_EXHAUSTED_REL * c_norm0:
            break
        try:
            w = first_pc(C)
        except DegenerateProblemError:
            break
        t = X @ w
        tt = t @ t
        if tt < _SCORE_NORM_FLOOR * n:
            break
        q = Y.T @ t / tt
        qq = q @ q
        u = Y @ q / qq if qq > 0 else np.zeros(n)
        pv = X.T @ t / tt

        ws.append(w)
        ts.append(t)
        qs.append(q)
        us.append(u)
        ps.append(pv)

        # Deflate: remove the span of the accumulated X-loadings from the
        # covariance rows so the next direction is extracted from what is left.
        P = np.column_stack(ps)
        CP = C @ P
        C = C - CP @ np.linalg.solve(P.T @ P, P.T)

    if not ws:
        raise DegenerateProblemError("rank exhausted before extracting any factor")

    W = np.column_stack(ws)
    P = np.column_stack(ps)
    Q = np.column_stack(qs)
    T = np.column_stack(ts)
    U = np.column_stack(us)

    PtW = P.T @ W
    if np.linalg.cond(PtW) > _MAX_CONDITION:
        raise DegenerateProblemError(
            "loadings-weights system is too ill-conditioned to solve"
        )
    B = W @ np.linalg.solve(PtW, Q.T)

    return PlsModel(
        weights=W,
        x_loadings=P,
        y_loadings=Q,
        x_scores=T,
        y_scores=U,
        coef=B,
        n_lv=W.shape[1],
    )


def predict_pls(model: PlsModel, X_new: np.ndarray) -> np.ndarray:
    """Predict responses for new rows: ``X_new @ coef``."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2:
        raise ValueError("X_new must be 2-D")
    if X_new.shape[1] != model.coef.shape[0]:
        raise ValueError(
            f"X_new has {X_new.shape[1]} columns, model expects {model.coef.shape[0]}"
        )
    return X_new @ model.coef
