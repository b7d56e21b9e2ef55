"""Kernel parameter learning by stochastic minibatch cross-validation.

Each iteration draws a random minibatch, fits kernel PLS on it, and fits
the same model on several random sub-batches of that minibatch. A kernel
under which the sub-batch refits agree with the minibatch fit generalizes
across subsets, so the iteration loss measures that agreement and is
driven toward zero by gradient steps on the log kernel parameters.
Gradients come from central finite differences; the parameter dimension
is small enough that this costs only a handful of refits per step.

Two losses are available. The default, ``cv``, scores each sub-batch
model's predictions on the whole minibatch against the minibatch
responses, relative to the variance baseline: nonnegative, near one for a
kernel that predicts nothing, small when models fitted on any subset
predict the rest. The ``norm_ratio`` alternative is one minus the ratio
of the fits' squared model norms (coefficient quadratic forms in the
centered Gram), which is the classical kernel-flow quantity for full-rank
kernel regression, where the sub-batch fit is a projection of the full
fit and the ratio measures exactly the prediction discrepancy. PLS
truncation breaks that identity, letting the norm ratio go negative and
reward degenerate kernels whose sub-fits outgrow the minibatch fit, so it
is not the default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateProblemError, FlowAbortError
from .kernels import KernelSpec, center_train, kernel_matrix, train_sq_dists
from .pls import fit_pls

logger = logging.getLogger(__name__)

_NORM_FLOOR = 1e-30
_UPDATE_RULES = ("vanilla", "polyak", "nesterov")
_OBJECTIVES = ("cv", "norm_ratio")


@dataclass
class FlowConfig:
    """Settings for a kernel-flow run.

    ``batch_fraction`` of the data forms each iteration's minibatch and
    ``sub_fraction`` of the minibatch forms each sub-batch, so the
    sub-batch must still hold at least ``n_lv + 1`` rows. ``n_subsamples``
    sub-batches are averaged per iteration; more of them stabilizes the
    loss at the cost of proportionally more refits. Early stopping
    triggers after ``patience`` consecutive iterations in which the
    ``smoothing_window``-wide moving average of the loss improves by less
    than ``tol``. ``stratified`` samples batches proportionally per class
    (one-hot responses) to keep rare classes represented.
    """

    n_iter: int = 300
    n_subsamples: int = 10
    batch_fraction: float = 0.5
    sub_fraction: float = 0.5
    n_lv: int = 3
    learning_rate: float = 0.25
    momentum: float = 0.9
    nesterov_gamma: float = 0.1
    update_rule: str = "vanilla"
    seed: int | None = None
    smoothing_window: int = 20
    tol: float = 1e-5
    patience: int = 50
    stratified: bool = False
    lr_decay: bool = False
    fd_step: float = 1e-4
    objective: str = "cv"

    def validate(self, n_rows: int) -> tuple[int, int]:
        """Check settings against the dataset size; return batch sizes."""
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.n_subsamples < 1:
            raise ValueError("n_subsamples must be >= 1")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch_fraction must be in (0, 1]")
        if not 0.0 < self.sub_fraction < 1.0:
            raise ValueError("sub_fraction must be in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError("momentum must be in [0, 1]")
        if self.nesterov_gamma <= 0:
            raise ValueError("nesterov_gamma must be positive")
        if self.update_rule not in _UPDATE_RULES:
            raise ValueError(
                f"unknown update rule {self.update_rule!r}; choose from {_UPDATE_RULES}"
            )
        if self.objective not in _OBJECTIVES:
            raise ValueError(
                f"unknown objective {self.objective!r}; choose from {_OBJECTIVES}"
            )
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")
        n_batch = math.ceil(self.batch_fraction * n_rows)
        n_sub = math.ceil(self.sub_fraction * n_batch)
        if n_batch < 2:
            raise ValueError("minibatch would have fewer than 2 rows")
        if n_sub < self.n_lv + 1:
            raise ValueError(
                f"sub-batch size {n_sub} cannot support n_lv={self.n_lv}; "
                "need at least n_lv + 1 rows"
            )
        return n_batch, n_sub


@dataclass
class FlowTrace:
    """Per-iteration history of a kernel-flow run."""

    iterations: np.ndarray
    theta: np.ndarray
    loss: np.ndarray
    smoothed_loss: np.ndarray
    gradients: np.ndarray
    grad_norms: np.ndarray
    best_theta: np.ndarray
    best_smoothed_loss: float
    iterations_run: int
    n_skipped: int
    converged: bool
    param_names: list = field(default_factory=list)

    def to_table(self) -> tuple[list, np.ndarray]:
        """Header and row matrix for a flat tabular export."""
        header = ["iteration", "loss", *self.param_names, "grad_norm"]
        rows = np.column_stack(
            [self.iterations, self.loss, self.theta, self.grad_norms]
        )
        return header, rows


def _fit_gram_model(K_plain: np.ndarray, delta: float, Y: np.ndarray, n_lv: int):
    """Kernel PLS on a precomputed plain Gram block; ridge added here.

    Returns the coefficient matrix, centering statistics, and response
    column means, which is everything needed to predict other rows.
    """
    K = K_plain.copy()
    K[np.diag_indices_from(K)] += delta
    K_centered, stats = center_train(K)
    y_means = Y.mean(axis=0)
    pls = fit_pls(K_centered, Y - y_means, n_lv)
    return pls.coef, stats, y_means


def _predict_rows(K_cross_plain, stats, B, y_means):
    """Predict rows given their plain cross-kernel against the training block."""
    A = K_cross_plain - stats.col_means[None, :]
    A = A - A.mean(axis=1, keepdims=True)
    return A @ B + y_means


def _norm_ratio_losses(K_plain, Y, subsets, n_lv, spec):
    """Literal flow losses: one minus the ratio of squared model norms."""
    B_b, _, _ = _fit_gram_model(K_plain, spec.delta, Y, n_lv)
    K_ridge = K_plain.copy()
    K_ridge[np.diag_indices_from(K_ridge)] += spec.delta
    K_centered, _ = center_train(K_ridge)
    norm_b = float(np.sum(B_b * (K_centered @ B_b)))
    if not math.isfinite(norm_b):
        raise DegenerateProblemError("minibatch norm is not finite")
    if abs(norm_b) < _NORM_FLOOR:
        raise DegenerateProblemError("minibatch norm is zero; loss undefined")
    rhos = []
    for idx in subsets:
        box = np.ix_(idx, idx)
        K_sub = K_plain[box].copy()
        K_sub[np.diag_indices_from(K_sub)] += spec.delta
        K_sub_centered, _ = center_train(K_sub)
        B_s, _, _ = _fit_gram_model(K_plain[box], spec.delta, Y[idx], n_lv)
        norm_s = float(np.sum(B_s * (K_sub_centered @ B_s)))
        value = 1.0 - norm_s / norm_b
        if not math.isfinite(value):
            raise DegenerateProblemError("loss is not finite")
        rhos.append(value)
    return rhos


def _cv_losses(K_plain, Y, subsets, n_lv, spec):
    """Subset-validation losses: sub-batch models scored on the minibatch.

    Each sub-batch model predicts every minibatch row; the loss is the
    squared residual against the minibatch responses, relative to the
    variance baseline. Small exactly when models fitted on random subsets
    keep predicting the rest of the batch.
    """
    denom = float(np.sum((Y - Y.mean(axis=0)) ** 2))
    if denom < _NORM_FLOOR:
        raise DegenerateProblemError("minibatch responses are constant")
    rhos = []
    for idx in subsets:
        box = np.ix_(idx, idx)
        B_s, stats_s, ym_s = _fit_gram_model(K_plain[box], spec.delta, Y[idx], n_lv)
        u_s = _predict_rows(K_plain[:, idx], stats_s, B_s, ym_s)
        value = float(np.sum((Y - u_s) ** 2)) / denom
        if not math.isfinite(value):
            raise DegenerateProblemError("loss is not finite")
        rhos.append(value)
    return rhos


def _batch_losses(d2_batch, Y_batch, subsets, n_lv, spec, objective):
    """Average iteration loss over fixed sub-batch index sets (list order)."""
    K_plain = kernel_matrix(spec, d2_batch)
    if objective == "norm_ratio":
        rhos = _norm_ratio_losses(K_plain, Y_batch, subsets, n_lv, spec)
    else:
        rhos = _cv_losses(K_plain, Y_batch, subsets, n_lv, spec)
    return float(np.mean(rhos)), rhos


def _kpls_norm(X: np.ndarray, Y: np.ndarray, n_lv: int, spec: KernelSpec) -> float:
    """Squared model norm of an independent kernel-PLS fit."""
    X = np.asarray(X, dtype=float)
    d2 = train_sq_dists(X)
    if d2.max() <= 0.0:
        raise DegenerateProblemError("all batch rows are identical")
    K = kernel_matrix(spec, d2)
    K[np.diag_indices_from(K)] += spec.delta
    K_centered, _ = center_train(K)
    pls = fit_pls(K_centered, Y - Y.mean(axis=0), n_lv)
    B = pls.coef
    value = float(np.sum(B * (K_centered @ B)))
    if not math.isfinite(value):
        raise DegenerateProblemError("model norm is not finite")
    return value


def kf_loss(
    X_b: np.ndarray,
    Y_b: np.ndarray,
    X_s: np.ndarray,
    Y_s: np.ndarray,
    n_lv: int,
    spec: KernelSpec,
) -> float:
    """Flow loss for one minibatch / sub-batch pair.

    Both sets get an independent kernel-PLS fit (own Gram, own centering);
    the loss is one minus the ratio of their squared model norms. Zero when
    the sub-batch equals the minibatch, and always below one.
    """
    Y_b = np.atleast_2d(np.asarray(Y_b, dtype=float).T).T
    Y_s = np.atleast_2d(np.asarray(Y_s, dtype=float).T).T
    norm_b = _kpls_norm(X_b, Y_b, n_lv, spec)
    if abs(norm_b) < _NORM_FLOOR:
        raise DegenerateProblemError("minibatch norm is zero; loss undefined")
    norm_s = _kpls_norm(X_s, Y_s, n_lv, spec)
    value = 1.0 - norm_s / norm_b
    if not math.isfinite(value):
        raise DegenerateProblemError("loss is not finite")
    return value


def _fd_gradient(
    d2_batch,
    Y_batch,
    subsets,
    n_lv: int,
    spec: KernelSpec,
    theta: np.ndarray,
    step: float,
    objective: str,
    probe_hook=None,
) -> np.ndarray:
    """Central-difference gradient of the averaged loss in log-parameter space.

    The sub-batch index sets are held fixed across every probe evaluation,
    so the differences see one realization of the stochastic loss. A probe
    that fails or goes non-finite is retried once with half the step.
    """

    def avg_at(vec: np.ndarray) -> float:
        if probe_hook is not None:
            probe_hook(vec.copy(), subsets)
        value, _ = _batch_losses(
            d2_batch, Y_batch, subsets, n_lv, spec.replace_theta(vec), objective
        )
        return value

    grad = np.empty_like(theta)
    for i in range(theta.size):
        h = step
        for attempt in range(2):
            probe = theta.copy()
            try:
                probe[i] = theta[i] + h
                f_plus = avg_at(probe)
                probe[i] = theta[i] - h
                f_minus = avg_at(probe)
            except DegenerateProblemError:
                f_plus = f_minus = math.nan
            if math.isfinite(f_plus) and math.isfinite(f_minus):
                grad[i] = (f_plus - f_minus) / (2.0 * h)
                break
            if attempt == 0:
                h *= 0.5
            else:
                raise DegenerateProblemError(
                    f"loss not finite while probing parameter {i}, even at half step"
                )
    return grad


def kf_gradient(
    X_b: np.ndarray,
    Y_b: np.ndarray,
    subsample_set: list,
    n_lv: int,
    spec: KernelSpec,
    step: float = 1e-4,
    probe_hook=None,
) -> np.ndarray:
    """Gradient of the averaged norm-ratio loss at the spec's parameters.

    ``subsample_set`` is a list of index arrays into the minibatch rows;
    the same sets are reused for every finite-difference probe.
    """
    X_b = np.asarray(X_b, dtype=float)
    Y_b = np.atleast_2d(np.asarray(Y_b, dtype=float).T).T
    subsets = [np.asarray(idx, dtype=int) for idx in subsample_set]
    for idx in subsets:
        if idx.size and (idx.min() < 0 or idx.max() >= X_b.shape[0]):
            raise ValueError("subsample indices out of range")
    d2 = train_sq_dists(X_b)
    return _fd_gradient(
        d2, Y_b, subsets, n_lv, spec, spec.theta(), step, "norm_ratio",
        probe_hook=probe_hook,
    )


def update_theta(
    theta: np.ndarray,
    prev_theta: np.ndarray,
    grad: np.ndarray | None,
    rule: str,
    learning_rate: float,
    momentum: float = 0.0,
    nesterov_gamma: float | None = None,
    grad_fn=None,
) -> np.ndarray:
    """One parameter update step.

    vanilla:   theta - lr * grad
    polyak:    theta - lr * grad + momentum * (theta - prev_theta)
    nesterov:  look = theta + momentum * (theta - prev_theta);
               look - nesterov_gamma * grad_fn(look)

    The lookahead rule needs ``grad_fn`` because its gradient is evaluated
    at the shifted point, not at ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    prev_theta = np.asarray(prev_theta, dtype=float)
    if theta.shape != prev_theta.shape:
        raise ValueError("theta and prev_theta shapes differ")
    if rule == "vanilla":
        return theta - learning_rate * np.asarray(grad, dtype=float)
    if rule == "polyak":
        return (
            theta
            - learning_rate * np.asarray(grad, dtype=float)
            + momentum * (theta - prev_theta)
        )
    if rule == "nesterov":
        if grad_fn is None:
            raise ValueError("the nesterov rule requires a gradient callback")
        if nesterov_gamma is None:
            raise ValueError("the nesterov rule requires its own rate")
        look = theta + momentum * (theta - prev_theta)
        return look - nesterov_gamma * np.asarray(grad_fn(look), dtype=float)
    raise ValueError(f"unknown update rule {rule!r}; choose from {_UPDATE_RULES}")


def _class_labels(Y: np.ndarray) -> np.ndarray:
    return np.argmax(Y, axis=1)


def _stratified_choice(
    rng: np.random.Generator, labels: np.ndarray, size: int
) -> np.ndarray:
    """Proportional per-class sample of ``size`` indices, largest remainders first."""
    classes, counts = np.unique(labels, return_counts=True)
    exact = size * counts / labels.size
    base = np.floor(exact).astype(int)
    shortfall = size - int(base.sum())
    order = np.argsort(-(exact - base), kind="stable")
    base[order[:shortfall]] += 1
    picks = []
    for cls, take in zip(classes, base):
        pool = np.flatnonzero(labels == cls)
        take = min(take, pool.size)
        if take:
            picks.append(rng.choice(pool, size=take, replace=False))
    return np.sort(np.concatenate(picks))


def _sample_indices(
    rng: np.random.Generator, n: int, size: int, labels: np.ndarray | None
) -> np.ndarray:
    if labels is None:
        return np.sort(rng.choice(n, size=size, replace=False))
    return _stratified_choice(rng, labels, size)


def run_kernel_flows(
    X: np.ndarray,
    Y: np.ndarray,
    config: FlowConfig,
    spec0: KernelSpec,
) -> tuple[KernelSpec, FlowTrace]:
    """Learn kernel parameters by stochastic minibatch descent.

    Returns the spec whose smoothed loss was lowest along the run, plus the
    full trace. Deterministic for a fixed seed. Iterations whose loss is
    degenerate (for example a sub-batch that drew a single class) are
    resampled once and then skipped; a run with more than half of its
    iterations skipped aborts.
    """
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float).T).T
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y row counts differ")
    n = X.shape[0]
    n_batch, n_sub = config.validate(n)
    labels = _class_labels(Y) if config.stratified else None

    rng = np.random.default_rng(config.seed)
    theta = spec0.theta()
    prev_theta = theta.copy()

    it_rec, theta_rec, loss_rec, smooth_rec, grad_rec, gnorm_rec = [], [], [], [], [], []
    best_smoothed = math.inf
    best_theta = theta.copy()
    stall = 0
    n_skipped = 0
    converged = False
    iterations_run = 0

    for it in range(config.n_iter):
        iterations_run = it + 1
        result = None
        for attempt in range(2):
            batch_idx = _sample_indices(rng, n, n_batch, labels)
            X_b = X[batch_idx]
            Y_b = Y[batch_idx]
            batch_labels = labels[batch_idx] if labels is not None else None
            subsets = [
                _sample_indices(rng, n_batch, n_sub, batch_labels)
                for _ in range(config.n_subsamples)
            ]
            d2_b = train_sq_dists(X_b)
            spec_now = spec0.replace_theta(theta)
            try:
                rho_bar, _ = _batch_losses(
                    d2_b, Y_b, subsets, config.n_lv, spec_now, config.objective
                )
                rate = config.learning_rate
                gamma = config.nesterov_gamma
                if config.lr_decay:
                    scale = 1.0 / math.sqrt(it + 1)
                    rate *= scale
                    gamma *= scale
                if config.update_rule == "nesterov":
                    seen = {}

                    def grad_fn(vec, _seen=seen):
                        g = _fd_gradient(
                            d2_b, Y_b, subsets, config.n_lv, spec0, vec,
                            config.fd_step, config.objective,
                        )
                        _seen["grad"] = g
                        return g

                    new_theta = update_theta(
                        theta,
                        prev_theta,
                        None,
                        "nesterov",
                        rate,
                        config.momentum,
                        gamma,
                        grad_fn=grad_fn,
                    )
                    grad = seen["grad"]
                else:
                    grad = _fd_gradient(
                        d2_b, Y_b, subsets, config.n_lv, spec0, theta,
                        config.fd_step, config.objective,
                    )
                    new_theta = update_theta(
                        theta,
                        prev_theta,
                        grad,
                        config.update_rule,
                        rate,
                        config.momentum,
                    )
                result = (rho_bar, grad, new_theta)
                break
            except DegenerateProblemError as exc:
                if attempt == 0:
                    logger.debug("iteration %d degenerate (%s); resampling", it, exc)
                else:
                    logger.warning("iteration %d skipped: %s", it, exc)
        if result is None:
            n_skipped += 1
            continue

        rho_bar, grad, new_theta = result
        it_rec.append(it)
        theta_rec.append(theta.copy())
        loss_rec.append(rho_bar)
        grad_rec.append(grad)
        gnorm_rec.append(float(np.linalg.norm(grad)))

        window = loss_rec[-config.smoothing_window :]
        smoothed = float(np.mean(window))
        smooth_rec.append(smoothed)
        if smoothed < best_smoothed - config.tol:
            stall = 0
        else:
            stall += 1
        if smoothed < best_smoothed:
            best_smoothed = smoothed
            best_theta = theta.copy()

        prev_theta, theta = theta, new_theta

        if stall >= config.patience:
            converged = True
            break

    if n_skipped > 0.5 * iterations_run:
        raise FlowAbortError(
            f"{n_skipped} of {iterations_run} iterations were degenerate; "
            "the kernel family or batch settings do not suit this data"
        )

    dim = theta.size
    trace = FlowTrace(
        iterations=np.asarray(it_rec, dtype=int),
        theta=np.asarray(theta_rec).reshape(len(theta_rec), dim),
        loss=np.asarray(loss_rec),
        smoothed_loss=np.asarray(smooth_rec),
        gradients=np.asarray(grad_rec).reshape(len(grad_rec), dim),
        grad_norms=np.asarray(gnorm_rec),
        best_theta=best_theta,
        best_smoothed_loss=best_smoothed,
        iterations_run=iterations_run,
        n_skipped=n_skipped,
        converged=converged,
        param_names=spec0.param_names(),
    )
    return spec0.replace_theta(best_theta), trace


def loss_surface(
    X: np.ndarray,
    Y: np.ndarray,
    specs: list,
    config: FlowConfig,
    n_repeats: int = 5,
) -> list:
    """Averaged loss at fixed parameter settings, for mapping the loss landscape.

    Every spec in ``specs`` is evaluated on the same ``n_repeats`` sampled
    minibatch/sub-batch draws (so points are comparable), each draw
    averaging ``config.n_subsamples`` sub-batches. Returns one
    ``(spec, mean, std)`` row per grid point; degenerate evaluations
    contribute NaN.
    """
    if not specs:
        raise ValueError("empty parameter grid")
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float).T).T
    n = X.shape[0]
    n_batch, n_sub = config.validate(n)
    labels = _class_labels(Y) if config.stratified else None

    draws = []
    for child in np.random.SeedSequence(config.seed).spawn(n_repeats):
        rng = np.random.default_rng(child)
        batch_idx = _sample_indices(rng, n, n_batch, labels)
        batch_labels = labels[batch_idx] if labels is not None else None
        subsets = [
            _sample_indices(rng, n_batch, n_sub, batch_labels)
            for _ in range(config.n_subsamples)
        ]
        draws.append((train_sq_dists(X[batch_idx]), Y[batch_idx], subsets))

    rows = []
    for spec in specs:
        values = []
        for d2_b, Y_b, subsets in draws:
            try:
                rho_bar, _ = _batch_losses(
                    d2_b, Y_b, subsets, config.n_lv, spec, config.objective
                )
            except DegenerateProblemError:
                rho_bar = math.nan
            values.append(rho_bar)
        values = np.asarray(values)
        good = values[np.isfinite(values)]
        if good.size:
            rows.append((spec, float(good.mean()), float(good.std())))
        else:
            rows.append((spec, math.nan, math.nan))
    return rows
