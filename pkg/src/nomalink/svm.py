"""Soft-margin kernel SVM trained in the dual with an SMO solver.

The dual problem is

    max  sum(alpha) - 1/2 sum_nm alpha_n alpha_m y_n y_m k(x_n, x_m)
    s.t. sum(alpha * y) = 0,  0 <= alpha <= c

with the RBF kernel k(x, x') = exp(-||x - x'||^2 / kernel_width). Pairs are
chosen by the maximal-violating-pair rule and updated analytically.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numba as nb
import numpy as np

__all__ = [
    "KernelParams",
    "SvmModel",
    "OneVsRest",
    "SolverError",
    "rbf_kernel",
    "kernel_matrix",
    "median_kernel_width",
    "auto_gram",
    "dual_objective",
    "train_binary",
    "decide",
    "train_multiclass",
    "dump_model",
    "load_model",
]


class SolverError(RuntimeError):
    """SMO stopped at ``max_iter`` before the KKT gap reached ``tol``.

    ``model`` holds the best iterate (the last one; SMO never decreases the
    dual objective) and ``residual`` its maximal-violating-pair gap.
    """

    def __init__(self, message, model, residual):
        super().__init__(message)
        self.model = model
        self.residual = residual


@dataclass(frozen=True)
class KernelParams:
    """RBF width and box constraint.

    ``kernel_width=None`` resolves to ``median_kernel_width`` of the training
    set when a model is trained; the trained model stores the resolved value.
    """

    kernel_width: float | None = None
    regularization: float = 10.0
    tol: float = 1e-3
    max_iter: int = 100_000

    def __post_init__(self):
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise ValueError(f"kernel_width must be > 0, got {self.kernel_width}")
        if not self.regularization > 0:
            raise ValueError(f"regularization must be > 0, got {self.regularization}")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def rbf_kernel(x, x2, kernel_width: float) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    if not kernel_width > 0:
        raise ValueError("kernel_width must be > 0")
    d = x - x2
    return float(np.exp(-np.dot(d, d) / kernel_width))


def _sq_dists(a, b):
    d = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    np.maximum(d, 0.0, out=d)
    return d


def kernel_matrix(a, b, kernel_width: float) -> np.ndarray:
    """Gram matrix ``K[i, j] = k(a[i], b[j])``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    k = _sq_dists(a, b)
    k /= -kernel_width
    np.exp(k, out=k)
    if a is b:
        # exact symmetry regardless of rounding in the expansion above
        k = 0.5 * (k + k.T)
        np.fill_diagonal(k, 1.0)
    return k


def _median_width(sq, n):
    if n < 2:
        return 1.0
    med = float(np.median(sq[np.triu_indices(n, 1)]))
    return 2.0 * med if med > 0 else 1.0


def median_kernel_width(x) -> float:
    """Twice the median pairwise squared distance (falls back to 1.0)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return _median_width(_sq_dists(x, x), x.shape[0])


def auto_gram(x) -> tuple[float, np.ndarray]:
    """Median-heuristic width and the training Gram matrix, sharing one distance pass.

    Equal to ``(w, kernel_matrix(x, x, w))`` with ``w = median_kernel_width(x)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sq = _sq_dists(x, x)
    width = _median_width(sq, x.shape[0])
    k = np.exp(sq / -width)
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return width, k


def dual_objective(alpha, y, k) -> float:
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ k @ ay)


@nb.njit(cache=True)
def _smo(k, y, c, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a at a = 0
    gap = np.inf
    it = 0
    while it < max_iter:
        # maximal violating pair
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            v = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < c) or (y[t] < 0 and alpha[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < c):
                if v < gmin:
                    gmin = v
                    j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap <= tol:
            break
        it += 1

        ai_old = alpha[i]
        aj_old = alpha[j]
        qij = y[i] * y[j] * k[i, j]
        if y[i] != y[j]:
            quad = k[i, i] + k[j, j] + 2.0 * qij
            if quad <= 0.0:
                quad = 1e-12
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            quad = k[i, i] + k[j, j] - 2.0 * qij
            if quad <= 0.0:
                quad = 1e-12
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            grad[t] += y[t] * (y[i] * k[t, i] * dai + y[j] * k[t, j] * daj)

    # bias: average over free SVs, else midpoint of the feasible interval
    nfree = 0
    sfree = 0.0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= c:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, grad, -rho, it, gap


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained binary SVM, reproducible from its stored fields alone."""

    support_vectors: np.ndarray
    multipliers: np.ndarray
    sv_labels: np.ndarray
    bias: float
    params: KernelParams
    n_iter: int = 0
    kkt_gap: float = 0.0
    sv_index: np.ndarray | None = None  # rows of the training set, when known

    def decision_function(self, x, kernel_rows=None) -> np.ndarray:
        """Scores ``w0 + sum alpha_n y_n k(sv_n, x)`` for each row of ``x``.

        ``kernel_rows`` may carry a precomputed ``k(x, sv)`` matrix.
        """
        if kernel_rows is None:
            kernel_rows = kernel_matrix(x, self.support_vectors, self.params.kernel_width)
        return kernel_rows @ (self.multipliers * self.sv_labels) + self.bias


def _resolve(params: KernelParams, x) -> KernelParams:
    if params.kernel_width is None:
        return replace(params, kernel_width=median_kernel_width(x))
    return params


def train_binary(x, y, params: KernelParams = KernelParams(), kernel=None) -> SvmModel:
    """Train a binary soft-margin SVM on ``x`` (n, d) with labels in {-1, +1}.

    ``kernel`` may pass a precomputed n x n Gram matrix; it must match the
    resolved kernel width.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise ValueError("examples and labels differ in length")
    if x.shape[0] < 2:
        raise ValueError("need at least two examples")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both classes must be present")
    params = _resolve(params, x)
    if kernel is None:
        kernel = kernel_matrix(x, x, params.kernel_width)
    alpha, _, bias, n_iter, gap = _smo(
        np.ascontiguousarray(kernel), y, params.regularization, params.tol, params.max_iter
    )
    sv = alpha > 0
    model = SvmModel(
        support_vectors=x[sv].copy(),
        multipliers=alpha[sv].copy(),
        sv_labels=y[sv].copy(),
        bias=float(bias),
        params=params,
        n_iter=int(n_iter),
        kkt_gap=float(gap),
        sv_index=np.flatnonzero(sv),
    )
    if gap > params.tol:
        raise SolverError(
            f"SMO did not converge in {params.max_iter} iterations (gap {gap:.3g})",
            model,
            float(gap),
        )
    return model


def decide(model: SvmModel, x) -> tuple[float, int]:
    """Score and label of one example; a score of exactly 0 maps to +1."""
    score = float(model.decision_function(np.atleast_2d(np.asarray(x, dtype=float)))[0])
    return score, 1 if score >= 0 else -1


@dataclass(frozen=True, eq=False)
class OneVsRest:
    """One binary model per class; prediction is the argmax of class scores."""

    classes: np.ndarray
    models: tuple[SvmModel, ...]

    def scores(self, x=None, kernel_rows=None) -> np.ndarray:
        """(n, n_classes) score matrix.

        Pass ``kernel_rows = k(x, train)`` (e.g. the training Gram matrix) to
        skip kernel evaluation; each model takes its ``sv_index`` columns.
        """
        if kernel_rows is None:
            x = np.atleast_2d(np.asarray(x, dtype=float))
            n = x.shape[0]
        else:
            n = kernel_rows.shape[0]
            if all(m.sv_index is not None for m in self.models):
                # one dense product instead of a gather per model
                coef = np.zeros((kernel_rows.shape[1], len(self.models)))
                for i, m in enumerate(self.models):
                    coef[m.sv_index, i] = m.multipliers * m.sv_labels
                return kernel_rows @ coef + np.array([m.bias for m in self.models])
        out = np.empty((n, len(self.models)))
        for i, m in enumerate(self.models):
            rows = None if kernel_rows is None else kernel_rows[:, m.sv_index]
            out[:, i] = m.decision_function(x, kernel_rows=rows)
        return out

    def predict(self, x) -> np.ndarray:
        return self.classes[np.argmax(self.scores(x), axis=1)]


def train_multiclass(x, labels, params: KernelParams = KernelParams(), kernel=None, classes=None) -> OneVsRest:
    """One-vs-rest training; every class needs at least one example.

    ``classes`` optionally names the expected classes; one without any
    example is an error.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    labels = np.asarray(labels)
    if x.shape[0] != labels.shape[0]:
        raise ValueError("examples and labels differ in length")
    present = np.unique(labels)
    if classes is None:
        classes = present
    else:
        classes = np.unique(np.asarray(classes))
        missing = np.setdiff1d(classes, present)
        if missing.size:
            raise ValueError(f"classes without examples: {missing.tolist()}")
        if np.setdiff1d(present, classes).size:
            raise ValueError("labels outside the declared classes")
    if classes.size < 2:
        raise ValueError("need at least two classes")
    params = _resolve(params, x)
    if kernel is None:
        kernel = kernel_matrix(x, x, params.kernel_width)
    models = tuple(
        train_binary(x, np.where(labels == cl, 1.0, -1.0), params, kernel=kernel) for cl in classes
    )
    return OneVsRest(classes=classes, models=models)


# Text dump: a header line of scalars followed by one row per support vector.
#   # svm bias=<w0> kernel_width=<gamma> regularization=<c> dim=<d>
#   x_1,...,x_d,alpha,y


def dump_model(model: SvmModel) -> str:
    d = model.support_vectors.shape[1]
    buf = io.StringIO()
    buf.write(
        f"# svm bias={model.bias!r} kernel_width={model.params.kernel_width!r} "
        f"regularization={model.params.regularization!r} dim={d}\n"
    )
    for sv, a, y in zip(model.support_vectors, model.multipliers, model.sv_labels):
        buf.write(",".join(repr(float(v)) for v in sv) + f",{float(a)!r},{int(y)}\n")
    return buf.getvalue()


def load_model(text: str) -> SvmModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# svm"):
        raise ValueError("missing svm header line")
    head = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
    d = int(head["dim"])
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, d + 2)
    params = KernelParams(
        kernel_width=float(head["kernel_width"]), regularization=float(head["regularization"])
    )
    return SvmModel(
        support_vectors=rows[:, :d],
        multipliers=rows[:, d],
        sv_labels=rows[:, d + 1],
        bias=float(head["bias"]),
        params=params,
    )
