"""Blind per-frame modulation classification with one multiclass SVM per hypothesis.

Each candidate scheme is fitted on the power-normalized block with
nearest-point pseudo labels. The fit yields its margin violators (the error
signal) and, through the SINR estimator's bias correction, a noise variance
for that hypothesis. Hypotheses are then compared by a kernel log-likelihood:
the block's RBF-kernel density around the scaled constellation, with kernel
width set by that hypothesis's own noise estimate.

Margin-violation rate alone cannot separate nested QAM grids (every QPSK
boundary is also a 16QAM boundary, so the coarser grid never has more
violators); it is still computed and reported, and is available as the
selection rule via ``AmcConfig(selection="violation")``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .phy import Scheme, constellation, nearest_point
from .sinr import extract_error_signal, noise_from_error_power
from .svm import KernelParams, OneVsRest, auto_gram, kernel_matrix, median_kernel_width, train_multiclass

__all__ = [
    "PIPELINE_KERNEL",
    "AmcConfig",
    "AmcHypothesisFit",
    "AmcResult",
    "pseudo_label",
    "fit_hypothesis",
    "classify",
]

# A small box bound keeps the soft margin wide enough to enclose the noise
# clouds, so nearly every symbol reports as a violator and the error signal
# sees the whole frame.
PIPELINE_KERNEL = KernelParams(regularization=0.01)

ALL_SCHEMES = (Scheme.QPSK, Scheme.QAM16, Scheme.QAM64)


@dataclass(frozen=True)
class AmcConfig:
    kernel: KernelParams = PIPELINE_KERNEL
    selection: str = "likelihood"  # or "violation"
    llr_margin: float = 5.0  # nats a higher order must win by

    def __post_init__(self):
        if self.selection not in ("likelihood", "violation"):
            raise ValueError(f"unknown selection rule {self.selection!r}")
        if self.llr_margin < 0:
            raise ValueError("llr_margin must be >= 0")


@dataclass(frozen=True, eq=False)
class AmcHypothesisFit:
    scheme: Scheme
    model: OneVsRest | None  # None when pseudo labelling left a class empty
    pseudo_labels: np.ndarray
    normalized: np.ndarray
    margins: np.ndarray  # own-class functional margin y f(x) per symbol
    violation_rate: float
    sv_count: int
    noise_variance: float  # normalized-scale estimate under this hypothesis
    log_likelihood: float
    margin_tol: float = 0.0  # margins are known to within the solver's KKT tolerance


@dataclass(frozen=True, eq=False)
class AmcResult:
    chosen: Scheme
    fits: dict = field(default_factory=dict)
    success: bool | None = None

    @property
    def chosen_fit(self) -> AmcHypothesisFit:
        return self.fits[self.chosen]


def pseudo_label(block, scheme) -> tuple[np.ndarray, np.ndarray]:
    """Scale the block to unit mean power and label each symbol by its nearest point."""
    block = np.asarray(block, dtype=complex).ravel()
    if block.size == 0:
        raise ValueError("empty block")
    power = float(np.mean(np.abs(block) ** 2))
    if power == 0.0:
        raise ValueError("zero-power block cannot be normalized")
    x = block / np.sqrt(power)
    return nearest_point(x, constellation(scheme).points), x


def _features(x):
    return np.column_stack((x.real, x.imag))


def _log_likelihood(x, scheme, noise_variance):
    pts = constellation(scheme).points
    a = 1.0 / np.sqrt(1.0 + noise_variance)
    w = noise_variance / (1.0 + noise_variance)
    d2 = np.abs(x[:, None] - a * pts[None, :]) ** 2
    per_symbol = logsumexp(-d2 / w, axis=1) - np.log(pts.size)
    return float(np.sum(per_symbol) - x.size * np.log(np.pi * w))


def fit_hypothesis(block, scheme, params: KernelParams = PIPELINE_KERNEL, *, kernel=None) -> AmcHypothesisFit:
    """Train the one-vs-rest SVM for one hypothesis and score how well it fits.

    ``kernel`` may carry the Gram matrix of the normalized block (it depends
    only on the block, so one matrix serves every hypothesis).
    """
    scheme = Scheme.parse(scheme)
    labels, x = pseudo_label(block, scheme)
    n_classes = constellation(scheme).size
    feats = _features(x)
    if params.kernel_width is None:
        params = replace(params, kernel_width=median_kernel_width(feats))

    if np.unique(labels).size < n_classes:
        # implausible hypothesis: no model, every symbol counts as a violator
        model, margins, rate, n_sv = None, np.zeros(x.size), 1.0, 0
    else:
        if kernel is None:
            kernel = kernel_matrix(feats, feats, params.kernel_width)
        model = train_multiclass(feats, labels, params, kernel=kernel)
        scores = model.scores(kernel_rows=kernel)
        margins = scores[np.arange(x.size), np.searchsorted(model.classes, labels)]
        rate = float(np.mean(margins < 1.0 - params.tol))
        n_sv = int(sum(m.multipliers.size for m in model.models))

    partial = AmcHypothesisFit(scheme, model, labels, x, margins, rate, n_sv, np.nan, np.nan, params.tol)
    err = extract_error_signal(block, partial)
    measured = float(np.sum(np.abs(err.deviations) ** 2)) / x.size
    nv = noise_from_error_power(scheme, measured)
    return AmcHypothesisFit(
        scheme, model, labels, x, margins, rate, n_sv, nv, _log_likelihood(x, scheme, nv), params.tol
    )


def classify(block, candidates=ALL_SCHEMES, config: AmcConfig = AmcConfig(), truth=None) -> AmcResult:
    """Fit every candidate and pick one.

    Likelihood rule: walk candidates from low to high order; a higher order
    replaces the current choice only if its log-likelihood is larger by more
    than ``llr_margin``. Violation rule: smallest violation rate. Ties always
    go to the lower order.
    """
    cands = sorted({Scheme.parse(c) for c in candidates}, key=lambda s: s.order)
    if not cands:
        raise ValueError("need at least one candidate scheme")
    _, x = pseudo_label(block, cands[0])
    feats = _features(x)
    params = config.kernel
    if params.kernel_width is None:
        width, gram = auto_gram(feats)
        params = replace(params, kernel_width=width)
    else:
        gram = kernel_matrix(feats, feats, params.kernel_width)
    fits = {s: fit_hypothesis(block, s, params, kernel=gram) for s in cands}

    best = cands[0]
    for s in cands[1:]:
        if config.selection == "likelihood":
            better = fits[s].log_likelihood > fits[best].log_likelihood + config.llr_margin
        else:
            better = fits[s].violation_rate < fits[best].violation_rate
        if better:
            best = s
    success = None if truth is None else best is Scheme.parse(truth)
    return AmcResult(best, fits, success)
