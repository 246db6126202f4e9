"""Decode-free SINR estimation from the margin violators of a per-frame SVM fit.

The estimator only ever sees post-SIC soft symbols and the classifier fit; it
never touches bits or code words.

Measured error power is the mean squared distance of margin violators to their
nearest constellation point, spread over the whole frame. Because a nearest
point decision folds noise back into the decision region, that measurement
underestimates the noise at low SINR. ``expected_error_power`` gives its exact
expectation for square QAM in Gaussian noise, and ``noise_from_error_power``
inverts it so the estimate is unbiased on average.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .cqi import DEFAULT_TABLE, CqiTable
from .phy import Scheme, constellation, nearest_point

__all__ = [
    "SINR_CAP_DB",
    "ErrorSignal",
    "SinrEstimate",
    "expected_error_power",
    "noise_from_error_power",
    "extract_error_signal",
    "estimate_sinr",
    "map_to_level",
]

SINR_CAP_DB = 40.0

# log10 noise variance range covered by the inversion table (+50 dB .. -15 dB)
_GRID = np.linspace(-5.0, 1.5, 651)


def expected_error_power(scheme, noise_variance: float) -> float:
    """E|x - nearest point(x)|^2 for x = (s + n) / sqrt(1 + noise_variance).

    ``s`` is uniform over the unit-energy constellation and ``n`` circular
    Gaussian. The block is power-normalized, as the classifier sees it, so
    the scaling shrinks the constellation relative to the decision grid.
    The square grid separates per axis; each axis term is a sum of Gaussian
    partial moments over decision intervals.
    """
    levels = constellation(scheme).axis_levels
    edges = np.r_[-np.inf, 0.5 * (levels[1:] + levels[:-1]), np.inf]
    scale = 1.0 / np.sqrt(1.0 + noise_variance)
    sd = np.sqrt(noise_variance / 2.0) * scale
    if sd == 0:
        d = levels * scale
        q = levels[np.argmin(np.abs(d[:, None] - levels[None, :]), axis=1)]
        return float(2.0 * np.mean((d - q) ** 2))

    mu = (levels * scale)[:, None]  # true level (rows) x decision region (cols)
    a = (edges[None, :-1] - mu) / sd
    b = (edges[None, 1:] - mu) / sd
    d = mu - levels[None, :]
    pa, pb = norm.pdf(a), norm.pdf(b)
    fa, fb = np.isfinite(a), np.isfinite(b)
    apa = np.where(fa, np.where(fa, a, 0.0) * pa, 0.0)
    bpb = np.where(fb, np.where(fb, b, 0.0) * pb, 0.0)
    per_axis = (d * d + sd * sd) * (norm.cdf(b) - norm.cdf(a)) + 2 * d * sd * (pa - pb) + sd * sd * (apa - bpb)
    return float(2.0 * per_axis.sum() / levels.size)


@lru_cache(maxsize=None)
def _table(scheme: Scheme) -> np.ndarray:
    vals = np.array([expected_error_power(scheme, 10.0**g) for g in _GRID])
    # guard interp against round-off non-monotonicity
    return np.maximum.accumulate(vals)


def noise_from_error_power(scheme, error_power: float) -> float:
    """Noise variance whose expected nearest-point error power equals ``error_power``.

    Values outside the tabulated range clamp to its ends (noise variance
    1e-5 .. ~31.6).
    """
    return float(10.0 ** np.interp(error_power, _table(Scheme.parse(scheme)), _GRID))


@dataclass(frozen=True, eq=False)
class ErrorSignal:
    """Margin-violating symbols of one frame, on the classifier's normalized scale.

    ``entries`` are the violators themselves; ``deviations`` are their
    offsets from the nearest point of ``scheme``.
    """

    entries: np.ndarray
    deviations: np.ndarray
    source_count: int
    scheme: Scheme
    block_power: float  # mean |s|^2 of the received block before normalizing

    @property
    def count(self) -> int:
        return int(self.entries.size)


@dataclass(frozen=True)
class SinrEstimate:
    sinr_db: float
    signal_power: float
    error_power: float
    level_index: int


def extract_error_signal(block, fit) -> ErrorSignal:
    """Collect the symbols whose own-class margin ``y f(x)`` is strictly below 1.

    ``fit`` is a per-hypothesis classifier fit exposing ``scheme``,
    ``normalized`` (the unit-power block), ``margins`` (own-class
    functional margin per symbol) and optionally ``margin_tol``: a symbol
    violates only if its margin is below ``1 - margin_tol``, so points the
    solver placed on the margin (to within its tolerance) do not count.
    """
    block = np.asarray(block, dtype=complex).ravel()
    scheme = Scheme.parse(fit.scheme)
    x = np.asarray(fit.normalized)
    if x.size != block.size:
        raise ValueError("fit was produced on a different block")
    viol = np.asarray(fit.margins) < 1.0 - getattr(fit, "margin_tol", 0.0)
    entries = x[viol]
    pts = constellation(scheme).points
    dev = entries - pts[nearest_point(entries, pts)] if entries.size else entries
    return ErrorSignal(entries, dev, block.size, scheme, float(np.mean(np.abs(block) ** 2)))


def estimate_sinr(
    block,
    err: ErrorSignal,
    table: CqiTable = DEFAULT_TABLE,
    *,
    bias_correction: bool = True,
    signal_power: str = "component",
    error_entries: str = "deviation",
) -> SinrEstimate:
    """Ratio of signal power to error power, in dB, with its table level.

    error_entries="deviation" measures violators against their nearest
    point; "raw" uses the violators' own power (the literal error signal).
    signal_power="component" uses received power minus error power;
    "received" uses the raw mean received power.
    bias_correction inverts the expected nearest-point error (deviation
    entries only).

    Powers are reported on the received block's scale. The result is
    clipped to +/-40 dB, and zero error power reports +40 dB.
    """
    block = np.asarray(block, dtype=complex).ravel()
    if block.size == 0:
        raise ValueError("empty block")
    if signal_power not in ("component", "received"):
        raise ValueError(f"unknown signal_power mode {signal_power!r}")
    if error_entries not in ("deviation", "raw"):
        raise ValueError(f"unknown error_entries mode {error_entries!r}")
    received = float(np.mean(np.abs(block) ** 2))
    src = err.deviations if error_entries == "deviation" else err.entries
    measured = float(np.sum(np.abs(src) ** 2)) / err.source_count  # normalized units

    if measured == 0.0:
        sig, e = received, 0.0
    elif bias_correction and error_entries == "deviation":
        nv = noise_from_error_power(err.scheme, measured)
        e = received * nv / (1.0 + nv)
        sig = received / (1.0 + nv) if signal_power == "component" else received
    else:
        e = measured * received
        sig = received - e if signal_power == "component" else received
        sig = max(sig, 0.0)

    if e == 0.0:
        db = SINR_CAP_DB
    elif sig == 0.0:
        db = -SINR_CAP_DB
    else:
        db = float(np.clip(10.0 * np.log10(sig / e), -SINR_CAP_DB, SINR_CAP_DB))
    return SinrEstimate(db, sig, e, table.map_to_level(db))


def map_to_level(sinr_db: float, table: CqiTable = DEFAULT_TABLE) -> int:
    return table.map_to_level(sinr_db)
