"""Two-user NOMA rate bounds, achieved throughput, power accounting and baseline summaries."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

__all__ = [
    "user_rates",
    "sum_capacity",
    "achieved_rate",
    "CapacityReport",
    "capacity_report",
    "PowerLedger",
    "SummaryRow",
    "mean_ci",
    "paired_difference_ci",
    "compare_baselines",
    "summary_csv",
]


def _gain(h, p, s):
    return abs(h) ** 2 * p * s


def user_rates(sr1, sr2, h1, h2, p1, p2, s1=1.0, s2=1.0, *, literal_denominator=False):
    """Rate bounds (bits/s/Hz) for the interference-free user 1 and the interfered user 2.

    ``sr1``/``sr2`` are linear SINR scale factors and ``s1``/``s2`` mean symbol
    powers, so the received power of user i is ``g_i = |h_i|^2 p_i s_i``. User 2
    sees user 1 as interference: ``r2 = log2(1 + sr2 g2 / (sr1 g1 + 1))``.
    ``literal_denominator`` multiplies the interference term by ``p1`` once
    more, as the printed formula does.
    """
    for name, v in (("sr1", sr1), ("sr2", sr2), ("p1", p1), ("p2", p2), ("s1", s1), ("s2", s2)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0")
    g1, g2 = _gain(h1, p1, s1), _gain(h2, p2, s2)
    interference = sr1 * g1 * (p1 if literal_denominator else 1.0)
    return math.log2(1.0 + sr1 * g1), math.log2(1.0 + sr2 * g2 / (interference + 1.0))


def sum_capacity(r1, r2):
    return r1 + r2


def achieved_rate(spectral_efficiency, bound):
    """Carried rate: the scheduled efficiency when the channel supports it, else 0 (outage)."""
    return spectral_efficiency if spectral_efficiency <= bound else 0.0


@dataclass(frozen=True)
class CapacityReport:
    """Rate bounds and what the scheduled links actually carried.

    ``r1``, ``r2`` and ``c_sum`` are the information-theoretic bounds;
    ``carried1``, ``carried2`` apply outage against them, and
    ``throughput`` is their sum.
    """

    r1: float
    r2: float
    c_sum: float
    carried1: float = 0.0
    carried2: float = 0.0

    @property
    def throughput(self) -> float:
        return self.carried1 + self.carried2


def capacity_report(r1, r2, eff1=None, eff2=None) -> CapacityReport:
    c1 = 0.0 if eff1 is None else achieved_rate(eff1, r1)
    c2 = 0.0 if eff2 is None else achieved_rate(eff2, r2)
    return CapacityReport(r1, r2, sum_capacity(r1, r2), c1, c2)


@dataclass
class PowerLedger:
    """Append-only per-frame transmit powers for every user, plus clamp counts."""

    powers: list = field(default_factory=list)
    clamp_events: int = 0

    def record(self, tx_powers, clamped=0):
        self.powers.append(tuple(float(p) for p in tx_powers))
        self.clamp_events += int(clamped)

    @property
    def frames(self) -> int:
        return len(self.powers)

    def per_frame_totals(self) -> np.ndarray:
        return np.array([sum(p) for p in self.powers], dtype=float)

    @property
    def total(self) -> float:
        return float(sum(sum(p) for p in self.powers))


def mean_ci(values, level=0.95):
    """Sample mean with a Student-t confidence interval."""
    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    if v.size < 2 or np.all(v == v[0]):
        return m, m, m
    half = stats.t.ppf(0.5 + level / 2, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return m, m - half, m + half


def paired_difference_ci(a, b, level=0.95):
    """Mean of ``a - b`` over paired samples with its confidence interval."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples differ in length")
    return mean_ci(a - b, level)


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    frames: int
    total_power: float
    mean_c_sum: float
    ci_low: float
    ci_high: float


def compare_baselines(streams: dict) -> list[SummaryRow]:
    """Summarize ``{name: (PowerLedger, per-frame sum rates)}``; all streams must be equally long."""
    lengths = {len(rates) for _, rates in streams.values()} | {ld.frames for ld, _ in streams.values()}
    if len(lengths) != 1:
        raise ValueError(f"streams differ in frame count: {sorted(lengths)}")
    rows = []
    for name, (ledger, rates) in streams.items():
        m, lo, hi = mean_ci(rates)
        rows.append(SummaryRow(name, ledger.frames, ledger.total, m, lo, hi))
    return rows


def summary_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("scheme,frames,total_power,mean_c_sum,ci_low,ci_high\n")
    for r in rows:
        buf.write(
            f"{r.scheme},{r.frames},{r.total_power:.6g},{r.mean_c_sum:.6g},{r.ci_low:.6g},{r.ci_high:.6g}\n"
        )
    return buf.getvalue()
