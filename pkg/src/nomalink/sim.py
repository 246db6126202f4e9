"""Monte Carlo drivers: open-loop AMC sweep, frame-by-frame closed loop, baseline comparison.

Random streams are derived from the root seed by purpose, so the channel
sequence seen by every scheme in a comparison is identical (common random
numbers) and any run is reproducible bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .amc import classify
from .capacity import PowerLedger, capacity_report, compare_baselines, summary_csv, user_rates
from .config import SimConfig
from .cqi import DEFAULT_TABLE
from .link import LinkDecision, LinkState, Situation, decide
from .phy import (
    ChannelRealization,
    Scheme,
    modulate,
    random_bits,
    sic_detect,
    sic_order,
    superpose_tu_noma,
)
from .sinr import estimate_sinr, extract_error_signal
from .svm import SolverError

__all__ = [
    "SweepCell",
    "UserRecord",
    "FrameRecord",
    "binomial_ci",
    "run_amc_sweep",
    "sweep_csv",
    "channel_stream",
    "run_closed_loop",
    "closed_loop_csv",
    "run_baseline_comparison",
    "comparison_csv",
]

# stream purposes, mixed into the root seed
_CHANNEL, _PHY, _RANDOM_BASELINE, _SWEEP = 1, 2, 3, 4


def _rng(seed, *key):
    return np.random.default_rng([seed, *key])


def _g(v) -> str:
    return f"{v:.6g}"


# ---------------------------------------------------------------- AMC sweep


@dataclass(frozen=True)
class SweepCell:
    scheme: Scheme
    snr_db: float
    trials: int
    successes: int
    ci_lo: float
    ci_hi: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def binomial_ci(successes: int, trials: int, level=0.95) -> tuple[float, float]:
    """Clopper-Pearson interval."""
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def awgn_frame(scheme, snr_db, n_symbols, rng):
    """Single-user frame: unit-energy symbols plus noise at symbol SNR ``snr_db``."""
    s = modulate(random_bits(n_symbols, scheme, rng), scheme)
    var = 10.0 ** (-snr_db / 10.0)
    return s + np.sqrt(var / 2.0) * (rng.standard_normal(n_symbols) + 1j * rng.standard_normal(n_symbols))


def run_amc_sweep(config: SimConfig, schemes=None, progress=None) -> list[SweepCell]:
    """Open-loop success rates: every (true scheme, SNR) cell gets ``trials`` independent frames."""
    schemes = config.candidates if schemes is None else tuple(Scheme.parse(s) for s in schemes)
    amc_cfg = config.amc_config()
    cells = []
    for scheme in schemes:
        for k, snr in enumerate(config.snr_sweep_db):
            rng = _rng(config.seed, _SWEEP, scheme.bits_per_symbol, k)
            hits = 0
            for _ in range(config.trials):
                block = awgn_frame(scheme, snr, config.frame_symbols, rng)
                try:
                    hits += classify(block, config.candidates, amc_cfg, truth=scheme).success
                except SolverError:
                    pass  # an unconverged frame counts as a miss
            cell = SweepCell(scheme, snr, config.trials, hits, *binomial_ci(hits, config.trials))
            cells.append(cell)
            if progress:
                progress(cell)
    return cells


def sweep_csv(cells) -> str:
    buf = io.StringIO()
    buf.write("scheme,snr_db,trials,successes,rate,ci_lo,ci_hi\n")
    for c in cells:
        buf.write(f"{c.scheme},{_g(c.snr_db)},{c.trials},{c.successes},{_g(c.rate)},{_g(c.ci_lo)},{_g(c.ci_hi)}\n")
    return buf.getvalue()


# ---------------------------------------------------------------- channels


def channel_stream(config: SimConfig) -> np.ndarray:
    """(frames, 2) complex Rayleigh coefficients, first-order Gauss-Markov in time.

    Each user's coefficient has mean power ``10^(user_gain_db/10)``; the
    marginal is Rayleigh in every frame.
    """
    rng = _rng(config.seed, _CHANNEL)
    rho = config.fading_correlation
    w = (rng.standard_normal((config.frames, 2)) + 1j * rng.standard_normal((config.frames, 2))) / np.sqrt(2)
    h = np.empty_like(w)
    h[0] = w[0]
    inno = np.sqrt(1.0 - rho**2)
    for t in range(1, config.frames):
        h[t] = rho * h[t - 1] + inno * w[t]
    return h * np.sqrt(10.0 ** (np.asarray(config.user_gain_db) / 10.0))


def _rate_bounds(h, powers, noise_variance, order, literal=False):
    """Per-user rate bounds in user order; the first-decoded user sees the other as interference."""
    first, second = order
    if noise_variance == 0:
        # noiseless limit: the last-decoded user is unbounded, the first is interference limited
        g = [abs(h[n]) ** 2 * powers[n] for n in range(2)]
        out = [0.0, 0.0]
        out[second] = np.inf
        out[first] = np.inf if g[second] == 0 else float(np.log2(1.0 + g[first] / g[second]))
        return out
    sr = 1.0 / noise_variance
    r_last, r_first = user_rates(
        sr, sr, h[second], h[first], powers[second], powers[first], literal_denominator=literal
    )
    out = [0.0, 0.0]
    out[first], out[second] = r_first, r_last
    return out


def _true_sinr_db(h, powers, noise_variance, order):
    first, second = order
    g = [abs(h[n]) ** 2 * powers[n] for n in range(2)]
    vals = [0.0, 0.0]
    vals[first] = g[first] / (g[second] + noise_variance)
    vals[second] = g[second] / noise_variance
    return [10 * np.log10(v) if v > 0 else -np.inf for v in vals]


# ---------------------------------------------------------------- closed loop


@dataclass(frozen=True)
class UserRecord:
    true_scheme: Scheme
    tx_power: float
    coding_rate: float
    detected: Scheme | None
    amc_success: bool | None
    sinr_db: float
    level: int
    decision: LinkDecision
    carried_rate: float


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    users: tuple[UserRecord, UserRecord]
    capacity: object  # CapacityReport
    sic_order: tuple[int, int]
    flagged: bool  # a solver failure kept the previous decision for some user


def _initial_decisions(config):
    row = DEFAULT_TABLE[1]
    rate = row.spectral_efficiency / row.scheme.bits_per_symbol
    return [LinkDecision(row.scheme, rate, p, 1, Situation.COORDINATED) for p in config.initial_powers]


def _apply_budget(decisions, budget):
    """Scale both users' powers down proportionally when their sum exceeds the budget."""
    total = sum(d.tx_power for d in decisions)
    if total <= budget:
        return decisions
    k = budget / total
    return [replace(d, tx_power=d.tx_power * k, clamped=True) for d in decisions]


def run_closed_loop(config: SimConfig, channels=None):
    """Yield one FrameRecord per frame.

    Each frame is sent with the decisions made on the previous one. The
    receiver (perfect CSI) orders users for SIC, classifies the first user's
    equalized block, cancels it with the detected constellation, classifies
    the residual user, estimates each user's SINR and applies the decision
    rule to produce the next frame's modulation, coding rate and power.
    """
    h_all = channel_stream(config) if channels is None else channels
    rng = _rng(config.seed, _PHY)
    amc_cfg, link_cfg, sinr_opts = config.amc_config(), config.link_config(), config.sinr_options()
    literal19 = "literal19" in config.fidelity
    nv = config.noise_variance
    decisions = _initial_decisions(config)

    for t in range(config.frames):
        h = h_all[t]
        schemes = [d.scheme for d in decisions]
        powers = [d.tx_power for d in decisions]
        blocks = [modulate(random_bits(config.frame_symbols, s, rng), s) for s in schemes]
        chans = [ChannelRealization(complex(v), nv) for v in h]
        frame = superpose_tu_noma(blocks, powers, chans, rng, schemes)
        order = tuple(sic_order(frame))
        first, second = order

        detected, flagged = [None, None], False
        new = list(decisions)
        sinrs, levels = [np.nan, np.nan], [0, 0]
        try:
            amc_first = classify(frame.superposed / (h[first] * np.sqrt(powers[first])), config.candidates, amc_cfg, truth=schemes[first])
        except SolverError:
            amc_first = None
        sic_schemes = [None, None]
        sic_schemes[first] = amc_first.chosen if amc_first else schemes[first]
        sic_schemes[second] = schemes[second]
        sic = sic_detect(frame, sic_schemes, order)
        bounds = _rate_bounds(h, powers, nv, order, literal19)
        effs = [DEFAULT_TABLE[d.level_used].spectral_efficiency for d in decisions]
        soft = list(sic.soft)
        if config.sic_cancellation == "decoded" and effs[first] <= bounds[first]:
            # the first user's code word would decode: cancel it exactly
            amp = [v * np.sqrt(p) for v, p in zip(h, powers)]
            soft[second] = (frame.superposed - amp[first] * blocks[first]) / amp[second]
        results = {first: amc_first}
        try:
            results[second] = classify(soft[second], config.candidates, amc_cfg, truth=schemes[second])
        except SolverError:
            results[second] = None

        for n in range(2):
            res = results[n]
            if res is None:
                flagged = True
                continue
            detected[n] = res
            fit = res.chosen_fit
            est = estimate_sinr(soft[n], extract_error_signal(soft[n], fit), **sinr_opts)
            sinrs[n], levels[n] = est.sinr_db, est.level_index
            gain = abs(h[n]) ** 2
            in_power = gain * powers[n] / 10.0 ** (est.sinr_db / 10.0)
            state = LinkState(gain, in_power, error_power=in_power, current_power=powers[n])
            new[n] = decide(res.chosen, est.level_index, state, link_cfg)
        new = _apply_budget(new, config.p_max)

        cap = capacity_report(bounds[0], bounds[1], effs[0], effs[1])
        users = tuple(
            UserRecord(
                true_scheme=schemes[n],
                tx_power=powers[n],
                coding_rate=decisions[n].coding_rate,
                detected=detected[n].chosen if detected[n] else None,
                amc_success=detected[n].success if detected[n] else None,
                sinr_db=float(sinrs[n]),
                level=levels[n],
                decision=new[n],
                carried_rate=(cap.carried1, cap.carried2)[n],
            )
            for n in range(2)
        )
        yield FrameRecord(t, users, cap, order, flagged)
        decisions = new


_USER_COLS = (
    "true_scheme,tx_power,coding_rate,detected,amc_success,sinr_db,level,"
    "next_scheme,next_rate,next_power,next_level,situation,clamped,carried_rate"
)


def closed_loop_csv(records) -> str:
    buf = io.StringIO()
    head = ["frame", "sic_first"]
    for n in (1, 2):
        head += [f"u{n}_{c}" for c in _USER_COLS.split(",")]
    head += ["r1", "r2", "c_sum", "throughput", "flagged"]
    buf.write(",".join(head) + "\n")
    for rec in records:
        row = [str(rec.frame), str(rec.sic_order[0] + 1)]
        for u in rec.users:
            d = u.decision
            row += [
                str(u.true_scheme),
                _g(u.tx_power),
                _g(u.coding_rate),
                "" if u.detected is None else str(u.detected),
                "" if u.amc_success is None else str(int(u.amc_success)),
                _g(u.sinr_db),
                str(u.level),
                str(d.scheme),
                _g(d.coding_rate),
                _g(d.tx_power),
                str(d.level_used),
                str(d.situation),
                str(int(d.clamped)),
                _g(u.carried_rate),
            ]
        c = rec.capacity
        row += [_g(c.r1), _g(c.r2), _g(c.c_sum), _g(c.throughput), str(int(rec.flagged))]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------- baselines


def _genie_level(sinr_db):
    return 1 if not np.isfinite(sinr_db) else DEFAULT_TABLE.map_to_level(sinr_db)


def _baseline_stream(config, h_all, choose_levels):
    """Fixed initial powers every frame; levels picked per frame by ``choose_levels``."""
    nv = config.noise_variance
    literal19 = "literal19" in config.fidelity
    powers = list(config.initial_powers)
    ledger, rates = PowerLedger(), []
    for t in range(config.frames):
        h = h_all[t]
        order = tuple(sorted(range(2), key=lambda n: -abs(h[n]) ** 2 * powers[n]))
        levels = choose_levels(h, powers, order)
        bounds = _rate_bounds(h, powers, nv, order, literal19)
        effs = [DEFAULT_TABLE[lv].spectral_efficiency for lv in levels]
        rates.append(capacity_report(bounds[0], bounds[1], effs[0], effs[1]).throughput)
        ledger.record(powers)
    return ledger, np.array(rates)


def run_baseline_comparison(config: SimConfig, records=None):
    """Run the proposed loop and both baselines on one channel sequence.

    Returns ``(summary_rows, streams)`` where ``streams`` maps scheme name to
    ``(PowerLedger, per-frame carried sum rate)``.
    """
    h_all = channel_stream(config)
    if records is None:
        records = list(run_closed_loop(config, channels=h_all))
    ledger = PowerLedger()
    for rec in records:
        ledger.record([u.tx_power for u in rec.users])
        ledger.clamp_events += sum(int(u.decision.clamped) for u in rec.users)
    proposed = (ledger, np.array([rec.capacity.throughput for rec in records]))

    nv = config.noise_variance

    def genie(h, powers, order):
        return [_genie_level(s) for s in _true_sinr_db(h, powers, nv, order)]

    rng = _rng(config.seed, _RANDOM_BASELINE)

    def uniform(h, powers, order):
        return [int(v) for v in rng.integers(1, 16, size=2)]

    streams = {
        "proposed": proposed,
        "fixed-lte": _baseline_stream(config, h_all, genie),
        "random": _baseline_stream(config, h_all, uniform),
    }
    return compare_baselines(streams), streams


def comparison_csv(rows) -> str:
    return summary_csv(rows)
