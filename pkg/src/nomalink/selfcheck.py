"""Built-in consistency checks: SMO against an exhaustive QP oracle, and the decision rule table.

Run from the command line with ``nomalink selftest``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cqi import DEFAULT_TABLE
from .link import LinkConfig, LinkState, Situation, decide
from .phy import Scheme
from .svm import KernelParams, dual_objective, kernel_matrix, train_binary

__all__ = ["qp_oracle", "expected_decision", "CheckResult", "check_solver", "check_decisions", "run_selftest"]


def qp_oracle(k, y, c, tol=1e-9):
    """Exact maximizer of the soft-margin dual by enumerating active sets.

    Every coordinate is either at 0, at ``c``, or free; for each free set the
    equality-constrained stationary point is solved for all 2^|bound| bound
    assignments at once and the best feasible one is kept. Exponential, so
    meant for at most ~10 points. Returns ``(alpha, objective)``.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    q = k * np.outer(y, y)
    best_val, best = -np.inf, None
    for mask in range(1 << n):
        free = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        f, b = np.flatnonzero(free), np.flatnonzero(~free)
        bounds = np.array(list(itertools.product((0.0, c), repeat=b.size)), dtype=float).reshape(2**b.size, b.size)
        alphas = np.zeros((bounds.shape[0], n))
        alphas[:, b] = bounds
        if f.size:
            m = np.zeros((f.size + 1, f.size + 1))
            m[: f.size, : f.size] = q[np.ix_(f, f)]
            m[: f.size, f.size] = y[f]
            m[f.size, : f.size] = y[f]
            rhs = np.empty((f.size + 1, bounds.shape[0]))
            rhs[: f.size] = 1.0 - q[np.ix_(f, b)] @ bounds.T
            rhs[f.size] = -(bounds @ y[b])
            try:
                sol = np.linalg.solve(m, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(m, rhs, rcond=None)[0]
            alphas[:, f] = sol[: f.size].T
        feasible = (
            np.all(alphas >= -tol, axis=1)
            & np.all(alphas <= c + tol, axis=1)
            & (np.abs(alphas @ y) <= 1e-7 * max(1.0, c))
        )
        for a in alphas[feasible]:
            val = a.sum() - 0.5 * a @ q @ a
            if val > best_val:
                best_val, best = val, np.clip(a, 0.0, c)
    return best, float(best_val)


# Decision rule table: (detected scheme, SINR level band) -> (scheme, level rule, situation).
# Level rule "is" keeps the measured level; an integer forces that level.
_RULES = {
    (Scheme.QPSK, "low"): (Scheme.QPSK, "is", Situation.COORDINATED),
    (Scheme.QPSK, "mid"): (Scheme.QAM16, "is", Situation.MORE_SINR),
    (Scheme.QPSK, "high"): (Scheme.QAM64, "is", Situation.MORE_SINR),
    (Scheme.QAM16, "low"): (Scheme.QAM16, 7, Situation.LESS_SINR),
    (Scheme.QAM16, "mid"): (Scheme.QAM16, "is", Situation.COORDINATED),
    (Scheme.QAM16, "high"): (Scheme.QAM64, "is", Situation.MORE_SINR),
    (Scheme.QAM64, "low"): (Scheme.QAM64, 10, Situation.LESS_SINR),
    (Scheme.QAM64, "mid"): (Scheme.QAM64, 10, Situation.LESS_SINR),
    (Scheme.QAM64, "high"): (Scheme.QAM64, "is", Situation.COORDINATED),
}


def expected_decision(detected, level):
    """(scheme, level used, coding rate, situation) from the hand-written rule table."""
    band = "low" if level <= 6 else "mid" if level <= 9 else "high"
    scheme, rule, situation = _RULES[(Scheme.parse(detected), band)]
    used = level if rule == "is" else rule
    return scheme, used, DEFAULT_TABLE[used].spectral_efficiency / scheme.bits_per_symbol, situation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_solver(n_sets=200, seed=0, tol=1e-4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_gap, worst_kkt, failures = 0.0, 0.0, 0
    for _ in range(n_sets):
        n = int(rng.integers(2, 9))
        x = rng.normal(size=(n, 2))
        y = rng.choice([-1.0, 1.0], size=n)
        y[0], y[1] = 1.0, -1.0
        c = float(rng.choice([1.0, 10.0, 100.0]))
        params = KernelParams(kernel_width=1.0, regularization=c)
        k = kernel_matrix(x, x, 1.0)
        model = train_binary(x, y, params, kernel=k)
        alpha = np.zeros(n)
        alpha[model.sv_index] = model.multipliers
        _, best = qp_oracle(k, y, c)
        gap = best - dual_objective(alpha, y, k)
        worst_gap = max(worst_gap, gap)
        worst_kkt = max(worst_kkt, model.kkt_gap)
        failures += gap > tol or model.kkt_gap > 1e-3
    return CheckResult(
        "solver vs exhaustive QP",
        failures == 0,
        f"{n_sets} sets, worst objective gap {worst_gap:.2e}, worst KKT gap {worst_kkt:.2e}",
    )


def check_decisions() -> CheckResult:
    state = LinkState(gain=1.0, interference_plus_noise=0.01)
    bad = []
    for detected in Scheme:
        for level in range(1, 16):
            got = decide(detected, level, state, LinkConfig())
            want = expected_decision(detected, level)
            if (got.scheme, got.level_used, got.coding_rate, got.situation) != want:
                bad.append(f"{detected}/{level}")
    return CheckResult("decision table (45 cells)", not bad, "mismatch: " + ",".join(bad) if bad else "all match")


def run_selftest(seed=0) -> list[CheckResult]:
    return [check_solver(seed=seed), check_decisions()]
