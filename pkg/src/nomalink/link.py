"""Next-frame modulation, coding rate and transmit power from (detected scheme, SINR level)."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .cqi import BANDS, DEFAULT_TABLE, CqiTable
from .phy import Scheme

__all__ = [
    "Situation",
    "LinkConfig",
    "LinkState",
    "LinkDecision",
    "SingularChannelError",
    "coding_rate",
    "min_power_for_level",
    "update_power",
    "decide",
]


class SingularChannelError(ValueError):
    pass


class Situation(enum.Enum):
    COORDINATED = "Coordinated"
    LESS_SINR = "LessSinr"
    MORE_SINR = "MoreSinr"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LinkConfig:
    """Power clamps and fidelity switches.

    channel_referenced_error: add ``error_power / gain`` (transmit-side units)
        rather than the raw received-side error power.
    freeze_no_change: keep the current power in Table II cells marked
        "no change" instead of re-evaluating the minimum-power rule.
    """

    p_max: float = 1.0
    p_floor: float = 1e-4
    channel_referenced_error: bool = True
    freeze_no_change: bool = False

    def __post_init__(self):
        if not 0 < self.p_floor <= self.p_max:
            raise ValueError("need 0 < p_floor <= p_max")


@dataclass(frozen=True)
class LinkState:
    """What the receiver knows about a user's link when deciding.

    gain: |h|^2 of the user's channel
    interference_plus_noise: received interference plus noise power
    error_power: received-side error signal power
    current_power: transmit power used in the frame just measured
    """

    gain: float
    interference_plus_noise: float
    error_power: float = 0.0
    current_power: float = 1.0


@dataclass(frozen=True)
class LinkDecision:
    scheme: Scheme
    coding_rate: float
    tx_power: float
    level_used: int
    situation: Situation
    clamped: bool = False


def coding_rate(level: int, scheme, table: CqiTable = DEFAULT_TABLE) -> float:
    """Spectral efficiency of ``level`` divided by the bits/symbol of ``scheme``."""
    return table[level].spectral_efficiency / Scheme.parse(scheme).bits_per_symbol


def min_power_for_level(level, gain, interference_plus_noise, table: CqiTable = DEFAULT_TABLE):
    """Smallest transmit power whose received SINR reaches the level's floor."""
    if gain <= 0:
        raise SingularChannelError("channel gain |h|^2 is zero")
    return 10.0 ** (table[level].sinr_min_db / 10.0) * interference_plus_noise / gain


def update_power(
    level, gain, interference_plus_noise, error_power, config=LinkConfig(), table=DEFAULT_TABLE
) -> tuple[float, bool]:
    """Minimum power for ``level`` plus the error power, clamped to [p_floor, p_max].

    Returns ``(power, clamped)``.
    """
    extra = error_power / gain if config.channel_referenced_error else error_power
    p = min_power_for_level(level, gain, interference_plus_noise, table) + extra
    if p > config.p_max:
        return config.p_max, True
    if p < config.p_floor:
        return config.p_floor, True
    return p, False


def decide(detected, level, state: LinkState, config=LinkConfig(), table=DEFAULT_TABLE):
    """Apply the three-situation rule table to one user.

    ``detected`` is a Scheme (or anything with ``.chosen``); ``level`` an int
    in 1..15 (or anything with ``.level_index``). The level actually used is
    ``max(level, lowest level of the detected scheme)``; modulation and coding
    rate follow from that row, so modulation order never decreases.
    """
    detected = Scheme.parse(getattr(detected, "chosen", detected))
    level = int(getattr(level, "level_index", level))
    if not 1 <= level <= 15:
        raise ValueError(f"SINR level {level} outside 1..15")
    lo, hi = BANDS[detected]
    if level < lo:
        situation = Situation.LESS_SINR
    elif level > hi:
        situation = Situation.MORE_SINR
    else:
        situation = Situation.COORDINATED
    used = max(level, lo)
    row = table[used]
    scheme = row.scheme
    rate = row.spectral_efficiency / scheme.bits_per_symbol

    # "no change" power cells; the 64QAM coordinated cell re-evaluates at i_s
    # even in the literal mode
    no_change = situation is Situation.MORE_SINR or (
        situation is Situation.COORDINATED and detected is not Scheme.QAM64
    )
    if config.freeze_no_change and no_change:
        power, clamped = state.current_power, False
    else:
        power, clamped = update_power(
            used, state.gain, state.interference_plus_noise, state.error_power, config, table
        )
    return LinkDecision(scheme, rate, power, used, situation, clamped)
