"""Simulation configuration: defaults, validation and loading from JSON or key=value text.

Config file schema (every key optional; JSON object or one ``key = value`` per
line, ``#`` comments allowed, list values comma separated):

    frame_symbols        symbols per frame (>= 64)                 1000
    trials               frames per AMC sweep cell (>= 1)          500
    snr_sweep_db         SNR grid of the AMC sweep, dB             -6,-4,...,20
    candidates           candidate modulations                     QPSK,16QAM,64QAM
    regularization       SVM box bound c                           0.01
    kernel_width         RBF width, or "auto" (median heuristic)   auto
    llr_margin           nats a higher order must win by           5.0
    frames               closed-loop / comparison frames           1000
    mean_snr_db          closed-loop mean SNR 1/noise_variance     30.0
    user_gain_db         mean channel gain per user, dB            0,0
    fading_correlation   frame-to-frame channel correlation        0.9
    initial_powers       transmit powers of the first frame        0.8,0.2
    p_max, p_floor       power clamps; p_max also caps p1 + p2     1.0, 1e-4
    sic_cancellation     "decoded": cancel the first user exactly  decoded
                         when its rate is supported, else its hard
                         decisions; "symbol": always hard decisions
    fidelity             literal13, literal16, literal19           (none)
    seed                 root seed                                 0
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

import numpy as np

from .amc import AmcConfig
from .link import LinkConfig
from .phy import Scheme
from .svm import KernelParams

__all__ = ["SimConfig", "FIDELITY_SWITCHES", "load_config", "parse_snr_range"]

FIDELITY_SWITCHES = ("literal13", "literal16", "literal19")


def parse_snr_range(text: str) -> tuple[float, ...]:
    """``"lo:hi:step"`` (inclusive of ``hi`` when on the grid) to a tuple of dB values."""
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise ValueError(f"SNR range must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError("SNR range needs step > 0 and hi >= lo")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + k * step, 10) for k in range(n))


@dataclass(frozen=True)
class SimConfig:
    frame_symbols: int = 1000
    trials: int = 500
    snr_sweep_db: tuple = tuple(float(v) for v in range(-6, 21, 2))
    candidates: tuple = (Scheme.QPSK, Scheme.QAM16, Scheme.QAM64)
    regularization: float = 0.01
    kernel_width: float | None = None
    llr_margin: float = 5.0
    frames: int = 1000
    mean_snr_db: float = 30.0
    user_gain_db: tuple = (0.0, 0.0)
    fading_correlation: float = 0.9
    initial_powers: tuple = (0.8, 0.2)
    p_max: float = 1.0
    p_floor: float = 1e-4
    fidelity: frozenset = frozenset()
    sic_cancellation: str = "decoded"
    seed: int = 0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("snr_sweep_db", tuple(float(v) for v in self.snr_sweep_db))
        set_("candidates", tuple(Scheme.parse(c) for c in self.candidates))
        set_("user_gain_db", tuple(float(v) for v in self.user_gain_db))
        set_("initial_powers", tuple(float(v) for v in self.initial_powers))
        set_("fidelity", frozenset(self.fidelity))
        if self.trials < 1 or self.frames < 1:
            raise ValueError("trials and frames must be >= 1")
        if self.frame_symbols < 64:
            raise ValueError("frame_symbols must be >= 64")
        if not self.candidates:
            raise ValueError("need at least one candidate scheme")
        if len(self.initial_powers) != 2 or len(self.user_gain_db) != 2:
            raise ValueError("two users: initial_powers and user_gain_db need two values")
        if any(p <= 0 for p in self.initial_powers) or sum(self.initial_powers) > self.p_max + 1e-12:
            raise ValueError("initial powers must be > 0 and sum to at most p_max")
        if not 0 <= self.fading_correlation < 1:
            raise ValueError("fading_correlation must be in [0, 1)")
        unknown = self.fidelity - set(FIDELITY_SWITCHES)
        if unknown:
            raise ValueError(f"unknown fidelity switches {sorted(unknown)}")
        if self.sic_cancellation not in ("symbol", "decoded"):
            raise ValueError("sic_cancellation must be 'symbol' or 'decoded'")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        LinkConfig(self.p_max, self.p_floor)  # validates the clamps

    @property
    def noise_variance(self) -> float:
        return 10.0 ** (-self.mean_snr_db / 10.0)

    def kernel_params(self) -> KernelParams:
        return KernelParams(kernel_width=self.kernel_width, regularization=self.regularization)

    def amc_config(self) -> AmcConfig:
        return AmcConfig(kernel=self.kernel_params(), llr_margin=self.llr_margin)

    def link_config(self) -> LinkConfig:
        literal = "literal16" in self.fidelity
        return LinkConfig(
            p_max=self.p_max,
            p_floor=self.p_floor,
            channel_referenced_error=not literal,
            freeze_no_change=literal,
        )

    def sinr_options(self) -> dict:
        if "literal13" in self.fidelity:
            return dict(bias_correction=False, signal_power="received", error_entries="raw")
        return {}

    def with_overrides(self, **kw) -> SimConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_LIST_KEYS = {"snr_sweep_db", "candidates", "user_gain_db", "initial_powers", "fidelity"}


def _coerce(key: str, value):
    names = {f.name for f in fields(SimConfig)}
    if key not in names:
        raise ValueError(f"unknown config key {key!r}")
    if key in _LIST_KEYS:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if key in ("snr_sweep_db", "user_gain_db", "initial_powers"):
            value = [float(v) for v in value]
        return frozenset(value) if key == "fidelity" else tuple(value)
    if key == "kernel_width":
        return None if value in (None, "auto", "") else float(value)
    if key in ("frame_symbols", "trials", "frames", "seed"):
        return int(value)
    if key == "sic_cancellation":
        return str(value)
    return float(value)


def _parse_text(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path=None, text: str | None = None) -> SimConfig:
    """Build a SimConfig from a file path or literal text; missing keys keep defaults."""
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    if not text:
        return SimConfig()
    raw = _parse_text(text)
    return SimConfig(**{k: _coerce(k, v) for k, v in raw.items()})
