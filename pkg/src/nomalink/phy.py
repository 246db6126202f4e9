"""Baseband two-user NOMA: Gray-mapped QAM, flat Rayleigh fading, superposition and SIC.

Transmit powers enter as amplitudes ``sqrt(p)`` so that ``p`` keeps power units
through the SINR and capacity formulas.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Scheme",
    "Constellation",
    "constellation",
    "modulate",
    "random_bits",
    "nearest_point",
    "ChannelRealization",
    "rayleigh_channel",
    "awgn",
    "NomaFrame",
    "superpose_tu_noma",
    "SicResult",
    "sic_order",
    "sic_detect",
]


class Scheme(enum.Enum):
    QPSK = "QPSK"
    QAM16 = "16QAM"
    QAM64 = "64QAM"

    @property
    def bits_per_symbol(self) -> int:
        return {"QPSK": 2, "16QAM": 4, "64QAM": 6}[self.value]

    @property
    def order(self) -> int:
        return 2**self.bits_per_symbol

    @classmethod
    def parse(cls, name) -> Scheme:
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "")
        for s in cls:
            if key in (s.value, s.name):
                return s
        raise ValueError(f"unknown modulation scheme {name!r}")

    def __str__(self):
        return self.value


def _gray_to_binary(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-average-energy square QAM; ``points[i]`` carries the bit pattern of ``i``."""

    scheme: Scheme
    points: np.ndarray
    bits_per_symbol: int

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def axis_levels(self) -> np.ndarray:
        """Sorted per-axis PAM levels (each axis carries half the energy)."""
        return np.unique(self.points.real)

    @property
    def min_distance(self) -> float:
        lv = self.axis_levels
        return float(lv[1] - lv[0])


@lru_cache(maxsize=None)
def constellation(scheme) -> Constellation:
    scheme = Scheme.parse(scheme)
    k = scheme.bits_per_symbol // 2
    side = 2**k
    scale = np.sqrt(2.0 * (side**2 - 1) / 3.0)
    pts = np.empty(2**scheme.bits_per_symbol, dtype=complex)
    for idx in range(pts.size):
        i_bits, q_bits = idx >> k, idx & (side - 1)
        i_lvl = 2 * _gray_to_binary(i_bits) - (side - 1)
        q_lvl = 2 * _gray_to_binary(q_bits) - (side - 1)
        pts[idx] = complex(i_lvl, q_lvl) / scale
    pts.setflags(write=False)
    return Constellation(scheme, pts, scheme.bits_per_symbol)


def random_bits(n_symbols: int, scheme, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n_symbols * Scheme.parse(scheme).bits_per_symbol, dtype=np.uint8)


def modulate(bits, scheme) -> np.ndarray:
    """Map a bit stream (MSB first per symbol) to constellation symbols."""
    const = constellation(scheme)
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = const.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"{bits.size} bits is not a multiple of {k} bits/symbol")
    if bits.size == 0:
        return np.zeros(0, dtype=complex)
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    idx = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    return const.points[idx]


def nearest_point(block, points) -> np.ndarray:
    """Index of the nearest point for each sample; ties go to the lowest index."""
    block = np.asarray(block, dtype=complex).ravel()
    points = np.asarray(points, dtype=complex)
    return np.argmin(np.abs(block[:, None] - points[None, :]), axis=1)


@dataclass(frozen=True)
class ChannelRealization:
    h: complex
    noise_variance: float

    def __post_init__(self):
        if not self.noise_variance >= 0:
            raise ValueError("noise_variance must be >= 0")

    @property
    def gain(self) -> float:
        return abs(self.h) ** 2


def rayleigh_channel(rng: np.random.Generator, noise_variance: float, size=None):
    """Flat Rayleigh coefficient(s) with E|h|^2 = 1."""
    h = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
    if size is None:
        return ChannelRealization(complex(h), noise_variance)
    return [ChannelRealization(complex(v), noise_variance) for v in np.ravel(h)]


def awgn(n: int, noise_variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise, variance ``noise_variance`` per sample."""
    return np.sqrt(noise_variance / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


@dataclass(frozen=True, eq=False)
class NomaFrame:
    superposed: np.ndarray
    tx_symbols: tuple[np.ndarray, ...]
    tx_powers: tuple[float, ...]
    channels: tuple[ChannelRealization, ...]
    true_modulations: tuple[Scheme, ...]
    noise: np.ndarray

    @property
    def noise_variance(self) -> float:
        return self.channels[0].noise_variance


def superpose_tu_noma(user_blocks, tx_powers, channels, rng, schemes=None) -> NomaFrame:
    """Received block ``sum_n h_n sqrt(p_n) s_n + noise`` for two users."""
    blocks = tuple(np.asarray(b, dtype=complex) for b in user_blocks)
    powers = tuple(float(p) for p in tx_powers)
    channels = tuple(channels)
    if not (len(blocks) == len(powers) == len(channels) == 2):
        raise ValueError("TU-NOMA needs exactly two users")
    if blocks[0].shape != blocks[1].shape or blocks[0].ndim != 1:
        raise ValueError("user blocks must be 1-D and of equal length")
    if any(p < 0 for p in powers):
        raise ValueError("transmit powers must be >= 0")
    var = channels[0].noise_variance
    if any(ch.noise_variance != var for ch in channels):
        raise ValueError("users share one receiver noise variance")
    noise = awgn(blocks[0].size, var, rng) if var > 0 else np.zeros(blocks[0].size, complex)
    rx = noise.copy()
    for s, p, ch in zip(blocks, powers, channels):
        rx += ch.h * np.sqrt(p) * s
    if schemes is None:
        schemes = (None, None)
    else:
        schemes = tuple(Scheme.parse(s) for s in schemes)
    return NomaFrame(rx, blocks, powers, channels, schemes, noise)


def sic_order(frame: NomaFrame) -> list[int]:
    """User indices by descending received power ``|h|^2 p`` (stable)."""
    rx = [ch.gain * p for ch, p in zip(frame.channels, frame.tx_powers)]
    return sorted(range(len(rx)), key=lambda n: -rx[n])


@dataclass(frozen=True, eq=False)
class SicResult:
    soft: tuple[np.ndarray, ...]  # equalized blocks, in user order
    residual: np.ndarray  # received block minus the remodulated first user
    first_decisions: np.ndarray  # hard symbols of the first-decoded user
    order: tuple[int, ...]


def sic_detect(frame: NomaFrame, schemes, order=None) -> SicResult:
    """Perfect-CSI successive interference cancellation.

    The first user in ``order`` is equalized and sliced on its hypothesized
    constellation with the other user treated as noise; its remodulated
    contribution is subtracted and the second user is equalized from the
    residual. A user with zero received amplitude gets the raw residual.
    """
    order = tuple(sic_order(frame) if order is None else order)
    if sorted(order) != [0, 1]:
        raise ValueError("order must be a permutation of the two users")
    schemes = [Scheme.parse(s) for s in schemes]
    first, second = order
    amp = [ch.h * np.sqrt(p) for ch, p in zip(frame.channels, frame.tx_powers)]
    soft = [None, None]

    a1 = amp[first]
    if a1 == 0:
        soft[first] = frame.superposed.copy()
        decisions = np.zeros_like(frame.superposed)
        residual = frame.superposed.copy()
    else:
        soft[first] = frame.superposed / a1
        pts = constellation(schemes[first]).points
        decisions = pts[nearest_point(soft[first], pts)]
        residual = frame.superposed - a1 * decisions

    a2 = amp[second]
    soft[second] = residual.copy() if a2 == 0 else residual / a2
    return SicResult(tuple(soft), residual, decisions, order)
