"""CQI lookup: modulation, SINR band and spectral efficiency per level (1..15)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .phy import Scheme

__all__ = ["CqiLevel", "CqiTable", "DEFAULT_TABLE", "BANDS", "band_scheme", "load_cqi_csv"]

# level ranges per modulation
BANDS = {Scheme.QPSK: (1, 6), Scheme.QAM16: (7, 9), Scheme.QAM64: (10, 15)}

# index, scheme, sinr_min_db, sinr_max_db, spectral efficiency
_ROWS = [
    (1, "QPSK", -6.7, -4.7, 0.1523),
    (2, "QPSK", -4.7, -2.3, 0.2344),
    (3, "QPSK", -2.3, 0.2, 0.3770),
    (4, "QPSK", 0.2, 2.4, 0.6016),
    (5, "QPSK", 2.4, 4.3, 0.8770),
    (6, "QPSK", 4.3, 5.9, 1.1758),
    (7, "16QAM", 5.9, 8.1, 1.4766),
    (8, "16QAM", 8.1, 10.3, 1.9141),
    (9, "16QAM", 10.3, 11.7, 2.4063),
    (10, "64QAM", 11.7, 14.1, 2.7305),
    (11, "64QAM", 14.1, 16.3, 3.3223),
    (12, "64QAM", 16.3, 18.7, 3.9023),
    (13, "64QAM", 18.7, 21.0, 4.5234),
    (14, "64QAM", 21.0, 22.7, 4.1152),  # verbatim; breaks efficiency monotonicity
    (15, "64QAM", 22.7, math.inf, 5.5547),
]


@dataclass(frozen=True)
class CqiLevel:
    index: int
    scheme: Scheme
    bits_per_symbol: int
    sinr_min_db: float
    sinr_max_db: float
    spectral_efficiency: float


def band_scheme(level: int) -> Scheme:
    """Modulation whose level range contains ``level``."""
    for scheme, (lo, hi) in BANDS.items():
        if lo <= level <= hi:
            return scheme
    raise ValueError(f"CQI level {level} outside 1..15")


class CqiTable:
    """Fifteen levels whose half-open SINR bands tile [min of row 1, +inf)."""

    def __init__(self, levels):
        self.levels = tuple(levels)
        self._check()

    def _check(self):
        lv = self.levels
        if len(lv) != 15:
            raise ValueError(f"expected 15 rows, got {len(lv)}")
        for k, row in enumerate(lv, start=1):
            if row.index != k:
                raise ValueError(f"row {k} has index {row.index}")
            want = band_scheme(k)
            if row.scheme is not want:
                raise ValueError(f"row {k} should be {want}, got {row.scheme}")
            if row.bits_per_symbol != row.scheme.bits_per_symbol:
                raise ValueError(f"row {k}: bits per symbol does not match {row.scheme}")
            if not row.sinr_min_db < row.sinr_max_db:
                raise ValueError(f"row {k}: empty SINR band")
            if not 0 < row.spectral_efficiency <= row.bits_per_symbol:
                raise ValueError(f"row {k}: spectral efficiency out of range")
        for a, b in zip(lv, lv[1:]):
            if a.sinr_max_db != b.sinr_min_db:
                raise ValueError(f"gap or overlap between rows {a.index} and {b.index}")
        if not math.isinf(lv[-1].sinr_max_db):
            raise ValueError("last row must be open-ended")

    def __getitem__(self, index: int) -> CqiLevel:
        if not 1 <= index <= 15:
            raise IndexError(f"CQI level {index} outside 1..15")
        return self.levels[index - 1]

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)

    def map_to_level(self, sinr_db: float) -> int:
        """Row whose [min, max) band holds ``sinr_db``; clamps below row 1."""
        if math.isnan(sinr_db):
            raise ValueError("SINR is NaN")
        for row in reversed(self.levels):
            if sinr_db >= row.sinr_min_db:
                return row.index
        return 1

    def to_csv(self) -> str:
        """CSV text; SINR to 0.1 dB and efficiency to 4 places unless finer."""
        buf = io.StringIO()
        buf.write("index,scheme,bits,sinr_min_db,sinr_max_db,eff\n")
        for r in self.levels:
            buf.write(
                f"{r.index},{r.scheme},{r.bits_per_symbol},{_fmt(r.sinr_min_db, 1)},"
                f"{_fmt(r.sinr_max_db, 1)},{_fmt(r.spectral_efficiency, 4)}\n"
            )
        return buf.getvalue()


def _fmt(v: float, places: int) -> str:
    if math.isinf(v):
        return "inf"
    fixed = f"{v:.{places}f}"
    return fixed if float(fixed) == v else repr(v)


def _parse(text: str) -> CqiTable:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        scheme = Scheme.parse(rec["scheme"])
        rows.append(
            CqiLevel(
                index=int(rec["index"]),
                scheme=scheme,
                bits_per_symbol=int(rec["bits"]),
                sinr_min_db=float(rec["sinr_min_db"]),
                sinr_max_db=float(rec["sinr_max_db"]),
                spectral_efficiency=float(rec["eff"]),
            )
        )
    return CqiTable(rows)


def load_cqi_csv(path) -> CqiTable:
    """Read a table with columns index,scheme,bits,sinr_min_db,sinr_max_db,eff."""
    with open(path, newline="") as fh:
        return _parse(fh.read())


DEFAULT_TABLE = CqiTable(
    CqiLevel(i, Scheme.parse(s), Scheme.parse(s).bits_per_symbol, lo, hi, eff)
    for i, s, lo, hi, eff in _ROWS
)
