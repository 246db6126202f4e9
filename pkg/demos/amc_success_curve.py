"""How often does the blind classifier name the right constellation?

A reduced version of the full sweep (50 frames per cell instead of 500) so it
finishes in a couple of minutes. Run: python demos/amc_success_curve.py
"""

from nomalink.config import SimConfig
from nomalink.sim import run_amc_sweep

cfg = SimConfig(trials=50, snr_sweep_db=(-4.0, 0.0, 4.0, 8.0, 12.0, 16.0))


def show(cell):
    bar = "#" * round(cell.rate * 40)
    print(f"{str(cell.scheme):>6} {cell.snr_db:6.1f} dB  {cell.rate:5.2f}  {bar}")


print("true scheme, SNR, success rate over", cfg.trials, "frames of", cfg.frame_symbols, "symbols")
run_amc_sweep(cfg, progress=show)
