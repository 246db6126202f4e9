"""Follow the two-user link adaptation loop for a few frames, then compare schemes.

Each frame is sent with the decision made on the previous one: the receiver
classifies both users, estimates their SINR, and picks next frame's
modulation, coding rate and power.
"""

from nomalink.config import SimConfig
from nomalink.sim import comparison_csv, run_baseline_comparison, run_closed_loop

cfg = SimConfig(frames=60, seed=3)
records = list(run_closed_loop(cfg))

for rec in records[:12]:
    parts = []
    for n, u in enumerate(rec.users, start=1):
        d = u.decision
        parts.append(
            f"u{n}: sent {u.true_scheme}@{u.tx_power:.3f} seen {u.detected} {u.sinr_db:5.1f} dB"
            f" -> {d.scheme} L{d.level_used} ({d.situation})"
        )
    print(f"frame {rec.frame:2d}  " + " | ".join(parts) + f" | carried {rec.capacity.throughput:.2f} b/s/Hz")

rows, _ = run_baseline_comparison(cfg, records=records)
print()
print(comparison_csv(rows), end="")
