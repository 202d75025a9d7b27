"""
Four controllers on the desk-scale dumbbell
===========================================

20 HTTP and 10 FTP flows share a 1 Mbps bottleneck with a 200-packet buffer.
"""

import tempfile
from pathlib import Path

import numpy as np

from samaqm.config import parse_config
from samaqm.metrics import format_table
from samaqm.sam import train_sam
from samaqm.scenario import run_scenario

# SAM reads its classifier from a model file like any deployment would
tmp = Path(tempfile.mkdtemp())
train_sam(path=tmp / "sam.model")

base = parse_config(None, [f"sam.model_path={tmp / 'sam.model'}", "seed=0"],
                    preset="desk", require_controller=False)

results = {c: run_scenario(base, c) for c in ("red", "blue", "pi", "sam")}
print(format_table([r.summary for r in results.values()]))

# queue trace after warmup, one character per second
bars = " .:-=+*#%@"
for name, r in results.items():
    q = np.array(r.log.tick_values, dtype=float).reshape(-1, 10).mean(1)[10:]
    line = "".join(bars[min(9, int(v / base.buffer_packets * 10))] for v in q)
    print(f"{name:5s} cv={r.summary.queue_cv:.3f} |{line}|")
