"""
How the classic controllers turn queue state into a drop probability
====================================================================

"""

import random

import numpy as np

from samaqm.aqm import Blue, BlueParams, Pi, PiParams, Red, RedParams

# RED: zero below min_th, a linear ramp up to max_p, then drop everything
red = Red(RedParams(min_th=100, max_th=300, max_p=0.1))
for avg in np.arange(0, 401, 50):
    red.avg, red.count = float(avg), 0
    print(f"RED  avg={avg:5.0f}  p={red.drop_probability():.3f}")

# the count term spreads drops out: p grows with every packet admitted since the last drop
red.avg = 200.0
for count in (0, 5, 10, 15):
    red.count = count
    print(f"RED  avg=200 count={count:2d}  p={red.drop_probability():.3f}")

# Blue ignores queue length; overflow pushes p_m up, an idle link pulls it down
blue = Blue(BlueParams(d1=0.02, d2=0.002, freeze_time=0.1))
t = 0.0
for event in ["overflow"] * 5 + ["idle"] * 5:
    t += 0.15
    (blue.on_overflow if event == "overflow" else blue.on_idle)(t)
    print(f"Blue t={t:.2f}  {event:8s}  p_m={blue.p_m:.3f}")

# PI integrates the queue error on a fixed tick
pi = Pi(PiParams(a=1e-3, b=9e-4, q_ref=200))
rng = random.Random(1)
q = 200.0
for k in range(10):
    q = max(0.0, q + rng.gauss(20, 10))
    print(f"PI   tick={k}  q={q:6.1f}  p={pi.update(q):.4f}")

# the law has a fixed point at q_ref: once q_old has caught up, p stops moving
held = pi.update(200)
for _ in range(100):
    pi.update(200)
print(f"PI   q back at q_ref: p={held:.4f}, 100 ticks later p={pi.p:.4f}")
