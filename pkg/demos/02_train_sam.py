"""
Training the SAM classifier and looking at what it learned
==========================================================

"""

import random

import numpy as np

from samaqm.sam import LabelPolicy, PatternWindow, gen_dataset, label, train_sam
from samaqm.svm import decision_value

# the teacher: recency-weighted utilization plus the trend over the window
policy = LabelPolicy()
for x in [(0, 0, 0, 0, 0), (0.3, 0.4, 0.5, 0.6, 0.7), (0.7, 0.6, 0.5, 0.4, 0.3), (1, 1, 1, 1, 1)]:
    print(f"{x}  score={policy.score(x):.3f}  label={label(x, policy):+d}")

# a dataset mixes uniform patterns with smooth random walks
data = gen_dataset(1000, policy, random.Random(0))
drops = sum(s.y > 0 for s in data)
print(f"\n{len(data)} patterns, {drops} labeled drop")

# fit the SVM on the default 2000-pattern set
report = train_sam(n=2000, seed=0)
print(f"training accuracy {report.accuracy:.4f} with {report.n_support} support vectors")
model = report.model

# a flat queue: where does the classifier switch from enqueue to drop?
levels = np.linspace(0, 1, 21)
f = [decision_value(model, [u] * 5) for u in levels]
edge = levels[np.argmax(np.array(f) > 0)]
print(f"flat patterns start dropping at utilization ~{edge:.2f}")

# the same level is treated differently when the queue is rising or falling
rising = (0.25, 0.3, 0.35, 0.4, 0.45)
falling = rising[::-1]
print(f"rising  {rising}  f={decision_value(model, rising):+.2f}")
print(f"falling {falling}  f={decision_value(model, falling):+.2f}")

# cold start: a fresh window is zero padded and always enqueues
w = PatternWindow()
print("cold start", w.features(), f"f={decision_value(model, w.features()):+.2f}")
