"""
Sampled softmax against the exact loss
======================================

With every other node drawn as a negative the corrected sampled loss is
exactly the full softmax.  With fewer negatives it is a cheaper, noisy
stand-in.
"""

import numpy as np

from sne.model import SampledSoftmaxConfig, SneModel, full_softmax_nll, sampled_softmax_nll_grad
from sne.walks import WalkSample

rng = np.random.default_rng(0)
n, d = 50, 8
model = SneModel(rng.normal(size=(n, d)), rng.normal(size=(n, d)),
                 rng.normal(size=d), rng.normal(size=d), np.zeros(n))
sample = WalkSample(path=(3, 17, 8), signs=(1, -1, 1), target=21)

print("exact nll", full_softmax_nll(model, sample))
for k in (5, 20, n - 1):
    losses = [sampled_softmax_nll_grad(model, sample, SampledSoftmaxConfig(k), rng).loss
              for _ in range(200)]
    print(f"k={k:2d}: mean {np.mean(losses):.4f}  std {np.std(losses):.4f}")
