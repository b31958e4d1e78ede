"""
Retrieval and grounding metrics
===============================
"""

# %%
import numpy as np

from egocurate.metrics import format_recall_table, iou, recall_at_k, retrieval_metrics

rng = np.random.default_rng(1)
relevance = (rng.random((8, 8)) < 0.25) * rng.random((8, 8))
np.fill_diagonal(relevance, 1.0)
scores = relevance + 0.3 * rng.normal(size=relevance.shape)
for k, v in retrieval_metrics(scores, relevance).items():
    print(f"{k:9} {v:.4f}")

# %%
print("IoU of [2, 6] and [4, 8]:", iou((2, 6), (4, 8)))
gt = [(4.0, 8.0), (10.0, 12.0), (0.0, 3.0)]
preds = [[(2.0, 6.0), (4.5, 8.0)], [(10.0, 12.0)], [(20.0, 21.0)]]
for cell, value in format_recall_table(recall_at_k(preds, gt)).items():
    print(f"{cell:12} {value:.3f}")
