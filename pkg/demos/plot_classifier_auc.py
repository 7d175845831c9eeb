"""
Logistic regression and AUC
===========================

Fit one-vs-rest classifiers on a toy five-level problem and score them with
the repeated stratified split protocol.
"""

import numpy as np

from visent.evaluation import auc, render_table, run_protocol
from visent.model import TrainConfig, predict_scores, train_lr, train_one_vs_rest

rng = np.random.default_rng(2)

# a single binary model: the loss trace never goes up
X = rng.normal(0, 1, (200, 5))
y = (X[:, 0] - X[:, 1] + rng.normal(0, 0.5, 200) > 0).astype(float)
model = train_lr(X, y, TrainConfig(epochs=200))
print("loss", round(model.loss_trace[0], 4), "->", round(model.loss_trace[-1], 4))
scores = predict_scores(model, X)
print("training AUC", round(auc(scores[y == 1], scores[y == 0]), 3))

# ties count one half
print("auc with ties:", auc([0.3, 0.5, 0.5], [0.5, 0.3, 0.5]))

# five sentiment levels, each with its own mean direction
labels = [int(v) for v in rng.integers(-2, 3, 300)]
centres = rng.normal(0, 1.2, (5, 8))
feats = np.stack([centres[lab + 2] for lab in labels]) + rng.normal(0, 1, (300, 8))
ovr = train_one_vs_rest(feats, labels, TrainConfig(epochs=100))
print("one-vs-rest labels", ovr.labels)

report = run_protocol(feats, labels, TrainConfig(epochs=100), runs=5, method="toy")
print(render_table([report]), end="")
print("seeds", report.seeds)
