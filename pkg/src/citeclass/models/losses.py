"""Training losses over logits, with gradients.

Values agree with the probability-space functions in ``citeclass.balance``
(tested to 1e-12); this module additionally provides d(loss)/d(logits)
for the from-scratch trainer.
"""

from __future__ import annotations

import numpy as np

from ..balance import LossConfig, PROB_FLOOR


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    logits: np.ndarray,
    labels: np.ndarray,
    cfg: LossConfig,
) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient with respect to the logits."""
    if logits.shape[0] == 0:
        raise ValueError("empty batch")
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    probs = softmax(logits)
    rows = np.arange(n)
    p_raw = probs[rows, labels]
    p_y = np.maximum(p_raw, PROB_FLOOR)
    log_p = np.log(p_y)

    if cfg.class_weights is not None:
        weights = np.asarray(cfg.class_weights, dtype=np.float64)
        if weights.shape != (k,):
            raise ValueError("class_weights must have one entry per class")
        w = weights[labels]
    else:
        w = np.ones(n)

    if cfg.kind == "focal":
        gamma = cfg.gamma
        t = 1.0 - p_y
        focus = np.power(t, gamma)
        per = -w * focus * log_p
        if gamma == 0.0:
            dper_dp = -w / p_y
        else:
            # d/dp [-w (1-p)^g log p]; (1-p)^(g-1) -> 0 limit as p -> 1 for g > 0
            behind = np.where(t > 0.0, np.power(np.maximum(t, PROB_FLOOR), gamma - 1.0), 0.0)
            dper_dp = -w * (-gamma * behind * log_p + focus / p_y)
    else:  # cross_entropy / weighted_cross_entropy
        per = -w * log_p
        dper_dp = -w / p_y

    dper_dp = np.where(p_raw >= PROB_FLOOR, dper_dp, 0.0)  # floored region: no gradient
    loss = float(per.mean())

    onehot = np.zeros_like(probs)
    onehot[rows, labels] = 1.0
    # dp_y/dz_j = p_y * (1[j==y] - p_j), then mean over the batch
    dlogits = dper_dp[:, None] * p_raw[:, None] * (onehot - probs) / n
    return loss, dlogits
