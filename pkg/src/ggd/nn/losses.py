"""Loss functions returning the value together with its input gradient."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ggd.errors import ArgumentError
from ggd.nn.core import sigmoid

log = logging.getLogger(__name__)

P_CLAMP = 1e-7


@dataclass
class LossValue:
    loss: float
    grad: Any
    flags: tuple = ()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits, label) -> LossValue:
    """Softmax cross-entropy for a single example."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.shape[0] < 2:
        raise ArgumentError("cross_entropy expects a vector of at least two logits")
    out = cross_entropy_batch(logits[None, :], np.array([label]))
    return LossValue(out.loss, out.grad[0])


def cross_entropy_batch(logits: np.ndarray, labels) -> LossValue:
    """Mean softmax cross-entropy over rows; gradient is w.r.t. the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    ls = log_softmax(logits)
    rows = np.arange(len(labels))
    loss = -ls[rows, labels].mean()
    grad = np.exp(ls)
    grad[rows, labels] -= 1.0
    return LossValue(float(loss), grad / len(labels))


def bce(p, y) -> LossValue:
    """Binary cross-entropy on a probability; gradient is dLoss/dp."""
    p = float(np.clip(p, P_CLAMP, 1.0 - P_CLAMP))
    loss = -(y * np.log(p) + (1 - y) * np.log(1.0 - p))
    grad = -(y / p) + (1 - y) / (1.0 - p)
    return LossValue(float(loss), float(grad))


def bce_with_logits(logits: np.ndarray, targets: np.ndarray, pos_weight: float = 1.0,
                    reduce: str = "mean") -> LossValue:
    """Numerically stable BCE on raw scores, optionally up-weighting positives."""
    s = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    # log(1 + exp(-|s|)) + max(s, 0) form of softplus
    softplus_neg = np.logaddexp(0.0, -s)   # -log sigmoid(s)
    softplus_pos = np.logaddexp(0.0, s)    # -log(1 - sigmoid(s))
    per = pos_weight * y * softplus_neg + (1.0 - y) * softplus_pos
    p = sigmoid(s)
    grad = pos_weight * y * (p - 1.0) + (1.0 - y) * p
    if reduce == "mean":
        return LossValue(float(per.mean()), grad / per.size)
    if reduce == "none":
        return LossValue(per, grad)
    return LossValue(float(per.sum()), grad)


def hinge_loss(score, y) -> LossValue:
    """``max(0, 1 - y * score)`` with its subgradient in ``score``."""
    margin = 1.0 - y * score
    if margin > 0:
        return LossValue(float(margin), float(-y))
    return LossValue(0.0, 0.0)


def hinge_batch(scores: np.ndarray, y: np.ndarray) -> LossValue:
    margin = 1.0 - y * scores
    active = margin > 0
    return LossValue(float(np.where(active, margin, 0.0).mean()), np.where(active, -y, 0.0) / len(y))


def _unit_rows(z: np.ndarray):
    norm = np.linalg.norm(z, axis=1)
    zero = norm == 0.0
    safe = np.where(zero, 1.0, norm)
    return z / safe[:, None], safe, zero


def nt_xent(z_i: np.ndarray, z_j: np.ndarray, tau: float) -> LossValue:
    """NT-Xent over a batch of positive pairs ``(z_i[n], z_j[n])``.

    For row ``n`` the positive similarity is compared against
    ``sim(z_i[n], z_j[m])`` for every ``m != n``; the positive pair is left out
    of the denominator, so the loss can go negative. Rows with zero norm get
    similarity 0 and no gradient. Returns ``grad = (dz_i, dz_j)``.
    """
    z_i = np.asarray(z_i, dtype=np.float64)
    z_j = np.asarray(z_j, dtype=np.float64)
    if z_i.shape != z_j.shape or z_i.ndim != 2 or z_i.shape[0] < 2:
        raise ArgumentError("nt_xent needs two (N, d) batches with N >= 2")
    if tau <= 0:
        raise ArgumentError("tau must be positive")
    n = z_i.shape[0]
    u_i, norm_i, zero_i = _unit_rows(z_i)
    u_j, norm_j, zero_j = _unit_rows(z_j)
    flags = ("zero_norm",) if zero_i.any() or zero_j.any() else ()
    if flags:
        log.warning("nt_xent: zero-norm embedding treated as similarity 0")
    sim = u_i @ u_j.T
    logits = sim / tau
    off = ~np.eye(n, dtype=bool)
    masked = np.where(off, logits, -np.inf)
    lse = np.logaddexp.reduce(masked, axis=1)
    per = -np.diag(logits) + lse
    weights = np.exp(masked - lse[:, None])  # softmax over negatives, zero on diagonal
    dsim = (weights - np.eye(n)) / (tau * n)
    du_i = dsim @ u_j
    du_j = dsim.T @ u_i
    dz_i = (du_i - u_i * (u_i * du_i).sum(axis=1, keepdims=True)) / norm_i[:, None]
    dz_j = (du_j - u_j * (u_j * du_j).sum(axis=1, keepdims=True)) / norm_j[:, None]
    dz_i[zero_i] = 0.0
    dz_j[zero_j] = 0.0
    return LossValue(float(per.mean()), (dz_i, dz_j), flags)
