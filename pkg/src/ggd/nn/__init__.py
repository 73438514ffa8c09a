from ggd.nn.core import (
    IDENTITY, RELU, Dense, GcnLayer, GcnStack, GraphBatch, MLP, gcn_backward, gcn_forward,
    gcn_forward_cached, mean_pool, normalize_adjacency, sigmoid,
)
from ggd.nn.gradcheck import grad_check
from ggd.nn.gru import GRUCell
from ggd.nn.losses import (
    LossValue, bce, bce_with_logits, cross_entropy, cross_entropy_batch, hinge_batch, hinge_loss,
    nt_xent, softmax,
)
from ggd.nn.optim import AdamState, adam_step
from ggd.nn.serialize import dumps_bundle, load_bundle, loads_bundle, save_bundle

__all__ = [
    "IDENTITY", "RELU", "AdamState", "Dense", "GRUCell", "GcnLayer", "GcnStack", "GraphBatch",
    "LossValue", "MLP", "adam_step", "bce", "bce_with_logits", "cross_entropy",
    "cross_entropy_batch", "dumps_bundle", "gcn_backward", "gcn_forward", "gcn_forward_cached",
    "grad_check", "hinge_batch", "hinge_loss", "load_bundle", "loads_bundle", "mean_pool",
    "normalize_adjacency", "nt_xent", "save_bundle", "sigmoid", "softmax",
]
