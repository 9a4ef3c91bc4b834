"""Reference numerical kernels (double precision, row-per-token convention)."""

from ._util import KernelDomainError, as_matrix, softmax_rows
from .alignment import (
    DEFAULT_TAU,
    AlignmentBatch,
    InstanceAlignment,
    PretrainLoss,
    TokenAlignment,
    cosine_sim,
    instance_alignment_loss,
    pretrain_loss,
    symmetric_infonce,
    token_alignment_loss,
)
from .attention import (
    LN_EPS,
    CmfWeights,
    attention_backward,
    attention_forward,
    cmf_backward,
    cmf_forward,
    cross_attention,
    layer_norm,
)
from .evidence import evidence_features
from .gradcheck import KERNEL_OPS, GradCheckResult, check_kernels, grad_check, numeric_grad
from .nll import NllBatch, nll_grad, nll_loss

__all__ = [
    "AlignmentBatch",
    "CmfWeights",
    "DEFAULT_TAU",
    "GradCheckResult",
    "InstanceAlignment",
    "KERNEL_OPS",
    "KernelDomainError",
    "LN_EPS",
    "NllBatch",
    "PretrainLoss",
    "TokenAlignment",
    "as_matrix",
    "attention_backward",
    "attention_forward",
    "check_kernels",
    "cmf_backward",
    "cmf_forward",
    "cosine_sim",
    "cross_attention",
    "evidence_features",
    "grad_check",
    "instance_alignment_loss",
    "layer_norm",
    "nll_grad",
    "nll_loss",
    "numeric_grad",
    "pretrain_loss",
    "softmax_rows",
    "symmetric_infonce",
    "token_alignment_loss",
]
