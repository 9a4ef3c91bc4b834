"""Factuality-guided contrastive alignment losses with analytic gradients.

Row convention throughout: a feature matrix has one sample (or token) per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import KernelDomainError, as_matrix, check_positive, logsumexp_rows, softmax_rows
from .attention import attention_backward, attention_forward

DEFAULT_TAU = 0.07


def cosine_sim(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise KernelDomainError(f"length mismatch: {a.size} vs {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise KernelDomainError("cosine similarity is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _normalize_rows(m: np.ndarray, name: str):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise KernelDomainError(f"{name} has an all-zero row")
    return m / norms, norms


def _normalize_backward(g, unit, norms):
    # d(x/|x|) applied to upstream g
    return (g - unit * np.sum(g * unit, axis=1, keepdims=True)) / norms


def _row_infonce(logits: np.ndarray):
    """Mean over rows of -log softmax(row)[diag] and its gradient wrt ``logits``."""
    n = logits.shape[0]
    loss = float(np.mean(logsumexp_rows(logits) - np.diag(logits)))
    grad = softmax_rows(logits)
    grad[np.diag_indices(n)] -= 1.0
    return loss, grad / n


def symmetric_infonce(a: np.ndarray, b: np.ndarray, tau: float):
    """Two-direction InfoNCE over cosine similarities between rows of ``a`` and ``b``.

    Returns ``(loss_rows, loss_cols, grad_a, grad_b)`` where the gradients are of
    ``0.5 * (loss_rows + loss_cols)``.
    """
    ua, na = _normalize_rows(a, "a")
    ub, nb = _normalize_rows(b, "b")
    # elementwise product-sum keeps logits(b, a) bitwise equal to logits(a, b).T
    logits = np.sum(ua[:, None, :] * ub[None, :, :], axis=2) / tau
    loss_rows, g_rows = _row_infonce(logits)
    # transposed copy so that swapping a and b reproduces the same arithmetic
    loss_cols, g_cols = _row_infonce(np.ascontiguousarray(logits.T))
    g_logits = 0.5 * (g_rows + g_cols.T) / tau
    grad_a = _normalize_backward(g_logits @ ub, ua, na)
    grad_b = _normalize_backward(g_logits.T @ ua, ub, nb)
    return loss_rows, loss_cols, grad_a, grad_b


@dataclass(frozen=True)
class AlignmentBatch:
    x_global: np.ndarray  # B x d, image global features
    t_global: np.ndarray  # B x d, serialization global features
    tau1: float = DEFAULT_TAU
    tau2: float = DEFAULT_TAU

    def __post_init__(self):
        x = as_matrix(self.x_global, "x_global")
        t = as_matrix(self.t_global, "t_global")
        if x.shape != t.shape or x.shape[0] < 1 or x.shape[1] < 1:
            raise KernelDomainError(f"x_global {x.shape} and t_global {t.shape} must be equal, non-empty B x d")
        if not (np.all(np.any(x != 0, axis=1)) and np.all(np.any(t != 0, axis=1))):
            raise KernelDomainError("global features must not contain all-zero rows")
        object.__setattr__(self, "x_global", x)
        object.__setattr__(self, "t_global", t)


@dataclass(frozen=True)
class InstanceAlignment:
    loss: float
    loss_image_from_report: float
    loss_report_from_image: float
    grad_x: np.ndarray
    grad_t: np.ndarray


def instance_alignment_loss(x_global, t_global, tau1: float = DEFAULT_TAU) -> InstanceAlignment:
    """Global image/report InfoNCE averaged over both directions.

    ``loss_image_from_report`` softmaxes each image row over all reports in the
    batch; ``loss_report_from_image`` is the transposed direction.
    """
    tau1 = check_positive(tau1, "tau1")
    batch = AlignmentBatch(x_global, t_global, tau1)
    l_ir, l_ri, gx, gt = symmetric_infonce(batch.x_global, batch.t_global, tau1)
    return InstanceAlignment(0.5 * (l_ir + l_ri), l_ir, l_ri, gx, gt)


@dataclass(frozen=True)
class TokenAlignment:
    loss: float
    grad_t: np.ndarray  # N_R x d, zero on masked rows
    grad_x: np.ndarray  # n_patches x d
    t_tilde: np.ndarray  # cross-attended text features for the kept positions


def token_alignment_loss(t_loc, x_loc, tau2: float = DEFAULT_TAU, mask=None) -> TokenAlignment:
    """Within-sample token alignment between text tokens and their visual cross-attention.

    Positive pairs are the same token position; other positions of the same sample
    are negatives. Positions with ``mask == 0`` (padding) are dropped entirely.
    """
    tau2 = check_positive(tau2, "tau2")
    t_loc = as_matrix(t_loc, "t_loc")
    x_loc = as_matrix(x_loc, "x_loc")
    keep = np.ones(len(t_loc), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if keep.shape != (len(t_loc),):
        raise KernelDomainError("mask length must equal the number of text tokens")
    if not keep.any():
        raise KernelDomainError("token alignment needs at least one unmasked token")
    t = t_loc[keep]
    t_tilde, probs = attention_forward(t, x_loc, x_loc)
    l_row, l_col, g_t, g_tt = symmetric_infonce(t, t_tilde, tau2)
    dq, dk, dv = attention_backward(g_tt, t, x_loc, x_loc, probs)
    grad_t = np.zeros_like(t_loc)
    grad_t[keep] = g_t + dq
    return TokenAlignment(0.5 * (l_row + l_col), grad_t, dk + dv, t_tilde)


@dataclass(frozen=True)
class PretrainLoss:
    loss: float
    global_loss: float
    local_loss: float
    local_per_sample: tuple[float, ...]


def pretrain_loss(batch: AlignmentBatch, t_locs, x_locs, masks=None) -> PretrainLoss:
    """Instance alignment plus the batch mean of per-sample token alignment."""
    if len(t_locs) != len(batch.x_global) or len(x_locs) != len(batch.x_global):
        raise KernelDomainError("need one local feature block per sample")
    masks = masks if masks is not None else [None] * len(t_locs)
    glob = instance_alignment_loss(batch.x_global, batch.t_global, batch.tau1).loss
    local = tuple(
        token_alignment_loss(t, x, batch.tau2, m).loss for t, x, m in zip(t_locs, x_locs, masks)
    )
    local_mean = sum(local) / len(local)
    return PretrainLoss(glob + local_mean, glob, local_mean, local)
