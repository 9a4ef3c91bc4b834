"""Token-level negative log-likelihood over caller-supplied decoder distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import KernelDomainError, as_matrix, logsumexp_rows


@dataclass(frozen=True)
class NllBatch:
    """One ``M_i x V`` block of per-step log-probabilities per sample.

    ``mask`` entries are 0/1 validity flags per step; ``None`` means all valid.
    """

    logprobs: tuple
    targets: tuple
    mask: tuple | None = None

    def __post_init__(self):
        lp = tuple(as_matrix(b, "logprobs") for b in self.logprobs)
        tg = tuple(np.asarray(t, dtype=np.int64) for t in self.targets)
        if not lp:
            raise KernelDomainError("NLL batch needs at least one sample")
        if len(tg) != len(lp):
            raise KernelDomainError("one target sequence per sample required")
        if self.mask is None:
            mk = tuple(np.ones(len(b)) for b in lp)
        else:
            mk = tuple(np.asarray(m, dtype=np.float64) for m in self.mask)
        for b, t, m in zip(lp, tg, mk):
            if t.shape != (len(b),) or m.shape != (len(b),):
                raise KernelDomainError("targets and mask must have one entry per step")
            if np.any((m != 0) & (m != 1)):
                raise KernelDomainError("mask entries must be 0 or 1")
            if np.any(t < 0) or np.any(t >= b.shape[1]):
                raise IndexError(f"target id out of range for vocabulary size {b.shape[1]}")
        object.__setattr__(self, "logprobs", lp)
        object.__setattr__(self, "targets", tg)
        object.__setattr__(self, "mask", mk)

    def check_normalized(self, tol: float = 1e-9):
        for b in self.logprobs:
            if len(b) and np.max(np.abs(logsumexp_rows(b))) > tol:
                raise KernelDomainError("logprob rows must each be a log-distribution")


def nll_loss(batch: NllBatch, check: bool = True) -> float:
    """``-(1/B) * sum_i sum_t mask * logprob[t, y_t]``.

    ``check=False`` skips the row-normalization test (used for finite differences).
    """
    if check:
        batch.check_normalized()
    total = 0.0
    for b, t, m in zip(batch.logprobs, batch.targets, batch.mask):
        total += float(np.sum(m * b[np.arange(len(t)), t]))
    return -total / len(batch.logprobs)


def nll_grad(batch: NllBatch) -> list[np.ndarray]:
    """Gradient of :func:`nll_loss` wrt each logprob block."""
    n = len(batch.logprobs)
    grads = []
    for b, t, m in zip(batch.logprobs, batch.targets, batch.mask):
        g = np.zeros_like(b)
        g[np.arange(len(t)), t] = -m / n
        grads.append(g)
    return grads
