from __future__ import annotations

import numpy as np


class KernelDomainError(ValueError):
    """Inputs outside a kernel's domain (zero vectors, bad shapes, bad temperatures)."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise KernelDomainError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise KernelDomainError(f"{name} has non-finite entries")
    return m


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise KernelDomainError(f"{name} must be positive, got {value}")
    return float(value)


def softmax_rows(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - s.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def logsumexp_rows(s: np.ndarray) -> np.ndarray:
    m = s.max(axis=1)
    return m + np.log(np.exp(s - m[:, None]).sum(axis=1))
