from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from ._util import KernelDomainError


def _case_text(case) -> str:
    return case if isinstance(case, str) else case.rendered


def evidence_features(cases, embed) -> np.ndarray:
    """Stack token features of the retrieved cases' serializations.

    ``embed`` maps a word to a ``d``-vector (a mapping or a callable) and stands
    in for the frozen text encoder. Row 0 is the mean of all token rows; the
    remaining ``sum(N_u)`` rows are the per-case blocks in case order.
    """
    cases = list(cases)
    if not cases:
        raise KernelDomainError("evidence features need at least one similar case")
    lookup = embed.__getitem__ if isinstance(embed, Mapping) else embed
    rows = [np.asarray(lookup(w), dtype=np.float64) for c in cases for w in _case_text(c).split()]
    if not rows:
        raise KernelDomainError("similar cases contain no tokens")
    tokens = np.vstack(rows)
    return np.vstack([tokens.mean(axis=0, keepdims=True), tokens])
