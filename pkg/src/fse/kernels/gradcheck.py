"""Central finite-difference checks of the analytic kernel gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .alignment import DEFAULT_TAU, instance_alignment_loss, token_alignment_loss
from .attention import CmfWeights, cmf_backward, cmf_forward
from .nll import NllBatch, nll_grad, nll_loss

DEFAULT_THRESHOLD = 1e-4


@dataclass(frozen=True)
class KernelOp:
    """A scalar function of a ``point`` dict plus its analytic gradient.

    ``grad`` returns gradients only for the differentiable entries of the point;
    everything else (temperatures, targets, masks, probes) is held fixed.
    """

    name: str
    value: Callable[[dict], float]
    grad: Callable[[dict], dict]
    sample: Callable[[np.random.Generator], dict]


# instance alignment ---------------------------------------------------------

def _instance_sample(rng):
    b, d = rng.integers(2, 6), rng.integers(2, 7)
    return {"x_global": rng.normal(size=(b, d)), "t_global": rng.normal(size=(b, d)), "tau1": DEFAULT_TAU}


def _instance_grad(p):
    res = instance_alignment_loss(p["x_global"], p["t_global"], p["tau1"])
    return {"x_global": res.grad_x, "t_global": res.grad_t}


INSTANCE = KernelOp(
    "instance_alignment_loss",
    lambda p: instance_alignment_loss(p["x_global"], p["t_global"], p["tau1"]).loss,
    _instance_grad,
    _instance_sample,
)


# token alignment ------------------------------------------------------------

def _token_sample(rng):
    n_r, n_x, d = rng.integers(2, 7), rng.integers(3, 10), rng.integers(2, 7)
    mask = np.ones(n_r)
    if n_r > 2 and rng.random() < 0.5:
        mask[-1] = 0.0
    return {"t_loc": rng.normal(size=(n_r, d)), "x_loc": rng.normal(size=(n_x, d)), "tau2": DEFAULT_TAU, "mask": mask}


def _token_grad(p):
    res = token_alignment_loss(p["t_loc"], p["x_loc"], p["tau2"], p["mask"])
    return {"t_loc": res.grad_t, "x_loc": res.grad_x}


TOKEN = KernelOp(
    "token_alignment_loss",
    lambda p: token_alignment_loss(p["t_loc"], p["x_loc"], p["tau2"], p["mask"]).loss,
    _token_grad,
    _token_sample,
)


# fusion block under a fixed linear probe ---------------------------------------

def _cmf_parts(p):
    weights = CmfWeights(**{k[2:]: v for k, v in p.items() if k.startswith("w.")})
    return p["x"], p["t_e"], weights


def _cmf_value(p):
    x, t_e, w = _cmf_parts(p)
    return float(np.sum(p["probe"] * cmf_forward(x, t_e, w)))


def _cmf_grad(p):
    x, t_e, w = _cmf_parts(p)
    g = cmf_backward(x, t_e, w, p["probe"])
    return {("w." + k if k not in ("x", "t_e") else k): v for k, v in g.items()}


def _cmf_sample(rng):
    d = int(rng.integers(2, 5))
    n_x, n_e = rng.integers(1, 4), rng.integers(1, 4)
    w = CmfWeights.random(d, d_ff=2 * d, rng=rng)
    point = {"x": rng.normal(size=(n_x, d)), "t_e": rng.normal(size=(n_e, d)), "probe": rng.normal(size=(n_x, d))}
    point.update({"w." + k: v for k, v in w.arrays().items()})
    return point


CMF = KernelOp("cmf_forward", _cmf_value, _cmf_grad, _cmf_sample)


# decoder NLL -------------------------------------------------------------------

def _nll_batch(p):
    n = p["num_samples"]
    return NllBatch(
        tuple(p[f"logprobs.{i}"] for i in range(n)),
        tuple(p[f"targets.{i}"] for i in range(n)),
        tuple(p[f"mask.{i}"] for i in range(n)),
    )


def _nll_grad(p):
    return {f"logprobs.{i}": g for i, g in enumerate(nll_grad(_nll_batch(p)))}


def _nll_sample(rng):
    n, v = int(rng.integers(1, 4)), int(rng.integers(2, 7))
    point = {"num_samples": n}
    for i in range(n):
        m = int(rng.integers(1, 5))
        logits = rng.normal(size=(m, v))
        point[f"logprobs.{i}"] = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        point[f"targets.{i}"] = rng.integers(0, v, size=m)
        point[f"mask.{i}"] = (rng.random(m) < 0.8).astype(float)
    return point


NLL = KernelOp("nll_loss", lambda p: nll_loss(_nll_batch(p), check=False), _nll_grad, _nll_sample)

KERNEL_OPS = {op.name: op for op in (INSTANCE, TOKEN, CMF, NLL)}


def numeric_grad(value, point: dict, key: str, eps: float) -> np.ndarray:
    base = np.asarray(point[key], dtype=np.float64)
    out = np.zeros_like(base)
    for ix in np.ndindex(base.shape):
        shifted = base.copy()
        shifted[ix] = base[ix] + eps
        f_plus = value({**point, key: shifted})
        shifted[ix] = base[ix] - eps
        f_minus = value({**point, key: shifted})
        out[ix] = (f_plus - f_minus) / (2 * eps)
    return out


def grad_check(op, point: dict, eps: float = 1e-6) -> float:
    """Max over all coordinates of ``|analytic - numeric| / max(1, |numeric|)``."""
    if not 1e-8 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-8, 1e-3], got {eps}")
    op = KERNEL_OPS[op] if isinstance(op, str) else op
    analytic = op.grad(point)
    worst = 0.0
    for key, g in analytic.items():
        num = numeric_grad(op.value, point, key, eps)
        err = np.abs(g - num) / np.maximum(1.0, np.abs(num))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst


@dataclass(frozen=True)
class GradCheckResult:
    operation: str
    seed: int
    point_index: int
    eps: float
    max_rel_error: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.threshold


def check_kernels(seed: int = 42, eps: float = 1e-6, n_points: int = 20,
                  threshold: float = DEFAULT_THRESHOLD, ops=None,
                  tau1: float = DEFAULT_TAU, tau2: float = DEFAULT_TAU) -> list[GradCheckResult]:
    """Run ``grad_check`` at ``n_points`` random points per operation."""
    results = []
    for name in ops or KERNEL_OPS:
        op = KERNEL_OPS[name]
        rng = np.random.default_rng([seed, list(KERNEL_OPS).index(name)])
        for i in range(n_points):
            point = op.sample(rng)
            for key, tau in (("tau1", tau1), ("tau2", tau2)):
                if key in point:
                    point[key] = tau
            err = grad_check(op, point, eps)
            results.append(GradCheckResult(name, seed, i, eps, err, threshold))
    return results
