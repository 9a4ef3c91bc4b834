"""Single-head scaled dot-product attention and the cross-modal fusion block."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ._util import KernelDomainError, as_matrix, softmax_rows

LN_EPS = 1e-5


def _check_qkv(q, k, v):
    q, k, v = as_matrix(q, "Q"), as_matrix(k, "K"), as_matrix(v, "V")
    if q.shape[1] == 0:
        raise KernelDomainError("attention needs d >= 1")
    if k.shape[0] == 0:
        raise KernelDomainError("attention needs at least one key")
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise KernelDomainError(f"incompatible shapes Q{q.shape} K{k.shape} V{v.shape}")
    return q, k, v


def attention_forward(q, k, v):
    """Return ``(softmax(q k^T / sqrt(d)) v, attention_probs)``."""
    q, k, v = _check_qkv(q, k, v)
    probs = softmax_rows(q @ k.T / np.sqrt(q.shape[1]))
    return probs @ v, probs


def attention_backward(d_out, q, k, v, probs):
    scale = 1.0 / np.sqrt(q.shape[1])
    dv = probs.T @ d_out
    dp = d_out @ v.T
    ds = probs * (dp - np.sum(dp * probs, axis=1, keepdims=True))
    return ds @ k * scale, ds.T @ q * scale, dv


def cross_attention(q, k, v) -> np.ndarray:
    return attention_forward(q, k, v)[0]


def layer_norm(x, gamma, beta, eps=LN_EPS):
    """Row-wise layer norm; returns ``(y, (x_hat, inv_std))``."""
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mu) * inv_std
    return x_hat * gamma + beta, (x_hat, inv_std)


def layer_norm_backward(dy, gamma, cache):
    x_hat, inv_std = cache
    n = x_hat.shape[1]
    dx_hat = dy * gamma
    dx = inv_std / n * (
        n * dx_hat
        - dx_hat.sum(axis=1, keepdims=True)
        - x_hat * np.sum(dx_hat * x_hat, axis=1, keepdims=True)
    )
    return dx, np.sum(dy * x_hat, axis=0), dy.sum(axis=0)


@dataclass
class CmfWeights:
    """Parameters of the fusion block. Projections act on rows: ``X @ w_qs``."""

    w_qs: np.ndarray
    w_ks: np.ndarray
    w_vs: np.ndarray
    w_qc: np.ndarray
    w_kc: np.ndarray
    w_vc: np.ndarray
    ffn_w1: np.ndarray  # d x d_ff
    ffn_b1: np.ndarray
    ffn_w2: np.ndarray  # d_ff x d
    ffn_b2: np.ndarray
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    ln3_gamma: np.ndarray
    ln3_beta: np.ndarray
    epsilon: float = LN_EPS

    @property
    def dim(self) -> int:
        return self.w_qs.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "epsilon"}

    def replace(self, **arrays) -> "CmfWeights":
        return CmfWeights(**{**self.arrays(), **arrays}, epsilon=self.epsilon)

    def check(self):
        d = self.dim
        d_ff = self.ffn_w1.shape[1] if self.ffn_w1.ndim == 2 else -1
        expected = {
            **{name: (d, d) for name in ("w_qs", "w_ks", "w_vs", "w_qc", "w_kc", "w_vc")},
            "ffn_w1": (d, d_ff),
            "ffn_b1": (d_ff,),
            "ffn_w2": (d_ff, d),
            "ffn_b2": (d,),
            **{f"ln{i}_{p}": (d,) for i in (1, 2, 3) for p in ("gamma", "beta")},
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise KernelDomainError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not self.epsilon > 0:
            raise KernelDomainError("epsilon must be positive")

    @classmethod
    def random(cls, d: int, d_ff: int | None = None, rng=None, scale: float | None = None) -> "CmfWeights":
        rng = np.random.default_rng(rng)
        d_ff = d_ff or 4 * d
        s = scale if scale is not None else 1.0 / np.sqrt(d)
        mat = lambda *shape: rng.normal(0.0, s, size=shape)  # noqa: E731
        return cls(
            *(mat(d, d) for _ in range(6)),
            ffn_w1=mat(d, d_ff),
            ffn_b1=rng.normal(0.0, 0.1, size=d_ff),
            ffn_w2=mat(d_ff, d),
            ffn_b2=rng.normal(0.0, 0.1, size=d),
            ln1_gamma=1.0 + rng.normal(0.0, 0.1, size=d),
            ln1_beta=rng.normal(0.0, 0.1, size=d),
            ln2_gamma=1.0 + rng.normal(0.0, 0.1, size=d),
            ln2_beta=rng.normal(0.0, 0.1, size=d),
            ln3_gamma=1.0 + rng.normal(0.0, 0.1, size=d),
            ln3_beta=rng.normal(0.0, 0.1, size=d),
        )


def _cmf(x, t_e, w: CmfWeights):
    x = as_matrix(x, "X")
    t_e = as_matrix(t_e, "T_e")
    w.check()
    if x.shape[1] != w.dim or t_e.shape[1] != w.dim:
        raise KernelDomainError(f"X {x.shape} and T_e {t_e.shape} must have {w.dim} columns")
    if t_e.shape[0] < 1:
        raise KernelDomainError("T_e needs at least one evidence row")
    eps = w.epsilon

    qs, ks, vs = x @ w.w_qs, x @ w.w_ks, x @ w.w_vs
    a1, p1 = attention_forward(qs, ks, vs)
    x_s, ln1 = layer_norm(x + a1, w.ln1_gamma, w.ln1_beta, eps)

    qc, kc, vc = x_s @ w.w_qc, t_e @ w.w_kc, t_e @ w.w_vc
    a2, p2 = attention_forward(qc, kc, vc)
    x_c, ln2 = layer_norm(x_s + a2, w.ln2_gamma, w.ln2_beta, eps)

    z = x_c @ w.ffn_w1 + w.ffn_b1
    r = np.maximum(z, 0.0)
    f = r @ w.ffn_w2 + w.ffn_b2
    x_e, ln3 = layer_norm(x_c + f, w.ln3_gamma, w.ln3_beta, eps)

    cache = dict(x=x, t_e=t_e, qs=qs, ks=ks, vs=vs, p1=p1, ln1=ln1, x_s=x_s,
                 qc=qc, kc=kc, vc=vc, p2=p2, ln2=ln2, x_c=x_c, z=z, r=r, ln3=ln3)
    return x_e, cache


def cmf_forward(x, t_e, w: CmfWeights) -> np.ndarray:
    """Fuse evidence rows ``t_e`` into visual rows ``x``: self-attn, cross-attn, FFN,
    each wrapped as ``LN(input + sublayer(input))``."""
    return _cmf(x, t_e, w)[0]


def cmf_backward(x, t_e, w: CmfWeights, d_out):
    """Gradients of ``sum(d_out * cmf_forward(x, t_e, w))``.

    Returns a dict with keys ``"x"``, ``"t_e"`` and every name in ``w.arrays()``.
    """
    _, c = _cmf(x, t_e, w)
    g = {}

    dh3, g["ln3_gamma"], g["ln3_beta"] = layer_norm_backward(d_out, w.ln3_gamma, c["ln3"])
    g["ffn_w2"] = c["r"].T @ dh3
    g["ffn_b2"] = dh3.sum(axis=0)
    dz = (dh3 @ w.ffn_w2.T) * (c["z"] > 0)
    g["ffn_w1"] = c["x_c"].T @ dz
    g["ffn_b1"] = dz.sum(axis=0)
    dx_c = dh3 + dz @ w.ffn_w1.T

    dh2, g["ln2_gamma"], g["ln2_beta"] = layer_norm_backward(dx_c, w.ln2_gamma, c["ln2"])
    dqc, dkc, dvc = attention_backward(dh2, c["qc"], c["kc"], c["vc"], c["p2"])
    g["w_qc"] = c["x_s"].T @ dqc
    g["w_kc"] = c["t_e"].T @ dkc
    g["w_vc"] = c["t_e"].T @ dvc
    g["t_e"] = dkc @ w.w_kc.T + dvc @ w.w_vc.T
    dx_s = dh2 + dqc @ w.w_qc.T

    dh1, g["ln1_gamma"], g["ln1_beta"] = layer_norm_backward(dx_s, w.ln1_gamma, c["ln1"])
    dqs, dks, dvs = attention_backward(dh1, c["qs"], c["ks"], c["vs"], c["p1"])
    g["w_qs"] = c["x"].T @ dqs
    g["w_ks"] = c["x"].T @ dks
    g["w_vs"] = c["x"].T @ dvs
    g["x"] = dh1 + dqs @ w.w_qs.T + dks @ w.w_ks.T + dvs @ w.w_vs.T
    return g
