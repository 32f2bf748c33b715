"""Contrastive auxiliary branch (CAB) and the video-level InfoNCE loss.

The branch taps an intermediate backbone feature map, reduces it with a
3x3 conv, ReLU, and adaptive average pooling, and projects to a compact
encoded vector through a two-layer MLP (ReLU after each layer). Embeddings
of frames from the same video are positives, frames from other videos are
negatives; the loss is a temperature-scaled softmax over cosine
similarities, averaged over every (anchor, positive) pair in the batch.

The branch exists only at training time: inference never calls into this
module.
"""

from dataclasses import dataclass

import numpy as np

from . import layers

# Keeps cosine denominators away from zero; embeddings can be exactly zero
# after the final ReLU early in training.
COSINE_EPS = 1e-12


@dataclass
class CABConfig:
    """Dimensions and temperature of the auxiliary branch."""

    in_channels: int
    conv_channels: int = 512
    proj_hidden: int = 256
    proj_out: int = 128
    temperature: float = 0.1

    def validate(self):
        for name in ("in_channels", "conv_channels", "proj_hidden", "proj_out"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"CABConfig.{name} must be a positive integer, got {v!r}")
        if not (float(self.temperature) > 0.0):
            raise ValueError(f"temperature must be > 0, got {self.temperature!r}")
        return self


@dataclass
class CABParams:
    """Learnable arrays of the auxiliary branch."""

    conv_w: np.ndarray  # [3, 3, in_channels, conv_channels]
    conv_b: np.ndarray
    fc1_w: np.ndarray  # [conv_channels, proj_hidden]
    fc1_b: np.ndarray
    fc2_w: np.ndarray  # [proj_hidden, proj_out]
    fc2_b: np.ndarray

    FIELDS = ("conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b")

    def as_dict(self, prefix="cab"):
        return {f"{prefix}.{k}": getattr(self, k) for k in self.FIELDS}

    @classmethod
    def from_dict(cls, d, prefix="cab"):
        return cls(**{k: d[f"{prefix}.{k}"] for k in cls.FIELDS})


def init_cab_params(cfg: CABConfig, rng, dtype=np.float32) -> CABParams:
    cfg.validate()
    conv_w, conv_b = layers.init_conv(rng, cfg.in_channels, cfg.conv_channels, dtype)
    fc1_w, fc1_b = layers.init_linear(rng, cfg.conv_channels, cfg.proj_hidden, dtype)
    fc2_w, fc2_b = layers.init_linear(rng, cfg.proj_hidden, cfg.proj_out, dtype)
    return CABParams(conv_w, conv_b, fc1_w, fc1_b, fc2_w, fc2_b)


def cosine_sim(u, v):
    """Cosine similarity of two equal-length vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    denom = max(np.linalg.norm(u) * np.linalg.norm(v), COSINE_EPS)
    return float(np.clip(np.dot(u, v) / denom, -1.0, 1.0))


def _check_cab_shapes(feature_map, params: CABParams):
    if feature_map.ndim != 4:
        raise ValueError(f"expected [B, C, H, W] feature map, got shape {feature_map.shape}")
    in_ch = params.conv_w.shape[2]
    if feature_map.shape[1] != in_ch:
        raise ValueError(
            f"feature map has {feature_map.shape[1]} channels, params expect {in_ch}"
        )


def cab_forward_cached(feature_map, params: CABParams):
    """Forward pass keeping intermediates for :func:`cab_backward`.

    feature_map is ``[B, C, H, W]``; returns ``(embeddings [B, proj_out], cache)``.
    """
    _check_cab_shapes(feature_map, params)
    x = np.ascontiguousarray(feature_map.transpose(0, 2, 3, 1))
    y1, c_conv = layers.conv3x3(x, params.conv_w, params.conv_b, stride=1)
    r1, c_r1 = layers.relu(y1)
    p, c_pool = layers.global_mean_pool(r1)
    h1, c_fc1 = layers.linear(p, params.fc1_w, params.fc1_b)
    r2, c_r2 = layers.relu(h1)
    h2, c_fc2 = layers.linear(r2, params.fc2_w, params.fc2_b)
    out, c_r3 = layers.relu(h2)
    return out, (c_conv, c_r1, c_pool, c_fc1, c_r2, c_fc2, c_r3)


def cab_forward(feature_map, params: CABParams):
    """Encode a backbone feature map ``[B, C, H, W]`` to ``[B, proj_out]``."""
    out, _ = cab_forward_cached(feature_map, params)
    return out


def cab_backward(dout, cache, params: CABParams):
    """Gradients of ``cab_forward``.

    Returns ``(dfeature_map [B, C, H, W], grads)`` where grads mirrors the
    CABParams fields.
    """
    c_conv, c_r1, c_pool, c_fc1, c_r2, c_fc2, c_r3 = cache
    dh2 = layers.relu_grad(dout, c_r3)
    dr2, dfc2_w, dfc2_b = layers.linear_grad(dh2, c_fc2, params.fc2_w)
    dh1 = layers.relu_grad(dr2, c_r2)
    dp, dfc1_w, dfc1_b = layers.linear_grad(dh1, c_fc1, params.fc1_w)
    dr1 = layers.global_mean_pool_grad(dp, c_pool)
    dy1 = layers.relu_grad(dr1, c_r1)
    dx, dconv_w, dconv_b = layers.conv3x3_grad(dy1, c_conv)
    grads = CABParams(dconv_w, dconv_b, dfc1_w, dfc1_b, dfc2_w, dfc2_b)
    return dx.transpose(0, 3, 1, 2), grads


def _check_batch_structure(video_index):
    video_index = np.asarray(video_index)
    ids, counts = np.unique(video_index, return_counts=True)
    if len(ids) < 2:
        raise ValueError("contrastive batch needs at least 2 distinct videos")
    if counts.min() < 2:
        short = ids[counts < 2].tolist()
        raise ValueError(f"videos {short} have a single frame in the batch; no positive exists")
    return video_index


def _similarity_matrix(embeddings):
    """Pairwise cosine similarities with the epsilon-guarded denominator.

    Returns ``(S, norms, denom, active)`` where ``active`` flags pairs whose
    norm product exceeded the epsilon (the differentiable branch).
    """
    z = embeddings
    norms = np.sqrt((z * z).sum(axis=1))
    prod = np.outer(norms, norms)
    denom = np.maximum(prod, z.dtype.type(COSINE_EPS))
    s = (z @ z.T) / denom
    return s, norms, denom, prod > COSINE_EPS


def info_nce_loss(embeddings, video_index, tau, return_grad=False):
    """Mean InfoNCE over all (anchor, positive) pairs of a video batch.

    Every frame acts as an anchor; each other frame of the same video is a
    positive for it, and the softmax denominator runs over every frame except
    the anchor itself. With ``return_grad`` the analytic gradient with respect
    to ``embeddings`` is returned alongside the scalar loss.
    """
    z = np.asarray(embeddings)
    if z.ndim != 2:
        raise ValueError(f"expected [frames, dim] embeddings, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("embeddings contain non-finite entries")
    if not (float(tau) > 0.0):
        raise ValueError(f"temperature must be > 0, got {tau!r}")
    video_index = _check_batch_structure(video_index)
    if len(video_index) != z.shape[0]:
        raise ValueError("video_index length does not match embeddings")

    dt = z.dtype if z.dtype in (np.float32, np.float64) else np.float64
    z = z.astype(dt, copy=False)
    m = z.shape[0]
    tau = dt.type(tau)

    s, norms, denom, active = _similarity_matrix(z)
    logits = s / tau
    eye = np.eye(m, dtype=bool)
    neg_inf = -np.inf
    logits_off = np.where(eye, neg_inf, logits)

    # log-sum-exp over k != a, shifted by the per-anchor max
    mx = logits_off.max(axis=1)
    expd = np.exp(logits_off - mx[:, None])
    expd[eye] = 0.0
    sumexp = expd.sum(axis=1)
    lse = mx + np.log(sumexp)

    same = video_index[:, None] == video_index[None, :]
    pos = same & ~eye
    cnt = pos.sum(axis=1)  # positives per anchor
    total_pairs = int(cnt.sum())

    loss = (cnt * lse - (logits * pos).sum(axis=1)).sum() / total_pairs
    if not return_grad:
        return float(loss)

    softmax = expd / sumexp[:, None]
    # d loss / d s[a, k]
    g = (cnt[:, None] * softmax - pos) / (tau * total_pairs)
    h = g + g.T
    w = h / denom
    coef = (h * np.where(active, s, 0.0)).sum(axis=1) / np.maximum(norms, dt.type(1e-30)) ** 2
    grad = w @ z - coef[:, None] * z
    return float(loss), grad.astype(dt, copy=False)


def alignment_gap(embeddings, video_index):
    """Mean intra-video cosine similarity minus mean inter-video similarity."""
    z = np.asarray(embeddings)
    video_index = _check_batch_structure(video_index)
    s, _, _, _ = _similarity_matrix(z.astype(np.float64, copy=False))
    eye = np.eye(z.shape[0], dtype=bool)
    same = (video_index[:, None] == video_index[None, :]) & ~eye
    diff = ~(video_index[:, None] == video_index[None, :])
    return float(s[same].mean() - s[diff].mean())
