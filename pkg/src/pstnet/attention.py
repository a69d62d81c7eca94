"""Attention block recalibrating a 5-D activation along three views.

Given an activation of shape (B, T, S, V, H), three mask families are
computed in parallel and multiplied onto the input:

* positional: directional average pooling over V and over H, concatenated
  into a length-(V+H) profile per (B, T, S), mixed by a 1x1 conv2d over the
  (T, S) plane, passed through a sigmoid, then split back into a pair of
  per-axis masks;
* spectral: a conv3d with kernel (S, 1, 1) mixing the S axis per location,
  one output channel per band;
* temporal: the same construction over the T axis with kernel (T, 1, 1).

Every sub-module can be disabled independently, in which case it
contributes no parameters and a multiplicative factor of exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor

__all__ = [
    "PSTAttentionBlock",
    "init_block",
    "positional_attention",
    "spectral_attention",
    "temporal_attention",
    "apply_pst",
]


@dataclass
class PSTAttentionBlock:
    """Parameters for one attention block over a (t, s, v, h) activation.

    Disabled sub-modules hold no parameters, so toggling one changes the
    trainable parameter count and nothing else.
    """

    t: int
    s: int
    v: int
    h: int
    enabled: tuple[bool, bool, bool]  # (positional, spectral, temporal)
    pos_w: Tensor | None = None
    pos_b: Tensor | None = None
    spec_w: Tensor | None = None
    spec_b: Tensor | None = None
    temp_w: Tensor | None = None
    temp_b: Tensor | None = None

    def parameters(self, prefix: str = "att"):
        """Stable (name, tensor) pairs for the enabled sub-modules."""
        pairs = []
        if self.enabled[0]:
            pairs += [(f"{prefix}.pos.w", self.pos_w), (f"{prefix}.pos.b", self.pos_b)]
        if self.enabled[1]:
            pairs += [(f"{prefix}.spec.w", self.spec_w), (f"{prefix}.spec.b", self.spec_b)]
        if self.enabled[2]:
            pairs += [(f"{prefix}.temp.w", self.temp_w), (f"{prefix}.temp.b", self.temp_b)]
        return pairs

    def check_input(self, x: Tensor) -> None:
        want = (self.t, self.s, self.v, self.h)
        if x.values.ndim != 5 or x.values.shape[1:] != want:
            raise ValueError(
                f"attention block configured for (B,{self.t},{self.s},{self.v},{self.h}), "
                f"got input shape {x.shape}"
            )


def init_block(
    t: int,
    s: int,
    v: int,
    h: int,
    enabled=(True, True, True),
    rng: np.random.Generator | None = None,
    scheme: str = "uniform",
) -> PSTAttentionBlock:
    """Build a block; weights uniform +-sqrt(1/fan_in) or all zeros."""
    enabled = tuple(bool(e) for e in enabled)
    if len(enabled) != 3:
        raise ValueError(f"enabled must be three booleans, got {enabled}")
    if scheme not in ("uniform", "zeros"):
        raise ValueError(f"unknown init scheme {scheme!r}")
    if scheme == "uniform" and rng is None and any(enabled):
        raise ValueError("uniform init needs an rng")

    # one child stream per sub-module, drawn unconditionally so toggling one
    # sub-module never shifts another's initial weights
    if scheme == "uniform" and rng is not None:
        sub_seeds = rng.integers(2**63, size=3)
    else:
        sub_seeds = [0, 0, 0]

    def weight(shape, fan_in, which):
        if scheme == "zeros":
            return T.zeros_init(shape)
        return T.uniform_init(np.random.default_rng(sub_seeds[which]), shape, fan_in)

    block = PSTAttentionBlock(t=t, s=s, v=v, h=h, enabled=enabled)
    if enabled[0]:
        block.pos_w = weight((v + h, v + h, 1, 1), fan_in=v + h, which=0)
        block.pos_b = T.zeros_init(v + h)
    if enabled[1]:
        block.spec_w = weight((s, 1, s, 1, 1), fan_in=s, which=1)
        block.spec_b = T.zeros_init(s)
    if enabled[2]:
        block.temp_w = weight((t, 1, t, 1, 1), fan_in=t, which=2)
        block.temp_b = T.zeros_init(t)
    return block


def positional_attention(x: Tensor, block: PSTAttentionBlock):
    """Directional-pooling spatial masks.

    Returns (m_v, m_h) with m_v shaped (B,T,S,1,H) and m_h shaped
    (B,T,S,V,1); their product weights every (v, h) cell.
    """
    block.check_input(x)
    if not block.enabled[0]:
        raise ValueError("positional sub-module is disabled for this block")
    b = x.shape[0]
    t, s, v, h = block.t, block.s, block.v, block.h
    # profile along each spatial direction, reduced axis squeezed away
    r_h = T.reshape(T.adaptive_avg_pool(x, axis=4), (b, t, s, v))
    r_v = T.reshape(T.adaptive_avg_pool(x, axis=3), (b, t, s, h))
    profile = T.concat(r_v, r_h, axis=3)  # (B,T,S,H+V)
    # 1x1 conv mixes the profile as channels over the (T,S) plane
    channels_first = T.transpose(profile, (0, 3, 1, 2))
    mixed = T.conv2d(channels_first, block.pos_w, block.pos_b)
    masks = T.sigmoid(T.transpose(mixed, (0, 2, 3, 1)))  # (B,T,S,H+V)
    h_part, v_part = T.split(masks, axis=3, sizes=(h, v))
    m_v = T.reshape(h_part, (b, t, s, 1, h))
    m_h = T.reshape(v_part, (b, t, s, v, 1))
    return m_v, m_h


def spectral_attention(x: Tensor, block: PSTAttentionBlock) -> Tensor:
    """Band-mixing mask: one sigmoid weight per band per location."""
    block.check_input(x)
    if not block.enabled[1]:
        raise ValueError("spectral sub-module is disabled for this block")
    b = x.shape[0]
    t, s, v, h = block.t, block.s, block.v, block.h
    # each (S,V,H) volume becomes a single-channel conv3d input
    volumes = T.reshape(x, (b * t, 1, s, v, h))
    mixed = T.conv3d(volumes, block.spec_w, block.spec_b)  # (B*T, S, 1, V, H)
    return T.reshape(T.sigmoid(mixed), (b, t, s, v, h))


def temporal_attention(x: Tensor, block: PSTAttentionBlock) -> Tensor:
    """Time-mixing mask: one sigmoid weight per time slice per location."""
    block.check_input(x)
    if not block.enabled[2]:
        raise ValueError("temporal sub-module is disabled for this block")
    b = x.shape[0]
    t, s, v, h = block.t, block.s, block.v, block.h
    swapped = T.transpose(x, (0, 2, 1, 3, 4))  # (B,S,T,V,H)
    volumes = T.reshape(swapped, (b * s, 1, t, v, h))
    mixed = T.conv3d(volumes, block.temp_w, block.temp_b)  # (B*S, T, 1, V, H)
    masks = T.reshape(T.sigmoid(mixed), (b, s, t, v, h))
    return T.transpose(masks, (0, 2, 1, 3, 4))


def apply_pst(x: Tensor, block: PSTAttentionBlock) -> Tensor:
    """Multiply every enabled mask onto x; all-disabled returns x itself."""
    block.check_input(x)
    factors = []
    if block.enabled[0]:
        factors.extend(positional_attention(x, block))
    if block.enabled[1]:
        factors.append(spectral_attention(x, block))
    if block.enabled[2]:
        factors.append(temporal_attention(x, block))
    if not factors:
        return x
    return T.mul_many(x, *factors)
