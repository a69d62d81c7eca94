"""The classifier: a 3-D CNN backbone with attention blocks and an FC head.

Input samples arrive as (B, T, S, V, H). Each backbone stage runs a
same-padded 3-D convolution (time as depth, bands or feature maps as
channels), a ReLU, an attention block for the first ``n_attention_blocks``
stages, and a 2x spatial average pooling. Global average pooling then feeds
a hidden linear layer with ReLU and dropout, and a final linear layer emits
one logit per class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .attention import PSTAttentionBlock, apply_pst, init_block
from .tensor import Tensor

__all__ = [
    "ModelConfig",
    "ModelState",
    "init_state",
    "forward",
    "loss",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "state_from_arrays",
]

_CKPT_MAGIC = "PSTCKPT 1"


@dataclass(frozen=True)
class ModelConfig:
    t: int = 9
    s: int = 5
    v: int = 8
    h: int = 9
    n_classes: int = 3
    conv_channels: tuple[int, ...] = (32, 64)
    kernel: tuple[int, int, int] = (3, 5, 5)  # (time depth, vertical, horizontal)
    n_attention_blocks: int = 2
    attention_enabled: tuple[bool, bool, bool] = (True, True, True)
    fc_hidden: int = 128
    dropout_rate: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "kernel", tuple(int(k) for k in self.kernel))
        object.__setattr__(
            self, "attention_enabled", tuple(bool(e) for e in self.attention_enabled)
        )
        for name in ("t", "s", "v", "h", "n_classes", "fc_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_classes < 2:
            raise ValueError(f"need >= 2 classes, got {self.n_classes}")
        if not self.conv_channels or any(c < 1 for c in self.conv_channels):
            raise ValueError(f"conv_channels must be positive, got {self.conv_channels}")
        if len(self.kernel) != 3 or any(k < 1 or k % 2 == 0 for k in self.kernel):
            raise ValueError(
                f"kernel must be three odd extents so same-padding preserves shape, "
                f"got {self.kernel}"
            )
        if not 0 <= self.n_attention_blocks <= len(self.conv_channels):
            raise ValueError(
                f"n_attention_blocks {self.n_attention_blocks} exceeds "
                f"{len(self.conv_channels)} conv stages"
            )
        if len(self.attention_enabled) != 3:
            raise ValueError(f"attention_enabled must be three booleans, got {self.attention_enabled}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    def stage_dims(self):
        """(channels, v, h) entering each stage, plus the final triple."""
        dims = [(self.s, self.v, self.h)]
        for c in self.conv_channels:
            _, v, h = dims[-1]
            dims.append((c, v // 2 if v >= 2 else v, h // 2 if h >= 2 else h))
        return dims


@dataclass
class ModelState:
    """All learnable tensors, addressable by stable unique names."""

    convs: list[tuple[Tensor, Tensor]]
    blocks: list[PSTAttentionBlock | None]
    fc1_w: Tensor
    fc1_b: Tensor
    fc2_w: Tensor
    fc2_b: Tensor

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        pairs = []
        for i, (w, b) in enumerate(self.convs):
            pairs += [(f"conv{i}.w", w), (f"conv{i}.b", b)]
        for i, block in enumerate(self.blocks):
            if block is not None:
                pairs += block.parameters(prefix=f"att{i}")
        pairs += [
            ("fc1.w", self.fc1_w),
            ("fc1.b", self.fc1_b),
            ("fc2.w", self.fc2_w),
            ("fc2.b", self.fc2_b),
        ]
        return pairs

    def param_count(self) -> int:
        return sum(t.values.size for _, t in self.named_parameters())

    def zero_grads(self) -> None:
        for _, t in self.named_parameters():
            t.grad = None


def init_state(config: ModelConfig, seed: int) -> ModelState:
    """Build parameters with one derived RNG stream per layer.

    Streams are keyed by (seed, fixed layer id), so changing the attention
    configuration never shifts the draws of the convolution or FC layers.
    """
    kt, kv, kh = config.kernel
    convs = []
    blocks: list[PSTAttentionBlock | None] = []
    dims = config.stage_dims()
    for i, c_out in enumerate(config.conv_channels):
        c_in, v_in, h_in = dims[i]
        rng = np.random.default_rng([seed, 100 + i])
        fan_in = c_in * kt * kv * kh
        convs.append(
            (
                T.uniform_init(rng, (c_out, c_in, kt, kv, kh), fan_in),
                T.zeros_init(c_out),
            )
        )
        if i < config.n_attention_blocks and any(config.attention_enabled):
            blocks.append(
                init_block(
                    t=config.t,
                    s=c_out,
                    v=v_in,
                    h=h_in,
                    enabled=config.attention_enabled,
                    rng=np.random.default_rng([seed, 200 + i]),
                )
            )
        else:
            blocks.append(None)
    flat = config.conv_channels[-1]
    rng = np.random.default_rng([seed, 300])
    fc1_w = T.uniform_init(rng, (config.fc_hidden, flat), fan_in=flat)
    fc1_b = T.zeros_init(config.fc_hidden)
    rng = np.random.default_rng([seed, 301])
    fc2_w = T.uniform_init(rng, (config.n_classes, config.fc_hidden), fan_in=config.fc_hidden)
    fc2_b = T.zeros_init(config.n_classes)
    return ModelState(convs=convs, blocks=blocks, fc1_w=fc1_w, fc1_b=fc1_b, fc2_w=fc2_w, fc2_b=fc2_b)


def _named_stage(layer: str, fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise ValueError(f"{layer}: {exc}") from None


def forward(
    x: Tensor,
    state: ModelState,
    config: ModelConfig,
    training: bool = False,
    dropout_rng: np.random.Generator | None = None,
) -> Tensor:
    """Map a (B, T, S, V, H) batch to (B, n_classes) logits.

    With ``training`` false the pass is a pure deterministic function of
    (x, state); with it true, inverted dropout uses ``dropout_rng``.
    """
    if x.values.ndim != 5 or x.values.shape[1:] != (config.t, config.s, config.v, config.h):
        raise ValueError(
            f"input: expected (B,{config.t},{config.s},{config.v},{config.h}), got {x.shape}"
        )
    kt, kv, kh = config.kernel
    pad = (kt // 2, kv // 2, kh // 2)
    # conv layout: bands (then feature maps) as channels, time as depth
    act = T.transpose(x, (0, 2, 1, 3, 4))
    for i, (w, b) in enumerate(state.convs):
        act = _named_stage(f"conv{i}", T.conv3d, act, w, b, 1, pad)
        act = T.relu(act)
        if state.blocks[i] is not None:
            scanned = T.transpose(act, (0, 2, 1, 3, 4))  # (B, T, C, V, H)
            scanned = _named_stage(f"att{i}", apply_pst, scanned, state.blocks[i])
            act = T.transpose(scanned, (0, 2, 1, 3, 4))
        act = T.avg_pool2x(act)
    for axis in (4, 3, 2):
        act = T.adaptive_avg_pool(act, axis=axis)
    act = T.reshape(act, (x.shape[0], config.conv_channels[-1]))
    act = T.relu(_named_stage("fc1", T.linear, act, state.fc1_w, state.fc1_b))
    if training and config.dropout_rate > 0.0:
        if dropout_rng is None:
            raise ValueError("training forward with dropout needs dropout_rng")
        keep = 1.0 - config.dropout_rate
        mask = (dropout_rng.random(act.shape) < keep) / keep
        act = T.mul(act, Tensor(mask))
    return _named_stage("fc2", T.linear, act, state.fc2_w, state.fc2_b)


def loss(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy between softmax(logits) and integer labels."""
    return T.softmax_cross_entropy(logits, labels)


def predict(x: Tensor, state: ModelState, config: ModelConfig) -> np.ndarray:
    """Class index per sample; argmax ties go to the lowest index."""
    logits = forward(x, state, config, training=False)
    return np.argmax(logits.values, axis=1)


def save_checkpoint(state: ModelState, path) -> None:
    """Text manifest (name and shape per line), then raw float64 LE arrays."""
    pairs = state.named_parameters()
    lines = [_CKPT_MAGIC]
    for name, t in pairs:
        dims = ",".join(str(d) for d in t.values.shape) or "scalar"
        lines.append(f"{name} {dims}")
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for _, t in pairs:
            fh.write(np.ascontiguousarray(t.values, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into name -> array, validating the manifest."""
    with open(path, "rb") as fh:
        blob = fh.read()
    newline = blob.find(b"\n")
    if newline < 0 or blob[:newline].decode("ascii", "replace") != _CKPT_MAGIC:
        raise ValueError(f"not a checkpoint: bad magic line {blob[:20]!r}")
    offset = newline + 1
    entries = []
    while True:
        newline = blob.find(b"\n", offset)
        if newline < 0:
            raise ValueError("checkpoint manifest not terminated with 'end'")
        line = blob[offset:newline].decode("ascii")
        offset = newline + 1
        if line == "end":
            break
        name, _, dims = line.partition(" ")
        shape = () if dims == "scalar" else tuple(int(d) for d in dims.split(","))
        entries.append((name, shape))
    arrays = {}
    for name, shape in entries:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise ValueError(
                f"checkpoint truncated: parameter {name!r} needs {nbytes} bytes "
                f"at offset {offset}, file has {len(blob)}"
            )
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"checkpoint has {len(blob) - offset} trailing bytes after offset {offset}")
    return arrays


def state_from_arrays(config: ModelConfig, arrays: dict[str, np.ndarray]) -> ModelState:
    """Rebuild a ModelState for ``config`` from checkpointed arrays."""
    state = init_state(config, seed=0)
    expected = dict(state.named_parameters())
    missing = sorted(set(expected) - set(arrays))
    extra = sorted(set(arrays) - set(expected))
    if missing or extra:
        raise ValueError(
            f"checkpoint does not match config: missing {missing[:4]}, unexpected {extra[:4]}"
        )
    for name, tensor in expected.items():
        arr = np.asarray(arrays[name], dtype=np.float64)
        if arr.shape != tensor.values.shape:
            raise ValueError(
                f"parameter {name!r}: checkpoint shape {arr.shape} vs config shape {tensor.values.shape}"
            )
        tensor.values[...] = arr
    return state
