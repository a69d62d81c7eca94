"""Dense float64 N-d tensors with reverse-mode automatic differentiation.

Values are stored contiguously in row-major order and all arithmetic runs in
double precision so that finite-difference gradient checks hold to tight
tolerances. Every operation with a differentiable output records a backward
rule as it executes; ``Tensor.backward`` replays the rules reachable from a
scalar loss in reverse creation order, which is a valid topological order
because rules are recorded in execution order. Graphs are rebuilt on every
forward pass; parameter updates happen in place strictly between builds.
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "Tensor",
    "add",
    "mul",
    "mul_many",
    "tsum",
    "relu",
    "sigmoid",
    "transpose",
    "reshape",
    "concat",
    "split",
    "linear",
    "conv2d",
    "conv3d",
    "adaptive_avg_pool",
    "avg_pool2x",
    "softmax",
    "softmax_cross_entropy",
    "uniform_init",
    "zeros_init",
]

# float64 neighbours of 0 and 1; sigmoid outputs are clamped to these so
# saturated values stay strictly inside the open interval (0, 1).
_SIG_LO = np.nextafter(0.0, 1.0)
_SIG_HI = np.nextafter(1.0, 0.0)

_op_counter = itertools.count()


class Node:
    """One recorded operation: its input tensors plus the rule that pushes
    the output gradient back to them.

    ``apply(g)`` receives the output gradient; it must only reference the
    op's inputs and captured forward buffers, never the output tensor, so
    the graph stays a one-way DAG that plain refcounting can free.
    """

    __slots__ = ("inputs", "apply", "order")

    def __init__(self, inputs, apply):
        self.inputs = inputs
        self.apply = apply
        self.order = next(_op_counter)


class Tensor:
    """Value (and, after backward, gradient) of one node in the graph."""

    __slots__ = ("values", "grad", "requires_grad", "graph_node", "_backward_done")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.graph_node = None
        self._backward_done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def backward(self) -> None:
        """Populate ``grad`` on every requires-grad tensor reachable from
        this scalar. May be called once per graph build."""
        if self.values.size != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {self.shape}")
        if self._backward_done:
            raise RuntimeError("backward() already ran for this loss; rebuild the graph first")
        self._backward_done = True
        self.grad = np.ones_like(self.values)
        for t in _reachable(self):
            t.graph_node.apply(t.grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _reachable(root: Tensor):
    """Tensors with op records feeding ``root``, newest-created first.

    Reverse creation order is a valid topological order of the subgraph
    because an op can only consume tensors that already existed.
    """
    if root.graph_node is None:
        return []
    seen = {id(root.graph_node)}
    stack = [root]
    tensors = [root]
    while stack:
        t = stack.pop()
        for child in t.graph_node.inputs:
            node = child.graph_node
            if node is not None and id(node) not in seen:
                seen.add(id(node))
                stack.append(child)
                tensors.append(child)
    tensors.sort(key=lambda t: t.graph_node.order, reverse=True)
    return tensors


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        # copy: g may alias another node's gradient buffer
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _record(out: Tensor, inputs, apply) -> None:
    if out.requires_grad:
        out.graph_node = Node(tuple(inputs), apply)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and reduction ops


def add(a: Tensor, b: Tensor) -> Tensor:
    """Broadcasting elementwise sum."""
    out = Tensor(a.values + b.values, a.requires_grad or b.requires_grad)

    def apply(g):
        _accumulate(a, _unbroadcast(g, a.values.shape))
        _accumulate(b, _unbroadcast(g, b.values.shape))

    _record(out, (a, b), apply)
    return out


def mul_many(*factors: Tensor) -> Tensor:
    """Broadcasting product of two or more tensors as a single graph node.

    The gradient for each factor is the output gradient times the product of
    all the other factors, summed over its broadcast axes.
    """
    if len(factors) < 2:
        raise ValueError("mul_many needs at least two factors")
    vals = factors[0].values
    for f in factors[1:]:
        vals = vals * f.values
    out = Tensor(vals, any(f.requires_grad for f in factors))

    def apply(g):
        for i, f in enumerate(factors):
            if not f.requires_grad:
                continue
            partial = g
            for j, other in enumerate(factors):
                if j != i:
                    partial = partial * other.values
            _accumulate(f, _unbroadcast(partial, f.values.shape))

    _record(out, factors, apply)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Broadcasting elementwise product."""
    return mul_many(a, b)


def tsum(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    out = Tensor(x.values.sum(), x.requires_grad)

    def apply(g):
        _accumulate(x, np.broadcast_to(g, x.values.shape))

    _record(out, (x,), apply)
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.values, 0.0), x.requires_grad)

    def apply(g):
        _accumulate(x, g * (x.values > 0.0))

    _record(out, (x,), apply)
    return out


def sigmoid(x: Tensor) -> Tensor:
    """Logistic sigmoid, overflow-free and clamped strictly inside (0, 1)."""
    v = x.values
    z = np.exp(-np.abs(v))
    s = np.where(v >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))
    s = np.clip(s, _SIG_LO, _SIG_HI)
    out = Tensor(s, x.requires_grad)

    def apply(g):
        _accumulate(x, g * s * (1.0 - s))

    _record(out, (x,), apply)
    return out


# ---------------------------------------------------------------------------
# shape ops


def transpose(x: Tensor, perm) -> Tensor:
    """Permute axes, materializing a contiguous row-major copy."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(x.values.ndim)):
        raise ValueError(f"perm {perm} is not a permutation of {x.values.ndim} axes")
    out = Tensor(np.ascontiguousarray(x.values.transpose(perm)), x.requires_grad)
    inv = np.argsort(perm)

    def apply(g):
        _accumulate(x, g.transpose(inv))

    _record(out, (x,), apply)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.values.reshape(shape), x.requires_grad)

    def apply(g):
        _accumulate(x, g.reshape(x.values.shape))

    _record(out, (x,), apply)
    return out


def concat(a: Tensor, b: Tensor, axis: int) -> Tensor:
    """Join two tensors along ``axis``; gradients route back to each slice."""
    out = Tensor(
        np.concatenate((a.values, b.values), axis=axis),
        a.requires_grad or b.requires_grad,
    )
    na = a.values.shape[axis]

    def apply(g):
        sl = [slice(None)] * g.ndim
        sl[axis] = slice(0, na)
        _accumulate(a, g[tuple(sl)])
        sl[axis] = slice(na, None)
        _accumulate(b, g[tuple(sl)])

    _record(out, (a, b), apply)
    return out


def _narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    sl = tuple(
        slice(start, start + length) if i == axis else slice(None)
        for i in range(x.values.ndim)
    )
    out = Tensor(np.ascontiguousarray(x.values[sl]), x.requires_grad)

    def apply(g):
        gx = np.zeros_like(x.values)
        gx[sl] = g
        _accumulate(x, gx)

    _record(out, (x,), apply)
    return out


def split(x: Tensor, axis: int, sizes) -> tuple[Tensor, ...]:
    """Cut ``x`` along ``axis`` into pieces of the given sizes."""
    sizes = tuple(int(s) for s in sizes)
    if sum(sizes) != x.values.shape[axis]:
        raise ValueError(
            f"split sizes {sizes} do not cover axis {axis} of extent {x.values.shape[axis]}"
        )
    pieces = []
    start = 0
    for n in sizes:
        pieces.append(_narrow(x, axis, start, n))
        start += n
    return tuple(pieces)


# ---------------------------------------------------------------------------
# linear and convolution layers


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map: ``x @ w.T + b`` with x (B, N), w (M, N), b (M,)."""
    if x.values.ndim != 2 or w.values.ndim != 2:
        raise ValueError(f"linear needs 2-D input and weight, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ValueError(
            f"linear: input has {x.shape[1]} features but weight expects {w.shape[1]} "
            f"(input {x.shape}, weight {w.shape})"
        )
    if b.shape != (w.shape[0],):
        raise ValueError(f"linear: bias shape {b.shape} does not match {w.shape[0]} outputs")
    out = Tensor(
        x.values @ w.values.T + b.values,
        x.requires_grad or w.requires_grad or b.requires_grad,
    )

    def apply(g):
        _accumulate(x, g @ w.values)
        _accumulate(w, g.T @ x.values)
        _accumulate(b, g.sum(axis=0))

    _record(out, (x, w, b), apply)
    return out


def _norm_tuple(value, n: int, name: str, minimum: int):
    if isinstance(value, (int, np.integer)):
        value = (int(value),) * n
    value = tuple(int(v) for v in value)
    if len(value) != n:
        raise ValueError(f"{name} must have {n} entries, got {value}")
    if any(v < minimum for v in value):
        raise ValueError(f"{name} entries must be >= {minimum}, got {value}")
    return value


def _conv_forward(xv, wv, bv, strides, pads):
    """im2col: gather kernel windows into a matrix, convolve as one matmul.

    Returns (output, cols, out_spatial) where cols has one row per output
    location and one column per (channel, tap) pair; the backward pass
    reuses it for the weight gradient.
    """
    nsp = len(strides)
    ksize = wv.shape[2:]
    xp = np.pad(xv, ((0, 0), (0, 0)) + tuple((p, p) for p in pads))
    for i in range(nsp):
        if ksize[i] > xp.shape[2 + i]:
            raise ValueError(
                f"kernel extent {ksize[i]} exceeds padded input extent {xp.shape[2 + i]} "
                f"on spatial axis {i}"
            )
    win = np.lib.stride_tricks.sliding_window_view(
        xp, ksize, axis=tuple(range(2, 2 + nsp))
    )
    win = win[(slice(None), slice(None)) + tuple(slice(None, None, s) for s in strides)]
    # win: (B, C) + out_spatial + ksize; rearrange to rows of (C, taps)
    bsz, cin = win.shape[0], win.shape[1]
    outsp = win.shape[2 : 2 + nsp]
    perm = (0,) + tuple(range(2, 2 + nsp)) + (1,) + tuple(range(2 + nsp, 2 + 2 * nsp))
    cols = np.ascontiguousarray(win.transpose(perm)).reshape(
        bsz * int(np.prod(outsp)), cin * int(np.prod(ksize))
    )
    out = cols @ wv.reshape(wv.shape[0], -1).T + bv
    out = out.reshape((bsz,) + outsp + (wv.shape[0],))
    out = np.ascontiguousarray(np.moveaxis(out, -1, 1))
    return out, cols, outsp


def _conv_input_grad(g, wv, x_shape, strides, pads):
    """One matmul forms every tap's contribution; slice-adds scatter them."""
    nsp = wv.ndim - 2
    cout = wv.shape[0]
    cin = x_shape[1]
    ksize = wv.shape[2:]
    outsp = g.shape[2:]
    n_out = int(np.prod(outsp))
    n_tap = int(np.prod(ksize))
    # rows: output locations; columns: (input channel, tap)
    g_mat = np.ascontiguousarray(np.moveaxis(g, 1, -1)).reshape(-1, cout)
    contrib = g_mat @ wv.reshape(cout, -1)
    contrib = contrib.reshape((g.shape[0],) + tuple(outsp) + (cin, n_tap))
    contrib = np.moveaxis(contrib, -2, 1)  # (B, C_in) + outsp + (taps,)
    padded = tuple(x_shape[2 + i] + 2 * pads[i] for i in range(nsp))
    gx = np.zeros((x_shape[0], cin) + padded)
    for tap, off in enumerate(np.ndindex(*ksize)):
        sl = tuple(
            slice(off[i], off[i] + strides[i] * (outsp[i] - 1) + 1, strides[i])
            for i in range(nsp)
        )
        gx[(slice(None), slice(None)) + sl] += contrib[..., tap]
    crop = tuple(slice(pads[i], pads[i] + x_shape[2 + i]) for i in range(nsp))
    return np.ascontiguousarray(gx[(slice(None), slice(None)) + crop])


def _conv(x: Tensor, w: Tensor, b: Tensor, stride, padding, nsp: int, opname: str) -> Tensor:
    xv, wv = x.values, w.values
    if xv.ndim != nsp + 2 or wv.ndim != nsp + 2:
        raise ValueError(
            f"{opname} needs {nsp + 2}-D input and weight, got {xv.shape} and {wv.shape}"
        )
    if xv.shape[1] != wv.shape[1]:
        raise ValueError(
            f"{opname}: input has {xv.shape[1]} channels but weight expects {wv.shape[1]} "
            f"(input {xv.shape}, weight {wv.shape})"
        )
    if b.shape != (wv.shape[0],):
        raise ValueError(f"{opname}: bias shape {b.shape} does not match {wv.shape[0]} outputs")
    strides = _norm_tuple(stride, nsp, f"{opname} stride", 1)
    pads = _norm_tuple(padding, nsp, f"{opname} padding", 0)
    vals, cols, _outsp = _conv_forward(xv, wv, b.values, strides, pads)
    out = Tensor(vals, x.requires_grad or w.requires_grad or b.requires_grad)

    def apply(g):
        if w.requires_grad or b.requires_grad:
            g_mat = np.ascontiguousarray(np.moveaxis(g, 1, -1)).reshape(-1, wv.shape[0])
            if w.requires_grad:
                _accumulate(w, (g_mat.T @ cols).reshape(wv.shape))
            if b.requires_grad:
                _accumulate(b, g_mat.sum(axis=0))
        if x.requires_grad:
            _accumulate(x, _conv_input_grad(g, wv, xv.shape, strides, pads))

    _record(out, (x, w, b), apply)
    return out


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride=1, padding=0) -> Tensor:
    """2-D cross-correlation with zero padding.

    x (B, C_in, P, Q), w (C_out, C_in, kP, kQ), b (C_out,). Output extents
    follow (P + 2*pad - kP) // stride + 1.
    """
    return _conv(x, w, b, stride, padding, 2, "conv2d")


def conv3d(x: Tensor, w: Tensor, b: Tensor, stride=1, padding=0) -> Tensor:
    """3-D cross-correlation with zero padding.

    x (B, C_in, D, V, H), w (C_out, C_in, kD, kV, kH), b (C_out,).
    """
    return _conv(x, w, b, stride, padding, 3, "conv3d")


# ---------------------------------------------------------------------------
# pooling


def adaptive_avg_pool(x: Tensor, axis: int) -> Tensor:
    """Mean along one axis, keeping it with extent 1; the backward pass
    spreads the gradient uniformly (1/N each)."""
    if not 0 <= axis < x.values.ndim:
        raise ValueError(f"axis {axis} out of range for rank {x.values.ndim}")
    n = x.values.shape[axis]
    out = Tensor(x.values.mean(axis=axis, keepdims=True), x.requires_grad)

    def apply(g):
        _accumulate(x, np.broadcast_to(g / n, x.values.shape))

    _record(out, (x,), apply)
    return out


def avg_pool2x(x: Tensor) -> Tensor:
    """Average-pool the last two axes with window 2 and stride 2.

    Odd trailing rows/columns are dropped; an axis of extent 1 is left
    untouched so deep stacks stay valid on small inputs.
    """
    v = x.values
    if v.ndim < 2:
        raise ValueError(f"avg_pool2x needs rank >= 2, got shape {v.shape}")
    p, q = v.shape[-2:]
    wp = 2 if p >= 2 else 1
    wq = 2 if q >= 2 else 1
    p2, q2 = p // wp, q // wq
    crop = v[..., : p2 * wp, : q2 * wq]
    resh = crop.reshape(v.shape[:-2] + (p2, wp, q2, wq))
    out = Tensor(resh.mean(axis=(-3, -1)), x.requires_grad)

    def apply(g):
        g = g / (wp * wq)
        gx = np.zeros_like(v)
        for i in range(wp):
            for j in range(wq):
                gx[..., i : p2 * wp : wp, j : q2 * wq : wq] += g
        _accumulate(x, gx)

    _record(out, (x,), apply)
    return out


# ---------------------------------------------------------------------------
# classification loss


def softmax(z: np.ndarray) -> np.ndarray:
    """Plain-array softmax over the last axis, stabilized by max subtraction."""
    z = np.asarray(z, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean over the batch of -log softmax(logits)[label].

    The gradient is (softmax - onehot) / B.
    """
    lv = logits.values
    if lv.ndim != 2:
        raise ValueError(f"softmax_cross_entropy needs (B, C) logits, got {lv.shape}")
    labels = np.asarray(labels)
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
    n, c = lv.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    shifted = lv - lv.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    out = Tensor(-logp[np.arange(n), labels].mean(), logits.requires_grad)

    def apply(g):
        p = np.exp(logp)
        p[np.arange(n), labels] -= 1.0
        _accumulate(logits, g * p / n)

    _record(out, (logits,), apply)
    return out


# ---------------------------------------------------------------------------
# parameter construction


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    """Trainable tensor drawn uniformly from +-sqrt(1/fan_in)."""
    bound = float(np.sqrt(1.0 / fan_in))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def zeros_init(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)
