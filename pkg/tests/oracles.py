"""Independent reference implementations used to check the fast paths.

Everything here trades speed for obviousness: convolutions are explicit
nested loops over every output element and kernel tap, and gradients are
estimated with central finite differences. None of it imports the package's
vectorized kernels beyond the Tensor container itself.
"""

from __future__ import annotations

import numpy as np

from pstnet.tensor import Tensor


def conv2d_loops(x, w, b, stride=(1, 1), padding=(0, 0)):
    """2-D cross-correlation, one multiply-accumulate at a time."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bs, cin, p, q = x.shape
    cout, cin_w, kp, kq = w.shape
    assert cin == cin_w
    sp, sq = stride
    pp, pq = padding
    xp = np.pad(x, ((0, 0), (0, 0), (pp, pp), (pq, pq)))
    op = (p + 2 * pp - kp) // sp + 1
    oq = (q + 2 * pq - kq) // sq + 1
    out = np.zeros((bs, cout, op, oq))
    for n in range(bs):
        for o in range(cout):
            for i in range(op):
                for j in range(oq):
                    acc = b[o]
                    for c in range(cin):
                        for u in range(kp):
                            for v in range(kq):
                                acc += xp[n, c, i * sp + u, j * sq + v] * w[o, c, u, v]
                    out[n, o, i, j] = acc
    return out


def conv3d_loops(x, w, b, stride=(1, 1, 1), padding=(0, 0, 0)):
    """3-D cross-correlation, one multiply-accumulate at a time."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bs, cin, d, p, q = x.shape
    cout, cin_w, kd, kp, kq = w.shape
    assert cin == cin_w
    sd, sp, sq = stride
    pd, pp, pq = padding
    xp = np.pad(x, ((0, 0), (0, 0), (pd, pd), (pp, pp), (pq, pq)))
    od = (d + 2 * pd - kd) // sd + 1
    op = (p + 2 * pp - kp) // sp + 1
    oq = (q + 2 * pq - kq) // sq + 1
    out = np.zeros((bs, cout, od, op, oq))
    for n in range(bs):
        for o in range(cout):
            for t in range(od):
                for i in range(op):
                    for j in range(oq):
                        acc = b[o]
                        for c in range(cin):
                            for s in range(kd):
                                for u in range(kp):
                                    for v in range(kq):
                                        acc += (
                                            xp[n, c, t * sd + s, i * sp + u, j * sq + v]
                                            * w[o, c, s, u, v]
                                        )
                        out[n, o, t, i, j] = acc
    return out


def rel_err(a, b) -> float:
    """Max-norm relative error, safe when both sides are tiny."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.abs(a).max(initial=0.0) + np.abs(b).max(initial=0.0) + 1e-12
    return float(np.abs(a - b).max(initial=0.0) / denom)


def fd_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar-valued ``f`` at ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = f(x)
        flat[i] = keep - h
        fm = f(x)
        flat[i] = keep
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def check_op_grads(build, arrays, h: float = 1e-5, projection_seed: int = 0):
    """Compare autodiff and finite-difference gradients of one op.

    ``build`` maps a tuple of Tensors to an output Tensor; the scalar
    objective is a fixed random projection of that output so every output
    element influences the loss. Returns the worst relative error across
    all differentiated inputs.
    """
    rng = np.random.default_rng(projection_seed)
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    proj = rng.standard_normal(out.values.shape)

    from pstnet.tensor import mul, tsum

    loss = tsum(mul(out, Tensor(proj)))
    loss.backward()

    worst = 0.0
    for k, arr in enumerate(arrays):
        def objective(candidate, k=k):
            trial = [
                Tensor(candidate if i == k else arrays[i]) for i in range(len(arrays))
            ]
            return float((build(*trial).values * proj).sum())

        fd = fd_grad(objective, np.asarray(arr, dtype=np.float64), h=h)
        worst = max(worst, rel_err(tensors[k].grad, fd))
    return worst
