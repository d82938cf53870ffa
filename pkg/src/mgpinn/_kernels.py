"""Elementwise tanh-jet kernels.

Jets are stored channel-major as arrays of shape ``(C, n, w)``: channel 0 is
the value, channels ``1..m`` first derivatives along the tracked input
coordinates and channels ``m+1..m+s`` second derivatives.  ``pairs[i]`` is the
first-derivative channel that second-derivative channel ``m+1+i`` belongs to.

Two implementations are provided.  The numba one fuses every elementwise
expression into a single pass over the arrays; the numpy one is the reference
and is used when numba is unavailable or ``MGPINN_DISABLE_NUMBA=1``.
"""

import os

import numpy as np


def _numpy_forward(z, pairs):
    m = z.shape[0] - 1 - len(pairs)
    v = np.tanh(z[0])
    sd = 1.0 - v * v
    out = np.empty_like(z)
    out[0] = v
    if m:
        np.multiply(sd, z[1:m + 1], out=out[1:m + 1])
    for i, p in enumerate(pairs):
        c = m + 1 + i
        out[c] = sd * (z[c] - 2.0 * v * z[p] * z[p])
    return out


def _numpy_backward(z, a, g, pairs):
    m = z.shape[0] - 1 - len(pairs)
    v = a[0]
    sd = 1.0 - v * v
    vs = v * sd
    gz = np.empty_like(z)
    gz[0] = g[0] * sd
    for j in range(1, m + 1):
        gz[j] = g[j] * sd
        gz[0] -= 2.0 * vs * g[j] * z[j]
    for i, p in enumerate(pairs):
        c = m + 1 + i
        gz[c] = g[c] * sd
        gz[p] -= 4.0 * vs * g[c] * z[p]
        gz[0] -= g[c] * (2.0 * vs * z[c] + 2.0 * z[p] * z[p] * sd * (1.0 - 3.0 * v * v))
    return gz


def _build_numba():
    import numba

    @numba.njit(cache=True)
    def _fill(z, v, pairs):
        n_ch = z.shape[0]
        s = pairs.shape[0]
        m = n_ch - 1 - s
        size = v.shape[0]
        out = np.empty_like(z)
        for k in range(size):
            out[0, k] = v[k]
        for j in range(1, m + 1):
            for k in range(size):
                out[j, k] = (1.0 - v[k] * v[k]) * z[j, k]
        for i in range(s):
            c = m + 1 + i
            p = pairs[i]
            for k in range(size):
                vk = v[k]
                d = z[p, k]
                out[c, k] = (1.0 - vk * vk) * (z[c, k] - 2.0 * vk * d * d)
        return out

    @numba.njit(cache=True)
    def _adjoint(z, a, g, pairs):
        n_ch = z.shape[0]
        s = pairs.shape[0]
        m = n_ch - 1 - s
        size = z.shape[1]
        gz = np.empty_like(z)
        for k in range(size):
            v = a[0, k]
            gz[0, k] = g[0, k] * (1.0 - v * v)
        for j in range(1, m + 1):
            for k in range(size):
                v = a[0, k]
                sd = 1.0 - v * v
                gz[j, k] = g[j, k] * sd
                gz[0, k] -= 2.0 * v * sd * g[j, k] * z[j, k]
        for i in range(s):
            c = m + 1 + i
            p = pairs[i]
            for k in range(size):
                v = a[0, k]
                sd = 1.0 - v * v
                vs = v * sd
                d = z[p, k]
                gc = g[c, k]
                gz[c, k] = gc * sd
                gz[p, k] -= 4.0 * vs * gc * d
                gz[0, k] -= gc * (2.0 * vs * z[c, k] + 2.0 * d * d * sd * (1.0 - 3.0 * v * v))
        return gz

    # tanh itself stays in numpy (SIMD); numba fuses the rest on flattened channels
    def forward(z, pairs):
        shape = z.shape
        z2 = z.reshape(shape[0], -1)
        return _fill(z2, np.tanh(z2[0]), pairs).reshape(shape)

    def backward(z, a, g, pairs):
        shape = z.shape
        return _adjoint(z.reshape(shape[0], -1), a.reshape(shape[0], -1),
                        g.reshape(shape[0], -1), pairs).reshape(shape)

    return forward, backward


def _select():
    if os.environ.get("MGPINN_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes"):
        return "numpy", _numpy_forward, _numpy_backward
    try:
        fwd, bwd = _build_numba()
    except ImportError:
        return "numpy", _numpy_forward, _numpy_backward
    return "numba", fwd, bwd


BACKEND, _forward, _backward = _select()


def as_pairs(pairs):
    return np.asarray(pairs, dtype=np.int64).reshape(-1)


def tanh_jet_forward(z, pairs):
    """Push pre-activation jets ``z`` through tanh; returns the output jets."""
    return _forward(np.ascontiguousarray(z), as_pairs(pairs))


def tanh_jet_backward(z, a, g, pairs):
    """Adjoint of :func:`tanh_jet_forward` given output adjoints ``g``."""
    return _backward(np.ascontiguousarray(z), np.ascontiguousarray(a),
                     np.ascontiguousarray(g), as_pairs(pairs))


def numpy_kernels():
    return _numpy_forward, _numpy_backward


def numba_kernels():
    return _build_numba()
