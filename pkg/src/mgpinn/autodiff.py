"""Forward second-order jets through dense tanh networks and reverse
accumulation of parameter gradients over the recorded jet computation.

A batch of jets is a ``(C, n, w)`` array (see :mod:`mgpinn._kernels`).  Only
the diagonal second derivatives of the ``second`` coordinates are carried;
cross derivatives would need an extra channel per coordinate pair.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, TrainingFault


@dataclass(frozen=True)
class Jet2:
    """Scalar value with first and second derivative along one direction."""

    value: float
    d1: float = 0.0
    d2: float = 0.0

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.value + other, self.d1, self.d2)

    __radd__ = __add__

    def scale(self, c):
        return Jet2(c * self.value, c * self.d1, c * self.d2)

    def tanh(self):
        v = math.tanh(self.value)
        sd = 1.0 - v * v
        return Jet2(v, sd * self.d1, sd * self.d2 - 2.0 * v * sd * self.d1 ** 2)


def forward_jet2(spec, store, x, direction):
    """Per-point scalar reference: propagate :class:`Jet2` along ``direction``."""
    h = [Jet2(float(xi), float(di), 0.0) for xi, di in zip(x, direction)]
    for i in range(spec.depth):
        W, b = store.W(i), store.b(i)
        z = []
        for r in range(W.shape[0]):
            acc = Jet2(float(b[r]))
            for c, hc in enumerate(h):
                acc = acc + hc.scale(float(W[r, c]))
            z.append(acc)
        h = [zi.tanh() for zi in z] if i < spec.depth - 1 else z
    return h[0]


@dataclass
class MultiJet:
    """Value, gradient and diagonal Hessian entries of a scalar field at ``n`` points.

    ``grad[:, j]`` is the derivative along input coordinate ``tracked[j]`` and
    ``hess[:, i]`` the second derivative along ``second[i]``.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    tracked: tuple = ()
    second: tuple = ()

    def d(self, coord):
        return self.grad[:, self.tracked.index(coord)]

    def dd(self, coord):
        return self.hess[:, self.second.index(coord)]

    def __add__(self, other):
        if self.tracked != other.tracked or self.second != other.second:
            raise ValueError("jets track different coordinates")
        return MultiJet(self.value + other.value, self.grad + other.grad,
                        self.hess + other.hess, self.tracked, self.second)

    def __len__(self):
        return self.value.shape[0]

    def to_array(self):
        """Channel-major ``(C, n)`` array in jet layout."""
        return np.concatenate([self.value[None], self.grad.T, self.hess.T])

    @classmethod
    def from_array(cls, arr, tracked, second):
        m = len(tracked)
        return cls(arr[0].copy(), arr[1:m + 1].T.copy(), arr[m + 1:].T.copy(), tuple(tracked), tuple(second))

    @classmethod
    def zeros(cls, n, tracked=(), second=()):
        return cls(np.zeros(n), np.zeros((n, len(tracked))), np.zeros((n, len(second))), tuple(tracked), tuple(second))


class JetLayout:
    """Channel bookkeeping for a set of tracked/second-derivative coordinates."""

    def __init__(self, tracked=(), second=None):
        self.tracked = tuple(int(c) for c in tracked)
        self.second = self.tracked if second is None else tuple(int(c) for c in second)
        missing = set(self.second) - set(self.tracked)
        if missing:
            raise ConfigurationError(f"second-derivative coordinates {sorted(missing)} are not tracked")
        self.pairs = np.array([1 + self.tracked.index(c) for c in self.second], dtype=np.int64)

    @property
    def channels(self):
        return 1 + len(self.tracked) + len(self.second)

    def __eq__(self, other):
        return isinstance(other, JetLayout) and (self.tracked, self.second) == (other.tracked, other.second)

    def __hash__(self):
        return hash((self.tracked, self.second))

    def seed(self, x):
        """Input jets: value ``x``, unit first derivatives, zero second derivatives."""
        x = np.asarray(x, dtype=np.float64)
        n, d = x.shape
        if any(c < 0 or c >= d for c in self.tracked):
            raise ConfigurationError(f"tracked coordinates {self.tracked} outside input dimension {d}")
        J = np.zeros((self.channels, n, d))
        J[0] = x
        for j, c in enumerate(self.tracked):
            J[1 + j, :, c] = 1.0
        return J

    def to_multijet(self, J):
        """Collapse a width-1 jet array ``(C, n, 1)`` into a :class:`MultiJet`."""
        return MultiJet.from_array(J[:, :, 0], self.tracked, self.second)


VALUE = JetLayout(())


@dataclass(frozen=True)
class LayerRef:
    """One dense layer inside some :class:`ParamStore`."""

    store: object
    index: int
    activation: bool
    key: tuple

    @property
    def W(self):
        return self.store.W(self.index)

    @property
    def b(self):
        return self.store.b(self.index)

    @property
    def trainable(self):
        return not self.store.frozen[self.index]


def network_layers(store, key=0):
    depth = store.spec.depth
    return [LayerRef(store, i, i < depth - 1, (key, i)) for i in range(depth)]


class Tape:
    """Record of a layer-chain forward pass; replayed backwards for adjoints.

    Each record holds the layer, its input jets and (for tanh layers) the
    pre-activation and output jets.  Adjoints are accumulated per trainable
    layer key; frozen layers only propagate input adjoints.
    """

    def __init__(self, layout):
        self.layout = layout
        self.records = []

    def backward(self, g_out, need_input=False):
        """Return ``{key: (gW, gb)}`` for trainable layers (and the input adjoint)."""
        grads = {}
        g = g_out
        lowest = next((k for k, r in enumerate(self.records) if r[0].trainable), None)
        if lowest is None and not need_input:
            return grads, None
        stop = 0 if need_input else lowest
        for k in range(len(self.records) - 1, stop - 1, -1):
            layer, J_in, Z, A = self.records[k]
            if layer.activation:
                g = _kernels.tanh_jet_backward(Z, A, g, self.layout.pairs)
            C, n, w_out = g.shape
            g2 = g.reshape(C * n, w_out)
            if layer.trainable:
                gW = g2.T @ J_in.reshape(C * n, -1)
                gb = g[0].sum(axis=0)
                grads[layer.key] = (gW, gb)
            if k > stop or need_input:
                g = (g2 @ layer.W).reshape(C, n, -1)
        return grads, (g if need_input else None)


def run_chain(layers, J, layout, record=False):
    """Push jets ``J`` through ``layers``; returns ``(out, tape or None)``."""
    tape = Tape(layout) if record else None
    C, n, _ = J.shape
    for layer in layers:
        W = layer.W
        if J.shape[2] != W.shape[1]:
            raise ConfigurationError(f"jet width {J.shape[2]} does not match layer input width {W.shape[1]}")
        # value rows get their own matmul so they bit-match a plain forward pass
        Z = np.empty((C, n, W.shape[0]))
        np.matmul(J[0], W.T, out=Z[0])
        Z[0] += layer.b
        if C > 1:
            Z[1:] = (J[1:].reshape((C - 1) * n, -1) @ W.T).reshape(C - 1, n, -1)
        A = _kernels.tanh_jet_forward(Z, layout.pairs) if layer.activation else Z
        if record:
            tape.records.append((layer, J, Z, A))
        J = A
    return J, tape


def forward_jets(spec, store, x, tracked, second=None):
    """Value, first and diagonal second derivatives of the network at ``x``.

    ``x`` is one point ``(d0,)`` or a batch ``(n, d0)``.  ``tracked`` lists the
    input coordinates to differentiate along; ``second`` the subset needing
    second derivatives (all tracked ones by default).
    """
    x = np.asarray(x, dtype=np.float64)
    pts = np.atleast_2d(x)
    if pts.shape[1] != spec.input_dim:
        raise ConfigurationError(f"input dimension {pts.shape[1]} != network input width {spec.input_dim}")
    layout = JetLayout(tracked, second)
    out, _ = run_chain(network_layers(store), layout.seed(pts), layout)
    return layout.to_multijet(out)


class TrainableView:
    """Stable ordering of trainable layers across one or more stores."""

    def __init__(self, layers):
        seen = set()
        self.layers = []
        for layer in layers:
            if layer.trainable and layer.key not in seen:
                seen.add(layer.key)
                self.layers.append(layer)
        self.slices = {}
        pos = 0
        for layer in self.layers:
            sl = layer.store.layer_slice(layer.index)
            size = sl.stop - sl.start
            self.slices[layer.key] = slice(pos, pos + size)
            pos += size
        self.size = pos

    def gather(self):
        out = np.empty(self.size)
        for layer in self.layers:
            out[self.slices[layer.key]] = layer.store.flat[layer.store.layer_slice(layer.index)]
        return out

    def scatter(self, theta):
        for layer in self.layers:
            layer.store.flat[layer.store.layer_slice(layer.index)] = theta[self.slices[layer.key]]

    def flatten(self, grads):
        """Flatten ``{key: (gW, gb)}`` into slot order, zero for untouched layers."""
        out = np.zeros(self.size)
        for layer in self.layers:
            if layer.key in grads:
                gW, gb = grads[layer.key]
                sl = self.slices[layer.key]
                k = gW.size
                out[sl.start:sl.start + k] = gW.ravel()
                out[sl.start + k:sl.stop] = gb
        return out


def loss_gradient(view, contributions):
    """Accumulate parameter gradients over ``(tape, output adjoint)`` pairs.

    Returns a vector over ``view``'s trainable slots; frozen layers never get
    entries.  Contributions are summed in the given order.
    """
    total = np.zeros(view.size)
    for tape, g_out in contributions:
        grads, _ = tape.backward(g_out)
        total += view.flatten(grads)
    if not np.all(np.isfinite(total)):
        raise TrainingFault("non-finite parameter gradient")
    return total


class PrefixCache:
    """Jets at the output of a frozen layer prefix, keyed by point set.

    Entries are tagged with the stores' version counters and the prefix
    length; any freeze/unfreeze on a prefix store invalidates them.
    """

    def __init__(self):
        self._entries = {}

    def get(self, name, points, layers, layout):
        if any(layer.trainable for layer in layers):
            raise ConfigurationError("cached prefix contains a trainable layer")
        tag = (len(layers), tuple((layer.key, layer.store.version) for layer in layers), layout)
        hit = self._entries.get(name)
        if hit is not None and hit[0] == tag and hit[1] is points:
            return hit[2]
        J, _ = run_chain(layers, layout.seed(points), layout)
        self._entries[name] = (tag, points, J)
        return J

    def clear(self):
        self._entries.clear()
