"""Dense tanh networks with flat parameter storage and per-layer freeze flags.

Checkpoint layout (all integers little-endian)::

    magic          4 bytes   b"MGPN"
    format         u32       1
    n_widths       u32
    widths         u32[n_widths]
    frozen         u8[n_widths - 1]
    version        u64
    n_params       u64
    params         f64[n_params]   (W_1, b_1, ..., W_D, b_D; W row-major)
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

MAGIC = b"MGPN"
FORMAT = 1


@dataclass(frozen=True)
class NetworkSpec:
    layer_widths: tuple
    activation: str = "tanh"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ConfigurationError(f"need at least input and output widths, got {widths}")
        if min(widths) < 1:
            raise ConfigurationError(f"all layer widths must be >= 1, got {widths}")
        if self.activation != "tanh":
            raise ConfigurationError(f"unsupported activation {self.activation!r}")

    @property
    def depth(self):
        return len(self.layer_widths) - 1

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def output_dim(self):
        return self.layer_widths[-1]

    def layer_shape(self, i):
        return self.layer_widths[i + 1], self.layer_widths[i]

    def layer_offsets(self):
        """Start offset of each layer's ``W`` block in the flat store, plus the total."""
        offsets = []
        pos = 0
        for i in range(self.depth):
            out_w, in_w = self.layer_shape(i)
            offsets.append(pos)
            pos += out_w * in_w + out_w
        return offsets, pos

    @property
    def n_params(self):
        return self.layer_offsets()[1]


class ParamStore:
    """Flat parameter vector with views ``W(i)``, ``b(i)`` and freeze flags."""

    def __init__(self, spec, flat=None, frozen=None, version=0):
        self.spec = spec
        offsets, total = spec.layer_offsets()
        self._offsets = offsets
        self.flat = np.zeros(total) if flat is None else np.array(flat, dtype=np.float64)
        if self.flat.shape != (total,):
            raise ConfigurationError(f"flat parameter length {self.flat.size} != {total}")
        self.frozen = np.zeros(spec.depth, dtype=bool) if frozen is None else np.array(frozen, dtype=bool)
        self.version = int(version)

    def W(self, i):
        out_w, in_w = self.spec.layer_shape(i)
        o = self._offsets[i]
        return self.flat[o:o + out_w * in_w].reshape(out_w, in_w)

    def b(self, i):
        out_w, in_w = self.spec.layer_shape(i)
        o = self._offsets[i] + out_w * in_w
        return self.flat[o:o + out_w]

    def layer_slice(self, i):
        out_w, in_w = self.spec.layer_shape(i)
        o = self._offsets[i]
        return slice(o, o + out_w * in_w + out_w)

    def freeze(self, i=None):
        self._set_frozen(i, True)

    def unfreeze(self, i=None):
        self._set_frozen(i, False)

    def _set_frozen(self, i, flag):
        idx = range(self.spec.depth) if i is None else [i]
        for j in idx:
            self.frozen[j] = flag
        self.version += 1

    def trainable_layers(self):
        return [i for i in range(self.spec.depth) if not self.frozen[i]]

    @property
    def n_trainable(self):
        return sum(self.layer_slice(i).stop - self.layer_slice(i).start for i in self.trainable_layers())

    def copy(self):
        return ParamStore(self.spec, self.flat.copy(), self.frozen.copy(), self.version)

    def __eq__(self, other):
        return (isinstance(other, ParamStore) and self.spec == other.spec
                and np.array_equal(self.flat, other.flat)
                and np.array_equal(self.frozen, other.frozen)
                and self.version == other.version)

    # --- serialization -------------------------------------------------
    def to_bytes(self):
        widths = self.spec.layer_widths
        head = MAGIC + struct.pack("<II", FORMAT, len(widths))
        head += struct.pack(f"<{len(widths)}I", *widths)
        head += self.frozen.astype(np.uint8).tobytes()
        head += struct.pack("<QQ", self.version, self.flat.size)
        return head + self.flat.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf, offset=0):
        """Parse a store from ``buf``; returns ``(store, next_offset)``."""
        if buf[offset:offset + 4] != MAGIC:
            raise ConfigurationError("not a network checkpoint (bad magic)")
        fmt, n_w = struct.unpack_from("<II", buf, offset + 4)
        if fmt != FORMAT:
            raise ConfigurationError(f"unsupported network checkpoint format {fmt}")
        pos = offset + 12
        widths = struct.unpack_from(f"<{n_w}I", buf, pos)
        pos += 4 * n_w
        frozen = np.frombuffer(buf, dtype=np.uint8, count=n_w - 1, offset=pos).astype(bool)
        pos += n_w - 1
        version, n_params = struct.unpack_from("<QQ", buf, pos)
        pos += 16
        flat = np.frombuffer(buf, dtype="<f8", count=n_params, offset=pos).astype(np.float64)
        pos += 8 * n_params
        return cls(NetworkSpec(widths), flat, frozen, version), pos


def init_params(spec, seed, output_layer_zero=True):
    """Glorot-uniform hidden weights, zero biases; optionally a zero output layer."""
    rng = np.random.default_rng(seed)
    store = ParamStore(spec)
    for i in range(spec.depth):
        out_w, in_w = spec.layer_shape(i)
        if i == spec.depth - 1 and output_layer_zero:
            continue
        bound = np.sqrt(6.0 / (in_w + out_w))
        store.W(i)[...] = rng.uniform(-bound, bound, size=(out_w, in_w))
    return store


def forward(spec, store, x):
    """Network output for a point ``(d0,)`` or a batch ``(n, d0)``."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = np.atleast_2d(x)
    if h.shape[1] != spec.input_dim:
        raise ConfigurationError(f"input dimension {h.shape[1]} != network input width {spec.input_dim}")
    for i in range(spec.depth):
        h = h @ store.W(i).T + store.b(i)
        if i < spec.depth - 1:
            h = np.tanh(h)
    out = h[:, 0] if spec.output_dim == 1 else h
    return out[0] if single else out


def save_network(path, store):
    with open(path, "wb") as fh:
        fh.write(store.to_bytes())


def load_network(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    return ParamStore.from_bytes(buf)[0]
