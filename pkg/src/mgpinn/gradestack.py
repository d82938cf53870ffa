"""Multi-grade network stacks.

Grade ``l+1`` is a fresh network stacked on the last hidden layer of grade
``l``; every earlier layer is frozen.  The predictor is the sum of all grade
outputs.  In the second stage the tail of the last grade's composed network
is unfrozen; the earlier grades' contribution is then evaluated from a
snapshot of the stage-1 parameters.

Stack checkpoint layout (little-endian)::

    magic       4 bytes  b"MGST"
    format      u32      1
    input_dim   u32
    stage       u8       1 or 2
    k           i32      unfrozen hidden layers in stage 2, -1 otherwise
    n_grades    u32
    grades      n_grades network checkpoints (see mgpinn.network)
    n_snapshot  u32
    snapshot    n_snapshot network checkpoints (stage-1 parameters)
"""

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import VALUE, JetLayout, LayerRef, PrefixCache, run_chain
from .errors import ConfigurationError
from .network import ParamStore, init_params

MAGIC = b"MGST"
FORMAT = 1


def _layers(store, grade, indices, tag="live"):
    depth = store.spec.depth
    return [LayerRef(store, i, i < depth - 1, (tag, grade, i)) for i in indices]


@dataclass
class GradeNet:
    spec: object
    store: ParamStore
    grade: int

    @property
    def n_hidden(self):
        return self.spec.depth - 1


@dataclass
class UnfreezeSet:
    k: int
    boundary: int
    layers: list

    @property
    def widths(self):
        """Unfrozen hidden widths in forward order."""
        return [w for (_, _, w) in self.layers]


class GradeStack:
    def __init__(self, input_dim):
        self.input_dim = int(input_dim)
        self.grades = []
        self.stage = "stage1"
        self.unfreeze = None
        self.snapshot = None
        self.cache = PrefixCache()

    def __len__(self):
        return len(self.grades)

    @property
    def prefix_width(self):
        if not self.grades:
            return self.input_dim
        return self.grades[-1].spec.layer_widths[-2]

    def stores(self, snapshot=False):
        return self.snapshot if snapshot else [g.store for g in self.grades]

    def hidden_chain(self, upto, snapshot=False):
        """Hidden layers of grades ``1..upto`` in forward order."""
        stores = self.stores(snapshot)
        tag = "snap" if snapshot else "live"
        out = []
        for g in range(upto):
            out += _layers(stores[g], g + 1, range(stores[g].spec.depth - 1), tag)
        return out

    def output_layer(self, grade, snapshot=False):
        store = self.stores(snapshot)[grade - 1]
        return _layers(store, grade, [store.spec.depth - 1], "snap" if snapshot else "live")[0]

    def composed(self, grade, snapshot=False):
        """Layer chain of the grade-``grade`` network ``u_grade``."""
        return self.hidden_chain(grade, snapshot) + [self.output_layer(grade, snapshot)]

    def frozen_prefix(self):
        """Leading layers of the trainable network that are frozen (cacheable)."""
        L = len(self.grades)
        if L == 0:
            return []
        if self.stage == "stage2":
            return self.composed(L)[:self.unfreeze.boundary]
        return self.hidden_chain(L - 1)

    def head(self):
        """Trainable network from the frozen boundary to the last grade's output."""
        L = len(self.grades)
        return self.composed(L)[len(self.frozen_prefix()):]

    # --- serialization -------------------------------------------------
    def to_bytes(self):
        k = -1 if self.unfreeze is None else self.unfreeze.k
        out = MAGIC + struct.pack("<IIBiI", FORMAT, self.input_dim, 2 if self.stage == "stage2" else 1,
                                  k, len(self.grades))
        for g in self.grades:
            out += g.store.to_bytes()
        snap = self.snapshot or []
        out += struct.pack("<I", len(snap))
        for s in snap:
            out += s.to_bytes()
        return out

    @classmethod
    def from_bytes(cls, buf):
        if buf[:4] != MAGIC:
            raise ConfigurationError("not a stack checkpoint (bad magic)")
        fmt, input_dim, stage, k, n = struct.unpack_from("<IIBiI", buf, 4)
        if fmt != FORMAT:
            raise ConfigurationError(f"unsupported stack checkpoint format {fmt}")
        pos = 4 + struct.calcsize("<IIBiI")
        stack = cls(input_dim)
        for g in range(n):
            store, pos = ParamStore.from_bytes(buf, pos)
            stack.grades.append(GradeNet(store.spec, store, g + 1))
        (n_snap,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        snap = []
        for _ in range(n_snap):
            s, pos = ParamStore.from_bytes(buf, pos)
            snap.append(s)
        if stage == 2:
            stack.stage = "stage2"
            stack.snapshot = snap
            stack.unfreeze = _describe_unfreeze(stack, k)
        return stack

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def push_grade(stack, top_spec, seed):
    """Freeze the stack and stack a new zero-output network on its last hidden layer."""
    if stack.stage != "stage1":
        raise ConfigurationError("cannot push a grade after stage-2 unfreezing")
    if top_spec.input_dim != stack.prefix_width:
        raise ConfigurationError(
            f"grade {len(stack) + 1} input width {top_spec.input_dim} != width of the previous "
            f"grade's last hidden layer ({stack.prefix_width})")
    if stack.grades and stack.grades[-1].n_hidden < 1:
        raise ConfigurationError("the previous grade has no hidden layer to stack on")
    for g in stack.grades:
        if not g.store.frozen.all():
            g.store.freeze()
    net = GradeNet(top_spec, init_params(top_spec, seed, output_layer_zero=True), len(stack) + 1)
    stack.grades.append(net)
    return net


def _hidden_positions(stack):
    """``(grade, layer index, width)`` for every hidden layer of the last grade's composition."""
    out = []
    for g in stack.grades:
        for i in range(g.n_hidden):
            out.append((g.grade, i, g.spec.layer_widths[i + 1]))
    return out


def _describe_unfreeze(stack, k):
    positions = _hidden_positions(stack)
    k_L = stack.grades[-1].n_hidden
    if not (k_L < k <= len(positions)):
        raise ConfigurationError(
            f"stage-2 k={k} must satisfy k > k_L={k_L} (hidden layers of the last grade; the "
            f"loss-reduction guarantee of the second stage needs k > k_L) and k <= {len(positions)}")
    boundary = len(positions) - k
    return UnfreezeSet(k, boundary, positions[boundary:])


def unfreeze_tail(stack, k):
    """Unfreeze the ``k`` hidden layers nearest the output of ``u_L`` plus its output layer."""
    if not stack.grades:
        raise ConfigurationError("empty stack")
    if stack.stage == "stage2":
        raise ConfigurationError("stack is already in stage 2")
    desc = _describe_unfreeze(stack, int(k))
    stack.snapshot = [g.store.copy() for g in stack.grades]
    for s in stack.snapshot:
        s.freeze()
    for g in stack.grades:
        g.store.freeze()
    for grade, idx, _ in desc.layers:
        stack.grades[grade - 1].store.unfreeze(idx)
    last = stack.grades[-1]
    last.store.unfreeze(last.spec.depth - 1)
    stack.stage = "stage2"
    stack.unfreeze = desc
    stack.cache.clear()
    return desc


def _layout(tracked, second):
    return VALUE if not tracked else JetLayout(tracked, second)


def grade_outputs(stack, points, layout, upto=None, snapshot=False):
    """Per-grade output jets ``(C, n)`` of grades ``1..upto`` and the final hidden jets."""
    upto = len(stack) if upto is None else upto
    J = layout.seed(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    outs = []
    for g in range(1, upto + 1):
        hidden = _layers(stack.stores(snapshot)[g - 1], g, range(stack.stores(snapshot)[g - 1].spec.depth - 1))
        J, _ = run_chain(hidden, J, layout)
        out, _ = run_chain([stack.output_layer(g, snapshot)], J, layout)
        outs.append(out[:, :, 0])
    return outs, J


def cumulative_offset(stack, points, layout, upto, snapshot=False):
    """``sum_{i <= upto} u_i`` as a ``(C, n)`` jet array, summed in grade order."""
    n = np.atleast_2d(points).shape[0]
    total = np.zeros((layout.channels, n))
    if upto == 0:
        return total
    outs, _ = grade_outputs(stack, points, layout, upto, snapshot)
    for o in outs:
        total = total + o
    return total


def evaluate_cumulative(stack, x, tracked=None, second=None):
    """Jets of the stack predictor at ``x``.

    Stage 1: ``sum_i u_i``.  Stage 2: ``sum_{i<L} u_i`` (stage-1 snapshot)
    plus the retrained ``u_L``.
    """
    if not stack.grades:
        raise ConfigurationError("empty stack")
    layout = _layout(tracked, second)
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if pts.shape[1] != stack.input_dim:
        raise ConfigurationError(f"input dimension {pts.shape[1]} != stack input dimension {stack.input_dim}")
    L = len(stack)
    if stack.stage == "stage1":
        total = cumulative_offset(stack, pts, layout, L)
    else:
        total = cumulative_offset(stack, pts, layout, L - 1, snapshot=True)
        out, _ = run_chain(stack.composed(L), layout.seed(pts), layout)
        total = total + out[:, :, 0]
    return layout.to_multijet(total[:, :, None])


def cached_prefix_jet(stack, x, layout, name="points"):
    """Jets at the frozen boundary of the trainable network, reused while prefix versions hold."""
    return stack.cache.get(name, x, stack.frozen_prefix(), layout)


def stack_predictor(stack):
    """Predictor closure ``(points, layout) -> MultiJet`` over the stack."""
    def predict(points, layout):
        return evaluate_cumulative(stack, points, layout.tracked, layout.second)
    return predict
