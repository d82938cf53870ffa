"""PINN loss ``Loss = Loss_PDE + Loss_I + Loss_B`` and its parameter gradient.

Means are computed with :func:`math.fsum` (correctly rounded), so each
component is independent of point order and of duplicating the point set.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import VALUE, TrainableView, loss_gradient, run_chain
from .errors import TrainingFault


@dataclass(frozen=True)
class LossBreakdown:
    pde: float
    initial: float
    boundary: float

    @property
    def total(self):
        return math.fsum((self.pde, self.initial, self.boundary))

    def as_dict(self):
        d = asdict(self)
        d["total"] = self.total
        return d


def mean_square(r):
    r = np.asarray(r, dtype=np.float64).ravel()
    return math.fsum((r * r).tolist()) / r.size


def _check_finite(r, points, what):
    bad = ~np.isfinite(r)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise TrainingFault(f"non-finite {what} residual at point {points[k].tolist()}", point=points[k])


def loss_pde(predictor, residual_op, points, layout):
    """Mean squared PDE residual; ``predictor(points, layout)`` returns a MultiJet."""
    jet = predictor(points, layout)
    r = np.asarray(residual_op(jet, points), dtype=np.float64)
    _check_finite(r, points, "PDE")
    return mean_square(r)


def loss_initial(predictor, initial_op, points):
    r = np.asarray(initial_op(predictor(points, VALUE).value, points), dtype=np.float64)
    _check_finite(r, points, "initial")
    return mean_square(r)


def loss_boundary(predictor, boundary_op, points):
    r = np.asarray(boundary_op(predictor(points, VALUE).value, points), dtype=np.float64)
    _check_finite(r, points, "boundary")
    return mean_square(r)


def total_loss(predictor, problem, samples):
    return LossBreakdown(
        loss_pde(predictor, problem.residual, samples.collocation, problem.layout),
        loss_initial(predictor, problem.initial_residual, samples.initial),
        loss_boundary(predictor, problem.boundary_residual, samples.boundary),
    )


class PinnObjective:
    """Loss and gradient of ``offset + head(prefix jets)`` over a sample set.

    ``head`` is the layer chain from the frozen prefix boundary to an output
    layer.  ``colloc_in``/``ib_in`` are jets at that boundary for the
    collocation points and for the stacked initial+boundary points.  The
    offsets hold the (constant) jets of earlier grades at the same points.
    """

    def __init__(self, problem, samples, head, colloc_in, ib_in, colloc_offset=None, ib_offset=None):
        self.problem = problem
        self.samples = samples
        self.head = list(head)
        self.view = TrainableView(self.head)
        self.colloc_in = colloc_in
        self.ib_in = ib_in
        self.n_0 = len(samples.initial)
        self.ib_points = np.concatenate([samples.initial, samples.boundary])
        C, n = colloc_in.shape[0], colloc_in.shape[1]
        self.colloc_offset = np.zeros((C, n)) if colloc_offset is None else colloc_offset
        self.ib_offset = np.zeros(len(self.ib_points)) if ib_offset is None else ib_offset
        self._forcing = problem.forcing(samples.collocation)
        self._h = problem.initial_target(samples.initial)
        self._g = problem.boundary_target(samples.boundary)

    def outputs(self):
        """Head outputs (without offsets): ``(C, n_f)`` jets and ``(n_0 + n_b,)`` values."""
        out_c, _ = run_chain(self.head, self.colloc_in, self.problem.layout)
        out_ib, _ = run_chain(self.head, self.ib_in, VALUE)
        return out_c[:, :, 0], out_ib[0, :, 0]

    def evaluate(self, grad=True, epoch=None):
        layout = self.problem.layout
        out_c, tape_c = run_chain(self.head, self.colloc_in, layout, record=grad)
        out_ib, tape_ib = run_chain(self.head, self.ib_in, VALUE, record=grad)
        total_c = self.colloc_offset + out_c[:, :, 0]
        jet = layout.to_multijet(total_c[:, :, None])
        pts = self.samples.collocation
        r = np.asarray(self.problem.residual(jet, pts, self._forcing))
        u_ib = self.ib_offset + out_ib[0, :, 0]
        ri = u_ib[:self.n_0] - self._h
        rb = u_ib[self.n_0:] - self._g
        for res, p, what in ((r, pts, "PDE"), (ri, self.samples.initial, "initial"),
                             (rb, self.samples.boundary, "boundary")):
            bad = ~np.isfinite(res)
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise TrainingFault(f"non-finite {what} residual at point {p[k].tolist()}",
                                    epoch=epoch, point=p[k])
        breakdown = LossBreakdown(mean_square(r), mean_square(ri), mean_square(rb))
        if not math.isfinite(breakdown.total):
            raise TrainingFault(f"non-finite loss at epoch {epoch}: {breakdown}", epoch=epoch, breakdown=breakdown)
        if not grad:
            return breakdown, None
        dv, dg, dh = self.problem.residual_partials(jet, pts)
        scale = 2.0 * r / r.size
        g_c = np.concatenate([(scale * dv)[None], (scale[:, None] * dg).T, (scale[:, None] * dh).T])
        g_ib = np.concatenate([2.0 * ri / ri.size, 2.0 * rb / rb.size])
        try:
            g = loss_gradient(self.view, [(tape_c, g_c[:, :, None]), (tape_ib, g_ib[None, :, None])])
        except TrainingFault as exc:
            raise TrainingFault(f"non-finite gradient at epoch {epoch}", epoch=epoch, breakdown=breakdown) from exc
        return breakdown, g

