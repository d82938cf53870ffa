"""Grade-by-grade training, stage-2 tail retraining and the single-grade baseline.

Each phase runs full-batch Adam for a fixed number of epochs, records the
pre-step loss every epoch and finally restores the parameters with the
lowest recorded loss.  Because every new grade starts as the zero function
and stage 2 starts from the stage-1 minimizer, the best losses form a
non-increasing chain across phases.
"""

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import optimizer
from .autodiff import VALUE
from .errors import ConfigurationError, TrainingFault
from .gradestack import (GradeStack, cumulative_offset, evaluate_cumulative, push_grade,
                         unfreeze_tail)
from .loss import PinnObjective
from .metrics import relative_l2
from .network import NetworkSpec

log = logging.getLogger(__name__)


@dataclass
class GradeConfig:
    widths: tuple
    lr: float
    decay: float
    epochs: int

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be non-negative, got {self.epochs}")


@dataclass
class Stage2Config:
    k: int
    lr: float
    decay: float
    epochs: int


@dataclass
class TrainReport:
    label: str
    stage: str
    grade: int
    history: list = field(default_factory=list)
    lrs: list = field(default_factory=list)
    initial_loss: object = None
    best_loss: float = math.inf
    best_epoch: int = -1
    relative_l2: float = None
    duration: float = 0.0
    n_trainable: int = 0

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "pde", "initial", "boundary", "total", "lr"])
            for e, (b, lr) in enumerate(zip(self.history, self.lrs)):
                w.writerow([e] + [f"{v:.17g}" for v in (b.pde, b.initial, b.boundary, b.total, lr)])

    def summary(self):
        return {
            "label": self.label,
            "stage": self.stage,
            "grade": self.grade,
            "epochs": len(self.history),
            "initial_loss": self.initial_loss.total if self.initial_loss else None,
            "best_loss": self.best_loss,
            "best_epoch": self.best_epoch,
            "relative_l2": self.relative_l2,
            "n_trainable": self.n_trainable,
            "duration_s": self.duration,
        }


def grade_seed(seed, grade):
    """Independent 32-bit initialization seed for one grade."""
    return int(np.random.SeedSequence([int(seed), int(grade)]).generate_state(1)[0])


def _optimize(objective, lr, decay, epochs, report, log_every=0):
    view = objective.view
    theta = view.gather()
    state = optimizer.AdamState.create(view.size, lr, decay)
    best_theta = theta.copy()
    report.n_trainable = view.size
    t0 = time.perf_counter()
    try:
        if epochs == 0:
            b, _ = objective.evaluate(grad=False, epoch=0)
            report.initial_loss = b
            report.best_loss, report.best_epoch = b.total, 0
        for epoch in range(epochs):
            b, g = objective.evaluate(epoch=epoch)
            if epoch == 0:
                report.initial_loss = b
            report.history.append(b)
            report.lrs.append(state.lr)
            if b.total < report.best_loss:
                report.best_loss, report.best_epoch = b.total, epoch
                best_theta[:] = theta
            if log_every and epoch % log_every == 0:
                log.info("%s epoch %d loss %.6e (pde %.3e, ic %.3e, bc %.3e)", report.label, epoch,
                         b.total, b.pde, b.initial, b.boundary)
            try:
                theta = optimizer.step(state, theta, g)
            except TrainingFault as exc:
                raise TrainingFault(str(exc), epoch=epoch, breakdown=b) from exc
            view.scatter(theta)
    except TrainingFault as exc:
        view.scatter(best_theta)
        report.duration = time.perf_counter() - t0
        exc.report = report
        raise
    view.scatter(best_theta)
    report.duration = time.perf_counter() - t0
    return report


def _objective(stack, samples, problem, offset_grades, snapshot=False):
    layout = problem.layout
    prefix = stack.frozen_prefix()
    c_in = stack.cache.get("collocation", samples.collocation, prefix, layout)
    ib_pts = np.concatenate([samples.initial, samples.boundary])
    ib_in = stack.cache.get("initial+boundary", _ib_key(samples, ib_pts), prefix, VALUE)
    c_off = cumulative_offset(stack, samples.collocation, layout, offset_grades, snapshot)
    ib_off = cumulative_offset(stack, ib_pts, VALUE, offset_grades, snapshot)[0]
    return PinnObjective(problem, samples, stack.head(), c_in, ib_in, c_off, ib_off)


def _ib_key(samples, ib_pts):
    # keep one stacked array per SampleSet so the cache can hit by identity
    cached = getattr(samples, "_ib_points", None)
    if cached is None or cached.shape != ib_pts.shape or not np.array_equal(cached, ib_pts):
        samples._ib_points = ib_pts
    return samples._ib_points


def _score(report, stack, grid, exact):
    if grid is not None and exact is not None:
        report.relative_l2 = relative_l2(exact, evaluate_cumulative(stack, grid).value)


def train_grade(stack, grade_config, samples, problem, seed=0, grid=None, exact=None, log_every=0):
    """Push a new grade onto ``stack`` and train it with all earlier layers frozen."""
    if stack.input_dim != problem.input_dim:
        raise ConfigurationError("stack input dimension does not match the problem")
    if grade_config.epochs < 1:
        raise ConfigurationError("a grade needs at least one epoch")
    grade = len(stack) + 1
    push_grade(stack, NetworkSpec(grade_config.widths), grade_seed(seed, grade))
    report = TrainReport(f"grade{grade}", "stage1", grade)
    obj = _objective(stack, samples, problem, grade - 1)
    _optimize(obj, grade_config.lr, grade_config.decay, grade_config.epochs, report, log_every)
    _score(report, stack, grid, exact)
    return report


def train_stage2(stack, k, stage2_config, samples, problem, grid=None, exact=None, log_every=0):
    """Unfreeze the last ``k`` hidden layers of ``u_L`` (and its output layer) and retrain."""
    if stack.stage != "stage1" or not stack.grades:
        raise ConfigurationError("stage 2 needs a completed stage 1")
    unfreeze_tail(stack, k)
    L = len(stack)
    report = TrainReport("stage2", "stage2", L)
    obj = _objective(stack, samples, problem, L - 1, snapshot=True)
    _optimize(obj, stage2_config.lr, stage2_config.decay, stage2_config.epochs, report, log_every)
    _score(report, stack, grid, exact)
    return report


def train_single_grade_baseline(spec, config, samples, problem, seed=0, grid=None, exact=None, log_every=0):
    """Ordinary PINN: one network, every layer trainable, same loss and optimizer.

    Returns ``(stack, report)``; the stack holds the single network.
    """
    from .network import init_params
    from .gradestack import GradeNet

    if spec.input_dim != problem.input_dim:
        raise ConfigurationError("network input width does not match the problem")
    stack = GradeStack(problem.input_dim)
    stack.grades.append(GradeNet(spec, init_params(spec, grade_seed(seed, 1), output_layer_zero=False), 1))
    report = TrainReport("sgl", "sgl", 1)
    obj = _objective(stack, samples, problem, 0)
    try:
        _optimize(obj, config.lr, config.decay, config.epochs, report, log_every)
    except TrainingFault as exc:
        exc.stack = stack
        raise
    _score(report, stack, grid, exact)
    return stack, report


def run_ts_mgdl(problem, samples, grades, stage2=None, seed=0, grid=None, exact=None, log_every=0,
                on_phase=None):
    """Stage 1 over ``grades`` then (optionally) stage 2; returns ``(stack, reports)``."""
    if not grades:
        raise ConfigurationError("TS-MGDL needs at least one grade")
    stack = GradeStack(problem.input_dim)
    reports = []
    try:
        for cfg in grades:
            rep = train_grade(stack, cfg, samples, problem, seed, grid, exact, log_every)
            reports.append(rep)
            if on_phase:
                on_phase(stack, rep)
        if stage2 is not None:
            rep = train_stage2(stack, stage2.k, stage2, samples, problem, grid, exact, log_every)
            reports.append(rep)
            if on_phase:
                on_phase(stack, rep)
    except TrainingFault as exc:
        # the failing phase already restored its best iterate
        exc.stack = stack
        raise
    return stack, reports


def check_monotone(reports):
    """Pairs ``(a, b)`` of consecutive phases whose best loss increased."""
    return [(a.label, b.label) for a, b in zip(reports, reports[1:]) if b.best_loss > a.best_loss]
