"""Relative L2 error and slice error profiles against exact solutions."""

import csv
import math
from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import VALUE
from .errors import UndefinedMetricError


def relative_l2(exact, predicted):
    """``||u - u*||_2 / ||u||_2``."""
    u = np.asarray(exact, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if u.shape != p.shape or u.size == 0:
        raise ValueError(f"need equal non-empty lengths, got {u.size} and {p.size}")
    norm = math.sqrt(math.fsum((u * u).tolist()))
    if norm == 0.0:
        raise UndefinedMetricError("relative L2 error is undefined for an identically zero exact solution")
    d = u - p
    return math.sqrt(math.fsum((d * d).tolist())) / norm


@dataclass
class ErrorSummary:
    relative_l2: float
    max_abs_error: float
    grid_shape: tuple
    slice_profile: list = None

    def as_dict(self):
        d = asdict(self)
        d["grid_shape"] = list(self.grid_shape)
        if d["slice_profile"] is None:
            d.pop("slice_profile")
        return d


def summarize(exact, predicted, grid_shape):
    exact = np.asarray(exact).ravel()
    predicted = np.asarray(predicted).ravel()
    return ErrorSummary(relative_l2(exact, predicted), float(np.max(np.abs(exact - predicted))),
                        tuple(grid_shape))


def slice_errors(predictor, problem, grid, t):
    """Absolute errors ``|u - u*|`` on the grid points at time ``t``.

    Returns ``(points, errors)`` for the grid time level nearest to ``t``,
    which must lie within half a time step of it.
    """
    grid = np.asarray(grid)
    levels = np.unique(grid[:, 0])
    k = int(np.argmin(np.abs(levels - t)))
    half = 0.5 * (levels[-1] - levels[0]) / max(len(levels) - 1, 1)
    if abs(levels[k] - t) > half + 1e-12:
        raise ValueError(f"t={t} is not on the grid (nearest level {levels[k]})")
    pts = grid[grid[:, 0] == levels[k]]
    pred = predictor(pts, VALUE).value
    return pts, np.abs(problem.exact(pts) - pred)


def write_slice_csv(path, points, errors):
    names = ["t", "x", "y", "z"][:points.shape[1]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["abs_error"])
        for p, e in zip(points, errors):
            w.writerow([f"{v:.17g}" for v in p] + [f"{e:.17g}"])
