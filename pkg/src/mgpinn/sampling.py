"""Hammersley collocation, random initial/boundary points and test grids."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def radical_inverse(i, base):
    """Digit-reversed fraction of the integers ``i`` in ``base`` (vectorised).

    Digits are accumulated as an integer numerator over ``base**k`` and
    divided once, so the result is the correctly rounded fraction.
    """
    i = np.asarray(i, dtype=np.int64).copy()
    num = np.zeros(i.shape, dtype=np.int64)
    den = 1
    while np.any(i > 0):
        num = num * base + i % base
        den *= base
        i //= base
    return num / float(den)


def _digits(n, base):
    """Number of base-``base`` digits needed for the indices ``0..n-1``."""
    k, top = 1, base
    while top < n:
        k += 1
        top *= base
    return k


def hammersley(n, d):
    """``n`` Hammersley points in ``[0, 1)^d``: ``(i/n, phi_2(i), phi_3(i), ...)``."""
    if n < 1 or d < 1:
        raise ConfigurationError(f"hammersley needs n >= 1 and d >= 1, got n={n}, d={d}")
    if d - 1 > len(PRIMES):
        raise ConfigurationError(f"hammersley supports at most {len(PRIMES) + 1} dimensions")
    i = np.arange(n)
    pts = np.empty((n, d))
    pts[:, 0] = i / n
    for k in range(1, d):
        pts[:, k] = radical_inverse(i, PRIMES[k - 1])
    return pts


@dataclass
class SampleSet:
    collocation: np.ndarray
    initial: np.ndarray
    boundary: np.ndarray
    seed: int
    sampler: str = "hammersley+uniform"

    @property
    def counts(self):
        return len(self.collocation), len(self.initial), len(self.boundary)

    def __eq__(self, other):
        return (isinstance(other, SampleSet) and self.seed == other.seed and self.sampler == other.sampler
                and all(np.array_equal(a, b) for a, b in
                        zip((self.collocation, self.initial, self.boundary),
                            (other.collocation, other.initial, other.boundary))))

    def to_csv(self, path):
        dim = self.collocation.shape[1]
        names = ["t", "x", "y", "z"][:dim]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["category"] + names)
            for cat, arr in (("collocation", self.collocation), ("initial", self.initial),
                             ("boundary", self.boundary)):
                for row in arr:
                    w.writerow([cat] + [f"{v:.17g}" for v in row])


def map_collocation(raw, problem):
    """Map raw Hammersley points into ``(0, T] x Omega`` (strict interior in space).

    Time is shifted by half a cell, ``t = T (i/n + 1/(2n))``.  Each spatial
    radical inverse is shifted by half of its finest digit cell so that the
    ``phi = 0`` point does not land on the boundary.
    """
    n, d = raw.shape
    out = np.empty_like(raw)
    out[:, 0] = np.minimum(problem.T * (raw[:, 0] + 0.5 / n), problem.T)
    for k in range(1, d):
        base = PRIMES[k - 1]
        shift = 0.5 * float(base) ** (-_digits(n, base))
        lo, hi = problem.bounds[k - 1]
        out[:, k] = lo + (hi - lo) * (raw[:, k] + shift)
    return out


def _open_uniform(rng, lo, hi, size):
    u = rng.uniform(lo, hi, size)
    bad = u <= lo
    while bad.any():
        u[bad] = rng.uniform(lo, hi, bad.sum())
        bad = u <= lo
    return u


def face_counts(n_b, n_faces):
    """Equal split of boundary points over faces; the remainder goes to the first faces."""
    q, r = divmod(n_b, n_faces)
    return [q + (1 if i < r else 0) for i in range(n_faces)]


def build_samples(problem, n_f, n_0, n_b, seed):
    """Collocation (Hammersley), initial and boundary (seeded uniform) point sets."""
    for label, v in (("n_f", n_f), ("n_0", n_0), ("n_b", n_b)):
        if int(v) < 1:
            raise ConfigurationError(f"{label} must be positive, got {v}")
    d = problem.input_dim
    colloc = map_collocation(hammersley(int(n_f), d), problem)
    rng = np.random.default_rng(seed)

    initial = np.zeros((int(n_0), d))
    for k, (lo, hi) in enumerate(problem.bounds):
        initial[:, k + 1] = _open_uniform(rng, lo, hi, int(n_0))

    parts = []
    for (coord, value), count in zip(problem.faces, face_counts(int(n_b), len(problem.faces))):
        pts = np.empty((count, d))
        # t in (0, T]: reflect the half-open [0, T) draw
        pts[:, 0] = problem.T - rng.uniform(0.0, problem.T, count)
        for k, (lo, hi) in enumerate(problem.bounds):
            pts[:, k + 1] = rng.uniform(lo, hi, count)
        pts[:, coord] = value
        parts.append(pts)
    boundary = np.concatenate(parts)
    return SampleSet(colloc, initial, boundary, int(seed))


DEFAULT_GRIDS = {"burgers1d": (100, 256), "burgers2d": (224, 15, 15), "burgers3d": (265, 7, 7, 7)}


def test_grid(problem, shape=None):
    """Tensor-product grid over ``[0, T] x closure(Omega)``, endpoints included.

    ``shape`` is ``(n_t, n_x[, n_y[, n_z]])``; a short shape is padded with
    its last spatial count.  Returns an ``(N, 1 + d)`` array and the shape.
    """
    if shape is None:
        shape = DEFAULT_GRIDS.get(problem.name, (100,) + (32,) * problem.spatial_dim)
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2:
        raise ConfigurationError("grid shape needs a time count and at least one spatial count")
    shape = shape + (shape[-1],) * (problem.input_dim - len(shape))
    if len(shape) != problem.input_dim:
        raise ConfigurationError(f"grid shape {shape} does not match {problem.input_dim} coordinates")
    axes = [np.linspace(0.0, problem.T, shape[0])]
    axes += [np.linspace(lo, hi, s) for (lo, hi), s in zip(problem.bounds, shape[1:])]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), shape
