"""Burgers initial-boundary value problems in 1D, 2D and 3D.

Points are rows ``(t, x[, y[, z]])``.  Jets track every coordinate to first
order and the spatial ones to second order.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, roots_hermite

from .autodiff import JetLayout, MultiJet
from .errors import ConfigurationError, NumericalFault

NU_1D = 0.01 / np.pi
T_MIN_1D = 1e-6
QUAD_NODES = 200
QUAD_TOL = 1e-8


# --- residuals -------------------------------------------------------------

def burgers_residual(jet, nu, forcing=None):
    """``u_t + u * sum(u_xi) - nu * sum(u_xixi) - f`` for coordinates ``1..d``."""
    spatial = [c for c in jet.tracked if c != 0]
    r = jet.d(0) + jet.value * sum(jet.d(c) for c in spatial) - nu * sum(jet.dd(c) for c in spatial)
    if forcing is not None:
        r = r - forcing
    return r


def burgers_residual_partials(jet, nu):
    """Partial derivatives of :func:`burgers_residual` w.r.t. each jet entry."""
    spatial = [c for c in jet.tracked if c != 0]
    n = len(jet)
    d_value = sum(jet.d(c) for c in spatial)
    d_grad = np.empty((n, len(jet.tracked)))
    for j, c in enumerate(jet.tracked):
        d_grad[:, j] = 1.0 if c == 0 else jet.value
    d_hess = np.full((n, len(jet.second)), -nu)
    return d_value, d_grad, d_hess


def residual_1d(jet, nu=NU_1D):
    return burgers_residual(jet, nu)


def residual_2d(jet, re=100.0):
    return burgers_residual(jet, 1.0 / re)


def residual_3d(jet, f, re=1.0):
    return burgers_residual(jet, 1.0 / re, f)


# --- 1D exact solution via Gauss-Hermite quadrature ------------------------

_RULES = {}


def _hermite_rule(n):
    if n not in _RULES:
        s, w = roots_hermite(n)
        with np.errstate(divide="ignore"):
            _RULES[n] = (s, np.log(w))
    return _RULES[n]


def _cole_hopf_sums(t, x, nu, nodes, derivatives=False):
    """Weighted sums of ``H`` and ``sin*H`` (and derivatives) over the rule.

    With ``eta = 2 sqrt(nu t) s`` both integrals become Gauss-Hermite sums.
    Exponents are shifted by their per-point maximum; the common factor
    cancels in every quotient built from these sums.
    """
    s, logw = _hermite_rule(nodes)
    eta = 2.0 * np.sqrt(nu * t)[:, None] * s[None, :]
    y = x[:, None] - eta
    expo = logw[None, :] - np.cos(np.pi * y) / (2.0 * np.pi * nu)
    a = np.exp(expo - expo.max(axis=1, keepdims=True))
    sy = np.sin(np.pi * y)
    D = a.sum(axis=1)
    N = (a * sy).sum(axis=1)
    if not derivatives:
        return N, D
    cy = np.cos(np.pi * y)
    q = sy / (2.0 * nu)
    dq = np.pi * cy / (2.0 * nu)
    # H' = H q, H'' = H (q^2 + q'); (S H)' = H (pi c + S q)
    h1 = q
    h2 = q * q + dq
    f1 = np.pi * cy + sy * q
    f2 = -np.pi ** 2 * sy + 2.0 * np.pi * cy * q + sy * (q * q + dq)
    dy_dt = -eta / (2.0 * t[:, None])
    sums = dict(
        N=N, D=D,
        Nx=(a * f1).sum(axis=1), Dx=(a * h1).sum(axis=1),
        Nxx=(a * f2).sum(axis=1), Dxx=(a * h2).sum(axis=1),
        Nt=(a * f1 * dy_dt).sum(axis=1), Dt=(a * h1 * dy_dt).sum(axis=1),
    )
    return sums


def exact_1d(t, x, nu=NU_1D, nodes=QUAD_NODES, check=True):
    """Cole-Hopf solution of the viscous 1D Burgers problem with ``u(0,x) = -sin(pi x)``.

    For ``t < 1e-6`` the initial profile is returned.  With ``check`` the
    result is recomputed with twice the nodes and a :class:`NumericalFault`
    is raised if the two differ by more than ``1e-8`` (relative to ``max(1, |u|)``).
    """
    t, x = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(x, dtype=np.float64))
    shape = t.shape
    t, x = t.ravel(), x.ravel()
    u = -np.sin(np.pi * x)
    late = t >= T_MIN_1D
    if late.any():
        N, D = _cole_hopf_sums(t[late], x[late], nu, nodes)
        u[late] = -N / D
        if check:
            N2, D2 = _cole_hopf_sums(t[late], x[late], nu, 2 * nodes)
            err = np.abs(-N2 / D2 - u[late]) / np.maximum(1.0, np.abs(u[late]))
            if err.max() > QUAD_TOL:
                k = int(np.argmax(err))
                raise NumericalFault(
                    f"Gauss-Hermite quadrature not converged at t={t[late][k]}, x={x[late][k]}: "
                    f"change {err[k]:.3e} between {nodes} and {2 * nodes} nodes")
    return u.reshape(shape) if shape else float(u[0])


def exact_1d_jets(t, x, nu=NU_1D, nodes=QUAD_NODES):
    """Value, ``u_t``, ``u_x`` and ``u_xx`` of :func:`exact_1d` (analytic quotient derivatives)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t, x = np.broadcast_arrays(t, x)
    if np.any(t < T_MIN_1D):
        raise ValueError("jets of the 1D exact solution need t >= 1e-6")
    s = _cole_hopf_sums(t, x, nu, nodes, derivatives=True)
    N, D = s["N"], s["D"]
    u = -N / D
    ut = -(s["Nt"] * D - N * s["Dt"]) / D ** 2
    ux = -(s["Nx"] * D - N * s["Dx"]) / D ** 2
    uxx = -(s["Nxx"] / D - 2.0 * s["Nx"] * s["Dx"] / D ** 2 - N * s["Dxx"] / D ** 2
            + 2.0 * N * s["Dx"] ** 2 / D ** 3)
    return MultiJet(u, np.stack([ut, ux], axis=1), uxx[:, None], (0, 1), (1,))


# --- logistic-front exact solutions (2D, 3D) -------------------------------

def _front(pts, nu):
    """``u = 1 / (1 + exp((sum(x_i) - t) / (2 nu)))`` and its jets."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    a = 1.0 / (2.0 * nu)
    z = a * (pts[:, 1:].sum(axis=1) - pts[:, 0])
    u = expit(-z)
    g = u * (1.0 - u)
    d = pts.shape[1]
    grad = np.empty((len(u), d))
    grad[:, 0] = a * g
    grad[:, 1:] = (-a * g)[:, None]
    hess = np.repeat((a * a * g * (1.0 - 2.0 * u))[:, None], d - 1, axis=1)
    return MultiJet(u, grad, hess, tuple(range(d)), tuple(range(1, d)))


def exact_2d(t, x, y, re=100.0):
    pts = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (t, x, y))), axis=-1)
    u = _front(pts.reshape(-1, 3), 1.0 / re).value.reshape(pts.shape[:-1])
    return u if u.shape else float(u)


def exact_3d(t, x, y, z, re=1.0):
    pts = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (t, x, y, z))), axis=-1)
    u = _front(pts.reshape(-1, 4), 1.0 / re).value.reshape(pts.shape[:-1])
    return u if u.shape else float(u)


def forcing_3d(t, x, y, z, re=1.0):
    """Source term making the logistic front an exact 3D solution.

    With ``a = 1/(2 nu)`` and ``g = u (1 - u)``:
    ``f = a g - 3 a u g - 3 nu a^2 g (1 - 2u)``.
    """
    nu = 1.0 / re
    u = np.asarray(exact_3d(t, x, y, z, re), dtype=np.float64)
    a = 1.0 / (2.0 * nu)
    g = u * (1.0 - u)
    f = a * g - 3.0 * a * u * g - 3.0 * nu * a * a * g * (1.0 - 2.0 * u)
    return f if f.shape else float(f)


# --- problem definitions ---------------------------------------------------

@dataclass
class ProblemDef:
    name: str
    spatial_dim: int
    T: float
    bounds: tuple
    nu: float
    forced: bool = False
    quad_nodes: int = QUAD_NODES
    layout: JetLayout = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(self.bounds) != self.spatial_dim:
            raise ConfigurationError(f"{self.name}: need {self.spatial_dim} domain intervals")
        if not self.nu > 0:
            raise ConfigurationError(f"{self.name}: viscosity must be positive, got {self.nu}")
        if not self.T > 0:
            raise ConfigurationError(f"{self.name}: final time must be positive, got {self.T}")
        d = self.spatial_dim
        self.layout = JetLayout(tuple(range(d + 1)), tuple(range(1, d + 1)))

    @property
    def input_dim(self):
        return self.spatial_dim + 1

    @property
    def faces(self):
        """``(coordinate, value)`` for each face of the spatial box."""
        return [(i + 1, v) for i, (lo, hi) in enumerate(self.bounds) for v in (lo, hi)]

    def forcing(self, pts):
        if not self.forced:
            return None
        pts = np.atleast_2d(pts)
        a = 1.0 / (2.0 * self.nu)
        u = self.exact(pts)
        g = u * (1.0 - u)
        d = self.spatial_dim
        return a * g - d * a * u * g - d * self.nu * a * a * g * (1.0 - 2.0 * u)

    def residual(self, jet, pts, forcing=None):
        """PDE residual at ``pts``; a precomputed ``forcing`` skips re-evaluating ``f``."""
        if forcing is None:
            forcing = self.forcing(pts)
        return burgers_residual(jet, self.nu, forcing)

    def residual_partials(self, jet, pts):
        return burgers_residual_partials(jet, self.nu)

    def exact(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if self.name == "burgers1d":
            return exact_1d(pts[:, 0], pts[:, 1], self.nu, self.quad_nodes)
        return _front(pts, self.nu).value

    def exact_jets(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if self.name == "burgers1d":
            return exact_1d_jets(pts[:, 0], pts[:, 1], self.nu, self.quad_nodes)
        return _front(pts, self.nu)

    def initial_target(self, pts):
        """``h``: the prescribed ``u(0, x)`` at rows ``(0, x...)``."""
        pts = np.atleast_2d(pts)
        if self.name == "burgers1d":
            return -np.sin(np.pi * pts[:, 1])
        return _front(pts, self.nu).value

    def boundary_target(self, pts):
        """``g``: the prescribed boundary values."""
        pts = np.atleast_2d(pts)
        if self.name == "burgers1d":
            return np.zeros(len(pts))
        return _front(pts, self.nu).value

    def initial_residual(self, u, pts):
        return u - self.initial_target(pts)

    def boundary_residual(self, u, pts):
        return u - self.boundary_target(pts)

    def exact_predictor(self, pts, layout=None):
        """Exact solution as a predictor (analytic jets, or values only)."""
        if layout is None or not layout.tracked:
            v = self.exact(pts)
            return MultiJet(v, np.zeros((len(v), 0)), np.zeros((len(v), 0)))
        return self.exact_jets(pts)


def burgers1d(nu=NU_1D, T=1.0, bounds=((-1.0, 1.0),)):
    return ProblemDef("burgers1d", 1, T, bounds, nu)


def burgers2d(re=100.0, T=1.0, bounds=((0.0, 1.0), (0.0, 1.0))):
    return ProblemDef("burgers2d", 2, T, bounds, 1.0 / re)


def burgers3d(re=1.0, T=1.0, bounds=((0.0, 1.0),) * 3):
    return ProblemDef("burgers3d", 3, T, bounds, 1.0 / re, forced=True)


PROBLEMS = {"burgers1d": burgers1d, "burgers2d": burgers2d, "burgers3d": burgers3d}


def get_problem(name, **overrides):
    """Build a problem by name; accepts ``nu`` or ``re``, ``T`` and ``bounds`` overrides."""
    if name not in PROBLEMS:
        raise ConfigurationError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    nu = overrides.pop("nu", None)
    re = overrides.pop("re", None)
    if nu is not None and re is not None:
        raise ConfigurationError("give either nu or re, not both")
    quad = overrides.pop("quad_nodes", None)
    if name == "burgers1d":
        if re is not None:
            nu = 1.0 / re
        prob = burgers1d(**({"nu": nu} if nu is not None else {}), **overrides)
    else:
        if nu is not None:
            re = 1.0 / nu
        prob = PROBLEMS[name](**({"re": re} if re is not None else {}), **overrides)
    if quad is not None:
        prob = replace(prob, quad_nodes=int(quad))
    return prob
