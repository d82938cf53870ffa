import numpy as np
import pytest

from mgpinn import _kernels
from mgpinn.autodiff import JetLayout

LAYOUTS = [JetLayout(()), JetLayout((0, 1), (1,)), JetLayout((0, 1, 2), (1, 2)), JetLayout((0, 1, 2, 3), (1, 2, 3))]


@pytest.mark.parametrize("layout", LAYOUTS, ids=lambda l: f"C{l.channels}")
def test_numba_matches_numpy(layout, rng):
    try:
        nb_fwd, nb_bwd = _kernels.numba_kernels()
    except ImportError:
        pytest.skip("numba not installed")
    np_fwd, np_bwd = _kernels.numpy_kernels()
    z = rng.normal(size=(layout.channels, 37, 11))
    g = rng.normal(size=z.shape)
    a = np_fwd(z, layout.pairs)
    np.testing.assert_allclose(nb_fwd(z, layout.pairs), a, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(nb_bwd(z, a, g, layout.pairs), np_bwd(z, a, g, layout.pairs), rtol=1e-13, atol=1e-14)


def test_backward_is_adjoint_of_linearization(rng):
    # <g, dA> = <backward(g), dZ> for a small perturbation direction
    layout = LAYOUTS[2]
    fwd, bwd = _kernels.numpy_kernels()
    z = rng.normal(size=(layout.channels, 5, 4))
    dz = rng.normal(size=z.shape)
    g = rng.normal(size=z.shape)
    h = 1e-6
    dA = (fwd(z + h * dz, layout.pairs) - fwd(z - h * dz, layout.pairs)) / (2 * h)
    lhs = np.sum(g * dA)
    rhs = np.sum(bwd(z, fwd(z, layout.pairs), g, layout.pairs) * dz)
    assert abs(lhs - rhs) <= 1e-7 * max(1.0, abs(lhs))


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("MGPINN_DISABLE_NUMBA", "1")
    backend, fwd, _ = _kernels._select()
    assert backend == "numpy"
    assert fwd is _kernels._numpy_forward
