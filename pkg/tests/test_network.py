import numpy as np
import pytest

from mgpinn.autodiff import VALUE, TrainableView, forward_jets, loss_gradient, network_layers, run_chain
from mgpinn.errors import ConfigurationError
from mgpinn.network import NetworkSpec, ParamStore, forward, init_params, load_network, save_network

from conftest import random_store


def test_spec_shapes():
    spec = NetworkSpec([2, 128, 128, 128, 128, 128, 128, 1])
    assert spec.depth == 7
    assert spec.n_params == 2 * 128 + 128 + 5 * (128 * 128 + 128) + 128 + 1
    assert spec.layer_shape(0) == (128, 2)


@pytest.mark.parametrize("widths", [[3], [2, 0, 1], [2, -1]])
def test_spec_rejects_bad_widths(widths):
    with pytest.raises(ConfigurationError):
        NetworkSpec(widths)


def test_zero_output_layer_is_zero_function(rng):
    spec = NetworkSpec([2, 20, 20, 1])
    store = init_params(spec, 11)
    assert not forward(spec, store, rng.uniform(-5, 5, (100, 2))).any()


def test_init_is_deterministic_and_glorot_bounded():
    spec = NetworkSpec([3, 40, 30, 1])
    a, b = init_params(spec, 5, output_layer_zero=False), init_params(spec, 5, output_layer_zero=False)
    assert a == b
    assert init_params(spec, 6) != a
    for i in range(spec.depth):
        out_w, in_w = spec.layer_shape(i)
        assert np.all(np.abs(a.W(i)) <= np.sqrt(6.0 / (in_w + out_w)))
        assert not a.b(i).any()


def test_smallest_net_by_hand():
    spec = NetworkSpec([1, 1, 1])
    store = ParamStore(spec, [1.0, 0.0, 2.0, 0.5])
    assert forward(spec, store, np.array([0.0])) == 0.5


def test_forward_bit_matches_jet_values(rng):
    for seed in range(10):
        d = 1 + seed % 4
        spec, store = random_store([d, 17, 9, 1], seed)
        x = rng.uniform(-1, 1, (int(rng.integers(1, 200)), d))
        assert np.array_equal(forward(spec, store, x), forward_jets(spec, store, x, tuple(range(d))).value)


def test_forward_dimension_mismatch():
    spec, store = random_store([2, 3, 1], 0)
    with pytest.raises(ConfigurationError):
        forward(spec, store, np.zeros(3))


def test_freeze_bumps_version_and_partitions_slots():
    spec = NetworkSpec([2, 4, 4, 1])
    store = ParamStore(spec)
    store.freeze(0)
    assert store.version == 1
    assert store.trainable_layers() == [1, 2]
    assert store.n_trainable == spec.n_params - (2 * 4 + 4)
    store.unfreeze()
    assert store.version == 2 and store.n_trainable == spec.n_params


def test_refreeze_restores_identical_gradient(rng):
    spec, store = random_store([2, 6, 6, 1], 3)
    x = rng.uniform(size=(8, 2))

    def grad():
        layers = network_layers(store)
        out, tape = run_chain(layers, VALUE.seed(x), VALUE, record=True)
        return loss_gradient(TrainableView(layers), [(tape, 2 * out / out.size)])

    before = grad()
    store.freeze(1)
    store.unfreeze(1)
    assert np.array_equal(grad(), before)


def test_checkpoint_roundtrip(tmp_path):
    spec, store = random_store([3, 5, 2, 1], 8)
    store.freeze(0)
    save_network(tmp_path / "n.mgpn", store)
    back = load_network(tmp_path / "n.mgpn")
    assert back == store
    raw = (tmp_path / "n.mgpn").read_bytes()
    assert raw[:4] == b"MGPN" and len(raw) == 4 + 8 + 4 * 4 + 3 + 16 + 8 * spec.n_params


def test_checkpoint_rejects_garbage():
    with pytest.raises(ConfigurationError):
        ParamStore.from_bytes(b"XXXX" + bytes(40))
