import numpy as np
import pytest

from src.numcore import ops
from src.numcore.checkpoint import checkpoint_io, load_checkpoint, read_checkpoint, save_checkpoint
from src.numcore.gradcheck import check_gradients, numerical_gradient
from src.numcore.layers import LSTM, MLP, Linear, mean_pool, pairwise_distance
from src.numcore.optim import AdamW, adamw_update
from src.numcore.params import ParameterStore, evaluate_and_grad
from src.numcore.tensor import Tensor, no_grad
from src.utils.errors import (
    CorruptionError,
    FormatError,
    InvalidInputError,
    InvalidParameterError,
    NotFoundError,
    NumericError,
    ShapeError,
)


@pytest.fixture
def store(rng):
    store = ParameterStore()
    store.add("a", rng.normal(size=(3, 4)))
    store.add("b", rng.normal(size=(4, 2)))
    store.add("c", rng.normal(size=(1, 2)))
    return store


def test_elementwise_and_matmul_gradients(store):
    a, b, c = store["a"], store["b"], store["c"]

    def loss():
        h = ops.tanh(a @ b + c)
        return ops.sum_(ops.sigmoid(h) * h) + ops.mean(ops.softmax(h) * 3.0)
    assert check_gradients(loss, store).ok()


def test_reduction_and_gather_gradients(store):
    a = store["a"]

    def loss():
        picked = ops.pick(ops.softmax(a), [0, 1, 2], [3, 0, 1])
        rows = ops.concat([a[0:1], a[2:3]], axis=0)
        return -ops.sum_(ops.log(picked)) + ops.sum_(ops.reshape(ops.mean(rows, axis=1), (1, 2)))
    assert check_gradients(loss, store).ok()


def test_embedding_and_distance_gradients(store):
    a, b = store["a"], store["b"]

    def loss():
        x = ops.embedding(a, [0, 2, 2, 1])
        y = ops.embedding(b.T, [1, 0])
        return pairwise_distance(x, y) + ops.sqdist(a[0:1], a[1:2])
    assert check_gradients(loss, store).ok()


def test_linear_mlp_lstm_gradients(rng):
    store = ParameterStore()
    linear = Linear(store, "lin", 3, 4, rng)
    mlp = MLP(store, "mlp", [4, 5, 2], rng)
    lstm = LSTM(store, "lstm", 2, 3, rng)
    xs = Tensor(rng.normal(size=(5, 3)))

    def loss():
        hidden = lstm.run(mlp(ops.tanh(linear(xs))))
        return ops.sum_(hidden * hidden)
    report = check_gradients(loss, store)
    assert report.ok(1e-3), report.worst
    assert report.checked == store.num_parameters


def test_lstm_shapes_and_forget_bias(rng):
    store = ParameterStore()
    lstm = LSTM(store, "l", 4, 6, rng)
    out = lstm.run(Tensor(rng.normal(size=(7, 4))))
    assert out.shape == (7, 6)
    assert np.all(store["l.b"].data[6:12] == 1.0)
    with pytest.raises(ShapeError):
        lstm.run(Tensor(np.zeros((3, 5))))


def test_broadcast_rules():
    with pytest.raises(ShapeError):
        ops.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))
    with pytest.raises(ShapeError):
        ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_numeric_guards():
    with pytest.raises(NumericError):
        ops.log(Tensor(np.array([0.0, 1.0])))
    with pytest.raises(NumericError):
        Tensor(np.array([np.inf]))
    assert ops.log(Tensor(np.array([0.0])), floor=1e-12).item() == pytest.approx(np.log(1e-12))


def test_softmax_is_shift_invariant(rng):
    x = rng.normal(size=(2, 5))
    a = ops.softmax(Tensor(x)).data
    b = ops.softmax(Tensor(x + 1000.0)).data
    assert np.allclose(a, b)
    assert np.allclose(a.sum(axis=1), 1.0)


def test_no_grad_builds_no_graph(store):
    with no_grad():
        out = store["a"] @ store["b"]
    assert not out.requires_grad


def test_ndarray_times_tensor_defers(store):
    out = np.ones((3, 4)) * store["a"]
    assert isinstance(out, Tensor)


def test_numerical_gradient_of_square():
    x = Tensor(np.array([[1.0, -2.0]]), requires_grad=True)
    grad = numerical_gradient(lambda: ops.sum_(x * x), x)
    assert np.allclose(grad, [[2.0, -4.0]], atol=1e-6)


def test_store_registration(rng):
    store = ParameterStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(InvalidParameterError):
        store.add("w", np.zeros((2, 2)))
    with pytest.raises(NotFoundError):
        store["missing"]
    other = ParameterStore()
    other.add("v", np.ones(3))
    joint = ParameterStore.union(store, other)
    assert joint.names() == ["w", "v"]
    assert joint["v"] is other["v"]
    with pytest.raises(InvalidParameterError):
        ParameterStore.union(store, store)


def test_adamw_first_step():
    store = ParameterStore()
    w = store.add("w", np.array([1.0, -1.0]))
    w.grad = np.array([0.5, -2.0])
    adamw_update(store, lr=0.1, weight_decay=0.0)
    # bias-corrected first step moves each coordinate by lr against its gradient sign
    assert np.allclose(w.data, [0.9, -0.9], atol=1e-6)
    assert w.grad is None
    with pytest.raises(InvalidParameterError):
        adamw_update(store, lr=0.0)


def test_adamw_decoupled_decay():
    store = ParameterStore()
    w = store.add("w", np.array([2.0]))
    AdamW(lr=0.1, weight_decay=0.5).step(store)
    assert w.data[0] == pytest.approx(2.0 * (1 - 0.05))


def test_adamw_minimizes_quadratic(rng):
    store = ParameterStore()
    w = store.add("w", rng.normal(size=(1, 3)))
    target = np.array([[1.0, -2.0, 0.5]])
    optimizer = AdamW(lr=0.05, weight_decay=0.0)
    for _ in range(800):
        evaluate_and_grad(lambda: ops.sqdist(w, target), store)
        optimizer.step(store)
    assert np.allclose(w.data, target, atol=2e-2)


def test_checkpoint_roundtrip(store, tmp_path):
    path = save_checkpoint(store, tmp_path / "m.ckpt")
    clone = ParameterStore()
    for name, tensor in store.items():
        clone.add(name, np.zeros(tensor.shape))
    load_checkpoint(clone, path)
    for name, tensor in store.items():
        assert np.array_equal(clone[name].data, tensor.data)
    assert checkpoint_io(clone, tmp_path / "again.ckpt", "save")
    assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()
    with pytest.raises(InvalidInputError):
        checkpoint_io(clone, path, "sideways")


def test_checkpoint_shape_mismatch_names_parameter(store, tmp_path):
    path = save_checkpoint(store, tmp_path / "m.ckpt")
    other = ParameterStore()
    other.add("a", np.zeros((3, 4)))
    other.add("b", np.zeros((4, 3)))
    other.add("c", np.zeros((1, 2)))
    with pytest.raises(ShapeError, match="'b'"):
        load_checkpoint(other, path)
    assert np.all(other["a"].data == 0.0)


def test_checkpoint_corruption_loads_nothing(store, tmp_path):
    path = save_checkpoint(store, tmp_path / "m.ckpt")
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    target = ParameterStore()
    for name, tensor in store.items():
        target.add(name, np.zeros(tensor.shape))
    with pytest.raises(CorruptionError):
        load_checkpoint(target, path)
    assert all(np.all(t.data == 0.0) for _, t in target.items())
    path.write_bytes(bytes(raw[:10]))
    with pytest.raises(CorruptionError):
        read_checkpoint(path)


def test_checkpoint_version_mismatch(store, tmp_path):
    import json
    import struct

    path = save_checkpoint(store, tmp_path / "m.ckpt")
    raw = path.read_bytes()
    (length,) = struct.unpack_from("<I", raw, 0)
    header = json.loads(raw[4:4 + length])
    header["format_version"] = 99
    encoded = json.dumps(header).encode()
    path.write_bytes(struct.pack("<I", len(encoded)) + encoded + raw[4 + length:])
    with pytest.raises(FormatError):
        read_checkpoint(path)


def test_empty_store_refused(tmp_path):
    with pytest.raises(InvalidInputError):
        save_checkpoint(ParameterStore(), tmp_path / "empty.ckpt")


def test_mean_pool_and_distance():
    a = Tensor(np.array([[0.0, 0.0], [2.0, 0.0]]))
    b = Tensor(np.array([[1.0, 3.0]]))
    assert mean_pool(a).data.tolist() == [[1.0, 0.0]]
    assert pairwise_distance(a, b).item() == pytest.approx(3.0)
    with pytest.raises(ShapeError):
        pairwise_distance(a, Tensor(np.zeros((1, 3))))
