import numpy as np

from fiberq.nn.checkpoint import (load_checkpoint, restore_model,
                                  restore_optimizer, restore_rng,
                                  save_checkpoint)
from fiberq.nn.layers import Dense, Tanh
from fiberq.nn.model import Sequential
from fiberq.nn.optim import Adam


def make_net(seed=0):
    rng = np.random.default_rng(seed)
    return Sequential([Dense(6, 5, rng), Tanh(), Dense(5, 2, rng)])


def training_step(net, opt, x, y):
    out = net.forward(x)
    grad = 2.0 * (out - y) / out.size
    net.zero_grads()
    net.backward(grad.astype(out.dtype))
    opt.step(net.param_list(), net.grad_list())


def test_checkpoint_resume_equals_uninterrupted_run(tmp_path):
    rng_data = np.random.default_rng(1)
    batches = [(rng_data.normal(size=(8, 6)).astype(np.float32),
                rng_data.normal(size=(8, 2)).astype(np.float32))
               for _ in range(6)]

    # uninterrupted: 6 steps with a shuffle draw per "epoch"
    net_a = make_net()
    opt_a = Adam(1e-2)
    rng_a = np.random.default_rng(7)
    for x, y in batches:
        rng_a.permutation(8)
        training_step(net_a, opt_a, x, y)

    # interrupted after 3 steps, checkpointed, resumed in fresh objects
    net_b = make_net()
    opt_b = Adam(1e-2)
    rng_b = np.random.default_rng(7)
    for x, y in batches[:3]:
        rng_b.permutation(8)
        training_step(net_b, opt_b, x, y)
    path = tmp_path / "ckpt.npz"
    save_checkpoint(path, net_b, opt_b, rng_b, epoch=3,
                    meta={"note": "mid-run"})

    net_c = make_net(seed=99)   # deliberately different init
    opt_c = Adam(1e-2)
    params, record, moments = load_checkpoint(path)
    restore_model(net_c, params)
    restore_optimizer(opt_c, record, moments)
    rng_c = restore_rng(record)
    assert record["epoch"] == 3
    assert record["meta"] == {"note": "mid-run"}
    for x, y in batches[3:]:
        rng_c.permutation(8)
        training_step(net_c, opt_c, x, y)

    for pa, pc in zip(net_a.param_list(), net_c.param_list()):
        assert np.array_equal(pa, pc)


def test_checkpoint_shape_mismatch_detected(tmp_path):
    net = make_net()
    path = tmp_path / "ckpt.npz"
    save_checkpoint(path, net, epoch=0)
    params, record, _ = load_checkpoint(path)
    other = Sequential([Dense(4, 3, np.random.default_rng(0))])
    try:
        restore_model(other, params)
    except ValueError:
        return
    raise AssertionError("mismatched topology was not rejected")
