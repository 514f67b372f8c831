"""Recurrent model: forward semantics, BPTT gradients, training, serialization."""

import numpy as np
import pytest

from contvoc.acoustic_model import (CELL_KINDS, CELL_VANILLA, DirectionWeights,
                                    SequenceModelParams, TrainingBatch,
                                    TrainingDivergedError, forward, gradients,
                                    init_params, load_model, make_toy_dataset,
                                    mse_loss, save_model, train)


def scalar_params(w_xf=1.0, w_hf=0.0, w_xb=1.0, w_hb=0.0, out=1.0):
    mk = lambda v: np.array([[float(v)]])
    return SequenceModelParams(
        cell_kind=CELL_VANILLA, input_dim=1, hidden_dim=1, output_dim=1,
        fwd=DirectionWeights(mk(w_xf), mk(w_hf), np.zeros(1)),
        bwd=DirectionWeights(mk(w_xb), mk(w_hb), np.zeros(1)),
        w_fy=mk(out), w_by=mk(out), b_y=np.zeros(1))


def test_zero_params_zero_output():
    for kind in CELL_KINDS:
        params = init_params(kind, 3, 4, 2, seed=0)
        for _, arr in params.items():
            arr[...] = 0.0
        y, _, _ = forward(params, np.random.default_rng(0).normal(size=(5, 3)))
        assert np.all(y == 0.0)


def test_hand_evaluated_single_step():
    params = scalar_params()
    y, hf, hb = forward(params, np.array([[0.5]]))
    assert hf[0, 0] == pytest.approx(np.tanh(0.5))
    assert hb[0, 0] == pytest.approx(np.tanh(0.5))
    assert y[0, 0] == pytest.approx(2.0 * np.tanh(0.5), abs=1e-12)


def test_reversal_symmetry_exact():
    for kind in CELL_KINDS:
        params = init_params(kind, 3, 5, 2, seed=1)
        x = np.random.default_rng(2).normal(size=(7, 3))
        _, hf, hb = forward(params, x)
        swapped = params.copy()
        swapped.fwd, swapped.bwd = swapped.bwd, swapped.fwd
        _, hf2, _ = forward(swapped, x[::-1])
        assert np.array_equal(hf2, hb[::-1])


def test_vanilla_hidden_states_bounded():
    # strong drive, but below the level where float64 tanh rounds to 1.0
    params = init_params(CELL_VANILLA, 4, 6, 2, seed=3)
    x = 5.0 * np.random.default_rng(3).normal(size=(20, 4))
    _, hf, hb = forward(params, x)
    assert np.all(np.abs(hf) < 1.0)
    assert np.all(np.abs(hb) < 1.0)


def test_forward_rejects_bad_input():
    params = init_params(CELL_VANILLA, 3, 4, 2, seed=0)
    with pytest.raises(ValueError):
        forward(params, np.zeros((0, 3)))
    with pytest.raises(ValueError):
        forward(params, np.zeros((4, 5)))


def test_mse_examples():
    assert mse_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert mse_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == pytest.approx(2.5)


def test_mse_matches_direct_summation_oracle(rng):
    for _ in range(50):
        shape = (int(rng.integers(1, 8)), int(rng.integers(1, 6)))
        y = rng.normal(size=shape)
        t = rng.normal(size=shape)
        oracle = sum((a - b) ** 2 for a, b in zip(y.ravel(), t.ravel())) / y.size
        assert mse_loss(y, t) == pytest.approx(oracle, abs=1e-12)


def test_mse_zero_iff_equal(rng):
    y = rng.normal(size=(4, 3))
    assert mse_loss(y, y.copy()) == 0.0
    t = y.copy()
    t[2, 1] += 1e-9
    assert mse_loss(y, t) > 0.0


def test_mse_shape_mismatch():
    with pytest.raises(ValueError):
        mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))


def test_gradients_zero_at_trivial_stationary_point():
    params = init_params(CELL_VANILLA, 2, 3, 2, seed=0)
    params.fwd.b[...] = 0.0
    params.bwd.b[...] = 0.0
    params.b_y[...] = 0.0
    batch = TrainingBatch(inputs=[np.zeros((4, 2))], targets=[np.zeros((4, 2))])
    grads = gradients(params, batch)
    for _, arr in grads.items():
        assert np.all(arr == 0.0)


def test_output_bias_gradient_closed_form(rng):
    params = init_params(CELL_VANILLA, 3, 4, 2, seed=5)
    xs = [rng.normal(size=(6, 3)), rng.normal(size=(6, 3))]
    ts = [rng.normal(size=(6, 2)), rng.normal(size=(6, 2))]
    batch = TrainingBatch(inputs=xs, targets=ts)
    grads = gradients(params, batch)
    n_total = sum(t.size for t in ts)
    expected = np.zeros(2)
    for x, t in zip(xs, ts):
        y, _, _ = forward(params, x)
        expected += 2.0 * (y - t).sum(axis=0) / n_total
    assert np.allclose(grads.b_y, expected, atol=1e-12)


def relative_fd_error(kind, seed, step=1e-5):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 9))
    h = int(rng.integers(2, 9))
    o = int(rng.integers(1, 9))
    T = int(rng.integers(2, 7))
    params = init_params(kind, d, h, o, seed=seed)
    xs = [rng.standard_normal((T, d))]
    ts = [rng.standard_normal((T, o))]
    batch = TrainingBatch(inputs=xs, targets=ts)
    grads = gradients(params, batch)
    worst = 0.0
    for (_, p), (_, g) in zip(params.items(), grads.items()):
        flat_p, flat_g = p.ravel(), g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            lp = mse_loss([forward(params, x)[0] for x in xs], ts)
            flat_p[i] = orig - step
            lm = mse_loss([forward(params, x)[0] for x in xs], ts)
            flat_p[i] = orig
            fd = (lp - lm) / (2.0 * step)
            rel = abs(flat_g[i] - fd) / max(abs(flat_g[i]), abs(fd), 1e-4)
            worst = max(worst, rel)
    return worst


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_gradient_check_against_finite_differences(kind):
    for seed in range(3):
        assert relative_fd_error(kind, seed) < 1e-4


def test_gradients_diverge_error():
    # finite params whose forward pass overflows to a non-finite residual
    params = init_params(CELL_VANILLA, 2, 3, 1, seed=0)
    params.w_fy[...] = 1e200
    params.fwd.b[...] = 1.0
    batch = TrainingBatch(inputs=[np.ones((2, 2))], targets=[np.full((2, 1), -1e200)])
    with pytest.raises(TrainingDivergedError):
        gradients(params, batch)


def test_train_zero_learning_rate_is_identity():
    data = make_toy_dataset(seed=0)
    params = init_params(CELL_VANILLA, 8, 16, 4, seed=0)
    trained, trace = train(params, data, epochs=5, learning_rate=0.0)
    for (_, a), (_, b) in zip(params.items(), trained.items()):
        assert np.array_equal(a, b)
    assert np.all(trace == trace[0])


def test_train_deterministic_given_seed():
    data = make_toy_dataset(seed=1)
    params = init_params(CELL_VANILLA, 8, 16, 4, seed=99)
    _, trace_a = train(params, data, epochs=30, learning_rate=0.01, seed=7)
    _, trace_b = train(params, data, epochs=30, learning_rate=0.01, seed=7)
    assert np.array_equal(trace_a, trace_b)


def test_train_loss_decreases():
    data = make_toy_dataset(seed=2)
    params = init_params(CELL_VANILLA, 8, 16, 4, seed=2)
    _, trace = train(params, data, epochs=100, learning_rate=0.01)
    assert trace[-1] < trace[0]


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_train_all_cells_smoke(kind):
    data = make_toy_dataset(seed=4)
    params = init_params(kind, 8, 8, 4, seed=4)
    _, trace = train(params, data, epochs=40, learning_rate=0.01)
    assert np.all(np.isfinite(trace))
    assert trace[-1] < trace[0]


def test_empty_dataset_rejected():
    params = init_params(CELL_VANILLA, 2, 2, 1, seed=0)
    with pytest.raises(ValueError):
        train(params, TrainingBatch(), epochs=1, learning_rate=0.1)


@pytest.mark.parametrize("kind", CELL_KINDS)
def test_model_serialization_round_trip(tmp_path, kind):
    params = init_params(kind, 5, 6, 3, seed=13)
    path = tmp_path / "model.txt"
    save_model(params, path)
    back = load_model(path)
    assert back.cell_kind == params.cell_kind
    assert back.seed == params.seed
    for (name_a, a), (name_b, b) in zip(params.items(), back.items()):
        assert name_a == name_b
        assert np.array_equal(a, b)


def test_params_shape_validation():
    with pytest.raises(ValueError):
        SequenceModelParams(
            cell_kind=CELL_VANILLA, input_dim=2, hidden_dim=3, output_dim=1,
            fwd=DirectionWeights(np.zeros((3, 2)), np.zeros((3, 3)), np.zeros(3)),
            bwd=DirectionWeights(np.zeros((3, 2)), np.zeros((3, 3)), np.zeros(3)),
            w_fy=np.zeros((1, 4)),  # wrong width
            w_by=np.zeros((1, 3)), b_y=np.zeros(1))
