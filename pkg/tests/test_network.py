import numpy as np
import pytest

from condsynth.corpus import ConditionedSequence
from condsynth.network import (NetworkDims, backward, forward_sequence,
                               forward_step, init_weights, run_sequence,
                               sequence_loss, zero_state, zeros_like_weights)


def tiny_dims(layers=2, hidden=5, out=12):
    return NetworkDims(4, hidden, layers, out)


def random_case(dims, T=8, seed=0, dtype=np.float64):
    rng = np.random.default_rng(seed)
    w = init_weights(dims, seed=seed + 1, dtype=dtype)
    inputs = rng.uniform(0, 1, (T, 1, dims.input_size))
    targets = rng.integers(0, dims.output_size, (T, 1))
    return w, inputs, targets


def test_init_weights_bounds_and_determinism():
    dims = NetworkDims()
    a = init_weights(dims, seed=5)
    b = init_weights(dims, seed=5)
    c = init_weights(dims, seed=6)
    for (na, xa), (_, xb), (_, xc) in zip(a.arrays(), b.arrays(), c.arrays()):
        assert np.array_equal(xa, xb)
        fan_in = xa.shape[0] if xa.ndim == 2 else None
        if xa.ndim == 2:
            assert np.all(np.abs(xa) <= 1 / np.sqrt(fan_in))
        else:
            assert np.all(xa == 0)
    assert any(not np.array_equal(xa, xc)
               for (_, xa), (_, xc) in zip(a.arrays(), c.arrays()))


def test_forward_shapes_default_network():
    dims = NetworkDims()
    w = init_weights(dims, seed=0)
    logits, state = forward_step(w, np.array([0.5, 0.0, 1.0, 0.0]),
                                 zero_state(dims))
    assert logits.shape == (256,)
    assert state.shape == (4, 1, 40)


def test_zero_weights_zero_logits():
    dims = tiny_dims()
    w = init_weights(dims, seed=0, dtype=np.float64)
    zero = zeros_like_weights(w)
    logits, _ = forward_step(zero, np.array([0.3, 0.1, 0.2, 0.9]),
                             zero_state(dims, dtype=np.float64))
    assert np.all(logits == 0.0)


def test_single_cell_hand_computed_reference():
    # one layer, 2 units, hand-set weights; reference computed step by step
    # with the scalar gate formulas, independent of the array code paths
    dims = NetworkDims(input_size=2, hidden_size=2, num_layers=1, output_size=3)
    w = init_weights(dims, seed=0, dtype=np.float64)
    w.w_in[:] = [[0.1, -0.2], [0.3, 0.4]]
    w.b_in[:] = [0.05, -0.05]
    lay = w.layers[0]
    lay.w_z[:] = [[0.2, 0.1], [-0.1, 0.3]]
    lay.w_r[:] = [[0.0, 0.5], [0.4, -0.2]]
    lay.w_h[:] = [[0.3, -0.3], [0.2, 0.1]]
    lay.u_z[:] = [[0.1, 0.0], [0.0, 0.1]]
    lay.u_r[:] = [[0.2, -0.1], [0.1, 0.2]]
    lay.u_h[:] = [[-0.2, 0.3], [0.3, -0.1]]
    lay.b_z[:] = [0.01, -0.02]
    lay.b_r[:] = [0.03, 0.04]
    lay.b_h[:] = [-0.01, 0.02]
    w.w_out[:] = [[1.0, -1.0, 0.5], [0.5, 0.25, -0.75]]
    w.b_out[:] = [0.1, 0.0, -0.1]

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    x = np.array([0.6, 0.4])
    h = np.array([0.2, -0.3])
    # input layer: v_i = sum_j x_j * w_in[j, i] + b_in[i]
    v = np.array([x[0] * 0.1 + x[1] * 0.3 + 0.05,
                  x[0] * -0.2 + x[1] * 0.4 - 0.05])
    z = np.array([sig(v[0] * 0.2 + v[1] * -0.1 + h[0] * 0.1 + 0.01),
                  sig(v[0] * 0.1 + v[1] * 0.3 + h[1] * 0.1 - 0.02)])
    r = np.array([sig(v[0] * 0.0 + v[1] * 0.4 + h[0] * 0.2 + h[1] * 0.1 + 0.03),
                  sig(v[0] * 0.5 + v[1] * -0.2 + h[0] * -0.1 + h[1] * 0.2 + 0.04)])
    q = r * h
    hc = np.array([np.tanh(v[0] * 0.3 + v[1] * 0.2 + q[0] * -0.2 + q[1] * 0.3 - 0.01),
                   np.tanh(v[0] * -0.3 + v[1] * 0.1 + q[0] * 0.3 + q[1] * -0.1 + 0.02)])
    h_new = (1 - z) * h + z * hc
    logits_ref = np.array([h_new[0] * 1.0 + h_new[1] * 0.5 + 0.1,
                           h_new[0] * -1.0 + h_new[1] * 0.25 + 0.0,
                           h_new[0] * 0.5 + h_new[1] * -0.75 - 0.1])

    state = zero_state(dims, dtype=np.float64)
    state[0, 0] = h
    logits, state_new = forward_step(w, x, state)
    assert np.allclose(logits, logits_ref, atol=1e-12)
    assert np.allclose(state_new[0, 0], h_new, atol=1e-12)


def test_gate_ranges_and_state_bound():
    dims = tiny_dims()
    w, inputs, targets = random_case(dims, T=32)
    trace = forward_sequence(w, inputs, targets=targets)
    for li in range(dims.num_layers):
        assert np.all((trace.z[li] > 0) & (trace.z[li] < 1))
        assert np.all((trace.r[li] > 0) & (trace.r[li] < 1))
        assert np.all(np.abs(trace.hcand[li]) < 1)
        assert np.all(np.abs(trace.h[li]) <= 1)


def test_uniform_loss_at_zero_weights():
    dims = tiny_dims(out=256)
    w = zeros_like_weights(init_weights(dims, seed=0, dtype=np.float64))
    seq = ConditionedSequence(np.full((256, 4), 0.5),
                              np.zeros(256, dtype=np.int64))
    trace, loss = run_sequence(w, seq)
    assert loss == pytest.approx(np.log(256), abs=1e-9)


def test_determinism_bitwise():
    dims = tiny_dims()
    w, inputs, targets = random_case(dims, T=16)
    t1 = forward_sequence(w, inputs, targets=targets)
    t2 = forward_sequence(w, inputs, targets=targets)
    assert np.array_equal(t1.logits, t2.logits)


def test_output_bias_gradient_analytic():
    dims = tiny_dims()
    w, inputs, targets = random_case(dims, T=8)
    trace = forward_sequence(w, inputs, targets=targets)
    grads = backward(w, trace)
    logits = trace.logits
    p = np.exp(logits - logits.max(-1, keepdims=True))
    p /= p.sum(-1, keepdims=True)
    onehot = np.zeros_like(p)
    np.put_along_axis(onehot, trace.targets[..., None], 1.0, axis=-1)
    expected = (p - onehot).mean(axis=(0, 1))
    assert np.allclose(grads.b_out, expected, atol=1e-12)


def grad_check(dims, T, seed, eps=1e-5, tol=1e-4):
    w, inputs, targets = random_case(dims, T=T, seed=seed)
    trace = forward_sequence(w, inputs, targets=targets)
    grads = backward(w, trace)
    worst = 0.0
    for (name, arr), (_, garr) in zip(w.arrays(), grads.arrays()):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            lp = sequence_loss(forward_sequence(w, inputs, targets=targets))
            arr[idx] = orig - eps
            lm = sequence_loss(forward_sequence(w, inputs, targets=targets))
            arr[idx] = orig
            fd = (lp - lm) / (2 * eps)
            # 1e-6 floor guards against finite-difference roundoff on
            # near-zero gradients (FD noise is ~1e-10 absolute)
            rel = abs(fd - garr[idx]) / max(abs(fd), abs(garr[idx]), 1e-6)
            worst = max(worst, rel)
    assert worst < tol, f"worst relative gradient error {worst}"
    return worst


def test_gradient_check_small_network():
    grad_check(NetworkDims(4, 5, 2, 12), T=8, seed=0)


def test_batch_gradient_is_mean_of_sequence_gradients():
    dims = tiny_dims()
    rng = np.random.default_rng(1)
    w = init_weights(dims, seed=2, dtype=np.float64)
    inputs = rng.uniform(0, 1, (8, 3, 4))
    targets = rng.integers(0, dims.output_size, (8, 3))
    batch_grads = backward(w, forward_sequence(w, inputs, targets=targets))
    summed = zeros_like_weights(w)
    for b in range(3):
        g = backward(w, forward_sequence(
            w, inputs[:, b:b + 1], targets=targets[:, b:b + 1]))
        for (_, s), (_, gi) in zip(summed.arrays(), g.arrays()):
            s += gi / 3
    for (_, bg), (_, sg) in zip(batch_grads.arrays(), summed.arrays()):
        assert np.allclose(bg, sg, rtol=1e-10, atol=1e-14)


def test_nonfinite_input_fails_fast():
    dims = tiny_dims()
    w = init_weights(dims, seed=0, dtype=np.float64)
    w.w_out[0, 0] = np.inf
    with pytest.raises(FloatingPointError):
        forward_step(w, np.array([0.5, 0.5, 0.5, 0.5]),
                     zero_state(dims, dtype=np.float64))
