"""From-scratch GRU stack: forward pass and exact BPTT gradients.

Architecture: linear input layer (4 -> 40), four stacked 40-unit GRU layers
with self-recurrence, linear output layer (40 -> 256 logits).

Gate convention (Cho et al. form):
    z = sigmoid(W_z a + U_z h + b_z)
    r = sigmoid(W_r a + U_r h + b_r)
    hcand = tanh(W_h a + U_h (r * h) + b_h)
    h' = (1 - z) * h + z * hcand

Matrices are stored transposed relative to the math above so that batched
steps are `a @ W`: shapes are (in, out).  The batched forward runs one layer
over the whole sequence before the next (stacked GRUs have no within-step
cross-layer feedback), so the per-timestep Python loop only carries the
recurrent matmuls.
"""

from dataclasses import dataclass, field

import numpy as np

GATE_NAMES = ("z", "r", "h")


@dataclass(frozen=True)
class NetworkDims:
    input_size: int = 4
    hidden_size: int = 40
    num_layers: int = 4
    output_size: int = 256

    def __post_init__(self):
        if min(self.input_size, self.hidden_size, self.num_layers,
               self.output_size) < 1:
            raise ValueError("all dims must be positive")


@dataclass
class LayerWeights:
    """One GRU layer.  w_*: input-to-gate (in, hidden); u_*: recurrent."""

    w_z: np.ndarray
    w_r: np.ndarray
    w_h: np.ndarray
    u_z: np.ndarray
    u_r: np.ndarray
    u_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray


@dataclass
class Weights:
    dims: NetworkDims
    w_in: np.ndarray  # (input, hidden)
    b_in: np.ndarray
    layers: list  # of LayerWeights
    w_out: np.ndarray  # (hidden, output)
    b_out: np.ndarray

    def arrays(self):
        """All parameter arrays in the canonical (checkpoint) order."""
        out = [("w_in", self.w_in), ("b_in", self.b_in)]
        for i, lay in enumerate(self.layers):
            for g in GATE_NAMES:
                out.append((f"l{i}.w_{g}", getattr(lay, f"w_{g}")))
                out.append((f"l{i}.u_{g}", getattr(lay, f"u_{g}")))
                out.append((f"l{i}.b_{g}", getattr(lay, f"b_{g}")))
        out += [("w_out", self.w_out), ("b_out", self.b_out)]
        return out

    def astype(self, dtype):
        return map_arrays(self, lambda a: a.astype(dtype))

    def copy(self):
        return map_arrays(self, np.copy)


def map_arrays(weights, fn):
    """Structure-preserving map over every parameter array."""
    layers = [LayerWeights(**{f: fn(getattr(lay, f)) for f in
                              ("w_z", "w_r", "w_h", "u_z", "u_r", "u_h",
                               "b_z", "b_r", "b_h")})
              for lay in weights.layers]
    return Weights(weights.dims, fn(weights.w_in), fn(weights.b_in), layers,
                   fn(weights.w_out), fn(weights.b_out))


def zeros_like_weights(weights):
    return map_arrays(weights, np.zeros_like)


def init_weights(dims, seed=0, dtype=np.float32):
    """Uniform +-1/sqrt(fan_in) matrices, zero biases."""
    rng = np.random.default_rng(seed)
    h = dims.hidden_size

    def mat(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)

    def vec(n):
        return np.zeros(n, dtype=dtype)

    layers = []
    for _ in range(dims.num_layers):
        layers.append(LayerWeights(
            w_z=mat(h, h), w_r=mat(h, h), w_h=mat(h, h),
            u_z=mat(h, h), u_r=mat(h, h), u_h=mat(h, h),
            b_z=vec(h), b_r=vec(h), b_h=vec(h)))
    return Weights(dims, mat(dims.input_size, h), vec(h), layers,
                   mat(h, dims.output_size), vec(dims.output_size))


def zero_state(dims, batch=1, dtype=np.float32):
    """Fresh all-zero hidden state, shape (num_layers, batch, hidden)."""
    return np.zeros((dims.num_layers, batch, dims.hidden_size), dtype=dtype)


def sigmoid(x):
    # split by sign for stability at large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")


@dataclass
class ForwardTrace:
    """Everything BPTT needs, cached per layer over the whole sequence."""

    inputs: np.ndarray  # (T, B, input)
    v: np.ndarray  # (T, B, H) input-layer output
    z: list = field(default_factory=list)  # per layer (T, B, H)
    r: list = field(default_factory=list)
    hcand: list = field(default_factory=list)
    h: list = field(default_factory=list)  # states AFTER each step
    h0: np.ndarray = None  # (L, B, H) initial state
    logits: np.ndarray = None  # (T, B, output)
    targets: np.ndarray = None  # (T, B) int codes


def forward_step(weights, x, state):
    """Single-step forward: x (input_size,) in [0,1]^n -> (logits, state').

    Thin wrapper over the batched sequence pass; the generation loop uses
    the leaner loop in synthesis.py.
    """
    x = np.asarray(x, dtype=state.dtype)
    trace = forward_sequence(weights, x[None, None, :], state)
    return trace.logits[0, 0], np.stack([hs[0] for hs in trace.h])


def forward_sequence(weights, inputs, state=None, targets=None):
    """Batched teacher-forced forward pass.

    inputs: (T, B, input_size); state: (L, B, H) or None for zeros.
    Returns a ForwardTrace (logits included; loss computed by caller).
    """
    dims = weights.dims
    T, B, _ = inputs.shape
    dtype = weights.w_in.dtype
    if state is None:
        state = zero_state(dims, B, dtype)
    inputs = inputs.astype(dtype, copy=False)
    trace = ForwardTrace(inputs=inputs, v=inputs @ weights.w_in + weights.b_in,
                         h0=state.copy(), targets=targets)
    a = trace.v  # layer input, (T, B, H)
    for li, lay in enumerate(weights.layers):
        # input-to-gate projections for the whole sequence at once
        az = a @ lay.w_z + lay.b_z
        ar = a @ lay.w_r + lay.b_r
        ah = a @ lay.w_h + lay.b_h
        z = np.empty_like(az)
        r = np.empty_like(az)
        hc = np.empty_like(az)
        hs = np.empty_like(az)
        h = state[li]
        for t in range(T):
            zt = sigmoid(az[t] + h @ lay.u_z)
            rt = sigmoid(ar[t] + h @ lay.u_r)
            hct = np.tanh(ah[t] + (rt * h) @ lay.u_h)
            h = (1.0 - zt) * h + zt * hct
            z[t], r[t], hc[t], hs[t] = zt, rt, hct, h
        trace.z.append(z)
        trace.r.append(r)
        trace.hcand.append(hc)
        trace.h.append(hs)
        a = hs
    trace.logits = a @ weights.w_out + weights.b_out
    _check_finite(trace.logits, "logits")
    return trace


def softmax(logits):
    m = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(m)
    return e / e.sum(axis=-1, keepdims=True)


def sequence_loss(trace):
    """Mean softmax cross-entropy over all steps and batch members."""
    logits = trace.logits
    m = logits.max(axis=-1, keepdims=True)
    lse = m[..., 0] + np.log(np.exp(logits - m).sum(axis=-1))
    tgt = np.take_along_axis(logits, trace.targets[..., None], axis=-1)[..., 0]
    return float(np.mean(lse - tgt))


def run_sequence(weights, seq, state=None):
    """Teacher-forced pass over one ConditionedSequence -> (trace, loss)."""
    trace = forward_sequence(weights, seq.inputs[:, None, :], state,
                             targets=seq.targets[:, None].astype(np.int64))
    return trace, sequence_loss(trace)


def backward(weights, trace):
    """Exact gradient of the mean sequence loss w.r.t. every parameter.

    Full-horizon BPTT; layers processed top-down, each over the whole
    sequence in reverse time, passing input grads down as the lower layer's
    per-step state grads.
    """
    dims = weights.dims
    T, B, _ = trace.inputs.shape
    grads = zeros_like_weights(weights)

    dlogits = softmax(trace.logits)
    np.put_along_axis(
        dlogits, trace.targets[..., None], np.take_along_axis(
            dlogits, trace.targets[..., None], axis=-1) - 1.0, axis=-1)
    dlogits /= T * B

    h_top = trace.h[-1]
    flat = h_top.reshape(T * B, -1)
    grads.w_out += flat.T @ dlogits.reshape(T * B, -1)
    grads.b_out += dlogits.sum(axis=(0, 1))

    # d_h[t]: grad w.r.t. layer output h_t from above (output layer or the
    # next layer's input gates), before adding the within-layer recurrence.
    d_h = dlogits @ weights.w_out.T  # (T, B, H)
    for li in range(dims.num_layers - 1, -1, -1):
        lay = weights.layers[li]
        glay = grads.layers[li]
        z, r, hc, hs = trace.z[li], trace.r[li], trace.hcand[li], trace.h[li]
        a = trace.v if li == 0 else trace.h[li - 1]
        daz = np.empty_like(z)
        dar = np.empty_like(z)
        dah = np.empty_like(z)
        dh_rec = np.zeros((B, dims.hidden_size), dtype=z.dtype)
        for t in range(T - 1, -1, -1):
            dh = d_h[t] + dh_rec
            h_prev = hs[t - 1] if t > 0 else trace.h0[li]
            zt, rt, hct = z[t], r[t], hc[t]
            dz = dh * (hct - h_prev)
            dhc = dh * zt
            dh_prev = dh * (1.0 - zt)
            da_h = dhc * (1.0 - hct * hct)
            dq = da_h @ lay.u_h.T  # q = r * h_prev
            dr = dq * h_prev
            dh_prev = dh_prev + dq * rt
            da_z = dz * zt * (1.0 - zt)
            da_r = dr * rt * (1.0 - rt)
            dh_prev = dh_prev + da_z @ lay.u_z.T + da_r @ lay.u_r.T
            glay.u_z += h_prev.T @ da_z
            glay.u_r += h_prev.T @ da_r
            glay.u_h += (rt * h_prev).T @ da_h
            daz[t], dar[t], dah[t] = da_z, da_r, da_h
            dh_rec = dh_prev
        a_flat = a.reshape(T * B, -1)
        glay.w_z += a_flat.T @ daz.reshape(T * B, -1)
        glay.w_r += a_flat.T @ dar.reshape(T * B, -1)
        glay.w_h += a_flat.T @ dah.reshape(T * B, -1)
        glay.b_z += daz.sum(axis=(0, 1))
        glay.b_r += dar.sum(axis=(0, 1))
        glay.b_h += dah.sum(axis=(0, 1))
        # grad w.r.t. this layer's input stream
        d_h = daz @ lay.w_z.T + dar @ lay.w_r.T + dah @ lay.w_h.T

    # d_h is now grad w.r.t. v = inputs @ w_in + b_in
    x_flat = trace.inputs.reshape(T * B, -1)
    grads.w_in += x_flat.T @ d_h.reshape(T * B, -1)
    grads.b_in += d_h.sum(axis=(0, 1))
    return grads
