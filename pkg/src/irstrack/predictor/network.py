"""Dual real/imaginary LSTM network with exact backpropagation through time.

Each sub-network maps a length-``L_I`` sequence of ``D_I``-dimensional
inputs to ``tau1 * L_P`` outputs:

1. input layer ``x_h = ReLU(W_e x + b_e)`` widening to ``H = eps * D_I``;
2. ``K`` stacked LSTM layers; layer ``k`` reads layer ``k-1``'s output at the
   same step, recurrent state starts at zero;
3. linear head over the concatenated last-layer outputs of all steps.

Gate weights of a layer are stored stacked in the order (forget, input,
output, cell): ``Wx`` is ``(4H, H)``, ``Wy`` is ``(4H, H)`` and ``b`` is ``(4H,)``.
The R sub-network reads the real parts of the inputs, the I sub-network the
imaginary parts; their outputs form the real and imaginary parts of the
prediction.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NetworkParams",
    "init_params",
    "sigmoid",
    "lstm_cell_forward",
    "subnet_forward",
    "subnet_backward",
    "forward",
    "predict_raw",
    "loss",
    "loss_and_grads",
    "adam_step",
]

COMPONENTS = ("R", "I")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class NetworkParams:
    """Weights of both sub-networks plus Adam moment accumulators.

    ``weights["R"]`` and ``weights["I"]`` map parameter names to arrays;
    ``adam_m``/``adam_v`` mirror that layout.
    """

    d_in: int
    hidden: int
    n_layers: int
    input_len: int
    pred_len: int
    tau1: int
    weights: dict
    adam_m: dict = field(default_factory=dict)
    adam_v: dict = field(default_factory=dict)
    step: int = 0

    @property
    def out_dim(self):
        return self.tau1 * self.pred_len

    def names(self):
        names = ["We", "be"]
        for k in range(self.n_layers):
            names += [f"Wx{k}", f"Wy{k}", f"b{k}"]
        return names + ["Wp", "bp"]

    def reset_optimizer(self):
        self.adam_m = {c: {n: np.zeros_like(w) for n, w in self.weights[c].items()} for c in COMPONENTS}
        self.adam_v = {c: {n: np.zeros_like(w) for n, w in self.weights[c].items()} for c in COMPONENTS}
        self.step = 0

    def copy(self):
        def dup(d):
            return {c: {n: w.copy() for n, w in d[c].items()} for c in d}

        return NetworkParams(
            self.d_in, self.hidden, self.n_layers, self.input_len, self.pred_len, self.tau1,
            dup(self.weights), dup(self.adam_m), dup(self.adam_v), self.step,
        )


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _init_subnet(d_in, hidden, n_layers, input_len, out_dim, rng):
    w = {"We": _uniform(rng, (hidden, d_in), d_in), "be": _uniform(rng, (hidden,), d_in)}
    for k in range(n_layers):
        w[f"Wx{k}"] = _uniform(rng, (4 * hidden, hidden), hidden)
        w[f"Wy{k}"] = _uniform(rng, (4 * hidden, hidden), hidden)
        b = np.zeros(4 * hidden)
        b[:hidden] = 1.0  # forget-gate bias
        w[f"b{k}"] = b
    fan = hidden * input_len
    w["Wp"] = _uniform(rng, (out_dim, fan), fan)
    w["bp"] = np.zeros(out_dim)
    return w


def init_params(tau1, n_elements, expansion, n_layers, input_len, pred_len, rng):
    """Randomly initialized network for ``D_I = tau1 * (N + 1)`` inputs."""
    d_in = tau1 * (n_elements + 1)
    hidden = int(round(expansion * d_in))
    if hidden < 1 or n_layers < 1 or input_len < 1 or pred_len < 1:
        raise ValueError("expansion, n_layers, input_len and pred_len must be positive")
    weights = {c: _init_subnet(d_in, hidden, n_layers, input_len, tau1 * pred_len, rng) for c in COMPONENTS}
    params = NetworkParams(d_in, hidden, n_layers, input_len, pred_len, tau1, weights)
    params.reset_optimizer()
    return params


def lstm_cell_forward(x, y_prev, c_prev, wx, wy, b):
    """One LSTM unit.

    Returns the output ``y``, the cell state ``c`` and a cache holding the
    gate activations ``(f, i, o, g)`` and ``tanh(c)``.
    """
    hidden = wy.shape[1]
    z = x @ wx.T + y_prev @ wy.T + b
    f = sigmoid(z[..., :hidden])
    i = sigmoid(z[..., hidden:2 * hidden])
    o = sigmoid(z[..., 2 * hidden:3 * hidden])
    g = np.tanh(z[..., 3 * hidden:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    y = o * tc
    return y, c, (f, i, o, g, tc)


def subnet_forward(w, x, n_layers):
    """Forward one sub-network on real inputs ``x`` of shape ``(B, L, D)``."""
    batch, steps, _ = x.shape
    pre = x @ w["We"].T + w["be"]
    layer_in = np.maximum(pre, 0.0)
    layers = []
    for k in range(n_layers):
        wx, wy, b = w[f"Wx{k}"], w[f"Wy{k}"], w[f"b{k}"]
        hidden = wy.shape[1]
        xz = layer_in @ wx.T + b
        ys = np.empty((batch, steps, hidden))
        cs = np.empty((batch, steps, hidden))
        acts = np.empty((batch, steps, 5, hidden))
        y = np.zeros((batch, hidden))
        c = np.zeros((batch, hidden))
        for t in range(steps):
            z = xz[:, t] + y @ wy.T
            f = sigmoid(z[:, :hidden])
            i = sigmoid(z[:, hidden:2 * hidden])
            o = sigmoid(z[:, 2 * hidden:3 * hidden])
            g = np.tanh(z[:, 3 * hidden:])
            c = f * c + i * g
            tc = np.tanh(c)
            y = o * tc
            ys[:, t], cs[:, t] = y, c
            acts[:, t, 0], acts[:, t, 1], acts[:, t, 2], acts[:, t, 3], acts[:, t, 4] = f, i, o, g, tc
        layers.append((layer_in, ys, cs, acts))
        layer_in = ys
    flat = layer_in.reshape(batch, -1)
    out = flat @ w["Wp"].T + w["bp"]
    return out, (x, pre, layers, flat)


def subnet_backward(w, cache, dout, n_layers):
    """Gradients of a scalar loss w.r.t. every weight, given ``dloss/dout``."""
    x, pre, layers, flat = cache
    batch, steps, _ = x.shape
    grads = {"Wp": dout.T @ flat, "bp": dout.sum(axis=0)}
    d_below = (dout @ w["Wp"]).reshape(batch, steps, -1)
    for k in reversed(range(n_layers)):
        layer_in, ys, cs, acts = layers[k]
        wx, wy = w[f"Wx{k}"], w[f"Wy{k}"]
        hidden = wy.shape[1]
        dz_all = np.empty((batch, steps, 4 * hidden))
        dwy = np.zeros_like(wy)
        dy_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        for t in reversed(range(steps)):
            f, i, o, g, tc = (acts[:, t, j] for j in range(5))
            dy = d_below[:, t] + dy_next
            c_prev = cs[:, t - 1] if t > 0 else 0.0
            dc = dc_next + dy * o * (1.0 - tc * tc)
            dz = dz_all[:, t]
            dz[:, :hidden] = dc * c_prev * f * (1.0 - f)
            dz[:, hidden:2 * hidden] = dc * g * i * (1.0 - i)
            dz[:, 2 * hidden:3 * hidden] = dy * tc * o * (1.0 - o)
            dz[:, 3 * hidden:] = dc * i * (1.0 - g * g)
            dc_next = dc * f
            if t > 0:
                dwy += dz.T @ ys[:, t - 1]
            dy_next = dz @ wy
        flat_dz = dz_all.reshape(-1, 4 * hidden)
        grads[f"Wx{k}"] = flat_dz.T @ layer_in.reshape(-1, layer_in.shape[-1])
        grads[f"Wy{k}"] = dwy
        grads[f"b{k}"] = flat_dz.sum(axis=0)
        d_below = dz_all @ wx
    dpre = d_below * (pre > 0)
    flat_dpre = dpre.reshape(-1, dpre.shape[-1])
    grads["We"] = flat_dpre.T @ x.reshape(-1, x.shape[-1])
    grads["be"] = flat_dpre.sum(axis=0)
    return grads


def _component_input(x, component):
    x = np.asarray(x)
    if component == "R":
        return np.ascontiguousarray(np.real(x), dtype=float)
    if component == "I":
        return np.ascontiguousarray(np.imag(x), dtype=float)
    raise ValueError(f"component must be 'R' or 'I', got {component!r}")


def _check_input(params, x):
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (params.input_len, params.d_in):
        raise ValueError(
            f"input must have shape (batch, {params.input_len}, {params.d_in}), got {np.shape(x)}"
        )
    return x


def forward(params, x, component):
    """Raw output of one sub-network, shape ``(batch, tau1 * L_P)``.

    ``x`` is the normalized complex input ``(batch, L_I, D_I)`` (a single
    sequence ``(L_I, D_I)`` is also accepted); the R sub-network reads its
    real part and the I sub-network its imaginary part.
    """
    x = _check_input(params, x)
    xc = _component_input(x, component)
    out, _ = subnet_forward(params.weights[component], xc, params.n_layers)
    return out


def predict_raw(params, x):
    """Complex network prediction ``(batch, L_P, tau1)`` in network units."""
    x = _check_input(params, x)
    out = forward(params, x, "R") + 1j * forward(params, x, "I")
    return out.reshape(x.shape[0], params.pred_len, params.tau1)


def loss(predictions, labels):
    """Mean over samples of the summed squared modulus of the prediction error.

    Both arguments are complex arrays whose leading axis indexes samples.
    """
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.shape != lab.shape:
        raise ValueError(f"shape mismatch: predictions {pred.shape}, labels {lab.shape}")
    err = (pred - lab).reshape(pred.shape[0], -1)
    return float(np.sum(np.abs(err) ** 2) / pred.shape[0])


def loss_and_grads(params, x, labels):
    """Loss of :func:`predict_raw` against ``labels`` and its gradients.

    Returns ``(loss, grads)`` with ``grads["R"]`` and ``grads["I"]`` shaped
    like ``params.weights``.
    """
    x = _check_input(params, x)
    labels = np.asarray(labels).reshape(x.shape[0], -1)
    batch = x.shape[0]
    total = 0.0
    grads = {}
    for comp, target in (("R", labels.real), ("I", labels.imag)):
        w = params.weights[comp]
        out, cache = subnet_forward(w, _component_input(x, comp), params.n_layers)
        err = out - target
        total += float(np.sum(err * err))
        grads[comp] = subnet_backward(w, cache, 2.0 * err / batch, params.n_layers)
    return total / batch, grads


def adam_step(params, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update applied in place; returns ``params``."""
    params.step += 1
    t = params.step
    corr1 = 1.0 - beta1 ** t
    corr2 = 1.0 - beta2 ** t
    for comp in COMPONENTS:
        for name, g in grads[comp].items():
            m = params.adam_m[comp][name]
            v = params.adam_v[comp][name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            params.weights[comp][name] -= lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
    return params
