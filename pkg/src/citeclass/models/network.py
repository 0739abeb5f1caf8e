"""From-scratch numpy classifiers: multi-width text CNN, stacked LSTM, stacked RNN.

Forward and backward passes are hand-written so gradients can be audited
against finite differences. All arrays are float64; every source of
randomness is an explicit ``numpy.random.Generator``.

The CNN reading of an ``L/F/C`` architecture is L parallel convolution
branches (one per width in C), F filters each, ReLU, global max-pool over
valid positions, concatenation, dropout, and a softmax head. The LSTM and
RNN read the token sequence left to right and classify from the final
hidden state.
"""

from __future__ import annotations

import math

import numpy as np

from ..balance import LossConfig
from .losses import loss_and_grad
from .vocab import PAD_ID

Params = dict[str, np.ndarray]


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _dropout(x: np.ndarray, rate: float, train: bool, rng: np.random.Generator | None):
    if not train or rate <= 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout in training mode needs an RNG")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def _embed_grad(dE: np.ndarray, ids: np.ndarray, dX: np.ndarray) -> None:
    np.add.at(dE, ids.reshape(-1), dX.reshape(-1, dX.shape[-1]))
    dE[PAD_ID] = 0.0  # pad row is frozen at zero


class TextCNN:
    """Parallel convolution branches over the embedded token sequence."""

    def __init__(self, vocab_size: int, num_classes: int, embedding_dim: int,
                 filters: int, conv_widths: tuple[int, ...], max_seq_len: int, dropout: float):
        if max_seq_len < max(conv_widths):
            raise ValueError(
                f"max_seq_len {max_seq_len} is shorter than the widest convolution {max(conv_widths)}"
            )
        self.vocab_size = vocab_size
        self.num_classes = num_classes
        self.dim = embedding_dim
        self.filters = filters
        self.widths = tuple(conv_widths)
        self.max_seq_len = max_seq_len
        self.dropout = dropout

    def init_params(self, rng: np.random.Generator) -> Params:
        d, f = self.dim, self.filters
        params: Params = {"embed": rng.normal(0.0, 0.1, size=(self.vocab_size, d))}
        params["embed"][PAD_ID] = 0.0
        for w in self.widths:
            fan_in = w * d
            params[f"conv{w}_w"] = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(f, fan_in))
            params[f"conv{w}_b"] = np.zeros(f)
        feat = len(self.widths) * f
        limit = math.sqrt(6.0 / (feat + self.num_classes))
        params["dense_w"] = rng.uniform(-limit, limit, size=(feat, self.num_classes))
        params["dense_b"] = np.zeros(self.num_classes)
        return params

    def forward(self, params: Params, ids: np.ndarray | None, lengths: np.ndarray,
                embedded: np.ndarray | None = None, train: bool = False,
                rng: np.random.Generator | None = None):
        if embedded is None:
            x = params["embed"][ids]  # [B,T,d]
        else:
            x = embedded
        b, t, d = x.shape
        pooled_parts = []
        branch_caches = []
        for w in self.widths:
            tw = t - w + 1
            win = np.concatenate([x[:, o : o + tw, :] for o in range(w)], axis=2)  # [B,Tw,w*d]
            z = win @ params[f"conv{w}_w"].T + params[f"conv{w}_b"]
            a = np.maximum(z, 0.0)
            # only windows that start inside the real tokens take part in the pool
            valid = np.maximum(lengths - w + 1, 1)
            pos_ok = np.arange(tw)[None, :] < valid[:, None]
            masked = np.where(pos_ok[:, :, None], a, -np.inf)
            arg = masked.argmax(axis=1)  # [B,F]
            pooled = np.take_along_axis(masked, arg[:, None, :], axis=1)[:, 0, :]
            pooled_parts.append(pooled)
            branch_caches.append((win, z, arg, tw, w))
        feat = np.concatenate(pooled_parts, axis=1)
        dropped, mask = _dropout(feat, self.dropout, train, rng)
        logits = dropped @ params["dense_w"] + params["dense_b"]
        cache = {"x_shape": x.shape, "ids": ids, "branches": branch_caches,
                 "dropped": dropped, "drop_mask": mask, "embedded_input": embedded is not None}
        return logits, cache

    def backward(self, params: Params, cache: dict, dlogits: np.ndarray) -> Params:
        grads: Params = {}
        dropped = cache["dropped"]
        grads["dense_w"] = dropped.T @ dlogits
        grads["dense_b"] = dlogits.sum(axis=0)
        dfeat = dlogits @ params["dense_w"].T
        if cache["drop_mask"] is not None:
            dfeat = dfeat * cache["drop_mask"]

        b, t, d = cache["x_shape"]
        dx = np.zeros((b, t, d))
        f = self.filters
        for i, (win, z, arg, tw, w) in enumerate(cache["branches"]):
            dpool = dfeat[:, i * f : (i + 1) * f]  # [B,F]
            da = np.zeros((b, tw, f))
            np.put_along_axis(da, arg[:, None, :], dpool[:, None, :], axis=1)
            dz = da * (z > 0.0)
            grads[f"conv{w}_w"] = np.einsum("btf,btk->fk", dz, win)
            grads[f"conv{w}_b"] = dz.sum(axis=(0, 1))
            dwin = dz @ params[f"conv{w}_w"]  # [B,Tw,w*d]
            for o in range(w):
                dx[:, o : o + tw, :] += dwin[:, :, o * d : (o + 1) * d]

        if not cache["embedded_input"]:
            grads["embed"] = np.zeros_like(params["embed"])
            _embed_grad(grads["embed"], cache["ids"], dx)
        return grads


class _Recurrent:
    """Shared machinery for the stacked LSTM and RNN classifiers."""

    cell: str = ""

    def __init__(self, vocab_size: int, num_classes: int, embedding_dim: int,
                 units: int, layers: int, dropout: float):
        self.vocab_size = vocab_size
        self.num_classes = num_classes
        self.dim = embedding_dim
        self.units = units
        self.layers = layers
        self.dropout = dropout

    def _gate_mult(self) -> int:
        return 4 if self.cell == "lstm" else 1

    def init_params(self, rng: np.random.Generator) -> Params:
        h, g = self.units, self._gate_mult()
        params: Params = {"embed": rng.normal(0.0, 0.1, size=(self.vocab_size, self.dim))}
        params["embed"][PAD_ID] = 0.0
        scale = 1.0 / math.sqrt(h)
        for layer in range(self.layers):
            in_dim = self.dim if layer == 0 else h
            params[f"l{layer}_wx"] = rng.uniform(-scale, scale, size=(in_dim, g * h))
            params[f"l{layer}_wh"] = rng.uniform(-scale, scale, size=(h, g * h))
            bias = np.zeros(g * h)
            if self.cell == "lstm":
                bias[h : 2 * h] = 1.0  # forget-gate bias
            params[f"l{layer}_b"] = bias
        limit = math.sqrt(6.0 / (h + self.num_classes))
        params["dense_w"] = rng.uniform(-limit, limit, size=(h, self.num_classes))
        params["dense_b"] = np.zeros(self.num_classes)
        return params

    def forward(self, params: Params, ids: np.ndarray | None, lengths: np.ndarray,
                embedded: np.ndarray | None = None, train: bool = False,
                rng: np.random.Generator | None = None):
        x = params["embed"][ids] if embedded is None else embedded
        b, t, _ = x.shape
        h_units = self.units
        layer_caches = []
        inp = x
        for layer in range(self.layers):
            wx, wh, bias = params[f"l{layer}_wx"], params[f"l{layer}_wh"], params[f"l{layer}_b"]
            h = np.zeros((b, h_units))
            c = np.zeros((b, h_units))
            outputs = np.zeros((b, t, h_units))
            steps = []
            for step in range(t):
                z = inp[:, step] @ wx + h @ wh + bias
                if self.cell == "lstm":
                    i_g = sigmoid(z[:, :h_units])
                    f_g = sigmoid(z[:, h_units : 2 * h_units])
                    g_g = np.tanh(z[:, 2 * h_units : 3 * h_units])
                    o_g = sigmoid(z[:, 3 * h_units :])
                    c_new = f_g * c + i_g * g_g
                    tc = np.tanh(c_new)
                    h_new = o_g * tc
                    steps.append((i_g, f_g, g_g, o_g, c, tc, h))
                    c = c_new
                else:
                    h_new = np.tanh(z)
                    steps.append((h_new, h))
                h = h_new
                outputs[:, step] = h
            layer_caches.append({"input": inp, "steps": steps})
            inp = outputs
        rows = np.arange(b)
        final = inp[rows, lengths - 1]  # state at the last real token
        dropped, mask = _dropout(final, self.dropout, train, rng)
        logits = dropped @ params["dense_w"] + params["dense_b"]
        cache = {"ids": ids, "layers": layer_caches, "lengths": lengths,
                 "dropped": dropped, "drop_mask": mask,
                 "x_shape": x.shape, "embedded_input": embedded is not None}
        return logits, cache

    def backward(self, params: Params, cache: dict, dlogits: np.ndarray) -> Params:
        grads: Params = {}
        dropped = cache["dropped"]
        grads["dense_w"] = dropped.T @ dlogits
        grads["dense_b"] = dlogits.sum(axis=0)
        dfinal = dlogits @ params["dense_w"].T
        if cache["drop_mask"] is not None:
            dfinal = dfinal * cache["drop_mask"]

        b, t, _ = cache["x_shape"]
        h_units = self.units
        lengths = cache["lengths"]
        rows = np.arange(b)
        d_out = np.zeros((b, t, h_units))
        d_out[rows, lengths - 1] = dfinal

        for layer in reversed(range(self.layers)):
            lc = cache["layers"][layer]
            wx, wh = params[f"l{layer}_wx"], params[f"l{layer}_wh"]
            d_wx = np.zeros_like(wx)
            d_wh = np.zeros_like(wh)
            d_b = np.zeros_like(params[f"l{layer}_b"])
            d_inp = np.zeros_like(lc["input"])
            dh_next = np.zeros((b, h_units))
            dc_next = np.zeros((b, h_units))
            for step in reversed(range(t)):
                dh = d_out[:, step] + dh_next
                if self.cell == "lstm":
                    i_g, f_g, g_g, o_g, c_prev, tc, h_prev = lc["steps"][step]
                    do = dh * tc
                    dc = dc_next + dh * o_g * (1.0 - tc * tc)
                    di = dc * g_g
                    dg = dc * i_g
                    df = dc * c_prev
                    dz = np.concatenate(
                        [
                            di * i_g * (1.0 - i_g),
                            df * f_g * (1.0 - f_g),
                            dg * (1.0 - g_g * g_g),
                            do * o_g * (1.0 - o_g),
                        ],
                        axis=1,
                    )
                    dc_next = dc * f_g
                else:
                    h_new, h_prev = lc["steps"][step]
                    dz = dh * (1.0 - h_new * h_new)
                x_t = lc["input"][:, step]
                d_wx += x_t.T @ dz
                d_wh += h_prev.T @ dz
                d_b += dz.sum(axis=0)
                d_inp[:, step] = dz @ wx.T
                dh_next = dz @ wh.T
            grads[f"l{layer}_wx"] = d_wx
            grads[f"l{layer}_wh"] = d_wh
            grads[f"l{layer}_b"] = d_b
            d_out = d_inp  # becomes the output-gradient of the layer below

        if not cache["embedded_input"]:
            grads["embed"] = np.zeros_like(params["embed"])
            _embed_grad(grads["embed"], cache["ids"], d_out)
        return grads


class LSTMNet(_Recurrent):
    cell = "lstm"


class RNNNet(_Recurrent):
    cell = "rnn"


def parameter_count(params: Params) -> int:
    return int(sum(p.size for p in params.values()))


class Adam:
    """Plain Adam; parameters are visited in sorted-key order for determinism."""

    def __init__(self, params: Params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for key in sorted(params):
            g = grads.get(key)
            if g is None:
                continue
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[key] / correction1
            v_hat = self.v[key] / correction2
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def finite_difference_check(
    network,
    params: Params,
    ids: np.ndarray,
    lengths: np.ndarray,
    labels: np.ndarray,
    loss_cfg: LossConfig,
    sample_fraction: float = 0.01,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples roughly ``sample_fraction`` of all parameter positions (at
    least two per tensor). The frozen embedding pad row is excluded. Runs
    with dropout off so the loss is a deterministic function of the
    parameters.
    """

    def loss_value() -> float:
        logits, _ = network.forward(params, ids, lengths, train=False)
        value, _ = loss_and_grad(logits, labels, loss_cfg)
        return value

    logits, cache = network.forward(params, ids, lengths, train=False)
    _, dlogits = loss_and_grad(logits, labels, loss_cfg)
    analytic = network.backward(params, cache, dlogits)

    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for key in sorted(params):
        tensor = params[key]
        n_positions = tensor.size
        n_sample = max(2, int(math.ceil(sample_fraction * n_positions)))
        flat_choices = rng.choice(n_positions, size=min(n_sample, n_positions), replace=False)
        for flat in flat_choices:
            index = np.unravel_index(flat, tensor.shape)
            if key == "embed" and index[0] == PAD_ID:
                continue
            original = tensor[index]
            tensor[index] = original + step
            up = loss_value()
            tensor[index] = original - step
            down = loss_value()
            tensor[index] = original
            numeric = (up - down) / (2.0 * step)
            exact = analytic[key][index] if key in analytic else 0.0
            scale = abs(exact) + abs(numeric)
            if scale < 1e-10:
                continue
            worst = max(worst, abs(exact - numeric) / scale)
    return worst
