"""Dense -> LSTM -> head networks with hand-derived backpropagation through time.

Gate layout inside the LSTM weight matrices is ``[input | forget | output | cell]``.
Sequences are time-major: ``(T, B, features)``, always started from a zero
hidden/cell state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

HEADS = ("softmax", "linear")


@dataclass(frozen=True)
class NetSpec:
    n_in: int
    n_hidden: int = 128
    n_dense: int = 64
    n_out: int = 2
    head: str = "softmax"

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if min(self.n_in, self.n_hidden, self.n_dense, self.n_out) < 1:
            raise ValueError(f"all widths must be positive: {self}")

    def shapes(self) -> dict[str, tuple[int, ...]]:
        h = self.n_hidden
        return {
            "dense.W": (self.n_in, self.n_dense),
            "dense.b": (self.n_dense,),
            "lstm.Wx": (self.n_dense, 4 * h),
            "lstm.Wh": (h, 4 * h),
            "lstm.b": (4 * h,),
            "head.W": (h, self.n_out),
            "head.b": (self.n_out,),
        }

    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes().values())

    def to_dict(self) -> dict:
        return asdict(self)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _flat(a):
    return a.reshape(-1, a.shape[-1])


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _orthogonal(rng, rows, cols):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


def init_params(spec: NetSpec, rng: np.random.Generator, head_scale: float = 1.0) -> dict[str, np.ndarray]:
    """Glorot-uniform dense weights, orthogonal recurrent blocks, zero biases."""
    h = spec.n_hidden
    return {
        "dense.W": _glorot(rng, spec.n_in, spec.n_dense),
        "dense.b": np.zeros(spec.n_dense),
        "lstm.Wx": _glorot(rng, spec.n_dense, 4 * h),
        "lstm.Wh": np.concatenate([_orthogonal(rng, h, h) for _ in range(4)], axis=1),
        "lstm.b": np.zeros(4 * h),
        "head.W": head_scale * _glorot(rng, h, spec.n_out),
        "head.b": np.zeros(spec.n_out),
    }


class RecurrentNet:
    """Parameter container plus forward/backward passes."""

    def __init__(self, spec: NetSpec, params: dict[str, np.ndarray]):
        shapes = spec.shapes()
        if set(params) != set(shapes):
            raise ValueError(f"parameter names {sorted(params)} do not match {sorted(shapes)}")
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {params[name].shape}")
        self.spec = spec
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    @classmethod
    def create(cls, spec: NetSpec, rng: np.random.Generator, head_scale: float = 1.0) -> RecurrentNet:
        return cls(spec, init_params(spec, rng, head_scale))

    @classmethod
    def zeros(cls, spec: NetSpec) -> RecurrentNet:
        return cls(spec, {k: np.zeros(s) for k, s in spec.shapes().items()})

    def copy(self) -> RecurrentNet:
        return RecurrentNet(self.spec, {k: v.copy() for k, v in self.params.items()})

    def initial_state(self, batch: int):
        h = self.spec.n_hidden
        return np.zeros((batch, h)), np.zeros((batch, h))

    def _check_input(self, x):
        if x.shape[-1] != self.spec.n_in:
            raise ValueError(f"input width {x.shape[-1]} != expected {self.spec.n_in}")

    def _head(self, hs):
        p = self.params
        logits = hs @ p["head.W"] + p["head.b"]
        return softmax(logits) if self.spec.head == "softmax" else logits

    def step(self, x, state):
        """One time step for a batch ``x`` of shape ``(B, n_in)``."""
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        p, H = self.params, self.spec.n_hidden
        h, c = state
        z1 = np.tanh(x @ p["dense.W"] + p["dense.b"])
        gates = (z1 @ p["lstm.Wx"] + p["lstm.b"]) + h @ p["lstm.Wh"]
        ig = _sigmoid(gates[:, :H])
        fg = _sigmoid(gates[:, H : 2 * H])
        og = _sigmoid(gates[:, 2 * H : 3 * H])
        cg = np.tanh(gates[:, 3 * H :])
        c = fg * c + ig * cg
        h = og * np.tanh(c)
        return self._head(h), (h, c)

    def forward(self, xs):
        """Full-sequence forward; returns ``(outputs (T, B, n_out), cache)``."""
        xs = np.asarray(xs, dtype=np.float64)
        self._check_input(xs)
        p, H = self.params, self.spec.n_hidden
        T, B = xs.shape[:2]
        z1 = np.tanh(xs @ p["dense.W"] + p["dense.b"])
        gx = z1 @ p["lstm.Wx"] + p["lstm.b"]
        acts = np.empty((T, B, 4 * H))
        cs = np.empty((T, B, H))
        tcs = np.empty((T, B, H))
        hs = np.empty((T, B, H))
        h, c = self.initial_state(B)
        Wh = p["lstm.Wh"]
        for t in range(T):
            gates = gx[t] + h @ Wh
            a = acts[t]
            a[:, : 3 * H] = _sigmoid(gates[:, : 3 * H])
            a[:, 3 * H :] = np.tanh(gates[:, 3 * H :])
            c = a[:, H : 2 * H] * c + a[:, :H] * a[:, 3 * H :]
            cs[t] = c
            tcs[t] = np.tanh(c)
            h = a[:, 2 * H : 3 * H] * tcs[t]
            hs[t] = h
        out = self._head(hs)
        cache = {"xs": xs, "z1": z1, "acts": acts, "cs": cs, "tcs": tcs, "hs": hs, "out": out}
        return out, cache

    def backward(self, dout, cache) -> dict[str, np.ndarray]:
        """Gradients of ``sum(dout * outputs)`` w.r.t. every parameter.

        For a softmax head ``dout`` is the gradient w.r.t. the probabilities.
        """
        p, H = self.params, self.spec.n_hidden
        xs, z1, acts, cs, tcs, hs = (cache[k] for k in ("xs", "z1", "acts", "cs", "tcs", "hs"))
        T, B = xs.shape[:2]
        dout = np.asarray(dout, dtype=np.float64)
        if self.spec.head == "softmax":
            prob = cache["out"]
            dlogits = prob * (dout - (prob * dout).sum(axis=-1, keepdims=True))
        else:
            dlogits = dout
        grads = {
            "head.W": _flat(hs).T @ _flat(dlogits),
            "head.b": dlogits.sum(axis=(0, 1)),
        }
        dhs = dlogits @ p["head.W"].T
        Wh = p["lstm.Wh"]
        dgates = np.empty((T, B, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        dWh = np.zeros_like(Wh)
        for t in range(T - 1, -1, -1):
            a = acts[t]
            ig, fg, og, cg = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
            c_prev = cs[t - 1] if t > 0 else np.zeros((B, H))
            dh = dhs[t] + dh_next
            dc = dc_next + dh * og * (1.0 - tcs[t] ** 2)
            dg = dgates[t]
            dg[:, :H] = dc * cg * ig * (1.0 - ig)
            dg[:, H : 2 * H] = dc * c_prev * fg * (1.0 - fg)
            dg[:, 2 * H : 3 * H] = dh * tcs[t] * og * (1.0 - og)
            dg[:, 3 * H :] = dc * ig * (1.0 - cg**2)
            dc_next = dc * fg
            if t > 0:
                dWh += hs[t - 1].T @ dg
            dh_next = dg @ Wh.T
        grads["lstm.Wh"] = dWh
        grads["lstm.Wx"] = _flat(z1).T @ _flat(dgates)
        grads["lstm.b"] = dgates.sum(axis=(0, 1))
        da1 = (dgates @ p["lstm.Wx"].T) * (1.0 - z1**2)
        grads["dense.W"] = _flat(xs).T @ _flat(da1)
        grads["dense.b"] = da1.sum(axis=(0, 1))
        return grads


def backward_through_time(net: RecurrentNet, xs, dout) -> dict[str, np.ndarray]:
    _, cache = net.forward(xs)
    if np.shape(dout) != cache["out"].shape:
        raise ValueError(f"output gradient shape {np.shape(dout)} != {cache['out'].shape}")
    return net.backward(dout, cache)
