"""Multipartite message-passing network with hand-written gradients.

Architecture (all trainable functions are MLPs, tanh hidden activations,
linear last layer):

    encode    h_v = f_in[W_k](symlog(features)),  h_c = f_in[V](symlog(features))
    layer l   m_e   = f_l[W_k]([h_c[i], h_v[j], w_e])      for edge e = (i, j) in group k
              h_c'  = g_l[V]([h_c, sum_k sum_{e at c} m_e])
              h_v'  = g_l[W_k]([h_v, sum_{e at v} m_e])
    readout   p = sigmoid(a . h_v + b) on group W_0

``symlog(z) = sign(z) * log1p(|z|)`` tames raw feature magnitudes (dual
bounds are in the hundreds). With ``shared_message=False`` the
constraint-to-variable pass gets its own message MLP ``f_l[W_k].c2v``.

Initialization: weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
biases zero, drawn from PCG64(seed) in parameter-name order.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from netinterdict.encoding import CON_BASE_FEATURES, VAR_BASE_FEATURES, MmilpGraph

CLAMP = 1e-7
CHECKPOINT_VERSION = 1

Params = "OrderedDict[str, np.ndarray]"


@dataclass(frozen=True)
class GnnConfig:
    n_var_groups: int = 2
    layers: int = 2
    dim: int = 64
    hidden: Tuple[int, ...] = (64,)
    random_dim: int = 0
    activation: str = "tanh"
    shared_message: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.dim < 1 or self.n_var_groups < 1:
            raise ValueError("dim and n_var_groups must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be >= 1")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.random_dim < 0:
            raise ValueError("random_dim must be >= 0")

    @property
    def var_dim(self) -> int:
        return VAR_BASE_FEATURES + self.random_dim

    @property
    def con_dim(self) -> int:
        return CON_BASE_FEATURES + self.random_dim

    def mlp_shapes(self) -> "OrderedDict[str, List[int]]":
        """Layer widths of every MLP, keyed by parameter-name prefix."""
        d, h = self.dim, list(self.hidden)
        shapes = OrderedDict()
        for k in range(self.n_var_groups):
            shapes[f"in.W{k}"] = [self.var_dim] + h + [d]
        shapes["in.V"] = [self.con_dim] + h + [d]
        for l in range(1, self.layers + 1):
            for k in range(self.n_var_groups):
                shapes[f"l{l}.f.W{k}"] = [2 * d + 1] + h + [d]
                if not self.shared_message:
                    shapes[f"l{l}.f.W{k}.c2v"] = [2 * d + 1] + h + [d]
            shapes[f"l{l}.g.V"] = [2 * d] + h + [d]
            for k in range(self.n_var_groups):
                shapes[f"l{l}.g.W{k}"] = [2 * d] + h + [d]
        shapes["out"] = [d, 1]
        return shapes

    def n_params(self) -> int:
        return sum(
            a * b + b for widths in self.mlp_shapes().values() for a, b in zip(widths, widths[1:])
        )


@dataclass
class GnnModel:
    config: GnnConfig
    params: "OrderedDict[str, np.ndarray]"
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_t: int = 0
    meta: dict = field(default_factory=dict)

    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "GnnModel":
        return GnnModel(
            self.config,
            OrderedDict((k, v.copy()) for k, v in self.params.items()),
            {k: v.copy() for k, v in self.adam_m.items()},
            {k: v.copy() for k, v in self.adam_v.items()},
            self.adam_t,
            dict(self.meta),
        )


def init_model(cfg: GnnConfig) -> GnnModel:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    params = OrderedDict()
    for prefix, widths in cfg.mlp_shapes().items():
        for i, (a, b) in enumerate(zip(widths, widths[1:])):
            lim = math.sqrt(6.0 / (a + b))
            params[f"{prefix}.{i}.W"] = rng.uniform(-lim, lim, size=(a, b))
            params[f"{prefix}.{i}.b"] = np.zeros(b)
    return GnnModel(cfg, params)


# ---------------------------------------------------------------------------
# building blocks


def symlog(z):
    return np.sign(z) * np.log1p(np.abs(z))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _mlp_fwd(params, prefix: str, depth: int, x):
    caches = []
    h = x
    for i in range(depth):
        W = params[f"{prefix}.{i}.W"]
        z = h @ W + params[f"{prefix}.{i}.b"]
        if i < depth - 1:
            a = np.tanh(z)
            caches.append((h, a))
            h = a
        else:
            caches.append((h, None))
            h = z
    return h, caches


def _mlp_bwd(params, prefix: str, caches, dy, grads):
    d = dy
    for i in reversed(range(len(caches))):
        h, a = caches[i]
        if a is not None:
            d = d * (1.0 - a * a)
        grads[f"{prefix}.{i}.W"] += h.T @ d
        grads[f"{prefix}.{i}.b"] += d.sum(axis=0)
        d = d @ params[f"{prefix}.{i}.W"].T
    return d


def _scatter(values, index, n):
    out = np.zeros((n, values.shape[1]))
    np.add.at(out, index, values)
    return out


def _check_graph(cfg: GnnConfig, g: MmilpGraph):
    if g.n_groups > cfg.n_var_groups:
        raise ValueError(f"graph has {g.n_groups} variable groups, model supports {cfg.n_var_groups}")
    if g.var_dim != cfg.var_dim or g.con_dim != cfg.con_dim:
        raise ValueError(
            f"feature dims ({g.var_dim}, {g.con_dim}) do not match config ({cfg.var_dim}, {cfg.con_dim})"
        )


def _forward(model: GnnModel, g: MmilpGraph):
    cfg = model.config
    _check_graph(cfg, g)
    P = model.params
    depth = {k: len(w) - 1 for k, w in cfg.mlp_shapes().items()}
    K = g.n_groups
    m = g.n_constraints
    tape = {"enc": [], "layers": []}

    hv = []
    for k in range(K):
        y, c = _mlp_fwd(P, f"in.W{k}", depth[f"in.W{k}"], symlog(g.var_feats[k]))
        hv.append(y)
        tape["enc"].append(c)
    hc, c = _mlp_fwd(P, "in.V", depth["in.V"], symlog(g.con_feats))
    tape["encV"] = c

    for l in range(1, cfg.layers + 1):
        rec = {"hv": hv, "hc": hc, "msg": [], "msg_c2v": []}
        agg_c = np.zeros((m, cfg.dim))
        agg_v = []
        for k in range(K):
            ec, ev, w = g.edge_con[k], g.edge_var[k], g.edge_w[k]
            inp = np.hstack([hc[ec], hv[k][ev], w[:, None]])
            name = f"l{l}.f.W{k}"
            msg, cm = _mlp_fwd(P, name, depth[name], inp)
            rec["msg"].append(cm)
            agg_c += _scatter(msg, ec, m)
            if not cfg.shared_message:
                msg, cm2 = _mlp_fwd(P, name + ".c2v", depth[name + ".c2v"], inp)
                rec["msg_c2v"].append(cm2)
            agg_v.append(_scatter(msg, ev, hv[k].shape[0]))
        name = f"l{l}.g.V"
        new_hc, rec["gV"] = _mlp_fwd(P, name, depth[name], np.hstack([hc, agg_c]))
        new_hv, rec["gW"] = [], []
        for k in range(K):
            name = f"l{l}.g.W{k}"
            y, cg = _mlp_fwd(P, name, depth[name], np.hstack([hv[k], agg_v[k]]))
            new_hv.append(y)
            rec["gW"].append(cg)
        tape["layers"].append(rec)
        hv, hc = new_hv, new_hc

    z, cout = _mlp_fwd(P, "out", 1, hv[0])
    tape["out"] = cout
    prob = _sigmoid(z[:, 0])
    return prob, tape


def forward(model: GnnModel, g: MmilpGraph) -> np.ndarray:
    """Interdiction probability for every W_0 vertex, in MILP column order."""
    return _forward(model, g)[0]


def loss(pred, label) -> float:
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    pred = np.asarray(pred, dtype=float)
    label = np.asarray(label, dtype=float)
    if pred.shape != label.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {label.shape}")
    p = np.clip(pred, CLAMP, 1.0 - CLAMP)
    return float(-np.mean(label * np.log(p) + (1.0 - label) * np.log(1.0 - p)))


def backward(model: GnnModel, g: MmilpGraph, label) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and its exact gradient with respect to every parameter."""
    cfg = model.config
    P = model.params
    label = np.asarray(label, dtype=float)
    prob, tape = _forward(model, g)
    value = loss(prob, label)
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    depth = {k: len(w) - 1 for k, w in cfg.mlp_shapes().items()}
    K = g.n_groups
    m = g.n_constraints

    n = prob.shape[0]
    p = np.clip(prob, CLAMP, 1.0 - CLAMP)
    live = (prob > CLAMP) & (prob < 1.0 - CLAMP)
    dp = np.where(live, -(label / p - (1.0 - label) / (1.0 - p)) / n, 0.0)
    dz = (dp * prob * (1.0 - prob))[:, None]
    dhv = [None] * K
    dhv[0] = _mlp_bwd(P, "out", tape["out"], dz, grads)
    for k in range(1, K):
        dhv[k] = np.zeros((g.group_sizes[k], cfg.dim))
    dhc = np.zeros((m, cfg.dim))

    for l in range(cfg.layers, 0, -1):
        rec = tape["layers"][l - 1]
        hv, hc = rec["hv"], rec["hc"]
        d = cfg.dim
        new_dhv = []
        dagg_v = []
        for k in range(K):
            dx = _mlp_bwd(P, f"l{l}.g.W{k}", rec["gW"][k], dhv[k], grads)
            new_dhv.append(dx[:, :d])
            dagg_v.append(dx[:, d:])
        dx = _mlp_bwd(P, f"l{l}.g.V", rec["gV"], dhc, grads)
        new_dhc = dx[:, :d].copy()
        dagg_c = dx[:, d:]
        for k in range(K):
            ec, ev = g.edge_con[k], g.edge_var[k]
            name = f"l{l}.f.W{k}"
            if cfg.shared_message:
                dmsg = dagg_c[ec] + dagg_v[k][ev]
                dinp = _mlp_bwd(P, name, rec["msg"][k], dmsg, grads)
            else:
                dinp = _mlp_bwd(P, name, rec["msg"][k], dagg_c[ec], grads)
                dinp = dinp + _mlp_bwd(P, name + ".c2v", rec["msg_c2v"][k], dagg_v[k][ev], grads)
            np.add.at(new_dhc, ec, dinp[:, :d])
            np.add.at(new_dhv[k], ev, dinp[:, d : 2 * d])
        dhv, dhc = new_dhv, new_dhc

    for k in range(K):
        _mlp_bwd(P, f"in.W{k}", tape["enc"][k], dhv[k], grads)
    _mlp_bwd(P, "in.V", tape["encV"], dhc, grads)
    return value, grads


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 8
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


def adam_step(model: GnnModel, grads: Dict[str, np.ndarray], tc: TrainConfig):
    model.adam_t += 1
    t = model.adam_t
    for name, p in model.params.items():
        g = grads[name]
        m = model.adam_m.setdefault(name, np.zeros_like(p))
        v = model.adam_v.setdefault(name, np.zeros_like(p))
        m *= tc.beta1
        m += (1.0 - tc.beta1) * g
        v *= tc.beta2
        v += (1.0 - tc.beta2) * g * g
        mhat = m / (1.0 - tc.beta1**t)
        vhat = v / (1.0 - tc.beta2**t)
        p -= tc.lr * mhat / (np.sqrt(vhat) + tc.eps)


def dataset_loss(model: GnnModel, data) -> float:
    if not data:
        return math.nan
    return float(np.mean([loss(forward(model, g), y) for g, y in data]))


def train(
    data: Sequence[Tuple[MmilpGraph, np.ndarray]],
    cfg: GnnConfig,
    tc: Optional[TrainConfig] = None,
    val: Sequence[Tuple[MmilpGraph, np.ndarray]] = (),
    model: Optional[GnnModel] = None,
    log=None,
):
    """Adam over shuffled mini-batches; gradients are averaged within a batch.

    Returns ``(model, history)`` where each history row holds the epoch's
    mean training loss (measured during the epoch) and validation loss.
    """
    if not data:
        raise ValueError("training set is empty")
    tc = tc or TrainConfig()
    model = model or init_model(cfg)
    rng = np.random.Generator(np.random.PCG64(tc.seed))
    history = []
    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(len(data))
        losses = []
        for start in range(0, len(order), tc.batch_size):
            batch = order[start : start + tc.batch_size]
            acc = {k: np.zeros_like(v) for k, v in model.params.items()}
            for idx in batch:
                g, y = data[idx]
                value, grads = backward(model, g, y)
                if not np.isfinite(value):
                    raise FloatingPointError(
                        f"non-finite loss at epoch {epoch}, sample {int(idx)}"
                    )
                losses.append(value)
                for k in acc:
                    acc[k] += grads[k]
            for k in acc:
                acc[k] /= len(batch)
            adam_step(model, acc, tc)
        row = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_loss": dataset_loss(model, val) if val else math.nan,
        }
        history.append(row)
        if log is not None:
            log(row)
    model.meta["epochs_trained"] = model.meta.get("epochs_trained", 0) + tc.epochs
    return model, history


def history_csv(history) -> str:
    lines = ["epoch,train_loss,val_loss"]
    for row in history:
        lines.append(f"{row['epoch']},{row['train_loss']!r},{row['val_loss']!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: GnnModel, path, extra: Optional[dict] = None):
    cfg = asdict(model.config)
    cfg["hidden"] = list(cfg["hidden"])

    def pack(arrs):
        return {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in arrs.items()}

    doc = {
        "format_version": CHECKPOINT_VERSION,
        "config": cfg,
        "params": pack(model.params),
        "adam": {"t": model.adam_t, "m": pack(model.adam_m), "v": pack(model.adam_v)},
        "meta": dict(model.meta, **(extra or {})),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> GnnModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')}")
    cfg = GnnConfig(**doc["config"])

    def unpack(d):
        return {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in d.items()}

    params = unpack(doc["params"])
    expected = init_model(cfg).params
    if list(params) != list(expected) or any(params[k].shape != expected[k].shape for k in expected):
        raise ValueError("checkpoint parameters do not match its config")
    return GnnModel(
        cfg,
        OrderedDict((k, params[k]) for k in expected),
        unpack(doc["adam"]["m"]),
        unpack(doc["adam"]["v"]),
        int(doc["adam"]["t"]),
        doc.get("meta", {}),
    )


def gradient_check(
    model: GnnModel, g: MmilpGraph, label, n_samples: int, rng: np.random.Generator, h: float = 1e-5
):
    """Central-difference check on randomly sampled parameter slots.

    Returns a list of ``(name, flat_index, analytic, numeric)``.
    """
    _, grads = backward(model, g, label)
    names = list(model.params)
    sizes = np.array([model.params[k].size for k in names], dtype=float)
    out = []
    for _ in range(n_samples):
        name = names[rng.choice(len(names), p=sizes / sizes.sum())]
        p = model.params[name]
        idx = int(rng.integers(p.size))
        flat = p.reshape(-1)
        old = flat[idx]
        flat[idx] = old + h
        up = loss(forward(model, g), label)
        flat[idx] = old - h
        down = loss(forward(model, g), label)
        flat[idx] = old
        out.append((name, idx, float(grads[name].reshape(-1)[idx]), (up - down) / (2 * h)))
    return out


def relative_error(a: float, n: float, floor: float = 1e-8) -> float:
    return abs(a - n) / max(abs(a), abs(n), floor)
