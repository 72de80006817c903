"""Five-branch bidirectional LSTM classifier, trained from scratch.

One bi-LSTM per text source (claim plus snippet and page for each of two
engine slots); the final states are concatenated with the 24 similarity
features, passed through a tanh hidden layer of 60 units (the
task-specific embedding) and a 2-way softmax. Training uses RMSprop with
L2 weight decay and dropout after the LSTM outputs. Everything is plain
numpy with analytic gradients, verified by finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .embed import EmbeddingTable
from .features import HIDDEN_SIZE, SIM_BLOCK_SIZE
from .text import tokenize

BRANCHES = ("claim", "page_a", "snippet_a", "page_b", "snippet_b")
DIRECTIONS = ("fwd", "bwd")
# gate columns within the stacked weight matrices: [input, forget, cell, output]
GATE_ORDER = ("i", "f", "g", "o")


@dataclass
class LstmParams:
    """One direction of one branch. w: (E, 4H) input weights, u: (H, 4H)
    recurrent weights, b: (4H,) biases, gates stacked [i|f|g|o]."""

    w: np.ndarray
    u: np.ndarray
    b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.u.shape[0]

    @property
    def input_size(self) -> int:
        return self.w.shape[0]


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    l2_lambda: float = 0.1
    dropout: float = 0.5
    batch_size: int = 32
    epochs: int = 400
    seed: int = 0
    lstm_units: int = 25
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8
    max_claim_tokens: int = 64
    max_snippet_tokens: int = 64
    max_triplet_tokens: int = 128

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs, self.lstm_units) <= 0:
            raise ValueError("learning_rate, batch_size, epochs, lstm_units must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class EncodedExample:
    example_id: str
    label: int  # 0 = false, 1 = true
    sequences: dict[str, np.ndarray]  # branch -> token-id array (may be empty)
    sims: np.ndarray  # (24,)


@dataclass
class NnModel:
    lstm_units: int
    embed_dim: int
    branches: dict[str, dict[str, LstmParams]]  # branch -> direction -> params
    w_h: np.ndarray  # (5*2H + 24, 60)
    b_h: np.ndarray
    w_o: np.ndarray  # (60, 2), columns [false, true]
    b_o: np.ndarray
    embeddings: np.ndarray  # (V, E), frozen
    tokens: tuple[str, ...]

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable tensors in a fixed order (embeddings excluded)."""
        params = {}
        for branch in BRANCHES:
            for direction in DIRECTIONS:
                p = self.branches[branch][direction]
                params[f"{branch}.{direction}.w"] = p.w
                params[f"{branch}.{direction}.u"] = p.u
                params[f"{branch}.{direction}.b"] = p.b
        params["dense.w"] = self.w_h
        params["dense.b"] = self.b_h
        params["out.w"] = self.w_o
        params["out.b"] = self.b_o
        return params

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.parameters().items()}

    def load_params(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in self.parameters().items():
            value[...] = snapshot[name]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_lstm_params(rng: np.random.Generator, embed_dim: int, hidden: int) -> LstmParams:
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0  # forget-gate bias starts open
    return LstmParams(
        w=_glorot(rng, (embed_dim, 4 * hidden)),
        u=_glorot(rng, (hidden, 4 * hidden)),
        b=b,
    )


def init_model(rng: np.random.Generator, table: EmbeddingTable, config: TrainConfig) -> NnModel:
    h = config.lstm_units
    e = table.dimension
    tokens = tuple(table.vocab.keys())
    embeddings = np.stack([table.vocab[t] for t in tokens]).astype(np.float64)
    branches = {
        branch: {d: init_lstm_params(rng, e, h) for d in DIRECTIONS} for branch in BRANCHES
    }
    dense_in = len(BRANCHES) * 2 * h + SIM_BLOCK_SIZE
    return NnModel(
        lstm_units=h,
        embed_dim=e,
        branches=branches,
        w_h=_glorot(rng, (dense_in, HIDDEN_SIZE)),
        b_h=np.zeros(HIDDEN_SIZE),
        w_o=_glorot(rng, (HIDDEN_SIZE, 2)),
        b_o=np.zeros(2),
        embeddings=embeddings,
        tokens=tokens,
    )


# --- text encoding -------------------------------------------------------------


class TextEncoder:
    """Maps branch texts to token-id sequences over the embedding vocab.
    Out-of-vocabulary words are dropped (they carry no input signal);
    sequences are truncated from the right at the per-branch cap."""

    def __init__(self, table: EmbeddingTable, config: TrainConfig | None = None):
        config = config or TrainConfig()
        self.table = table
        self.tokens = tuple(table.vocab.keys())
        self.token_index = {t: i for i, t in enumerate(self.tokens)}
        self.matrix = np.stack([table.vocab[t] for t in self.tokens]).astype(np.float64)
        self.caps = {
            "claim": config.max_claim_tokens,
            "snippet_a": config.max_snippet_tokens,
            "snippet_b": config.max_snippet_tokens,
            "page_a": config.max_triplet_tokens,
            "page_b": config.max_triplet_tokens,
        }

    def ids(self, text: str | None, cap: int) -> np.ndarray:
        if not text:
            return np.zeros(0, dtype=np.int64)
        found = [self.token_index[t.lower] for t in tokenize(text) if t.lower in self.token_index]
        return np.array(found[:cap], dtype=np.int64)

    def encode(
        self,
        example_id: str,
        label: int,
        branch_texts: dict[str, str | None],
        sims: np.ndarray,
    ) -> EncodedExample:
        sequences = {
            branch: self.ids(branch_texts.get(branch), self.caps[branch]) for branch in BRANCHES
        }
        sims = np.asarray(sims, dtype=np.float64)
        if sims.shape != (SIM_BLOCK_SIZE,):
            raise ValueError(f"similarity block must have shape ({SIM_BLOCK_SIZE},)")
        return EncodedExample(example_id=example_id, label=int(label), sequences=sequences, sims=sims)


# --- forward / backward --------------------------------------------------------


def lstm_step(
    params: LstmParams, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One unmasked step: i,f,o sigmoid gates, g tanh candidate,
    c = f*c_prev + i*g, h = o*tanh(c)."""
    h = params.hidden_size
    if x_t.shape[-1] != params.input_size or h_prev.shape[-1] != h or c_prev.shape[-1] != h:
        raise ValueError("lstm_step dimension mismatch")
    z = x_t @ params.w + h_prev @ params.u + params.b
    i = _sigmoid(z[..., :h])
    f = _sigmoid(z[..., h : 2 * h])
    g = np.tanh(z[..., 2 * h : 3 * h])
    o = _sigmoid(z[..., 3 * h :])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def _lstm_forward(params: LstmParams, x: np.ndarray, mask: np.ndarray):
    """Batched pass over (B, T, E) inputs; masked positions carry (h, c)
    through unchanged. Returns the final state and per-step caches."""
    batch, steps, _ = x.shape
    hsz = params.hidden_size
    h = np.zeros((batch, hsz))
    c = np.zeros((batch, hsz))
    caches = []
    for t in range(steps):
        x_t = x[:, t, :]
        z = x_t @ params.w + h @ params.u + params.b
        i = _sigmoid(z[:, :hsz])
        f = _sigmoid(z[:, hsz : 2 * hsz])
        g = np.tanh(z[:, 2 * hsz : 3 * hsz])
        o = _sigmoid(z[:, 3 * hsz :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        m = mask[:, t : t + 1]
        caches.append((x_t, h, c, i, f, g, o, tanh_c, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    return h, caches


def _lstm_backward(params: LstmParams, caches, dh_final: np.ndarray):
    """BPTT mirror of _lstm_forward, seeding gradient at the final state."""
    hsz = params.hidden_size
    dw = np.zeros_like(params.w)
    du = np.zeros_like(params.u)
    db = np.zeros_like(params.b)
    dh = dh_final.copy()
    dc = np.zeros_like(dh_final)
    for x_t, h_prev, c_prev, i, f, g, o, tanh_c, m in reversed(caches):
        dh_new = dh * m
        dh_prev = dh * (1.0 - m)
        dc_new = dc * m
        dc_prev = dc * (1.0 - m)
        do = dh_new * tanh_c
        dc_new = dc_new + dh_new * o * (1.0 - tanh_c**2)
        df = dc_new * c_prev
        di = dc_new * g
        dg = dc_new * i
        dc_prev = dc_prev + dc_new * f
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g**2), do * o * (1.0 - o)],
            axis=1,
        )
        dw += x_t.T @ dz
        du += h_prev.T @ dz
        db += dz.sum(axis=0)
        dh = dh_prev + dz @ params.u.T
        dc = dc_prev
    return dw, du, db


def bilstm_encode(
    params_fwd: LstmParams,
    params_bwd: LstmParams,
    sequence: np.ndarray,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Concatenation of the final forward state and the final backward
    state of one (T, E) sequence. A fully masked sequence encodes to the
    zero vector."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim != 2:
        raise ValueError("sequence must be (T, E)")
    steps = sequence.shape[0]
    if mask is None:
        mask = np.ones(steps)
    mask = np.asarray(mask, dtype=np.float64)
    x = sequence[None, :, :]
    m = mask[None, :]
    h_fwd, _ = _lstm_forward(params_fwd, x, m)
    h_bwd, _ = _lstm_forward(params_bwd, x[:, ::-1, :], m[:, ::-1])
    return np.concatenate([h_fwd[0], h_bwd[0]])


def _make_batch(model: NnModel, examples: list[EncodedExample]):
    """Pad each branch to its in-batch maximum length and embed ids."""
    batch = len(examples)
    branch_inputs = {}
    for branch in BRANCHES:
        steps = max((len(ex.sequences[branch]) for ex in examples), default=0)
        steps = max(steps, 1)
        x = np.zeros((batch, steps, model.embed_dim))
        mask = np.zeros((batch, steps))
        for row, ex in enumerate(examples):
            ids = ex.sequences[branch]
            if len(ids):
                x[row, : len(ids), :] = model.embeddings[ids]
                mask[row, : len(ids)] = 1.0
        branch_inputs[branch] = (x, mask)
    sims = np.stack([ex.sims for ex in examples])
    labels = np.array([ex.label for ex in examples], dtype=np.int64)
    return branch_inputs, sims, labels


def _forward_batch(model: NnModel, branch_inputs, sims, drop_mask=None):
    encodings = []
    caches = {}
    for branch in BRANCHES:
        x, mask = branch_inputs[branch]
        h_fwd, cache_fwd = _lstm_forward(model.branches[branch]["fwd"], x, mask)
        h_bwd, cache_bwd = _lstm_forward(
            model.branches[branch]["bwd"], x[:, ::-1, :], mask[:, ::-1]
        )
        caches[branch] = (cache_fwd, cache_bwd)
        encodings.append(np.concatenate([h_fwd, h_bwd], axis=1))
    enc = np.concatenate(encodings, axis=1)
    enc_used = enc if drop_mask is None else enc * drop_mask
    dense_in = np.concatenate([enc_used, sims], axis=1)
    a1 = np.tanh(dense_in @ model.w_h + model.b_h)
    logits = a1 @ model.w_o + model.b_o
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)
    return probs, log_probs, a1, dense_in, caches


def _l2_penalty(model: NnModel, lam: float) -> float:
    if lam == 0.0:
        return 0.0
    total = 0.0
    for branch in BRANCHES:
        for direction in DIRECTIONS:
            p = model.branches[branch][direction]
            total += float((p.w**2).sum() + (p.u**2).sum())
    total += float((model.w_h**2).sum() + (model.w_o**2).sum())
    return lam * total


def _loss_only(model, branch_inputs, sims, labels, lam, drop_mask=None) -> float:
    probs, log_probs, _, _, _ = _forward_batch(model, branch_inputs, sims, drop_mask)
    data_loss = -float(log_probs[np.arange(len(labels)), labels].mean())
    return data_loss + _l2_penalty(model, lam)


def _loss_and_grads(model, branch_inputs, sims, labels, lam, drop_mask=None):
    batch = len(labels)
    probs, log_probs, a1, dense_in, caches = _forward_batch(model, branch_inputs, sims, drop_mask)
    data_loss = -float(log_probs[np.arange(batch), labels].mean())
    loss = data_loss + _l2_penalty(model, lam)

    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch

    grads = {}
    grads["out.w"] = a1.T @ dlogits + 2.0 * lam * model.w_o
    grads["out.b"] = dlogits.sum(axis=0)
    da1 = dlogits @ model.w_o.T
    dz1 = da1 * (1.0 - a1**2)
    grads["dense.w"] = dense_in.T @ dz1 + 2.0 * lam * model.w_h
    grads["dense.b"] = dz1.sum(axis=0)
    ddense_in = dz1 @ model.w_h.T

    h2 = 2 * model.lstm_units
    denc = ddense_in[:, : len(BRANCHES) * h2]
    if drop_mask is not None:
        denc = denc * drop_mask
    for idx, branch in enumerate(BRANCHES):
        dpair = denc[:, idx * h2 : (idx + 1) * h2]
        cache_fwd, cache_bwd = caches[branch]
        for direction, half in zip(DIRECTIONS, (dpair[:, : h2 // 2], dpair[:, h2 // 2 :])):
            params = model.branches[branch][direction]
            cache = cache_fwd if direction == "fwd" else cache_bwd
            dw, du, db = _lstm_backward(params, cache, half)
            grads[f"{branch}.{direction}.w"] = dw + 2.0 * lam * params.w
            grads[f"{branch}.{direction}.u"] = du + 2.0 * lam * params.u
            grads[f"{branch}.{direction}.b"] = db
    return loss, grads


# --- public inference ops ------------------------------------------------------


def nn_forward(
    model: NnModel, encoded: EncodedExample, train_mode: bool = False, seed: int | None = None
) -> tuple[float, float, np.ndarray]:
    """Probabilities (true, false) and the 60-unit hidden activations for
    one example. Dropout is applied only when train_mode is set."""
    branch_inputs, sims, _ = _make_batch(model, [encoded])
    drop_mask = None
    if train_mode:
        rng = np.random.default_rng(seed)
        keep = 0.5
        drop_mask = (rng.random((1, len(BRANCHES) * 2 * model.lstm_units)) < keep) / keep
    probs, _, a1, _, _ = _forward_batch(model, branch_inputs, sims, drop_mask)
    return float(probs[0, 1]), float(probs[0, 0]), a1[0]


def hidden_embedding(model: NnModel, encoded: EncodedExample) -> np.ndarray:
    """The task-specific embedding: tanh hidden activations at inference."""
    _, _, hidden = nn_forward(model, encoded, train_mode=False)
    return hidden


def branch_encodings(model: NnModel, encoded: EncodedExample) -> dict[str, np.ndarray]:
    """Per-branch bi-LSTM outputs (2H each) at inference."""
    out = {}
    for branch in BRANCHES:
        ids = encoded.sequences[branch]
        if len(ids) == 0:
            out[branch] = np.zeros(2 * model.lstm_units)
            continue
        seq = model.embeddings[ids]
        out[branch] = bilstm_encode(
            model.branches[branch]["fwd"], model.branches[branch]["bwd"], seq
        )
    return out


def predict_proba(model: NnModel, examples: list[EncodedExample], chunk: int = 256) -> np.ndarray:
    """(N, 2) class probabilities, columns [false, true], no dropout."""
    rows = []
    for start in range(0, len(examples), chunk):
        part = examples[start : start + chunk]
        branch_inputs, sims, _ = _make_batch(model, part)
        probs, _, _, _, _ = _forward_batch(model, branch_inputs, sims)
        rows.append(probs)
    return np.concatenate(rows) if rows else np.zeros((0, 2))


def accuracy(model: NnModel, examples: list[EncodedExample]) -> float:
    if not examples:
        return float("nan")
    probs = predict_proba(model, examples)
    predicted = probs.argmax(axis=1)
    gold = np.array([ex.label for ex in examples])
    return float((predicted == gold).mean())


# --- training ------------------------------------------------------------------


def nn_train(
    train_examples: list[EncodedExample],
    dev_examples: list[EncodedExample],
    config: TrainConfig,
    table: EmbeddingTable,
) -> tuple[NnModel, list[dict]]:
    """Mini-batch RMSprop on cross-entropy plus L2 on weights (biases
    excluded). Returns the parameter snapshot with the best dev accuracy
    and a per-epoch history of train loss and dev accuracy. Fixed seed
    implies bit-identical results."""
    labels = {ex.label for ex in train_examples}
    if labels != {0, 1}:
        raise ValueError("training data must contain both classes")
    rng = np.random.default_rng(config.seed)
    model = init_model(rng, table, config)
    params = model.parameters()
    rms = {name: np.zeros_like(value) for name, value in params.items()}

    n = len(train_examples)
    enc_width = len(BRANCHES) * 2 * config.lstm_units
    best_acc = -1.0
    best_params = model.copy_params()
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            batch = [train_examples[i] for i in order[start : start + config.batch_size]]
            branch_inputs, sims, batch_labels = _make_batch(model, batch)
            drop_mask = None
            if config.dropout > 0.0:
                keep = 1.0 - config.dropout
                drop_mask = (rng.random((len(batch), enc_width)) < keep) / keep
            loss, grads = _loss_and_grads(
                model, branch_inputs, sims, batch_labels, config.l2_lambda, drop_mask
            )
            epoch_losses.append(loss)
            for name, value in params.items():
                g = grads[name]
                rms[name] = config.rmsprop_decay * rms[name] + (1.0 - config.rmsprop_decay) * g * g
                value -= config.learning_rate * g / (np.sqrt(rms[name]) + config.rmsprop_eps)
        dev_acc = accuracy(model, dev_examples) if dev_examples else float("nan")
        history.append(
            {
                "epoch": epoch + 1,
                "train_loss": float(np.mean(epoch_losses)),
                "dev_accuracy": None if np.isnan(dev_acc) else dev_acc,
            }
        )
        if dev_examples and dev_acc > best_acc:
            best_acc = dev_acc
            best_params = model.copy_params()
    if dev_examples:
        model.load_params(best_params)
    return model, history


# --- gradient checking ---------------------------------------------------------


def grad_check(
    model: NnModel,
    example: EncodedExample,
    lam: float = 0.0,
    epsilon: float = 1e-5,
    samples_per_tensor: int = 20,
    seed: int = 0,
    corrupt=None,
) -> float:
    """Max relative error between analytic gradients and central finite
    differences of the full loss, sampling at least 20 coordinates per
    tensor (all of them for smaller tensors). The denominator is floored
    at 1e-5: double-precision central differences carry ~1e-10 absolute
    noise, so coordinates with near-zero true gradient are effectively
    compared absolutely. The corrupt hook lets tests install a deliberate
    defect as a negative control."""
    branch_inputs, sims, labels = _make_batch(model, [example])
    _, grads = _loss_and_grads(model, branch_inputs, sims, labels, lam)
    if corrupt is not None:
        corrupt(grads)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, tensor in model.parameters().items():
        flat = tensor.ravel()
        count = flat.size
        if count <= samples_per_tensor:
            coords = np.arange(count)
        else:
            coords = rng.choice(count, size=samples_per_tensor, replace=False)
        analytic_flat = grads[name].ravel()
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + epsilon
            loss_plus = _loss_only(model, branch_inputs, sims, labels, lam)
            flat[idx] = original - epsilon
            loss_minus = _loss_only(model, branch_inputs, sims, labels, lam)
            flat[idx] = original
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            analytic = analytic_flat[idx]
            err = abs(analytic - numeric) / max(1e-5, abs(analytic) + abs(numeric))
            worst = max(worst, err)
    return worst


# --- checkpointing -------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_nn(model: NnModel, path: str | Path) -> None:
    """Binary checkpoint of all tensors plus config; bit-exact round trip."""
    arrays = dict(model.parameters())
    arrays["embeddings"] = model.embeddings
    meta = {
        "version": CHECKPOINT_VERSION,
        "lstm_units": model.lstm_units,
        "embed_dim": model.embed_dim,
        "tokens": list(model.tokens),
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)


def load_nn(path: str | Path) -> NnModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        branches = {
            branch: {
                direction: LstmParams(
                    w=data[f"{branch}.{direction}.w"],
                    u=data[f"{branch}.{direction}.u"],
                    b=data[f"{branch}.{direction}.b"],
                )
                for direction in DIRECTIONS
            }
            for branch in BRANCHES
        }
        return NnModel(
            lstm_units=meta["lstm_units"],
            embed_dim=meta["embed_dim"],
            branches=branches,
            w_h=data["dense.w"],
            b_h=data["dense.b"],
            w_o=data["out.w"],
            b_o=data["out.b"],
            embeddings=data["embeddings"],
            tokens=tuple(meta["tokens"]),
        )
