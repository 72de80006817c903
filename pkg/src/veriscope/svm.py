"""Binary RBF-kernel SVM trained with sequential minimal optimization,
plus feature standardization and stratified grid-search cross-validation.
Labels are -1 (false) and +1 (true) throughout."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_C_GRID = tuple(2.0**k for k in range(-2, 7))
DEFAULT_GAMMA_GRID = tuple(2.0**k for k in range(-8, 3))


@dataclass
class SvmConfig:
    c: float = 16.0
    gamma: float = 0.01
    tolerance: float = 1e-3
    max_passes: int = 50

    def __post_init__(self):
        if self.c <= 0 or self.gamma <= 0:
            raise ValueError("c and gamma must be positive")


@dataclass
class Standardizer:
    """Per-feature zero mean and unit variance fitted on training data;
    constant features are dropped and their indices recorded."""

    mean: np.ndarray
    std: np.ndarray
    kept: np.ndarray  # column indices retained
    dropped: np.ndarray  # column indices removed (zero variance)
    input_dim: int

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 2:
            raise ValueError("standardization needs at least 2 training rows")
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        kept = np.flatnonzero(std > 0.0)
        dropped = np.flatnonzero(std == 0.0)
        return cls(
            mean=mean[kept], std=std[kept], kept=kept, dropped=dropped, input_dim=x.shape[1]
        )

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} features, got {x.shape[1]}")
        out = (x[:, self.kept] - self.mean) / self.std
        return out[0] if single else out


def standardize_fit(x: np.ndarray) -> tuple[np.ndarray, Standardizer]:
    stats = Standardizer.fit(x)
    return stats.apply(x), stats


def standardize_apply(x: np.ndarray, stats: Standardizer) -> np.ndarray:
    return stats.apply(x)


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    sq = (
        (a**2).sum(axis=1)[:, None]
        + (b**2).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SvmModel:
    support_vectors: np.ndarray  # standardized coordinates
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    config: SvmConfig
    stats: Standardizer
    train_objective: float = 0.0  # dual objective at the end of training

    def decision(self, x: np.ndarray) -> float | np.ndarray:
        return svm_decision(self, x)


def svm_train_smo(
    x: np.ndarray, y: np.ndarray, config: SvmConfig | None = None, seed: int = 0
) -> SvmModel:
    """Soft-margin dual solved by the simplified SMO scheme: sweep the
    examples, pair each KKT violator with a random partner, and solve the
    two-variable subproblem analytically until a full pass makes no
    progress for max_passes rounds. Deterministic for a fixed seed."""
    config = config or SvmConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (n, d) with one label per row")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("labels must contain both classes, encoded -1/+1")

    stats = Standardizer.fit(x)
    xs = stats.apply(x)
    n = xs.shape[0]
    k = rbf_kernel_matrix(xs, xs, config.gamma)

    rng = np.random.default_rng(seed)
    alphas = np.zeros(n)
    b = 0.0
    c = config.c
    tol = config.tolerance

    passes = 0
    while passes < config.max_passes:
        changed = 0
        for i in range(n):
            e_i = float((alphas * y) @ k[:, i] + b - y[i])
            r_i = e_i * y[i]
            if (r_i < -tol and alphas[i] < c) or (r_i > tol and alphas[i] > 0):
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                e_j = float((alphas * y) @ k[:, j] + b - y[j])
                a_i_old, a_j_old = alphas[i], alphas[j]
                if y[i] != y[j]:
                    low = max(0.0, a_j_old - a_i_old)
                    high = min(c, c + a_j_old - a_i_old)
                else:
                    low = max(0.0, a_i_old + a_j_old - c)
                    high = min(c, a_i_old + a_j_old)
                if low == high:
                    continue
                eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
                if eta >= 0:
                    continue
                a_j = a_j_old - y[j] * (e_i - e_j) / eta
                a_j = min(high, max(low, a_j))
                if abs(a_j - a_j_old) < 1e-7:
                    continue
                a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
                alphas[i], alphas[j] = a_i, a_j
                b1 = b - e_i - y[i] * (a_i - a_i_old) * k[i, i] - y[j] * (a_j - a_j_old) * k[i, j]
                b2 = b - e_j - y[i] * (a_i - a_i_old) * k[i, j] - y[j] * (a_j - a_j_old) * k[j, j]
                if 0 < a_i < c:
                    b = b1
                elif 0 < a_j < c:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
                changed += 1
        passes = passes + 1 if changed == 0 else 0

    support = np.flatnonzero(alphas > 1e-8)
    return SvmModel(
        support_vectors=xs[support],
        dual_coef=alphas[support] * y[support],
        bias=float(b),
        config=config,
        stats=stats,
        train_objective=dual_objective(alphas, k, y),
    )


def svm_decision(model: SvmModel, x: np.ndarray) -> float | np.ndarray:
    """Signed decision value; positive means true, negative means false."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xs = model.stats.apply(x)
    if single:
        xs = xs[None, :]
    if len(model.dual_coef) == 0:
        values = np.full(xs.shape[0], model.bias)
    else:
        k = rbf_kernel_matrix(xs, model.support_vectors, model.config.gamma)
        values = k @ model.dual_coef + model.bias
    return float(values[0]) if single else values


def svm_predict(model: SvmModel, x: np.ndarray) -> np.ndarray:
    values = np.atleast_1d(svm_decision(model, x))
    return np.where(values >= 0.0, 1.0, -1.0)


def dual_objective(alphas: np.ndarray, k: np.ndarray, y: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 * alpha' Q alpha with Q = yy' * K."""
    q = (y[:, None] * y[None, :]) * k
    return float(alphas.sum() - 0.5 * alphas @ q @ alphas)


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Round-robin assignment per class after a seeded shuffle."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assignment = np.zeros(len(y), dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for pos, example in enumerate(idx):
            assignment[example] = pos % folds
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def grid_search_cv(
    x: np.ndarray,
    y: np.ndarray,
    c_grid=DEFAULT_C_GRID,
    gamma_grid=DEFAULT_GAMMA_GRID,
    folds: int = 5,
    seed: int = 0,
    tolerance: float = 1e-3,
    max_passes: int = 50,
) -> tuple[SvmConfig, list[dict]]:
    """Stratified k-fold accuracy for every (C, gamma) cell; the winner is
    the highest mean accuracy, ties resolved toward smaller C then smaller
    gamma. Returns the chosen config and the full accuracy table."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    for cls in (-1.0, 1.0):
        if (y == cls).sum() < folds:
            raise ValueError(f"need at least {folds} examples of class {cls:+.0f}")
    fold_indices = stratified_folds(y, folds, seed)
    table = []
    best = None
    for c in sorted(c_grid):
        for gamma in sorted(gamma_grid):
            accs = []
            for f in range(folds):
                test_idx = fold_indices[f]
                train_idx = np.concatenate([fold_indices[g] for g in range(folds) if g != f])
                config = SvmConfig(c=c, gamma=gamma, tolerance=tolerance, max_passes=max_passes)
                model = svm_train_smo(x[train_idx], y[train_idx], config, seed=seed)
                pred = svm_predict(model, x[test_idx])
                accs.append(float((pred == y[test_idx]).mean()))
            mean_acc = float(np.mean(accs))
            table.append({"c": c, "gamma": gamma, "fold_accuracies": accs, "mean_accuracy": mean_acc})
            if best is None or mean_acc > best[0]:
                best = (mean_acc, c, gamma)
    _, c, gamma = best
    return SvmConfig(c=c, gamma=gamma, tolerance=tolerance, max_passes=max_passes), table


def write_grid_csv(path: str | Path, table: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("c,gamma,mean_accuracy\n")
        for row in table:
            fh.write(f"{row['c']!r},{row['gamma']!r},{row['mean_accuracy']!r}\n")


# --- checkpointing -------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_svm(model: SvmModel, path: str | Path) -> None:
    meta = {
        "version": CHECKPOINT_VERSION,
        "c": model.config.c,
        "gamma": model.config.gamma,
        "tolerance": model.config.tolerance,
        "max_passes": model.config.max_passes,
        "bias": model.bias,
        "input_dim": model.stats.input_dim,
        "train_objective": model.train_objective,
    }
    np.savez(
        path,
        support_vectors=model.support_vectors,
        dual_coef=model.dual_coef,
        mean=model.stats.mean,
        std=model.stats.std,
        kept=model.stats.kept,
        dropped=model.stats.dropped,
        meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
    )


def load_svm(path: str | Path) -> SvmModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        stats = Standardizer(
            mean=data["mean"],
            std=data["std"],
            kept=data["kept"],
            dropped=data["dropped"],
            input_dim=meta["input_dim"],
        )
        config = SvmConfig(
            c=meta["c"],
            gamma=meta["gamma"],
            tolerance=meta["tolerance"],
            max_passes=meta["max_passes"],
        )
        return SvmModel(
            support_vectors=data["support_vectors"],
            dual_coef=data["dual_coef"],
            bias=meta["bias"],
            config=config,
            stats=stats,
            train_objective=meta.get("train_objective", 0.0),
        )
