"""Featurization, a small two-branch regressor, and consistency training.

Enzymes become length-normalized 1-mer/2-mer count vectors (462 entries,
MASK is a first-class symbol); substrates become a 23-entry descriptor
(element bins with a dedicated MASKED bin, bond orders, ring count,
degree histogram, charge sum, atom total).  Both branches pass through a
tanh affine layer, are concatenated, fused into a d-dim embedding, and a
linear head emits the log10 kinetic prediction.

Training minimizes prediction MSE on raw pairs plus lam times the mean
squared embedding distance between each raw pair and its augmented
counterpart; the augmented pairs feed only the consistency term.  All
gradients are hand-derived and checked against finite differences in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import ALPHABET, AugmentConfig, EsiPair, augment_pair
from .errors import ConfigError, DegenerateTargetsError, NonFiniteError
from .metrics import mae, r_squared
from .molgraph import (
    BOND_AROMATIC,
    BOND_DOUBLE,
    BOND_SINGLE,
    BOND_TRIPLE,
    ELEMENTS,
    MolGraph,
)

ENZYME_FEATURES = len(ALPHABET) + len(ALPHABET) ** 2  # 462
ENZYME_LAYOUT = "enzyme-kmer12-v1"

# element bins + MASKED bin, 4 bond orders, ring count, degree histogram
# 0..4+, charge sum, atom total
SUBSTRATE_FEATURES = len(ELEMENTS) + 1 + 4 + 1 + 5 + 1 + 1  # 23
SUBSTRATE_LAYOUT = "substrate-descriptor-v1"

MOMENTUM = 0.9

# Fixed input scalings applied inside the forward pass.  K-mer fractions
# are tiny (~1/sequence length) while the raw atom-count descriptor runs
# to double digits; rescaling both toward unit magnitude keeps the two
# branches inside tanh's responsive range under 1/sqrt(fan_in) init.
ENZYME_INPUT_SCALE = 16.0
ATOM_COUNT_SCALE = 0.125

_SYMBOL_INDEX = {symbol: i for i, symbol in enumerate(ALPHABET)}
_ELEMENT_INDEX = {element: i for i, element in enumerate(ELEMENTS)}
_BOND_SLOT = {BOND_SINGLE: 0, BOND_DOUBLE: 1, BOND_TRIPLE: 2, BOND_AROMATIC: 3}


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length numeric features plus the layout id that produced them."""

    values: np.ndarray
    layout: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains non-finite entries")


def featurize_enzyme(seq: str) -> FeatureVector:
    """Length-normalized 1-mer (21) and 2-mer (441) counts."""
    if not seq:
        raise ValueError("empty enzyme sequence")
    k = len(ALPHABET)
    values = np.zeros(ENZYME_FEATURES)
    idx = [_SYMBOL_INDEX[c] for c in seq]
    for i in idx:
        values[i] += 1.0
    values[:k] /= len(seq)
    if len(seq) > 1:
        for a, b in zip(idx, idx[1:]):
            values[k + a * k + b] += 1.0
        values[k:] /= len(seq) - 1
    return FeatureVector(values, ENZYME_LAYOUT)


def featurize_substrate(g: MolGraph, mask=None) -> FeatureVector:
    """Descriptor vector; masked atoms count only in the MASKED bin.

    Bonds, degrees, ring membership, and charge are read from the intact
    graph, so masking hides identity, not topology.
    """
    n = len(g)
    if mask is None:
        mask = (False,) * n
    if len(mask) != n:
        raise ValueError(f"mask length {len(mask)} != atom count {n}")
    values = np.zeros(SUBSTRATE_FEATURES)
    n_elements = len(ELEMENTS)
    for i, atom in enumerate(g.atoms):
        if mask[i]:
            values[n_elements] += 1.0
        else:
            values[_ELEMENT_INDEX[atom.element]] += 1.0
    base = n_elements + 1
    for bond in g.bonds:
        values[base + _BOND_SLOT[bond.order]] += 1.0
    values[base + 4] = sum(g.ring_membership)
    for i in range(n):
        values[base + 5 + min(g.degree(i), 4)] += 1.0
    values[base + 10] = sum(a.formal_charge for a in g.atoms)
    values[: base + 11] /= n
    values[base + 11] = n
    return FeatureVector(values, SUBSTRATE_LAYOUT)


# ---------------------------------------------------------------------------
# Parameters


@dataclass(frozen=True)
class ModelParams:
    """Weights for the two branches, the fusion layer, and the scalar head."""

    w_enzyme: np.ndarray
    b_enzyme: np.ndarray
    w_substrate: np.ndarray
    b_substrate: np.ndarray
    w_fusion: np.ndarray
    b_fusion: np.ndarray
    w_head: np.ndarray
    b_head: float

    def __post_init__(self):
        he, de = self.w_enzyme.shape
        hs, ds = self.w_substrate.shape
        d, fused = self.w_fusion.shape
        if self.b_enzyme.shape != (he,) or self.b_substrate.shape != (hs,):
            raise ValueError("branch bias shapes do not match weights")
        if fused != he + hs:
            raise ValueError("fusion input dim != concatenated branch dims")
        if self.b_fusion.shape != (d,) or self.w_head.shape != (d,):
            raise ValueError("fusion/head shapes inconsistent")
        for arr in self.arrays():
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite parameter values")

    @property
    def embed_dim(self) -> int:
        return self.w_fusion.shape[0]

    def arrays(self):
        return (
            self.w_enzyme,
            self.b_enzyme,
            self.w_substrate,
            self.b_substrate,
            self.w_fusion,
            self.b_fusion,
            self.w_head,
            np.asarray(self.b_head, dtype=float),
        )


FIELD_NAMES = (
    "w_enzyme",
    "b_enzyme",
    "w_substrate",
    "b_substrate",
    "w_fusion",
    "b_fusion",
    "w_head",
    "b_head",
)


def init_params(
    rng: np.random.Generator,
    hidden_enzyme: int = 48,
    hidden_substrate: int = 16,
    embed_dim: int = 64,
) -> ModelParams:
    """Gaussian init scaled by 1/sqrt(fan_in); biases start at zero."""

    def layer(rows, cols):
        return rng.normal(0.0, 1.0 / np.sqrt(cols), size=(rows, cols))

    fused = hidden_enzyme + hidden_substrate
    return ModelParams(
        w_enzyme=layer(hidden_enzyme, ENZYME_FEATURES),
        b_enzyme=np.zeros(hidden_enzyme),
        w_substrate=layer(hidden_substrate, SUBSTRATE_FEATURES),
        b_substrate=np.zeros(hidden_substrate),
        w_fusion=layer(embed_dim, fused),
        b_fusion=np.zeros(embed_dim),
        w_head=rng.normal(0.0, 1.0 / np.sqrt(embed_dim), size=embed_dim),
        b_head=0.0,
    )


# ---------------------------------------------------------------------------
# Forward


def featurize_pair(pair: EsiPair) -> tuple[np.ndarray, np.ndarray]:
    enzyme = featurize_enzyme(pair.enzyme).values
    substrate = featurize_substrate(pair.substrate, pair.substrate_mask).values
    return enzyme, substrate


_SUBSTRATE_INPUT_SCALE = np.ones(SUBSTRATE_FEATURES)
_SUBSTRATE_INPUT_SCALE[SUBSTRATE_FEATURES - 1] = ATOM_COUNT_SCALE


def _forward_arrays(params: ModelParams, x_enzyme: np.ndarray, x_substrate: np.ndarray):
    """Batched forward pass over scaled inputs; returns the scaled inputs
    and every activation needed by backprop."""
    xe = np.atleast_2d(x_enzyme) * ENZYME_INPUT_SCALE
    xs = np.atleast_2d(x_substrate) * _SUBSTRATE_INPUT_SCALE
    h_e = np.tanh(xe @ params.w_enzyme.T + params.b_enzyme)
    h_s = np.tanh(xs @ params.w_substrate.T + params.b_substrate)
    h = np.concatenate([h_e, h_s], axis=1)
    z = np.tanh(h @ params.w_fusion.T + params.b_fusion)
    preds = z @ params.w_head + params.b_head
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(preds))):
        raise NonFiniteError("non-finite activation in forward pass")
    return xe, xs, h_e, h_s, h, z, preds


def forward_batch(params: ModelParams, x_enzyme, x_substrate):
    """(embeddings, predictions) for stacked feature rows."""
    *_, z, preds = _forward_arrays(params, x_enzyme, x_substrate)
    return z, preds


def forward(params: ModelParams, pair: EsiPair) -> tuple[np.ndarray, float]:
    """(d-dim embedding, scalar log10 prediction) for one pair."""
    enzyme, substrate = featurize_pair(pair)
    z, preds = forward_batch(params, enzyme[None, :], substrate[None, :])
    return z[0], float(preds[0])


def predict(params: ModelParams, pairs) -> np.ndarray:
    """Predictions for raw pairs; vectorized over the batch."""
    pairs = list(pairs)
    x_e = np.stack([featurize_enzyme(p.enzyme).values for p in pairs])
    x_s = np.stack([featurize_substrate(p.substrate, p.substrate_mask).values for p in pairs])
    _, preds = forward_batch(params, x_e, x_s)
    return preds


# ---------------------------------------------------------------------------
# Losses


def loss_base(preds, targets) -> float:
    """Mean squared prediction error."""
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise ValueError(f"shape mismatch or empty: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def loss_cons(f, f_aug) -> float:
    """Squared Euclidean embedding distance; batches average over rows."""
    a = np.asarray(f, dtype=float)
    b = np.asarray(f_aug, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"embedding shape mismatch: {a.shape} vs {b.shape}")
    d2 = np.sum((a - b) ** 2, axis=-1)
    return float(np.mean(d2))


def loss_total(base: float, cons: float, lam: float) -> float:
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    return base + lam * cons


# ---------------------------------------------------------------------------
# Gradients


@dataclass
class Gradients:
    """Same shapes as ModelParams."""

    w_enzyme: np.ndarray
    b_enzyme: np.ndarray
    w_substrate: np.ndarray
    b_substrate: np.ndarray
    w_fusion: np.ndarray
    b_fusion: np.ndarray
    w_head: np.ndarray
    b_head: float


def _normalize_rows(z, eps=1e-12):
    norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), eps)
    return z / norms, norms


def _cons_embedding_grads(z_raw, z_aug, batch, normalize):
    """Gradient of mean ||u_raw - u_aug||^2 w.r.t. both raw embeddings,
    where u is the embedding itself or its L2-normalized form."""
    if not normalize:
        diff = (2.0 / batch) * (z_raw - z_aug)
        return diff, -diff
    u_raw, n_raw = _normalize_rows(z_raw)
    u_aug, n_aug = _normalize_rows(z_aug)
    g_u = (2.0 / batch) * (u_raw - u_aug)
    g_raw = (g_u - u_raw * np.sum(u_raw * g_u, axis=1, keepdims=True)) / n_raw
    g_aug = (-g_u - u_aug * np.sum(u_aug * (-g_u), axis=1, keepdims=True)) / n_aug
    return g_raw, g_aug


def _cons_value(z_raw, z_aug, normalize):
    if not normalize:
        return loss_cons(z_raw, z_aug)
    u_raw, _ = _normalize_rows(z_raw)
    u_aug, _ = _normalize_rows(z_aug)
    return loss_cons(u_raw, u_aug)


def gradients(
    params: ModelParams,
    x_enzyme_raw,
    x_substrate_raw,
    x_enzyme_aug,
    x_substrate_aug,
    targets,
    lam: float,
    normalize_cons: bool = False,
):
    """Analytical gradient of loss_total over one batch.

    The prediction loss sees only raw-pair outputs; augmented pairs reach
    the parameters exclusively through the consistency term, so with
    lam=0 their contents cannot affect the update.

    Returns (Gradients, base_loss, cons_loss).
    """
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    y = np.asarray(targets, dtype=float)
    batch = y.shape[0]
    if batch == 0:
        raise ValueError("empty batch")

    xe_raw, xs_raw, he_raw, hs_raw, h_raw, z_raw, preds = _forward_arrays(
        params, x_enzyme_raw, x_substrate_raw
    )
    base = float(np.mean((preds - y) ** 2))

    g_pred = (2.0 / batch) * (preds - y)
    grads = Gradients(
        w_enzyme=np.zeros_like(params.w_enzyme),
        b_enzyme=np.zeros_like(params.b_enzyme),
        w_substrate=np.zeros_like(params.w_substrate),
        b_substrate=np.zeros_like(params.b_substrate),
        w_fusion=np.zeros_like(params.w_fusion),
        b_fusion=np.zeros_like(params.b_fusion),
        w_head=np.zeros_like(params.w_head),
        b_head=0.0,
    )
    grads.w_head += z_raw.T @ g_pred
    grads.b_head += float(np.sum(g_pred))

    if lam > 0:
        xe_aug, xs_aug, he_aug, hs_aug, h_aug, z_aug, _ = _forward_arrays(
            params, x_enzyme_aug, x_substrate_aug
        )
        cons = _cons_value(z_raw, z_aug, normalize_cons)
        gz_cons_raw, gz_cons_aug = _cons_embedding_grads(
            z_raw, z_aug, batch, normalize_cons
        )
    else:
        cons = 0.0
        gz_cons_raw = gz_cons_aug = None

    def back_pass(g_z, z, h, h_e, h_s, x_e, x_s):
        dpre_f = g_z * (1.0 - z * z)
        grads.w_fusion += dpre_f.T @ h
        grads.b_fusion += dpre_f.sum(axis=0)
        g_h = dpre_f @ params.w_fusion
        he_dim = h_e.shape[1]
        dpre_e = g_h[:, :he_dim] * (1.0 - h_e * h_e)
        dpre_s = g_h[:, he_dim:] * (1.0 - h_s * h_s)
        grads.w_enzyme += dpre_e.T @ x_e
        grads.b_enzyme += dpre_e.sum(axis=0)
        grads.w_substrate += dpre_s.T @ x_s
        grads.b_substrate += dpre_s.sum(axis=0)

    g_z_raw = np.outer(g_pred, params.w_head)
    if gz_cons_raw is not None:
        g_z_raw = g_z_raw + lam * gz_cons_raw
    back_pass(g_z_raw, z_raw, h_raw, he_raw, hs_raw, xe_raw, xs_raw)
    if gz_cons_aug is not None:
        back_pass(lam * gz_cons_aug, z_aug, h_aug, he_aug, hs_aug, xe_aug, xs_aug)

    for name in FIELD_NAMES:
        value = getattr(grads, name)
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite gradient in {name}")
    return grads, base, cons


def batch_losses(params, x_enzyme_raw, x_substrate_raw, x_enzyme_aug, x_substrate_aug,
                 targets, lam, normalize_cons=False):
    """(base, cons, total) without gradient work; used by the FD oracle."""
    *_, z_raw, preds = _forward_arrays(params, x_enzyme_raw, x_substrate_raw)
    base = loss_base(preds, targets)
    if lam > 0:
        *_, z_aug, _unused = _forward_arrays(params, x_enzyme_aug, x_substrate_aug)
        cons = _cons_value(z_raw, z_aug, normalize_cons)
    else:
        cons = 0.0
    return base, cons, loss_total(base, cons, lam)


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    """Optimization and architecture settings.

    lam weighs the consistency term (0 disables it); momentum is the
    fixed constant MOMENTUM.  normalize_cons applies the consistency loss
    to L2-normalized embeddings instead of raw ones.
    """

    lam: float = 0.5
    learning_rate: float = 0.02
    epochs: int = 300
    batch_size: int = 16
    hidden_enzyme: int = 48
    hidden_substrate: int = 16
    embed_dim: int = 64
    seed: int = 0
    normalize_cons: bool = False
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("learning_rate, epochs, and batch_size must be positive")
        for dim in (self.hidden_enzyme, self.hidden_substrate, self.embed_dim):
            if dim < 1:
                raise ConfigError("layer dimensions must be positive")


def train(train_pairs, val_pairs, cfg: TrainConfig):
    """Momentum SGD with per-step augmentation.

    Every step draws fresh augmented counterparts for its batch with a
    generator seeded by (seed, epoch, step), computes the combined loss,
    and updates shared parameters.  Returns (params of the best
    validation-MSE epoch, per-epoch log).  On a non-finite loss or
    gradient the run raises NonFiniteError carrying the best finite
    checkpoint and the log so far in its ``checkpoint`` and ``log``
    attributes.
    """
    train_pairs = list(train_pairs)
    val_pairs = list(val_pairs)
    if not train_pairs:
        raise ValueError("empty training set")
    if not val_pairs:
        raise ValueError("empty validation set")

    x_e = np.stack([featurize_enzyme(p.enzyme).values for p in train_pairs])
    x_s = np.stack(
        [featurize_substrate(p.substrate, p.substrate_mask).values for p in train_pairs]
    )
    y = np.array([p.value for p in train_pairs], dtype=float)
    xv_e = np.stack([featurize_enzyme(p.enzyme).values for p in val_pairs])
    xv_s = np.stack(
        [featurize_substrate(p.substrate, p.substrate_mask).values for p in val_pairs]
    )
    yv = np.array([p.value for p in val_pairs], dtype=float)

    params = init_params(
        np.random.default_rng([cfg.seed, 0xA11]),
        hidden_enzyme=cfg.hidden_enzyme,
        hidden_substrate=cfg.hidden_substrate,
        embed_dim=cfg.embed_dim,
    )
    velocity = {name: np.zeros_like(getattr(params, name)) if name != "b_head" else 0.0
                for name in FIELD_NAMES}

    n = len(train_pairs)
    best_params = params
    best_val = np.inf
    best_epoch = -1
    log: list[dict] = []

    def abort(reason: str):
        entry = {"aborted": reason, "epoch": len(log)}
        log.append(entry)
        err = NonFiniteError(reason)
        err.checkpoint = best_params
        err.log = log
        raise err

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch, 0xD5]).permutation(n)
        epoch_base = 0.0
        epoch_cons = 0.0
        steps = 0
        for step, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            step_rng = np.random.default_rng([cfg.seed, epoch, step])
            aug_pairs = [augment_pair(train_pairs[i], cfg.augment, step_rng) for i in idx]
            xa_e = np.stack([featurize_enzyme(p.enzyme).values for p in aug_pairs])
            xa_s = np.stack(
                [featurize_substrate(p.substrate, p.substrate_mask).values for p in aug_pairs]
            )
            try:
                grads, base, cons = gradients(
                    params,
                    x_e[idx],
                    x_s[idx],
                    xa_e,
                    xa_s,
                    y[idx],
                    cfg.lam,
                    normalize_cons=cfg.normalize_cons,
                )
            except NonFiniteError as exc:
                abort(str(exc))
            total = loss_total(base, cons, cfg.lam)
            if not np.isfinite(total):
                abort(f"non-finite training loss at epoch {epoch} step {step}")
            updates = {}
            for name in FIELD_NAMES:
                v = MOMENTUM * velocity[name] - cfg.learning_rate * getattr(grads, name)
                velocity[name] = v
                updates[name] = getattr(params, name) + v
            try:
                params = ModelParams(**updates)
            except ValueError:
                abort(f"non-finite parameters at epoch {epoch} step {step}")
            epoch_base += base
            epoch_cons += cons
            steps += 1

        _, val_preds = forward_batch(params, xv_e, xv_s)
        val_mse = loss_base(val_preds, yv)
        if not np.isfinite(val_mse):
            abort(f"non-finite validation loss at epoch {epoch}")
        try:
            val_r2 = r_squared(val_preds, yv)
        except DegenerateTargetsError:
            val_r2 = float("nan")
        entry = {
            "epoch": epoch,
            "train_base": epoch_base / steps,
            "train_cons": epoch_cons / steps,
            "train_total": loss_total(epoch_base / steps, epoch_cons / steps, cfg.lam),
            "val_mse": val_mse,
            "val_r2": val_r2,
            "val_mae": mae(val_preds, yv),
        }
        log.append(entry)
        if val_mse < best_val:
            best_val = val_mse
            best_params = params
            best_epoch = epoch

    for entry in log:
        entry["best_epoch"] = best_epoch
    return best_params, log


# ---------------------------------------------------------------------------
# Checkpoints and logs


def params_to_jsonable(params: ModelParams) -> dict:
    out = {}
    for name in FIELD_NAMES:
        value = getattr(params, name)
        out[name] = value.tolist() if isinstance(value, np.ndarray) else value
    return out


def params_from_jsonable(data: dict) -> ModelParams:
    kwargs = {}
    for name in FIELD_NAMES:
        value = data[name]
        kwargs[name] = float(value) if name == "b_head" else np.asarray(value, dtype=float)
    return ModelParams(**kwargs)
