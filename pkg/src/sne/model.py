"""Log-bilinear signed path model.

For a sample with path ``u_1..u_l``, edge signs ``e_1..e_l`` and target
``v`` the model predicts

    h = sum_i c[e_i] * src[u_i]          (element-wise products)

and scores every node ``w`` by ``h . tgt[w] + bias[w]``.  Training minimises
the negative log softmax probability of the true target, either over all
nodes or over the target plus ``k`` sampled negatives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Mode(str, enum.Enum):
    """Which embeddings make up a node's representation."""

    SOURCE = "s"
    CONCAT = "st"


class Distribution(str, enum.Enum):
    UNIFORM = "uniform"
    LOG_UNIFORM = "log-uniform"


@dataclass(frozen=True)
class SampledSoftmaxConfig:
    num_samples: int = 512
    distribution: Distribution = Distribution.UNIFORM
    correction: bool = True

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        object.__setattr__(self, "distribution", Distribution(self.distribution))


@dataclass(eq=False)
class SneModel:
    """Model parameters.

    With ``unsigned=True`` the positive and negative context vectors are one
    shared array (``c_neg is c_pos``), which removes sign information.
    """

    src_emb: np.ndarray
    tgt_emb: np.ndarray
    c_pos: np.ndarray
    c_neg: np.ndarray
    bias: np.ndarray

    @classmethod
    def init(cls, num_nodes: int, dim: int, rng: np.random.Generator,
             unsigned: bool = False) -> "SneModel":
        if num_nodes < 1 or dim < 1:
            raise ValueError("num_nodes and dim must be positive")
        scale = 0.5 / dim
        src = rng.uniform(-scale, scale, size=(num_nodes, dim))
        tgt = rng.uniform(-scale, scale, size=(num_nodes, dim))
        c_pos = 1.0 + rng.uniform(-0.01, 0.01, size=dim)
        c_neg = c_pos if unsigned else 1.0 + rng.uniform(-0.01, 0.01, size=dim)
        return cls(src, tgt, c_pos, c_neg, np.zeros(num_nodes))

    @property
    def num_nodes(self) -> int:
        return self.src_emb.shape[0]

    @property
    def dim(self) -> int:
        return self.src_emb.shape[1]

    @property
    def unsigned(self) -> bool:
        return self.c_neg is self.c_pos

    def copy(self) -> "SneModel":
        c_pos = self.c_pos.copy()
        c_neg = c_pos if self.unsigned else self.c_neg.copy()
        return SneModel(self.src_emb.copy(), self.tgt_emb.copy(), c_pos, c_neg, self.bias.copy())

    def context(self, signs) -> np.ndarray:
        """Rows of signed-type vectors selected by ``signs`` (shape ``(l, d)``)."""
        signs = np.asarray(signs)
        return np.where(signs[:, None] > 0, self.c_pos, self.c_neg)


@dataclass(eq=False)
class AdagradState:
    """Squared-gradient accumulators, shaped like the model parameters."""

    src: np.ndarray
    tgt: np.ndarray
    c_pos: np.ndarray
    c_neg: np.ndarray
    bias: np.ndarray
    lr: float = 0.1
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: SneModel, lr: float = 0.1, eps: float = 1e-8) -> "AdagradState":
        c_pos = np.zeros(model.dim)
        c_neg = c_pos if model.unsigned else np.zeros(model.dim)
        return cls(
            np.zeros_like(model.src_emb), np.zeros_like(model.tgt_emb),
            c_pos, c_neg, np.zeros(model.num_nodes), lr, eps,
        )


@dataclass(eq=False)
class Gradients:
    """Sparse gradient of one sample's loss.

    Row arrays hold distinct node ids; ``src``/``tgt``/``bias`` hold the
    matching gradient rows.  In unsigned mode ``c_pos`` and ``c_neg`` are
    the same array holding the full gradient of the shared vector.
    """

    loss: float
    src_rows: np.ndarray
    src: np.ndarray
    tgt_rows: np.ndarray
    tgt: np.ndarray
    bias_rows: np.ndarray
    bias: np.ndarray
    c_pos: np.ndarray
    c_neg: np.ndarray
    full: bool = False


def _as_arrays(sample):
    return (np.asarray(sample.path, dtype=np.int64),
            np.asarray(sample.signs, dtype=np.int8),
            int(sample.target))


def predict_embedding(model: SneModel, sample) -> np.ndarray:
    path, signs, _ = _as_arrays(sample)
    return (model.context(signs) * model.src_emb[path]).sum(axis=0)


def score(model: SneModel, h: np.ndarray, v: int) -> float:
    return float(h @ model.tgt_emb[v] + model.bias[v])


def _log_softmax_at(scores: np.ndarray, i: int) -> tuple[float, np.ndarray]:
    shift = scores - scores.max()
    expd = np.exp(shift)
    total = expd.sum()
    return float(np.log(total) - shift[i]), expd / total


def softmax_probs(model: SneModel, sample) -> np.ndarray:
    """p(w | path, signs) for every node w."""
    h = predict_embedding(model, sample)
    _, probs = _log_softmax_at(model.tgt_emb @ h + model.bias, 0)
    return probs


def full_softmax_nll(model: SneModel, sample) -> float:
    h = predict_embedding(model, sample)
    loss, _ = _log_softmax_at(model.tgt_emb @ h + model.bias, int(sample.target))
    return loss


def _backprop_path(model: SneModel, path, signs, ctx, dh):
    """Gradients of the path-side parameters given dL/dh."""
    grad_rows = ctx * dh
    if len(path) == 1:
        rows, grad_src = path, grad_rows
    else:
        rows, inverse = np.unique(path, return_inverse=True)
        grad_src = np.zeros((len(rows), model.dim))
        np.add.at(grad_src, inverse, grad_rows)
    contrib = model.src_emb[path] * dh
    pos = signs > 0
    g_pos = contrib[pos].sum(axis=0)
    g_neg = contrib[~pos].sum(axis=0)
    if model.unsigned:
        g_pos = g_neg = g_pos + g_neg
    return rows, grad_src, g_pos, g_neg


def full_softmax_nll_grad(model: SneModel, sample) -> Gradients:
    """Loss and exact gradients of the full-softmax negative log-likelihood."""
    path, signs, target = _as_arrays(sample)
    ctx = model.context(signs)
    h = (ctx * model.src_emb[path]).sum(axis=0)
    loss, probs = _log_softmax_at(model.tgt_emb @ h + model.bias, target)
    dscore = probs
    dscore[target] -= 1.0
    dh = dscore @ model.tgt_emb
    rows, grad_src, g_pos, g_neg = _backprop_path(model, path, signs, ctx, dh)
    every = np.arange(model.num_nodes)
    return Gradients(loss, rows, grad_src, every, np.outer(dscore, h),
                     every, dscore, g_pos, g_neg, full=True)


class NegativeSampler:
    """Draws distinct negative candidates, never the true target.

    ``degrees`` is needed for the log-uniform distribution, which ranks
    nodes by decreasing degree and gives rank ``r`` weight
    ``log((r + 2) / (r + 1))``.
    """

    def __init__(self, num_nodes: int, cfg: SampledSoftmaxConfig, degrees=None):
        self.num_nodes = num_nodes
        self.cfg = cfg
        self.probs = None
        if cfg.distribution is Distribution.LOG_UNIFORM:
            if degrees is None:
                raise ValueError("log-uniform sampling needs node degrees")
            ranks = np.empty(num_nodes, dtype=np.int64)
            ranks[np.argsort(-np.asarray(degrees), kind="stable")] = np.arange(num_nodes)
            weights = np.log((ranks + 2.0) / (ranks + 1.0))
            self.probs = weights / weights.sum()

    @property
    def falls_back(self) -> bool:
        return self.cfg.num_samples >= self.num_nodes

    def sample(self, target: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Negatives and their proposal probabilities (renormalised without the target)."""
        n, k = self.num_nodes, self.cfg.num_samples
        if k > n - 1:
            raise ValueError(f"cannot draw {k} distinct negatives from {n - 1} nodes")
        if self.probs is None:
            negs = rng.choice(n - 1, size=k, replace=False)
            negs[negs >= target] += 1
            return negs, np.full(k, 1.0 / (n - 1))
        q = self.probs.copy()
        q[target] = 0.0
        q /= q.sum()
        chosen: dict[int, None] = {}
        while len(chosen) < k:
            # with-replacement draws; collisions and repeats are redrawn
            for w in rng.choice(n, size=2 * (k - len(chosen)), p=q).tolist():
                if w not in chosen:
                    chosen[w] = None
                    if len(chosen) == k:
                        break
        negs = np.fromiter(chosen, dtype=np.int64, count=k)
        return negs, q[negs]


def candidate_nll_grad(model: SneModel, sample, negatives: np.ndarray,
                       neg_probs: np.ndarray | None = None) -> Gradients:
    """Sampled-softmax loss over ``{target} + negatives`` and its exact gradients.

    If ``neg_probs`` is given, each negative's score is lowered by
    ``log(k * q)``.  The target is always a candidate, so its correction is
    zero.
    """
    path, signs, target = _as_arrays(sample)
    negatives = np.asarray(negatives, dtype=np.int64)
    cand = np.concatenate(([target], negatives))
    ctx = model.context(signs)
    h = (ctx * model.src_emb[path]).sum(axis=0)
    t_rows = model.tgt_emb[cand]
    scores = t_rows @ h + model.bias[cand]
    if neg_probs is not None:
        scores[1:] -= np.log(len(negatives) * np.asarray(neg_probs))
    loss, probs = _log_softmax_at(scores, 0)
    dscore = probs
    dscore[0] -= 1.0
    dh = dscore @ t_rows
    rows, grad_src, g_pos, g_neg = _backprop_path(model, path, signs, ctx, dh)
    return Gradients(loss, rows, grad_src, cand, np.outer(dscore, h), cand, dscore, g_pos, g_neg)


def sampled_softmax_nll_grad(model: SneModel, sample, cfg: SampledSoftmaxConfig,
                             rng: np.random.Generator,
                             sampler: NegativeSampler | None = None) -> Gradients:
    """Draw negatives and return the sampled loss with its gradients.

    When ``k >= |V|`` the full softmax is used instead and the result has
    ``full=True``.
    """
    if sampler is None:
        sampler = NegativeSampler(model.num_nodes, cfg)
    if sampler.falls_back:
        return full_softmax_nll_grad(model, sample)
    negs, q = sampler.sample(int(sample.target), rng)
    return candidate_nll_grad(model, sample, negs, q if cfg.correction else None)


def _adagrad_rows(param, acc, rows, grad, lr, eps):
    acc_rows = acc[rows] + grad * grad
    acc[rows] = acc_rows
    param[rows] -= lr * grad / (np.sqrt(acc_rows) + eps)


def _adagrad_dense(param, acc, grad, lr, eps):
    buf = np.square(grad)
    acc += buf
    np.sqrt(acc, out=buf)
    buf += eps
    np.divide(grad, buf, out=buf)
    buf *= lr
    param -= buf


def adagrad_step(model: SneModel, state: AdagradState, grads: Gradients) -> None:
    """Apply one sparse Adagrad update in place.

    Only rows listed in ``grads`` are touched.
    """
    lr, eps = state.lr, state.eps
    _adagrad_rows(model.src_emb, state.src, grads.src_rows, grads.src, lr, eps)
    if grads.full:
        _adagrad_dense(model.tgt_emb, state.tgt, grads.tgt, lr, eps)
        _adagrad_dense(model.bias, state.bias, grads.bias, lr, eps)
    else:
        _adagrad_rows(model.tgt_emb, state.tgt, grads.tgt_rows, grads.tgt, lr, eps)
        _adagrad_rows(model.bias, state.bias, grads.bias_rows, grads.bias, lr, eps)
    _adagrad_dense(model.c_pos, state.c_pos, grads.c_pos, lr, eps)
    if not model.unsigned:
        _adagrad_dense(model.c_neg, state.c_neg, grads.c_neg, lr, eps)


def node_representation(model: SneModel, v: int, mode: Mode | str = Mode.CONCAT) -> np.ndarray:
    if Mode(mode) is Mode.SOURCE:
        return model.src_emb[v].copy()
    return np.concatenate([model.src_emb[v], model.tgt_emb[v]])


def representations(model: SneModel, mode: Mode | str = Mode.CONCAT) -> np.ndarray:
    """Representation matrix for all nodes, one row per node id."""
    if Mode(mode) is Mode.SOURCE:
        return model.src_emb.copy()
    return np.hstack([model.src_emb, model.tgt_emb])
