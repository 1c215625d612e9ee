"""Training loop: corpus generation, sampled softmax and Adagrad."""

from __future__ import annotations

import csv
import logging
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import SignedGraph
from .model import (
    AdagradState,
    NegativeSampler,
    SampledSoftmaxConfig,
    SneModel,
    adagrad_step,
    sampled_softmax_nll_grad,
)
from .storage import load_checkpoint, save_checkpoint
from .walks import Corpus, WalkConfig, WalkSample, generate_samples, read_corpus

logger = logging.getLogger(__name__)

# spawn keys for the independent random streams derived from the seed
_INIT, _NEGATIVES, _SHUFFLE, _WORKER = 1, 2, 3, 4


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    walk: WalkConfig = field(default_factory=WalkConfig)
    neg_samples: int = 512
    distribution: str = "uniform"
    correction: bool = True
    lr: float = 0.1
    eps: float = 1e-8
    epochs: int = 5
    seed: int = 0
    unsigned_ablation: bool = False
    shuffle: bool = False
    checkpoint_every: int = 0  # samples between checkpoints, 0 disables
    checkpoint_path: str | None = None
    workers: int = 1  # >1 runs lock-free threads; results are not reproducible

    def __post_init__(self):
        for name in ("dim", "neg_samples", "epochs", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.checkpoint_every and not self.checkpoint_path:
            raise ValueError("checkpoint_every requires checkpoint_path")
        if self.checkpoint_every and self.workers > 1:
            raise ValueError("checkpointing is only supported with workers=1")

    @property
    def softmax(self) -> SampledSoftmaxConfig:
        return SampledSoftmaxConfig(self.neg_samples, self.distribution, self.correction)


@dataclass
class TrainReport:
    epoch_losses: list[float]
    wall_time: float
    samples_processed: int
    corpus_size: int
    full_softmax: bool = False
    optimizer: AdagradState | None = field(default=None, repr=False)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed & ((1 << 64) - 1), spawn_key=key))


def _epoch_order(cfg: TrainConfig, epoch: int, size: int) -> np.ndarray:
    if cfg.shuffle:
        return _rng(cfg.seed, _SHUFFLE, epoch).permutation(size)
    return np.arange(size)


def _run_slice(model, state, corpus, order, cfg, sampler, rng) -> float:
    softmax = cfg.softmax
    paths, signs, targets = corpus.paths, corpus.signs, corpus.targets
    total = 0.0
    for i in order.tolist():
        sample = WalkSample(paths[i], signs[i], targets[i])
        grads = sampled_softmax_nll_grad(model, sample, softmax, rng, sampler)
        adagrad_step(model, state, grads)
        total += grads.loss
    return total


def train(graph: SignedGraph, cfg: TrainConfig, corpus: Corpus | str | None = None,
          resume: str | None = None) -> tuple[SneModel, TrainReport]:
    """Train node embeddings on ``graph``.

    ``corpus`` may be a :class:`Corpus`, a corpus file path, or ``None`` to
    generate one from ``cfg.walk``.  ``resume`` names a checkpoint written
    by an earlier run with the same graph, corpus and config.
    """
    start = time.perf_counter()
    if graph.num_edges == 0:
        raise ValueError("graph has no edges, nothing to train on")
    if corpus is None:
        corpus = generate_samples(graph, cfg.walk)
    elif not isinstance(corpus, Corpus):
        corpus = read_corpus(corpus)
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    if corpus.paths.max() >= graph.num_nodes or corpus.targets.max() >= graph.num_nodes:
        raise ValueError("corpus references nodes outside the graph")

    sampler = NegativeSampler(graph.num_nodes, cfg.softmax, degrees=graph.degree())
    if sampler.falls_back:
        logger.info("neg_samples=%d >= |V|=%d, using the full softmax",
                    cfg.neg_samples, graph.num_nodes)
    rng = _rng(cfg.seed, _NEGATIVES)
    first_epoch, offset, loss_sum, epoch_losses = 0, 0, 0.0, []
    if resume is not None:
        model, state, _, meta = load_checkpoint(resume)
        if meta["corpus_size"] != len(corpus) or model.num_nodes != graph.num_nodes:
            raise ValueError("checkpoint does not match this graph/corpus")
        first_epoch, offset = meta["epoch"], meta["offset"]
        loss_sum, epoch_losses = meta["loss_sum"], list(meta["epoch_losses"])
        rng.bit_generator.state = meta["rng_state"]
    else:
        model = SneModel.init(graph.num_nodes, cfg.dim, _rng(cfg.seed, _INIT),
                              unsigned=cfg.unsigned_ablation)
        state = AdagradState.for_model(model, cfg.lr, cfg.eps)

    n = len(corpus)
    for epoch in range(first_epoch, cfg.epochs):
        order = _epoch_order(cfg, epoch, n)
        if cfg.workers > 1:
            loss_sum += _run_parallel(model, state, corpus, order[offset:], cfg, sampler, epoch)
        elif cfg.checkpoint_every:
            while offset < n:
                stop = min(n, offset + cfg.checkpoint_every)
                loss_sum += _run_slice(model, state, corpus, order[offset:stop], cfg, sampler, rng)
                offset = stop
                meta = dict(epoch=epoch, offset=offset, loss_sum=loss_sum,
                            epoch_losses=epoch_losses, corpus_size=n,
                            rng_state=rng.bit_generator.state)
                if offset == n:
                    meta.update(epoch=epoch + 1, offset=0, loss_sum=0.0,
                                epoch_losses=epoch_losses + [loss_sum / n])
                save_checkpoint(cfg.checkpoint_path, model, state, graph.labels, meta)
        else:
            loss_sum += _run_slice(model, state, corpus, order[offset:], cfg, sampler, rng)
        epoch_losses.append(loss_sum / n)
        logger.info("epoch %d/%d: mean nll %.6f", epoch + 1, cfg.epochs, epoch_losses[-1])
        offset, loss_sum = 0, 0.0

    report = TrainReport(epoch_losses, time.perf_counter() - start, n * cfg.epochs, n,
                         sampler.falls_back, state)
    return model, report


def _run_parallel(model, state, corpus, order, cfg, sampler, epoch) -> float:
    shards = np.array_split(order, cfg.workers)
    losses = [0.0] * cfg.workers

    def work(w):
        rng = _rng(cfg.seed, _WORKER, epoch, w)
        losses[w] = _run_slice(model, state, corpus, shards[w], cfg, sampler, rng)

    threads = [threading.Thread(target=work, args=(w,)) for w in range(cfg.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return sum(losses)


def training_loss_curve(report: TrainReport) -> list[tuple[int, float]]:
    return [(i + 1, loss) for i, loss in enumerate(report.epoch_losses)]


def write_loss_csv(report: TrainReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "mean_nll"])
        for epoch, loss in training_loss_curve(report):
            writer.writerow([epoch, repr(loss)])
