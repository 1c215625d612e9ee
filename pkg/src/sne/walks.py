"""Uniform random walks and the sliding-window training corpus.

A walk of ``m + 1`` nodes yields ``m + 1 - l`` samples: every window of
``l + 1`` consecutive nodes contributes its first ``l`` nodes (with the
signs of the edges leaving them) as the path and the last node as target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .graph import GraphFormatError, SignedGraph

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 40  # L, number of steps
    walks_per_node: int = 20  # t
    path_len: int = 3  # l; window holds l + 1 nodes
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 1:
            raise ValueError("walk_length must be >= 1")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if not 1 <= self.path_len <= self.walk_length:
            raise ValueError("path_len must be in [1, walk_length]")


class Walk(NamedTuple):
    nodes: np.ndarray  # m + 1 node ids
    signs: np.ndarray  # m signs, signs[i] is the sign of nodes[i] -> nodes[i+1]


class WalkSample(NamedTuple):
    path: tuple[int, ...]
    signs: tuple[int, ...]
    target: int

    def to_line(self) -> str:
        ctx = " ".join(f"{u}:{'+' if s > 0 else '-'}" for u, s in zip(self.path, self.signs))
        return f"{ctx} {self.target}"


def walk_rng(seed: int, node: int, walk_index: int) -> np.random.Generator:
    """Independent generator for one (start node, walk index) pair."""
    ss = np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(node, walk_index))
    return np.random.Generator(np.random.PCG64(ss))


def random_walk(graph: SignedGraph, start: int, walk_length: int, rng: np.random.Generator) -> Walk:
    """Walk up to ``walk_length`` steps, choosing out-neighbours uniformly.

    Stops early at a node without out-neighbours.
    """
    if not 0 <= start < graph.num_nodes:
        raise IndexError(f"start node {start} out of range")
    indptr, indices, signs = graph.indptr, graph.indices, graph.signs
    draws = rng.random(walk_length)
    nodes = [start]
    steps = []
    u = start
    for x in draws:
        lo, hi = indptr[u], indptr[u + 1]
        if hi == lo:
            break
        j = lo + int(x * (hi - lo))
        steps.append(signs[j])
        u = int(indices[j])
        nodes.append(u)
    return Walk(np.array(nodes, dtype=np.int64), np.array(steps, dtype=np.int8))


def generate_walks(graph: SignedGraph, cfg: WalkConfig) -> Iterator[Walk]:
    """All walks in corpus order: ascending start node, ``t`` walks each."""
    for u in range(graph.num_nodes):
        for w in range(cfg.walks_per_node):
            yield random_walk(graph, u, cfg.walk_length, walk_rng(cfg.seed, u, w))


@dataclass(eq=False)
class Corpus:
    """Training samples stored column-wise.

    ``paths`` and ``signs`` are ``(n, l)`` arrays, ``targets`` has length n.
    Iterating yields :class:`WalkSample` tuples.
    """

    paths: np.ndarray
    signs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.paths = np.asarray(self.paths, dtype=np.int64)
        self.signs = np.asarray(self.signs, dtype=np.int8)
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.paths.ndim != 2 or self.paths.shape != self.signs.shape:
            raise ValueError("paths and signs must be matching 2-D arrays")
        if len(self.targets) != len(self.paths):
            raise ValueError("one target per path required")

    @classmethod
    def empty(cls, path_len: int = 1) -> "Corpus":
        return cls(np.empty((0, path_len)), np.empty((0, path_len)), np.empty(0))

    @classmethod
    def from_samples(cls, samples: Iterable[WalkSample], path_len: int | None = None) -> "Corpus":
        samples = list(samples)
        if not samples:
            return cls.empty(path_len or 1)
        return cls(
            [s.path for s in samples], [s.signs for s in samples], [s.target for s in samples]
        )

    @property
    def path_len(self) -> int:
        return self.paths.shape[1]

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, i: int) -> WalkSample:
        return WalkSample(
            tuple(self.paths[i].tolist()), tuple(self.signs[i].tolist()), int(self.targets[i])
        )

    def __iter__(self) -> Iterator[WalkSample]:
        for p, s, t in zip(self.paths.tolist(), self.signs.tolist(), self.targets.tolist()):
            yield WalkSample(tuple(p), tuple(s), t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            np.array_equal(self.paths, other.paths)
            and np.array_equal(self.signs, other.signs)
            and np.array_equal(self.targets, other.targets)
        )


def _windows(walk: Walk, path_len: int):
    n_win = len(walk.nodes) - path_len
    if n_win <= 0:
        return None
    idx = np.arange(n_win)[:, None] + np.arange(path_len)
    return walk.nodes[idx], walk.signs[idx], walk.nodes[path_len:]


def iter_samples(graph: SignedGraph, cfg: WalkConfig) -> Iterator[WalkSample]:
    """Stream samples without materialising the corpus."""
    for walk in generate_walks(graph, cfg):
        win = _windows(walk, cfg.path_len)
        if win is None:
            continue
        for p, s, t in zip(*(a.tolist() for a in win)):
            yield WalkSample(tuple(p), tuple(s), t)


def generate_samples(graph: SignedGraph, cfg: WalkConfig) -> Corpus:
    """Build the full corpus; same output as :func:`iter_samples`."""
    chunks = [_windows(walk, cfg.path_len) for walk in generate_walks(graph, cfg)]
    chunks = [c for c in chunks if c is not None]
    if not chunks:
        return Corpus.empty(cfg.path_len)
    paths, signs, targets = (np.concatenate(c) for c in zip(*chunks))
    return Corpus(paths, signs, targets)


def write_corpus(samples: Iterable[WalkSample] | Corpus, path) -> int:
    """Write one sample per line as ``n1:s1 ... nl:sl target``; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(sample.to_line())
            fh.write("\n")
            count += 1
    return count


def parse_sample(line: str) -> WalkSample:
    fields = line.split()
    if len(fields) < 2:
        raise ValueError("need at least one path node and a target")
    path, signs = [], []
    for tok in fields[:-1]:
        node, sep, sym = tok.rpartition(":")
        if not sep or sym not in "+-" or len(sym) != 1:
            raise ValueError(f"bad path token {tok!r}")
        path.append(int(node))
        signs.append(1 if sym == "+" else -1)
    return WalkSample(tuple(path), tuple(signs), int(fields[-1]))


def iter_corpus_file(path) -> Iterator[WalkSample]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse_sample(line)
            except ValueError as exc:
                raise GraphFormatError(str(exc), path, lineno) from None


def read_corpus(path) -> Corpus:
    samples = list(iter_corpus_file(path))
    if samples and len({len(s.path) for s in samples}) != 1:
        raise GraphFormatError("samples have inconsistent path lengths", path)
    return Corpus.from_samples(samples)


def check_corpus(graph: SignedGraph, corpus: Iterable[WalkSample]) -> None:
    """Raise ``AssertionError`` unless every sample follows real signed edges."""
    for i, s in enumerate(corpus):
        chain = list(s.path) + [s.target]
        for j, sgn in enumerate(s.signs):
            actual = graph.sign(chain[j], chain[j + 1])
            if actual is None or int(actual) != sgn:
                raise AssertionError(
                    f"sample {i}: step {chain[j]}->{chain[j + 1]} sign {sgn} not in graph"
                )


__all__ = [
    "Corpus", "Walk", "WalkConfig", "WalkSample", "check_corpus", "generate_samples",
    "generate_walks", "iter_corpus_file", "iter_samples", "parse_sample", "random_walk",
    "read_corpus", "walk_rng", "write_corpus",
]
