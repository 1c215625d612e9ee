"""Signed, optionally directed graphs and their edge-list file formats.

Edge-list lines are ``<src> <dst> <sign>`` with ``sign`` in ``{1, -1}``;
node-class lines are ``<node> <class>``.  Lines starting with ``#`` are
comments, fields may be separated by any whitespace.
"""

from __future__ import annotations

import enum
import logging
import os
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for unparsable edge-list or class files."""

    def __init__(self, message: str, path=None, lineno: int | None = None):
        where = ""
        if path is not None:
            where = f"{os.fspath(path)}"
        if lineno is not None:
            where = f"{where}:{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.lineno = lineno


class Sign(enum.IntEnum):
    POSITIVE = 1
    NEGATIVE = -1

    def __neg__(self) -> "Sign":
        return Sign(-int(self))

    @property
    def symbol(self) -> str:
        return "+" if self is Sign.POSITIVE else "-"

    @classmethod
    def from_symbol(cls, text: str) -> "Sign":
        if text == "+":
            return cls.POSITIVE
        if text == "-":
            return cls.NEGATIVE
        raise ValueError(f"invalid sign symbol {text!r}")


@dataclass(frozen=True)
class LoadReport:
    """What the loader silently repaired."""

    duplicates: int = 0
    self_loops: int = 0
    conflicts_dropped: int = 0


class GraphStats(NamedTuple):
    num_nodes: int
    positive: int
    negative: int

    def __str__(self) -> str:
        return f"{self.num_nodes} nodes, {self.positive} positive, {self.negative} negative"


@dataclass(eq=False)
class SignedGraph:
    """Signed graph over dense node ids ``0..num_nodes-1``.

    The canonical edge list (``edge_src``, ``edge_dst``, ``edge_sign``) holds
    every edge once, in file order and orientation.  For undirected graphs
    the adjacency (CSR arrays ``indptr``, ``indices``, ``signs``) stores
    both directions.
    """

    labels: list[str]
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_sign: np.ndarray
    directed: bool = False
    node_classes: dict[int, int] = field(default_factory=dict)
    load_report: LoadReport = field(default_factory=LoadReport)

    def __post_init__(self):
        self.edge_src = np.asarray(self.edge_src, dtype=np.int64)
        self.edge_dst = np.asarray(self.edge_dst, dtype=np.int64)
        self.edge_sign = np.asarray(self.edge_sign, dtype=np.int8)
        n = len(self.labels)
        if not (len(self.edge_src) == len(self.edge_dst) == len(self.edge_sign)):
            raise ValueError("edge arrays must have equal length")
        if len(self.edge_src) and (
            min(self.edge_src.min(), self.edge_dst.min()) < 0
            or max(self.edge_src.max(), self.edge_dst.max()) >= n
        ):
            raise ValueError("edge endpoint out of range")
        if np.any(self.edge_src == self.edge_dst):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.isin(self.edge_sign, (1, -1))):
            raise ValueError("signs must be +1 or -1")
        self._index = {label: i for i, label in enumerate(self.labels)}
        if len(self._index) != n:
            raise ValueError("node labels must be unique")

        if self.directed:
            src, dst, sgn = self.edge_src, self.edge_dst, self.edge_sign
        else:
            # interleave forward/backward arcs so adjacency order follows file order
            src = np.column_stack([self.edge_src, self.edge_dst]).ravel()
            dst = np.column_stack([self.edge_dst, self.edge_src]).ravel()
            sgn = np.repeat(self.edge_sign, 2)
        order = np.argsort(src, kind="stable")
        self.indices = dst[order]
        self.signs = sgn[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        pairs = zip(src.tolist(), dst.tolist())
        self._arcs = dict(zip(pairs, sgn.tolist()))
        if len(self._arcs) != len(src):
            raise ValueError("duplicate edge for an ordered pair")

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        """Edge count, each undirected edge counted once."""
        return len(self.edge_src)

    @property
    def num_arcs(self) -> int:
        """Number of stored directed adjacency entries."""
        return len(self.indices)

    def node_id(self, label: str) -> int:
        return self._index[label]

    def degree(self, u: int | None = None):
        deg = np.diff(self.indptr)
        return deg if u is None else int(deg[u])

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Out-neighbour ids and signs of ``u`` as array views."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.indices[lo:hi], self.signs[lo:hi]

    def out_edges(self, u: int) -> list[tuple[int, Sign]]:
        nbrs, sgns = self.neighbors(u)
        return [(int(v), Sign(int(s))) for v, s in zip(nbrs, sgns)]

    def sign(self, u: int, v: int) -> Sign | None:
        s = self._arcs.get((u, v))
        return None if s is None else Sign(s)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._arcs

    def arcs(self) -> Iterator[tuple[int, int, int]]:
        """Iterate stored (u, v, sign) adjacency entries in CSR order."""
        for u in range(self.num_nodes):
            lo, hi = self.indptr[u], self.indptr[u + 1]
            for v, s in zip(self.indices[lo:hi].tolist(), self.signs[lo:hi].tolist()):
                yield u, v, s

    def sign_matrix(self) -> np.ndarray:
        """Dense ``num_nodes x num_nodes`` matrix of signs (0 for no edge)."""
        mat = np.zeros((self.num_nodes, self.num_nodes), dtype=np.int8)
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.indptr))
        mat[rows, self.indices] = self.signs
        return mat

    def with_classes(self, classes: dict[int, int]) -> "SignedGraph":
        return SignedGraph(
            self.labels, self.edge_src, self.edge_dst, self.edge_sign,
            directed=self.directed, node_classes=dict(classes),
            load_report=self.load_report,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedGraph):
            return NotImplemented
        return (
            self.directed == other.directed
            and self.labels == other.labels
            and np.array_equal(self.edge_src, other.edge_src)
            and np.array_equal(self.edge_dst, other.edge_dst)
            and np.array_equal(self.edge_sign, other.edge_sign)
            and self.node_classes == other.node_classes
        )

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"<SignedGraph {kind} nodes={self.num_nodes} edges={self.num_edges}>"


def _data_lines(path) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def load_edge_list(path, directed: bool = False, resolve_conflicts: str = "error") -> SignedGraph:
    """Read a signed edge list.

    Node ids are assigned in order of first appearance.  Repeated edges keep
    the first occurrence; self-loops are dropped.  An ordered pair (or
    unordered pair, for undirected graphs) listed with both signs raises
    :class:`GraphFormatError`, unless ``resolve_conflicts="drop"``, which
    removes that pair entirely.
    """
    if resolve_conflicts not in ("error", "drop"):
        raise ValueError("resolve_conflicts must be 'error' or 'drop'")
    index: dict[str, int] = {}
    labels: list[str] = []
    seen: dict[tuple[int, int], int] = {}  # pair -> position in edges
    edges: list[tuple[int, int, int] | None] = []
    conflicted: set[tuple[int, int]] = set()
    duplicates = self_loops = 0
    n_lines = 0

    def node(label: str) -> int:
        i = index.get(label)
        if i is None:
            i = index[label] = len(labels)
            labels.append(label)
        return i

    for lineno, fields in _data_lines(path):
        n_lines += 1
        if len(fields) != 3:
            raise GraphFormatError(f"expected 3 fields, got {len(fields)}", path, lineno)
        if fields[2] not in ("1", "-1"):
            raise GraphFormatError(f"sign must be 1 or -1, got {fields[2]!r}", path, lineno)
        s = int(fields[2])
        u, v = node(fields[0]), node(fields[1])
        if u == v:
            self_loops += 1
            continue
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in conflicted:
            continue
        pos = seen.get(key)
        if pos is None:
            seen[key] = len(edges)
            edges.append((u, v, s))
        elif edges[pos][2] == s:
            duplicates += 1
        elif resolve_conflicts == "drop":
            edges[pos] = None
            conflicted.add(key)
        else:
            raise GraphFormatError(
                f"conflicting signs for pair ({fields[0]}, {fields[1]})", path, lineno
            )
    if n_lines == 0:
        raise GraphFormatError("edge list is empty", path)

    kept = [e for e in edges if e is not None]
    if self_loops:
        logger.warning("dropped %d self-loop(s) from %s", self_loops, path)
    if duplicates:
        logger.warning("ignored %d duplicate edge(s) in %s", duplicates, path)
    if conflicted:
        logger.warning("dropped %d conflicting pair(s) in %s", len(conflicted), path)
    arr = np.array(kept, dtype=np.int64).reshape(-1, 3)
    return SignedGraph(
        labels, arr[:, 0], arr[:, 1], arr[:, 2], directed=directed,
        load_report=LoadReport(duplicates, self_loops, len(conflicted)),
    )


def write_edge_list(graph: SignedGraph, path, preserve_order: bool = True) -> None:
    """Write the canonical edge list.

    With ``preserve_order`` the file reloads to an identical graph: nodes
    that would otherwise be first seen out of id order, or not at all, are
    declared by self-loop lines, which the loader drops while still
    registering the node.  Without it only edge-less nodes are declared,
    at the end.
    """
    labels = graph.labels
    introduced = 0

    def declare(fh, upto):
        for x in range(introduced, upto):
            fh.write(f"{labels[x]}\t{labels[x]}\t1\n")

    with open(path, "w", encoding="utf-8") as fh:
        for u, v, s in zip(graph.edge_src.tolist(), graph.edge_dst.tolist(), graph.edge_sign.tolist()):
            if preserve_order:
                new = [x for x in (u, v) if x >= introduced]
                if new != list(range(introduced, introduced + len(new))):
                    declare(fh, max(u, v) + 1)
            fh.write(f"{labels[u]}\t{labels[v]}\t{s}\n")
            introduced = max(introduced, u + 1, v + 1)
        if preserve_order:
            declare(fh, graph.num_nodes)
        else:
            linked = (graph.degree() > 0) | (np.bincount(graph.indices, minlength=graph.num_nodes) > 0)
            for x in np.flatnonzero(~linked).tolist():
                fh.write(f"{labels[x]}\t{labels[x]}\t1\n")


def load_node_classes(path, graph: SignedGraph) -> SignedGraph:
    """Attach integer class labels from a ``<node> <class>`` file."""
    classes: dict[int, int] = {}
    for lineno, fields in _data_lines(path):
        if len(fields) != 2:
            raise GraphFormatError(f"expected 2 fields, got {len(fields)}", path, lineno)
        try:
            u = graph.node_id(fields[0])
        except KeyError:
            raise GraphFormatError(f"unknown node {fields[0]!r}", path, lineno) from None
        try:
            classes[u] = int(fields[1])
        except ValueError:
            raise GraphFormatError(f"class must be an integer, got {fields[1]!r}", path, lineno) from None
    return graph.with_classes(classes)


def write_node_classes(graph: SignedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in sorted(graph.node_classes):
            fh.write(f"{graph.labels[u]}\t{graph.node_classes[u]}\n")


def degree_stats(graph: SignedGraph) -> GraphStats:
    positive = int(np.count_nonzero(graph.edge_sign > 0))
    return GraphStats(graph.num_nodes, positive, graph.num_edges - positive)
