"""Node classification and three-class link prediction on learned embeddings.

Both tasks use a one-vs-rest L2-regularised logistic regression trained by
full-batch gradient descent, evaluated with (stratified) k-fold
cross-validation.  Features are standardised with statistics from the
training folds only.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .graph import SignedGraph
from .model import Mode, SneModel, representations


class EdgeOperator(str, enum.Enum):
    AVERAGE = "average"
    HADAMARD = "hadamard"
    L1 = "l1"
    L2 = "l2"


def compose_edge_feature(u: np.ndarray, v: np.ndarray, op: EdgeOperator | str) -> np.ndarray:
    """Combine two node representations (or row-aligned matrices of them)."""
    u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    op = EdgeOperator(op)
    if op is EdgeOperator.AVERAGE:
        return (u + v) / 2.0
    if op is EdgeOperator.HADAMARD:
        return u * v
    if op is EdgeOperator.L1:
        return np.abs(u - v)
    return (u - v) ** 2


# link classes
POSITIVE, NEGATIVE, FAKE = 0, 1, 2


@dataclass(eq=False)
class LinkDataset:
    pairs: np.ndarray  # (n, 2) node ids, features use (u, v) order
    classes: np.ndarray

    @property
    def counts(self) -> dict[int, int]:
        return {c: int(np.count_nonzero(self.classes == c)) for c in (POSITIVE, NEGATIVE, FAKE)}

    def __len__(self) -> int:
        return len(self.classes)


def build_link_dataset(graph: SignedGraph, seed: int = 0, max_tries: int | None = None,
                       subsample_negatives: bool = False) -> LinkDataset:
    """Balanced positive / negative / fake pairs.

    Every negative edge is kept, as many positive edges are drawn without
    replacement, and as many non-adjacent node pairs are rejection-sampled.
    Undirected pairs are stored as ``(min, max)``.

    Having fewer positive than negative edges is an error unless
    ``subsample_negatives`` is set, in which case the negatives are also
    drawn down to the number of positive edges.
    """
    rng = np.random.default_rng(seed)
    src, dst, sgn = graph.edge_src, graph.edge_dst, graph.edge_sign
    if not graph.directed:
        src, dst = np.minimum(src, dst), np.maximum(src, dst)
    edges = np.column_stack([src, dst])
    neg = edges[sgn < 0]
    pos_all = edges[sgn > 0]
    m = len(neg)
    if m == 0:
        raise ValueError("graph has no negative edges")
    if len(pos_all) < m:
        if not subsample_negatives or len(pos_all) == 0:
            raise ValueError(f"only {len(pos_all)} positive edges for {m} negative edges")
        m = len(pos_all)
        neg = neg[np.sort(rng.choice(len(neg), size=m, replace=False))]
    pos = pos_all[np.sort(rng.choice(len(pos_all), size=m, replace=False))]

    n = graph.num_nodes
    all_pairs = n * (n - 1) if graph.directed else n * (n - 1) // 2
    if all_pairs - graph.num_edges < m:
        raise ValueError(f"graph has fewer than {m} non-adjacent pairs")
    budget = max_tries if max_tries is not None else 100 * m + 10_000
    fakes: dict[tuple[int, int], None] = {}
    tries = 0
    while len(fakes) < m:
        batch = rng.integers(0, n, size=(2 * (m - len(fakes)) + 16, 2)).tolist()
        for u, v in batch:
            tries += 1
            if tries > budget:
                raise ValueError(f"could not find {m} fake pairs in {budget} tries")
            if u == v:
                continue
            if not graph.directed and u > v:
                u, v = v, u
            if graph.has_edge(u, v) or (u, v) in fakes:
                continue
            fakes[(u, v)] = None
            if len(fakes) == m:
                break
    fake = np.array(list(fakes), dtype=np.int64).reshape(m, 2)
    pairs = np.concatenate([pos, neg, fake])
    classes = np.repeat([POSITIVE, NEGATIVE, FAKE], m)
    return LinkDataset(pairs, classes)


def kfold_split(n: int, k: int = 10, seed: int = 0, labels=None) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``k`` folds whose sizes differ by at most one.

    With ``labels`` each class is spread over the folds as evenly as possible.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    if labels is None:
        order = rng.permutation(n)
    else:
        labels = np.asarray(labels)
        if len(labels) != n:
            raise ValueError("labels must have length n")
        order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)])
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    return [np.flatnonzero(fold_of == f) for f in range(k)]


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass(eq=False)
class LogRegModel:
    """One-vs-rest logistic regression on standardised features."""

    classes: np.ndarray
    weights: np.ndarray  # (n_features, n_classes)
    intercepts: np.ndarray
    scaler: Standardizer
    lam: float
    iters: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.weights + self.intercepts

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest class index on ties
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _one_vs_rest_targets(y, classes):
    return (y[:, None] == classes[None, :]).astype(np.float64)


def logreg_gradient(model: LogRegModel, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the regularised objective w.r.t. weights and intercepts."""
    Z = model.scaler.transform(X)
    Y = _one_vs_rest_targets(np.asarray(y), model.classes)
    resid = _sigmoid(Z @ model.weights + model.intercepts) - Y
    return Z.T @ resid / len(Z) + model.lam * model.weights, resid.mean(axis=0)


def train_logreg(X, y, lam: float = 1e-4, iters: int = 500, step: float = 0.1) -> LogRegModel:
    """Fit per-class binary logistic losses by gradient descent.

    Minimises ``mean(logloss) + lam / 2 * ||w||^2`` for each class; the
    step at iteration ``t`` is ``step / sqrt(t)``, with the penalty handled
    by a proximal step.  Intercepts are not penalised.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    scaler = Standardizer.fit(X)
    model = LogRegModel(classes, np.zeros((X.shape[1], len(classes))), np.zeros(len(classes)),
                        scaler, lam, iters)
    Z = scaler.transform(X)
    Y = _one_vs_rest_targets(y, classes)
    n = len(Z)
    for t in range(1, iters + 1):
        resid = _sigmoid(Z @ model.weights + model.intercepts) - Y
        eta = step / np.sqrt(t)
        # ridge term applied implicitly so large lam cannot overshoot
        model.weights = (model.weights - eta * (Z.T @ resid / n)) / (1.0 + eta * lam)
        model.intercepts -= eta * resid.mean(axis=0)
    return model


@dataclass(eq=False)
class EvalReport:
    fold_accuracies: list[float]
    confusion: np.ndarray  # rows: true class, columns: predicted
    classes: np.ndarray
    scalers: list[Standardizer] = field(default_factory=list, repr=False)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (self.fold_accuracies == other.fold_accuracies
                and np.array_equal(self.confusion, other.confusion)
                and np.array_equal(self.classes, other.classes))


def cross_validate(X, y, folds: int = 10, seed: int = 0, lam: float = 1e-4, iters: int = 500,
                   stratify: bool = True) -> EvalReport:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    index = {c: i for i, c in enumerate(classes.tolist())}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    accs, scalers = [], []
    splits = kfold_split(len(y), folds, seed, labels=y if stratify else None)
    for test in splits:
        train = np.setdiff1d(np.arange(len(y)), test)
        clf = train_logreg(X[train], y[train], lam, iters)
        pred = clf.predict(X[test])
        accs.append(float(np.mean(pred == y[test])))
        scalers.append(clf.scaler)
        for t, p in zip(y[test].tolist(), pred.tolist()):
            confusion[index[t], index[p]] += 1
    return EvalReport(accs, confusion, classes, scalers)


def _representation_matrix(model, mode) -> np.ndarray:
    if isinstance(model, SneModel):
        return representations(model, mode)
    return np.asarray(model, dtype=np.float64)


def evaluate_node_classification(model: SneModel | np.ndarray, graph: SignedGraph,
                                 mode: Mode | str = Mode.CONCAT, lam: float = 1e-4,
                                 seed: int = 0, folds: int = 10, iters: int = 500) -> EvalReport:
    """Cross-validated accuracy of predicting node classes from representations.

    ``model`` may also be a precomputed representation matrix.
    """
    if not graph.node_classes:
        raise ValueError("graph has no node classes")
    nodes = np.array(sorted(graph.node_classes))
    y = np.array([graph.node_classes[u] for u in nodes.tolist()])
    X = _representation_matrix(model, mode)[nodes]
    return cross_validate(X, y, folds, seed, lam, iters)


def link_features(reps: np.ndarray, pairs: np.ndarray, op: EdgeOperator | str) -> np.ndarray:
    return compose_edge_feature(reps[pairs[:, 0]], reps[pairs[:, 1]], op)


def evaluate_link_prediction(model: SneModel | np.ndarray, graph: SignedGraph,
                             mode: Mode | str = Mode.CONCAT,
                             op: EdgeOperator | str = EdgeOperator.HADAMARD,
                             lam: float = 1e-4, seed: int = 0, folds: int = 10,
                             iters: int = 500, dataset: LinkDataset | None = None,
                             subsample_negatives: bool = False) -> EvalReport:
    """Cross-validated accuracy of the positive / negative / no-edge classifier."""
    if dataset is None:
        dataset = build_link_dataset(graph, seed, subsample_negatives=subsample_negatives)
    X = link_features(_representation_matrix(model, mode), dataset.pairs, op)
    return cross_validate(X, dataset.classes, folds, seed, lam, iters)


def write_eval_report(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "accuracy"])
        for i, acc in enumerate(report.fold_accuracies):
            writer.writerow([i, repr(acc)])
        writer.writerow(["mean", repr(report.mean_accuracy)])


def write_confusion_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\pred", *report.classes.tolist()])
        for c, row in zip(report.classes.tolist(), report.confusion.tolist()):
            writer.writerow([c, *row])
