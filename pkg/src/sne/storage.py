"""Text formats for embeddings and training checkpoints.

Embedding file::

    <num_nodes> <dim> <mode>
    <label> <f1> ... <fdim>
    ...

A checkpoint starts with ``<num_nodes> <dim> checkpoint`` and continues with
named blocks (``[src]``, ``[tgt]``, ``[c_pos]``, ``[c_neg]``, ``[bias]``, the
matching ``[adagrad.*]`` accumulators and a JSON ``[meta]`` line).  Floats
are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .graph import GraphFormatError
from .model import AdagradState, Mode, SneModel, representations

_FMT = "%.17g"


def _write_rows(fh, labels, matrix):
    for label, row in zip(labels, np.atleast_2d(matrix)):
        fh.write(label)
        fh.write(" ")
        fh.write(" ".join(_FMT % x for x in row.tolist()))
        fh.write("\n")


def _write_vector(fh, vec):
    fh.write(" ".join(_FMT % x for x in np.ravel(vec).tolist()))
    fh.write("\n")


def write_embeddings(model: SneModel, labels, path, mode: Mode | str = Mode.CONCAT) -> None:
    mode = Mode(mode)
    reps = representations(model, mode)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{reps.shape[0]} {reps.shape[1]} {mode.value}\n")
        _write_rows(fh, labels, reps)


def read_embeddings(path) -> tuple[list[str], np.ndarray, Mode]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise GraphFormatError("bad embedding header", path, 1)
        n, dim, mode = int(header[0]), int(header[1]), Mode(header[2])
        labels, rows = [], []
        for lineno, line in enumerate(fh, 2):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != dim + 1:
                raise GraphFormatError(f"expected {dim + 1} fields", path, lineno)
            labels.append(fields[0])
            rows.append([float(x) for x in fields[1:]])
    if len(labels) != n:
        raise GraphFormatError(f"header promises {n} rows, found {len(labels)}", path)
    return labels, np.array(rows, dtype=np.float64).reshape(n, dim), mode


def save_checkpoint(path, model: SneModel, state: AdagradState, labels, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta.update(unsigned=model.unsigned, lr=state.lr, eps=state.eps)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.num_nodes} {model.dim} checkpoint\n")
        for prefix, obj in (("", model), ("adagrad.", state)):
            mats = (obj.src_emb, obj.tgt_emb) if obj is model else (obj.src, obj.tgt)
            for name, mat in zip(("src", "tgt"), mats):
                fh.write(f"[{prefix}{name}]\n")
                _write_rows(fh, labels, mat)
            for name in ("c_pos", "c_neg"):
                fh.write(f"[{prefix}{name}]\n")
                _write_vector(fh, getattr(obj, name))
            fh.write(f"[{prefix}bias]\n")
            _write_rows(fh, labels, np.reshape(obj.bias, (-1, 1)))
        fh.write("[meta]\n")
        fh.write(json.dumps(meta, sort_keys=True))
        fh.write("\n")


def load_checkpoint(path) -> tuple[SneModel, AdagradState, list[str], dict]:
    blocks: dict[str, list[list[str]]] = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[2] != "checkpoint":
            raise GraphFormatError("not a checkpoint file", path, 1)
        n, dim = int(header[0]), int(header[1])
        meta_line = None
        for line in fh:
            if line.startswith("["):
                current = line.strip()[1:-1]
                blocks[current] = []
            elif current == "meta":
                meta_line = line
            elif current is not None and line.strip():
                blocks[current].append(line.split())
    if meta_line is None:
        raise GraphFormatError("checkpoint lacks [meta] block", path)
    meta = json.loads(meta_line)

    def matrix(name, width):
        rows = blocks.get(name)
        if rows is None or len(rows) != n:
            raise GraphFormatError(f"block [{name}] missing or truncated", path)
        return np.array([[float(x) for x in r[1:]] for r in rows]).reshape(n, width)

    def vector(name):
        rows = blocks.get(name)
        if not rows:
            raise GraphFormatError(f"block [{name}] missing", path)
        return np.array([float(x) for x in rows[0]])

    labels = [r[0] for r in blocks["src"]]
    c_pos = vector("c_pos")
    c_neg = c_pos if meta["unsigned"] else vector("c_neg")
    model = SneModel(matrix("src", dim), matrix("tgt", dim), c_pos, c_neg, matrix("bias", 1).ravel())
    a_pos = vector("adagrad.c_pos")
    a_neg = a_pos if meta["unsigned"] else vector("adagrad.c_neg")
    state = AdagradState(matrix("adagrad.src", dim), matrix("adagrad.tgt", dim), a_pos, a_neg,
                         matrix("adagrad.bias", 1).ravel(), meta["lr"], meta["eps"])
    return model, state, labels, meta
