"""Round records and the reductions reported from them: accuracy mean/std over
nodes, per-community averaged confusion matrices, group gaps and stragglers."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UsageError


@dataclass
class RoundRecord:
    """Per-round evaluation results for every node."""

    round: int
    per_node_accuracy: np.ndarray
    per_node_loss: np.ndarray
    confusions: list = None  # optional list of (C, C) int64 matrices, one per node

    def __post_init__(self):
        self.per_node_accuracy = np.asarray(self.per_node_accuracy, dtype=np.float64)
        self.per_node_loss = np.asarray(self.per_node_loss, dtype=np.float64)
        if len(self.per_node_accuracy) != len(self.per_node_loss):
            raise UsageError("accuracy and loss vectors must have equal length")
        if len(self.per_node_accuracy) and (
            self.per_node_accuracy.min() < 0 or self.per_node_accuracy.max() > 1
        ):
            raise UsageError("accuracies must lie in [0,1]")

    @property
    def n_nodes(self) -> int:
        return len(self.per_node_accuracy)


@dataclass(frozen=True)
class CommunityConfusion:
    """Row-normalized confusion averaged over one community's nodes."""

    block: int
    matrix: np.ndarray  # (C, C) float64, rows with support sum to 1


def mean_std_over_nodes(rec: RoundRecord):
    """Arithmetic mean and population standard deviation of per-node accuracy."""
    if rec.n_nodes < 1:
        raise UsageError("record holds no nodes")
    acc = rec.per_node_accuracy
    return float(acc.mean()), float(acc.std(ddof=0))


def row_normalize(matrix: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; rows with zero support stay zero."""
    matrix = np.asarray(matrix, dtype=np.float64)
    totals = matrix.sum(axis=1, keepdims=True)
    out = np.divide(matrix, totals, out=np.zeros_like(matrix), where=totals > 0)
    return out


def community_confusion(confusions, blocks) -> list[CommunityConfusion]:
    """Sum member confusion counts per block, then row-normalize by true-class totals."""
    blocks = np.asarray(blocks, dtype=np.int64)
    if len(confusions) != len(blocks):
        raise UsageError("need one confusion matrix per node")
    out = []
    for b in range(int(blocks.max()) + 1):
        members = np.flatnonzero(blocks == b)
        if len(members) == 0:
            raise UsageError(f"block {b} has no nodes")
        total = sum(np.asarray(confusions[i], dtype=np.int64) for i in members)
        out.append(CommunityConfusion(block=b, matrix=row_normalize(total)))
    return out


def accuracy_gap(rec: RoundRecord, group_a, group_b) -> float:
    """Mean accuracy of group_a minus mean accuracy of group_b."""
    a, b = set(group_a), set(group_b)
    if not a or not b:
        raise UsageError("both groups must be non-empty")
    if a & b:
        raise UsageError("groups must be disjoint")
    acc = rec.per_node_accuracy
    return float(acc[sorted(a)].mean() - acc[sorted(b)].mean())


def straggler_report(history, threshold: float) -> dict:
    """Earliest round each node reaches the accuracy threshold; None if it never does."""
    rounds = [rec.round for rec in history]
    if rounds != sorted(rounds):
        raise UsageError("history must be ordered by round")
    if not history:
        return {}
    n = history[0].n_nodes
    first = {node: None for node in range(n)}
    for rec in history:
        hit = rec.per_node_accuracy >= threshold
        for node in range(n):
            if first[node] is None and hit[node]:
                first[node] = rec.round
    return first


# ---------------------------------------------------------------------------
# CSV persistence (LF endings, deterministic float repr)


def _write_lines(path, lines):
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_summary_csv(history, path) -> None:
    lines = ["round,mean_accuracy,std_accuracy"]
    for rec in history:
        mean, std = mean_std_over_nodes(rec)
        lines.append(f"{rec.round},{mean!r},{std!r}")
    _write_lines(path, lines)


def write_per_node_csv(history, path) -> None:
    lines = ["round,node,accuracy,loss"]
    for rec in history:
        for node in range(rec.n_nodes):
            acc = float(rec.per_node_accuracy[node])
            loss = float(rec.per_node_loss[node])
            lines.append(f"{rec.round},{node},{acc!r},{loss!r}")
    _write_lines(path, lines)


def write_confusion_csv(history, path) -> None:
    """Sparse dump of every stored confusion matrix: one row per nonzero cell."""
    lines = ["round,node,true_class,pred_class,count"]
    for rec in history:
        if not rec.confusions:
            continue
        for node, mat in enumerate(rec.confusions):
            for t, p in zip(*np.nonzero(mat)):
                lines.append(f"{rec.round},{node},{t},{p},{mat[t, p]}")
    _write_lines(path, lines)


def write_community_table_csv(communities, edge_counts, path) -> None:
    """Per-class community accuracy plus inter-community edge counts, one file.

    Rows with section=class_accuracy give the row-normalized diagonal entry of
    each community's averaged confusion; rows with section=external_edges give
    each community's edge counts toward every community (diagonal = internal).
    """
    b = len(communities)
    header = "section,row," + ",".join(f"community_{i}" for i in range(b))
    lines = [header]
    n_classes = communities[0].matrix.shape[0] if b else 0
    for c in range(n_classes):
        vals = ",".join(repr(float(cc.matrix[c, c])) for cc in communities)
        lines.append(f"class_accuracy,{c},{vals}")
    for a in range(b):
        vals = ",".join(str(int(edge_counts[a, j])) for j in range(b))
        lines.append(f"external_edges,{a},{vals}")
    _write_lines(path, lines)
