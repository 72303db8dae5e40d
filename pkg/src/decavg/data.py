"""Labeled datasets and the non-IID placement schemes that shard them across nodes.

All placements sample without replacement from the global pool, so a
sample belongs to at most one node and every node assigned a class holds
exactly the same number of its samples.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, LoadError, PartitionError
from .graphs import Graph
from .rng import as_generator

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Feature matrix in [0,1], integer class labels, and the class count."""

    features: np.ndarray  # (n_samples, dim) float64
    labels: np.ndarray    # (n_samples,) int64
    class_count: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.features) != len(self.labels):
            raise ConfigurationError("features and labels must have equal length")
        if len(self.labels) and self.labels.max() >= self.class_count:
            raise ConfigurationError("every label must be smaller than class_count")
        if len(self.labels) and self.labels.min() < 0:
            raise ConfigurationError("labels must be non-negative")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count)

    def histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count).astype(np.int64)


@dataclass
class Shard:
    """One node's slice of the global dataset, with its label histogram."""

    owner: int
    sample_indices: np.ndarray  # sorted int64 indices into the dataset
    label_histogram: np.ndarray  # (class_count,) int64

    @classmethod
    def build(cls, owner: int, indices, dataset: Dataset) -> "Shard":
        idx = np.sort(np.asarray(indices, dtype=np.int64))
        if len(idx) and (idx.min() < 0 or idx.max() >= len(dataset)):
            raise PartitionError(f"shard for node {owner} references out-of-range sample indices")
        hist = np.bincount(dataset.labels[idx], minlength=dataset.class_count).astype(np.int64)
        return cls(owner=owner, sample_indices=idx, label_histogram=hist)

    @property
    def size(self) -> int:
        return len(self.sample_indices)


@dataclass
class PartitionPlan:
    """One shard per node plus the scheme that produced the placement."""

    shards: list
    scheme: str  # "hub_focused" | "edge_focused" | "community"
    focus_nodes: set = field(default_factory=set)

    def __post_init__(self):
        owners = [s.owner for s in self.shards]
        if owners != list(range(len(self.shards))):
            raise PartitionError("plan must contain exactly one shard per node, ordered by node id")

    @property
    def n_nodes(self) -> int:
        return len(self.shards)

    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.shards], dtype=np.int64)


def load_idx(images_path, labels_path) -> Dataset:
    """Load a big-endian IDX image/label file pair; pixels are scaled to [0,1]."""
    images_path, labels_path = Path(images_path), Path(labels_path)

    raw = images_path.read_bytes()
    if len(raw) < 16:
        raise LoadError(f"{images_path}: images header truncated ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise LoadError(f"{images_path}: bad images magic number {magic:#010x}")
    expected = count * rows * cols
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if len(pixels) < expected:
        raise LoadError(
            f"{images_path}: images data truncated, expected {expected} pixel bytes, got {len(pixels)}"
        )
    features = pixels[:expected].reshape(count, rows * cols).astype(np.float64) / 255.0

    raw = labels_path.read_bytes()
    if len(raw) < 8:
        raise LoadError(f"{labels_path}: labels header truncated ({len(raw)} bytes)")
    magic, label_count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABEL_MAGIC:
        raise LoadError(f"{labels_path}: bad labels magic number {magic:#010x}")
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if len(labels) < label_count:
        raise LoadError(
            f"{labels_path}: labels data truncated, expected {label_count} bytes, got {len(labels)}"
        )
    labels = labels[:label_count].astype(np.int64)
    if label_count != count:
        raise LoadError(
            f"image count {count} does not match label count {label_count} "
            f"({images_path.name} vs {labels_path.name})"
        )
    class_count = int(labels.max()) + 1 if count else 0
    return Dataset(features=features, labels=labels, class_count=class_count)


def gen_synthetic(classes: int, dims: int, per_class: int, spread: float, seed=None) -> Dataset:
    """Isotropic Gaussian blob per class with seeded means in [0,1]^dims, clipped to [0,1]."""
    if classes < 2:
        raise ConfigurationError("classes must be at least 2")
    if per_class < 1:
        raise ConfigurationError("per_class must be at least 1")
    rng = as_generator(seed)
    means = rng.random((classes, dims))
    feats = np.empty((classes * per_class, dims))
    for c in range(classes):
        noise = rng.standard_normal((per_class, dims)) * spread
        feats[c * per_class:(c + 1) * per_class] = np.clip(means[c] + noise, 0.0, 1.0)
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    return Dataset(features=feats, labels=labels, class_count=classes)


def _draw_for_recipients(pool, recipients, k, rng, taken, class_id):
    """Sample k*len(recipients) indices of one class without replacement, split per node."""
    available = pool[~taken[pool]]
    need = k * len(recipients)
    if len(available) < need:
        raise PartitionError(
            f"class {class_id}: need {need} samples for {len(recipients)} nodes "
            f"(k={k}), only {len(available)} available (deficit {need - len(available)})"
        )
    chosen = rng.choice(available, size=need, replace=False)
    taken[chosen] = True
    return {node: chosen[i * k:(i + 1) * k] for i, node in enumerate(recipients)}


def partition_focus(ds: Dataset, g: Graph, focus, g1_classes, g2_classes,
                    per_node_per_class: int, seed=None, scheme: str = "hub_focused") -> PartitionPlan:
    """Give every node the shared class group, and focus nodes the extra group too.

    Each node receives per_node_per_class seeded-random samples of every class
    in g1_classes; nodes in `focus` additionally receive the same count for
    every class in g2_classes. Shards are disjoint in sample indices.
    """
    g1, g2 = sorted(set(g1_classes)), sorted(set(g2_classes))
    if set(g1) & set(g2):
        raise ConfigurationError("g1_classes and g2_classes must be disjoint")
    for c in g1 + g2:
        if not 0 <= c < ds.class_count:
            raise ConfigurationError(f"class {c} is outside [0, {ds.class_count})")
    if per_node_per_class < 1:
        raise ConfigurationError("per_node_per_class must be at least 1")
    rng = as_generator(seed)
    focus = sorted(int(x) for x in focus)
    all_nodes = list(range(g.n))
    taken = np.zeros(len(ds), dtype=bool)
    per_node = {node: [] for node in all_nodes}
    for c in g1:
        pool = np.flatnonzero(ds.labels == c)
        for node, idx in _draw_for_recipients(pool, all_nodes, per_node_per_class, rng, taken, c).items():
            per_node[node].append(idx)
    for c in g2:
        pool = np.flatnonzero(ds.labels == c)
        for node, idx in _draw_for_recipients(pool, focus, per_node_per_class, rng, taken, c).items():
            per_node[node].append(idx)
    shards = [
        Shard.build(node, np.concatenate(per_node[node]) if per_node[node] else np.empty(0, dtype=np.int64), ds)
        for node in all_nodes
    ]
    return PartitionPlan(shards=shards, scheme=scheme, focus_nodes=set(focus))


def partition_community(ds: Dataset, g: Graph, classes_per_block: dict,
                        per_node_per_class: int, seed=None) -> PartitionPlan:
    """Each community's nodes receive only that community's classes, without overlap."""
    if g.blocks is None:
        raise ConfigurationError("community partitioning requires a graph with block labels")
    if per_node_per_class < 1:
        raise ConfigurationError("per_node_per_class must be at least 1")
    seen = set()
    for b, classes in classes_per_block.items():
        cset = set(classes)
        if cset & seen:
            raise ConfigurationError(
                f"class sets must be pairwise disjoint; block {b} overlaps an earlier block"
            )
        seen |= cset
        for c in cset:
            if not 0 <= c < ds.class_count:
                raise ConfigurationError(f"class {c} is outside [0, {ds.class_count})")
    rng = as_generator(seed)
    taken = np.zeros(len(ds), dtype=bool)
    per_node = {node: [] for node in range(g.n)}
    for b in sorted(classes_per_block):
        recipients = sorted(np.flatnonzero(g.blocks == int(b)).tolist())
        if not recipients:
            raise ConfigurationError(f"block {b} has no nodes")
        for c in sorted(classes_per_block[b]):
            pool = np.flatnonzero(ds.labels == c)
            for node, idx in _draw_for_recipients(pool, recipients, per_node_per_class, rng, taken, c).items():
                per_node[node].append(idx)
    shards = [
        Shard.build(node, np.concatenate(per_node[node]) if per_node[node] else np.empty(0, dtype=np.int64), ds)
        for node in range(g.n)
    ]
    return PartitionPlan(shards=shards, scheme="community", focus_nodes=set())


@dataclass(frozen=True)
class LabelDistribution:
    per_node: np.ndarray  # (n_nodes, class_count) int64
    total: np.ndarray     # (class_count,) int64


def label_distribution(plan: PartitionPlan) -> LabelDistribution:
    """Per-node class-count table plus the global label vector (elementwise sum)."""
    table = np.stack([s.label_histogram for s in plan.shards])
    return LabelDistribution(per_node=table, total=table.sum(axis=0))


def save_plan(plan: PartitionPlan, path) -> None:
    """JSON export: node -> sorted sample-index list, plus scheme metadata."""
    payload = {
        "scheme": plan.scheme,
        "focus_nodes": sorted(plan.focus_nodes),
        "shards": {str(s.owner): s.sample_indices.tolist() for s in plan.shards},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=None, separators=(",", ":")) + "\n",
                          encoding="utf-8", newline="\n")


def load_plan(path, dataset: Dataset) -> PartitionPlan:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    n = len(payload["shards"])
    shards = [Shard.build(node, payload["shards"][str(node)], dataset) for node in range(n)]
    return PartitionPlan(shards=shards, scheme=payload["scheme"],
                         focus_nodes=set(payload["focus_nodes"]))
