"""Experiment configuration: strict JSON schema, explicit defaults, and a
canonical serialization whose hash fingerprints the run.

Unknown keys are rejected everywhere so typos in sweep configs fail loudly
instead of silently falling back to defaults.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .graphs import TopologyConfig
from .protocol import AggregationSpec

DATA_ROOT_ENV = "DECAVG_DATA_ROOT"

PARTITION_SCHEMES = ("hub_focused", "edge_focused", "community")
DATASET_KINDS = ("synthetic", "idx")


def _reject_unknown(section: str, given: dict, allowed) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigurationError(
            f"{section}: unknown key(s) {sorted(unknown)}; allowed keys are {sorted(allowed)}"
        )


def _require(section: str, given: dict, key: str):
    if key not in given:
        raise ConfigurationError(f"{section}.{key} is required")
    return given[key]


@dataclass
class DatasetConfig:
    kind: str
    # synthetic
    classes: int = None
    dims: int = None
    per_class: int = None
    spread: float = None
    test_per_class: int = None
    # idx
    images: str = None
    labels: str = None
    test_images: str = None
    test_labels: str = None
    limit_per_class: int = None
    limit_test_per_class: int = None

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        kind = _require("dataset", d, "kind")
        if kind == "synthetic":
            _reject_unknown("dataset", d, ("kind", "classes", "dims", "per_class", "spread", "test_per_class"))
            cfg = cls(kind=kind,
                      classes=int(d.get("classes", 10)),
                      dims=int(d.get("dims", 32)),
                      per_class=int(_require("dataset", d, "per_class")),
                      spread=float(d.get("spread", 0.1)),
                      test_per_class=int(d.get("test_per_class", 50)))
            if cfg.classes < 2:
                raise ConfigurationError("dataset.classes must be at least 2")
            if cfg.per_class < 1 or cfg.test_per_class < 1:
                raise ConfigurationError("dataset.per_class and dataset.test_per_class must be positive")
            if cfg.spread < 0:
                raise ConfigurationError("dataset.spread must be non-negative")
            return cfg
        if kind == "idx":
            _reject_unknown("dataset", d, ("kind", "images", "labels", "test_images", "test_labels",
                                           "limit_per_class", "limit_test_per_class"))
            return cls(kind=kind,
                       images=str(_require("dataset", d, "images")),
                       labels=str(_require("dataset", d, "labels")),
                       test_images=str(_require("dataset", d, "test_images")),
                       test_labels=str(_require("dataset", d, "test_labels")),
                       limit_per_class=None if d.get("limit_per_class") is None else int(d["limit_per_class"]),
                       limit_test_per_class=None if d.get("limit_test_per_class") is None else int(d["limit_test_per_class"]))
        raise ConfigurationError(f"dataset.kind must be one of {DATASET_KINDS}, got {kind!r}")

    def resolve_path(self, name: str) -> Path:
        """idx paths are taken relative to $DECAVG_DATA_ROOT unless absolute."""
        p = Path(name)
        if p.is_absolute():
            return p
        return Path(os.environ.get(DATA_ROOT_ENV, ".")) / p

    def to_dict(self) -> dict:
        if self.kind == "synthetic":
            return {"kind": self.kind, "classes": self.classes, "dims": self.dims,
                    "per_class": self.per_class, "spread": self.spread,
                    "test_per_class": self.test_per_class}
        return {"kind": self.kind, "images": self.images, "labels": self.labels,
                "test_images": self.test_images, "test_labels": self.test_labels,
                "limit_per_class": self.limit_per_class,
                "limit_test_per_class": self.limit_test_per_class}


@dataclass
class PartitionConfig:
    scheme: str
    fraction: float = 0.1
    g1_classes: list = None
    g2_classes: list = None
    classes_per_block: dict = None
    per_node_per_class: int = None  # None: floor(available / recipients), min over classes

    @classmethod
    def from_dict(cls, d: dict, class_count: int = None) -> "PartitionConfig":
        scheme = _require("partition", d, "scheme")
        if scheme not in PARTITION_SCHEMES:
            raise ConfigurationError(
                f"partition.scheme must be one of {PARTITION_SCHEMES}, got {scheme!r}"
            )
        if scheme == "community":
            _reject_unknown("partition", d, ("scheme", "classes_per_block", "per_node_per_class"))
            raw = _require("partition", d, "classes_per_block")
            blocks = {int(k): [int(c) for c in v] for k, v in raw.items()}
            cfg = cls(scheme=scheme, classes_per_block=blocks,
                      per_node_per_class=None if d.get("per_node_per_class") is None
                      else int(d["per_node_per_class"]))
        else:
            _reject_unknown("partition", d, ("scheme", "fraction", "g1_classes", "g2_classes",
                                             "per_node_per_class"))
            cfg = cls(scheme=scheme,
                      fraction=float(d.get("fraction", 0.1)),
                      g1_classes=[int(c) for c in d.get("g1_classes", [0, 1, 2, 3, 4])],
                      g2_classes=[int(c) for c in d.get("g2_classes", [5, 6, 7, 8, 9])],
                      per_node_per_class=None if d.get("per_node_per_class") is None
                      else int(d["per_node_per_class"]))
            if not 0.0 < cfg.fraction <= 1.0:
                raise ConfigurationError("partition.fraction must be in (0,1]")
            if set(cfg.g1_classes) & set(cfg.g2_classes):
                raise ConfigurationError("partition.g1_classes and g2_classes must be disjoint")
        if cfg.per_node_per_class is not None and cfg.per_node_per_class < 1:
            raise ConfigurationError("partition.per_node_per_class must be positive")
        if class_count is not None:
            for c in cfg.referenced_classes():
                if c >= class_count:
                    raise ConfigurationError(
                        f"partition references class {c} but the dataset has only {class_count} classes"
                    )
        return cfg

    def referenced_classes(self) -> list:
        if self.scheme == "community":
            return sorted({c for cs in self.classes_per_block.values() for c in cs})
        return sorted(set(self.g1_classes) | set(self.g2_classes))

    def to_dict(self) -> dict:
        if self.scheme == "community":
            return {"scheme": self.scheme,
                    "classes_per_block": {str(k): list(v) for k, v in sorted(self.classes_per_block.items())},
                    "per_node_per_class": self.per_node_per_class}
        return {"scheme": self.scheme, "fraction": self.fraction,
                "g1_classes": list(self.g1_classes), "g2_classes": list(self.g2_classes),
                "per_node_per_class": self.per_node_per_class}


@dataclass
class LearnerConfig:
    layer_sizes: list = None  # None: [input, 512, 256, 128, classes] once dims are known
    learning_rate: float = 0.001
    momentum: float = 0.5
    batch_size: int = 32
    epochs_per_round: int = 1
    pretrain_epochs: int = None  # round-0 local epochs; None means epochs_per_round

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerConfig":
        _reject_unknown("learner", d, ("layer_sizes", "learning_rate", "momentum",
                                       "batch_size", "epochs_per_round", "pretrain_epochs"))
        cfg = cls(layer_sizes=None if d.get("layer_sizes") is None else [int(s) for s in d["layer_sizes"]],
                  learning_rate=float(d.get("learning_rate", 0.001)),
                  momentum=float(d.get("momentum", 0.5)),
                  batch_size=int(d.get("batch_size", 32)),
                  epochs_per_round=int(d.get("epochs_per_round", 1)),
                  pretrain_epochs=None if d.get("pretrain_epochs") is None else int(d["pretrain_epochs"]))
        if cfg.learning_rate <= 0:
            raise ConfigurationError("learner.learning_rate must be positive")
        if not 0.0 <= cfg.momentum < 1.0:
            raise ConfigurationError("learner.momentum must lie in [0,1)")
        if cfg.batch_size < 1:
            raise ConfigurationError("learner.batch_size must be at least 1")
        if cfg.epochs_per_round < 0:
            raise ConfigurationError("learner.epochs_per_round must be non-negative")
        if cfg.pretrain_epochs is not None and cfg.pretrain_epochs < 0:
            raise ConfigurationError("learner.pretrain_epochs must be non-negative")
        return cfg

    def resolved_layer_sizes(self, input_dim: int, classes: int) -> list:
        if self.layer_sizes is not None:
            if self.layer_sizes[0] != input_dim:
                raise ConfigurationError(
                    f"learner.layer_sizes[0]={self.layer_sizes[0]} must equal the feature dimension {input_dim}"
                )
            if self.layer_sizes[-1] != classes:
                raise ConfigurationError(
                    f"learner.layer_sizes[-1]={self.layer_sizes[-1]} must equal the class count {classes}"
                )
            return list(self.layer_sizes)
        return [input_dim, 512, 256, 128, classes]

    def to_dict(self) -> dict:
        return {"layer_sizes": None if self.layer_sizes is None else list(self.layer_sizes),
                "learning_rate": self.learning_rate, "momentum": self.momentum,
                "batch_size": self.batch_size, "epochs_per_round": self.epochs_per_round,
                "pretrain_epochs": self.pretrain_epochs}


@dataclass
class ExperimentConfig:
    topology: TopologyConfig
    dataset: DatasetConfig
    partition: PartitionConfig
    learner: LearnerConfig
    aggregation: AggregationSpec
    rounds: int = 100
    master_seed: int = 0
    replicates: int = 1
    confusion_every: int = 1
    straggler_threshold: float = 0.5
    output_dir: str = "runs"

    TOP_LEVEL = ("topology", "dataset", "partition", "learner", "aggregation",
                 "rounds", "seeds", "metrics", "output_dir")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a JSON object")
        _reject_unknown("config", raw, cls.TOP_LEVEL)

        # topology.seed is only meaningful for standalone graph generation; inside
        # an experiment the graph stream derives from seeds.master.
        topo_raw = dict(_require("config", raw, "topology"))
        _reject_unknown("topology", topo_raw, ("kind", "n", "p", "m", "block_sizes", "p_matrix"))
        topology = TopologyConfig(**topo_raw)

        dataset = DatasetConfig.from_dict(dict(_require("config", raw, "dataset")))
        partition = PartitionConfig.from_dict(dict(_require("config", raw, "partition")),
                                              class_count=dataset.classes)
        learner = LearnerConfig.from_dict(dict(raw.get("learner", {})))

        agg_raw = dict(raw.get("aggregation", {}))
        _reject_unknown("aggregation", agg_raw, ("normalization", "alpha_source"))
        aggregation = AggregationSpec(**agg_raw)

        seeds = dict(raw.get("seeds", {}))
        _reject_unknown("seeds", seeds, ("master", "replicates"))
        master = int(seeds.get("master", 0))
        replicates = int(seeds.get("replicates", 1))
        if replicates < 1:
            raise ConfigurationError("seeds.replicates must be at least 1")

        met = dict(raw.get("metrics", {}))
        _reject_unknown("metrics", met, ("confusion_every", "straggler_threshold"))
        confusion_every = int(met.get("confusion_every", 1))
        if confusion_every < 0:
            raise ConfigurationError("metrics.confusion_every must be non-negative")
        threshold = float(met.get("straggler_threshold", 0.5))

        rounds = int(raw.get("rounds", 100))
        if rounds < 0:
            raise ConfigurationError("rounds must be non-negative")

        cfg = cls(topology=topology, dataset=dataset, partition=partition, learner=learner,
                  aggregation=aggregation, rounds=rounds, master_seed=master,
                  replicates=replicates, confusion_every=confusion_every,
                  straggler_threshold=threshold, output_dir=str(raw.get("output_dir", "runs")))
        if partition.scheme == "community" and topology.kind != "sbm":
            raise ConfigurationError("partition.scheme=community requires topology.kind=sbm")
        return cfg

    def to_dict(self) -> dict:
        """Canonical plain-dict form with every default made explicit."""
        topo = {"kind": self.topology.kind, "n": self.topology.n}
        if self.topology.kind == "er":
            topo["p"] = self.topology.p
        elif self.topology.kind == "ba":
            topo["m"] = self.topology.m
        else:
            topo["block_sizes"] = list(self.topology.block_sizes)
            topo["p_matrix"] = [list(row) for row in self.topology.p_matrix]
        return {
            "topology": topo,
            "dataset": self.dataset.to_dict(),
            "partition": self.partition.to_dict(),
            "learner": self.learner.to_dict(),
            "aggregation": {"normalization": self.aggregation.normalization,
                            "alpha_source": self.aggregation.alpha_source},
            "rounds": self.rounds,
            "seeds": {"master": self.master_seed, "replicates": self.replicates},
            "metrics": {"confusion_every": self.confusion_every,
                        "straggler_threshold": self.straggler_threshold},
            "output_dir": self.output_dir,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:12]

    def label(self) -> str:
        """Short human-readable run label used in manifests and figure legends."""
        t = self.topology
        if t.kind == "er":
            core = f"er-p{t.p:g}"
        elif t.kind == "ba":
            core = f"ba-m{t.m}"
        else:
            core = f"sbm-pii{t.p_matrix[0][0]:g}"
        return f"{core}-{self.partition.scheme}"


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(raw)


def loads_config(text: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(text))
