"""Run lifecycle: build graph, place data, train through the round budget,
and persist every artifact under runs/<fingerprint>/<replicate>/.

All randomness flows through seed_streams, so a replicate can be deleted
and re-run in isolation, byte-identically.
"""
from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .data import (Dataset, gen_synthetic, label_distribution, load_idx,
                   partition_community, partition_focus, save_plan)
from .errors import DecAvgError, PartitionError
from .graphs import build_graph, intercommunity_edge_counts, save_edges, select_by_degree
from .metrics import (community_confusion, straggler_report, write_community_table_csv,
                      write_confusion_csv, write_per_node_csv, write_summary_csv)
from .mlp import NodeState, OptimizerState, init_mlp
from .protocol import SimulationState, pretrain, run_round
from .rng import seed_streams


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    directory: Path
    ok: bool
    stage: str = ""
    error: str = ""


def _limit_per_class(ds: Dataset, limit: int, rng) -> Dataset:
    keep = []
    for c in range(ds.class_count):
        pool = np.flatnonzero(ds.labels == c)
        if len(pool) > limit:
            pool = np.sort(rng.choice(pool, size=limit, replace=False))
        keep.append(pool)
    return ds.subset(np.concatenate(keep))


def _build_datasets(cfg: ExperimentConfig, rng):
    """Return (train pool, test set) for the configured dataset source."""
    d = cfg.dataset
    if d.kind == "synthetic":
        full = gen_synthetic(d.classes, d.dims, d.per_class + d.test_per_class, d.spread, rng)
        train_idx, test_idx = [], []
        for c in range(d.classes):
            pool = np.flatnonzero(full.labels == c)
            train_idx.append(pool[:d.per_class])
            test_idx.append(pool[d.per_class:])
        return full.subset(np.concatenate(train_idx)), full.subset(np.concatenate(test_idx))
    train = load_idx(d.resolve_path(d.images), d.resolve_path(d.labels))
    test = load_idx(d.resolve_path(d.test_images), d.resolve_path(d.test_labels))
    if d.limit_per_class:
        train = _limit_per_class(train, d.limit_per_class, rng)
    if d.limit_test_per_class:
        test = _limit_per_class(test, d.limit_test_per_class, rng)
    return train, test


def _default_k(train: Dataset, classes, recipients_per_class) -> int:
    """floor(available/recipients), minimized over the classes being placed."""
    hist = train.histogram()
    ks = []
    for c in classes:
        recipients = recipients_per_class[c]
        if recipients == 0:
            continue
        ks.append(hist[c] // recipients)
    k = min(ks) if ks else 0
    if k < 1:
        raise PartitionError("not enough samples per class to give every recipient at least one")
    return int(k)


def _build_plan(cfg: ExperimentConfig, graph, train: Dataset, part_rng, tiebreak_rng):
    p = cfg.partition
    if p.scheme == "community":
        recipients = {}
        for b, classes in p.classes_per_block.items():
            count = int((graph.blocks == b).sum())
            for c in classes:
                recipients[c] = count
        k = p.per_node_per_class or _default_k(train, p.referenced_classes(), recipients)
        plan = partition_community(train, graph, p.classes_per_block, k, part_rng)
        return plan, k
    mode = "highest" if p.scheme == "hub_focused" else "lowest"
    focus = select_by_degree(graph, p.fraction, mode, tiebreak_rng)
    recipients = {c: graph.n for c in p.g1_classes}
    recipients.update({c: len(focus) for c in p.g2_classes})
    k = p.per_node_per_class or _default_k(train, p.referenced_classes(), recipients)
    plan = partition_focus(train, graph, focus, p.g1_classes, p.g2_classes, k,
                           part_rng, scheme=p.scheme)
    return plan, k


def build_simulation(cfg: ExperimentConfig, rep_master: int) -> SimulationState:
    """Deterministically construct the full simulation for one replicate seed."""
    graph = build_graph(cfg.topology, seed_streams(rep_master, 0, "graph"))
    train, test = _build_datasets(cfg, seed_streams(rep_master, 0, "dataset"))
    plan, _ = _build_plan(cfg, graph, train,
                          seed_streams(rep_master, 0, "partition"),
                          seed_streams(rep_master, 0, "tiebreak"))
    present = np.flatnonzero(label_distribution(plan).total > 0)
    test_mask = np.isin(test.labels, present)
    test_set = test.subset(np.flatnonzero(test_mask))

    sizes = cfg.learner.resolved_layer_sizes(train.dim, train.class_count)
    # Every node starts from the same initial model (federated convention):
    # averaging independently initialized networks is permutation-misaligned
    # and collapses accuracy instead of spreading knowledge.
    shared_init = init_mlp(sizes, seed_streams(rep_master, 0, "init"))
    nodes = []
    for i in range(graph.n):
        params = shared_init.copy()
        opt = OptimizerState.for_params(params, lr=cfg.learner.learning_rate,
                                        momentum=cfg.learner.momentum)
        nodes.append(NodeState.create(i, params, opt, plan.shards[i], train,
                                      seed_streams(rep_master, i, "shuffle")))
    return SimulationState(graph=graph, plan=plan, nodes=nodes, spec=cfg.aggregation,
                           test_set=test_set, epochs_per_round=cfg.learner.epochs_per_round,
                           batch_size=cfg.learner.batch_size,
                           pretrain_epochs=cfg.learner.pretrain_epochs,
                           confusion_every=cfg.confusion_every,
                           fingerprint=cfg.fingerprint())


def run_simulation(sim: SimulationState, rounds: int) -> SimulationState:
    pretrain(sim)
    for _ in range(rounds):
        run_round(sim)
    return sim


def _write_outputs(cfg: ExperimentConfig, sim: SimulationState, rep_dir: Path,
                   rep_index: int, rep_master: int) -> None:
    rep_dir.mkdir(parents=True, exist_ok=True)
    save_edges(sim.graph, rep_dir / "graph.edges")
    save_plan(sim.plan, rep_dir / "partition.json")
    write_summary_csv(sim.history, rep_dir / "summary.csv")
    write_per_node_csv(sim.history, rep_dir / "per_node.csv")
    write_confusion_csv(sim.history, rep_dir / "confusion.csv")
    if sim.graph.blocks is not None:
        last_with_conf = [rec for rec in sim.history if rec.confusions]
        if last_with_conf:
            comm = community_confusion(last_with_conf[-1].confusions, sim.graph.blocks)
            write_community_table_csv(comm, intercommunity_edge_counts(sim.graph),
                                      rep_dir / "community_table.csv")
    manifest = {
        "fingerprint": sim.fingerprint,
        "version": __version__,
        "label": cfg.label(),
        "replicate": rep_index,
        "replicate_seed": rep_master,
        "rounds": cfg.rounds,
        "n_nodes": sim.graph.n,
        "normalization": cfg.aggregation.normalization,
        "created_unix": time.time(),
        "config": cfg.to_dict(),
    }
    (rep_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n")


def run_replicate(cfg: ExperimentConfig, rep_index: int, run_root: Path) -> ReplicateResult:
    """Execute one replicate; on failure record the stage and keep going."""
    rep_dir = Path(run_root) / str(rep_index)
    rep_master = cfg.master_seed + rep_index
    stage = "setup"
    try:
        sim = build_simulation(cfg, rep_master)
        stage = "simulation"
        run_simulation(sim, cfg.rounds)
        stage = "persistence"
        _write_outputs(cfg, sim, rep_dir, rep_index, rep_master)
    except Exception as exc:  # failure isolation: one replicate never kills the sweep
        rep_dir.mkdir(parents=True, exist_ok=True)
        entry = {"replicate": rep_index, "stage": stage, "error": str(exc)}
        (rep_dir / "failure.json").write_text(json.dumps(entry, indent=2) + "\n",
                                              encoding="utf-8", newline="\n")
        return ReplicateResult(rep_index, rep_dir, ok=False, stage=stage, error=str(exc))
    return ReplicateResult(rep_index, rep_dir, ok=True)


def run_experiment(cfg: ExperimentConfig, out_dir=None, replicates=None,
                   replicate_indices=None, verbose=False):
    """Run all replicates of a config; returns (run_root, list[ReplicateResult])."""
    root = Path(out_dir if out_dir is not None else cfg.output_dir)
    run_root = root / cfg.fingerprint()
    run_root.mkdir(parents=True, exist_ok=True)
    if replicate_indices is None:
        count = replicates if replicates is not None else cfg.replicates
        replicate_indices = range(count)
    results = []
    for r in replicate_indices:
        t0 = time.time()
        res = run_replicate(cfg, r, run_root)
        results.append(res)
        if verbose:
            status = "ok" if res.ok else f"FAILED at {res.stage}: {res.error}"
            print(f"[{cfg.label()}] replicate {r}: {status} ({time.time() - t0:.1f}s)",
                  file=sys.stderr)
    return run_root, results


def inspect_run(run_root) -> dict:
    """Summarize a run directory: per-replicate final accuracy and stragglers."""
    run_root = Path(run_root)
    if not run_root.is_dir():
        raise DecAvgError(f"run directory not found: {run_root}")
    report = {"run": str(run_root), "replicates": []}
    for rep_dir in sorted((p for p in run_root.iterdir() if p.is_dir()),
                          key=lambda p: p.name):
        entry = {"replicate": rep_dir.name}
        failure = rep_dir / "failure.json"
        if failure.exists():
            entry["failure"] = json.loads(failure.read_text())
            report["replicates"].append(entry)
            continue
        manifest = json.loads((rep_dir / "manifest.json").read_text())
        entry["label"] = manifest["label"]
        entry["fingerprint"] = manifest["fingerprint"]
        rows = (rep_dir / "summary.csv").read_text().splitlines()[1:]
        if rows:
            last = rows[-1].split(",")
            entry["final_round"] = int(last[0])
            entry["final_mean_accuracy"] = float(last[1])
            entry["final_std_accuracy"] = float(last[2])
        threshold = manifest["config"]["metrics"]["straggler_threshold"]
        per_node = _read_per_node(rep_dir / "per_node.csv")
        entry["straggler_threshold"] = threshold
        entry["nodes_below_threshold"] = sum(
            1 for node, first in _first_reach(per_node, threshold).items() if first is None
        )
        report["replicates"].append(entry)
    return report


def _read_per_node(path):
    rows = Path(path).read_text().splitlines()[1:]
    out = {}
    for row in rows:
        rnd, node, acc, _ = row.split(",")
        out.setdefault(int(node), []).append((int(rnd), float(acc)))
    return out


def _first_reach(per_node, threshold):
    result = {}
    for node, series in per_node.items():
        result[node] = next((rnd for rnd, acc in sorted(series) if acc >= threshold), None)
    return result
