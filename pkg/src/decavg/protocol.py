"""The DecAvg communication round: synchronous neighborhood-weighted model
averaging followed by local retraining and evaluation.

Aggregation weights each neighbor j of node i by trust * relative dataset
size. Two normalizations are supported:

* ``coefficient_sum`` (default): divide by the sum of the trust*size
  numerators, so coefficients sum to exactly 1 and aggregation is a convex
  combination (fixed points are preserved).
* ``trust_sum``: divide by the plain sum of trust weights instead. With the
  numerator still carrying the size factor this shrinks the result whenever
  the neighborhood has more than one member; kept behind a flag for
  auditability of that literal formula.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ProtocolError
from .graphs import Graph
from .metrics import RoundRecord
from .mlp import ModelParams, NodeState, cross_entropy, evaluate, train_epochs

NORMALIZATIONS = ("coefficient_sum", "trust_sum")
ALPHA_SOURCES = ("shard_size", "histogram_mass")


@dataclass(frozen=True)
class AggregationSpec:
    """How neighborhood averaging is normalized and where sizes come from."""

    normalization: str = "coefficient_sum"
    alpha_source: str = "shard_size"
    include_self: bool = True  # the neighborhood always contains the node itself

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ConfigurationError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}"
            )
        if self.alpha_source not in ALPHA_SOURCES:
            raise ConfigurationError(
                f"alpha_source must be one of {ALPHA_SOURCES}, got {self.alpha_source!r}"
            )
        if not self.include_self:
            raise ConfigurationError("include_self cannot be disabled; the protocol averages over the closed neighborhood")


def node_sizes(states, spec: AggregationSpec) -> np.ndarray:
    """Per-node dataset sizes used for the relative-weight factor."""
    if spec.alpha_source == "histogram_mass":
        return np.array([int(s.shard.label_histogram.sum()) for s in states], dtype=np.int64)
    return np.array([s.local_size for s in states], dtype=np.int64)


def aggregation_coeffs(i: int, g: Graph, sizes, spec: AggregationSpec) -> dict:
    """Coefficient for every member of N(i), the neighborhood of i including itself."""
    sizes = np.asarray(sizes)
    members = g.neighborhood(i)
    trust = {j: (g.self_weight[i] if j == i else g.neighbor_map[i][j]) for j in members}
    size_total = float(sum(sizes[j] for j in members))
    if size_total <= 0.0:
        raise ProtocolError(f"node {i}: degenerate neighborhood, every member has an empty dataset")
    numer = {j: trust[j] * (float(sizes[j]) / size_total) for j in members}
    if spec.normalization == "coefficient_sum":
        denom = sum(numer.values())
        if denom <= 0.0:
            raise ProtocolError(f"node {i}: degenerate neighborhood, all coefficients are zero")
    else:
        denom = sum(trust.values())
        if denom <= 0.0:
            raise ProtocolError(f"node {i}: degenerate neighborhood, total trust is zero")
    return {j: numer[j] / denom for j in members}


def _check_architectures(states):
    sizes0 = states[0].params.layer_sizes
    for s in states[1:]:
        if s.params.layer_sizes != sizes0:
            raise ProtocolError(
                f"architecture mismatch between node {states[0].id} and node {s.id}: "
                f"{sizes0} vs {s.params.layer_sizes}"
            )


def decavg_aggregate(states, g: Graph, spec: AggregationSpec, order=None) -> list[ModelParams]:
    """Synchronous averaging step over the previous-round snapshot.

    Every node's new parameters are computed from the same immutable
    snapshot, so the processing `order` (exposed for schedule-independence
    tests) can never change the result.
    """
    if len(states) != g.n:
        raise ProtocolError(f"need one state per node: got {len(states)} states for n={g.n}")
    _check_architectures(states)
    sizes = node_sizes(states, spec)
    snapshot = [s.params for s in states]
    new_params: list = [None] * g.n
    convex = spec.normalization == "coefficient_sum"
    for i in (range(g.n) if order is None else order):
        coeffs = aggregation_coeffs(i, g, sizes, spec)
        if convex:
            # Coefficients sum to 1, so fold the self term into a delta form:
            # w_i + sum_j c_j (w_j - w_i). Identical inputs are then preserved
            # bit-exactly, not just up to rounding.
            acc = snapshot[i].copy()
            for j, c in coeffs.items():
                if j == i:
                    continue
                for l in range(acc.n_layers):
                    acc.weights[l] += c * (snapshot[j].weights[l] - snapshot[i].weights[l])
                    acc.biases[l] += c * (snapshot[j].biases[l] - snapshot[i].biases[l])
        else:
            acc = snapshot[i].zeros_like()
            for j, c in coeffs.items():
                for l in range(acc.n_layers):
                    acc.weights[l] += c * snapshot[j].weights[l]
                    acc.biases[l] += c * snapshot[j].biases[l]
        new_params[i] = acc
    return new_params


@dataclass
class SimulationState:
    """A full run in flight: topology, shards, node states and metric history."""

    graph: Graph
    plan: object                  # PartitionPlan
    nodes: list                   # list[NodeState]
    spec: AggregationSpec
    test_set: Dataset
    epochs_per_round: int
    batch_size: int
    pretrain_epochs: int = None   # round-0 local epochs; defaults to epochs_per_round
    confusion_every: int = 1      # 0 disables stored confusion matrices
    round: int = -1               # -1 until round 0 (local pretraining) has run
    history: list = field(default_factory=list)
    fingerprint: str = ""

    def _keep_confusion(self, t: int) -> bool:
        return self.confusion_every > 0 and t % self.confusion_every == 0

    def _evaluate_all(self, t: int) -> RoundRecord:
        accs, losses, mats = [], [], []
        for node in self.nodes:
            acc, confusion = evaluate(node.params, self.test_set)
            accs.append(acc)
            losses.append(cross_entropy(node.params, self.test_set.features, self.test_set.labels))
            mats.append(confusion)
        return RoundRecord(
            round=t,
            per_node_accuracy=np.array(accs),
            per_node_loss=np.array(losses),
            confusions=mats if self._keep_confusion(t) else None,
        )


def pretrain(sim: SimulationState) -> SimulationState:
    """Round 0: every node trains on local data only, then is evaluated."""
    if sim.round >= 0:
        raise ProtocolError("pretraining already ran for this simulation")
    epochs = sim.epochs_per_round if sim.pretrain_epochs is None else sim.pretrain_epochs
    for node in sim.nodes:
        train_epochs(node, epochs, sim.batch_size)
    sim.round = 0
    sim.history.append(sim._evaluate_all(0))
    return sim


def run_round(sim: SimulationState) -> SimulationState:
    """One communication round: aggregate, retrain locally, evaluate everyone."""
    if sim.round < 0:
        raise ProtocolError("run pretraining (round 0) before communication rounds")
    t = sim.round + 1
    try:
        new_params = decavg_aggregate(sim.nodes, sim.graph, sim.spec)
    except Exception as exc:
        raise ProtocolError(f"round {t}, aggregation phase: {exc}") from exc
    for node, params in zip(sim.nodes, new_params):
        node.params = params
    for node in sim.nodes:
        try:
            train_epochs(node, sim.epochs_per_round, sim.batch_size)
        except Exception as exc:
            raise ProtocolError(f"round {t}, node {node.id}, training phase: {exc}") from exc
    sim.round = t
    sim.history.append(sim._evaluate_all(t))
    return sim
