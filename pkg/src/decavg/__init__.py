"""decavg: deterministic simulator for decentralized federated averaging
over complex network topologies (ER, BA, SBM) with non-IID data placement."""

__version__ = "0.1.0"

from .data import (Dataset, LabelDistribution, PartitionPlan, Shard, gen_synthetic,
                   label_distribution, load_idx, load_plan, partition_community,
                   partition_focus, save_plan)
from .errors import (ConfigurationError, DecAvgError, LoadError, NumericError,
                     PartitionError, ProtocolError, UsageError)
from .graphs import (ComponentSummary, Graph, TopologyConfig, build_graph,
                     connectivity_report, critical_threshold, gen_barabasi_albert,
                     gen_erdos_renyi, gen_sbm, intercommunity_edge_counts, load_edges,
                     save_edges, select_by_degree)
from .metrics import (CommunityConfusion, RoundRecord, accuracy_gap, community_confusion,
                      mean_std_over_nodes, row_normalize, straggler_report)
from .mlp import (Batch, ModelParams, NodeState, OptimizerState, cross_entropy, evaluate,
                  forward, init_mlp, load_params, loss_and_grad, save_params, sgd_step,
                  train_epochs)
from .protocol import (AggregationSpec, SimulationState, aggregation_coeffs,
                       decavg_aggregate, pretrain, run_round)
from .config import ExperimentConfig, load_config, loads_config
from .engine import build_simulation, inspect_run, run_experiment, run_simulation
from .rng import seed_streams
