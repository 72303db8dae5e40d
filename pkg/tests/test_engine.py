import json
import shutil

import numpy as np
import pytest

from decavg import (ConfigurationError, ExperimentConfig, build_simulation, inspect_run,
                    load_config, loads_config, run_experiment, run_simulation, seed_streams)


def tiny_config(**overrides):
    base = {
        "topology": {"kind": "ba", "n": 12, "m": 2},
        "dataset": {"kind": "synthetic", "classes": 4, "dims": 6, "per_class": 80,
                    "spread": 0.1, "test_per_class": 10},
        "partition": {"scheme": "hub_focused", "fraction": 0.25,
                      "g1_classes": [0, 1], "g2_classes": [2, 3],
                      "per_node_per_class": 4},
        "learner": {"layer_sizes": [6, 8, 4], "learning_rate": 0.05},
        "rounds": 3,
        "seeds": {"master": 5, "replicates": 2},
    }
    base.update(overrides)
    return base


class TestConfig:
    def test_minimal_config_gets_documented_defaults(self):
        cfg = loads_config(json.dumps({
            "topology": {"kind": "er", "n": 10, "p": 0.3},
            "dataset": {"kind": "synthetic", "per_class": 50},
            "partition": {"scheme": "hub_focused"},
        }))
        assert cfg.learner.batch_size == 32
        assert cfg.learner.epochs_per_round == 1
        assert cfg.learner.learning_rate == 0.001
        assert cfg.learner.momentum == 0.5
        assert cfg.rounds == 100
        assert cfg.replicates == 1
        assert cfg.aggregation.normalization == "coefficient_sum"
        assert cfg.straggler_threshold == 0.5

    def test_default_architecture_hidden_sizes(self):
        cfg = loads_config(json.dumps({
            "topology": {"kind": "er", "n": 10, "p": 0.3},
            "dataset": {"kind": "synthetic", "per_class": 50, "dims": 784},
            "partition": {"scheme": "hub_focused"},
        }))
        assert cfg.learner.resolved_layer_sizes(784, 10) == [784, 512, 256, 128, 10]

    def test_invalid_probability_message(self):
        with pytest.raises(ConfigurationError, match=r"p must be in \[0,1\]"):
            loads_config(json.dumps(tiny_config(topology={"kind": "er", "n": 10, "p": 1.5})))

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigurationError, match="unknown key"):
            loads_config(json.dumps(tiny_config(extra_field=1)))

    def test_unknown_nested_key_rejected(self):
        cfg = tiny_config()
        cfg["learner"]["learning_rte"] = 0.1
        with pytest.raises(ConfigurationError, match="learning_rte"):
            loads_config(json.dumps(cfg))

    def test_partition_class_out_of_range(self):
        cfg = tiny_config()
        cfg["partition"]["g2_classes"] = [2, 9]
        with pytest.raises(ConfigurationError, match="class 9"):
            loads_config(json.dumps(cfg))

    def test_round_trip_canonical(self):
        cfg = loads_config(json.dumps(tiny_config()))
        again = ExperimentConfig.from_dict(json.loads(cfg.canonical_json()))
        assert again == cfg
        assert again.fingerprint() == cfg.fingerprint()

    def test_fingerprint_ignores_formatting_but_not_values(self):
        a = loads_config(json.dumps(tiny_config()))
        shuffled = json.dumps(tiny_config(), sort_keys=True, indent=4)
        b = loads_config(shuffled)
        assert a.fingerprint() == b.fingerprint()
        c = loads_config(json.dumps(tiny_config(rounds=4)))
        assert c.fingerprint() != a.fingerprint()

    def test_community_scheme_requires_sbm(self):
        cfg = tiny_config(partition={"scheme": "community",
                                     "classes_per_block": {"0": [0, 1]}})
        with pytest.raises(ConfigurationError, match="sbm"):
            loads_config(json.dumps(cfg))

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.json")


class TestSeedStreams:
    def test_same_key_same_prefix(self):
        a = seed_streams(1, 2, "shuffle").integers(0, 2**63, 8)
        b = seed_streams(1, 2, "shuffle").integers(0, 2**63, 8)
        assert np.array_equal(a, b)

    def test_nodes_differ(self):
        a = seed_streams(1, 0, "init").integers(0, 2**63)
        b = seed_streams(1, 1, "init").integers(0, 2**63)
        assert a != b

    def test_purposes_differ_without_collisions(self):
        # collision scan: first 64 bits across 10^4 (master, node, purpose) keys
        seen = set()
        for master in range(500):
            for node in range(4):
                for purpose in ("graph", "partition", "init", "shuffle", "tiebreak"):
                    seen.add(int(seed_streams(master, node, purpose).integers(0, 2**63)))
        assert len(seen) == 500 * 4 * 5

    def test_unknown_purpose_rejected(self):
        with pytest.raises(ValueError, match="purpose"):
            seed_streams(0, 0, "nope")


def run_dir_files(rep_dir):
    return sorted(p.name for p in rep_dir.iterdir())


class TestRunExperiment:
    def test_layout_and_round_counts(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root, results = run_experiment(cfg, out_dir=tmp_path)
        assert root == tmp_path / cfg.fingerprint()
        assert [r.ok for r in results] == [True, True]
        files = run_dir_files(root / "0")
        assert files == ["confusion.csv", "graph.edges", "manifest.json",
                         "partition.json", "per_node.csv", "summary.csv"]
        summary = (root / "0" / "summary.csv").read_text().splitlines()
        assert len(summary) == 1 + 4  # header + rounds 0..3

    def test_rounds_zero_writes_only_pretraining_row(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config(rounds=0)))
        root, _ = run_experiment(cfg, out_dir=tmp_path, replicates=1)
        rows = (root / "0" / "summary.csv").read_text().splitlines()
        assert len(rows) == 2 and rows[1].startswith("0,")

    def test_byte_identical_reruns(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root1, _ = run_experiment(cfg, out_dir=tmp_path / "a", replicates=1)
        root2, _ = run_experiment(cfg, out_dir=tmp_path / "b", replicates=1)
        for name in ("summary.csv", "per_node.csv", "confusion.csv",
                     "graph.edges", "partition.json"):
            assert (root1 / "0" / name).read_bytes() == (root2 / "0" / name).read_bytes()

    def test_replicate_independence(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root, _ = run_experiment(cfg, out_dir=tmp_path)
        original = (root / "1" / "per_node.csv").read_bytes()
        shutil.rmtree(root / "1")
        run_experiment(cfg, out_dir=tmp_path, replicate_indices=[1])
        assert (root / "1" / "per_node.csv").read_bytes() == original

    def test_replicates_are_distinct(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root, _ = run_experiment(cfg, out_dir=tmp_path)
        a = (root / "0" / "graph.edges").read_bytes()
        b = (root / "1" / "graph.edges").read_bytes()
        assert a != b

    def test_failures_are_isolated_per_replicate(self, tmp_path):
        # per_node_per_class too large: partitioning fails inside the replicate
        bad = tiny_config()
        bad["partition"]["per_node_per_class"] = 50
        cfg = loads_config(json.dumps(bad))
        root, results = run_experiment(cfg, out_dir=tmp_path)
        assert [r.ok for r in results] == [False, False]
        assert all(r.stage == "setup" for r in results)
        entry = json.loads((root / "0" / "failure.json").read_text())
        assert entry["stage"] == "setup"
        assert "deficit" in entry["error"]

    def test_manifest_contents(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root, _ = run_experiment(cfg, out_dir=tmp_path, replicates=1)
        manifest = json.loads((root / "0" / "manifest.json").read_text())
        assert manifest["fingerprint"] == cfg.fingerprint()
        assert manifest["replicate"] == 0
        assert manifest["replicate_seed"] == 5
        assert manifest["label"] == "ba-m2-hub_focused"
        assert manifest["config"]["rounds"] == 3

    def test_inspect_reports_final_accuracy(self, tmp_path):
        cfg = loads_config(json.dumps(tiny_config()))
        root, _ = run_experiment(cfg, out_dir=tmp_path)
        report = inspect_run(root)
        assert len(report["replicates"]) == 2
        entry = report["replicates"][0]
        assert entry["final_round"] == 3
        assert 0.0 <= entry["final_mean_accuracy"] <= 1.0


class TestBuildSimulation:
    def test_shared_initial_model(self):
        cfg = loads_config(json.dumps(tiny_config()))
        sim = build_simulation(cfg, 5)
        flats = {sim.nodes[i].params.flat().tobytes() for i in range(3)}
        assert len(flats) == 1

    def test_test_set_restricted_to_present_classes(self):
        spec = tiny_config()
        spec["topology"] = {"kind": "sbm", "block_sizes": [6, 6],
                            "p_matrix": [[0.8, 0.1], [0.1, 0.8]]}
        spec["partition"] = {"scheme": "community",
                             "classes_per_block": {"0": [0], "1": [1]},
                             "per_node_per_class": 4}
        sim = build_simulation(loads_config(json.dumps(spec)), 0)
        assert set(np.unique(sim.test_set.labels).tolist()) == {0, 1}
        assert len(sim.test_set) == 20

    def test_default_k_fills_when_unset(self):
        spec = tiny_config()
        del spec["partition"]["per_node_per_class"]
        sim = build_simulation(loads_config(json.dumps(spec)), 0)
        # 80 per class, g1 recipients=12 -> floor(80/12)=6 per node per class
        table = np.stack([s.label_histogram for s in sim.plan.shards])
        assert np.all(table[:, 0] == 6)

    def test_simulation_runs_history(self):
        cfg = loads_config(json.dumps(tiny_config()))
        sim = build_simulation(cfg, 5)
        run_simulation(sim, 2)
        assert [rec.round for rec in sim.history] == [0, 1, 2]
