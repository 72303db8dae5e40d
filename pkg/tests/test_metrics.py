import numpy as np
import pytest

from decavg import (RoundRecord, UsageError, accuracy_gap, community_confusion,
                    mean_std_over_nodes, row_normalize, straggler_report)
from decavg.metrics import (write_community_table_csv, write_confusion_csv,
                            write_per_node_csv, write_summary_csv)


def record(accs, rnd=0):
    accs = np.asarray(accs, dtype=float)
    return RoundRecord(round=rnd, per_node_accuracy=accs, per_node_loss=np.zeros_like(accs))


class TestMeanStd:
    def test_all_equal(self):
        mean, std = mean_std_over_nodes(record([0.75, 0.75, 0.75]))
        assert mean == 0.75 and std == 0.0

    def test_two_extremes(self):
        mean, std = mean_std_over_nodes(record([0.0, 1.0]))
        assert mean == 0.5 and std == 0.5

    def test_matches_two_pass_reference(self):
        # Independent oracle: explicit two-pass mean/population-variance
        rng = np.random.default_rng(3)
        accs = rng.random(97)
        mean, std = mean_std_over_nodes(record(accs))
        ref_mean = sum(accs) / len(accs)
        ref_std = (sum((a - ref_mean) ** 2 for a in accs) / len(accs)) ** 0.5
        assert mean == pytest.approx(ref_mean, abs=1e-12)
        assert std == pytest.approx(ref_std, abs=1e-12)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        accs = rng.random(31)
        a = mean_std_over_nodes(record(accs))
        b = mean_std_over_nodes(record(accs[::-1]))
        assert a == pytest.approx(b, abs=1e-15)


class TestCommunityConfusion:
    def test_single_node_block_equals_normalized_own(self):
        conf = np.array([[8, 2], [1, 9]])
        out = community_confusion([conf], blocks=[0])
        assert np.allclose(out[0].matrix, [[0.8, 0.2], [0.1, 0.9]])

    def test_perfect_classifiers_give_identity(self):
        conf = np.diag([5, 5, 5])
        out = community_confusion([conf, conf], blocks=[0, 0])
        assert np.allclose(out[0].matrix, np.eye(3))

    def test_counts_summed_before_normalizing(self):
        a = np.array([[1, 0], [0, 1]])
        b = np.array([[0, 3], [0, 3]])
        out = community_confusion([a, b], blocks=[0, 0])
        assert np.allclose(out[0].matrix, [[0.25, 0.75], [0.0, 1.0]])

    def test_rows_with_support_sum_to_one(self):
        rng = np.random.default_rng(1)
        confs = [rng.integers(0, 9, (6, 6)) for _ in range(5)]
        out = community_confusion(confs, blocks=[0, 0, 1, 1, 1])
        for cc in out:
            for row_sum in cc.matrix.sum(axis=1):
                assert row_sum == pytest.approx(1.0, abs=1e-9) or row_sum == 0.0

    def test_empty_block_rejected(self):
        with pytest.raises(UsageError, match="block 1"):
            community_confusion([np.eye(2), np.eye(2)], blocks=[0, 2])

    def test_zero_support_rows_stay_zero(self):
        conf = np.array([[0, 0], [3, 1]])
        out = community_confusion([conf], blocks=[0])
        assert np.all(out[0].matrix[0] == 0.0)


class TestAccuracyGap:
    def test_equal_groups_zero_gap(self):
        rec = record([0.4, 0.4, 0.9, 0.9])
        assert accuracy_gap(rec, {0, 1}, {2, 3}) == pytest.approx(-0.5)
        assert accuracy_gap(rec, {0, 2}, {1, 3}) == pytest.approx(0.0)

    def test_simple_difference(self):
        rec = record([1.0, 0.5])
        assert accuracy_gap(rec, {0}, {1}) == pytest.approx(0.5)

    def test_antisymmetry(self):
        rng = np.random.default_rng(6)
        rec = record(rng.random(10))
        a, b = {0, 1, 2}, {5, 6}
        assert accuracy_gap(rec, a, b) == pytest.approx(-accuracy_gap(rec, b, a))

    def test_overlap_rejected(self):
        rec = record([0.1, 0.2, 0.3])
        with pytest.raises(UsageError, match="disjoint"):
            accuracy_gap(rec, {0, 1}, {1, 2})

    def test_empty_group_rejected(self):
        rec = record([0.1, 0.2])
        with pytest.raises(UsageError):
            accuracy_gap(rec, set(), {1})


class TestStragglerReport:
    def test_immediately_above_threshold(self):
        history = [record([0.9], rnd=0), record([0.9], rnd=1)]
        assert straggler_report(history, 0.5) == {0: 0}

    def test_never_reaching_is_flagged_none(self):
        history = [record([0.1], rnd=r) for r in range(5)]
        assert straggler_report(history, 0.5) == {0: None}

    def test_ramp_crosses_at_round_three(self):
        ramp = [record([v], rnd=r) for r, v in enumerate([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
        assert straggler_report(ramp, 0.5) == {0: 3}

    def test_unsorted_history_rejected(self):
        history = [record([0.5], rnd=1), record([0.5], rnd=0)]
        with pytest.raises(UsageError):
            straggler_report(history, 0.5)


class TestCsvWriters:
    def history(self):
        rec0 = RoundRecord(round=0, per_node_accuracy=np.array([0.5, 0.25]),
                           per_node_loss=np.array([1.0, 2.0]),
                           confusions=[np.array([[2, 0], [1, 1]]),
                                       np.array([[1, 1], [0, 2]])])
        rec1 = RoundRecord(round=1, per_node_accuracy=np.array([0.75, 0.5]),
                           per_node_loss=np.array([0.5, 1.0]))
        return [rec0, rec1]

    def test_summary_layout(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(self.history(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "round,mean_accuracy,std_accuracy"
        assert lines[1] == "0,0.375,0.125"

    def test_per_node_layout(self, tmp_path):
        path = tmp_path / "per_node.csv"
        write_per_node_csv(self.history(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "round,node,accuracy,loss"
        assert lines[1] == "0,0,0.5,1.0"
        assert len(lines) == 1 + 4

    def test_confusion_skips_zero_cells_and_missing_rounds(self, tmp_path):
        path = tmp_path / "confusion.csv"
        write_confusion_csv(self.history(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "round,node,true_class,pred_class,count"
        assert all(ln.startswith("0,") for ln in lines[1:])
        assert "0,0,0,1,0" not in lines

    def test_community_table_layout(self, tmp_path):
        from decavg import community_confusion

        comms = community_confusion([np.diag([4, 4]), np.array([[3, 1], [2, 2]])],
                                    blocks=[0, 1])
        edges = np.array([[10, 3], [3, 7]])
        path = tmp_path / "table.csv"
        write_community_table_csv(comms, edges, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "section,row,community_0,community_1"
        assert lines[1].startswith("class_accuracy,0,1.0,0.75")
        assert lines[-1] == "external_edges,1,3,7"


class TestRowNormalize:
    def test_zero_rows_preserved(self):
        out = row_normalize(np.array([[0, 0], [2, 2]]))
        assert np.allclose(out, [[0, 0], [0.5, 0.5]])
