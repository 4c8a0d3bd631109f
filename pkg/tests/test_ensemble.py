import itertools
import json
import numpy as np
import pytest
from pydantic import ValidationError
from detector.run_io import PREDICTIONS_FILE, CONFIG_FILE
from evalharness.ensemble import ensemble_runs, majority_vote, vote_sessions
from evalharness.metrics import f1
from schemas.evaluation import EnsembleSpec
from evalharness.protocol import STATS_FILE
from utils.exceptions import EnsembleError
from utils.helpers import write_jsonl


def write_member(root, name, runs, recorded=None):
    """runs: per seed, a list of (label, pred) per session; the first `recorded` go into stats.json."""
    member = root / name
    recorded = len(runs) if recorded is None else recorded
    member.mkdir(parents=True)
    (member / STATS_FILE).write_text(
        json.dumps({"system": name, "runs": [{"seed": i, "run_dir": f"seed-{i:02d}"} for i in range(recorded)]})
    )
    for index, rows in enumerate(runs):
        run_dir = member / f"seed-{index:02d}"
        run_dir.mkdir(parents=True)
        (run_dir / CONFIG_FILE).write_text("{}")
        write_jsonl(
            run_dir / PREDICTIONS_FILE,
            [{"session_id": f"s{i}", "label": label, "pred": pred, "score": float(pred)} for i, (label, pred) in enumerate(rows)],
        )
    return member


class TestMajorityVote:
    def test_two_of_three(self):
        assert majority_vote([[1], [1], [0]]) == [1]

    def test_single_member_is_identity(self):
        assert majority_vote([[1, 0, 1, 1]]) == [1, 0, 1, 1]

    @pytest.mark.parametrize("k", [3, 5])
    def test_exhaustive_enumeration(self, k):
        columns = list(itertools.product([0, 1], repeat=k))
        fused = majority_vote([[column[m] for column in columns] for m in range(k)])
        assert fused == [int(sum(column) > k // 2) for column in columns]

    def test_even_count(self):
        with pytest.raises(EnsembleError):
            majority_vote([[1], [0]])

    def test_ragged_members(self):
        with pytest.raises(EnsembleError):
            majority_vote([[1, 0], [1], [0, 0]])

    def test_misaligned_sessions(self):
        with pytest.raises(EnsembleError):
            vote_sessions([{"a": 1, "b": 0}, {"a": 1, "c": 0}, {"a": 0, "b": 1}])

    def test_identical_members_change_nothing(self):
        member = {"a": 1, "b": 0, "c": 1}
        assert vote_sessions([member, member, member]) == member

    def test_independent_members_accuracy(self):
        p, n = 0.8, 2000
        rng = np.random.default_rng(0)
        labels = rng.permutation(np.array([1] * (n // 2) + [0] * (n // 2)))
        members = [np.where(rng.random(n) < p, labels, 1 - labels) for _ in range(3)]
        fused = np.array(majority_vote([m.tolist() for m in members]))
        expected = p ** 3 + 3 * p ** 2 * (1 - p)
        assert expected == pytest.approx(0.896)
        assert abs((fused == labels).mean() - expected) <= 0.03


class TestEnsembleRuns:
    def test_needs_odd_member_count(self, tmp_path):
        with pytest.raises(ValidationError):
            EnsembleSpec(members=[tmp_path / "a", tmp_path / "b"])

    def test_identical_members_match_member_stats(self, tmp_path):
        runs = [[(1, 1), (0, 1), (1, 0), (0, 0)], [(1, 1), (0, 0), (1, 1), (0, 0)]]
        members = [write_member(tmp_path, name, runs) for name in ("a", "b", "c")]
        result = ensemble_runs(EnsembleSpec(members=members))
        per_seed = []
        for rows in runs:
            refs = {f"s{i}": label for i, (label, _) in enumerate(rows)}
            preds = {f"s{i}": pred for i, (_, pred) in enumerate(rows)}
            per_seed.append(f1(preds, refs)[2])
        assert result.stats.f1_values == pytest.approx(per_seed)
        assert result.system == "a+b+c"

    def test_pairs_runs_by_seed_index(self, tmp_path):
        good = [[(1, 1), (0, 0)]]
        bad = [[(1, 0), (0, 1)]]
        members = [write_member(tmp_path, "a", good), write_member(tmp_path, "b", good), write_member(tmp_path, "c", bad)]
        assert ensemble_runs(EnsembleSpec(members=members)).stats.f1_avg == 1.0

    def test_different_seed_counts(self, tmp_path):
        one = [[(1, 1)]]
        two = [[(1, 1)], [(1, 1)]]
        members = [write_member(tmp_path, "a", one), write_member(tmp_path, "b", one), write_member(tmp_path, "c", two)]
        with pytest.raises(EnsembleError):
            ensemble_runs(EnsembleSpec(members=members))

    def test_only_recorded_runs_are_voted(self, tmp_path):
        good = [(1, 1), (0, 0)]
        leftover = [(1, 0), (0, 1)]
        members = [write_member(tmp_path, name, [good, leftover], recorded=1) for name in ("a", "b", "c")]
        result = ensemble_runs(EnsembleSpec(members=members))
        assert result.stats.n_seeds == 1
        assert result.stats.f1_avg == 1.0

    def test_member_without_stats(self, tmp_path):
        members = [write_member(tmp_path, name, [[(1, 1)]]) for name in ("a", "b")]
        (tmp_path / "c").mkdir()
        with pytest.raises(EnsembleError, match="no completed protocol"):
            ensemble_runs(EnsembleSpec(members=[*members, tmp_path / "c"]))
