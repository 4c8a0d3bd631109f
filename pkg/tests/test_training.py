import json
import pytest
import torch
from augment.shuffling import build_plan
from detector.model import init_detector
from detector.run_io import load_model, load_run, save_run
from detector.training import batch_loss, collate_batch, load_features, SubDialogueDataset, train
from evalharness.protocol import seed_protocol
from schemas.augment import AugmentParams
from schemas.backend import BackendSpec
from schemas.corpus import Corpus, Split
from schemas.detector import DetectorConfig, TrainConfig
from schemas.experiment import ExperimentConfig
from utils import settings as st
from utils.exceptions import ProtocolError, RunExistsError, TrainingError

SYNTHETIC = [BackendSpec(name=st.SYNTHETIC_BACKEND, block=0, dim=8)]


def quick_train(manifest_store_corpus, seed=0, **train_overrides):
    _, store, corpus = manifest_store_corpus
    plan = build_plan(corpus, AugmentParams(m_plus=4, seed=1))
    train_config = TrainConfig(max_epochs=3, patience=2, batch_size=8, seed=seed, **train_overrides)
    return train(store, plan, corpus, DetectorConfig(input_dim=8, seed=seed), train_config, SYNTHETIC)


class TestBatchLoss:
    def test_matches_log_sum_exp(self, synthetic_workspace):
        _, store, corpus = synthetic_workspace
        plan = build_plan(corpus, AugmentParams(m_plus=3, seed=2))
        features = load_features(store, corpus, SYNTHETIC, [d.session_id for d in corpus.split(Split.train)])
        dataset = SubDialogueDataset(plan, features)
        batch, mask, labels = collate_batch([dataset[i] for i in range(8)])

        model = init_detector(DetectorConfig(input_dim=8, seed=0)).eval()
        with torch.no_grad():
            logits = model(batch, mask).double()
            expected = (torch.logsumexp(logits, dim=1) - logits[torch.arange(8), labels]).mean()
            assert abs(batch_loss(model, batch, mask, labels).item() - expected.item()) <= 1e-6

    def test_collate_marks_padding(self):
        items = [(torch.ones(2, 3), 1), (torch.ones(4, 3), 0)]
        batch, mask, labels = collate_batch(items)
        assert batch.shape == (2, 4, 3)
        assert mask.tolist() == [[False, False, True, True], [False, False, False, False]]
        assert labels.tolist() == [1, 0]
        assert batch[0, 2:].abs().sum() == 0


class TestTrain:
    def test_plan_store_mismatch_fails_early(self, synthetic_workspace):
        _, store, corpus = synthetic_workspace
        plan = build_plan(corpus, AugmentParams(m_plus=2))
        victim = corpus.split(Split.train)[0].session_id
        del store.index[(victim, st.SYNTHETIC_BACKEND, 0)]
        with pytest.raises(TrainingError, match="no features"):
            train(store, plan, corpus, DetectorConfig(input_dim=8), TrainConfig(max_epochs=2, patience=1), SYNTHETIC)

    def test_empty_dev_split(self, synthetic_workspace):
        _, store, corpus = synthetic_workspace
        train_only = Corpus(dialogues=corpus.split(Split.train))
        plan = build_plan(train_only, AugmentParams(m_plus=2))
        with pytest.raises(TrainingError, match="dev split"):
            train(store, plan, train_only, DetectorConfig(input_dim=8), TrainConfig(max_epochs=2, patience=1), SYNTHETIC)

    def test_wrong_input_dim(self, synthetic_workspace):
        _, store, corpus = synthetic_workspace
        plan = build_plan(corpus, AugmentParams(m_plus=2))
        with pytest.raises(TrainingError):
            train(store, plan, corpus, DetectorConfig(input_dim=9), TrainConfig(max_epochs=2, patience=1), SYNTHETIC)

    def test_run_is_reproducible(self, synthetic_workspace):
        first = quick_train(synthetic_workspace, seed=3)
        second = quick_train(synthetic_workspace, seed=3)
        assert first.dev_predictions == second.dev_predictions
        assert first.curve == second.curve
        assert all(torch.equal(first.state_dict[k], second.state_dict[k]) for k in first.state_dict)

    def test_curve_and_predictions(self, synthetic_workspace):
        run = quick_train(synthetic_workspace)
        _, _, corpus = synthetic_workspace
        assert 1 <= len(run.curve) <= 3
        assert [p.epoch for p in run.curve] == list(range(1, len(run.curve) + 1))
        assert {p.session_id for p in run.dev_predictions} == set(corpus.labels(Split.dev))
        assert run.dev_f1 == max(p.dev_f1 for p in run.curve)

    def test_normalization_is_recorded(self, synthetic_workspace):
        _, store, corpus = synthetic_workspace
        plan = build_plan(corpus, AugmentParams(m_plus=2))
        run = train(
            store, plan, corpus, DetectorConfig(input_dim=8), TrainConfig(max_epochs=2, patience=1), SYNTHETIC,
            normalize=True,
        )
        assert len(run.normalization["mean"]) == 8


class TestRunDirectory:
    def test_save_and_load(self, tmp_path, synthetic_workspace):
        run = quick_train(synthetic_workspace)
        run_dir = save_run(run, tmp_path / "seed-00")
        assert {p.name for p in run_dir.iterdir()} == {"params.bin", "config.json", "dev_predictions.jsonl", "curve.csv"}
        config = json.loads((run_dir / "config.json").read_text())
        assert config["seeds"] == {"detector": 0, "train": 0}

        restored = load_run(run_dir)
        assert restored.dev_predictions == run.dev_predictions
        assert [p.epoch for p in restored.curve] == [p.epoch for p in run.curve]
        model = load_model(restored)
        assert all(torch.equal(model.state_dict()[k], run.state_dict[k]) for k in run.state_dict)

    def test_refuses_to_overwrite(self, tmp_path, synthetic_workspace):
        run = quick_train(synthetic_workspace)
        save_run(run, tmp_path / "seed-00")
        with pytest.raises(RunExistsError):
            save_run(run, tmp_path / "seed-00")
        save_run(run, tmp_path / "seed-00", force=True)

    def test_curve_csv_columns(self, tmp_path, synthetic_workspace):
        run_dir = save_run(quick_train(synthetic_workspace), tmp_path / "run")
        assert (run_dir / "curve.csv").read_text().splitlines()[0] == "epoch,train_loss,dev_f1"


def small_experiment(tmp_path, synthetic_workspace, dim=8, seeds=(0, 1)):
    manifest, store, _ = synthetic_workspace
    return ExperimentConfig(
        name="small",
        manifest=manifest,
        store=store.root,
        backends=[{"name": st.SYNTHETIC_BACKEND, "block": 0, "dim": dim}],
        augment={"m_plus": 4, "seed": 1},
        train={"max_epochs": 2, "patience": 1, "batch_size": 8},
        seeds=list(seeds),
        output_root=tmp_path / "runs",
    )


class TestSeedProtocol:
    def test_stats_and_runs(self, tmp_path, synthetic_workspace):
        config = small_experiment(tmp_path, synthetic_workspace)
        stats, run_dirs = seed_protocol(config)
        assert stats.n_seeds == 2
        assert [p.name for p in run_dirs] == ["seed-00", "seed-01"]
        summary = json.loads((config.experiment_dir / "stats.json").read_text())
        assert summary["system"] == "small"
        assert [r["seed"] for r in summary["runs"]] == [0, 1]
        assert stats.f1_max == max(r["dev_f1"] for r in summary["runs"])

    def test_existing_runs_need_force(self, tmp_path, synthetic_workspace):
        config = small_experiment(tmp_path, synthetic_workspace, seeds=(0,))
        seed_protocol(config)
        with pytest.raises(RunExistsError):
            seed_protocol(config)
        seed_protocol(config, force=True)

    def test_force_with_fewer_seeds_drops_stale_runs(self, tmp_path, synthetic_workspace):
        seed_protocol(small_experiment(tmp_path, synthetic_workspace, seeds=(0, 1, 2)))
        config = small_experiment(tmp_path, synthetic_workspace, seeds=(0,))
        stats, _ = seed_protocol(config, force=True)
        assert stats.n_seeds == 1
        assert sorted(p.name for p in config.experiment_dir.glob("seed-*")) == ["seed-00"]
        summary = json.loads((config.experiment_dir / "stats.json").read_text())
        assert len(summary["runs"]) == 1

    def test_failure_names_the_seed(self, tmp_path, synthetic_workspace):
        config = small_experiment(tmp_path, synthetic_workspace, dim=9, seeds=(5, 6))
        with pytest.raises(ProtocolError, match="seed 5") as info:
            seed_protocol(config)
        assert info.value.seed == 5
        assert not (config.experiment_dir / "stats.json").exists()


class TestExperimentStore:
    def test_configured_store(self, tmp_path, synthetic_workspace):
        config = small_experiment(tmp_path, synthetic_workspace)
        assert config.resolve_store() == synthetic_workspace[1].root

    def test_env_root_wins_with_a_warning(self, tmp_path, synthetic_workspace, monkeypatch, caplog):
        monkeypatch.setattr(st, "STORE_ROOT", str(tmp_path / "elsewhere"))
        config = small_experiment(tmp_path, synthetic_workspace)
        assert config.resolve_store() == tmp_path / "elsewhere"
        assert "overrides the configured store" in caplog.text
