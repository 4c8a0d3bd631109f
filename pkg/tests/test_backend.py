import numpy as np
import pytest
from backend.extraction import materialize
from backend.fusion import fuse_concat
from backend.pooling import pool_utterance
from backend.providers import HashTextProvider, HubSpeechProvider, SyntheticProvider, check_block, get_provider
from backend.store import FeatureStore, open_store
from corpus.synthetic import draw_synthetic
from schemas.backend import BackendKind, BackendSpec, Transcript
from schemas.corpus import Corpus, Split, SyntheticConfig
from utils import settings as st
from utils.exceptions import AlignmentError, ConfigError, CorpusValidationError, FeatureError, StoreError
from tests.conftest import make_dialogue


class TestPooling:
    def test_mean_over_frames(self):
        frames = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 9.0]], dtype=np.float32)
        np.testing.assert_allclose(pool_utterance(frames), [3.0, 5.0])

    def test_single_frame_is_identity(self):
        frame = np.array([[0.25, -1.5, 7.0]], dtype=np.float32)
        np.testing.assert_array_equal(pool_utterance(frame), frame[0])

    def test_float32_output(self):
        assert pool_utterance(np.ones((4, 3))).dtype == np.float32

    def test_empty_input(self):
        with pytest.raises(FeatureError):
            pool_utterance(np.zeros((0, 3)))


class TestFusion:
    def test_concat_order_is_kept(self):
        fused = fuse_concat([np.array([1.0, 2.0]), np.array([3.0])])
        np.testing.assert_array_equal(fused, [1.0, 2.0, 3.0])

    def test_matrices_concatenate_columns(self):
        fused = fuse_concat([np.zeros((4, 768)), np.ones((4, 768)), np.ones((4, 32))])
        assert fused.shape == (4, 768 * 2 + 32)

    def test_misaligned_rows(self):
        with pytest.raises(AlignmentError):
            fuse_concat([np.zeros((4, 2)), np.zeros((5, 2))])

    def test_mixed_ranks(self):
        with pytest.raises(AlignmentError):
            fuse_concat([np.zeros(3), np.zeros((1, 3))])


class TestFeatureStore:
    def test_put_get_reopen(self, tmp_path):
        store = FeatureStore.open(tmp_path)
        matrix = np.arange(12, dtype=np.float32).reshape(4, 3)
        store.put("300", "wavlm-pt", 8, matrix)
        reopened = FeatureStore.open(tmp_path)
        np.testing.assert_array_equal(reopened.get("300", "wavlm-pt", 8), matrix)
        assert reopened.relative_path("300", "wavlm-pt", 8) == "wavlm-pt/block08/300.fmat"

    def test_missing_entry(self, tmp_path):
        with pytest.raises(StoreError):
            FeatureStore.open(tmp_path).get("nope", "wavlm-pt", 8)

    def test_corrupted_file_is_invalid(self, tmp_path):
        store = FeatureStore.open(tmp_path)
        entry = store.put("a", "w2v2-pt", 2, np.ones((3, 2), dtype=np.float32))
        path = tmp_path / entry.file
        data = bytearray(path.read_bytes())
        data[-1] ^= 0xFF
        path.write_bytes(bytes(data))
        assert not store.is_valid("a", "w2v2-pt", 2)
        with pytest.raises(StoreError, match="checksum"):
            store.get("a", "w2v2-pt", 2)

    def test_unsafe_session_ids_get_distinct_files(self, tmp_path):
        store = FeatureStore.open(tmp_path)
        assert store.relative_path("a/b", "x", 1) != store.relative_path("a_b", "x", 1)

    def test_corrupted_index(self, tmp_path):
        (tmp_path / st.INDEX_FILE).write_text("{broken\n", encoding="utf-8")
        with pytest.raises(StoreError):
            FeatureStore.open(tmp_path)

    def test_env_root_overrides_explicit_store_loudly(self, tmp_path, monkeypatch, caplog):
        monkeypatch.setattr(st, "STORE_ROOT", str(tmp_path / "env"))
        store = open_store(tmp_path / "explicit")
        assert store.root == tmp_path / "env"
        assert "overrides the store" in caplog.text

    def test_same_root_is_quiet(self, tmp_path, monkeypatch, caplog):
        monkeypatch.setattr(st, "STORE_ROOT", str(tmp_path))
        open_store(tmp_path)
        assert "overrides" not in caplog.text


class TestBackendSpec:
    def test_registry_fills_fields(self):
        spec = BackendSpec(name="wavlm-pt", block=8)
        assert spec.kind == BackendKind.speech
        assert spec.dim == 768
        assert spec.depth == 12

    def test_text_backend_tag_and_block(self):
        spec = BackendSpec(name="roberta", block=5, transcript=Transcript.hyp)
        assert spec.block == 0
        assert spec.tag == "roberta-hyp"

    def test_unregistered_needs_checkpoint(self):
        with pytest.raises(ValueError):
            BackendSpec(name="my-model", block=3)
        spec = BackendSpec(name="wavlm-aer", kind="speech", checkpoint="/models/wavlm-aer", dim=768, depth=12, block=3)
        assert spec.tag == "wavlm-aer"


class TestProviders:
    def test_block_out_of_range(self):
        with pytest.raises(ConfigError):
            check_block(BackendSpec(name="wavlm-pt", block=13))
        with pytest.raises(ConfigError):
            HubSpeechProvider(BackendSpec(name="hubert-pt", block=0))

    def test_hash_text_provider_is_deterministic(self):
        provider = HashTextProvider(BackendSpec(name=st.SYNTHETIC_TEXT_BACKEND))
        a, flagged_a = provider.encode_text("i have been sleeping badly")
        b, _ = provider.encode_text("i have been sleeping badly")
        np.testing.assert_array_equal(a, b)
        assert a.shape == (64,)
        assert not flagged_a

    def test_empty_text_is_flagged(self):
        provider = HashTextProvider(BackendSpec(name=st.SYNTHETIC_TEXT_BACKEND))
        vector, flagged = provider.encode_text("   ")
        assert flagged
        assert np.isfinite(vector).all()

    def test_synthetic_provider_unknown_block(self, synthetic_config):
        with pytest.raises(ConfigError):
            SyntheticProvider(BackendSpec(name=st.SYNTHETIC_BACKEND, block=8), synthetic_config)

    def test_synthetic_needs_config(self):
        with pytest.raises(ConfigError):
            get_provider(BackendSpec(name=st.SYNTHETIC_BACKEND))


class TestMaterialize:
    def _config(self):
        return SyntheticConfig(n_pos=10, n_neg=10, dev_pos=10, dev_neg=10, t_range=(2, 5), dim=4, seed=8)

    def test_fills_one_file_per_session(self, tmp_path):
        config = self._config()
        corpus, features = draw_synthetic(config)
        spec = BackendSpec(name=st.SYNTHETIC_BACKEND, block=0)
        store = materialize(FeatureStore.open(tmp_path), corpus, spec, SyntheticProvider(spec, config), progress=False)
        assert store.last_run == {"written": 40, "skipped": 0}
        assert len(list(tmp_path.rglob("*.fmat"))) == 40
        for dialogue in corpus.dialogues:
            np.testing.assert_array_equal(
                store.get(dialogue.session_id, spec.tag, 0), features[(dialogue.session_id, 0)]
            )

    def test_second_run_is_a_no_op(self, tmp_path):
        config = self._config()
        corpus, _ = draw_synthetic(config)
        spec = BackendSpec(name=st.SYNTHETIC_BACKEND, block=0)
        provider = SyntheticProvider(spec, config)
        materialize(FeatureStore.open(tmp_path), corpus, spec, provider, progress=False)
        store = materialize(FeatureStore.open(tmp_path), corpus, spec, provider, progress=False)
        assert store.last_run == {"written": 0, "skipped": 40}

    def test_corrupted_entry_is_re_extracted(self, tmp_path):
        config = self._config()
        corpus, features = draw_synthetic(config)
        spec = BackendSpec(name=st.SYNTHETIC_BACKEND, block=0)
        provider = SyntheticProvider(spec, config)
        store = materialize(FeatureStore.open(tmp_path), corpus, spec, provider, progress=False)

        victim = corpus.dialogues[3].session_id
        path = tmp_path / store.index[(victim, spec.tag, 0)].file
        path.write_bytes(path.read_bytes()[:20])

        store = materialize(FeatureStore.open(tmp_path), corpus, spec, provider, progress=False)
        assert store.last_run == {"written": 1, "skipped": 39}
        np.testing.assert_array_equal(store.get(victim, spec.tag, 0), features[(victim, 0)])

    def test_text_backend_rows_follow_participant_turns(self, tmp_path, small_corpus):
        spec = BackendSpec(name=st.SYNTHETIC_TEXT_BACKEND)
        store = materialize(FeatureStore.open(tmp_path), small_corpus, spec, HashTextProvider(spec), progress=False)
        first = small_corpus.dialogues[0]
        assert store.get(first.session_id, "synthetic-text-ref", 0).shape == (6, 64)

    def test_session_without_participant_turns_fails_first(self, tmp_path, small_corpus):
        quiet = make_dialogue("quiet", 0, Split.dev, 2, interviewer_every=1)
        corpus = Corpus(dialogues=[*small_corpus.dialogues, quiet])
        spec = BackendSpec(name=st.SYNTHETIC_TEXT_BACKEND)
        with pytest.raises(CorpusValidationError, match="quiet"):
            materialize(FeatureStore.open(tmp_path), corpus, spec, HashTextProvider(spec), progress=False)
        assert not list(tmp_path.rglob("*.fmat"))
