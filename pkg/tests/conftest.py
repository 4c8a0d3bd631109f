import json
from pathlib import Path
import pytest
from corpus.manifest import write_manifest
from corpus.synthetic import generate_synthetic
from schemas.corpus import Corpus, Dialogue, Speaker, Split, SyntheticConfig, Utterance


def make_dialogue(session_id: str, label: int, split: Split, n_utt: int, interviewer_every: int = 0) -> Dialogue:
    utterances = []
    for j in range(n_utt):
        speaker = Speaker.interviewer if interviewer_every and j % interviewer_every == 0 else Speaker.participant
        utterances.append(
            Utterance(index=j, start_time=float(j), end_time=j + 0.8, speaker=speaker, text=f"{session_id} {j}")
        )
    return Dialogue(session_id=session_id, label=label, split=split, utterances=utterances)


def make_corpus(train=(2, 3), dev=(1, 1), n_utt=6, lengths=None) -> Corpus:
    """Labelled corpus with participant-only dialogues; `lengths` overrides n_utt per train dialogue."""
    dialogues = []
    for split, (n_pos, n_neg) in ((Split.train, train), (Split.dev, dev)):
        for i in range(n_pos + n_neg):
            label = 1 if i < n_pos else 0
            t = lengths[i] if lengths is not None and split == Split.train else n_utt
            dialogues.append(make_dialogue(f"{split.value}-{i:03d}", label, split, t))
    return Corpus(dialogues=dialogues)


@pytest.fixture
def small_corpus() -> Corpus:
    return make_corpus()


@pytest.fixture
def manifest_path(tmp_path, small_corpus) -> Path:
    path = tmp_path / "manifest.jsonl"
    write_manifest(small_corpus, path)
    return path


@pytest.fixture
def synthetic_config() -> SyntheticConfig:
    return SyntheticConfig(n_pos=6, n_neg=6, dev_pos=3, dev_neg=3, t_range=(4, 8), dim=8, seed=3)


@pytest.fixture
def synthetic_workspace(tmp_path, synthetic_config):
    """Synthetic corpus on disk: (manifest path, store, corpus)."""
    corpus, store = generate_synthetic(synthetic_config, tmp_path / "store")
    manifest = tmp_path / "manifest.jsonl"
    write_manifest(corpus, manifest)
    return manifest, store, corpus


def write_experiment(path: Path, **fields) -> Path:
    path.write_text(json.dumps(fields), encoding="utf-8")
    return path
