from typing import Iterable, Optional
import numpy as np
from tqdm import tqdm
from backend.pooling import pool_utterance
from backend.providers import SpeechProviderProtocol, TextProviderProtocol, utterance_text
from backend.store import FeatureStore
from schemas.backend import BackendKind, BackendSpec
from corpus.manifest import check_feature_rows
from schemas.corpus import Corpus, Split, Utterance
from utils.exceptions import FeatureError
from utils.logger import get_logger

logger = get_logger(__name__)

FLUSH_EVERY = 50


def extract_block_states(provider: SpeechProviderProtocol, utterance: Utterance) -> np.ndarray:
    states = np.asarray(provider.extract_block_states(utterance), dtype=np.float32)
    if states.ndim != 2 or states.shape[0] < 1:
        raise FeatureError(f"utterance {utterance.index}: backend returned shape {states.shape}")
    if not np.isfinite(states).all():
        raise FeatureError(f"utterance {utterance.index}: backend returned non-finite values")
    return states


def encode_text(provider: TextProviderProtocol, text: str) -> tuple[np.ndarray, bool]:
    vector, flagged = provider.encode_text(text)
    return np.asarray(vector, dtype=np.float32), flagged


def dialogue_features(provider, spec: BackendSpec, utterances: list[Utterance]) -> np.ndarray:
    """One pooled row per utterance, in order."""
    if spec.kind == BackendKind.text:
        rows = []
        for utterance in utterances:
            vector, flagged = encode_text(provider, utterance_text(utterance, spec.transcript))
            if flagged:
                logger.warning("Utterance %d has an empty %s transcript", utterance.index, spec.transcript.value)
            rows.append(vector)
        return np.stack(rows)
    return np.stack([pool_utterance(extract_block_states(provider, u)) for u in utterances])


def materialize(
    store: FeatureStore,
    corpus: Corpus,
    spec: BackendSpec,
    provider,
    include_interviewer: bool = False,
    splits: Iterable[Split] = (Split.train, Split.dev),
    progress: Optional[bool] = None,
) -> FeatureStore:
    """
    Cache the features of every dialogue of `splits` for one backend/block.

    Valid existing entries are skipped, so an interrupted run resumes where
    it stopped and corrupted files are re-extracted. The index is flushed
    periodically and again if extraction fails.
    """
    dialogues = [d for split in splits for d in corpus.split(split)]
    check_feature_rows(dialogues, include_interviewer)
    written = skipped = 0
    try:
        for dialogue in tqdm(dialogues, desc=f"{spec.tag}/block{spec.block}", disable=None if progress is None else not progress):
            utterances = dialogue.feature_utterances(include_interviewer)
            if store.is_valid(dialogue.session_id, spec.tag, spec.block, rows=len(utterances)):
                skipped += 1
                continue

            matrix = dialogue_features(provider, spec, utterances)
            store.put(dialogue.session_id, spec.tag, spec.block, matrix, flush=False)
            written += 1
            if written % FLUSH_EVERY == 0:
                store.flush()
    finally:
        store.flush()
        store.last_run = {"written": written, "skipped": skipped}

    logger.info("Materialized %s block %d: %d written, %d already valid", spec.tag, spec.block, written, skipped)
    return store
