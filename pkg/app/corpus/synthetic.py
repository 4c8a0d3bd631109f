from pathlib import Path
import numpy as np
from backend.store import FeatureStore
from schemas.corpus import Corpus, Dialogue, Speaker, Split, SyntheticConfig, Utterance
from utils import settings as st
from utils.helpers import PathLike, atomic_write_text
from utils.logger import get_logger

logger = get_logger(__name__)

SYNTHETIC_SCHEME = "synthetic://"


def synthetic_audio_ref(session_id: str, index: int) -> str:
    return f"{SYNTHETIC_SCHEME}{session_id}/{index}"


def parse_synthetic_audio_ref(audio_ref: str) -> tuple[str, int]:
    if not audio_ref or not audio_ref.startswith(SYNTHETIC_SCHEME):
        raise ValueError(f"not a synthetic audio reference: {audio_ref!r}")
    session_id, _, index = audio_ref[len(SYNTHETIC_SCHEME):].rpartition("/")
    return session_id, int(index)


def draw_synthetic(config: SyntheticConfig) -> tuple[Corpus, dict[tuple[str, int], np.ndarray]]:
    """
    Draw the synthetic corpus and its per-block feature matrices.

    Draw order on a PCG64 generator seeded with `config.seed`: the unit
    direction u (dim normals), the train label permutation, the dev label
    permutation, then per dialogue its utterance count followed by one
    (T, dim) normal block per entry of `config.blocks`, ascending.
    Positive dialogues add signal_at(block) * u to every row.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))

    direction = rng.standard_normal(config.dim)
    direction /= np.linalg.norm(direction)

    layout = []
    for split, n_pos, n_neg in ((Split.train, config.n_pos, config.n_neg), (Split.dev, config.dev_pos, config.dev_neg)):
        labels = rng.permutation(np.array([1] * n_pos + [0] * n_neg, dtype=np.int64))
        layout.extend((split, int(label), i) for i, label in enumerate(labels))

    t_min, t_max = config.t_range
    dialogues = []
    features = {}
    for split, label, i in layout:
        session_id = f"syn-{split.value}-{i:04d}"
        n_utt = int(rng.integers(t_min, t_max + 1))
        utterances = [
            Utterance(
                index=j,
                start_time=2.0 * j,
                end_time=2.0 * j + 1.5,
                speaker=Speaker.participant,
                text=f"{session_id} utterance {j}",
                audio_ref=synthetic_audio_ref(session_id, j),
            )
            for j in range(n_utt)
        ]
        dialogues.append(Dialogue(session_id=session_id, label=label, split=split, utterances=utterances))

        for block in config.blocks:
            rows = rng.standard_normal((n_utt, config.dim)) * config.noise_sigma
            if label == 1:
                rows = rows + config.signal_at(block) * direction
            features[(session_id, block)] = rows.astype(np.float32)

    return Corpus(dialogues=dialogues), features


def generate_synthetic(config: SyntheticConfig, store_root: PathLike) -> tuple[Corpus, FeatureStore]:
    """
    Generate a labelled synthetic corpus and fill a feature store with it
    under the `synthetic` backend tag, one store block per profile entry.
    The config is saved next to the index so the synthetic provider can
    regenerate any entry.
    """
    corpus, features = draw_synthetic(config)
    store = FeatureStore.open(store_root)
    for (session_id, block), matrix in features.items():
        store.put(session_id, st.SYNTHETIC_BACKEND, block, matrix, flush=False)
    store.flush()
    atomic_write_text(store.root / st.SYNTHETIC_CONFIG_FILE, config.model_dump_json(indent=2))

    logger.info(
        "Generated %d synthetic dialogues (%d feature files) into %s",
        len(corpus.dialogues),
        len(features),
        store.root,
    )
    return corpus, store


def load_synthetic_config(store_root: PathLike) -> SyntheticConfig:
    path = Path(store_root) / st.SYNTHETIC_CONFIG_FILE
    return SyntheticConfig.model_validate_json(path.read_text(encoding="utf-8"))
