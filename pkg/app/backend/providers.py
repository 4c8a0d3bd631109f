from functools import lru_cache
from pathlib import Path
from typing import Optional, Protocol
import numpy as np
import soundfile as sf
import torch
from corpus.synthetic import draw_synthetic, parse_synthetic_audio_ref
from schemas.backend import BackendKind, BackendSpec, Transcript
from schemas.corpus import SyntheticConfig, Utterance
from utils import settings as st
from utils.exceptions import AudioError, ConfigError
from utils.helpers import generate_hash
from utils.logger import get_logger

logger = get_logger(__name__)


class SpeechProviderProtocol(Protocol):
    spec: BackendSpec

    def extract_block_states(self, utterance: Utterance) -> np.ndarray: ...


class TextProviderProtocol(Protocol):
    spec: BackendSpec

    def encode_text(self, text: str) -> tuple[np.ndarray, bool]: ...


def check_block(spec: BackendSpec, depth: Optional[int] = None) -> None:
    """Block k is the output of the k-th encoder block, 1-based."""
    depth = depth or spec.depth
    if spec.kind == BackendKind.speech and depth is not None:
        if not 1 <= spec.block <= depth:
            raise ConfigError(
                f"block {spec.block} out of range for '{spec.name}' (1..{depth})",
                details={"backend": spec.name, "block": spec.block, "depth": depth},
            )


@lru_cache(maxsize=2)
def load_speech_backbone(checkpoint: str, device: str = "cpu"):
    """Frozen feature extractor and model, shared by the providers of every block."""
    from transformers import AutoFeatureExtractor, AutoModel

    logger.info("Loading speech backbone %s", checkpoint)
    extractor = AutoFeatureExtractor.from_pretrained(checkpoint)
    model = AutoModel.from_pretrained(checkpoint).to(device).eval()
    for param in model.parameters():
        param.requires_grad = False
    return extractor, model


class HubSpeechProvider:
    """
    Frozen speech foundation model from the model hub. Returns the hidden
    states after encoder block `spec.block`; `hidden_states[0]` (the output
    before the first encoder block) is never returned.
    """

    def __init__(self, spec: BackendSpec, audio_root: Optional[Path] = None, device: str = "cpu") -> None:
        check_block(spec)
        self.spec = spec
        self.audio_root = Path(audio_root) if audio_root else None
        self.device = device
        self._model = None
        self._extractor = None

    def _load(self):
        self._extractor, self._model = load_speech_backbone(self.spec.checkpoint, self.device)
        check_block(self.spec, depth=self._model.config.num_hidden_layers)

    def resolve_audio(self, utterance: Utterance) -> Path:
        if not utterance.audio_ref:
            raise AudioError(f"utterance {utterance.index} has no audio reference")
        path = Path(utterance.audio_ref)
        if not path.is_absolute() and self.audio_root is not None:
            path = self.audio_root / path
        return path

    def read_audio(self, utterance: Utterance) -> np.ndarray:
        """Read the [start, end) segment of the utterance as mono float32."""
        path = self.resolve_audio(utterance)
        try:
            sample_rate = sf.info(str(path)).samplerate
            if sample_rate != st.SAMPLE_RATE:
                raise AudioError(f"{path}: expected {st.SAMPLE_RATE} Hz audio, got {sample_rate} Hz")
            start = int(round(utterance.start_time * sample_rate))
            stop = int(round(utterance.end_time * sample_rate))
            data, _ = sf.read(str(path), start=start, stop=stop, dtype="float32", always_2d=True)
        except (OSError, RuntimeError) as e:
            raise AudioError(f"cannot read audio {path}: {e}")
        if data.shape[0] == 0:
            raise AudioError(f"{path}: empty segment [{utterance.start_time}, {utterance.end_time})")
        return data.mean(axis=1)

    @torch.inference_mode()
    def extract_block_states(self, utterance: Utterance) -> np.ndarray:
        if self._model is None:
            self._load()
        audio = self.read_audio(utterance)
        inputs = self._extractor(audio, sampling_rate=st.SAMPLE_RATE, return_tensors="pt").to(self.device)
        outputs = self._model(**inputs, output_hidden_states=True)
        states = outputs.hidden_states[self.spec.block][0]
        return states.float().cpu().numpy()


class HubTextProvider:
    """Text foundation model; an utterance is the mean of its final-block token vectors."""

    def __init__(self, spec: BackendSpec, device: str = "cpu") -> None:
        self.spec = spec
        self.device = device
        self._model = None
        self._tokenizer = None

    def _load(self):
        from transformers import AutoModel, AutoTokenizer

        logger.info("Loading text backend %s from %s", self.spec.name, self.spec.checkpoint)
        self._tokenizer = AutoTokenizer.from_pretrained(self.spec.checkpoint)
        self._model = AutoModel.from_pretrained(self.spec.checkpoint).to(self.device).eval()

    @torch.inference_mode()
    def encode_text(self, text: str) -> tuple[np.ndarray, bool]:
        if self._model is None:
            self._load()

        flagged = not text.strip()
        if flagged:
            # single padding token
            inputs = {
                "input_ids": torch.tensor([[self._tokenizer.pad_token_id]]),
                "attention_mask": torch.ones(1, 1, dtype=torch.long),
            }
        else:
            inputs = self._tokenizer(text, return_tensors="pt", truncation=True)
        inputs = {key: value.to(self.device) for key, value in inputs.items()}

        hidden = self._model(**inputs).last_hidden_state[0]
        mask = inputs["attention_mask"][0].unsqueeze(-1).to(hidden.dtype)
        vector = (hidden * mask).sum(dim=0) / mask.sum().clamp(min=1)
        return vector.float().cpu().numpy(), flagged


class HashTextProvider:
    """Deterministic stand-in for a text encoder: the vector is seeded by the text's hash."""

    PAD_TOKEN = "<pad>"

    def __init__(self, spec: BackendSpec) -> None:
        self.spec = spec

    def encode_text(self, text: str) -> tuple[np.ndarray, bool]:
        flagged = not text.strip()
        seed = int(generate_hash(self.PAD_TOKEN if flagged else text)[:16], 16)
        vector = np.random.default_rng(seed).standard_normal(self.spec.dim)
        return vector.astype(np.float32), flagged


class SyntheticProvider:
    """
    Resolves `synthetic://<session>/<index>` references by regenerating the
    synthetic corpus from its config. Frames are already pooled, so every
    utterance comes back as a single-row matrix.
    """

    def __init__(self, spec: BackendSpec, config: SyntheticConfig) -> None:
        if spec.block not in config.blocks:
            raise ConfigError(
                f"synthetic store has no block {spec.block}; available blocks: {config.blocks}",
                details={"block": spec.block},
            )
        self.spec = spec
        self.config = config
        self._features = None

    def extract_block_states(self, utterance: Utterance) -> np.ndarray:
        if self._features is None:
            _, self._features = draw_synthetic(self.config)
        try:
            session_id, index = parse_synthetic_audio_ref(utterance.audio_ref)
            matrix = self._features[(session_id, self.spec.block)]
        except (KeyError, ValueError) as e:
            raise AudioError(f"cannot resolve synthetic audio {utterance.audio_ref!r}: {e}")
        return matrix[index:index + 1]


def get_provider(
    spec: BackendSpec,
    audio_root: Optional[Path] = None,
    synthetic_config: Optional[SyntheticConfig] = None,
    device: str = "cpu",
):
    if spec.kind == BackendKind.synthetic:
        if synthetic_config is None:
            raise ConfigError("the synthetic backend needs the synthetic config saved by `synth`")
        return SyntheticProvider(spec, synthetic_config)
    if spec.kind == BackendKind.text:
        if spec.name == st.SYNTHETIC_TEXT_BACKEND:
            return HashTextProvider(spec)
        return HubTextProvider(spec, device=device)
    return HubSpeechProvider(spec, audio_root=audio_root, device=device)


def utterance_text(utterance: Utterance, transcript: Transcript) -> str:
    if transcript == Transcript.hyp:
        return utterance.hypothesis or ""
    return utterance.text
