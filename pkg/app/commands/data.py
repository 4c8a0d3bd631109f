import json
import shutil
from argparse import Namespace
from pathlib import Path
from augment.shuffling import build_plan
from backend.extraction import materialize
from backend.providers import get_provider
from commands.dependencies import get_store, get_synthetic_config
from corpus.manifest import load_manifest, write_manifest
from corpus.synthetic import generate_synthetic
from schemas.augment import AugmentParams
from schemas.backend import BackendKind, BackendSpec
from schemas.corpus import SyntheticConfig
from serializer.jsonl import write_plan
from utils import settings as st
from utils.exceptions import RunExistsError
from utils.helpers import (
    apply_overrides,
    atomic_write_text,
    get_payload,
    load_config_file,
    parse_block_profile,
    parse_int_list,
)
EXAMPLE_EXPERIMENT_FILE = "experiment.json"


def example_experiment(config: SyntheticConfig) -> dict:
    """Small experiment over the synthetic store; sized for a laptop run."""
    blocks = config.blocks
    block = 8 if 8 in blocks else blocks[0]
    return {
        "name": "synthetic",
        "manifest": st.MANIFEST_FILE,
        "store": "store",
        "output_root": "runs",
        "backends": [{"name": st.SYNTHETIC_BACKEND, "block": block, "dim": config.dim}],
        "augment": {"m_plus": 50, "seed": config.seed},
        "train": {"max_epochs": 10, "patience": 3},
        "seeds": [0, 1, 2, 3, 4],
    }


def cmd_synth(args: Namespace) -> dict:
    raw = load_config_file(args.config) if args.config else {}
    if args.daic_woz_shaped:
        raw = {**SyntheticConfig.daic_woz_shaped().model_dump(), **raw}
    apply_overrides(
        raw,
        {
            "seed": args.seed,
            "n_pos": args.n_pos,
            "n_neg": args.n_neg,
            "dev_pos": args.dev_pos,
            "dev_neg": args.dev_neg,
            "dim": args.dim,
            "signal": args.signal,
            "block_profile": parse_block_profile(args.block_profile) if args.block_profile else None,
        },
    )
    config = SyntheticConfig.model_validate(raw)

    out = Path(args.out)
    manifest_path = out / st.MANIFEST_FILE
    store_root = out / "store"
    if manifest_path.exists() or store_root.exists():
        if not args.force:
            raise RunExistsError(f"{out} already holds a synthetic corpus; pass --force to overwrite")
        shutil.rmtree(store_root, ignore_errors=True)

    corpus, store = generate_synthetic(config, store_root)
    write_manifest(corpus, manifest_path)
    experiment_path = out / EXAMPLE_EXPERIMENT_FILE
    atomic_write_text(experiment_path, json.dumps(example_experiment(config), indent=2))

    return get_payload(
        message="Synthetic corpus generated",
        ok=True,
        details={
            "manifest": str(manifest_path),
            "store": str(store.root),
            "experiment_config": str(experiment_path),
            "dialogues": len(corpus.dialogues),
            "blocks": config.blocks,
        },
    )


def cmd_extract(args: Namespace) -> dict:
    corpus = load_manifest(args.manifest)
    store = get_store(args.store, manifest=args.manifest)
    base = BackendSpec(
        name=args.backend,
        checkpoint=args.checkpoint,
        kind=args.kind,
        dim=args.dim,
        transcript=args.transcript,
    )
    synthetic_config = get_synthetic_config(store) if base.kind == BackendKind.synthetic else None
    if base.kind == BackendKind.text:
        blocks = [0]
    elif args.blocks:
        blocks = parse_int_list(args.blocks)
    else:
        blocks = synthetic_config.blocks if synthetic_config else list(st.DEFAULT_BLOCKS)

    results = {}
    for block in blocks:
        spec = base.with_block(block)
        provider = get_provider(spec, audio_root=args.audio_root, synthetic_config=synthetic_config, device=args.device)
        materialize(store, corpus, spec, provider, include_interviewer=args.include_interviewer)
        results[block] = store.last_run

    return get_payload(
        message=f"Features materialized for '{base.tag}'",
        ok=True,
        details={"store": str(store.root), "backend": base.tag, "blocks": results},
    )


def cmd_plan(args: Namespace) -> dict:
    corpus = load_manifest(args.manifest)
    raw = load_config_file(args.config) if args.config else {}
    if "manifest" in raw or "augment" in raw:
        # an experiment config
        raw = raw.get("augment", {})
    apply_overrides(
        raw,
        {
            "m_plus": args.m_plus,
            "eps_low": args.eps_low,
            "eps_high": args.eps_high,
            "seed": args.seed,
            "balance_mode": args.balance_mode,
            "balance": False if args.no_balance else None,
        },
    )
    params = AugmentParams.model_validate(raw)

    out = Path(args.out)
    if out.exists() and not args.force:
        raise RunExistsError(f"plan file {out} already exists; pass --force to overwrite")
    plan = build_plan(corpus, params, include_interviewer=args.include_interviewer)
    write_plan(plan, out)

    counts = plan.label_counts()
    return get_payload(
        message="Augmentation plan written",
        ok=True,
        details={
            "plan": str(out),
            "m_plus": params.m_plus,
            "m_minus": plan.m_minus,
            "positive_entries": counts[1],
            "negative_entries": counts[0],
        },
    )
