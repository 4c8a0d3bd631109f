from argparse import Namespace
from pathlib import Path
from commands.dependencies import get_experiment_config
from evalharness.ensemble import ENSEMBLE_FILE, ensemble_runs, save_ensemble
from evalharness.protocol import STATS_FILE, seed_protocol
from evalharness.report import load_report_input, report
from evalharness.sweeps import block_sweep, m_plus_sweep
from schemas.evaluation import EnsembleSpec, SweepAxis
from utils import settings as st
from utils.exceptions import RunExistsError
from utils.helpers import get_payload, parse_int_list


def experiment_overrides(args: Namespace) -> dict:
    return {
        "name": args.name,
        "output_root": args.output_root,
        "store": args.store,
        "plan": args.plan,
        "seeds": parse_int_list(args.seeds) if args.seeds else None,
        "augment.seed": args.seed,
        "augment.m_plus": args.m_plus,
        "train.max_epochs": args.max_epochs,
    }


def cmd_train(args: Namespace) -> dict:
    config = get_experiment_config(args.config, experiment_overrides(args))
    stats, run_dirs = seed_protocol(config, jobs=args.jobs, force=args.force)
    return get_payload(
        message=f"Trained {stats.n_seeds} seed(s) of '{config.name}'",
        ok=True,
        details={
            "stats": stats.model_dump(),
            "stats_file": str(config.experiment_dir / STATS_FILE),
            "runs": [str(p) for p in run_dirs],
        },
    )


def cmd_sweep(args: Namespace) -> dict:
    config = get_experiment_config(args.config, experiment_overrides(args))
    axis = SweepAxis(args.axis)
    if axis == SweepAxis.block:
        values = parse_int_list(args.values) if args.values else list(st.DEFAULT_BLOCKS)
        result = block_sweep(config, values, jobs=args.jobs, force=args.force)
    else:
        values = parse_int_list(args.values) if args.values else list(st.DEFAULT_M_PLUS_VALUES)
        result = m_plus_sweep(config, values, jobs=args.jobs, force=args.force)

    best = result.best()
    return get_payload(
        message=f"Sweep over {axis.value} finished; best {axis.value}={best.value}",
        ok=True,
        details={
            "sweep_file": str(config.experiment_dir / f"sweep-{axis.value}.json"),
            "points": {p.value: p.stats.model_dump(exclude={"f1_values"}) for p in result.points},
        },
    )


def cmd_ensemble(args: Namespace) -> dict:
    spec = EnsembleSpec(members=[Path(m) for m in args.members], mode=args.mode)
    out = Path(args.out) if args.out else Path(spec.members[0]).parent / f"{args.name or 'ensemble'}-{ENSEMBLE_FILE}"
    if out.exists() and not args.force:
        raise RunExistsError(f"ensemble result {out} already exists; pass --force to overwrite")
    result = ensemble_runs(spec, system=args.name)
    save_ensemble(result, spec, out)
    return get_payload(
        message=f"Ensemble of {len(spec.members)} systems scored",
        ok=True,
        details={"result_file": str(out), "system": result.system, "stats": result.stats.model_dump()},
    )


def cmd_report(args: Namespace) -> dict:
    inputs = [load_report_input(path) for path in args.inputs]
    paths = report(inputs, args.out, force=args.force)
    return get_payload(
        message="Report written",
        ok=True,
        details={kind: str(path) for kind, path in paths.items()},
    )
