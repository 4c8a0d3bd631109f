import argparse
from commands.data import cmd_extract, cmd_plan, cmd_synth
from commands.experiments import cmd_ensemble, cmd_report, cmd_sweep, cmd_train
from middleware import apply_error_handlers
from schemas.augment import BalanceMode
from schemas.backend import BackendKind, Transcript
from schemas.evaluation import SweepAxis
from utils.exceptions import ConfigError
from utils.logger import set_level


class CliParser(argparse.ArgumentParser):
    """argparse parser whose usage errors surface as ConfigError (exit 2)."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (.toml or .json)")
    parser.add_argument("--name", help="override the experiment name")
    parser.add_argument("--output-root", dest="output_root")
    parser.add_argument("--store", help="feature store root")
    parser.add_argument("--plan", help="augmentation plan file written by `plan`")
    parser.add_argument("--seeds", help="comma separated training seeds")
    parser.add_argument("--seed", type=int, help="augmentation plan seed")
    parser.add_argument("--m-plus", dest="m_plus", type=int)
    parser.add_argument("--max-epochs", dest="max_epochs", type=int)
    parser.add_argument("--jobs", type=int, default=1, help="parallel seed processes")
    parser.add_argument("--force", action="store_true", help="overwrite existing runs")


def register_synth(commands) -> None:
    parser = commands.add_parser("synth", help="generate a synthetic corpus and feature store")
    parser.add_argument("--out", required=True)
    parser.add_argument("--config", help="synthetic config (.toml or .json)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n-pos", dest="n_pos", type=int)
    parser.add_argument("--n-neg", dest="n_neg", type=int)
    parser.add_argument("--dev-pos", dest="dev_pos", type=int)
    parser.add_argument("--dev-neg", dest="dev_neg", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--signal", type=float)
    parser.add_argument("--block-profile", dest="block_profile", help="block:scale pairs, e.g. 2:0,8:1.0")
    parser.add_argument("--daic-woz-shaped", dest="daic_woz_shaped", action="store_true")
    parser.add_argument("--force", action="store_true")
    parser.set_defaults(handler=cmd_synth)


def register_extract(commands) -> None:
    parser = commands.add_parser("extract", help="materialize backend features into the store")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--backend", required=True)
    parser.add_argument("--blocks", help="comma separated encoder blocks")
    parser.add_argument("--store")
    parser.add_argument("--audio-root", dest="audio_root")
    parser.add_argument("--checkpoint", help="hub id or local path of an unregistered backend")
    parser.add_argument("--kind", choices=[k.value for k in BackendKind])
    parser.add_argument("--dim", type=int)
    parser.add_argument("--transcript", choices=[t.value for t in Transcript], default=Transcript.ref.value)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--include-interviewer", dest="include_interviewer", action="store_true")
    parser.set_defaults(handler=cmd_extract)


def register_plan(commands) -> None:
    parser = commands.add_parser("plan", help="build a sub-dialogue augmentation plan")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--config", help="augment params or experiment config")
    parser.add_argument("--m-plus", dest="m_plus", type=int)
    parser.add_argument("--eps-low", dest="eps_low", type=float)
    parser.add_argument("--eps-high", dest="eps_high", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--balance-mode", dest="balance_mode", choices=[m.value for m in BalanceMode])
    parser.add_argument("--no-balance", dest="no_balance", action="store_true")
    parser.add_argument("--include-interviewer", dest="include_interviewer", action="store_true")
    parser.add_argument("--force", action="store_true")
    parser.set_defaults(handler=cmd_plan)


def register_experiments(commands) -> None:
    train = commands.add_parser("train", help="run the multi-seed protocol of an experiment")
    _add_experiment_flags(train)
    train.set_defaults(handler=cmd_train)

    sweep = commands.add_parser("sweep", help="seed protocol over blocks or M+ values")
    _add_experiment_flags(sweep)
    sweep.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis])
    sweep.add_argument("--values", help="comma separated axis values")
    sweep.set_defaults(handler=cmd_sweep)

    ensemble = commands.add_parser("ensemble", help="majority-vote ensemble of experiments")
    ensemble.add_argument("--members", nargs="+", required=True, help="experiment directories")
    ensemble.add_argument("--mode", choices=["majority"], default="majority")
    ensemble.add_argument("--name")
    ensemble.add_argument("--out")
    ensemble.add_argument("--force", action="store_true")
    ensemble.set_defaults(handler=cmd_ensemble)

    report = commands.add_parser("report", help="summary tables and trend plot")
    report.add_argument("--inputs", nargs="+", required=True, help="sweep files, experiment dirs or ensemble results")
    report.add_argument("--out", required=True)
    report.add_argument("--force", action="store_true")
    report.set_defaults(handler=cmd_report)


def get_parser() -> CliParser:
    parser = CliParser(prog="depprobe", description="Speech depression detection probing toolkit")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)
    register_synth(commands)
    register_extract(commands)
    register_plan(commands)
    register_experiments(commands)
    return parser


@apply_error_handlers
def dispatch(argv=None) -> dict:
    args = get_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    return args.handler(args)
