"""
Command-line interface for the RAF VQA head
Subcommands: gen-synth, train, eval, gradcheck, params, score, ablate
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from config.settings import settings
from src.autodiff.gradcheck import gradient_check
from src.data.dataset_io import Dataset, read_dataset, write_dataset
from src.data.synthetic import LOCATION_CODES, TASKS, SynthSpec, generate_synthetic, marginal_dataset
from src.evaluation.evaluator import dump_attention, evaluate_dataset
from src.evaluation.metrics import (
    read_human_answers,
    read_predictions,
    score_predictions,
    write_predictions,
)
from src.fusion.tucker_fusion import FusionDims, parameter_count
from src.models.raf_model import (
    VARIANTS,
    ModelConfig,
    init_model,
    model_parameter_count,
    probe_example,
)
from src.training.checkpoint import load_checkpoint, save_checkpoint
from src.training.optimizer import TrainConfig
from src.training.trainer import train_phases
from src.utils.fileio import atomic_write_text, atomic_write_tsv

logger = logging.getLogger(__name__)


LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']


def setup_logging(level: Optional[str] = None):
    """Log lines go to stderr (and LOG_FILE when set); stdout is kept for results"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    name = str(level or settings.LOG_LEVEL).upper()
    unknown = name not in LOG_LEVELS
    logging.basicConfig(
        level=logging.INFO if unknown else logging.getLevelName(name),
        format=settings.LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    if unknown:
        logger.warning(f"Unknown log level {name!r}, using INFO")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_training_flags(p: argparse.ArgumentParser):
    p.add_argument('--steps', type=_non_negative_int, default=settings.TRAIN_STEPS)
    p.add_argument('--batch', type=_positive_int, default=settings.BATCH_SIZE)
    p.add_argument('--lr', type=_positive_float, default=settings.LEARNING_RATE)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--preset', default='desk', choices=sorted(settings.PRESETS))
    p.add_argument('--log-every', type=_positive_int, default=settings.LOG_EVERY)
    p.add_argument('--threads', type=_positive_int, default=settings.NUM_THREADS)
    p.add_argument('--warmup-data', default=None, help="Dataset directory trained on before --data")
    p.add_argument('--warmup-steps', type=_non_negative_int, default=0)
    p.add_argument('--warmup-lr', type=_positive_float, default=None, help="Warm-up learning rate (default: --lr)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='raf', description="Reciprocal Attention Fusion VQA head")
    parser.add_argument('--log-level', type=str.upper, choices=LOG_LEVELS, default=None,
                        help="Override RAF_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    gen = subparsers.add_parser('gen-synth', help="Generate a planted synthetic dataset")
    gen.add_argument('--task', required=True, choices=TASKS)
    gen.add_argument('--n', type=_non_negative_int, required=True)
    gen.add_argument('--k', type=_positive_int, default=None, help="Answer classes (default: preset)")
    gen.add_argument('--sigma', type=float, default=settings.SYNTH_NOISE)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--preset', default='desk', choices=sorted(settings.PRESETS))
    gen.add_argument('--location-code', default='binary', choices=LOCATION_CODES)
    gen.add_argument('--out', required=True)
    gen.add_argument('--marginal-out', default=None,
                     help="Also write the marginal-label warm-up set for the same draws here")
    gen.set_defaults(handler=cmd_gen_synth)

    tr = subparsers.add_parser('train', help="Train a model on a dataset directory")
    tr.add_argument('--data', required=True)
    tr.add_argument('--variant', default='io', choices=[v.lower() for v in VARIANTS])
    tr.add_argument('--out', required=True)
    tr.add_argument('--history', default=None, help="Write step<TAB>mean_loss here")
    tr.add_argument('--no-shuffle', action='store_true')
    _add_training_flags(tr)
    tr.set_defaults(handler=cmd_train)

    ev = subparsers.add_parser('eval', help="Evaluate a checkpoint on a dataset directory")
    ev.add_argument('--data', required=True)
    ev.add_argument('--ckpt', required=True)
    ev.add_argument('--humans', default=None)
    ev.add_argument('--subset-average', action='store_true')
    ev.add_argument('--dump-attention', default=None)
    ev.add_argument('--preds', default=None, help="Write qid<TAB>answer predictions here")
    ev.add_argument('--threads', type=_positive_int, default=settings.NUM_THREADS)
    ev.set_defaults(handler=cmd_eval)

    gc = subparsers.add_parser('gradcheck', help="Compare backprop against finite differences")
    gc.add_argument('--seed', type=int, default=0)
    gc.add_argument('--preset', default='desk', choices=sorted(settings.PRESETS))
    gc.add_argument('--h', type=_positive_float, default=settings.GRADCHECK_STEP)
    gc.add_argument('--tol', type=_positive_float, default=settings.GRADCHECK_TOLERANCE)
    gc.add_argument('--variant', default='all', choices=['all'] + [v.lower() for v in VARIANTS])
    gc.set_defaults(handler=cmd_gradcheck)

    pc = subparsers.add_parser('params', help="Full vs Tucker parameter counts of one fusion unit")
    for flag in ('--nq', '--nv', '--nout', '--tq', '--tv', '--trho'):
        pc.add_argument(flag, type=_positive_int, required=True)
    pc.set_defaults(handler=cmd_params)

    sc = subparsers.add_parser('score', help="Consensus accuracy of a predictions file")
    sc.add_argument('--pred', required=True)
    sc.add_argument('--human', required=True)
    sc.add_argument('--subset-average', action='store_true')
    sc.set_defaults(handler=cmd_score)

    ab = subparsers.add_parser('ablate', help="Train and compare the I, O and IO variants")
    ab.add_argument('--data', required=True)
    ab.add_argument('--heldout', required=True)
    ab.add_argument('--out', default=None, help="Also write the table here")
    _add_training_flags(ab)
    ab.set_defaults(handler=cmd_ablate)

    return parser


def cmd_gen_synth(args) -> int:
    overrides = {'noise': args.sigma, 'seed': args.seed, 'location_code': args.location_code}
    if args.k is not None:
        overrides['answers'] = args.k
    spec = SynthSpec.from_preset(args.preset, args.task, args.n, **overrides)
    data, _ = generate_synthetic(spec)
    write_dataset(data, args.out)
    print(f"wrote {len(data)} examples to {args.out}")
    if args.marginal_out:
        marginal = marginal_dataset(spec)
        write_dataset(marginal, args.marginal_out)
        print(f"wrote {len(marginal)} marginal-label examples to {args.marginal_out}")
    return 0


def _config_for_dataset(data: Dataset, preset: str, variant: str, seed: int) -> ModelConfig:
    dims = settings.get_preset(preset)
    wanted = (dims['n_q'], dims['n_v'], dims['grid'], dims['objects'])
    found = (data.n_q, data.n_v, data.grid, data.objects)
    if wanted != found:
        raise ValueError(f"preset '{preset}' has (n_q, n_v, G, N) = {wanted} but the dataset has {found}")
    return ModelConfig.from_preset(preset, variant=variant, seed=seed, answers=len(data.vocab))


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr, batch_size=args.batch, steps=args.steps, seed=args.seed,
        shuffle=not getattr(args, 'no_shuffle', False), log_every=args.log_every,
        threads=args.threads,
    )


def _training_phases(args, data: Dataset) -> List[Tuple[Dataset, TrainConfig]]:
    """Optional warm-up phase on --warmup-data, then the main run on --data"""
    main = _train_config(args)
    if not args.warmup_data or args.warmup_steps == 0:
        return [(data, main)]
    warmup = read_dataset(args.warmup_data)
    if len(warmup.vocab) != len(data.vocab):
        raise ValueError(f"warm-up data has {len(warmup.vocab)} answers but --data has {len(data.vocab)}")
    warmup_cfg = replace(main, steps=args.warmup_steps, learning_rate=args.warmup_lr or args.lr)
    return [(warmup, warmup_cfg), (data, main)]


def cmd_train(args) -> int:
    data = read_dataset(args.data)
    cfg = _config_for_dataset(data, args.preset, args.variant, args.seed)
    phases = _training_phases(args, data)

    result = train_phases(init_model(cfg), phases)
    save_checkpoint(result.model, args.out, result.adam_state)
    if args.history:
        atomic_write_tsv(pd.DataFrame({'step': result.history_steps, 'mean_loss': result.loss_history}),
                         args.history, header=True)

    final = result.loss_history[-1] if result.loss_history else float('nan')
    print(f"steps={result.steps_completed} final_loss={final:.6f} checkpoint={args.out}")
    if result.diverged:
        logger.error(f"Training diverged after {result.steps_completed} steps; saved last good parameters")
        return 1
    return 0


def cmd_eval(args) -> int:
    data = read_dataset(args.data)
    model = load_checkpoint(args.ckpt)
    humans = read_human_answers(args.humans) if args.humans else None

    report = evaluate_dataset(model, data, humans, args.subset_average, args.threads)
    if args.preds:
        write_predictions(report.predictions, args.preds)
    if args.dump_attention:
        dump_attention(model, data, args.dump_attention)

    print(f"accuracy={report.overall:.4f} count={report.count}")
    return 0


def cmd_gradcheck(args) -> int:
    variants = VARIANTS if args.variant == 'all' else (args.variant.upper(),)
    all_passed = True
    for variant in variants:
        cfg = ModelConfig.from_preset(args.preset, variant=variant, seed=args.seed)
        report = gradient_check(init_model(cfg), probe_example(cfg, args.seed),
                                h=args.h, tol=args.tol, seed=args.seed)
        for name, error in report.max_errors.items():
            print(f"RAF-{variant}\t{name}\t{error:.3e}")
        if report.message:
            print(f"RAF-{variant}\terror\t{report.message}")
        print(f"RAF-{variant}\t{'PASS' if report.passed else 'FAIL'}\tworst={report.worst:.3e}")
        all_passed = all_passed and report.passed
    return 0 if all_passed else 1


def cmd_params(args) -> int:
    dims = FusionDims(args.nq, args.nv, args.tq, args.tv, args.trho, args.nout)
    full, tucker = parameter_count(dims)
    print(f"full={full} tucker={tucker}")
    return 0


def cmd_score(args) -> int:
    report = score_predictions(read_predictions(args.pred), read_human_answers(args.human),
                               args.subset_average)
    print(f"accuracy={report.overall:.4f} count={report.count}")
    return 0


def cmd_ablate(args) -> int:
    data = read_dataset(args.data)
    heldout = read_dataset(args.heldout)
    phases = _training_phases(args, data)

    rows = []
    for variant in ('I', 'O', 'IO'):
        cfg = _config_for_dataset(data, args.preset, variant, args.seed)
        result = train_phases(init_model(cfg), phases)
        if result.diverged:
            raise FloatingPointError(f"RAF-{variant} diverged after {result.steps_completed} steps")
        report = evaluate_dataset(result.model, heldout, threads=args.threads)
        rows.append((f"RAF-{variant}", model_parameter_count(cfg)['total'], round(report.overall, 4)))

    table = pd.DataFrame(rows, columns=['variant', 'parameters', 'accuracy'])
    text = table.to_csv(sep='\t', index=False, lineterminator='\n')
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return 0


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Parse `argv` and run one subcommand

    Returns 0 on success, 2 on a usage error, 1 on any runtime failure.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    setup_logging(args.log_level)
    logger.debug(f"Settings: {settings.get_all_settings()}")
    try:
        return args.handler(args)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
