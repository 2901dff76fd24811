# stare_kg/cli.py
"""`stare` command line: preprocess / stats / train / evaluate / gradcheck / serve.

Every subcommand takes `--config FILE` plus trailing `key=value` overrides.
Exit codes: 0 ok, 2 bad config key or value, 1 any other failure (and a
failed gradient check).
"""
import functools
import json
import logging
import os
import sys

import click
import torch

from stare_kg import config as env
from stare_kg.dataset.cleaning import clean_split, filter_rare_entities, make_literal_detector, split_statements
from stare_kg.dataset.io import Split, encode_split, load_split, save_split
from stare_kg.dataset.stats import compute_stats
from stare_kg.dataset.synthetic import generate_synthetic_kg
from stare_kg.dataset.variants import ratio_split, triples_split, truncate_split
from stare_kg.errors import ConfigKeyError, ConfigValueError
from stare_kg.evaluation.evaluator import evaluate_model, model_scorer
from stare_kg.evaluation.filter_index import build_filter_index
from stare_kg.graph.vocabulary import encode_statements
from stare_kg.model.link_predictor import LinkPredictor
from stare_kg.run_config import RunConfig, dump_run_config, load_run_config
from stare_kg.training.gradcheck import grad_check
from stare_kg.training.loss import bce_loss
from stare_kg.training.trainer import Trainer, batch_tensors, build_graph, prepare_training_data

log = logging.getLogger(__name__)

PREPROCESS_MODES = ("clean", "ratio", "truncate", "triples")


# ---------------- helpers ----------------
def resolve_output_dir(config: RunConfig) -> str:
    """STARE_OUTPUT_DIR beats output_dir in the config, which beats ./runs."""
    return os.getenv("STARE_OUTPUT_DIR") or config.output_dir or env.OUTPUT_DIR


def _load_config(config_path, overrides) -> RunConfig:
    config = load_run_config(config_path, overrides)
    torch.manual_seed(config.seed)
    return config


def _write_records(path: str, records):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _write_text(path: str, text: str):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text if text.endswith("\n") else text + "\n")


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigKeyError, ConfigValueError) as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(2)
        except SystemExit:
            raise
        except Exception as e:
            log.exception(f"Command failed | command={fn.__name__}")
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(1)
    return wrapper


def config_options(fn):
    fn = click.argument("overrides", nargs=-1)(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="flat key = value run config")(fn)
    return fn


# ---------------- group ----------------
@click.group()
@click.option("--log-level", default=env.LOG_LEVEL, show_default=True)
def stare(log_level):
    """Hyper-relational link prediction with StarE."""
    env.setup_logging(log_level)


@stare.command()
@click.option("--mode", type=click.Choice(PREPROCESS_MODES), default="clean", show_default=True)
@config_options
@handle_errors
def preprocess(mode, config_path, overrides):
    """Write a cleaned split or a derived variant (ratio / truncate / triples)."""
    config = _load_config(config_path, overrides)
    data = config.data
    out_dir = data.out_dir or os.path.join(resolve_output_dir(config), "data", mode)
    split = load_split(data.dir)

    if mode == "clean":
        if data.rare_min_count > 0:
            pooled = filter_rare_entities(split.all_statements(), data.rare_min_count, data.rare_fixed_point)
            split = split_statements(pooled, data.valid_fraction, data.test_fraction, config.seed)
        detector = make_literal_detector(data.literal_pattern)
        split, report = clean_split(split, detector, data.literal_mode)
        _write_text(os.path.join(out_dir, "cleaning_report.json"), report.model_dump_json(indent=2))
    elif mode == "ratio":
        split = ratio_split(split, data.ratio, config.seed)
    elif mode == "truncate":
        split = truncate_split(split, data.truncate, config.seed)
    else:
        split = triples_split(split)

    save_split(split, out_dir)
    click.echo(f"{mode}: train={len(split.train)} valid={len(split.valid)} test={len(split.test)} -> {out_dir}")


@stare.command()
@config_options
@handle_errors
def stats(config_path, overrides):
    """Dataset statistics report (records + table)."""
    config = _load_config(config_path, overrides)
    name = os.path.basename(os.path.normpath(config.data.dir))
    result = compute_stats(load_split(config.data.dir), name=name)
    out_dir = os.path.join(resolve_output_dir(config), "stats")
    _write_records(os.path.join(out_dir, f"{name}.jsonl"), result.to_records())
    _write_text(os.path.join(out_dir, f"{name}.txt"), result.format_table())
    click.echo(result.format_table())


@stare.command()
@config_options
@handle_errors
def train(config_path, overrides):
    """Train a model; checkpoints and train_log.tsv go under the output directory."""
    config = _load_config(config_path, overrides)
    out_dir = resolve_output_dir(config)
    _write_text(os.path.join(out_dir, "run.conf"), dump_run_config(config))

    vocab, split = encode_split(load_split(config.data.dir))
    data = prepare_training_data(split.train, vocab, config.model.use_qualifiers)
    model = LinkPredictor(data.vocab, config)

    validate = None
    if config.train.eval_every and split.valid:
        filters = build_filter_index(split.train, split.valid, split.test, vocab)

        def _validate(m):
            return evaluate_model(model_scorer(m, data.graph, env.DEVICE), split.valid, filters, data.vocab,
                                  config.decoder.max_len, not config.model.use_qualifiers,
                                  config.eval.batch_size, config.eval.hits_at)

        validate = _validate

    history = Trainer(model, data, out_dir, validate=validate, device=env.DEVICE).fit()
    last = f"{history[-1].loss:.6f}" if history else "n/a"
    click.echo(f"trained {len(history)} epochs, last loss {last} -> {out_dir}")


@stare.command()
@click.option("--split", "split_name", type=click.Choice(("valid", "test")), default=None,
              help="defaults to eval.split")
@click.option("--checkpoint", default=None, help="checkpoint directory (default: <output>/checkpoints/final)")
@config_options
@handle_errors
def evaluate(split_name, checkpoint, config_path, overrides):
    """Filtered MRR / Hits@k for subject and object prediction."""
    config = _load_config(config_path, overrides)
    out_dir = resolve_output_dir(config)
    split_name = split_name or config.eval.split
    checkpoint = checkpoint or os.path.join(out_dir, "checkpoints", "final")

    model = LinkPredictor.load(checkpoint, map_location=env.DEVICE)
    base_vocab = model.vocab.base()
    split = Split(*(encode_statements(part, base_vocab) for part in load_split(config.data.dir)))
    statements = getattr(split, split_name)
    _, _, graph = build_graph(split.train, base_vocab, model.config.model.use_qualifiers)
    filters = build_filter_index(split.train, split.valid, split.test, base_vocab)

    report = evaluate_model(
        model_scorer(model, graph, env.DEVICE), statements, filters, model.vocab,
        max_len=model.config.decoder.max_len, triple_only=not model.config.model.use_qualifiers,
        batch_size=config.eval.batch_size, hits_at=config.eval.hits_at,
    )
    _write_records(os.path.join(out_dir, f"eval_{split_name}.jsonl"), report.to_records())
    _write_text(os.path.join(out_dir, f"eval_{split_name}.txt"), report.format_table())
    click.echo(report.format_table())


@stare.command()
@config_options
@handle_errors
def gradcheck(config_path, overrides):
    """Finite-difference gradient check of the full model on a synthetic toy KG."""
    config = _load_config(config_path or env.TOY_CONFIG_PATH, overrides)
    gc = config.gradcheck
    statements = generate_synthetic_kg(gc.num_entities, gc.num_relations, gc.num_statements,
                                       qualified_fraction=0.5, max_qualifiers=gc.max_qualifiers, seed=config.seed)
    vocab, split = encode_split(Split(statements, [], []))
    data = prepare_training_data(split.train, vocab, config.model.use_qualifiers)
    model = LinkPredictor(data.vocab, config)
    # train 모드 유지 (dropout 은 설정에서 0), eval fast path 회피
    model.train()
    dtype = torch.float64 if config.model.dtype == "float64" else torch.float32
    tokens, mask, labels = batch_tensors(data.queries[:gc.batch_size], data, config.decoder.max_len,
                                         config.train.label_smoothing, dtype=dtype)

    def loss_fn():
        return bce_loss(model(data.graph, tokens, mask), labels, model.num_real_entities)

    report = grad_check(model, loss_fn, step=gc.step, tolerance=gc.tolerance,
                        max_entries=gc.max_entries, seed=config.seed)
    out_dir = resolve_output_dir(config)
    _write_text(os.path.join(out_dir, "gradcheck.json"), report.model_dump_json(indent=2))
    click.echo(report.format_table())
    if not report.passed:
        sys.exit(1)


@stare.command()
@click.option("--checkpoint", default=None, help="checkpoint directory (default: STARE_CHECKPOINT_PATH)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@handle_errors
def serve(checkpoint, host, port):
    """Serve POST /predict and GET /health with uvicorn."""
    import uvicorn

    from stare_kg.main import create_app

    uvicorn.run(create_app(checkpoint_path=checkpoint or env.CHECKPOINT_PATH), host=host, port=port)


if __name__ == "__main__":
    stare()
