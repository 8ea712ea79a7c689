"""Command-line pipeline: fit, sample, explain, pool, rank, report.

Every stage reads and writes documented CSV/JSON artifacts inside the output
directory, so the stages compose and resume. One master seed drives all
stage seeds through a hashed derivation (see util.derive_seed); `run` is
byte-identical to executing the stage subcommands in sequence.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import pooling, ranking, reliance, report, sampling, shapley
from .data import SplitSpec, load_csv, split, write_csv
from .errors import ConfigError, DataError, NumericError, ShapcloudError
from .logistic import fit_logistic, load_model, save_model
from .util import derive_seed

RUN_STAGES = (
    "fit",
    "sample",
    "explain-optimal",
    "importance",
    "pool",
    "rank",
    "report",
)
RUN_ARTIFACTS = (
    "model.json",
    "models.csv",
    "shap_summary.csv",
    "shap_summary.svg",
    "importance.csv",
    "pooled.csv",
    "rank_frequency.csv",
    "bar.svg",
    "violin.svg",
)


@dataclass(frozen=True)
class RunConfig:
    data: str = ""
    outcome: str = "outcome"
    out: str = "shapcloud_out"
    train_fraction: float = 0.9
    seed: int = 0
    epsilon: float = 0.05
    m0: int = 5000
    u1: float = 0.5
    u2: float = 40.0
    target_min: int = 300
    target_max: int = 400
    models: int = 350
    coverage_bins: int = 10
    max_rounds: int = 5
    n_permutations: int = 256
    background_rows: int = 512
    instance_cap: int = 1000
    n_slices: int = 20
    alpha: float = 0.05
    workers: int = 1
    vic_permutations: int = 20

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def sampler_config(self) -> sampling.SamplerConfig:
        return sampling.SamplerConfig(
            epsilon=self.epsilon,
            m0=self.m0,
            u1=self.u1,
            u2=self.u2,
            target_min=self.target_min,
            target_max=self.target_max,
            coverage_bins=self.coverage_bins,
            max_rounds=self.max_rounds,
            seed=self.stage_seed("sample"),
            target_count=self.models,
        )

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)


def load_config(config_path: str | None, overrides: dict) -> RunConfig:
    """Flat JSON config file; any CLI flag overrides its config key."""
    known = {f.name for f in fields(RunConfig)}
    merged: dict = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}") from None
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(doc)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_split(cfg: RunConfig, name: str):
    path = cfg.path(f"{name}.csv")
    if not os.path.exists(path):
        raise DataError(f"{path} not found; run the fit stage first")
    return load_csv(path, cfg.outcome, enforce_size=False)


def stage_fit(cfg: RunConfig) -> None:
    if not cfg.data:
        raise ConfigError("no input data file given (use --data)")
    dataset = load_csv(cfg.data, cfg.outcome)
    train, test = split(dataset, SplitSpec(cfg.train_fraction, cfg.stage_seed("split")))
    os.makedirs(cfg.out, exist_ok=True)
    write_csv(train, cfg.path("train.csv"), cfg.outcome)
    write_csv(test, cfg.path("test.csv"), cfg.outcome)
    model = fit_logistic(train)
    save_model(model, cfg.path("model.json"))


def stage_sample(cfg: RunConfig) -> None:
    model = load_model(cfg.path("model.json"))
    train = _load_split(cfg, "train")
    sample = sampling.sample_rashomon(model, train, cfg.sampler_config())
    sampling.write_models_csv(sample, cfg.path("models.csv"))


def stage_explain_optimal(cfg: RunConfig) -> None:
    model = load_model(cfg.path("model.json"))
    test = _load_split(cfg, "test")
    config = shapley.ShapleyConfig(
        n_permutations=cfg.n_permutations,
        background_rows=cfg.background_rows,
        seed=cfg.stage_seed("explain-optimal"),
    )
    summary = shapley.mean_abs_shap(model.beta, test, config, cfg.instance_cap)
    report.export_shap_summary(
        summary.matrix,
        test.features[summary.instance_indices],
        test.variable_names,
        cfg.path("shap_summary.csv"),
        cfg.path("shap_summary.svg"),
        instance_ids=summary.instance_indices,
    )


def _reliance_task(args):
    model_id, model, vif, test, config = args
    return reliance.compute_shapley_vic(model, vif, test, config, model_id=model_id)


def stage_importance(cfg: RunConfig) -> None:
    model = load_model(cfg.path("model.json"))
    test = _load_split(cfg, "test")
    models = sampling.read_models_csv(cfg.path("models.csv"))
    stage_seed = cfg.stage_seed("importance")
    tasks = [
        (
            mid,
            m,
            model.vif,
            test,
            shapley.ShapleyConfig(
                n_permutations=cfg.n_permutations,
                background_rows=cfg.background_rows,
                seed=derive_seed(stage_seed, mid),
            ),
        )
        for mid, m in enumerate(models)
    ]
    if cfg.workers == 1:
        results = [_reliance_task(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_reliance_task, tasks, chunksize=8))
    reliance.write_reliance_csv(results, cfg.path("importance.csv"))


def stage_pool(cfg: RunConfig) -> None:
    reliances = reliance.read_reliance_csv(cfg.path("importance.csv"))
    pooled = pooling.pool_all(reliances)
    pooling.write_pooled_csv(pooled, cfg.path("pooled.csv"))


def stage_rank(
    cfg: RunConfig, filter_variable: str | None = None, rank_at_most: int | None = None
) -> None:
    reliances = reliance.read_reliance_csv(cfg.path("importance.csv"))
    pooled = pooling.read_pooled_csv(cfg.path("pooled.csv"))
    rankings = [ranking.rank_variables(rel, cfg.alpha) for rel in reliances]
    order = [p.variable for p in pooled]
    freq = ranking.rank_frequency(rankings, variable_order=order)
    ranking.write_rank_frequency_csv(freq, cfg.path("rank_frequency.csv"))
    if filter_variable is not None:
        if rank_at_most is None:
            raise ConfigError("--rank-at-most is required with --filter-variable")
        ids = ranking.filter_models_by_rank(rankings, filter_variable, rank_at_most)
        with open(cfg.path("filtered_models.csv"), "w", encoding="utf-8") as fh:
            fh.write("model_id\n")
            for mid in ids:
                fh.write(f"{mid}\n")


def stage_report(cfg: RunConfig) -> None:
    model = load_model(cfg.path("model.json"))
    pooled = pooling.read_pooled_csv(cfg.path("pooled.csv"))
    reliances = reliance.read_reliance_csv(cfg.path("importance.csv"))
    bars = report.bars_from_pooled(pooled)
    report.write_bar_csv(bars, cfg.path("bar.csv"))
    report.render_bar_svg(bars, cfg.path("bar.svg"))

    names = reliances[0].variable_names
    losses = np.array([rel.empirical_loss for rel in reliances])
    order = [p.variable for p in pooled]
    summaries = []
    for name in order:
        j = names.index(name)
        values = np.array([rel.values[j] for rel in reliances])
        summaries.append(report.build_violin(values, losses, cfg.n_slices, name))
    loss_range = (model.train_loss, sampling.loss_bound(model, cfg.epsilon))
    report.write_violin_csv(summaries, cfg.path("violin.csv"))
    report.render_violin_svg(summaries, loss_range, cfg.path("violin.svg"))


def stage_vic_permutation(cfg: RunConfig) -> None:
    test = _load_split(cfg, "test")
    models = sampling.read_models_csv(cfg.path("models.csv"))
    stage_seed = cfg.stage_seed("vic-permutation")
    results = [
        reliance.compute_vic_permutation(
            m,
            test,
            n_permutations=cfg.vic_permutations,
            seed=derive_seed(stage_seed, mid),
            model_id=mid,
        )
        for mid, m in enumerate(models)
    ]
    reliance.write_vic_csv(results, cfg.path("vic_permutation.csv"))


_STAGE_FUNCS = {
    "fit": stage_fit,
    "sample": stage_sample,
    "explain-optimal": stage_explain_optimal,
    "importance": stage_importance,
    "pool": stage_pool,
    "rank": stage_rank,
    "report": stage_report,
    "vic-permutation": stage_vic_permutation,
}


def cmd_run(cfg: RunConfig) -> None:
    os.makedirs(cfg.out, exist_ok=True)
    completed: list[str] = []
    manifest_path = cfg.path("manifest.json")

    def write_manifest(status: str, failed_stage: str | None = None, cause: str | None = None):
        artifacts = {}
        for name in RUN_ARTIFACTS + ("train.csv", "test.csv", "bar.csv", "violin.csv"):
            p = cfg.path(name)
            if os.path.exists(p):
                artifacts[name] = _sha256(p)
        doc = {
            "config": asdict(cfg),
            "inputs": {cfg.data: _sha256(cfg.data)} if os.path.exists(cfg.data) else {},
            "completed_stages": completed,
            "status": status,
            "artifacts": artifacts,
        }
        if failed_stage:
            doc["failed_stage"] = failed_stage
            doc["cause"] = cause
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    for stage in RUN_STAGES:
        try:
            _STAGE_FUNCS[stage](cfg)
        except Exception as exc:
            write_manifest("failed", failed_stage=stage, cause=str(exc))
            raise type(exc)(f"stage {stage!r} failed: {exc}") from exc
        completed.append(stage)
    write_manifest("ok")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--data", help="input CSV with header row")
    parser.add_argument("--outcome", help="name of the binary outcome column")
    parser.add_argument("--train-fraction", type=float, dest="train_fraction")
    parser.add_argument("--epsilon", type=float, help="Rashomon loss tolerance")
    parser.add_argument("--models", type=int, help="final number of sampled models")
    parser.add_argument(
        "--permutations", type=int, dest="n_permutations",
        help="Shapley sampling permutations per estimate",
    )
    parser.add_argument("--slices", type=int, dest="n_slices", help="violin slice count")
    parser.add_argument("--alpha", type=float, help="pairwise significance level")
    parser.add_argument("--seed", type=int, help="master seed for all stages")
    parser.add_argument("--workers", type=int, help="parallel workers (never changes bytes)")
    parser.add_argument("--out", help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapcloud",
        description=(
            "Variable importance clouds: Shapley importance pooled over "
            "nearly-optimal logistic regression models."
        ),
    )
    sub = parser.add_subparsers(dest="command")
    for name, help_text in [
        ("run", "full pipeline: fit, sample, explain, importance, pool, rank, report"),
        ("fit", "fit the optimal logistic model and write the train/test split"),
        ("sample", "draw nearly-optimal models from the Rashomon set"),
        ("explain-optimal", "per-instance SHAP summary of the optimal model"),
        ("importance", "per-model VIF-gated Shapley importance"),
        ("pool", "random-effects pooling of per-model importance"),
        ("rank", "pairwise-significance ranking and rank-frequency matrix"),
        ("report", "bar and violin SVG/CSV outputs"),
        ("vic-permutation", "permutation-based model reliance backend"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        _add_common_flags(sp)
        if name == "rank":
            sp.add_argument("--filter-variable", help="write ids of models where this variable ranks high")
            sp.add_argument("--rank-at-most", type=int, help="rank threshold for --filter-variable")
        if name == "vic-permutation":
            sp.add_argument(
                "--vic-permutations", type=int, dest="vic_permutations",
                help="permutation replicates per variable",
            )
    return parser


_OVERRIDE_KEYS = (
    "data",
    "outcome",
    "out",
    "train_fraction",
    "seed",
    "epsilon",
    "models",
    "n_permutations",
    "n_slices",
    "alpha",
    "workers",
    "vic_permutations",
)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
        cfg = load_config(args.config, overrides)
        if args.command == "run":
            cmd_run(cfg)
        elif args.command == "rank":
            stage_rank(cfg, args.filter_variable, args.rank_at_most)
        else:
            _STAGE_FUNCS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except ShapcloudError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
