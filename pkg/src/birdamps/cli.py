"""Command-line entry point: ``birdamps <command> [--config FILE] [--set key=value ...]``."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import config as cfgmod
from .classifiers import ModelError, count_rf_ops, model_scores, serialize_model
from .classifiers.forest import ForestModel
from .classifiers.serialize import model_from_dict, read_model_document
from .classifiers.stacking import StackingModel
from .dataset import (
    DatasetError,
    DatasetLayout,
    iter_recording_windows,
    load_recording,
    make_tag_predicate,
    read_manifest,
    tile_windows,
    write_windows_csv,
)
from .evaluation import (
    SUMMARY_COLUMNS,
    EvaluationError,
    make_trainer,
    run_experiment,
    split_dataset,
    summary_rows,
)
from .pipeline import (
    atomic_write_text,
    extract_windows,
    feature_names,
    format_rows,
    read_feature_csv,
    read_feature_rows,
    window_features,
)

log = logging.getLogger("birdamps")

LOG_ENV = "BIRDAMPS_LOG_LEVEL"


class CliError(click.ClickException):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category

    def show(self, file=None):
        click.echo(f"error: {self.category}: {self.message}", err=True)


_CATEGORIES = ((DatasetError, "dataset"), (ModelError, "model"), (cfgmod.ConfigError, "config"),
               (EvaluationError, "evaluation"), (FileNotFoundError, "missing-file"), (OSError, "io"),
               (ValueError, "value"))


def _fail(exc: Exception):
    for cls, category in _CATEGORIES:
        if isinstance(exc, cls):
            raise CliError(category, str(exc)) from exc
    raise CliError("internal", f"{type(exc).__name__}: {exc}") from exc


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _require(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"{p}: no such file")


def _resolve(config_path, overrides) -> dict:
    try:
        return cfgmod.load_config(config_path, overrides)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _layout(cfg) -> DatasetLayout:
    p = cfg["paths"]
    return DatasetLayout(Path(p["audio_dir"]), Path(p["labels_dir"]), Path(p["manifest"]),
                         p["audio_pattern"], p["labels_pattern"])


def _outdir(cfg) -> Path:
    out = Path(cfg["paths"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_resolved(cfg, out: Path, command: str):
    cfgmod.dump_config(cfg, out / f"resolved_config.{command}.yaml")


def config_options(fn):
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override a config value, e.g. --set eval.seed=7")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                      help="YAML run configuration")(fn)
    return fn


@click.group()
def main():
    """Species-agnostic bird activity detection with AMPS features."""
    _setup_logging()


@main.command("build-dataset")
@config_options
def build_dataset_cmd(config_path, overrides):
    """Window and label every manifest recording; writes windows.csv."""
    cfg = _resolve(config_path, overrides)
    try:
        layout = _layout(cfg)
        entries = read_manifest(layout.manifest)
        if not entries:
            raise DatasetError(f"{layout.manifest}: manifest lists no recordings")
        tags = make_tag_predicate(cfg["dataset"]["non_bird_tags"])
        windows = []
        for _, ws in iter_recording_windows(layout, tags, cfg["dataset"]["truncate"], entries):
            windows.extend(ws)
        out = _outdir(cfg)
        buf = io.StringIO()
        write_windows_csv(windows, buf)
        atomic_write_text(out / "windows.csv", buf.getvalue())
        _write_resolved(cfg, out, "build-dataset")
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    positive = sum(w.label for w in windows) / len(windows)
    click.echo(f"{len(windows)} windows, {positive:.0%} positive")


def _extract_one(args):
    layout, entry, feature_set, cfg = args
    fcfg = cfgmod.feature_config(cfg)
    tags = make_tag_predicate(cfg["dataset"]["non_bird_tags"])
    try:
        (_, windows), = iter_recording_windows(layout, tags, cfg["dataset"]["truncate"], [entry])
    except DatasetError as exc:
        return entry.id, None, str(exc)
    return entry.id, extract_windows(windows, feature_set, fcfg), None


@main.command("extract")
@config_options
@click.option("--features", "feature_set", type=click.Choice(["amps", "mfcc"]), default=None,
              help="Feature set (defaults to the config's feature_set)")
def extract_cmd(config_path, overrides, feature_set):
    """Extract per-window features; resumable, one cache file per recording."""
    cfg = _resolve(config_path, overrides)
    feature_set = feature_set or cfg["feature_set"]
    try:
        layout = _layout(cfg)
        entries = read_manifest(layout.manifest)
        out = _outdir(cfg)
        cache = out / "cache" / feature_set
        cache.mkdir(parents=True, exist_ok=True)
        todo = [e for e in entries if not (cache / f"{e.id}.csv").exists()]
        skipped = []
        jobs = [(layout, e, feature_set, cfg) for e in todo]
        workers = max(1, int(cfg["workers"]))
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_extract_one, jobs)
                _collect(results, cache, skipped, len(jobs))
        else:
            _collect(map(_extract_one, jobs), cache, skipped, len(jobs))
        rows = []
        for e in entries:
            part = cache / f"{e.id}.csv"
            if part.exists():
                rows.extend(read_feature_rows(part))
        names = feature_names(feature_set, cfgmod.feature_config(cfg))
        atomic_write_text(out / f"features_{feature_set}.csv",
                          format_rows(rows, ("recording_id", "window_index", "label", *names)))
        sidecar = out / f"features_{feature_set}.skipped.csv"
        prior = _read_skipped(sidecar)
        prior.update(dict(skipped))
        atomic_write_text(sidecar, format_rows(sorted(prior.items()), ("recording_id", "reason")))
        _write_resolved(cfg, out, f"extract.{feature_set}")
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(f"{len(rows)} windows x {len(names)} {feature_set} features -> "
               f"{out / f'features_{feature_set}.csv'}")


def _read_skipped(path: Path) -> dict:
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        return {r["recording_id"]: r["reason"] for r in csv.DictReader(fh)}


def _collect(results, cache: Path, skipped: list, total: int):
    for done, (rid, rows, error) in enumerate(results, 1):
        if error is not None:
            log.warning("skipping %s: %s", rid, error)
            skipped.append((rid, error.replace(",", ";").replace("\n", " ")))
        else:
            atomic_write_text(cache / f"{rid}.csv", format_rows(rows))
        click.echo(f"[{done}/{total}] {rid}", err=True)


def _load_tables(cfg, sets):
    out = Path(cfg["paths"]["output_dir"])
    tables = []
    for name in sets:
        path = out / f"features_{name}.csv"
        if not path.exists():
            raise FileNotFoundError(f"{path}: run `birdamps extract --features {name}` first")
        tables.append(read_feature_csv(path, name.upper()))
    return tables


@main.command("train")
@config_options
@click.option("--all-data", is_flag=True, help="Train on every window instead of the train partition")
def train_cmd(config_path, overrides, all_data):
    """Train the configured classifiers; writes models/<set>_<classifier>.json."""
    cfg = _resolve(config_path, overrides)
    try:
        feature_set = cfg["feature_set"]
        table, = _load_tables(cfg, [feature_set])
        spec = cfgmod.split_spec(cfg)
        train = np.ones(table.y.size, dtype=bool) if all_data else split_dataset(table.groups, table.y, spec)[0]
        out = _outdir(cfg)
        models = out / "models"
        models.mkdir(exist_ok=True)
        ccfg = cfgmod.classifier_config(cfg)
        meta = {"feature_set": feature_set, "columns": list(table.columns), "seed": spec.seed,
                "grouping": spec.grouping, "trained_on": "all" if all_data else "train_partition",
                "train_recordings": sorted({str(g) for g in table.groups[train]})}
        written = []
        for name in cfg["eval"]["classifiers"]:
            model = make_trainer(name, ccfg, spec.seed)(table.X[train], table.y[train])
            path = models / f"{feature_set}_{name}.json"
            serialize_model(model, path, {**meta, "classifier": name})
            written.append(path)
        _write_resolved(cfg, out, "train")
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    for path in written:
        click.echo(str(path))


@main.command("evaluate")
@config_options
def evaluate_cmd(config_path, overrides):
    """Split, (optionally) grid-search, train and score; writes report.json and summary.csv."""
    cfg = _resolve(config_path, overrides)
    try:
        e = cfg["eval"]
        tables = _load_tables(cfg, e["feature_sets"])
        report = run_experiment(tables, e["classifiers"], cfgmod.split_spec(cfg),
                                cfgmod.classifier_config(cfg), e["grids"])
        out = _outdir(cfg)
        atomic_write_text(out / "report.json", json.dumps(report, indent=2, sort_keys=True))
        atomic_write_text(out / "summary.csv", format_rows(summary_rows(report), SUMMARY_COLUMNS))
        _write_resolved(cfg, out, "evaluate")
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(format_rows(summary_rows(report), SUMMARY_COLUMNS), nl=False)


@main.command("predict")
@config_options
@click.argument("model_path", type=click.Path(dir_okay=False))
@click.argument("wav", type=click.Path(dir_okay=False))
def predict_cmd(config_path, overrides, model_path, wav):
    """Label every 1 s window (0.5 s hop) of an arbitrary-length WAV."""
    cfg = _resolve(config_path, overrides)
    try:
        _require(model_path, wav)
        doc = read_model_document(model_path)
        model = model_from_dict(doc)
        feature_set = doc.get("metadata", {}).get("feature_set", "amps")
        fcfg = cfgmod.feature_config(cfg)
        rec = load_recording(wav)
        windows = tile_windows(rec)
        X = np.array([window_features(w, feature_set, fcfg) for w in windows])
        labels = model.predict(X)
        scores = model_scores(model, X)
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo("window_index,start_sec,score,label")
    for w, s, lab in zip(windows, scores, labels):
        click.echo(f"{w.index},{w.start:.3f},{float(s):.6f},{'bird_present' if lab else 'bird_absent'}")
    click.echo(f"# activity_fraction={float(np.mean(labels)):.4f}")


@main.command("count-ops")
@click.argument("model_path", required=False, type=click.Path(dir_okay=False))
@click.option("--trees", type=int, default=500, show_default=True)
@click.option("--max-depth", type=int, default=8, show_default=True)
@click.option("--features-per-node", type=int, default=4, show_default=True)
def count_ops_cmd(model_path, trees, max_depth, features_per_node):
    """Worst-case comparison count of forest inference."""
    try:
        model = None
        if model_path:
            _require(model_path)
            model = model_from_dict(read_model_document(model_path))
            if isinstance(model, StackingModel):
                model = model.forest
            if not isinstance(model, ForestModel):
                raise ModelError("count-ops needs a forest (or stacking) model")
        ops = count_rf_ops(model, trees, max_depth, features_per_node)
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(json.dumps(ops))


if __name__ == "__main__":
    main()
