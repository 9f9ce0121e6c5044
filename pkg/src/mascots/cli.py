"""Command line interface: ``mascots {synth,fit,explain,evaluate,render}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from mascots import __version__
from mascots.dataset_io import load_dataset, save_dataset, train_test_split, znormalize
from mascots.engine import CounterfactualResult, render_plot_json, render_text
from mascots.errors import EmptyDataset, IndexOutOfRange, InputError, MascotsError, ParseError
from mascots.evaluation import evaluate_run, iforest_fit
from mascots.pipeline import BLACKBOXES, check_compatible, fit_model, load_model, save_model
from mascots.synth import cylinder_bell_funnel

log = logging.getLogger("mascots")

EXIT_INPUT = 2
EXIT_INTERNAL = 3


@dataclass
class RunConfig:
    data: str | None = None
    model: str | None = None
    out: str | None = None
    blackbox: str = "knn1"
    ridge: float = 1.0
    lambda_: float = 0.1
    max_iters: int = 20
    seed: int = 42
    epochs: int = 2000
    learning_rate: float | None = None
    channels: int = 1
    znorm: bool = False
    jobs: int = 1
    format: str | None = None
    # synth
    n_train: int = 60
    n_test: int = 30
    length: int = 128
    # forest
    trees: int = 100
    subsample: int = 256
    threshold: float = 0.5

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["lambda"] = doc.pop("lambda_")
        return doc


def _read_config_file(path: str) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"config {path} must be a mapping")
    names = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in doc.items():
        key = key.replace("-", "_")
        key = "lambda_" if key == "lambda" else key
        if key not in names:
            raise ParseError(f"config {path}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags given on the command line."""
    values = {}
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for f in fields(RunConfig):
        given = getattr(args, f.name, None)
        if given is not None:
            values[f.name] = given
    return RunConfig(**values)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _require(value, flag: str):
    if value is None:
        raise ParseError(f"{flag} is required")
    return value


def _load(cfg: RunConfig, class_names=None):
    data = load_dataset(_require(cfg.data, "--data"), cfg.channels, class_names)
    return znormalize(data) if cfg.znorm else data


def cmd_synth(cfg: RunConfig) -> int:
    out = Path(_require(cfg.out, "--out"))
    fmt = cfg.format or "ts"
    if fmt not in ("ts", "csv", "json"):
        raise ParseError(f"synth writes ts, csv or json, not {fmt!r}")
    data = cylinder_bell_funnel(cfg.n_train + cfg.n_test, cfg.length, cfg.seed)
    train, test = train_test_split(data, cfg.n_test / (cfg.n_train + cfg.n_test), cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / f"train.{fmt}")
    save_dataset(test, out / f"test.{fmt}")
    print(_dump({"train": str(out / f"train.{fmt}"), "test": str(out / f"test.{fmt}"), "n_train": train.n, "n_test": test.n}), end="")
    return 0


def cmd_fit(cfg: RunConfig) -> int:
    if cfg.blackbox not in BLACKBOXES:
        raise ParseError(f"--blackbox must be one of {BLACKBOXES}")
    out = Path(_require(cfg.out, "--out"))
    train = _load(cfg)
    model = fit_model(train, cfg.blackbox, cfg.ridge, cfg.epochs, cfg.learning_rate, cfg.seed)
    model.config = cfg.to_dict()
    _write_atomic(out, json.dumps(model.to_dict()))
    summary = {
        "model": str(out),
        "blackbox": cfg.blackbox,
        "n_train": train.n,
        "configs": len(model.transform.configs),
        "vocab_size": model.transform.vocab_size,
        "fidelity": model.fidelity,
    }
    print(_dump(summary), end="")
    return 0


def _worker_init(model_path: str):
    global _MODEL
    _MODEL = load_model(model_path)


def _worker_explain(job):
    values, ident, lam, max_iters, seed = job
    from mascots.dataset_io import TimeSeries

    return _MODEL.explain(TimeSeries(values, ident), lam, max_iters, seed).to_dict()


def cmd_explain(cfg: RunConfig, indices: list[int] | None, explain_all: bool) -> int:
    model_path = _require(cfg.model, "--model")
    model = load_model(model_path)
    data = _load(cfg, model.class_names)
    check_compatible(model, data)
    out = Path(_require(cfg.out, "--out"))
    if explain_all:
        indices = list(range(data.n))
    if not indices:
        raise ParseError("give --index or --all")
    for i in indices:
        if not 0 <= i < data.n:
            raise IndexOutOfRange(f"index {i} outside [0, {data.n})")

    jobs = [(data.values[i], data.ids[i], cfg.lambda_, cfg.max_iters, cfg.seed) for i in indices]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_worker_init, initargs=(model_path,)) as pool:
            docs = list(pool.map(_worker_explain, jobs))
    else:
        docs = [model.explain(data[i], cfg.lambda_, cfg.max_iters, cfg.seed).to_dict() for i in indices]

    valid = []
    for i, doc in zip(indices, docs):
        doc["index"] = i
        doc["class_names"] = list(model.class_names)
        doc["config"] = cfg.to_dict()
        path = out / f"explanation_{i:04d}.json"
        _write_atomic(path, _dump(doc))
        diff = np.asarray(doc["original"]) - np.asarray(doc["counterfactual"])
        sparsity = float(np.mean(diff == 0))
        valid.append(doc["valid"])
        print(f"instance {i}: valid={doc['valid']} iterations={doc['iterations']} sparsity={sparsity:.3f} -> {path}")
    print(f"explained {len(indices)} instance(s); validity {np.mean(valid):.3f}")
    return 0


def _explanation_files(inputs: list[str]) -> list[Path]:
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("explanation_*.json")))
        elif p.exists():
            files.append(p)
        else:
            raise ParseError(f"no such file or directory: {item}")
    if not files:
        raise EmptyDataset("no explanation files found")
    return files


def _load_explanations(inputs: list[str]) -> list[tuple[Path, dict, CounterfactualResult]]:
    loaded = []
    for path in _explanation_files(inputs):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        loaded.append((path, doc, CounterfactualResult.from_dict(doc)))
    return loaded


def cmd_evaluate(cfg: RunConfig, inputs: list[str]) -> int:
    model = load_model(_require(cfg.model, "--model"))
    loaded = _load_explanations(inputs)
    results = [r for _, _, r in loaded]
    forest = iforest_fit(model.train, cfg.trees, cfg.subsample, cfg.seed, cfg.threshold)
    report = evaluate_run(results, model.blackbox, forest)
    doc = report.to_dict()
    doc["config"] = cfg.to_dict()
    if cfg.out:
        _write_atomic(Path(cfg.out), _dump(doc))
    if (cfg.format or "table") == "json":
        print(_dump(doc), end="")
    else:
        print(report.to_table())
    return 0


def cmd_render(cfg: RunConfig, inputs: list[str], verbalize: bool) -> int:
    fmt = cfg.format or "both"
    if fmt not in ("text", "json", "both"):
        raise ParseError(f"--format must be text, json or both, not {fmt!r}")
    out = Path(cfg.out) if cfg.out else None
    for path, doc, result in _load_explanations(inputs):
        stem = path.stem.replace("explanation", "render")
        if fmt in ("text", "both"):
            if result.trace:
                text = render_text(result, doc.get("class_names"), verbalize)
            else:
                text = f"No swaps were made ({result.error or 'the iteration budget was empty'})."
            if out:
                _write_atomic(out / f"{stem}.txt", text + "\n")
            print(f"{path.name}: {text}")
        if fmt in ("json", "both"):
            plot = render_plot_json(result)
            plot["class_names"] = doc.get("class_names")
            plot["config"] = cfg.to_dict()
            if out:
                _write_atomic(out / f"{stem}.plot.json", _dump(plot))
            elif fmt == "json":
                print(_dump(plot), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON file of run settings (flags override it)")
    common.add_argument("--json-errors", action="store_true", help="report failures as a JSON document")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="mascots", description="Symbolic counterfactual explanations for time-series classifiers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a cylinder/bell/funnel train/test pair")
    p.add_argument("--n-train", type=int, dest="n_train")
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--length", type=int)
    p.add_argument("--format", choices=("ts", "csv", "json"))

    data_flags = argparse.ArgumentParser(add_help=False)
    data_flags.add_argument("--data", help="dataset file (.ts, .csv or .json)")
    data_flags.add_argument("--channels", type=int, help="channel count for CSV input")
    data_flags.add_argument("--znorm", action="store_true", default=None, help="standardize each channel of each series")

    p = sub.add_parser("fit", parents=[common, data_flags], help="fit black-box and surrogate")
    p.add_argument("--blackbox", choices=BLACKBOXES)
    p.add_argument("--ridge", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")

    p = sub.add_parser("explain", parents=[common, data_flags], help="generate counterfactuals")
    p.add_argument("--model")
    p.add_argument("--index", type=int, action="append", dest="indices")
    p.add_argument("--all", action="store_true", dest="explain_all")
    p.add_argument("--lambda", type=float, dest="lambda_")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("evaluate", parents=[common], help="score explanation files")
    p.add_argument("inputs", nargs="+", help="explanation files or directories")
    p.add_argument("--model")
    p.add_argument("--format", choices=("json", "table"))
    p.add_argument("--trees", type=int)
    p.add_argument("--subsample", type=int)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("render", parents=[common], help="natural-language and plot output")
    p.add_argument("inputs", nargs="+", help="explanation files or directories")
    p.add_argument("--format", choices=("text", "json", "both"))
    p.add_argument("--verbalize", action="store_true", help="name symbols low/medium/high")
    return parser


def _configure_logging():
    level = os.environ.get("MASCOTS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "explain":
            return cmd_explain(cfg, args.indices, args.explain_all)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.inputs)
        return cmd_render(cfg, args.inputs, args.verbalize)
    except InputError as exc:
        return _fail(args, exc, EXIT_INPUT)
    except (MascotsError, AssertionError) as exc:
        return _fail(args, exc, EXIT_INTERNAL)


def _fail(args, exc: Exception, code: int) -> int:
    if getattr(args, "json_errors", False):
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc), "exit_code": code}))
    else:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
