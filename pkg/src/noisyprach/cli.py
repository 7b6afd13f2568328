"""Command-line driver: ``noisyprach <subcommand> ...``.

Exit codes: 0 ok, 2 config, 3 io, 4 data, 5 numeric.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, FitError, Kind, fit, save_model, tune
from .data import DataError, Dataset, read_csv, write_csv, write_sidecar
from .evaluation import ExperimentConfig, ExperimentReport, j_sweep, run_experiment, sweep_csv
from .noise import NoiseMode, NoiseSpec, inject
from .prach_gen import ConfigError, generate_dataset
from .sampling import SamplingConfig, initial_split, self_train, write_audit_csv
from .transform import FeatureMatrix, PsrConfig, Space, pca_fit, pca_project, psr_features

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4, 5


class CliError(Exception):
    code = EXIT_CONFIG


# -- config handling -------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` overrides; values are parsed as JSON when possible."""
    doc = json.loads(json.dumps(doc))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = _parse_value(value)
    return doc


def load_config(path, overrides=()) -> ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(apply_overrides(doc, overrides))


# -- manifests -------------------------------------------------------------


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(path, command: str, args: dict, config=None, inputs=(), outputs=()) -> Path:
    """Record everything needed to rebuild the outputs; no timestamps."""
    path = Path(path)
    doc = {
        "tool": "noisyprach",
        "version": __version__,
        "command": command,
        "arguments": args,
        "config": config,
        "inputs": {str(p): _digest(Path(p)) for p in inputs},
        "outputs": {str(p): _digest(Path(p)) for p in outputs},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _manifest_for(file_path: Path) -> Path:
    return file_path.with_name(file_path.name + ".manifest.json")


def _read_dataset(path) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return read_csv(path)


# -- subcommands -----------------------------------------------------------


def cmd_gen(a) -> int:
    cfg = load_config(a.config, a.set)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate_dataset(cfg.gen)
    csv_path = out / "dataset.csv"
    write_csv(ds, csv_path)
    side = write_sidecar(ds, csv_path)
    write_manifest(out / "manifest.json", "gen", {"config": a.config, "set": a.set},
                   {"gen": cfg.gen.to_dict()}, outputs=[csv_path, side])
    print(csv_path)
    return EXIT_OK


def cmd_inject(a) -> int:
    if not 0.0 <= a.fraction <= 1.0:
        raise ConfigError(f"--fraction must lie in [0, 1], got {a.fraction}")
    src = Path(a.inp)
    ds = _read_dataset(src)
    if ds.meta.get("noise"):
        raise DataError(f"{src} is already corrupted ({ds.meta['noise']})")
    spec = NoiseSpec(a.fraction, NoiseMode(a.mode), a.seed)
    noisy = inject(ds, spec)
    out = Path(a.out) if a.out else src.with_name(f"{src.stem}_{a.mode}{a.fraction:g}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(noisy, out)
    side = write_sidecar(noisy, out)
    write_manifest(_manifest_for(out), "inject",
                   {"in": str(src), "fraction": a.fraction, "mode": a.mode, "seed": a.seed},
                   {"noise": spec.to_dict()}, inputs=[src], outputs=[out, side])
    print(out)
    return EXIT_OK


def cmd_transform(a) -> int:
    src = Path(a.inp)
    ds = _read_dataset(src)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    outputs = [out]
    if a.space == "psr":
        cfg = PsrConfig(a.embed_dim, a.time_lag)
        fm = psr_features(ds, cfg)
        resolved = {"space": "psr", "embed_dim": cfg.embed_dim, "time_lag": cfg.time_lag}
    elif a.space == "pca":
        fit_src = Path(a.fit_on) if a.fit_on else src
        model = pca_fit(_read_dataset(fit_src) if a.fit_on else ds, a.k)
        fm = pca_project(model, ds)
        model_path = out.with_name(out.stem + ".pca.json")
        model.save(model_path)
        outputs.append(model_path)
        resolved = {"space": "pca", "k": a.k, "fit_on": str(fit_src)}
    else:
        fm = FeatureMatrix.from_dataset(ds)
        resolved = {"space": "raw"}
    fm.to_csv(out)
    write_manifest(_manifest_for(out), "transform", vars_clean(a), resolved,
                   inputs=[src], outputs=outputs)
    print(out)
    return EXIT_OK


def _load_matrix(path, space) -> FeatureMatrix:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return FeatureMatrix.from_csv(path, space)


def cmd_train(a) -> int:
    fm = _load_matrix(a.inp, a.space)
    kind = Kind(a.classifier)
    params = json.loads(a.params) if a.params else {}
    if not isinstance(params, dict):
        raise ConfigError("--params must be a JSON object")
    if a.tune:
        spec = tune(kind, None, fm.values, fm.labels, folds=a.folds, seed=a.seed, base=params)
    else:
        spec = ClassifierSpec(kind, params)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if a.self_train:
        cfg = SamplingConfig(initial_fraction=a.initial_fraction, J=a.J, seed=a.seed)
        t0, pool = initial_split(fm.labels, cfg.initial_fraction, cfg.seed)
        res = self_train(fm.values[t0], fm.labels[t0], fm.values[pool], spec, cfg,
                         pool_y=fm.labels[pool])
        model = res.model
        audit = out / "audit.csv"
        write_audit_csv(res.log, audit)
        outputs.append(audit)
    else:
        model = fit(spec, fm.values, fm.labels)
    model_path = out / "model.json"
    save_model(model, model_path)
    outputs.insert(0, model_path)
    write_manifest(out / "manifest.json", "train", vars_clean(a), {"spec": spec.to_dict()},
                   inputs=[a.inp], outputs=outputs)
    print(model_path)
    return EXIT_OK


def cmd_eval(a) -> int:
    cfg = load_config(a.config, a.set)
    dataset = _read_dataset(a.inp) if a.inp else None
    report = run_experiment(cfg, jobs=a.jobs, dataset=dataset)
    paths = report.write(a.out)
    write_manifest(Path(a.out) / "manifest.json", "eval",
                   {"config": a.config, "set": a.set, "in": a.inp},
                   cfg.to_dict(), inputs=[a.inp] if a.inp else [], outputs=list(paths.values()))
    print(paths["md"])
    if report.failures:
        print(f"warning: {len(report.failures)} cell failure(s) recorded", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(a) -> int:
    cfg = load_config(a.config, a.set)
    try:
        js = [int(x) for x in a.j.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--j must be a comma-separated list of integers: {exc}") from exc
    dataset = _read_dataset(a.inp) if a.inp else None
    points = j_sweep(cfg, js, a.space, a.classifier, a.noise, jobs=a.jobs, dataset=dataset)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    path.write_text(sweep_csv(points))
    write_manifest(out / "manifest.json", "sweep-j", vars_clean(a), cfg.to_dict(),
                   inputs=[a.inp] if a.inp else [], outputs=[path])
    print(path)
    return EXIT_OK


def cmd_report(a) -> int:
    src = Path(a.inp)
    path = src / "report.json" if src.is_dir() else src
    if not path.is_file():
        raise FileNotFoundError(f"no report found at {path}")
    report = ExperimentReport.load(path)
    text = report.to_csv() if a.format == "csv" else report.to_markdown()
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def vars_clean(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k != "func"}


# -- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noisyprach", description="Synthetic PRACH detection under noisy features.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted override, e.g. gen.n_records=2000 (repeatable)")

    sp = sub.add_parser("gen", help="generate a synthetic dataset")
    with_config(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("inject", help="corrupt a fraction of a dataset")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--fraction", type=float, required=True)
    sp.add_argument("--mode", choices=[m.value for m in NoiseMode], default="awgn")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output CSV (default: next to the input)")
    sp.set_defaults(func=cmd_inject)

    sp = sub.add_parser("transform", help="write PSR / PCA / raw feature matrices")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--space", choices=["psr", "pca", "raw"], required=True)
    sp.add_argument("--out", required=True, help="output CSV")
    sp.add_argument("--embed-dim", type=int, default=7)
    sp.add_argument("--time-lag", type=int, default=1)
    sp.add_argument("--k", type=int, default=2, help="PCA components")
    sp.add_argument("--fit-on", help="dataset to fit PCA on (default: the input)")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("train", help="fit a classifier on a feature matrix CSV")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--space", choices=[s.value for s in Space], default="raw")
    sp.add_argument("--classifier", choices=[k.value for k in Kind], required=True)
    sp.add_argument("--params", help="JSON object of classifier parameters")
    sp.add_argument("--tune", action="store_true", help="grid-search with cross-validated F1")
    sp.add_argument("--folds", type=int, default=3)
    sp.add_argument("--self-train", action="store_true")
    sp.add_argument("--initial-fraction", type=float, default=0.10)
    sp.add_argument("--J", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="run the experiment grid")
    with_config(sp)
    sp.add_argument("--in", dest="inp", help="use this dataset instead of generating one")
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep-j", help="self-training F1 as a function of J")
    with_config(sp)
    sp.add_argument("--j", default="5,10,20,50,100,200")
    sp.add_argument("--space", choices=["psr", "pca"], default="psr")
    sp.add_argument("--classifier", choices=[k.value for k in Kind], default="elm")
    sp.add_argument("--noise", type=float, default=0.15)
    sp.add_argument("--in", dest="inp")
    sp.add_argument("--out", default=".")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="render a saved report")
    sp.add_argument("--in", dest="inp", required=True, help="eval output directory or report.json")
    sp.add_argument("--format", choices=["csv", "md"], default="md")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(over="ignore"):
            return args.func(args)
    except (ConfigError, CliError, json.JSONDecodeError) as exc:
        code, kind, msg = EXIT_CONFIG, "config", str(exc)
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        code, kind, msg = EXIT_IO, "io", str(exc)
    except DataError as exc:
        code, kind, msg = EXIT_DATA, "data", str(exc)
    except (FitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        code, kind, msg = EXIT_NUMERIC, "numeric", str(exc)
    except ValueError as exc:
        # remaining validation errors come from bad parameters
        code, kind, msg = EXIT_CONFIG, "config", str(exc)
    print(f"noisyprach: {kind} error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
