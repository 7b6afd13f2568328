"""Experiment harness: repeated 70/30 runs over noise levels, feature spaces
and classifiers, decision-level fusion, and the J sweep.

Every random draw in a run is seeded from ``master_seed`` and a cell key via
``derive_seed``, so the same config always yields byte-identical reports.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .classifiers import DEFAULT_GRIDS, ClassifierSpec, FitError, Kind, fit, stratified_folds, tune
from .data import FALSE_PEAK, PEAK, DataError, Dataset, round_half_up
from .fusion import FusionMode, fit_meta_nb, fuse_weighted, meta_features, weights_from_scores
from .metrics import accuracy, f1_score
from .noise import NoiseMode, NoiseSpec, inject
from .prach_gen import ConfigError, GenConfig, generate_dataset
from .sampling import SamplingConfig, initial_split, self_train
from .transform import PsrConfig, Space, pca_fit, pca_project, psr_features

FUSION_SPACES = (Space.PSR, Space.PCA)


def derive_seed(master_seed: int, *keys) -> int:
    """64-bit seed from the master seed and a cell key (stable across runs)."""
    text = json.dumps([int(master_seed), *[str(k) for k in keys]])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


# -- configuration ---------------------------------------------------------


def _noise_key(level: float) -> str:
    return format(float(level), ".6g")


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    noise_levels: tuple = (0.0, 0.05, 0.10, 0.15)
    noise_mode: NoiseMode = NoiseMode.FEATURE_AWGN
    classifiers: tuple = (Kind.TREE, Kind.KNN, Kind.ELM, Kind.NB)
    feature_spaces: tuple = (Space.PSR, Space.PCA)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    repeats: int = 5
    split: float = 0.70
    master_seed: int = 0
    psr: PsrConfig = field(default_factory=PsrConfig)
    pca_k: int = 2
    tune_folds: int = 3
    grids: Mapping | None = None  # kind name -> list of grid points
    self_training: bool = True
    fusion: bool = True

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("noise_levels", tuple(float(x) for x in self.noise_levels))
        set_("noise_mode", NoiseMode(self.noise_mode))
        set_("classifiers", tuple(Kind(k) for k in self.classifiers))
        set_("feature_spaces", tuple(Space(s) for s in self.feature_spaces))
        if int(self.repeats) < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0.0 < float(self.split) < 1.0:
            raise ConfigError("split must lie in (0, 1)")
        if not self.noise_levels:
            raise ConfigError("at least one noise level is required")
        if any(not 0.0 <= x <= 1.0 for x in self.noise_levels):
            raise ConfigError("noise levels must lie in [0, 1]")
        if len(set(self.noise_levels)) != len(self.noise_levels):
            raise ConfigError("noise levels must be distinct")
        if not self.classifiers:
            raise ConfigError("at least one classifier is required")
        if not self.feature_spaces or Space.RAW in self.feature_spaces:
            raise ConfigError("feature_spaces must be a nonempty subset of {psr, pca}")
        if len(set(self.classifiers)) != len(self.classifiers) or \
                len(set(self.feature_spaces)) != len(self.feature_spaces):
            raise ConfigError("classifiers and feature_spaces must not repeat")
        if not 1 <= int(self.pca_k) <= 4:
            raise ConfigError("pca_k must be in [1, 4]")
        if int(self.tune_folds) < 2:
            raise ConfigError("tune_folds must be >= 2")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.grids is not None:
            grids = {}
            for k, g in dict(self.grids).items():
                kind = Kind(k)
                g = [dict(p) for p in g]
                if not g:
                    raise ConfigError(f"empty grid for {kind.value}")
                for p in g:
                    ClassifierSpec(kind, p)  # validates
                grids[kind.value] = g
            set_("grids", grids)

    def grid_for(self, kind: Kind):
        if self.grids and kind.value in self.grids:
            return self.grids[kind.value]
        return DEFAULT_GRIDS[kind]

    def to_dict(self) -> dict:
        return {
            "gen": self.gen.to_dict(),
            "noise_levels": list(self.noise_levels),
            "noise_mode": self.noise_mode.value,
            "classifiers": [k.value for k in self.classifiers],
            "feature_spaces": [s.value for s in self.feature_spaces],
            "sampling": self.sampling.to_dict(),
            "repeats": int(self.repeats),
            "split": float(self.split),
            "master_seed": int(self.master_seed),
            "psr": {"embed_dim": self.psr.embed_dim, "time_lag": self.psr.time_lag},
            "pca_k": int(self.pca_k),
            "tune_folds": int(self.tune_folds),
            "grids": {k.value: self.grid_for(k) for k in self.classifiers},
            "self_training": bool(self.self_training),
            "fusion": bool(self.fusion),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            if "gen" in d:
                d["gen"] = GenConfig.from_dict(d["gen"])
            if "sampling" in d:
                d["sampling"] = SamplingConfig(**d["sampling"])
            if "psr" in d:
                d["psr"] = PsrConfig(**d["psr"])
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


# -- splitting -------------------------------------------------------------


def split_indices(labels, train_fraction: float, seed: int):
    """Per-class proportional split; returns sorted ``(train_idx, test_idx)``."""
    y = np.asarray(labels)
    rng = np.random.default_rng(int(seed))
    train = []
    for c in (FALSE_PEAK, PEAK):
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise DataError(f"class {c} has {idx.size} members; a split needs at least 2")
        n = min(idx.size - 1, max(1, round_half_up(idx.size * train_fraction)))
        train.append(idx[rng.permutation(idx.size)[:n]])
    train = np.sort(np.concatenate(train))
    mask = np.ones(y.size, dtype=bool)
    mask[train] = False
    return train, np.flatnonzero(mask)


def stratified_split(dataset: Dataset, train_fraction: float, seed: int):
    tr, te = split_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(tr), dataset.subset(te)


# -- one repeat at one noise level ----------------------------------------


@dataclass
class StreamOutput:
    """What a (space, classifier) cell produced in one repeat."""

    f1: float
    acc: float
    baseline_f1: float
    baseline_acc: float
    params: dict
    test_post: np.ndarray | None = None
    val_post: np.ndarray | None = None  # out-of-fold, training rows
    val_f1: float = float("nan")


def _spaces(cfg: ExperimentConfig, train: Dataset, test: Dataset):
    out = {}
    for space in cfg.feature_spaces:
        if space is Space.PSR:
            out[space] = (psr_features(train, cfg.psr).values, psr_features(test, cfg.psr).values)
        else:
            model = pca_fit(train.features, cfg.pca_k)
            out[space] = (pca_project(model, train.features).values,
                          pca_project(model, test.features).values)
    return out


def _oof_posterior(spec, X, y, seed):
    """2-fold out-of-fold posteriors for every training row."""
    fold_of = stratified_folds(y, 2, seed)
    post = np.empty((X.shape[0], 2))
    for f in range(2):
        hold = fold_of == f
        post[hold] = fit(spec, X[~hold], y[~hold]).posterior(X[hold])
    return post


def _run_stream(cfg, repeat, level, space, kind, Xtr, ytr, Xte, yte, keep_posteriors):
    key = (repeat, _noise_key(level), space.value, kind.value)
    spec = tune(kind, cfg.grid_for(kind), Xtr, ytr, folds=cfg.tune_folds,
                seed=derive_seed(cfg.master_seed, "tune", *key) % 2**32)
    base = fit(spec, Xtr, ytr)
    base_pred = base.predict(Xte)
    out = StreamOutput(f1=float("nan"), acc=float("nan"),
                       baseline_f1=f1_score(yte, base_pred), baseline_acc=accuracy(yte, base_pred),
                       params=dict(spec.params))
    if cfg.self_training:
        init_seed = derive_seed(cfg.master_seed, "initial", repeat) % 2**32
        t0, pool = initial_split(ytr, cfg.sampling.initial_fraction, init_seed)
        st_cfg = replace(cfg.sampling, seed=init_seed)
        res = self_train(Xtr[t0], ytr[t0], Xtr[pool], spec, st_cfg, pool_y=ytr[pool])
        model = res.model
        # labels the stream was trained on, in training-row order
        train_labels = ytr.copy()
        train_labels[pool] = res.pool_labels
    else:
        model = base
        train_labels = ytr
    pred = model.predict(Xte)
    out.f1, out.acc = f1_score(yte, pred), accuracy(yte, pred)
    if keep_posteriors:
        out.test_post = model.posterior(Xte)
        out.val_post = _oof_posterior(spec, Xtr, train_labels,
                                      derive_seed(cfg.master_seed, "oof", *key) % 2**32)
        out.val_f1 = f1_score(ytr, np.where(out.val_post[:, PEAK] > out.val_post[:, FALSE_PEAK],
                                            PEAK, FALSE_PEAK))
    return out


def _clean_dataset(cfg: ExperimentConfig, repeat: int) -> Dataset:
    seed = derive_seed(cfg.master_seed, "gen", repeat)
    return generate_dataset(replace(cfg.gen, seed=seed))


def _noisy_dataset(cfg, clean: Dataset, repeat: int, level: float) -> Dataset:
    if clean.meta.get("noise"):
        return clean  # supplied already corrupted
    if level == 0:
        return clean
    spec = NoiseSpec(level, cfg.noise_mode, derive_seed(cfg.master_seed, "noise", repeat,
                                                        _noise_key(level)))
    return inject(clean, spec)


def _fusion_enabled(cfg) -> bool:
    return cfg.fusion and all(s in cfg.feature_spaces for s in FUSION_SPACES)


def _run_unit(cfg: ExperimentConfig, repeat: int, level: float, dataset: Dataset | None = None,
              only: tuple | None = None):
    """All cells of one (repeat, noise level); failures are returned, not raised."""
    clean = dataset if dataset is not None else _clean_dataset(cfg, repeat)
    data = _noisy_dataset(cfg, clean, repeat, level)
    split_seed = derive_seed(cfg.master_seed, "split", repeat)
    train, test = stratified_split(data, cfg.split, split_seed)
    ytr, yte = train.labels, test.labels
    fusion = _fusion_enabled(cfg) and only is None
    streams, failures = {}, []
    mats = _spaces(cfg, train, test)
    for space in cfg.feature_spaces:
        Xtr, Xte = mats[space]
        for kind in cfg.classifiers:
            if only is not None and (space, kind) != only:
                continue
            try:
                streams[(space, kind)] = _run_stream(cfg, repeat, level, space, kind,
                                                     Xtr, ytr, Xte, yte, fusion)
            except (FitError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                failures.append({"repeat": repeat, "noise": level, "space": space.value,
                                 "classifier": kind.value, "error": f"{type(exc).__name__}: {exc}"})
    fused = _fuse(cfg, streams, ytr, yte, repeat, level, failures) if fusion else {}
    seeds = {"gen": clean.meta.get("generator", {}).get("seed"), "split": split_seed,
             "noise": data.meta.get("noise", {}) and data.meta["noise"].get("seed")}
    # drop bulky arrays before handing results back
    for s in streams.values():
        s.test_post = s.val_post = None
    return {"repeat": repeat, "noise": level, "streams": streams, "fusion": fused,
            "failures": failures, "seeds": seeds}


def _fuse(cfg, streams, ytr, yte, repeat, level, failures):
    best = {}
    for space in FUSION_SPACES:
        cands = [(k, streams[(space, k)]) for k in cfg.classifiers if (space, k) in streams]
        if not cands:
            return {}
        # highest validation F1, classifier order breaks ties
        best[space] = max(cands, key=lambda kv: kv[1].val_f1)
    (k1, s1), (k2, s2) = best[Space.PSR], best[Space.PCA]
    out = {}
    weights = weights_from_scores(s1.val_f1, s2.val_f1)
    pred = fuse_weighted(s1.test_post, s2.test_post, weights)
    out[FusionMode.WEIGHTED_AVERAGE] = {
        "f1": f1_score(yte, pred), "acc": accuracy(yte, pred),
        "streams": [k1.value, k2.value], "weights": list(weights),
        "single_f1": [s1.f1, s2.f1]}
    try:
        meta = fit_meta_nb(meta_features(s1.val_post, s2.val_post), ytr)
        pred = meta.meta.predict(meta_features(s1.test_post, s2.test_post))
        out[FusionMode.META_NB] = {
            "f1": f1_score(yte, pred), "acc": accuracy(yte, pred),
            "streams": [k1.value, k2.value], "weights": None, "single_f1": [s1.f1, s2.f1]}
    except (FitError, ValueError) as exc:
        failures.append({"repeat": repeat, "noise": level, "space": "fusion",
                         "classifier": FusionMode.META_NB.value,
                         "error": f"{type(exc).__name__}: {exc}"})
    return out


# -- report ----------------------------------------------------------------


def _stats(values):
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), std


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


@dataclass
class CellResult:
    space: str
    classifier: str
    noise: float
    f1: list = field(default_factory=list)
    acc: list = field(default_factory=list)
    baseline_f1: list = field(default_factory=list)
    baseline_acc: list = field(default_factory=list)
    params: list = field(default_factory=list)

    @property
    def key(self):
        return (self.space, self.classifier, self.noise)

    def summary(self) -> dict:
        out = {"space": self.space, "classifier": self.classifier, "noise": self.noise,
               "n": len(self.f1)}
        for name in ("f1", "acc", "baseline_f1", "baseline_acc"):
            m, s = _stats(getattr(self, name))
            out[f"{name}_mean"], out[f"{name}_std"] = m, s
        return out


@dataclass
class FusionResult:
    mode: str
    noise: float
    f1: list = field(default_factory=list)
    acc: list = field(default_factory=list)
    streams: list = field(default_factory=list)
    best_single_f1: list = field(default_factory=list)

    def summary(self) -> dict:
        out = {"mode": self.mode, "noise": self.noise, "n": len(self.f1)}
        for name in ("f1", "acc", "best_single_f1"):
            m, s = _stats(getattr(self, name))
            out[f"{name}_mean"], out[f"{name}_std"] = m, s
        return out


@dataclass
class ExperimentReport:
    config: dict
    cells: dict  # (space, classifier, noise) -> CellResult
    fusion: dict  # (mode, noise) -> FusionResult
    failures: list
    seeds: list

    def cell(self, space, classifier, noise) -> CellResult:
        return self.cells[(Space(space).value, Kind(classifier).value, float(noise))]

    def fusion_row(self, mode, noise) -> FusionResult:
        return self.fusion[(FusionMode(mode).value, float(noise))]

    def to_dict(self) -> dict:
        cells = []
        for c in self.cells.values():
            d = {k: _num(v) if isinstance(v, float) else v for k, v in c.summary().items()}
            d["values"] = {"f1": [_num(x) for x in c.f1], "baseline_f1": [_num(x) for x in c.baseline_f1],
                           "acc": [_num(x) for x in c.acc],
                           "baseline_acc": [_num(x) for x in c.baseline_acc]}
            d["params"] = c.params
            cells.append(d)
        fusion = []
        for r in self.fusion.values():
            d = {k: _num(v) if isinstance(v, float) else v for k, v in r.summary().items()}
            d["values"] = {"f1": [_num(x) for x in r.f1], "acc": [_num(x) for x in r.acc]}
            d["streams"] = r.streams
            fusion.append(d)
        return {"config": self.config, "cells": cells, "fusion": fusion,
                "failures": self.failures, "seeds": self.seeds}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "space", "classifier", "noise", "n", "f1_mean", "f1_std", "acc_mean",
                    "acc_std", "baseline_f1_mean", "baseline_f1_std", "baseline_acc_mean",
                    "baseline_acc_std"])
        fmt = lambda x: "" if x is None or math.isnan(x) else repr(float(x))  # noqa: E731
        for c in self.cells.values():
            s = c.summary()
            w.writerow(["cell", s["space"], s["classifier"], repr(s["noise"]), s["n"],
                        *(fmt(s[k]) for k in ("f1_mean", "f1_std", "acc_mean", "acc_std",
                                              "baseline_f1_mean", "baseline_f1_std",
                                              "baseline_acc_mean", "baseline_acc_std"))])
        for r in self.fusion.values():
            s = r.summary()
            w.writerow(["fusion", "fused", s["mode"], repr(s["noise"]), s["n"],
                        fmt(s["f1_mean"]), fmt(s["f1_std"]), fmt(s["acc_mean"]), fmt(s["acc_std"]),
                        "", "", "", ""])
        return buf.getvalue()

    def to_markdown(self) -> str:
        levels = self.config["noise_levels"]
        head = "| Classification Method | " + " | ".join(f"{x:.0%} Noise" for x in levels) + " |"
        rule = "|---|" + "---|" * len(levels)
        cell_txt = lambda m, s: "n/a" if math.isnan(m) else f"{m:.4f} ± {s:.4f}"  # noqa: E731
        lines = ["F1 per classifier (self-training; no-sampling baseline in brackets),",
                 f"mean ± std over {self.config['repeats']} repeats.", ""]
        names = {"tree": "Decision Tree", "knn": "K-Nearest Neighbor",
                 "elm": "Extreme Learning Machine", "nb": "Gaussian Naive Bayes"}
        for space in self.config["feature_spaces"]:
            lines += [f"**{space.upper()} features**", "", head, rule]
            for kind in self.config["classifiers"]:
                row = []
                for x in levels:
                    c = self.cells.get((space, kind, float(x)))
                    if c is None:
                        row.append("n/a")
                        continue
                    s = c.summary()
                    txt = cell_txt(s["f1_mean"], s["f1_std"])
                    if self.config["self_training"]:
                        txt += f" [{s['baseline_f1_mean']:.4f}]"
                    row.append(txt)
                lines.append(f"| {names[kind]} | " + " | ".join(row) + " |")
            lines.append("")
        if self.fusion:
            lines += ["**Decision-level fusion**", "", head, rule]
            for mode, title in ((FusionMode.WEIGHTED_AVERAGE.value, "Weighted Averaging"),
                                (FusionMode.META_NB.value, "Meta-learning (NB)")):
                row = []
                for x in levels:
                    r = self.fusion.get((mode, float(x)))
                    row.append("n/a" if r is None else cell_txt(*_stats(r.f1)))
                lines.append(f"| {title} | " + " | ".join(row) + " |")
            lines.append("")
        if self.failures:
            lines += [f"{len(self.failures)} cell failure(s); see report.json.", ""]
        return "\n".join(lines)

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"csv": out / "report.csv", "md": out / "report.md", "json": out / "report.json"}
        paths["csv"].write_text(self.to_csv())
        paths["md"].write_text(self.to_markdown())
        paths["json"].write_text(self.to_json())
        return paths

    @classmethod
    def from_dict(cls, d) -> "ExperimentReport":
        cells = {}
        for c in d["cells"]:
            v = c["values"]
            nan = lambda xs: [float("nan") if x is None else x for x in xs]  # noqa: E731
            r = CellResult(c["space"], c["classifier"], float(c["noise"]), nan(v["f1"]), nan(v["acc"]),
                           nan(v["baseline_f1"]), nan(v["baseline_acc"]), c["params"])
            cells[r.key] = r
        fusion = {}
        for f in d["fusion"]:
            r = FusionResult(f["mode"], float(f["noise"]), f["values"]["f1"], f["values"]["acc"],
                             f["streams"], [])
            fusion[(r.mode, r.noise)] = r
        return cls(d["config"], cells, fusion, d["failures"], d["seeds"])

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


# -- drivers ---------------------------------------------------------------


def _units(cfg, levels):
    return [(r, x) for r in range(cfg.repeats) for x in levels]


def _execute(cfg, units, dataset, jobs, only=None):
    if jobs and jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_unit, cfg, r, x, dataset, only) for r, x in units]
            return [f.result() for f in futures]
    return [_run_unit(cfg, r, x, dataset, only) for r, x in units]


def _levels_for(cfg, dataset):
    if dataset is not None and dataset.meta.get("noise"):
        return (float(dataset.meta["noise"]["fraction"]),)
    return cfg.noise_levels


def run_experiment(cfg: ExperimentConfig, jobs: int = 1,
                   dataset: Dataset | None = None) -> ExperimentReport:
    """Run every configured cell over all repeats.

    With ``dataset`` the generator is skipped and every repeat draws its split
    from that dataset; if it already carries noise provenance, its noise
    level is the only one evaluated.
    """
    levels = _levels_for(cfg, dataset)
    results = _execute(cfg, _units(cfg, levels), dataset, jobs)
    cells, fusion, failures, seeds = {}, {}, [], []
    for x in levels:
        for space in cfg.feature_spaces:
            for kind in cfg.classifiers:
                cells[(space.value, kind.value, x)] = CellResult(space.value, kind.value, x)
        if _fusion_enabled(cfg):
            for mode in FusionMode:
                fusion[(mode.value, x)] = FusionResult(mode.value, x)
    for res in results:
        x = res["noise"]
        for (space, kind), s in res["streams"].items():
            c = cells[(space.value, kind.value, x)]
            c.f1.append(s.f1)
            c.acc.append(s.acc)
            c.baseline_f1.append(s.baseline_f1)
            c.baseline_acc.append(s.baseline_acc)
            c.params.append(s.params)
        for mode, f in res["fusion"].items():
            r = fusion[(mode.value, x)]
            r.f1.append(f["f1"])
            r.acc.append(f["acc"])
            r.streams.append(f["streams"])
            r.best_single_f1.append(max(f["single_f1"]))
        failures.extend(res["failures"])
        seeds.append({"repeat": res["repeat"], "noise": x, **res["seeds"]})
    config = cfg.to_dict()
    if dataset is not None:
        config["input_dataset"] = {"meta": dict(dataset.meta), "n_records": len(dataset)}
    config["noise_levels"] = list(levels)
    return ExperimentReport(config, cells, fusion, failures, seeds)


@dataclass
class SweepPoint:
    J: int
    mean_f1: float
    std_f1: float
    values: list


def j_sweep(cfg: ExperimentConfig, j_values: Sequence[int], space=Space.PSR, classifier=Kind.ELM,
            noise: float = 0.15, jobs: int = 1, dataset: Dataset | None = None) -> list[SweepPoint]:
    """Self-training F1 per budget ``J``, averaged over the configured repeats.

    Each point runs exactly the pipeline of the matching ``run_experiment``
    cell, so the point at ``cfg.sampling.J`` reproduces that cell.
    """
    j_values = [int(j) for j in j_values]
    if not j_values:
        raise ConfigError("j_values must be nonempty")
    if any(j < 1 for j in j_values):
        raise ConfigError("every J must be >= 1")
    space, classifier = Space(space), Kind(classifier)
    base = replace(cfg, noise_levels=(float(noise),), feature_spaces=(space,),
                   classifiers=(classifier,), self_training=True, fusion=False)
    levels = _levels_for(base, dataset)
    points = []
    for J in j_values:
        run_cfg = replace(base, sampling=replace(cfg.sampling, J=J))
        results = _execute(run_cfg, _units(run_cfg, levels), dataset, jobs, only=(space, classifier))
        vals = [r["streams"][(space, classifier)].f1 for r in results
                if (space, classifier) in r["streams"]]
        m, s = _stats(vals)
        points.append(SweepPoint(J, m, s, vals))
    return points


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["J", "mean_f1", "std_f1"])
    for p in points:
        w.writerow([p.J, repr(p.mean_f1), repr(p.std_f1)])
    return buf.getvalue()
