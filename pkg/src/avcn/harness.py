"""Pipeline orchestration: grids, folds, training and cross-validation reports."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .alignment import build_grid, fit_prototypes
from .depth import DbRepresentationSet
from .errors import InvalidParameter, MalformedDataset, NumericalError
from .graphs import Dataset, load_tu_dataset, one_hot_features, tu_paths
from .storage import read_tensors, write_tensors

log = logging.getLogger(__name__)

REPORT_HEADER = "# avcn cross-validation report v1"


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str = "data"
    dataset: str = "MUTAG"
    prototypes: int = 64
    depth: int = 10
    channels: int = 32
    filter_sizes: tuple = (3, 5, 7, 9)
    layers_per_branch: int = 3
    dense_units: int = 64
    dropout_rate: float = 0.5
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    folds: int = 10
    seed: int = 0
    repeats: int = 1
    kmeans_max_iters: int = 300
    kmeans_tol: float = 1e-6
    out: str = "runs"

    def __post_init__(self):
        object.__setattr__(self, "filter_sizes", tuple(int(m) for m in self.filter_sizes))
        self.validate()

    def validate(self):
        if self.prototypes < 1:
            raise InvalidParameter(f"prototypes must be >= 1, got {self.prototypes}")
        if self.depth < 1:
            raise InvalidParameter(f"depth must be >= 1, got {self.depth}")
        if not self.filter_sizes or min(self.filter_sizes) < 1:
            raise InvalidParameter(f"bad filter sizes {self.filter_sizes}")
        if len(set(self.filter_sizes)) != len(self.filter_sizes):
            raise InvalidParameter(f"filter sizes must be distinct: {self.filter_sizes}")
        if self.layers_per_branch < 1:
            raise InvalidParameter("layers_per_branch must be >= 1")
        biggest = max(self.filter_sizes)
        if self.prototypes < biggest + 2 * self.layers_per_branch:
            raise InvalidParameter(
                f"prototypes={self.prototypes} is below max filter size + 2 * layers "
                f"({biggest} + 2 * {self.layers_per_branch})"
            )
        if neural.branch_output_rows(self.prototypes, [biggest] * self.layers_per_branch) < 1:
            raise InvalidParameter(
                f"{self.layers_per_branch} layers of size {biggest} underflow {self.prototypes} rows"
            )
        if self.folds < 2:
            raise InvalidParameter(f"folds must be >= 2, got {self.folds}")
        if self.repeats < 1:
            raise InvalidParameter("repeats must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidParameter(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")
        if self.epochs < 0 or self.batch_size < 1 or self.channels < 1 or self.dense_units < 1:
            raise InvalidParameter("epochs, batch_size, channels and dense_units must be positive")
        if not self.lr > 0:
            raise InvalidParameter(f"learning rate must be positive, got {self.lr}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["filter_sizes"] = list(self.filter_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def digest(self) -> str:
        """Hash of every field that can change results (the output path cannot)."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def dataset_digest(config: RunConfig, dataset: Dataset | None = None) -> str:
    h = hashlib.sha256()
    if dataset is None:
        for key, path in sorted(tu_paths(config.dataset_dir, config.dataset).items()):
            h.update(key.encode())
            if os.path.isfile(path):
                with open(path, "rb") as fh:
                    h.update(hashlib.sha256(fh.read()).digest())
    else:
        for g in dataset.graphs:
            h.update(repr((g.vertex_count, sorted(g.edges), g.vertex_labels)).encode())
    return h.hexdigest()


@dataclass
class GridCache:
    grids: np.ndarray  # (N, M, c)
    labels: np.ndarray  # (N,)
    num_classes: int
    config_hash: str
    dataset_name: str = ""

    def write(self, path):
        meta = {"config_hash": self.config_hash, "num_classes": self.num_classes,
                "dataset": self.dataset_name}
        write_tensors(path, [("grids", self.grids), ("labels", self.labels)], meta)

    @classmethod
    def read(cls, path) -> "GridCache":
        meta, tensors = read_tensors(path)
        t = dict(tensors)
        return cls(t["grids"], t["labels"].astype(np.int64), int(meta["num_classes"]),
                   meta["config_hash"], meta.get("dataset", ""))


def cache_hash(config: RunConfig, dataset: Dataset | None = None) -> str:
    return hashlib.sha256(
        (config.digest() + dataset_digest(config, dataset)).encode()
    ).hexdigest()


def cache_path(config: RunConfig) -> str:
    return os.path.join(config.out, f"{config.dataset}.grids")


def fit_dataset_prototypes(dataset: Dataset, config: RunConfig):
    """Depth representations of every vertex and one prototype set per depth.

    Prototypes are fitted on the vertices of all graphs, train and test
    alike; class labels are never read.
    """
    reps = DbRepresentationSet.compute(dataset.graphs, config.depth)
    prototypes = []
    for K in range(1, config.depth + 1):
        prototypes.append(fit_prototypes(
            reps.stacked(K), config.prototypes, K, seed=(config.seed, K),
            max_iters=config.kmeans_max_iters, tol=config.kmeans_tol,
        ))
    return reps, prototypes


def compute_grids(dataset: Dataset, config: RunConfig) -> np.ndarray:
    reps, prototypes = fit_dataset_prototypes(dataset, config)
    grids = np.empty((len(dataset), config.prototypes, len(dataset.label_alphabet)))
    for p, g in enumerate(dataset.graphs):
        F = one_hot_features(g, dataset.label_alphabet)
        grids[p] = build_grid(g, F, prototypes, reps.vectors[p])
    return grids


def prepare(config: RunConfig, dataset: Dataset | None = None, use_cache: bool = True) -> GridCache:
    """Build (or reload) the aligned grids for every graph of the dataset.

    A cache file is reused only when its stored hash matches the current
    config and dataset contents.
    """
    h = cache_hash(config, dataset)
    path = cache_path(config)
    if use_cache and os.path.isfile(path):
        try:
            cached = GridCache.read(path)
        except (MalformedDataset, KeyError, ValueError) as exc:
            log.warning("ignoring unreadable grid cache %s: %s", path, exc)
        else:
            if cached.config_hash == h:
                log.info("reusing grid cache %s", path)
                return cached
            log.info("grid cache %s is stale, recomputing", path)
    if dataset is None:
        dataset = load_tu_dataset(config.dataset_dir, config.dataset)
    grids = compute_grids(dataset, config)
    cache = GridCache(grids, dataset.labels, dataset.num_classes, h, dataset.name)
    if use_cache:
        os.makedirs(config.out, exist_ok=True)
        cache.write(path)
    return cache


def split_folds(labels, folds: int, seed) -> list:
    """Stratified k-fold split as a list of ``(train_idx, test_idx)``.

    Each class is shuffled and dealt round-robin over the folds, continuing
    from where the previous class stopped so fold sizes differ by at most one.
    """
    labels = np.asarray(labels)
    n = labels.size
    if folds < 2:
        raise InvalidParameter(f"folds must be >= 2, got {folds}")
    if folds > n:
        raise InvalidParameter(f"{folds} folds for {n} graphs")
    rng = np.random.default_rng(seed)
    buckets = [[] for _ in range(folds)]
    pos = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        for i in idx:
            buckets[pos % folds].append(int(i))
            pos += 1
    out = []
    for f in range(folds):
        test = np.array(sorted(buckets[f]), dtype=np.int64)
        train = np.array(sorted(i for g in range(folds) if g != f for i in buckets[g]), dtype=np.int64)
        out.append((train, test))
    return out


@dataclass
class FoldResult:
    params: neural.NetworkParams
    accuracy: float
    losses: list
    seconds: float = 0.0


def train_fold(grids, labels, split, config: RunConfig, num_classes: int | None = None,
               seed=None) -> FoldResult:
    """Mini-batch Adam on the training indices, accuracy on the held-out ones."""
    t0 = time.perf_counter()
    grids = np.asarray(grids, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    train_idx, test_idx = (np.asarray(s, dtype=np.int64) for s in split)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params = neural.init_network(
        grids.shape[1], grids.shape[2], num_classes, rng,
        channels=config.channels, filter_sizes=config.filter_sizes,
        layers_per_branch=config.layers_per_branch, dense_units=config.dense_units,
    )
    state = neural.AdamState.zeros(params)
    X_train, y_train = grids[train_idx], labels[train_idx]
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_idx))
        total = 0.0
        for s in range(0, len(order), config.batch_size):
            batch = order[s:s + config.batch_size]
            loss, grads = neural.loss_and_gradients(
                X_train[batch], y_train[batch], params, config.dropout_rate, rng
            )
            if not math.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            try:
                params, state = neural.adam_step(params, grads, state, lr=config.lr)
            except NumericalError as exc:
                raise NumericalError(f"{exc} at epoch {epoch}", epoch=epoch) from exc
            total += loss * len(batch)
        losses.append(total / len(order))
    if len(test_idx):
        pred = neural.predict(grids[test_idx], params)
        accuracy = float(np.mean(pred == labels[test_idx]))
    else:
        accuracy = float("nan")
    return FoldResult(params, accuracy, losses, time.perf_counter() - t0)


CHECKPOINT_FORMAT = "avcn-params"


def save_checkpoint(params: neural.NetworkParams, path, meta=None) -> None:
    """Named float64 tensors in the versioned tensor-file format."""
    head = {"format": CHECKPOINT_FORMAT}
    head.update(meta or {})
    write_tensors(path, params.named_tensors(), head)


def load_checkpoint(path) -> tuple:
    """Returns ``(params, meta)``; the layout is rebuilt from tensor names."""
    meta, tensors = read_tensors(path)
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise MalformedDataset(f"{path}: not a parameter checkpoint")
    named = dict(tensors)
    branches = []
    while f"branch{len(branches)}.layer0.W" in named:
        bi, layers = len(branches), []
        while f"branch{bi}.layer{len(layers)}.W" in named:
            li = len(layers)
            layers.append(neural.ConvLayerParams(named[f"branch{bi}.layer{li}.W"],
                                                 named[f"branch{bi}.layer{li}.b"]))
        branches.append(layers)
    try:
        params = neural.NetworkParams(branches, named["dense.W"], named["dense.b"],
                                      named["head.W"], named["head.b"])
    except KeyError as exc:
        raise MalformedDataset(f"{path}: missing tensor {exc}") from None
    return params, meta


def checkpoint_path(config: RunConfig, repeat: int, fold: int) -> str:
    return os.path.join(config.out, f"{config.dataset}.r{repeat}.f{fold}.params")


@dataclass
class CvReport:
    config: dict
    config_digest: str
    fold_accuracies: list  # [repeat][fold]
    train_curves: list  # [repeat][fold] -> per-epoch mean loss
    mean_accuracy: float
    standard_error: float
    wall_times: list = field(default_factory=list)  # [repeat][fold] seconds, not written to the report

    @staticmethod
    def summarize(fold_accuracies) -> tuple:
        """Mean and ``std(ddof=1) / sqrt(count)`` over every fold of every repeat."""
        accs = np.array([a for rep in fold_accuracies for a in rep], dtype=np.float64)
        if accs.size == 0:
            raise InvalidParameter("report has no folds")
        mean = float(accs.mean())
        if accs.size < 2:
            return mean, 0.0
        return mean, float(accs.std(ddof=1) / math.sqrt(accs.size))


def run_cv(config: RunConfig, dataset: Dataset | None = None, write: bool = True) -> CvReport:
    cache = prepare(config, dataset, use_cache=write)
    accs, curves, times = [], [], []
    for r in range(config.repeats):
        splits = split_folds(cache.labels, config.folds, seed=(config.seed, r))
        accs.append([])
        curves.append([])
        times.append([])
        for f, split in enumerate(splits):
            res = train_fold(cache.grids, cache.labels, split, config,
                             num_classes=cache.num_classes, seed=(config.seed, r, f))
            log.info("repeat %d fold %d: accuracy %.4f", r, f, res.accuracy)
            accs[-1].append(res.accuracy)
            curves[-1].append(res.losses)
            times[-1].append(res.seconds)
            if write:
                os.makedirs(config.out, exist_ok=True)
                save_checkpoint(res.params, checkpoint_path(config, r, f),
                                {"config_digest": config.digest(), "repeat": r, "fold": f})
    mean, se = CvReport.summarize(accs)
    echo = config.to_dict()
    echo.pop("out")  # where results go is not part of them
    report = CvReport(echo, config.digest(), accs, curves, mean, se, times)
    if write:
        os.makedirs(config.out, exist_ok=True)
        write_report(report, report_path(config))
        with open(os.path.join(config.out, f"{config.dataset}.timings.json"), "w") as fh:
            json.dump(times, fh)
    return report


def report_path(config: RunConfig) -> str:
    return os.path.join(config.out, f"{config.dataset}.report.txt")


def format_report(report: CvReport) -> str:
    lines = [REPORT_HEADER]
    for k in sorted(report.config):
        lines.append(f"config.{k} = {json.dumps(report.config[k])}")
    lines.append(f"config_digest = {report.config_digest}")
    for r, rep in enumerate(report.fold_accuracies):
        for f, acc in enumerate(rep):
            lines.append(f"fold.{r}.{f}.accuracy = {acc!r}")
            curve = ",".join(repr(float(x)) for x in report.train_curves[r][f])
            lines.append(f"fold.{r}.{f}.train_loss = [{curve}]")
    lines.append(f"summary.repeats = {len(report.fold_accuracies)}")
    lines.append(f"summary.folds = {len(report.fold_accuracies[0])}")
    lines.append(f"summary.mean_accuracy = {report.mean_accuracy!r}")
    lines.append(f"summary.standard_error = {report.standard_error!r}")
    lines.append("")
    lines.append("repeat fold accuracy")
    for r, rep in enumerate(report.fold_accuracies):
        for f, acc in enumerate(rep):
            lines.append(f"{r:6d} {f:4d} {acc:.6f}")
    return "\n".join(lines) + "\n"


def write_report(report: CvReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_report(report))


def read_report(path) -> CvReport:
    config, accs, curves = {}, {}, {}
    summary = {}
    digest = ""
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != REPORT_HEADER:
            raise MalformedDataset(f"{path} is not an avcn report")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                break
            key, _, value = line.partition(" = ")
            if key.startswith("config."):
                config[key[7:]] = json.loads(value)
            elif key == "config_digest":
                digest = value
            elif key.startswith("fold."):
                _, r, f, what = key.split(".")
                r, f = int(r), int(f)
                if what == "accuracy":
                    accs[(r, f)] = float(value)
                else:
                    inner = value.strip("[]")
                    curves[(r, f)] = [float(x) for x in inner.split(",")] if inner else []
            elif key.startswith("summary."):
                summary[key[8:]] = value
    repeats, folds = int(summary["repeats"]), int(summary["folds"])
    fold_acc = [[accs[(r, f)] for f in range(folds)] for r in range(repeats)]
    fold_curves = [[curves[(r, f)] for f in range(folds)] for r in range(repeats)]
    return CvReport(config, digest, fold_acc, fold_curves,
                    float(summary["mean_accuracy"]), float(summary["standard_error"]))


def report_render(report: CvReport) -> str:
    if not report.fold_accuracies or not report.fold_accuracies[0]:
        raise InvalidParameter("report has no folds")
    rows = ["repeat  fold  accuracy", "------  ----  --------"]
    for r, rep in enumerate(report.fold_accuracies):
        for f, acc in enumerate(rep):
            rows.append(f"{r:6d}  {f:4d}  {acc:8.4f}")
    rows.append("")
    rows.append(f"mean accuracy : {report.mean_accuracy:.4f} +/- {report.standard_error:.4f} (standard error)")
    name = report.config.get("dataset", "?")
    rows.append(f"dataset       : {name}")
    rows.append(f"config digest : {report.config_digest}")
    return "\n".join(rows) + "\n"
