"""End-to-end pipeline: configuration, artifact formats, and commands.

Artifacts are plain text with versioned headers so every file is
self-describing and diffs cleanly: axis bundles (MEIP-AXES), Gaussian
models (MEIP-MODEL), per-axis design/force fields (MEIP-FIELDS),
confusion matrices, per-sample predictions, per-axis feature histograms
(CSV), and raster snapshots as binary PGM.  Reports are JSON and
deterministic: rerunning a config byte-reproduces them (wall-clock timing
goes to a separate file).
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from meip import classifier, fem, forest
from meip.dataset import Dataset, load_idx_images, load_idx_labels
from meip.optimizer import OptimizerConfig

__all__ = ["PipelineConfig", "RunReport", "load_config", "save_axes",
           "load_axes", "save_model", "load_model", "write_pgm",
           "write_field_csv", "write_confusion_csv", "cmd_train_axes",
           "cmd_train", "cmd_eval", "cmd_inspect", "cmd_pipeline"]

log = logging.getLogger(__name__)

AXES_MAGIC = "MEIP-AXES 1"
MODEL_MAGIC = "MEIP-MODEL 1"
FIELDS_MAGIC = "MEIP-FIELDS 1"

_FLOAT_KEYS = {"lambda", "tolp", "tolq", "p_min", "q_min", "sigma0",
               "dx_max", "eps_x", "eps_j", "gamma", "ridge"}
_INT_KEYS = {"n1", "n2", "max_iters", "n_axes", "svd_k", "seed"}
_STR_KEYS = {"ref_kind", "class_pairs", "one_vs_rest", "train_images",
             "train_labels", "test_images", "test_labels", "out_dir", "norm"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class PipelineConfig:
    """Parsed run configuration with the published experiment defaults."""

    n1: int = 28
    n2: int = 28
    lam: float = 0.3
    tolp: float = 2.0
    tolq: float = 2.0
    p_min: float = 1e-3
    q_min: float = 1e-3
    sigma0: float = 1e5
    dx_max: float = 0.08
    eps_x: float = 8e-4
    eps_j: float = 1e-7
    gamma: float = 0.7
    max_iters: int = 500
    ref_kind: str = "u_minus_v"     # comma list runs one forest per kind
    n_axes: int = 1
    ridge: float = 1e-6
    svd_k: int = 0
    class_pairs: str = ""           # e.g. "0:1" or "3:4"
    one_vs_rest: str = ""           # e.g. "0,1,2,3,4"
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    out_dir: str = "out"
    seed: int = 0                   # reserved; the pipeline is deterministic
    norm: str = "l2"
    base_dir: Path = field(default_factory=Path)

    def optimizer_config(self, ref_kind: str) -> OptimizerConfig:
        cfg = OptimizerConfig(
            lam=self.lam, tolp=self.tolp, tolq=self.tolq, p_min=self.p_min,
            q_min=self.q_min, sigma0=self.sigma0, dx_max=self.dx_max,
            eps_x=self.eps_x, eps_j=self.eps_j, gamma=self.gamma,
            max_iters=self.max_iters, ref_kind=ref_kind)
        cfg.validate()
        return cfg

    def ref_kinds(self) -> list[str]:
        return [r.strip() for r in self.ref_kind.split(",") if r.strip()]

    def classes(self) -> list[int]:
        """Digits participating in classification, in declared order."""
        if self.one_vs_rest:
            return [int(t) for t in self.one_vs_rest.split(",")]
        digits: list[int] = []
        for pair in self.pairs():
            for d in pair:
                if d not in digits:
                    digits.append(d)
        if len(digits) != 2:
            raise ValueError(
                "class_pairs must involve exactly 2 digits for a binary "
                "classifier; use one_vs_rest for more")
        return digits

    def pairs(self) -> list[tuple[int, int]]:
        if not self.class_pairs:
            return []
        out = []
        for tok in self.class_pairs.split(","):
            a, b = tok.split(":")
            out.append((int(a), int(b)))
        return out

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def echo_items(self) -> list[tuple[str, str]]:
        """Canonical key = value view sufficient to reproduce the run."""
        items = []
        for key in sorted(_ALL_KEYS):
            attr = "lam" if key == "lambda" else key
            val = getattr(self, attr)
            if key in _FLOAT_KEYS:
                items.append((key, _fmt(val)))
            else:
                items.append((key, str(val)))
        return items


def load_config(path) -> PipelineConfig:
    """Parse a key = value config file; unknown keys are hard errors."""
    path = Path(path)
    cfg = PipelineConfig(base_dir=path.parent)
    valid = {f.name for f in dc_fields(PipelineConfig)}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        attr = "lam" if key == "lambda" else key
        assert attr in valid
        if key in _FLOAT_KEYS:
            setattr(cfg, attr, float(value))
        elif key in _INT_KEYS:
            setattr(cfg, attr, int(value))
        else:
            setattr(cfg, attr, value)
    if bool(cfg.class_pairs) == bool(cfg.one_vs_rest):
        raise ValueError(
            f"{path}: exactly one of class_pairs / one_vs_rest must be set")
    return cfg


# ---------------------------------------------------------------------------
# artifact formats


def save_axes(path, bundle: forest.AxisBundle) -> None:
    m = bundle.axes.shape[1]
    with open(path, "w") as f:
        f.write(AXES_MAGIC + "\n")
        f.write(f"{bundle.n1} {bundle.n2} {m} {bundle.n_axes}\n")
        for axis in bundle.axes:
            f.write(" ".join(_fmt(v) for v in axis) + "\n")


def load_axes(path) -> forest.AxisBundle:
    with open(path) as f:
        header = f.readline().strip()
        if header != AXES_MAGIC:
            raise ValueError(f"{path}: not an axis bundle file ({header!r})")
        n1, n2, m, n_axes = (int(t) for t in f.readline().split())
        axes = np.empty((n_axes, m))
        for i in range(n_axes):
            row = np.array(f.readline().split(), dtype=np.float64)
            if row.size != m:
                raise ValueError(f"{path}: axis {i} has {row.size} values, "
                                 f"expected {m}")
            axes[i] = row
    if m != (n1 + 1) * (n2 + 1):
        raise ValueError(f"{path}: node count {m} does not match mesh "
                         f"{n1}x{n2}")
    return forest.AxisBundle(axes=axes, n1=n1, n2=n2)


def save_model(path, model: list[classifier.ClassGaussian],
               bundle_ref: str, config_items: list[tuple[str, str]]) -> None:
    dim = model[0].mean.shape[0]
    with open(path, "w") as f:
        f.write(MODEL_MAGIC + "\n")
        f.write(f"bundle {bundle_ref}\n")
        f.write(f"config {len(config_items)}\n")
        for key, value in config_items:
            f.write(f"{key} = {value}\n")
        f.write(f"classes {len(model)} dim {dim}\n")
        for j, g in enumerate(model):
            f.write(f"class {j}\n")
            f.write(f"prior {_fmt(g.prior)}\n")
            f.write("mean " + " ".join(_fmt(v) for v in g.mean) + "\n")
            for row in g.cov:
                f.write("cov " + " ".join(_fmt(v) for v in row) + "\n")


def load_model(path):
    """Load a model file; returns (model, bundle_ref, config_items).

    The discriminant terms are recomputed from the stored moments, which
    reproduces the fitted parameters bit for bit.
    """
    with open(path) as f:
        header = f.readline().strip()
        if header != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file ({header!r})")
        bundle_ref = f.readline().strip().split(" ", 1)[1]
        n_cfg = int(f.readline().split()[1])
        config_items = []
        for _ in range(n_cfg):
            key, _, value = f.readline().strip().partition("=")
            config_items.append((key.strip(), value.strip()))
        tok = f.readline().split()
        n_classes, dim = int(tok[1]), int(tok[3])
        model = []
        for j in range(n_classes):
            if f.readline().split() != ["class", str(j)]:
                raise ValueError(f"{path}: malformed class block {j}")
            prior = float(f.readline().split()[1])
            mean = np.array(f.readline().split()[1:], dtype=np.float64)
            cov = np.empty((dim, dim))
            for r in range(dim):
                cov[r] = np.array(f.readline().split()[1:], dtype=np.float64)
            model.append(classifier.gaussian_from_moments(mean, cov, prior))
    return model, bundle_ref, config_items


def save_fields(path, n1: int, n2: int, records: list[dict]) -> None:
    """Per-axis mean forces and final designs of one forest."""
    with open(path, "w") as f:
        f.write(FIELDS_MAGIC + "\n")
        f.write(f"{n1} {n2} {len(records)}\n")
        for i, rec in enumerate(records):
            f.write(f"axis {i}\n")
            for name in ("f", "g"):
                f.write(name + " " + " ".join(_fmt(v) for v in rec[name]) + "\n")
            for name in ("p", "q"):
                f.write(name + " " + " ".join(_fmt(v) for v in rec[name]) + "\n")


def load_fields(path):
    with open(path) as f:
        header = f.readline().strip()
        if header != FIELDS_MAGIC:
            raise ValueError(f"{path}: not a fields file ({header!r})")
        n1, n2, count = (int(t) for t in f.readline().split())
        records = []
        for i in range(count):
            if f.readline().split() != ["axis", str(i)]:
                raise ValueError(f"{path}: malformed axis block {i}")
            rec = {}
            for name in ("f", "g", "p", "q"):
                tag, _, rest = f.readline().partition(" ")
                if tag != name:
                    raise ValueError(f"{path}: expected field {name!r}")
                rec[name] = np.array(rest.split(), dtype=np.float64)
            records.append(rec)
    return n1, n2, records


def write_pgm(path, grid: np.ndarray) -> None:
    """Binary P5 raster of a 2-D field, min-max scaled to 0..255."""
    grid = np.asarray(grid, dtype=np.float64)
    lo, hi = grid.min(), grid.max()
    if hi > lo:
        scaled = np.rint((grid - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.full_like(grid, 128.0)
    data = scaled.clip(0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def write_field_csv(path, name: str, grid: np.ndarray) -> None:
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    with open(path, "w") as f:
        f.write(f"MEIP-FIELD 1,{name},{grid.shape[0]},{grid.shape[1]}\n")
        for row in grid:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_field_csv(path) -> np.ndarray:
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header[0] != "MEIP-FIELD 1":
            raise ValueError(f"{path}: not a field CSV")
        rows, cols = int(header[2]), int(header[3])
        grid = np.empty((rows, cols))
        for r in range(rows):
            grid[r] = np.array(f.readline().split(","), dtype=np.float64)
    return grid


def node_grid(values: np.ndarray, n1: int, n2: int) -> np.ndarray:
    """Node vector -> (n1+1, n2+1) grid in mesh (row, column) layout."""
    return np.asarray(values).reshape((n2 + 1, n1 + 1)).T


def element_grid(values: np.ndarray, n1: int, n2: int) -> np.ndarray:
    return np.asarray(values).reshape((n2, n1)).T


def write_confusion_csv(path, cm: classifier.ConfusionMatrix,
                        class_names: list[str]) -> None:
    """Confusion matrix with precision/recall margins and total accuracy."""
    n = len(class_names)
    with open(path, "w") as f:
        f.write("MEIP-CONFUSION 1," + ",".join(
            f"target_{c}" for c in class_names) + ",precision\n")
        for i in range(n):
            row = ",".join(str(int(v)) for v in cm.counts[i])
            f.write(f"output_{class_names[i]},{row},{_fmt(cm.precision[i])}\n")
        f.write("recall," + ",".join(_fmt(v) for v in cm.recall)
                + f",{_fmt(cm.accuracy)}\n")


def read_confusion_csv(path):
    """Return (counts, precision, recall, accuracy) parsed back from CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines[0].startswith("MEIP-CONFUSION 1"):
        raise ValueError(f"{path}: not a confusion CSV")
    n = len(lines[0].split(",")) - 2
    counts = np.array([[int(v) for v in line.split(",")[1:n + 1]]
                       for line in lines[1:n + 1]])
    precision = np.array([float(line.split(",")[-1]) for line in lines[1:n + 1]])
    tail = lines[n + 1].split(",")
    recall = np.array([float(v) for v in tail[1:n + 1]])
    return counts, precision, recall, float(tail[-1])


def write_histogram_csv(path, z: np.ndarray, targets: np.ndarray,
                        n_classes: int, bins: int = 50) -> None:
    """Distribution of one feature coordinate, tallied per class."""
    lo, hi = float(z.min()), float(z.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    with open(path, "w") as f:
        f.write("MEIP-HIST 1,bin_lo,bin_hi," + ",".join(
            f"count_{j}" for j in range(n_classes)) + "\n")
        for b in range(bins):
            row = [str(b), _fmt(edges[b]), _fmt(edges[b + 1])]
            for j in range(n_classes):
                zj = z[targets == j]
                if b == bins - 1:
                    cnt = int(((zj >= edges[b]) & (zj <= edges[b + 1])).sum())
                else:
                    cnt = int(((zj >= edges[b]) & (zj < edges[b + 1])).sum())
                row.append(str(cnt))
            f.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# dataset plumbing


def load_split(cfg: PipelineConfig, split: str) -> Dataset:
    """Load and preprocess one split restricted to the configured digits."""
    if split == "train":
        img_path, lbl_path = cfg.train_images, cfg.train_labels
    elif split == "test":
        img_path, lbl_path = cfg.test_images, cfg.test_labels
    else:
        raise ValueError(f"unknown split {split!r}")
    if not img_path or not lbl_path:
        raise ValueError(f"config does not define {split} dataset paths")
    images = load_idx_images(cfg.resolve(img_path))
    labels = load_idx_labels(cfg.resolve(lbl_path))
    if len(images) != len(labels):
        raise ValueError(
            f"{split}: image/label count mismatch ({len(images)} images, "
            f"{len(labels)} labels)")
    digits = cfg.classes()
    keep = np.isin(labels, digits)
    return Dataset.from_arrays(images[keep], labels[keep], norm=cfg.norm)


def class_targets(cfg: PipelineConfig, labels: np.ndarray) -> np.ndarray:
    """Map digit labels to 0-based class indices in config order."""
    digits = cfg.classes()
    lut = np.full(int(max(digits)) + 1, -1, dtype=np.int64)
    for idx, d in enumerate(digits):
        lut[d] = idx
    targets = lut[labels]
    if np.any(targets < 0):
        raise ValueError("dataset contains labels outside configured classes")
    return targets


def _forest_specs(cfg: PipelineConfig) -> list[dict]:
    """One entry per forest: binary labeling rule plus reference kind."""
    specs = []
    refs = cfg.ref_kinds()
    if cfg.class_pairs:
        for a, b in cfg.pairs():
            for ref in refs:
                specs.append({"kind": "pair", "a": a, "b": b, "ref": ref,
                              "name": f"{a}v{b}_{ref}"})
    else:
        for d in cfg.classes():
            for ref in refs:
                specs.append({"kind": "ovr", "digit": d, "ref": ref,
                              "name": f"{d}vrest_{ref}"})
    return specs


def _binary_labels(spec: dict, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(selection mask, 0/1 labels) for one forest's training view."""
    if spec["kind"] == "pair":
        mask = np.isin(labels, (spec["a"], spec["b"]))
        ybin = (labels == spec["b"]).astype(np.int64)
        return mask, ybin[mask]
    mask = np.ones(len(labels), dtype=bool)
    return mask, (labels == spec["digit"]).astype(np.int64)


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    """Deterministic summary of a run; timing is reported separately."""

    config: dict
    n_axes: int = 0
    feature_dim: int = 0
    axes: list = field(default_factory=list)
    train_confusion: dict | None = None
    test_confusion: dict | None = None

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "n_axes": self.n_axes,
            "feature_dim": self.feature_dim,
            "axes": self.axes,
            "train_confusion": self.train_confusion,
            "test_confusion": self.test_confusion,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        return cls(config=d["config"], n_axes=d["n_axes"],
                   feature_dim=d["feature_dim"], axes=d["axes"],
                   train_confusion=d["train_confusion"],
                   test_confusion=d["test_confusion"])


def _confusion_dict(cm: classifier.ConfusionMatrix) -> dict:
    return {"counts": cm.counts.tolist(),
            "precision": [float(v) for v in cm.precision],
            "recall": [float(v) for v in cm.recall],
            "accuracy": cm.accuracy,
            "total": cm.total}


# ---------------------------------------------------------------------------
# commands


def cmd_train_axes(cfg: PipelineConfig, out_dir, jobs: int = 1) -> Path:
    """Grow every configured forest and write the combined axis bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_split(cfg, "train")
    mesh = fem.build_mesh(cfg.n1, cfg.n2)
    if data.n1 != cfg.n1 or data.n2 != cfg.n2:
        raise ValueError(
            f"dataset images are {data.n1}x{data.n2}, config says "
            f"{cfg.n1}x{cfg.n2}")
    specs = _forest_specs(cfg)

    def run(spec: dict) -> forest.AxisBundle:
        mask, ybin = _binary_labels(spec, data.labels)
        ocfg = cfg.optimizer_config(spec["ref"])
        log.info("forest %s: %d samples (%d/%d per class)", spec["name"],
                 int(mask.sum()), int((ybin == 0).sum()), int((ybin == 1).sum()))
        return forest.generate_axes(data.gray[mask], ybin, cfg.n_axes,
                                    ocfg, mesh)

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            bundles = list(pool.map(run, specs))
    else:
        bundles = [run(spec) for spec in specs]

    for spec, b in zip(specs, bundles):
        save_fields(out / f"fields_{spec['name']}.txt", cfg.n1, cfg.n2,
                    b.fields)

    axes = np.vstack([b.axes for b in bundles])
    provenance = []
    for spec, b in zip(specs, bundles):
        for prov in b.provenance:
            provenance.append({"forest": spec["name"], **prov})
    combined = forest.AxisBundle(
        axes=axes, n1=cfg.n1, n2=cfg.n2, provenance=provenance,
        pool_exhausted=any(b.pool_exhausted for b in bundles))
    if cfg.svd_k > 0:
        # Exhausted pools can leave fewer axes than requested; compress to
        # what exists rather than failing the run.
        k = min(cfg.svd_k, combined.n_axes)
        if k < cfg.svd_k:
            log.warning("svd_k=%d capped to %d available axes",
                        cfg.svd_k, combined.n_axes)
        combined = forest.orthonormalize(combined, k)

    bundle_path = out / "axes.txt"
    save_axes(bundle_path, combined)
    (out / "axes_provenance.json").write_text(
        json.dumps(provenance, indent=2, sort_keys=True) + "\n")
    return bundle_path


def cmd_train(cfg: PipelineConfig, bundle_path, out_dir) -> Path:
    """Fit the per-class Gaussian model on the training split."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = load_axes(bundle_path)
    data = load_split(cfg, "train")
    targets = class_targets(cfg, data.labels)
    z = classifier.features_from_gray(bundle, data.gray)
    model = classifier.fit(z, targets, len(cfg.classes()), ridge=cfg.ridge)
    model_path = out / "model.txt"
    bundle_ref = os.path.relpath(Path(bundle_path).resolve(), out.resolve())
    save_model(model_path, model, bundle_ref, cfg.echo_items())
    return model_path


def cmd_eval(cfg: PipelineConfig, model_path, split: str, out_dir) -> RunReport:
    """Evaluate a model on one split; writes CSV artifacts and a report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, bundle_ref, _ = load_model(model_path)
    bundle = load_axes(Path(model_path).parent / bundle_ref)
    data = load_split(cfg, split)
    targets = class_targets(cfg, data.labels)
    z = classifier.features_from_gray(bundle, data.gray)
    outputs = classifier.predict_batch(model, z)
    cm = classifier.confusion_from_predictions(outputs, targets, len(model))

    names = [str(d) for d in cfg.classes()]
    write_confusion_csv(out / f"confusion_{split}.csv", cm, names)
    post = classifier.predict_posterior(model, z)
    with open(out / f"predictions_{split}.csv", "w") as f:
        f.write("MEIP-PRED 1,index,target,output," + ",".join(
            f"posterior_{c}" for c in names) + "\n")
        for i in range(len(targets)):
            f.write(f"{i},{targets[i]},{outputs[i]},"
                    + ",".join(_fmt(v) for v in post[i]) + "\n")
    for m in range(z.shape[1]):
        write_histogram_csv(out / f"hist_axis_{m}_{split}.csv", z[:, m],
                            targets, len(model))

    report = RunReport(config=dict(cfg.echo_items()),
                       n_axes=bundle.n_axes, feature_dim=z.shape[1])
    cmd_dict = _confusion_dict(cm)
    if split == "train":
        report.train_confusion = cmd_dict
    else:
        report.test_confusion = cmd_dict
    (out / f"report_{split}.json").write_text(report.to_json())
    return report


def cmd_inspect(path, out_dir) -> list[Path]:
    """Render a stored artifact to PGM rasters and raw-value CSVs."""
    path = Path(path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = open(path).readline().strip()
    written: list[Path] = []

    def emit(stem: str, grid: np.ndarray):
        pgm, csv = out / f"{stem}.pgm", out / f"{stem}.csv"
        write_pgm(pgm, grid)
        write_field_csv(csv, stem, grid)
        written.extend([pgm, csv])

    if header == AXES_MAGIC:
        bundle = load_axes(path)
        for m, axis in enumerate(bundle.axes):
            emit(f"axis_{m}", node_grid(axis, bundle.n1, bundle.n2))
    elif header == FIELDS_MAGIC:
        n1, n2, records = load_fields(path)
        for i, rec in enumerate(records):
            emit(f"axis_{i}_f", node_grid(rec["f"], n1, n2))
            emit(f"axis_{i}_g", node_grid(rec["g"], n1, n2))
            emit(f"axis_{i}_p", element_grid(rec["p"], n1, n2))
            emit(f"axis_{i}_q", element_grid(rec["q"], n1, n2))
    elif header == MODEL_MAGIC:
        model, _, _ = load_model(path)
        for j, g in enumerate(model):
            write_field_csv(out / f"class_{j}_mean.csv", f"class_{j}_mean",
                            g.mean[None, :])
            write_field_csv(out / f"class_{j}_cov.csv", f"class_{j}_cov",
                            g.cov)
            written.extend([out / f"class_{j}_mean.csv",
                            out / f"class_{j}_cov.csv"])
    else:
        raise ValueError(f"{path}: unrecognized artifact header {header!r}")
    return written


def cmd_pipeline(cfg: PipelineConfig, out_dir, jobs: int = 1) -> RunReport:
    """train-axes, train, and eval on both splits, composed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    bundle_path = cmd_train_axes(cfg, out, jobs=jobs)
    t1 = time.perf_counter()
    model_path = cmd_train(cfg, bundle_path, out)
    t2 = time.perf_counter()
    train_report = cmd_eval(cfg, model_path, "train", out)
    test_report = cmd_eval(cfg, model_path, "test", out)
    t3 = time.perf_counter()

    report = RunReport(config=dict(cfg.echo_items()),
                       n_axes=train_report.n_axes,
                       feature_dim=train_report.feature_dim,
                       train_confusion=train_report.train_confusion,
                       test_confusion=test_report.test_confusion)
    (out / "report.json").write_text(report.to_json())
    # Timing is useful but non-reproducible, so it lives outside the report.
    (out / "timing.txt").write_text(
        f"train_axes {t1 - t0:.3f}s\ntrain {t2 - t1:.3f}s\n"
        f"eval {t3 - t2:.3f}s\ntotal {t3 - t0:.3f}s\n")
    return report
