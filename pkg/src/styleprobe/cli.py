"""Command-line front end: orchestrates dataset -> train -> probe -> report.

Every command reads an optional JSON config file (flags override file values),
derives all randomness from one seed, and writes outputs plus a provenance
JSON into the output directory, so reruns with identical configs are
byte-identical.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import exceptions as exc
from .analysis import (
    accuracy_vs_distance,
    build_population,
    class_mean_style,
    dimension_histograms,
    find_corner_cases,
    reclassify,
    score_dimensions,
    silhouette,
    split_populations,
    standardize_columns,
    top_dims,
    traverse,
    tsne_project,
)
from .autodiff import Tape, Tensor, finite_diff_check, ops
from .data import (
    SeverityConfig,
    corrupt_dataset,
    glyph_dataset,
    load_dataset_cache,
    load_idx,
    save_dataset_cache,
    stack_images,
)
from .models import AnalyticGenerator, ConvNetClassifier, StyleGenerator
from .models.classifier import classifier_probs
from .report import ImageGrid, make_provenance, write_csv, write_image_grid, write_json

CONFIG_ERROR, DATA_ERROR, NUMERIC_ERROR = 2, 3, 4

DATA_ERRORS = (exc.BadMagic, exc.CountMismatch, exc.TruncatedFile,
               exc.EmptyDataset, exc.EmptySubset, exc.UnknownLabel,
               exc.InvalidClass, exc.ScopeMismatch, exc.TooManyPoints,
               exc.BadPerplexity)
NUMERIC_ERRORS = (exc.DivergedTraining, exc.NonFiniteEvaluation,
                  exc.DegenerateCovariance, exc.StartBelowThreshold,
                  exc.NoCrossingWithinBound)


class ConfigError(Exception):
    """Invalid or missing command configuration."""


class _Config:
    """Layered option lookup: CLI flag, then config file, then default."""

    def __init__(self, args):
        self.args = vars(args)
        self.file = {}
        path = self.args.get("config")
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    self.file = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e

    def get(self, key, default=None):
        value = self.args.get(key)
        if value is not None:
            return value
        if key in self.file:
            return self.file[key]
        return default

    def require(self, key, hint):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"missing required option --{hint}")
        return value

    def effective(self, keys):
        return {k: self.get(k) for k in keys}


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def _out_dir(cfg):
    out = cfg.get("out", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _severity_from(cfg):
    noise = cfg.get("severity_noise")
    blur = cfg.get("severity_blur")
    kwargs = {}
    if noise:
        values = [float(v) for v in str(noise).split(",")]
        kwargs["noise_sigma"] = dict(zip((1, 2, 3), values))
    if blur:
        values = [float(v) for v in str(blur).split(",")]
        kwargs["blur_sigma"] = dict(zip((1, 2, 3), values))
    return SeverityConfig(**kwargs)


def _load_generator(cfg):
    kind = cfg.get("generator", "learned")
    if kind == "analytic":
        return AnalyticGenerator(seed=int(cfg.get("seed", 0)))
    path = cfg.require("generator_path", "generator-path")
    sidecar = path + ".json" if os.path.exists(path + ".json") else None
    return StyleGenerator.load(path, sidecar)


def _load_classifier(cfg, key="classifier"):
    path = cfg.require(key, key.replace("_", "-"))
    sidecar = path + ".json" if os.path.exists(path + ".json") else None
    return ConvNetClassifier.load(path, sidecar)


# ------------------------------------------------------------------ commands

def cmd_make_dataset(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    severity = _severity_from(cfg)
    source = cfg.get("source", "procedural")
    if source == "idx":
        clean = load_idx(cfg.require("idx_images", "idx-images"),
                         cfg.require("idx_labels", "idx-labels"))
        count = cfg.get("count")
        if count is not None:
            clean = clean[: int(count)]
    else:
        clean = glyph_dataset(int(cfg.get("count", 8000)), seed=seed)
    corpus = corrupt_dataset(clean, severity, rng=np.random.default_rng(seed + 1))
    blob = os.path.join(out, "dataset.lpt")
    sidecar = os.path.join(out, "dataset.json")
    save_dataset_cache(blob, sidecar, corpus, severity, seed)
    n_clean = sum(not s.corrupted for s in corpus)
    print(f"wrote {blob}: {len(corpus)} samples ({n_clean} clean, "
          f"{len(corpus) - n_clean} corrupted)")
    print(f"severity config: {severity.to_dict()}")
    return 0


def _dataset_severity(blob_path):
    """Severity config recorded in the dataset cache's sidecar, if present."""
    sidecar = os.path.splitext(str(blob_path))[0] + ".json"
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as fh:
            recorded = json.load(fh).get("severity_config")
        if recorded:
            return SeverityConfig.from_dict(recorded)
    return SeverityConfig()


def cmd_train(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    target = cfg.get("target", "classifier")
    samples = load_dataset_cache(cfg.require("data", "data"))
    X, y = stack_images(samples)
    if target == "classifier":
        subset = cfg.get("subset", "all")
        if subset == "clean":
            mask = np.array([not s.corrupted for s in samples])
            X, y = X[mask], y[mask]
            trained_on = "clean"
        else:
            trained_on = "corrupted"
        clf = ConvNetClassifier(
            epochs=int(cfg.get("epochs", 4)), lr=float(cfg.get("lr", 1e-3)),
            batch_size=int(cfg.get("batch", 64)), seed=seed,
        ).fit(X, y, trained_on=trained_on)
        accuracy = clf.evaluate(X, y)["accuracy"]
        blob = os.path.join(out, "classifier.lpt")
        clf.save(blob, blob + ".json", final_accuracy=accuracy)
        print(f"wrote {blob}: train accuracy {accuracy:.4f}")
    elif target == "generator":
        severity = _dataset_severity(cfg.get("data"))
        noise_sigma = np.array([
            severity.noise_sigma[s.severity[0]] if s.corrupted else 0.0
            for s in samples], dtype=np.float32)
        blur_sigma = np.array([
            severity.blur_sigma[s.severity[1]] if s.corrupted else 0.0
            for s in samples], dtype=np.float32)
        gen = StyleGenerator(
            epochs=int(cfg.get("epochs", 10)), lr=float(cfg.get("lr", 2e-3)),
            batch_size=int(cfg.get("batch", 32)), seed=seed,
            regime=cfg.get("regime", "reconstruction"),
        ).fit(X, y, noise_sigma=noise_sigma, blur_sigma=blur_sigma)
        mse = (gen.reconstruction_mse(X[:512], y[:512])
               if gen.regime == "reconstruction" else None)
        blob = os.path.join(out, "generator.lpt")
        gen.save(blob, blob + ".json", final_mse=mse)
        print(f"wrote {blob}" + (f": reconstruction mse {mse:.5f}" if mse else ""))
    else:
        return _fail(f"unknown train target {target!r}", CONFIG_ERROR)
    return 0


def _scoped_population(cfg, generator, classifier, count, scope, seed):
    return build_population(generator, classifier, count, scope=scope, seed=seed)


def cmd_rank(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    scope = cfg.get("scope", "global")
    if scope != "global":
        scope = int(scope)
    count = int(cfg.get("count", 2000))
    top = int(cfg.get("top", 20))
    generator = _load_generator(cfg)
    classifier = _load_classifier(cfg)
    pop = build_population(generator, classifier, count, scope=scope, seed=seed)
    scores = score_dimensions(pop, generator, classifier, scope=scope)

    well, mis = split_populations(pop)
    rows, entries = [], []
    for s in scores[:top]:
        separation = None
        if len(well) and len(mis):
            separation = dimension_histograms(well, mis, s.dim)["separation"]
        rows.append((s.rank, s.dim, s.mean_grad, s.direction, s.scope))
        entries.append({
            "rank": s.rank, "dim": s.dim, "mean_grad": s.mean_grad,
            "direction": s.direction, "scope": s.scope,
            "sign_disagreement": s.sign_disagreement,
            "ks_separation": separation,
        })
    csv_path = os.path.join(out, "rankings.csv")
    write_csv(csv_path, ("rank", "dim", "mean_grad", "direction", "scope"), rows)
    write_json(os.path.join(out, "rankings.json"),
               {"rankings": entries,
                "misclassified_fraction": float(1.0 - pop.well_mask.mean())},
               make_provenance(cfg.effective(
                   ("seed", "scope", "count", "top", "generator",
                    "generator_path", "classifier")), seed=seed))
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


def cmd_traverse(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    generator = _load_generator(cfg)
    classifier = _load_classifier(cfg)
    class_index = int(cfg.get("class_index", 0))
    count = int(cfg.get("count", 1000))
    n_dims = int(cfg.get("top", 10))
    fractions = [float(v) for v in str(cfg.get(
        "fractions", "0,0.25,0.5,0.75,0.9,0.95,1.0")).split(",")]

    pop = build_population(generator, classifier, count, scope=class_index,
                           seed=seed)
    scores = score_dimensions(pop, generator, classifier, scope=class_index)
    if cfg.get("start", "class-mean") == "class-mean":
        s0 = class_mean_style(pop, class_index, well_only=True)
    else:
        s0 = pop.styles[int(np.flatnonzero(pop.well_mask)[0])].astype(np.float64)
    stds = pop.styles.std(axis=0)

    results, skipped = [], {}
    for s in scores[:n_dims]:
        try:
            results.append(traverse(
                s0, s.dim, s.direction, generator, classifier, class_index,
                fractions=fractions, coordinate_scale=max(stds[s.dim], 1e-6)))
        except (exc.StartBelowThreshold, exc.NoCrossingWithinBound) as e:
            skipped[s.dim] = type(e).__name__
    if not results:
        return _fail("no dimension could be traversed", NUMERIC_ERROR)

    grid = ImageGrid(rows=len(fractions), cols=len(results),
                     row_labels=[f"progress {p:g}" for p in fractions],
                     col_labels=[f"dim {r.dim} "
                                 f"{'+' if r.direction > 0 else '-'}"
                                 for r in results])
    for fi in range(len(fractions)):
        for r in results:
            frame = r.frames[fi]
            grid.add_cell(frame.image, dim=r.dim, direction=r.direction,
                          progress=frame.progress, shift=frame.shift,
                          true_class_prob=frame.true_class_prob)
    grid_path = write_image_grid(grid, os.path.join(
        out, "traverse_grid." + cfg.get("image_format", "pgm")))
    frames = [{
        "dim": r.dim, "direction": r.direction,
        "shift_reference": r.shift_reference,
        "frames": [{"progress": f.progress, "shift": f.shift,
                    "true_class_prob": f.true_class_prob} for f in r.frames],
    } for r in results]
    write_json(os.path.join(out, "frames.json"),
               {"class": class_index, "start": cfg.get("start", "class-mean"),
                "skipped": skipped, "traversals": frames},
               make_provenance(cfg.effective(
                   ("seed", "class_index", "top", "fractions", "generator",
                    "generator_path", "classifier")), seed=seed))
    print(f"wrote {grid_path} ({len(results)} dims x {len(fractions)} fractions)")
    return 0


def cmd_corner_cases(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    generator = _load_generator(cfg)
    classifier = _load_classifier(cfg)
    top_m = int(cfg.get("top_m", 10))
    count = int(cfg.get("count", 1000))
    classes_opt = cfg.get("classes", "all")
    classes = (range(generator.n_classes) if classes_opt == "all"
               else [int(v) for v in str(classes_opt).split(",")])

    all_cases, report, cells = [], {}, []
    max_cols = 0
    for k in classes:
        pop = build_population(generator, classifier, count, scope=k,
                               seed=seed + k)
        scores = score_dimensions(pop, generator, classifier, scope=k)
        try:
            cases, skipped = find_corner_cases(
                pop, generator, classifier, k, scores=scores, top_m=top_m)
        except (exc.StartBelowThreshold, exc.EmptySubset) as e:
            report[str(k)] = {"error": type(e).__name__, "cases": [],
                              "skipped": {}}
            cells.append(None)
            continue
        mean_img = generator.images_from_styles(
            class_mean_style(pop, k, well_only=True)[None], [k])[0]
        mean_prob = float(classifier.predict_proba(mean_img[None])[0, k])
        row = [(mean_img, {"class": k, "kind": "class_mean",
                           "true_class_prob": mean_prob})]
        for case in cases:
            row.append((case.image, {
                "class": k, "kind": "corner_case", "dim": case.dim,
                "direction": case.direction,
                "shift": case.shift_at_threshold,
                "true_class_prob": case.true_class_prob,
                "post_flip_predicted": case.post_flip_predicted,
            }))
        cells.append(row)
        max_cols = max(max_cols, len(row))
        report[str(k)] = {
            "skipped": {str(d): why for d, why in skipped.items()},
            "cases": [{
                "dim": c.dim, "direction": c.direction,
                "shift_at_threshold": c.shift_at_threshold,
                "true_class_prob": c.true_class_prob,
                "post_flip_predicted": c.post_flip_predicted,
            } for c in cases],
        }
        all_cases.extend(cases)

    rows = [row for row in cells if row]
    if rows:
        blank = np.zeros((28, 28))
        grid = ImageGrid(rows=len(rows), cols=max_cols,
                         row_labels=[f"class {r[0][1]['class']}" for r in rows],
                         col_labels=["class mean"] + [
                             f"case {i}" for i in range(1, max_cols)])
        for row in rows:
            for img, ann in row:
                grid.add_cell(img, **ann)
            for _ in range(max_cols - len(row)):
                grid.add_cell(blank, kind="empty", true_class_prob=None)
        write_image_grid(grid, os.path.join(
            out, "corner_cases." + cfg.get("image_format", "pgm")))

    json_path = os.path.join(out, "corner_cases.json")
    write_json(json_path, {"classes": report},
               make_provenance(cfg.effective(
                   ("seed", "classes", "top_m", "count", "generator",
                    "generator_path", "classifier")), seed=seed))
    print(f"wrote {json_path} ({len(all_cases)} corner cases)")
    return 0


def cmd_accuracy_curve(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    generator = _load_generator(cfg)
    paths = [p for p in str(cfg.require("classifiers", "classifiers")).split(",") if p]
    k = int(cfg.get("k", 100))
    count = int(cfg.get("count", 20000))
    bin_width = float(cfg.get("bin_width", 0.25))
    min_count = int(cfg.get("min_bin_count", 200))
    cutoff = float(cfg.get("cutoff", 0.95))
    per_class = cfg.get("scope", "global") == "per-class"

    base_clf = ConvNetClassifier.load(paths[0], paths[0] + ".json"
                                      if os.path.exists(paths[0] + ".json") else None)
    pop = build_population(generator, base_clf, count, scope="global", seed=seed)

    rows = []
    curves_json = []

    def add_curve(clf, name, scope_name, population, scores_scope,
                  scope_filter=None):
        sub = population if scope_filter is None else population.subset(scope_filter)
        well = sub.subset(sub.well_mask)
        if len(well) == 0:
            raise exc.EmptySubset(f"no well-classified samples for {name}/{scope_name}")
        center = well.styles.mean(axis=0)
        scores = score_dimensions(sub, generator, clf, scope=scores_scope)
        dims = top_dims(scores, min(k, generator.d_s))
        curve = accuracy_vs_distance(sub, center, dims, bin_width=bin_width,
                                     min_bin_count=min_count,
                                     cutoff_quantile=cutoff)
        for b in curve.bins:
            rows.append((name, scope_name, b.lo, b.hi, b.count, b.accuracy))
        curves_json.append({"classifier_id": name, "scope": scope_name,
                            "distance_cutoff": curve.distance_cutoff,
                            "bins": [vars(b) for b in curve.bins]})

    for path in paths:
        clf = ConvNetClassifier.load(path, path + ".json"
                                     if os.path.exists(path + ".json") else None)
        name = clf.meta_.get("trained_on") or os.path.basename(path)
        cpop = reclassify(pop, clf)
        add_curve(clf, name, "all", cpop, "global")
        if per_class:
            for ki in range(generator.n_classes):
                add_curve(clf, name, f"class{ki}", cpop, ki,
                          scope_filter=cpop.true_classes == ki)

    csv_path = os.path.join(out, "curve.csv")
    write_csv(csv_path,
              ("classifier_id", "scope", "bin_lo", "bin_hi", "count", "accuracy"),
              rows)
    write_json(os.path.join(out, "curve.json"), {"curves": curves_json},
               make_provenance(cfg.effective(
                   ("seed", "classifiers", "k", "count", "bin_width",
                    "min_bin_count", "cutoff", "scope", "generator",
                    "generator_path")), seed=seed))
    print(f"wrote {csv_path} ({len(rows)} bins)")
    return 0


def cmd_project(cfg):
    out = _out_dir(cfg)
    seed = int(cfg.get("seed", 0))
    generator = _load_generator(cfg)
    classifier = _load_classifier(cfg)
    count = int(cfg.get("count", 1000))
    perplexity = float(cfg.get("perplexity", 20.0))
    iterations = int(cfg.get("iterations", 900))
    spaces = [s.strip().lower() for s in str(cfg.get("spaces", "z,s")).split(",")]

    rng = np.random.default_rng(seed)
    classes = rng.integers(0, generator.n_classes, size=count)
    z = rng.standard_normal((count, getattr(generator, "d_z", generator.d_s)))
    vectors = {"z": z.astype(np.float32)}
    if isinstance(generator, StyleGenerator):
        vectors["w"] = generator.w_from_latents(vectors["z"], classes)
        vectors["s"] = generator.styles_from_latents(vectors["z"], classes)
    else:
        vectors["w"] = vectors["z"]
        vectors["s"] = vectors["z"]
    images = generator.images_from_styles(vectors["s"], classes)
    pred = classifier.predict(images)
    well = pred == classes

    metrics = {}
    for space in spaces:
        if space not in vectors:
            return _fail(f"unknown space {space!r} (use z, w, s)", CONFIG_ERROR)
        points = tsne_project(standardize_columns(vectors[space]),
                              perplexity=perplexity, iterations=iterations,
                              seed=seed)
        path = os.path.join(out, f"points_{space}.csv")
        write_csv(path, ("x", "y", "class", "well_classified"),
                  [(points[i, 0], points[i, 1], int(classes[i]), int(well[i]))
                   for i in range(count)])
        metrics[space] = {"silhouette": silhouette(points, classes)}
        print(f"wrote {path} (silhouette {metrics[space]['silhouette']:.4f})")
    write_json(os.path.join(out, "projection_metrics.json"),
               {"spaces": metrics, "count": count},
               make_provenance(cfg.effective(
                   ("seed", "count", "perplexity", "iterations", "spaces",
                    "generator", "generator_path", "classifier")), seed=seed))
    return 0


def cmd_gradcheck(cfg):
    seed = int(cfg.get("seed", 0))
    n_seeds = int(cfg.get("seeds", 5))
    step = float(cfg.get("step", 1e-5))
    tol = float(cfg.get("tol", 1e-3))
    generator = _load_generator(cfg)
    classifier = _load_classifier(cfg)

    worst = 0.0
    for i in range(n_seeds):
        rng = np.random.default_rng(seed + i)
        label = int(rng.integers(0, generator.n_classes))
        s0 = generator.sample_styles(1, [label], rng)[0].astype(np.float64)

        def f(svec):
            with Tape(precision="double") as tape:
                s = Tensor(svec[None], requires_grad=True, dtype=np.float64)
                img = generator.synthesize_tensor(s, [label])
                probs = classifier_probs(classifier.params_, img)
                total = ops.sum_(ops.select_index(probs, np.array([label])))
                grads = tape.backward(total)
            return total.item(), tape.gradient(grads, s)[0]

        err = finite_diff_check(f, s0, step=step)
        worst = max(worst, err)
        print(f"seed {seed + i}: max rel err {err:.3e}")
    print(f"worst over {n_seeds} seeds: {worst:.3e} (tolerance {tol:g})")
    if worst >= tol:
        return _fail("gradient check failed", NUMERIC_ERROR)
    return 0


# ---------------------------------------------------------------- arg parsing

def build_parser():
    parser = argparse.ArgumentParser(
        prog="styleprobe",
        description="Characterize classifier failure conditions by probing "
                    "the style space of a differentiable generator.")
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--precision", choices=("single", "double"),
                        help="tape precision for training")
    parser.add_argument("--out", help="output directory (default ./out)")
    parser.add_argument("--generator", choices=("learned", "analytic"),
                        help="generator backend (default learned)")
    parser.add_argument("--generator-path", dest="generator_path",
                        help="learned-generator checkpoint")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", help="build the half-clean/half-corrupted corpus")
    p.add_argument("--count", type=int)
    p.add_argument("--source", choices=("procedural", "idx"))
    p.add_argument("--idx-images", dest="idx_images")
    p.add_argument("--idx-labels", dest="idx_labels")
    p.add_argument("--severity-noise", dest="severity_noise",
                   help="three comma-separated sigmas for levels 1,2,3")
    p.add_argument("--severity-blur", dest="severity_blur")

    p = sub.add_parser("train", help="train the classifier or the generator")
    p.add_argument("--target", choices=("classifier", "generator"))
    p.add_argument("--data", help="dataset cache blob")
    p.add_argument("--subset", choices=("all", "clean"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--regime", choices=("reconstruction", "adversarial"))

    p = sub.add_parser("rank", help="rank style dimensions by degradation power")
    p.add_argument("--classifier")
    p.add_argument("--scope", help='"global" or a class index')
    p.add_argument("--count", type=int)
    p.add_argument("--top", type=int)

    p = sub.add_parser("traverse", help="walk influential dimensions, render a grid")
    p.add_argument("--classifier")
    p.add_argument("--class", dest="class_index", type=int)
    p.add_argument("--start", choices=("class-mean", "sample"))
    p.add_argument("--top", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--fractions")
    p.add_argument("--image-format", dest="image_format", choices=("pgm", "png"))

    p = sub.add_parser("corner-cases", help="decision-boundary cases per class")
    p.add_argument("--classifier")
    p.add_argument("--classes", help='"all" or comma-separated class indices')
    p.add_argument("--top-m", dest="top_m", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--image-format", dest="image_format", choices=("pgm", "png"))

    p = sub.add_parser("accuracy-curve", help="accuracy vs style-space distance")
    p.add_argument("--classifiers", help="comma-separated checkpoint blobs")
    p.add_argument("--scope", choices=("global", "per-class"))
    p.add_argument("--k", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--min-bin-count", dest="min_bin_count", type=int)
    p.add_argument("--cutoff", type=float)

    p = sub.add_parser("project", help="t-SNE of latent populations")
    p.add_argument("--classifier")
    p.add_argument("--spaces", help="comma-separated subset of z,w,s")
    p.add_argument("--count", type=int)
    p.add_argument("--perplexity", type=float)
    p.add_argument("--iterations", type=int)

    p = sub.add_parser("gradcheck", help="finite-difference check of the chain")
    p.add_argument("--classifier")
    p.add_argument("--seeds", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--tol", type=float)

    return parser


COMMANDS = {
    "make-dataset": cmd_make_dataset,
    "train": cmd_train,
    "rank": cmd_rank,
    "traverse": cmd_traverse,
    "corner-cases": cmd_corner_cases,
    "accuracy-curve": cmd_accuracy_curve,
    "project": cmd_project,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _Config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        return _fail(str(e), CONFIG_ERROR)
    except DATA_ERRORS as e:
        return _fail(f"{type(e).__name__}: {e}", DATA_ERROR)
    except NUMERIC_ERRORS as e:
        return _fail(f"{type(e).__name__}: {e}", NUMERIC_ERROR)
    except (exc.ShapeMismatch, exc.UnknownAttribute, exc.UnknownOperation,
            FileNotFoundError) as e:
        return _fail(f"{type(e).__name__}: {e}", CONFIG_ERROR)


if __name__ == "__main__":
    sys.exit(main())
