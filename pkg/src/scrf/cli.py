"""Command-line entry point: ``scrf {train,contour,segment,eval,synth}``.

Settings come from built-in defaults, then an optional flat ``key = value``
config file (``--config``), then command-line flags. The effective settings
are written to ``config.txt`` in every output directory.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import config as cfg
from .affinity import DEFAULT_SAMPLES, default_cluster_count, sample_affinity_graph, spectral_segment
from .contour import forest_contour, normalize_contour, segmentation_boundary, tree_contour
from .evaluation import DEFAULT_THRESHOLDS, DEFAULT_TOLERANCE, dataset_summary, pr_curve, threshold_levels, write_report
from .export import read_boundary, read_contour, write_binary_png, write_contour, write_labels
from .forest import leaf_segmentation, train_forest
from .image import ImageFormatError, build_feature_stack, check_stack, load_image, load_stack
from .model_io import ModelFormatError, load_forest, save_forest
from .synth import SynthSpec, generate

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3


def _default_seed() -> int:
    return int(os.environ.get("SCRF_SEED", "0"))


@dataclass
class RunConfig:
    trees: int = cfg.DEFAULT_TREES
    depth: int = cfg.DEFAULT_DEPTH
    candidates: int = cfg.DEFAULT_CANDIDATES
    min_leaf: int = cfg.DEFAULT_MIN_LEAF
    scale_min_leaf: bool = False
    patch_radius: int = cfg.DEFAULT_PATCH_RADIUS
    coherency_radius: int = cfg.DEFAULT_COHERENCY_RADIUS
    lambda_: str = "N(8,4)"
    coherency_norm: str = "sum"
    seed: int = dataclasses.field(default_factory=_default_seed)
    jobs: int = 0
    method: str = "scrf"
    features: str = "lab6"
    image: str = ""
    model: str = ""
    out: str = "."
    per_tree: bool = False
    clusters: int = 0
    samples: int = DEFAULT_SAMPLES
    contour: tuple = ()
    truth: tuple = ()
    tolerance: float = DEFAULT_TOLERANCE
    thresholds: int = DEFAULT_THRESHOLDS
    report: str = ""
    size: int = 64
    shape: str = "circle"
    radius_fraction: float = 0.3

    def lambda_modes(self):
        if self.method == "rf":
            return [cfg.LambdaMode.zero()]
        return [cfg.LambdaMode.parse(s) for s in _split_list(self.lambda_)]

    def train_params(self, lambda_mode, shape) -> cfg.TrainParams:
        min_leaf = self.min_leaf
        if self.scale_min_leaf:
            min_leaf = cfg.scaled_min_leaf(shape[0], shape[1], self.min_leaf)
        return cfg.TrainParams(
            tree_count=self.trees, max_depth=self.depth, candidates_per_node=self.candidates,
            min_leaf_pixels=min_leaf, split_patch_radius=self.patch_radius,
            coherency_radius=self.coherency_radius, lambda_mode=lambda_mode,
            master_seed=self.seed, coherency_norm=self.coherency_norm,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            lines.append(f"{f.name.rstrip('_')} = {v}")
        return "\n".join(lines) + "\n"


def _split_list(text: str):
    # split on commas outside parentheses so "N(8,4)" stays whole
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return [s.strip() for s in out if s.strip()]


_FIELDS = {f.name.rstrip("_"): f for f in fields(RunConfig)}


def _coerce(name: str, value: str):
    f = _FIELDS[name]
    default = getattr(RunConfig(), f.name)
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        return tuple(_split_list(value))
    return value


def read_config_file(path) -> dict:
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ValueError(f"{path}:{n}: unknown key {key!r}")
        out[_FIELDS[key].name] = _coerce(key, value)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_train_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--trees", type=int, default=S, help="trees per forest (12)")
    p.add_argument("--depth", type=int, default=S, help="maximum tree depth (5)")
    p.add_argument("--candidates", type=int, default=S, help="random split candidates per node (1000)")
    p.add_argument("--min-leaf", dest="min_leaf", type=int, default=S, help="minimum pixels per leaf (1000)")
    p.add_argument("--scale-min-leaf", dest="scale_min_leaf", action="store_true", default=S,
                   help="scale --min-leaf by image area relative to a 481x321 BSD image")
    p.add_argument("--patch-radius", dest="patch_radius", type=int, default=S, help="split patch radius (2 = 5x5)")
    p.add_argument("--coherency-radius", dest="coherency_radius", type=int, default=S,
                   help="coherency window radius (4 = 9x9)")
    p.add_argument("--lambda", dest="lambda_", default=S,
                   help="coherency weight: 0, a number, N(mean,std); comma list for a sweep")
    p.add_argument("--coherency-norm", dest="coherency_norm", choices=cfg.COHERENCY_NORMS, default=S)
    p.add_argument("--seed", type=int, default=S, help="master seed (env SCRF_SEED)")
    p.add_argument("--jobs", type=int, default=S, help="worker threads (default: all cores)")
    p.add_argument("--method", choices=("scrf", "rf", "spectral"), default=S)
    p.add_argument("--features", choices=("lab6", "raw"), default=S,
                   help="lab6: Lab + bilateral stack; raw: image channels as loaded")
    p.add_argument("--image", default=S, help="input image or .stack cache file")
    p.add_argument("--out", default=S, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="scrf", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value config file")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a forest and write a model file")
    _add_train_flags(p)
    p.add_argument("--model", default=S, help="output model path (default OUT/model.scrf)")

    p = sub.add_parser("contour", help="write forest contour maps")
    _add_train_flags(p)
    p.add_argument("--model", default=S, help="use a trained model instead of training")
    p.add_argument("--per-tree", dest="per_tree", action="store_true", default=S)
    p.add_argument("--clusters", type=int, default=S, help="spectral: cluster count K")
    p.add_argument("--samples", type=int, default=S, help="spectral: partners sampled per pixel")

    p = sub.add_parser("segment", help="write leaf or spectral segmentations")
    _add_train_flags(p)
    p.add_argument("--model", default=S)
    p.add_argument("--clusters", type=int, default=S)
    p.add_argument("--samples", type=int, default=S)

    p = sub.add_parser("eval", help="boundary P/R/F report for contour maps")
    p.add_argument("--contour", action="append", default=S, help="contour image (repeatable)")
    p.add_argument("--truth", action="append", default=S,
                   help="truth boundary PNG or .seg; for several images use STEM:PATH")
    p.add_argument("--tolerance", type=float, default=S, help="fraction of the image diagonal")
    p.add_argument("--thresholds", type=int, default=S)
    p.add_argument("--report", default=S, help="CSV path (default OUT/report.csv)")
    p.add_argument("--out", default=S)

    p = sub.add_parser("synth", help="write a synthetic two-region image and its boundary")
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--shape", choices=("circle", "halfplane"), default=S)
    p.add_argument("--radius-fraction", dest="radius_fraction", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for key, v in vars(args).items():
        if key in ("config", "command"):
            continue
        if isinstance(v, list):
            v = tuple(v)
        values[key] = v
    return RunConfig(**values)


def _echo_config(out_dir: Path, rc: RunConfig, command: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(f"command = {command}\n" + rc.to_text())


def _load_input(rc: RunConfig) -> np.ndarray:
    if not rc.image:
        raise ValueError("--image is required")
    path = Path(rc.image)
    if path.suffix == ".stack":
        return load_stack(path)
    img = load_image(path)
    if rc.features == "raw":
        # identical channels carry no extra information
        if np.array_equal(img[:, :, 0], img[:, :, 1]) and np.array_equal(img[:, :, 0], img[:, :, 2]):
            img = img[:, :, :1]
        return check_stack(img)
    return build_feature_stack(img)


def _lambda_tag(mode: cfg.LambdaMode) -> str:
    return str(mode).replace("(", "").replace(")", "").replace(",", "_")


def _train(rc: RunConfig, stack: np.ndarray, mode: cfg.LambdaMode, verbose=True):
    params = rc.train_params(mode, stack.shape)

    def report(t, tree, secs):
        if verbose:
            print(f"tree {t:2d}: {tree.n_nodes:3d} nodes, {len(tree.leaves):3d} leaves, {secs:.2f} s")

    return train_forest(stack, params, jobs=rc.jobs or None, progress=report)


def cmd_train(rc: RunConfig) -> int:
    stack = _load_input(rc)
    modes = rc.lambda_modes()
    if len(modes) != 1:
        raise ValueError("train takes a single --lambda value")
    out = Path(rc.out)
    _echo_config(out, rc, "train")
    start = time.perf_counter()
    forest = _train(rc, stack, modes[0])
    model = Path(rc.model) if rc.model else out / "model.scrf"
    save_forest(model, forest)
    print(f"wrote {model} ({len(forest.trees)} trees, lambda {modes[0]}, "
          f"{time.perf_counter() - start:.1f} s)")
    return 0


def _check_dims(forest, stack):
    if tuple(forest.shape) != tuple(stack.shape):
        raise ValueError(f"model was trained on {forest.shape}, image stack is {stack.shape}")


def _spectral_labels(rc: RunConfig, forest, stack):
    k = rc.clusters or default_cluster_count(forest)
    graph = sample_affinity_graph(forest, stack, rc.samples, np.random.default_rng(rc.seed))
    return spectral_segment(graph, k)


def cmd_contour(rc: RunConfig) -> int:
    stack = _load_input(rc)
    out = Path(rc.out)
    _echo_config(out, rc, "contour")
    if rc.model:
        forests = [("model", load_forest(rc.model))]
    else:
        modes = rc.lambda_modes()
        forests = [(f"lambda{_lambda_tag(m)}" if len(modes) > 1 else "forest", _train(rc, stack, m))
                   for m in modes]
    for tag, forest in forests:
        _check_dims(forest, stack)
        if rc.method == "spectral":
            contour = segmentation_boundary(_spectral_labels(rc, forest, stack)).astype(np.float64)
            name = f"contour_spectral_{tag}.png" if len(forests) > 1 else "contour_spectral.png"
        else:
            contour = normalize_contour(forest_contour(forest, stack))
            name = f"contour_{tag}.png" if len(forests) > 1 else "contour.png"
        write_contour(out / name, contour)
        print(f"wrote {out / name}")
        if rc.per_tree:
            for t, tree in enumerate(forest.trees):
                p = out / (f"{Path(name).stem}_tree{t:02d}.png")
                write_contour(p, normalize_contour(tree_contour(tree, stack)))
    return 0


def cmd_segment(rc: RunConfig) -> int:
    stack = _load_input(rc)
    out = Path(rc.out)
    _echo_config(out, rc, "segment")
    if rc.model:
        forest = load_forest(rc.model)
    else:
        modes = rc.lambda_modes()
        if len(modes) != 1:
            raise ValueError("segment takes a single --lambda value")
        forest = _train(rc, stack, modes[0])
    _check_dims(forest, stack)
    if rc.method == "spectral":
        labels = _spectral_labels(rc, forest, stack)
        write_labels(out / "segments_spectral.png", labels,
                     {int(i): f"cluster{int(i)}" for i in np.unique(labels)})
        write_binary_png(out / "boundary_spectral.png", segmentation_boundary(labels))
        print(f"wrote {out / 'segments_spectral.png'} ({int(labels.max()) + 1} clusters)")
        return 0
    for t, tree in enumerate(forest.trees):
        labels = leaf_segmentation(tree, stack)
        names = {int(i): tree.leaf_path(int(i)) or "root" for i in np.unique(labels)}
        write_labels(out / f"segments_tree{t:02d}.png", labels, names)
    print(f"wrote {len(forest.trees)} leaf segmentations to {out}")
    return 0


def _truth_groups(truth_args, contour_paths):
    """Map each contour to its truth files; ``STEM:PATH`` entries select by file stem."""
    keyed, plain = {}, []
    for t in truth_args:
        stem, sep, path = t.partition(":")
        if sep and not Path(t).exists():
            keyed.setdefault(stem, []).append(path)
        else:
            plain.append(t)
    groups = []
    for c in contour_paths:
        paths = keyed.get(Path(c).stem, []) or plain
        if not paths:
            raise FileNotFoundError(f"no ground truth given for {c}")
        groups.append(paths)
    return groups


def cmd_eval(rc: RunConfig) -> int:
    if not rc.contour:
        raise ValueError("--contour is required")
    if not rc.truth:
        raise FileNotFoundError("--truth is required")
    curves = []
    for c, truths in zip(rc.contour, _truth_groups(rc.truth, rc.contour)):
        contour = read_contour(c)
        maps = [read_boundary(t) for t in truths]
        curves.append(pr_curve(contour, maps, rc.thresholds, rc.tolerance))
    summary = dataset_summary(curves)
    out = Path(rc.out)
    _echo_config(out, rc, "eval")
    report = Path(rc.report) if rc.report else out / "report.csv"
    write_report(report, summary, threshold_levels(rc.thresholds))
    print(f"ODS {summary.ods:.4f}  OIS {summary.ois:.4f}  AP {summary.ap:.4f}  -> {report}")
    return 0


def cmd_synth(rc: RunConfig) -> int:
    spec = SynthSpec(size=rc.size, shape=rc.shape, radius_fraction=rc.radius_fraction, seed=rc.seed)
    stack, boundary = generate(spec)
    out = Path(rc.out)
    _echo_config(out, rc, "synth")
    img = np.round(np.clip(stack[:, :, 0], 0.0, 1.0) * 65535)
    write_contour(out / "synth.png", img / 65535.0)
    write_binary_png(out / "synth_boundary.png", boundary)
    (out / "synth_spec.txt").write_text(spec.to_text())
    print(f"wrote {out / 'synth.png'} and {out / 'synth_boundary.png'}")
    return 0


COMMANDS = {"train": cmd_train, "contour": cmd_contour, "segment": cmd_segment,
            "eval": cmd_eval, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"scrf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](rc)
    except (FileNotFoundError, ImageFormatError, ModelFormatError, ValueError, OSError) as exc:
        print(f"scrf: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"scrf: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
