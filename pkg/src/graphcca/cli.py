"""Command-line front end.

Every setting is a flat ``key=value`` entry (``grid.gamma.min=1e-3``) that can
come from a ``--config`` file or from the same-named flag
(``--grid.gamma.min 1e-3``); flags win over the file, the file over defaults.

Subcommands: ``fit``, ``transform``, ``evaluate``, ``grid``, ``graph build``,
``graph export`` and ``fixture``. Usage and configuration problems exit with
status 2, solver failures with status 1.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cca, datasets, dual, io, kernel, pipeline
from .errors import ConfigError, GraphCCAError
from .graph import empty_graph, laplacian_matrix, spectral_filter

logger = logging.getLogger("graphcca")

PROG = "graphcca"


@dataclass(frozen=True)
class Option:
    type: object
    default: object
    help: str


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(",") if v.strip())


OPTIONS = {
    "data.path": Option(str, None, "CSV data file, or IDX image file when data.format=idx"),
    "data.format": Option(str, "csv", "csv or idx"),
    "data.labels": Option(str, None, "label file: IDX labels, or one label per line"),
    "data.labels_inline": Option(_bool, False, "CSV: last column holds labels"),
    "data.layout": Option(str, "rows", "CSV: 'rows' (one sample per row) or 'columns'"),
    "data.y_path": Option(str, None, "optional separate CSV for view Y (no split)"),
    "data.dx": Option(int, None, "split point: first dx features form view X"),
    "data.resize": Option(int, 0, "IDX: resize square images to this side length (0 keeps size)"),
    "variant": Option(str, "gcca", "one of " + ", ".join(pipeline.VARIANTS)),
    "d": Option(int, 20, "number of canonical pairs"),
    "gamma": Option(float, 0.0, "graph weight for fit"),
    "epsilon": Option(float, None, "ridge for fit (dual default: 1e-3 Tr(X^T X)/N)"),
    "jitter": Option(float, 0.0, "ridge added to covariance or Gram matrices"),
    "threads": Option(int, 1, "worker threads for grid cells"),
    "seed": Option(int, 0, "base random seed"),
    "k": Option(int, 10, "neighbors for kNN classification"),
    "mc_runs": Option(int, 1, "Monte-Carlo runs for evaluate"),
    "ablation": Option(_bool, True, "evaluate: also run the gamma=0 ablation"),
    "score_all_cells": Option(_bool, False, "report test accuracy of every cell"),
    "output": Option(str, None, "output file (fit, transform, graph) or directory (grid, evaluate)"),
    "model": Option(str, None, "model file for transform"),
    "view": Option(str, "x", "transform: which view to project, x or y"),
    "dump_kernels": Option(str, None, "directory to write the centered Gram matrices into"),
    "grid.gamma.min": Option(float, 1e-3, "smallest gamma"),
    "grid.gamma.max": Option(float, 1e3, "largest gamma"),
    "grid.gamma.num": Option(int, 30, "log-spaced gamma count"),
    "grid.gamma.values": Option(_floats, None, "explicit comma-separated gammas"),
    "grid.epsilon.min": Option(float, 1e-3, "smallest epsilon"),
    "grid.epsilon.max": Option(float, 1e3, "largest epsilon"),
    "grid.epsilon.num": Option(int, 30, "log-spaced epsilon count"),
    "grid.epsilon.values": Option(_floats, None, "explicit comma-separated epsilons"),
    "split.n_train": Option(_ints, (10,), "training samples per class (comma list for curves)"),
    "split.tune_fraction": Option(float, 0.5, "share of the remainder used for tuning"),
    "split.holdout": Option(int, None, "cap on non-training samples per class"),
    "split.n_classes": Option(int, None, "draw this many classes per run"),
    "graph.spec": Option(str, "default", "default, cosine, kernel, none, or import"),
    "graph.path": Option(str, None, "adjacency triples (i,j,w) to import"),
    "graph.k": Option(int, None, "graph neighbors per sample (default N_tr - 1)"),
    "graph.filter": Option(str, "identity", "identity, power:p or exponential:t"),
    "graph.what": Option(str, "laplacian", "graph export: laplacian, weights or degrees"),
    "kernel.x": Option(str, "gaussian", "linear, gaussian, or gaussian:<bandwidth>"),
    "kernel.y": Option(str, "gaussian", "linear, gaussian, or gaussian:<bandwidth>"),
    "fixture.n_classes": Option(int, 4, "synthetic fixture classes"),
    "fixture.n_per_class": Option(int, 30, "synthetic fixture samples per class"),
    "fixture.dx": Option(int, 10, "synthetic fixture X dimension"),
    "fixture.dy": Option(int, 8, "synthetic fixture Y dimension"),
}

_PATH_KEYS = ("data.path", "data.labels", "data.y_path", "graph.path", "model")


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_settings(args):
    """Merge defaults, the config file and explicit flags, then coerce types."""
    raw = {key: opt.default for key, opt in OPTIONS.items()}
    base = None
    if args.config:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file {args.config!r} does not exist")
        raw.update(read_config(args.config))
        base = Path(args.config).resolve().parent
    for key in OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    settings = {}
    for key, value in raw.items():
        if value is None or value == "":
            settings[key] = None
            continue
        try:
            settings[key] = OPTIONS[key].type(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    # relative paths in a config file are taken relative to that file
    if base is not None:
        for key in _PATH_KEYS + ("output", "dump_kernels"):
            if settings[key] and key not in _explicit(args) and not Path(settings[key]).is_absolute():
                settings[key] = str(base / settings[key])
    return settings


def _explicit(args):
    return {key for key in OPTIONS if getattr(args, key, None) is not None}


def _require(settings, *keys):
    missing = [k for k in keys if settings.get(k) is None]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))


def _check_files(settings, *keys):
    for key in keys:
        path = settings.get(key)
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"{key}: file {path!r} does not exist")


def _kernel_spec(token):
    if token == "linear":
        return kernel.KernelSpec("linear")
    if token == "gaussian":
        return kernel.KernelSpec("gaussian")
    kind, _, bw = token.partition(":")
    if kind != "gaussian" or not bw:
        raise ConfigError(f"bad kernel spec {token!r}")
    return kernel.KernelSpec("gaussian", float(bw))


def _filter_spec(token):
    kind, _, param = token.partition(":")
    if kind == "identity":
        return kind, {}
    if kind == "power":
        return kind, {"p": float(param)}
    if kind == "exponential":
        return kind, {"t": float(param)}
    raise ConfigError(f"bad graph filter {token!r}")


def _read_labels(path):
    with open(path, encoding="utf-8") as fh:
        return np.array([io._parse_label(line) for line in fh if line.strip()])


# --- data -------------------------------------------------------------------


def load_views(settings, need_labels=False):
    """Return ``(x, y, labels)`` with samples in columns; ``y`` may be ``None``
    when no split point is given and no separate Y file exists."""
    _require(settings, "data.path")
    _check_files(settings, "data.path", "data.labels", "data.y_path")
    fmt = settings["data.format"]
    labels = None
    if fmt == "idx":
        _require(settings, "data.labels")
        if settings["data.resize"]:
            data, labels = datasets.mnist_desk(settings["data.path"], settings["data.labels"], settings["data.resize"])
        else:
            data, labels = io.load_idx(settings["data.path"], settings["data.labels"])
    elif fmt == "csv":
        rows = settings["data.layout"] == "rows"
        if settings["data.layout"] not in ("rows", "columns"):
            raise ConfigError(f"data.layout must be rows or columns, got {settings['data.layout']!r}")
        data, labels = io.load_csv(settings["data.path"], rows, settings["data.labels_inline"])
        if settings["data.labels"]:
            labels = _read_labels(settings["data.labels"])
    else:
        raise ConfigError(f"data.format must be csv or idx, got {fmt!r}")
    if labels is not None and len(labels) != data.shape[1]:
        raise ConfigError(f"{len(labels)} labels for {data.shape[1]} samples")
    if need_labels and labels is None:
        raise ConfigError("this command needs class labels (data.labels or data.labels_inline)")

    if settings["data.y_path"]:
        y, _ = io.load_csv(settings["data.y_path"], settings["data.layout"] == "rows")
        if y.shape[1] != data.shape[1]:
            raise ConfigError(f"view Y has {y.shape[1]} samples, view X has {data.shape[1]}")
        return data, y, labels
    if settings["data.dx"] is None:
        return data, None, labels
    x, y = pipeline.split_views(data, settings["data.dx"])
    return x, y, labels


def _need_y(x, y):
    if y is None:
        raise ConfigError("two views are needed: set data.dx or data.y_path")
    return x, y


def build_graph(settings, x, y, labels, variant):
    spec = settings["graph.spec"]
    n = x.shape[1]
    if spec == "import":
        _require(settings, "graph.path")
        _check_files(settings, "graph.path")
        graph = io.read_adjacency_csv(settings["graph.path"], n)
    elif spec == "none":
        graph = empty_graph(n)
    elif spec in ("default", "cosine", "kernel"):
        if labels is None:
            raise ConfigError(f"graph.spec={spec} needs class labels")
        kind = {"default": variant, "cosine": "gcca", "kernel": "gkcca"}[spec]
        graph = pipeline.default_graph_builder(kind, settings["graph.k"])(x, y, labels)
    else:
        raise ConfigError(f"graph.spec must be default, cosine, kernel, none or import, got {spec!r}")
    kind, params = _filter_spec(settings["graph.filter"])
    if kind == "identity":
        return graph
    return spectral_filter(graph, kind, **params)


def make_grid(settings):
    def axis(name):
        values = settings[f"grid.{name}.values"]
        if values:
            return values
        return pipeline.log_grid(settings[f"grid.{name}.min"], settings[f"grid.{name}.max"], settings[f"grid.{name}.num"])

    return pipeline.HyperGrid(axis("gamma"), axis("epsilon"))


def _variant(settings):
    variant = settings["variant"]
    if variant not in pipeline.VARIANTS:
        raise ConfigError(f"variant must be one of {pipeline.VARIANTS}, got {variant!r}")
    return variant


def _output(settings):
    _require(settings, "output")
    return Path(settings["output"])


# --- commands -----------------------------------------------------------------


def cmd_fit(settings):
    variant = _variant(settings)
    out = _output(settings)
    x, y, labels = load_views(settings)
    x, y = _need_y(x, y)
    views = cca.center(x, y)
    graph = empty_graph(x.shape[1])
    if variant in ("gcca", "gdcca", "gkcca"):
        graph = build_graph(settings, x, y, labels, variant)
    gamma = settings["gamma"] if variant.startswith("g") else 0.0
    d, jitter = settings["d"], settings["jitter"]
    refs = {}
    if variant == "cca":
        model = cca.fit_cca(views, d, jitter)
    elif variant == "gcca":
        model = cca.fit_gcca(views, graph, gamma, d, jitter)
    elif variant in ("dcca", "gdcca"):
        eps = settings["epsilon"] if settings["epsilon"] is not None else dual.default_epsilon(views)
        model = dual.fit_gdcca(views, graph, gamma, eps, d, jitter)
        kx, ky = dual.linear_grams(views)
    else:
        eps = settings["epsilon"] if settings["epsilon"] is not None else 1.0
        kx_spec = _kernel_spec(settings["kernel.x"]).resolve(x)
        ky_spec = _kernel_spec(settings["kernel.y"]).resolve(y)
        kx = kernel.center_kernel(kernel.gram(x, kx_spec))
        ky = kernel.center_kernel(kernel.gram(y, ky_spec))
        model = kernel.fit_gkcca_views(x, y, graph, gamma, eps, d, kx_spec, ky_spec, jitter)
    if settings["dump_kernels"] and variant in ("dcca", "gdcca", "kcca", "gkcca"):
        dump = Path(settings["dump_kernels"])
        dump.mkdir(parents=True, exist_ok=True)
        io.save_dense_csv(dump / "kx.csv", kx)
        io.save_dense_csv(dump / "ky.csv", ky)
    if settings["graph.spec"] == "import":
        refs["graph"] = Path(settings["graph.path"]).name
    io.save_model(out, model, refs)
    print(f"{variant}: d={model.d} singular values " + " ".join(io.fmt(s)[:10] for s in model.singulars[:5]))
    return 0


def cmd_transform(settings):
    _require(settings, "model", "output")
    _check_files(settings, "model")
    model, header = io.load_model(settings["model"])
    view = settings["view"]
    if view not in ("x", "y"):
        raise ConfigError(f"view must be x or y, got {view!r}")
    x, y, _ = load_views(settings)
    dx, dy = int(header["dx"]), int(header["dy"])
    want = dx if view == "x" else dy
    data = x if view == "x" else y
    if x.shape[0] == want and y is None:
        data = x
    if data is None or data.shape[0] != want:
        raise ConfigError(f"model expects {want} features for view {view}; set data.dx to split the input")
    if model.variant in ("cca", "gcca"):
        proj = cca.project_x if view == "x" else cca.project_y
    elif model.variant == "gdcca":
        proj = dual.project_x if view == "x" else dual.project_y
    else:
        proj = kernel.project_kernel_x if view == "x" else kernel.project_kernel_y
    io.save_csv(settings["output"], proj(model, data))
    return 0


def _search_kwargs(settings, variant):
    return dict(
        grid=make_grid(settings),
        d=settings["d"],
        k=settings["k"],
        jitter=settings["jitter"],
        kernel_x=_kernel_spec(settings["kernel.x"]),
        kernel_y=_kernel_spec(settings["kernel.y"]),
        threads=settings["threads"],
        score_all_cells=settings["score_all_cells"],
        graph_builder=_graph_builder(settings, variant),
    )


def _graph_builder(settings, variant):
    spec = settings["graph.spec"]
    if spec == "default":
        return pipeline.default_graph_builder(variant, settings["graph.k"])
    if spec in ("cosine", "kernel"):
        return pipeline.default_graph_builder("gcca" if spec == "cosine" else "gkcca", settings["graph.k"])
    if spec == "none":
        return lambda x, y, labels: empty_graph(x.shape[1])
    raise ConfigError(f"graph.spec={spec} is not supported for grid runs (graphs depend on the partition)")


def _write_reports(out_dir, results, variants):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.jsonl").write_text("\n".join(pipeline.report_lines(results)) + "\n", encoding="utf-8")
    for v in variants:
        lines = pipeline.curve_lines(results, v)
        (out_dir / f"curve_{v}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _plan(settings, n_train):
    return pipeline.SplitPlan(
        n_train,
        settings["split.tune_fraction"],
        1.0 - settings["split.tune_fraction"],
        settings["seed"],
        settings["split.holdout"],
    )


def cmd_grid(settings):
    variant = _variant(settings)
    out = _output(settings)
    x, y, labels = load_views(settings, need_labels=True)
    x, y = _need_y(x, y)
    n_train = settings["split.n_train"][0]
    results = pipeline.monte_carlo(
        [variant], x, y, labels, _plan(settings, n_train), 1,
        n_classes=settings["split.n_classes"], **_search_kwargs(settings, variant),
    )
    _write_reports(out, results, [variant])
    rep = results[0].report
    print(f"{variant}: test accuracy {rep.accuracy:.4f} at gamma={rep.chosen_gamma} epsilon={rep.chosen_epsilon}")
    return 0


def cmd_evaluate(settings):
    variant = _variant(settings)
    out = _output(settings)
    x, y, labels = load_views(settings, need_labels=True)
    x, y = _need_y(x, y)
    variants = [variant]
    if settings["ablation"] and variant in pipeline.ABLATION:
        variants.append(pipeline.ABLATION[variant])
    results = []
    for n_train in settings["split.n_train"]:
        for v in variants:
            results.extend(pipeline.monte_carlo(
                [v], x, y, labels, _plan(settings, n_train), settings["mc_runs"],
                n_classes=settings["split.n_classes"], **_search_kwargs(settings, v),
            ))
    _write_reports(out, results, variants)
    for s in pipeline.summarize(results):
        print(f"{s['variant']} N_tr={s['n_train']}: mean {s['mean']:.4f} std {s['std']:.4f} over {s['runs']} runs")
    return 0


def cmd_graph_build(settings):
    out = _output(settings)
    x, y, labels = load_views(settings, need_labels=True)
    if y is None:
        y = np.zeros((0, x.shape[1]))
    graph = build_graph(settings, x, y, labels, _variant(settings))
    if hasattr(graph, "weights"):
        io.write_adjacency_csv(out, graph)
    else:
        io.save_dense_csv(out, graph)
    return 0


def cmd_graph_export(settings):
    _require(settings, "graph.path", "output")
    _check_files(settings, "graph.path")
    graph = io.read_adjacency_csv(settings["graph.path"])
    what = settings["graph.what"]
    kind, params = _filter_spec(settings["graph.filter"])
    if what == "laplacian":
        M = laplacian_matrix(graph) if kind == "identity" else spectral_filter(graph, kind, **params)
    elif what == "weights":
        M = graph.weights
    elif what == "degrees":
        M = graph.degrees[:, None]
    else:
        raise ConfigError(f"graph.what must be laplacian, weights or degrees, got {what!r}")
    io.save_dense_csv(settings["output"], M)
    return 0


def cmd_fixture_synthetic(settings):
    out = _output(settings)
    x, y, labels = datasets.synthetic_views(
        settings["fixture.n_classes"], settings["fixture.n_per_class"],
        settings["fixture.dx"], settings["fixture.dy"], seed=settings["seed"],
    )
    io.save_csv(out, np.vstack([x, y]), labels)
    return 0


def cmd_fixture_mnist(settings):
    """Resize IDX digits to ``data.resize`` pixels and write them back as IDX."""
    _require(settings, "data.path", "data.labels", "output")
    _check_files(settings, "data.path", "data.labels")
    size = settings["data.resize"] or 20
    flat, labels = datasets.mnist_desk(settings["data.path"], settings["data.labels"], size)
    images = np.clip(np.rint(flat.T * 255.0), 0, 255).reshape(-1, size, size)
    out = Path(settings["output"])
    out.mkdir(parents=True, exist_ok=True)
    io.write_idx(out / "images.idx", out / "labels.idx", images, labels)
    return 0


# --- argument parsing ---------------------------------------------------------


def _add_options(parser):
    parser.add_argument("--config", help="flat key=value settings file")
    group = parser.add_argument_group("settings (also accepted as config keys)")
    for key, opt in OPTIONS.items():
        flag = "--" + key
        extra = {"dest": key, "default": None, "metavar": "VALUE"}
        group.add_argument(flag, help=f"{opt.help} [default: {opt.default}]", **extra)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")


def build_parser():
    parser = argparse.ArgumentParser(prog=PROG, description="Graph-regularized canonical correlation analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(sub_, name, func, help_):
        p = sub_.add_parser(name, help=help_, description=help_)
        _add_options(p)
        p.set_defaults(func=func)
        return p

    add(sub, "fit", cmd_fit, "fit one model and write it to a model file")
    add(sub, "transform", cmd_transform, "project one view with a fitted model")
    add(sub, "grid", cmd_grid, "one partition, full grid search, JSON-lines report")
    add(sub, "evaluate", cmd_evaluate, "Monte-Carlo evaluation with the gamma=0 ablation")

    graph = sub.add_parser("graph", help="build or export source graphs")
    gsub = graph.add_subparsers(dest="graph_command", required=True)
    add(gsub, "build", cmd_graph_build, "build a same-class neighbor graph, write i,j,w triples")
    add(gsub, "export", cmd_graph_export, "export an imported graph as a dense matrix")

    fixture = sub.add_parser("fixture", help="generate desk-scale datasets")
    fsub = fixture.add_subparsers(dest="fixture_command", required=True)
    add(fsub, "synthetic", cmd_fixture_synthetic, "write a labeled two-view CSV")
    add(fsub, "mnist", cmd_fixture_mnist, "resize IDX digits and write them as IDX")
    return parser


def _normalize_flags(argv):
    """Allow ``--dump-kernels`` style spellings of underscore keys."""
    names = {"--" + key.replace("_", "-"): "--" + key for key in OPTIONS if "_" in key}
    out = []
    for arg in argv:
        head, eq, tail = arg.partition("=")
        if head in names:
            arg = names[head] + eq + tail
        out.append(arg)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(_normalize_flags(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return args.func(settings)
    except ConfigError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except GraphCCAError as exc:
        print(f"{PROG} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG} {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
