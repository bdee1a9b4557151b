"""Classification protocol: view splits, partitions, kNN scoring and grid search.

Selection only ever looks at the tuning partition. Test columns are first
touched after the best cell is chosen, and classification at test time uses
the X view alone (the neighbor database is the X-view embedding of the
training set).
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cca, dual, kernel
from .errors import BadSplitPoint, ClassTooSmall, GraphCCAError, GridCellError, KTooLarge
from .graph import cosine_class_graph, empty_graph, kernel_class_graph
from .matkit import as_matrix

logger = logging.getLogger(__name__)

#: variants searched over gamma and epsilon, gamma only, epsilon only, or nothing
VARIANTS = ("cca", "gcca", "dcca", "gdcca", "kcca", "gkcca")
ABLATION = {"gcca": "cca", "gdcca": "dcca", "gkcca": "kcca"}


def log_grid(lo=1e-3, hi=1e3, num=30):
    return tuple(float(v) for v in np.logspace(np.log10(lo), np.log10(hi), num))


@dataclass(frozen=True)
class SplitPlan:
    """Per-class train/tune/test split.

    ``n_holdout_per_class`` optionally caps how many of the non-training
    samples of each class are used at all (drawn at random) before they are
    divided between tuning and testing.
    """

    n_train_per_class: int
    tune_fraction: float = 0.5
    test_fraction: float = 0.5
    seed: int = 0
    n_holdout_per_class: int = None

    def __post_init__(self):
        if abs(self.tune_fraction + self.test_fraction - 1.0) > 1e-12:
            raise ValueError("tune_fraction and test_fraction must sum to 1")
        if not 0 < self.tune_fraction < 1:
            raise ValueError("tune_fraction must lie strictly between 0 and 1")
        if self.n_train_per_class < 1:
            raise ValueError("n_train_per_class must be positive")


@dataclass(frozen=True)
class HyperGrid:
    gamma_values: tuple = field(default_factory=log_grid)
    epsilon_values: tuple = field(default_factory=log_grid)

    def __post_init__(self):
        for name in ("gamma_values", "epsilon_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals or any(v <= 0 for v in vals):
                raise ValueError(f"{name} must be nonempty and positive")
            object.__setattr__(self, name, tuple(sorted(vals)))

    def cells(self, variant):
        if variant == "cca":
            return [(0.0, None)]
        if variant == "gcca":
            return [(g, None) for g in self.gamma_values]
        if variant in ("dcca", "kcca"):
            return [(0.0, e) for e in self.epsilon_values]
        if variant in ("gdcca", "gkcca"):
            return [(g, e) for g in self.gamma_values for e in self.epsilon_values]
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True)
class CellRecord:
    index: int
    gamma: float
    epsilon: float
    tune_acc: float
    test_acc: float = None


@dataclass
class EvalReport:
    variant: str
    accuracy: float
    per_class_accuracy: dict
    chosen_gamma: float
    chosen_epsilon: float
    d: int
    n_test: int
    runtime: float
    cells: list = field(default_factory=list)


def split_views(vectors, dx):
    """First ``dx`` rows become view X, the remaining rows view Y."""
    vectors = as_matrix(vectors, "vectors")
    if not 0 < dx < vectors.shape[0]:
        raise BadSplitPoint(f"split point {dx} must lie strictly inside (0, {vectors.shape[0]})")
    return vectors[:dx].copy(), vectors[dx:].copy()


def partition(labels, plan):
    """Per-class random train/tune/test indices; deterministic in ``(labels, plan)``."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(plan.seed)
    train, tune, test = [], [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        need = plan.n_train_per_class + 2
        if members.size < need:
            raise ClassTooSmall(cls, members.size, need)
        perm = rng.permutation(members)
        rest = perm[plan.n_train_per_class :]
        if plan.n_holdout_per_class is not None:
            rest = rest[: max(2, plan.n_holdout_per_class)]
        n_tune = int(np.floor(rest.size * plan.tune_fraction + 0.5))
        n_tune = min(max(n_tune, 1), rest.size - 1)
        train.append(perm[: plan.n_train_per_class])
        tune.append(rest[:n_tune])
        test.append(rest[n_tune:])
    return tuple(np.concatenate(p) for p in (train, tune, test))


def _sq_distances(train_emb, test_emb):
    diff = test_emb.T[:, None, :] - train_emb.T[None, :, :]
    return np.sum(diff * diff, axis=-1)


def knn_classify(train_emb, train_labels, test_emb, k):
    """Majority vote over the ``k`` Euclidean-nearest training columns.

    Distance ties go to the lower training index; vote ties go to the tied
    class whose member appears first in the neighbor ranking.
    """
    train_emb = np.asarray(train_emb, dtype=float)
    test_emb = np.asarray(test_emb, dtype=float)
    train_labels = np.asarray(train_labels)
    nt = train_emb.shape[1]
    if not 1 <= k <= nt:
        raise KTooLarge(f"k={k} must lie in [1, {nt}]")
    classes, codes = np.unique(train_labels, return_inverse=True)
    out = np.empty(test_emb.shape[1], dtype=int)
    chunk = max(1, int(2e7 // max(1, nt * train_emb.shape[0])))
    for start in range(0, test_emb.shape[1], chunk):
        dist = _sq_distances(train_emb, test_emb[:, start : start + chunk])
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        for row, nbrs in enumerate(nearest):
            votes = codes[nbrs]
            counts = np.bincount(votes, minlength=classes.size)
            tied = counts == counts.max()
            out[start + row] = votes[np.argmax(tied[votes])]
    return classes[out]


def accuracy(predicted, truth):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    return int(np.sum(predicted == truth)) / truth.size


def per_class_accuracy(predicted, truth):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    return {
        _jsonable(c): float(np.mean(predicted[truth == c] == c)) for c in np.unique(truth)
    }


def _jsonable(v):
    return v.item() if isinstance(v, np.generic) else v


# --- per-variant embedding machinery ---------------------------------------


def default_graph_builder(variant, k=None):
    """Same-class neighbor graph over the stacked training sources.

    Linear variants use the cosine graph on the raw stacked views; kernel
    variants use the Gaussian kernel of the stacked, per-view-centered views
    with its own median bandwidth. That kernel is left uncentered so edge
    weights, and hence degrees, stay nonnegative. ``k`` defaults to
    ``N_tr - 1``.
    """

    def build(x_tr, y_tr, labels_tr):
        counts = np.unique(labels_tr, return_counts=True)[1]
        kk = k if k is not None else int(counts.min()) - 1
        if kk < 1:
            return empty_graph(x_tr.shape[1])
        if variant in ("gkcca", "kcca"):
            S = np.vstack([
                x_tr - x_tr.mean(axis=1, keepdims=True),
                y_tr - y_tr.mean(axis=1, keepdims=True),
            ])
            Ks = kernel.gram(S, kernel.KernelSpec("gaussian"))
            return kernel_class_graph(Ks, labels_tr, kk)
        return cosine_class_graph(np.vstack([x_tr, y_tr]), labels_tr, kk)

    return build


class _Embedder:
    """Maps a variant's coefficient matrix and X-view columns to embeddings.

    Embeddings are ``coef.T @ features(x)`` where ``features`` depends only on
    the training data, so it is computed once per partition.
    """

    def __init__(self, variant, x_tr, y_tr, graph, jitter, kernel_x, kernel_y):
        self.variant = variant
        views = cca.center(x_tr, y_tr)
        self.views = views
        if variant in ("cca", "gcca"):
            self.path = cca.GccaPath(views, graph, jitter) if variant == "gcca" else None
        elif variant in ("dcca", "gdcca"):
            self.path = dual.DualPath(views, graph, jitter)
        else:
            self.kernel_x = kernel_x.resolve(x_tr)
            kbx = kernel.gram(x_tr, self.kernel_x)
            kby = kernel.gram(y_tr, kernel_y.resolve(y_tr))
            self.x_tr = x_tr
            self.kx_col_mean = kbx.mean(axis=0)
            self.kx_grand_mean = float(kbx.mean())
            self.path = kernel.KernelPath(kernel.center_kernel(kbx), kernel.center_kernel(kby), graph, jitter)
        self.jitter = jitter
        self.train_features = self.features(x_tr)

    def coef(self, gamma, epsilon, d):
        if self.variant == "cca":
            return cca.fit_cca(self.views, d, self.jitter).u
        if self.variant == "gcca":
            return self.path.solve(gamma, d).u
        if self.variant in ("dcca", "gdcca"):
            return self.path.solve(gamma, epsilon, d).a
        return self.path.solve(gamma, epsilon, d)[0]

    def features(self, x):
        if self.variant in ("cca", "gcca"):
            return x - self.views.x_mean[:, None]
        if self.variant in ("dcca", "gdcca"):
            return self.views.x.T @ (x - self.views.x_mean[:, None])
        return kernel.centered_cross_kernel(
            x, self.x_tr, self.kernel_x, self.kx_col_mean, self.kx_grand_mean
        ).T


def grid_search(
    variant,
    x,
    y,
    labels,
    split,
    grid=None,
    d=20,
    k=10,
    graph_builder=None,
    jitter=0.0,
    kernel_x=None,
    kernel_y=None,
    threads=1,
    score_all_cells=False,
    trace=None,
):
    """Tune on the tuning partition, then report test accuracy of the best cell.

    ``x`` and ``y`` hold all samples as columns and ``split`` is the
    ``(train, tune, test)`` index triple from :func:`partition`. The best cell
    maximizes tuning accuracy, ties going to the smaller gamma, then the
    smaller epsilon. With ``score_all_cells`` every cell's test accuracy is
    filled in after selection. ``trace``, if a list, receives the sequence of
    ``(event, cell_index)`` steps.
    """
    t0 = time.perf_counter()
    grid = grid or HyperGrid()
    kernel_x = kernel_x or kernel.KernelSpec("gaussian")
    kernel_y = kernel_y or kernel.KernelSpec("gaussian")
    trace = trace if trace is not None else []
    labels = np.asarray(labels)
    train, tune, test = (np.asarray(s) for s in split)
    cells = grid.cells(variant)

    x_tr = np.asarray(x[:, train], dtype=float)
    y_tr = np.asarray(y[:, train], dtype=float)
    lab_tr = labels[train]
    if variant in ("cca", "dcca", "kcca"):
        graph = empty_graph(train.size)
    else:
        graph = (graph_builder or default_graph_builder(variant))(x_tr, y_tr, lab_tr)
    emb = _Embedder(variant, x_tr, y_tr, graph, jitter, kernel_x, kernel_y)
    tune_feat = emb.features(np.asarray(x[:, tune], dtype=float))
    lab_tune = labels[tune]

    def score(i):
        gamma, eps = cells[i]
        try:
            coef = emb.coef(gamma, eps, d)
        except GraphCCAError as exc:
            raise GridCellError(variant, gamma, eps, exc) from exc
        pred = knn_classify(coef.T @ emb.train_features, lab_tr, coef.T @ tune_feat, k)
        return coef, int(np.sum(pred == lab_tune))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score, range(len(cells))))
    else:
        results = [score(i) for i in range(len(cells))]
    for i in range(len(cells)):
        trace.append(("tune", i))

    correct = [c for _, c in results]
    best = int(np.argmax(correct))
    trace.append(("select", best))

    gamma, eps = cells[best]
    coef = emb.coef(gamma, eps, d)
    trace.append(("test", best))
    test_feat = emb.features(np.asarray(x[:, test], dtype=float))
    lab_test = labels[test]
    train_emb = coef.T @ emb.train_features
    pred = knn_classify(train_emb, lab_tr, coef.T @ test_feat, k)

    records = []
    for i, ((g, e), (cf, c)) in enumerate(zip(cells, results)):
        test_acc = None
        if i == best:
            test_acc = accuracy(pred, lab_test)
        elif score_all_cells:
            trace.append(("test", i))
            test_acc = accuracy(knn_classify(cf.T @ emb.train_features, lab_tr, cf.T @ test_feat, k), lab_test)
        records.append(CellRecord(i, g, e, c / tune.size, test_acc))

    return EvalReport(
        variant=variant,
        accuracy=accuracy(pred, lab_test),
        per_class_accuracy=per_class_accuracy(pred, lab_test),
        chosen_gamma=gamma,
        chosen_epsilon=eps,
        d=d,
        n_test=int(test.size),
        runtime=time.perf_counter() - t0,
        cells=records,
    )


# --- Monte-Carlo runs and report emission ----------------------------------


@dataclass(frozen=True)
class RunResult:
    run: int
    n_train: int
    report: EvalReport


def monte_carlo(
    variants,
    x,
    y,
    labels,
    plan,
    runs,
    n_classes=None,
    **search_kwargs,
):
    """Repeat partition + grid search ``runs`` times with child seeds ``seed + run``.

    When ``n_classes`` is set, each run first draws that many classes at
    random and keeps only their samples.
    """
    labels = np.asarray(labels)
    out = []
    for run in range(runs):
        seed = plan.seed + run
        rng = np.random.default_rng(seed)
        keep = np.arange(labels.size)
        if n_classes:
            chosen = np.sort(rng.choice(np.unique(labels), size=n_classes, replace=False))
            keep = np.flatnonzero(np.isin(labels, chosen))
        run_plan = SplitPlan(
            plan.n_train_per_class, plan.tune_fraction, plan.test_fraction, seed, plan.n_holdout_per_class
        )
        split = tuple(keep[s] for s in partition(labels[keep], run_plan))
        for variant in variants:
            report = grid_search(variant, x, y, labels, split, **search_kwargs)
            logger.info("run %d %s: test accuracy %.4f", run, variant, report.accuracy)
            out.append(RunResult(run, plan.n_train_per_class, report))
    return out


def _num(v):
    if v is None:
        return None
    v = float(v)
    return None if np.isnan(v) else v


def summarize(results):
    """Mean and population standard deviation of test accuracy per (variant, N_tr)."""
    groups = {}
    for r in results:
        groups.setdefault((r.report.variant, r.n_train), []).append(r.report.accuracy)
    return [
        {"variant": v, "n_train": n, "runs": len(accs), "mean": float(np.mean(accs)), "std": float(np.std(accs))}
        for (v, n), accs in sorted(groups.items())
    ]


def report_lines(results, include_timing=False):
    """Line-delimited JSON: one ``cell`` record per (run, cell), one ``run``
    record per fit, then ``summary`` records. Timing is left out unless asked
    for, so fixed-seed reports are byte-identical."""
    lines = []
    for r in results:
        rep = r.report
        for c in rep.cells:
            lines.append({
                "type": "cell", "variant": rep.variant, "run": r.run, "n_train": r.n_train,
                "gamma": _num(c.gamma), "epsilon": _num(c.epsilon),
                "tune_acc": c.tune_acc, "test_acc": _num(c.test_acc),
            })
        rec = {
            "type": "run", "variant": rep.variant, "run": r.run, "n_train": r.n_train,
            "gamma": _num(rep.chosen_gamma), "epsilon": _num(rep.chosen_epsilon),
            "d": rep.d, "n_test": rep.n_test, "test_acc": rep.accuracy,
            "per_class": {str(k): v for k, v in rep.per_class_accuracy.items()},
        }
        if include_timing:
            rec["runtime"] = rep.runtime
        lines.append(rec)
    for s in summarize(results):
        lines.append({"type": "summary", **s})
    return [json.dumps(rec, sort_keys=True) for rec in lines]


def curve_lines(results, variant):
    """``N_tr,mean_acc,std_acc`` rows for one variant, ordered by N_tr."""
    rows = [s for s in summarize(results) if s["variant"] == variant]
    return [f"{s['n_train']},{s['mean']!r},{s['std']!r}" for s in rows]
