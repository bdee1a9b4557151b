import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphcca import cca, pipeline
from graphcca.datasets import synthetic_views
from graphcca.errors import BadSplitPoint, ClassTooSmall, GridCellError, KTooLarge
from graphcca.graph import empty_graph
from graphcca.pipeline import HyperGrid, SplitPlan
from oracles import knn_oracle


@pytest.fixture(scope="module")
def data():
    return synthetic_views(n_classes=3, n_per_class=20, dx=6, dy=5, seed=1)


def test_split_views():
    M = np.arange(12.0).reshape(4, 3)
    x, y = pipeline.split_views(M, 2)
    np.testing.assert_array_equal(x, M[:2])
    np.testing.assert_array_equal(y, M[2:])
    assert pipeline.split_views(M, 3)[1].shape == (1, 3)
    x, y = pipeline.split_views(np.zeros((1200, 5)), 300)
    assert x.shape == (300, 5) and y.shape == (900, 5)
    for dx in (0, 4):
        with pytest.raises(BadSplitPoint):
            pipeline.split_views(M, dx)


def test_partition_counts():
    tr, tu, te = pipeline.partition(np.zeros(10, dtype=int), SplitPlan(6))
    assert (tr.size, tu.size, te.size) == (6, 2, 2)
    labels = np.repeat(np.arange(5), 26)
    tr, tu, te = pipeline.partition(labels, SplitPlan(10, seed=3))
    assert (tr.size, tu.size, te.size) == (50, 40, 40)
    for cls in range(5):
        members = set(np.flatnonzero(labels == cls))
        parts = [set(p) & members for p in (tr, tu, te)]
        assert sum(map(len, parts)) == len(members) and set().union(*parts) == members


def test_partition_deterministic():
    labels = np.repeat(np.arange(3), 15)
    a = pipeline.partition(labels, SplitPlan(5, seed=11))
    b = pipeline.partition(labels, SplitPlan(5, seed=11))
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p, q)
    c = pipeline.partition(labels, SplitPlan(5, seed=12))
    assert not np.array_equal(a[0], c[0])


def test_partition_errors_and_plan_validation():
    with pytest.raises(ClassTooSmall):
        pipeline.partition(np.array([0, 0, 0, 1, 1, 1, 1]), SplitPlan(2))
    with pytest.raises(ValueError):
        SplitPlan(3, tune_fraction=0.6, test_fraction=0.6)


def test_holdout_cap():
    labels = np.repeat(np.arange(2), 30)
    tr, tu, te = pipeline.partition(labels, SplitPlan(10, n_holdout_per_class=8))
    assert (tr.size, tu.size, te.size) == (20, 8, 8)


def test_knn_examples():
    train = np.array([[0.0, 1.0, 5.0], [0.0, 1.0, 5.0]])
    labels = np.array([7, 8, 9])
    np.testing.assert_array_equal(pipeline.knn_classify(train, labels, train[:, [1]], 1), [8])
    labels = np.array([1, 2, 2])
    np.testing.assert_array_equal(pipeline.knn_classify(train, labels, np.zeros((2, 4)) + 9, 3), [2] * 4)
    rng = np.random.default_rng(0)
    plane = rng.normal(size=(2, 7))
    lab = np.array([0, 1, 0, 1, 2, 2, 0])
    test = rng.normal(size=(2, 5))
    np.testing.assert_array_equal(pipeline.knn_classify(plane, lab, test, 3), knn_oracle(plane, lab, test, 3))
    with pytest.raises(KTooLarge):
        pipeline.knn_classify(plane, lab, test, 8)


def test_knn_vote_tie_goes_to_nearest_class():
    train = np.array([[0.0, 1.0, 3.0, 4.0]])
    labels = np.array([5, 3, 3, 5])
    # neighbors of 0.9 in order: 1 (class 3), 0 (class 5); tie 1-1 -> class 3
    np.testing.assert_array_equal(pipeline.knn_classify(train, labels, np.array([[0.9]]), 2), [3])


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), integer=st.booleans())
def test_knn_property(seed, integer):
    rng = np.random.default_rng(seed)
    d, nt, m = int(rng.integers(1, 6)), int(rng.integers(1, 51)), int(rng.integers(1, 10))
    draw = (lambda s: rng.integers(-2, 3, size=s).astype(float)) if integer else (lambda s: rng.normal(size=s))
    train, test = draw((d, nt)), draw((d, m))
    labels = rng.integers(0, 4, size=nt)
    k = int(rng.integers(1, nt + 1))
    np.testing.assert_array_equal(pipeline.knn_classify(train, labels, test, k), knn_oracle(train, labels, test, k))


def test_accuracy_exact():
    pred = np.array([1, 2, 2, 3, 1])
    truth = np.array([1, 2, 3, 3, 2])
    assert pipeline.accuracy(pred, truth) == 3 / 5
    per = pipeline.per_class_accuracy(pred, truth)
    assert per == {1: 1.0, 2: 0.5, 3: 0.5}
    counts = {c: np.sum(truth == c) for c in per}
    assert np.isclose(sum(per[c] * counts[c] for c in per) / truth.size, 3 / 5)


def test_grid_shapes():
    g = HyperGrid()
    assert len(g.cells("gcca")) == 30 and len(g.cells("gdcca")) == 900 and len(g.cells("gkcca")) == 900
    assert len(g.cells("cca")) == 1 and len(g.cells("kcca")) == 30
    assert np.isclose(g.gamma_values[0], 1e-3) and np.isclose(g.gamma_values[-1], 1e3)
    with pytest.raises(ValueError):
        HyperGrid(gamma_values=(0.0, 1.0))
    with pytest.raises(ValueError):
        g.cells("pca")


def test_single_cell_equals_direct_evaluation(data):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=2))
    rep = pipeline.grid_search("gcca", x, y, labels, split, HyperGrid((0.05,), (1.0,)), d=3, k=3)
    tr, _, te = split
    g = pipeline.default_graph_builder("gcca")(x[:, tr], y[:, tr], labels[tr])
    m = cca.fit_gcca(cca.center(x[:, tr], y[:, tr]), g, 0.05, 3)
    pred = pipeline.knn_classify(cca.project_x(m, x[:, tr]), labels[tr], cca.project_x(m, x[:, te]), 3)
    assert rep.accuracy == pipeline.accuracy(pred, labels[te])
    assert rep.chosen_gamma == 0.05 and len(rep.cells) == 1


def test_graph_free_matches_cca(data):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=4))
    empty = lambda a, b, l: empty_graph(a.shape[1])  # noqa: E731
    g = pipeline.grid_search("gcca", x, y, labels, split, HyperGrid((1e-3,), (1.0,)), d=3, k=3, graph_builder=empty)
    c = pipeline.grid_search("cca", x, y, labels, split, d=3, k=3)
    assert abs(g.accuracy - c.accuracy) <= 1 / split[2].size


def test_ties_pick_smallest_gamma(data):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=5))
    empty = lambda a, b, l: empty_graph(a.shape[1])  # noqa: E731
    rep = pipeline.grid_search("gdcca", x, y, labels, split, HyperGrid((0.1, 1.0), (5.0,)), d=2, k=3, graph_builder=empty)
    # an empty graph makes every gamma identical, so the first cell wins
    assert rep.chosen_gamma == 0.1


class SpyMatrix:
    """Array stand-in that logs which columns are read and when."""

    def __init__(self, a, trace):
        self.a = a
        self.trace = trace
        self.reads = []

    def __getitem__(self, key):
        cols = np.atleast_1d(np.arange(self.a.shape[1])[key[1]])
        self.reads.append((len(self.trace), set(cols.tolist())))
        return self.a[key]


@pytest.mark.parametrize("variant", ["gcca", "gdcca", "gkcca"])
def test_test_columns_untouched_during_selection(data, variant):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=6))
    trace = []
    spy = SpyMatrix(x, trace)
    grid = HyperGrid((0.01, 0.1), (0.5, 5.0))
    pipeline.grid_search(variant, spy, y, labels, split, grid, d=2, k=3, trace=trace, score_all_cells=True)
    select_at = next(i for i, (ev, _) in enumerate(trace) if ev == "select")
    test = set(split[2].tolist())
    for when, cols in spy.reads:
        if cols & test:
            assert when > select_at
    assert [ev for ev, _ in trace[: select_at]] == ["tune"] * select_at


def test_threads_do_not_change_results(data):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=7))
    grid = HyperGrid((0.01, 0.1, 1.0), (0.5, 5.0))
    a = pipeline.grid_search("gkcca", x, y, labels, split, grid, d=2, k=3, threads=1)
    b = pipeline.grid_search("gkcca", x, y, labels, split, grid, d=2, k=3, threads=3)
    assert a.cells == b.cells and a.accuracy == b.accuracy


def test_cell_errors_are_annotated(data):
    x, y, labels = data
    split = pipeline.partition(labels, SplitPlan(8, seed=8))
    with pytest.raises(GridCellError) as info:
        pipeline.grid_search("gcca", x, y, labels, split, HyperGrid((0.5,), (1.0,)), d=50, k=3)
    assert info.value.gamma == 0.5 and "gcca" in str(info.value)


def test_monte_carlo_reports(data):
    x, y, labels = data
    kw = dict(grid=HyperGrid((0.01, 1.0), (1.0,)), d=2, k=3)
    plan = SplitPlan(6, seed=9)
    r1 = pipeline.monte_carlo(["gcca", "cca"], x, y, labels, plan, 3, n_classes=2, **kw)
    r2 = pipeline.monte_carlo(["gcca", "cca"], x, y, labels, plan, 3, n_classes=2, **kw)
    assert pipeline.report_lines(r1) == pipeline.report_lines(r2)
    summary = pipeline.summarize(r1)
    assert [s["variant"] for s in summary] == ["cca", "gcca"]
    accs = [r.report.accuracy for r in r1 if r.report.variant == "gcca"]
    assert np.isclose(summary[1]["mean"], np.mean(accs)) and np.isclose(summary[1]["std"], np.std(accs))
    curve = pipeline.curve_lines(r1, "gcca")
    assert len(curve) == 1 and curve[0].startswith("6,")
    # runs draw two of three classes each
    for r in r1:
        assert len(r.report.per_class_accuracy) == 2
    assert "runtime" not in pipeline.report_lines(r1)[-1]
    assert "runtime" in "".join(pipeline.report_lines(r1, include_timing=True))
