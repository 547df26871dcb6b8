import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from customs_adapt import metrics
from customs_adapt.strategies import Selection
from conftest import batch_from


def _sel(batch, positions):
    pos = np.asarray(positions, dtype=np.int64)
    return Selection(batch.week, (), tuple(int(i) for i in batch.ids[pos]), 0.0, len(pos), pos)


def test_norm_precision_examples():
    b = batch_from([1, 1, 1, 1] + [0] * 16)
    assert metrics.norm_precision(_sel(b, [0, 1, 2] + list(range(4, 11))), b) == pytest.approx(0.75)
    b2 = batch_from([1] * 12 + [0] * 8)
    assert metrics.norm_precision(_sel(b2, range(10)), b2) == 1.0
    assert metrics.norm_precision(_sel(b, range(10, 20)), b) == 0.0
    assert metrics.norm_precision(_sel(batch_from([0] * 5), [0]), batch_from([0] * 5)) == 1.0


def test_norm_revenue_examples():
    b = batch_from([1, 1, 1, 0], [10, 5, 1, 0])
    assert metrics.norm_revenue(_sel(b, [1, 2]), b) == pytest.approx(0.4)
    assert metrics.norm_revenue(_sel(b, [0, 1]), b) == 1.0
    assert metrics.norm_revenue(_sel(b, [3]), b) == 0.0


def test_new_importer_slice():
    imps = ["old", "old", "new1", "new2", "new3"]
    b = batch_from([0, 1, 1, 1, 0], [0, 4, 3, 2, 0], importers=imps)
    assert metrics.new_importer_slice(_sel(b, [0]), b, set(imps)) is None
    assert metrics.new_importer_slice(_sel(b, [2, 3]), b, {"old"}) == 1.0
    # only old importers selected while the slice holds revenue
    assert metrics.new_importer_slice(_sel(b, [0, 1]), b, {"old"}) == 0.0
    assert metrics.new_importer_slice(_sel(b, [0, 3]), b, {"old"}) == pytest.approx(2 / 3)


def test_moving_average_examples():
    assert metrics.moving_average([3.0] * 20) == pytest.approx([3.0] * 20)
    x = np.random.default_rng(0).random(30)
    assert metrics.moving_average(x, 1) == pytest.approx(x)
    assert metrics.moving_average([0.0, 1.0], 14)[1] == 0.5
    assert metrics.moving_average([1.0, None, 3.0], 2)[1:].tolist() == [1.0, 3.0]


def test_pearson_examples():
    x = np.arange(10.0)
    assert metrics.pearson(x, x)[0] == pytest.approx(1.0)
    assert metrics.pearson(x, -x)[0] == pytest.approx(-1.0)
    assert metrics.pearson([1, 2, 3], [2, 1, 3])[0] == pytest.approx(0.5)
    # p for r = 0.5, n = 3: t = 0.5 * sqrt(1 / 0.75), df 1
    assert metrics.pearson([1, 2, 3], [2, 1, 3])[1] == pytest.approx(0.6666666666666667)
    with pytest.raises(ValueError):
        metrics.pearson([1, 1, 1], [1, 2, 3])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=60), st.data())
def test_metrics_in_unit_interval(flags, data):
    revenues = [data.draw(st.floats(0.01, 1e4)) if f else 0.0 for f in flags]
    b = batch_from(flags, revenues)
    k = data.draw(st.integers(1, len(flags)))
    pos = data.draw(st.permutations(range(len(flags))))[:k]
    s = _sel(b, pos)
    for v in (metrics.norm_precision(s, b), metrics.norm_revenue(s, b)):
        assert 0.0 <= v <= 1.0 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.integers(1, 20))
def test_moving_average_bounded_by_window(series, w):
    out = metrics.moving_average(series, w)
    for t, v in enumerate(out):
        win = series[max(0, t + 1 - w): t + 1]
        assert min(win) - 1e-9 <= v <= max(win) + 1e-9
