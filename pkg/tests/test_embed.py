import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from customs_adapt import embed
from customs_adapt.core import DataError
from conftest import decl


def _items(n=50, seed=0):
    r = np.random.default_rng(seed)
    return [decl(i, fob=float(r.lognormal(4, 1)), weight=float(r.lognormal(2, 1)), qty=int(r.integers(1, 9)),
                 tariff=f"T{r.integers(20)}", importer=f"I{r.integers(30)}", office=f"O{r.integers(4)}")
            for i in range(n)]


def test_standardisation_identity_at_full_categorical_weight():
    items = _items()
    e = embed.fit(items, categorical_weight=1.0)
    z = e.encode_many(items)
    varying = embed.raw_features(items).std(axis=0) > 1e-12
    assert np.allclose(z.mean(axis=0), 0, atol=1e-9)
    assert np.allclose(z.std(axis=0)[varying], 1, atol=1e-9)


def test_default_weight_standardises_numeric_dims():
    items = _items()
    z = embed.fit(items).encode_many(items)
    assert np.allclose(z.mean(axis=0), 0, atol=1e-9)
    assert np.allclose(z[:, :3].std(axis=0), 1, atol=1e-9)
    assert np.all(z[:, 3:].std(axis=0) <= embed.DEFAULT_CATEGORICAL_WEIGHT + 1e-9)


def test_fit_is_deterministic():
    items = _items()
    assert embed.fit(items, salt=3) == embed.fit(items, salt=3)


def test_constant_column_gets_unit_std():
    items = [decl(i, fob=5.0 + i, qty=2) for i in range(10)]
    e = embed.fit(items)
    assert e.std[2] == 1.0
    assert np.all(np.isfinite(e.encode_many(items)))


def test_fit_empty_reference():
    with pytest.raises(DataError):
        embed.fit([])


def test_importer_change_touches_only_hashed_dims():
    e = embed.fit(_items())
    a, b = e.encode(decl(1, importer="I1")), e.encode(decl(1, importer="I2"))
    assert np.array_equal(a, e.encode(decl(1, importer="I1")))
    diff = np.flatnonzero(a != b)
    assert diff.size <= 2 and np.all(diff >= embed.NUMERIC_DIMS)


def test_doubling_fob_changes_only_fob_dim():
    e = embed.fit(_items())
    diff = np.flatnonzero(e.encode(decl(1, fob=10.0)) != e.encode(decl(1, fob=20.0)))
    assert diff.tolist() == [0]


@settings(max_examples=50, deadline=None)
@given(st.integers(5, 40), st.integers(0, 10_000))
def test_encoding_has_fixed_dimension(dim, salt):
    out = embed.raw_features(_items(8), dim, salt)
    assert out.shape == (8, dim)
    # four categorical fields contribute +-1 each
    assert np.all(np.abs(out[:, 3:]).sum(axis=1) <= 4)
