import numpy as np
import pytest

from customs_adapt import datagen
from customs_adapt.core import Declaration, InspectionOutcome, WeekBatch


def decl(i, week=0, fob=100.0, weight=10.0, qty=1, tariff="T1", importer="I1",
         declarant="D1", office="O1", illicit=False, revenue=0.0):
    return Declaration(i, week, fob, weight, qty, tariff, importer, declarant, office,
                       InspectionOutcome(illicit, revenue if illicit else 0.0))


def batch_from(labels, revenues=None, week=0, importers=None):
    """Week batch with the given fraud flags; fob grows with position."""
    revenues = revenues if revenues is not None else [0.0] * len(labels)
    importers = importers or [f"I{i}" for i in range(len(labels))]
    return WeekBatch(week, tuple(
        decl(week * 10_000 + i, week, fob=10.0 + i, illicit=bool(f), revenue=r, importer=imp)
        for i, (f, r, imp) in enumerate(zip(labels, revenues, importers))
    ))


SMALL = dict(weeks=36, items_per_week=300, drift_week=18, n_importers=600, n_tariff_codes=80)


@pytest.fixture(scope="session")
def small_sudden():
    return datagen.generate(datagen.ScenarioConfig(drift_kind="sudden", **SMALL), seed=3)


@pytest.fixture(scope="session")
def small_none():
    return datagen.generate(datagen.ScenarioConfig(drift_kind="none", **SMALL), seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
