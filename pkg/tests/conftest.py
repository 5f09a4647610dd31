import os
import sys
import dataclasses

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from iqshift.siggen.modulationClass import ModulationClass  # noqa: E402
from iqshift.siggen.generatorProfile import PROFILE_A, PROFILE_B, GeneratorProfile  # noqa: E402
from iqshift.siggen.generator import generateDataset  # noqa: E402
from iqshift.datastore.dataset import Dataset, partition  # noqa: E402

TINY_CLASSES = [ModulationClass.BPSK, ModulationClass.QPSK]
TINY_GRID = [0.0, 10.0]


@pytest.fixture(scope="session")
def shortProfileB() -> GeneratorProfile:
    # profile B with 4096-sample parents: 4 frames per signal
    return dataclasses.replace(PROFILE_B, longSignalLen=4096).validate()


@pytest.fixture(scope="session")
def tinyDatasetA() -> Dataset:
    # 2 classes x 2 snrs x 8 frames, partitioned 6/1/1 per cell
    ds = generateDataset(PROFILE_A, TINY_CLASSES, TINY_GRID, framesPerCell=8, masterSeed=3)
    return ds.withManifest(partition(ds, seed=3))


@pytest.fixture(scope="session")
def tinyDatasetB(shortProfileB: GeneratorProfile) -> Dataset:
    ds = generateDataset(shortProfileB, TINY_CLASSES, TINY_GRID, framesPerCell=8, masterSeed=5)
    return ds.withManifest(partition(ds, seed=5))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
