import os
import logging
import dataclasses

from typing import (
    Optional,
    List,
    Dict,
    Tuple,
)

import numpy as np

from ..exceptions import RejectedInput, StructuralError
from ..siggen.frameMeta import FrameMeta
from ..siggen.modulationClass import ModulationClass
from .labeledFrame import LabeledFrame
from .manifest import (
    DatasetManifest,
    TRAIN,
    VAL,
    TEST,
    splitCode,
)

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

# per-frame metadata as stored in a MODF record (the I/Q rows follow it)
META_DTYPE = np.dtype(
    [
        ("cls", "<u1"),  # index into manifest.classes
        ("snr", "<f4"),
        ("rolloff", "<f4"),
        ("cfo", "<f4"),
        ("sps", "<u2"),
        ("power", "<f4"),
        ("seed", "<u8"),
    ]
)

DEFAULT_FRACTIONS: Tuple[float, float, float] = (0.75, 0.125, 0.125)


class Dataset:
    """
    A read-only handle on a labelled frame collection.

    - iq: float32 array N x 2 x frame_len, unit power per frame
    - meta: structured array N of META_DTYPE
    - manifest: DatasetManifest (classes, grid, split assignment, ...)
    """

    def __init__(
        self,
        iq: np.ndarray,
        meta: np.ndarray,
        manifest: DatasetManifest,
    ) -> None:
        if iq.ndim != 3 or iq.shape[1] != 2:
            raise StructuralError(f"frames must be N x 2 x L, got {iq.shape}")
        if iq.shape[0] != meta.shape[0] or iq.shape[0] != manifest.frameCount:
            raise StructuralError(f"frame count mismatch: iq {iq.shape[0]}, meta {meta.shape[0]}, manifest {manifest.frameCount}")
        if iq.shape[2] != manifest.frameLen:
            raise StructuralError(f"frame length {iq.shape[2]} differs from manifest {manifest.frameLen}")

        self.iq = iq
        self.meta = meta
        self.manifest = manifest.validate()
        self.iq.setflags(write=False)
        self.meta.setflags(write=False)

    def __len__(self) -> int:
        return int(self.iq.shape[0])

    @property
    def labels(self) -> np.ndarray:
        return self.meta["cls"].astype(np.int64)

    @property
    def snrs(self) -> np.ndarray:
        return self.meta["snr"].astype(np.float64)

    @property
    def classes(self) -> List[str]:
        return list(self.manifest.classes)

    @property
    def numClasses(self) -> int:
        return len(self.manifest.classes)

    def datasetId(self) -> str:
        return f"{self.manifest.profileId}-seed{self.manifest.masterSeed}"

    def splitIndices(self, split: str) -> np.ndarray:
        if self.manifest.splits is None:
            raise StructuralError("dataset has no split assignment, run partition first")
        return np.flatnonzero(self.manifest.splits == splitCode(split))

    def hasSplit(self, split: str) -> bool:
        return self.manifest.splits is not None and self.splitIndices(split).size > 0

    def frameMeta(self, i: int) -> FrameMeta:
        m = self.meta[i]
        return FrameMeta(
            cls=ModulationClass.fromName(self.manifest.classes[int(m["cls"])]),
            snrDb=float(m["snr"]),
            rolloff=float(m["rolloff"]),
            cfo=float(m["cfo"]),
            sps=int(m["sps"]),
            powerScaleDb=float(m["power"]),
            seed=int(m["seed"]),
            profileId=self.manifest.profileId,
        )

    def frame(self, i: int) -> LabeledFrame:
        return LabeledFrame(iq=np.array(self.iq[i]), meta=self.frameMeta(i))

    def batch(
        self,
        indices: np.ndarray,
        dtype: str = "float32",
    ) -> Tuple[np.ndarray, np.ndarray]:
        return self.iq[indices].astype(dtype), self.labels[indices]

    def cellCounts(self) -> Dict[Tuple[int, float], int]:
        rr: Dict[Tuple[int, float], int] = {}
        for c, s in zip(self.meta["cls"], self.meta["snr"]):
            key = (int(c), float(s))
            rr[key] = rr.get(key, 0) + 1
        return rr

    def snrGridPositions(self, indices: Optional[np.ndarray] = None) -> np.ndarray:
        # frame snrs are stored in 32 bits, the grid in 64
        snrs = self.meta["snr"] if indices is None else self.meta["snr"][indices]
        grid = np.asarray(self.manifest.snrGridDb, dtype=np.float32)
        if grid.size == 0:
            ok = np.zeros(snrs.size, dtype=bool)
            pos = np.zeros(snrs.size, dtype=np.int64)
        else:
            order = np.argsort(grid, kind="stable")
            k = np.clip(np.searchsorted(grid[order], snrs), 0, grid.size - 1)
            ok = grid[order][k] == snrs
            pos = order[k].astype(np.int64)
        if not np.all(ok):
            off = sorted(set(float(s) for s in snrs[~ok]))
            raise StructuralError(f"dataset {self.datasetId()} has frames at snr {off} outside its manifest grid")
        return pos

    def withManifest(self, manifest: DatasetManifest) -> "Dataset":
        return Dataset(self.iq, self.meta, manifest)

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        splits = None if self.manifest.splits is None else self.manifest.splits[indices]
        manifest = dataclasses.replace(self.manifest, frameCount=int(indices.size), splits=splits)
        return Dataset(np.array(self.iq[indices]), np.array(self.meta[indices]), manifest)


def cellSplitCounts(
    nGroups: int,
    fractions: Tuple[float, float, float],
) -> Tuple[int, int, int]:
    # VAL and TEST are floored, TRAIN takes the rounding deficit
    nVal = int(np.floor(nGroups * fractions[1] + 1e-9))
    nTest = int(np.floor(nGroups * fractions[2] + 1e-9))
    return nGroups - nVal - nTest, nVal, nTest


def partition(
    dataset: Dataset,
    fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> DatasetManifest:
    """
    Stratified TRAIN/VAL/TEST assignment per (class, SNR) cell.

    Frames that were sliced from the same long signal share a seed; they are kept
    together so no parent straddles two splits.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise RejectedInput(f"fractions {fractions} must be three non-negative values summing to 1")

    splits = np.full(len(dataset), TRAIN, dtype=np.uint8)
    cls = dataset.meta["cls"]
    snr = dataset.meta["snr"]
    seeds = dataset.meta["seed"]

    gridPos = dataset.snrGridPositions()

    for c in np.unique(cls):
        for s in np.unique(snr[cls == c]):
            cell = np.flatnonzero((cls == c) & (snr == s))
            parents = np.unique(seeds[cell])

            snrIndex = int(gridPos[cell[0]])
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(c), int(snrIndex)]))
            order = rng.permutation(parents.size)

            nTrain, nVal, nTest = cellSplitCounts(parents.size, fractions)
            valParents = parents[order[:nVal]]
            testParents = parents[order[nVal : nVal + nTest]]

            splits[cell[np.isin(seeds[cell], valParents)]] = VAL
            splits[cell[np.isin(seeds[cell], testParents)]] = TEST

            msg = f"partition cell class={int(c)} snr={float(s)}: parents {parents.size} -> {nTrain}/{nVal}/{nTest}"
            log.debug(msg)

    return dataset.manifest.withSplits(splits)
