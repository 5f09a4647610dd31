#! /usr/bin/env python3
"""
Test-split evaluation, cross-dataset evaluation and class retention.

A model is anything with `kind`, `classNames` and `predict(x, batchSize)`;
frames are scored in ascending index order so repeated calls are identical.
"""

import os
import logging

from typing import (
    Optional,
    List,
    Dict,
    Any,
    Protocol,
)

import numpy as np

from ..exceptions import UnmappableClass, RejectedInput
from ..datastore.dataset import Dataset
from ..siggen.generatorProfile import PROFILE_B, INBAND, TOTAL, snrOffsetEstimate
from .evalReport import EvalReport, COMMON_CLASS_NOTE

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

DEFAULT_RETENTION_THRESHOLD: float = 0.5


class Classifier(Protocol):
    kind: str
    classNames: List[str]

    def predict(self, x: np.ndarray, batchSize: int = 512) -> np.ndarray: ...


def labelMapping(
    datasetClasses: List[str],
    modelClasses: List[str],
    mapping: Optional[Dict[str, str]] = None,
) -> np.ndarray:
    """Dataset class position -> model output index; unknown labels are rejected."""
    mapping = mapping or {}
    rr = np.zeros(len(datasetClasses), dtype=np.int64)
    for i, name in enumerate(datasetClasses):
        target = mapping.get(name, name)
        if target not in modelClasses:
            raise UnmappableClass(name, f"dataset class '{name}' has no model output among {modelClasses}")
        rr[i] = modelClasses.index(target)
    return rr


def modelId(model: Classifier) -> str:
    trainData: Dict[str, Any] = getattr(model, "trainData", {}) or {}
    src = trainData.get("dataset_id")
    return f"{model.kind}@{src}" if src else model.kind


def evaluate(
    model: Classifier,
    dataset: Dataset,
    split: str = "TEST",
    mapping: Optional[Dict[str, str]] = None,
    batchSize: int = 512,
) -> EvalReport:
    indices = dataset.splitIndices(split) if dataset.manifest.hasSplits() else np.arange(len(dataset))
    if indices.size == 0:
        raise RejectedInput(f"dataset {dataset.datasetId()} has no {split} frames")

    classes = list(model.classNames)
    toModel = labelMapping(dataset.classes, classes, mapping)

    # raises StructuralError for frames off the manifest grid
    dataset.snrGridPositions(indices)
    present = [s for s in dataset.manifest.snrGridDb if np.any(dataset.meta["snr"][indices] == np.float32(s))]
    grid = sorted(set(float(s) for s in present))
    # frame snrs are stored in 32 bits
    snrPos = {float(np.float32(s)): i for i, s in enumerate(grid)}

    confusion = np.zeros((len(grid), len(classes), len(classes)), dtype=np.int64)
    correct = 0
    dtype = getattr(model, "dtype", "float32")
    for start in range(0, indices.size, batchSize):
        idx = indices[start : start + batchSize]
        x, y = dataset.batch(idx, dtype)
        truth = toModel[y]
        pred = np.asarray(model.predict(x, batchSize), dtype=np.int64)
        correct += int(np.sum(pred == truth))
        snrs = dataset.meta["snr"][idx]
        for s, t, p in zip(snrs, truth, pred):
            confusion[snrPos[float(s)], t, p] += 1

    report = EvalReport(
        modelId=modelId(model),
        datasetId=dataset.datasetId(),
        classes=classes,
        snrGridDb=grid,
        confusion=confusion,
        correct=correct,
        total=int(indices.size),
        snrConvention=dataset.manifest.snrConvention,
        snrOffsetDb=dataset.manifest.snrOffsetDb,
        trainProfileId=(getattr(model, "trainData", {}) or {}).get("profile_id"),
        testProfileId=dataset.manifest.profileId,
        notes=[COMMON_CLASS_NOTE],
    ).validate()

    msg = f"evaluate {report.modelId} on {report.datasetId}: accuracy {report.overallAccuracy:.4f} over {report.total} frames"
    log.info(msg)
    return report


def crossEvaluate(
    model: Classifier,
    dataset: Dataset,
    split: str = "TEST",
    mapping: Optional[Dict[str, str]] = None,
    batchSize: int = 512,
    offsetDb: Optional[float] = None,
) -> EvalReport:
    """
    evaluate() with the SNR axis annotated in both conventions.

    The in-band/total offset comes from, in order: the explicit offsetDb, the test
    dataset, the training dataset recorded in the model, the built-in profile B.
    """
    report = evaluate(model, dataset, split, mapping, batchSize)
    trainData: Dict[str, Any] = getattr(model, "trainData", {}) or {}

    source = "argument"
    if offsetDb is None and dataset.manifest.snrOffsetDb is not None:
        offsetDb, source = dataset.manifest.snrOffsetDb, "test dataset"
    if offsetDb is None and trainData.get("snr_offset_db") is not None:
        offsetDb, source = float(trainData["snr_offset_db"]), "training dataset"
    if offsetDb is None:
        offsetDb, source = snrOffsetEstimate(PROFILE_B), "built-in profile B"

    report.snrOffsetDb = float(offsetDb)
    report.crossDataset = trainData.get("profile_id") != dataset.manifest.profileId or trainData.get("dataset_id") != dataset.datasetId()
    trainConv = trainData.get("snr_convention")
    report.notes.append(f"snr offset {offsetDb:.3f} dB from the {source}")
    if trainConv in (TOTAL, INBAND) and trainConv != report.snrConvention:
        report.notes.append(f"trained on {trainConv} snr, tested on {report.snrConvention} snr; compare on the aligned axis")

    msg = f"cross-evaluate {report.modelId} on {report.datasetId}: offset {offsetDb:.3f} dB ({source})"
    log.info(msg)
    return report


def retentionSummary(
    report: EvalReport,
    threshold: float = DEFAULT_RETENTION_THRESHOLD,
) -> List[str]:
    """Classes with at least one correct prediction and high-SNR recall >= threshold."""
    rr: List[str] = []
    for name, (good, count) in report.highSnrRecall().items():
        if count > 0 and good > 0 and good / count >= threshold:
            rr.append(name)
    return rr


def compareReports(
    within: EvalReport,
    cross: EvalReport,
) -> Dict[str, float]:
    w = within.highSnrAccuracy()
    c = cross.highSnrAccuracy()
    return {"within_high_snr": w, "cross_high_snr": c, "gap": w - c}
