#! /usr/bin/env python3
"""
Mini-batch SGDM training with per-epoch validation and MODW checkpoints.

Every random draw derives from cfg.seed through SeedSequence keys:
  (1, epoch)        the epoch permutation of the training split
  (2, epoch, step)  the dropout masks of one step
so a resumed run replays exactly what an uninterrupted run would have done.
"""

import os
import time
import logging

from typing import (
    Optional,
    List,
    Dict,
    Tuple,
    Any,
)

import numpy as np

from ..exceptions import RejectedInput, ClassMismatch, ModelSpecMismatch
from ..context.parameterContext import TrainConfig
from ..datastore.dataset import Dataset
from ..models.modelGraph import ModelGraph
from ..models.modelZoo import buildModel
from ..nn import functional as F
from ..nn.tensor import TRAIN, INFER
from ..nn.optimizer import OptimizerState
from ..nn.checkpoint import Checkpoint, writeCheckpoint, readCheckpoint
from .trainHistory import TrainHistory, EpochRecord

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


def batchPlan(
    n: int,
    batchSize: int,
) -> List[int]:
    # the last partial batch is kept
    if batchSize < 1:
        raise RejectedInput(f"batch size {batchSize} must be at least 1")
    full, rest = divmod(n, batchSize)
    return [batchSize] * full + ([rest] if rest else [])


def epochPermutation(
    seed: int,
    epoch: int,
    n: int,
) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1, int(epoch))))
    return rng.permutation(n)


def dropoutRng(
    seed: int,
    epoch: int,
    step: int,
) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2, int(epoch), int(step))))


def checkClasses(
    model: ModelGraph,
    data: Dataset,
) -> None:
    if model.numClasses != data.numClasses:
        raise ClassMismatch(f"model has {model.numClasses} outputs, dataset has {data.numClasses} classes {data.classes}")
    generic = [f"class{i}" for i in range(model.numClasses)]
    if model.classNames != generic and model.classNames != data.classes:
        raise ClassMismatch(f"model classes {model.classNames} differ from dataset classes {data.classes}")


def validate(
    model: ModelGraph,
    data: Dataset,
    indices: np.ndarray,
    batchSize: int = 512,
) -> Tuple[float, float]:
    """Mean loss and accuracy in INFER mode; parameters and running statistics are untouched."""
    if indices.size == 0:
        return float("nan"), float("nan")

    lossSum = 0.0
    correct = 0
    for start in range(0, indices.size, batchSize):
        idx = indices[start : start + batchSize]
        x, y = data.batch(idx, model.dtype)
        logits = model.forward(x, INFER)
        loss, _ = F.softmaxXent(logits, y)
        lossSum += loss * idx.size
        correct += int(np.sum(np.argmax(logits, axis=1) == y))
    return lossSum / indices.size, correct / indices.size


def trainDataInfo(data: Dataset) -> Dict[str, Any]:
    m = data.manifest
    return {
        "dataset_id": data.datasetId(),
        "profile_id": m.profileId,
        "snr_convention": m.snrConvention,
        "snr_offset_db": m.snrOffsetDb,
    }


class Trainer:
    def __init__(
        self,
        model: ModelGraph,
        data: Dataset,
        cfg: TrainConfig,
        history: Optional[TrainHistory] = None,
    ) -> None:
        if not data.hasSplit("TRAIN") or not data.hasSplit("VAL"):
            raise RejectedInput("training needs a dataset with TRAIN and VAL splits, run partition first")
        checkClasses(model, data)

        self.model = model
        self.data = data
        self.cfg = cfg
        self.history = history if history is not None else TrainHistory()
        self.dtype = cfg.dtype()

        if model.initialized:
            model.astype(self.dtype)
        else:
            model.initialize(cfg.seed, self.dtype)
        self.optimizer = OptimizerState(model.params(), lr=cfg.lr, momentum=cfg.momentum)

        model.trainData = trainDataInfo(data)
        self.trainIdx = data.splitIndices("TRAIN")
        self.valIdx = data.splitIndices("VAL")
        self.outDir: Optional[str] = cfg.out_dir
        if self.outDir:
            os.makedirs(self.outDir, exist_ok=True)

    def runEpoch(self, epoch: int) -> EpochRecord:
        t0 = time.time()
        order = self.trainIdx[epochPermutation(self.cfg.seed, epoch, self.trainIdx.size)]

        lossSum = 0.0
        start = 0
        sizes = batchPlan(order.size, self.cfg.batch_size)
        for step, size in enumerate(sizes):
            idx = order[start : start + size]
            start += size

            x, y = self.data.batch(idx, self.dtype)
            self.model.zeroGrad()
            logits = self.model.forward(x, TRAIN, dropoutRng(self.cfg.seed, epoch, step))
            loss, grad = F.softmaxXent(logits, y)
            self.model.backward(grad)
            self.optimizer.step()
            lossSum += loss * size

            msg = f"epoch {epoch} step {step + 1}/{len(sizes)} loss {loss:.5f}"
            log.debug(msg)

        valLoss, valAcc = validate(self.model, self.data, self.valIdx, self.cfg.eval_batch_size)
        return EpochRecord(
            epoch=epoch,
            trainLoss=lossSum / max(order.size, 1),
            valLoss=valLoss,
            valAccuracy=valAcc,
            seconds=time.time() - t0,
            steps=len(sizes),
        )

    def snapshot(self, epochsDone: int) -> Checkpoint:
        return Checkpoint(
            modelKind=self.model.kind,
            classNames=self.model.classNames,
            specText=self.model.specText(),
            params=[(n, np.array(t)) for n, t in self.model.stateTensors()],
            velocity=[np.array(v) for v in self.optimizer.velocity],
            epoch=epochsDone,
            optimizer=self.optimizer.stateDict(),
            history=self.history.toDict(),
            trainConfig=self.cfg.toJson(),
            dtype=self.dtype,
            trainData=self.model.trainData,
        )

    def saveCheckpoints(
        self,
        epoch: int,
        improved: bool,
    ) -> None:
        if not self.outDir:
            return
        ckpt = self.snapshot(epoch + 1)
        if (epoch + 1) % self.cfg.checkpoint_every == 0:
            writeCheckpoint(ckpt, os.path.join(self.outDir, f"epoch-{epoch + 1:03d}.modw"))
        writeCheckpoint(ckpt, os.path.join(self.outDir, "last.modw"))
        if improved:
            writeCheckpoint(ckpt, os.path.join(self.outDir, "best.modw"))
        self.history.write(self.outDir)

    def fit(self, startEpoch: int = 0) -> Tuple[ModelGraph, TrainHistory]:
        msg = f"train {self.model.kind}: {self.trainIdx.size} train / {self.valIdx.size} val frames, epochs {startEpoch}..{self.cfg.epochs - 1}, {self.dtype}"
        log.info(msg)

        for epoch in range(startEpoch, self.cfg.epochs):
            best = self.history.bestAccuracy()
            record = self.runEpoch(epoch)
            self.history.append(record)
            self.saveCheckpoints(epoch, improved=record.valAccuracy > best)

            msg = f"epoch {epoch + 1}/{self.cfg.epochs}: train loss {record.trainLoss:.4f}, val loss {record.valLoss:.4f}, val acc {record.valAccuracy:.4f} ({record.seconds:.1f}s)"
            log.info(msg)

        return self.model, self.history


def train(
    model: ModelGraph,
    data: Dataset,
    cfg: TrainConfig,
) -> Tuple[ModelGraph, TrainHistory]:
    return Trainer(model, data, cfg).fit(0)


def modelFromCheckpoint(
    ckpt: Checkpoint,
    dtype: Optional[str] = None,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> ModelGraph:
    model = buildModel(ckpt.modelKind, len(ckpt.classNames), ckpt.classNames, bnEps=bnEps, bnMomentum=bnMomentum)
    if model.specText() != ckpt.specText:
        raise ModelSpecMismatch(f"checkpoint layer listing does not match a fresh {ckpt.modelKind}")
    model.dtype = dtype or ckpt.dtype
    model.loadState(ckpt.params)
    model.trainData = dict(ckpt.trainData)
    return model


def loadModel(
    path: str,
    dtype: Optional[str] = None,
) -> ModelGraph:
    return modelFromCheckpoint(readCheckpoint(path), dtype)


def resume(
    path: str,
    data: Dataset,
    cfg: TrainConfig,
    model: Optional[ModelGraph] = None,
) -> Tuple[ModelGraph, TrainHistory]:
    """
    Continue a run from a checkpoint: parameters, running statistics, optimizer
    velocity, epoch counter and history are restored before the next epoch.
    """
    ckpt = readCheckpoint(path)
    if model is not None and model.specText() != ckpt.specText:
        raise ModelSpecMismatch(f"{path} was written by a different model layout than the {model.kind} requested")

    restored = modelFromCheckpoint(ckpt, cfg.dtype(), cfg.bn_eps, cfg.bn_momentum)
    history = TrainHistory.fromDict(ckpt.history)

    if ckpt.epoch >= cfg.epochs:
        msg = f"{path} already holds {ckpt.epoch} epochs, nothing to do for epochs={cfg.epochs}"
        log.warning(msg)
        return restored, history

    trainer = Trainer(restored, data, cfg, history)
    if ckpt.velocity is not None:
        trainer.optimizer.loadVelocity(ckpt.velocity, int(ckpt.optimizer.get("steps", 0)))
    return trainer.fit(ckpt.epoch)
