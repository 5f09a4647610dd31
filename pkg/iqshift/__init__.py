"""
Module providing all public accessible functions and data for the iqshift package

Modulation classification on raw I/Q frames under dataset shift:
generate two synthetic profiles, train a CNN or a ResNet with plain numpy,
evaluate within and across profiles.

All public data is vizible via the __all__ List
"""

import os
import logging

from .version import VERSION
from .exceptions import (
    IqShiftException,
    RejectedInput,
    UsageError,
    UnsupportedFormat,
    DatasetFormatError,
    BadMagic,
    BadVersion,
    ChecksumMismatch,
    StructuralError,
    CheckpointError,
    ModelSpecMismatch,
    ClassMismatch,
    UnmappableClass,
    SelftestFailed,
)
from .context.parameterContext import (
    ParameterContext,
    TrainConfig,
    RunConfig,
)
from .siggen.modulationClass import (
    ModulationClass,
    ALL_CLASSES,
    constellation,
    mapSymbols,
)
from .siggen.srrc import (
    srrcPulse,
    srrcTaps,
    nyquistIsi,
)
from .siggen.frameMeta import FrameMeta
from .siggen.generatorProfile import (
    GeneratorProfile,
    PROFILE_A,
    PROFILE_B,
    TOTAL,
    INBAND,
    builtinProfile,
    loadProfile,
    saveProfile,
    profileFromName,
    parseGrid,
    snrOffsetEstimate,
)
from .siggen.synthesis import (
    synthesizeClean,
    addNoise,
    measuredSnrDb,
)
from .siggen.generator import (
    frameSeed,
    synthesizeSignal,
    generateDataset,
    expectedFrameCount,
    fullScaleCounts,
)
from .datastore.labeledFrame import (
    LabeledFrame,
    framePower,
    normalizeUnitPower,
    sliceToArray,
    sliceLongSignal,
)
from .datastore.manifest import DatasetManifest
from .datastore.dataset import (
    Dataset,
    DEFAULT_FRACTIONS,
    cellSplitCounts,
    partition,
)
from .datastore.modfFormat import (
    writeDataset,
    readDataset,
)
from .datastore.converters import (
    registerConverter,
    unregisterConverter,
    listConverters,
    importExternal,
)
from .nn.optimizer import (
    OptimizerState,
    sgdmStep,
)
from .nn.checkpoint import (
    Checkpoint,
    writeCheckpoint,
    readCheckpoint,
)
from .nn.gradcheck import (
    gradientCheck,
    checkLayer,
)
from .models.modelGraph import ModelGraph
from .models.modelZoo import (
    buildModel,
    modelKinds,
)
from .training.trainHistory import (
    EpochRecord,
    TrainHistory,
)
from .training.trainer import (
    Trainer,
    train,
    resume,
    loadModel,
)
from .evaluation.evalReport import EvalReport
from .evaluation.evaluator import (
    evaluate,
    crossEvaluate,
    retentionSummary,
    compareReports,
)
from .selftest import runSelftest

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

__all__ = [
    # from version
    "VERSION",
    # from exceptions
    "IqShiftException",
    "RejectedInput",
    "UsageError",
    "UnsupportedFormat",
    "DatasetFormatError",
    "BadMagic",
    "BadVersion",
    "ChecksumMismatch",
    "StructuralError",
    "CheckpointError",
    "ModelSpecMismatch",
    "ClassMismatch",
    "UnmappableClass",
    "SelftestFailed",
    # from context
    "ParameterContext",
    "TrainConfig",
    "RunConfig",
    # from siggen
    "ModulationClass",
    "ALL_CLASSES",
    "constellation",
    "mapSymbols",
    "srrcPulse",
    "srrcTaps",
    "nyquistIsi",
    "FrameMeta",
    "GeneratorProfile",
    "PROFILE_A",
    "PROFILE_B",
    "TOTAL",
    "INBAND",
    "builtinProfile",
    "loadProfile",
    "saveProfile",
    "profileFromName",
    "parseGrid",
    "snrOffsetEstimate",
    "synthesizeClean",
    "addNoise",
    "measuredSnrDb",
    "frameSeed",
    "synthesizeSignal",
    "generateDataset",
    "expectedFrameCount",
    "fullScaleCounts",
    # from datastore
    "LabeledFrame",
    "framePower",
    "normalizeUnitPower",
    "sliceToArray",
    "sliceLongSignal",
    "DatasetManifest",
    "Dataset",
    "DEFAULT_FRACTIONS",
    "cellSplitCounts",
    "partition",
    "writeDataset",
    "readDataset",
    "registerConverter",
    "unregisterConverter",
    "listConverters",
    "importExternal",
    # from nn
    "OptimizerState",
    "sgdmStep",
    "Checkpoint",
    "writeCheckpoint",
    "readCheckpoint",
    "gradientCheck",
    "checkLayer",
    # from models
    "ModelGraph",
    "buildModel",
    "modelKinds",
    # from training
    "EpochRecord",
    "TrainHistory",
    "Trainer",
    "train",
    "resume",
    "loadModel",
    # from evaluation
    "EvalReport",
    "evaluate",
    "crossEvaluate",
    "retentionSummary",
    "compareReports",
    # from selftest
    "runSelftest",
]
