"""Layer kernels, finite-difference gradients, SGDM and the MODW checkpoint."""

import os
import pathlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqshift.exceptions import (
    RejectedInput,
    BadMagic,
    BadVersion,
    ChecksumMismatch,
    CheckpointError,
)
from iqshift.nn import functional as F
from iqshift.nn.tensor import Param, TRAIN, INFER, shapeText
from iqshift.nn.layers import (
    Conv1d,
    BatchNorm1d,
    ReLU,
    SELU,
    Dropout,
    MaxPool1d,
    GlobalAvgPool1d,
    Flatten,
    Dense,
    Sequential,
    ResidualUnit,
)
from iqshift.nn.gradcheck import checkLayer, gradientCheck, TOLERANCE
from iqshift.nn.optimizer import OptimizerState, sgdmStep
from iqshift.nn.checkpoint import Checkpoint, checkpointBytes, readCheckpointBytes, writeCheckpoint, readCheckpoint

INSTANCES = 20


def _convOracle(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, cIn, length = x.shape
    cOut, _, k = w.shape
    pad = (k - 1) // 2
    y = np.zeros((n, cOut, length))
    for i in range(n):
        for o in range(cOut):
            for t in range(length):
                acc = b[o]
                for c in range(cIn):
                    for j in range(k):
                        src = t + j - pad
                        if 0 <= src < length:
                            acc += w[o, c, j] * x[i, c, src]
                y[i, o, t] = acc
    return y


class TestConv:
    def testOneByOneIdentity(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(2, 1, 16))
        y, _ = F.conv1dForward(x, np.ones((1, 1, 1)), np.zeros(1))
        np.testing.assert_array_equal(y, x)

    def testZeroWeightsGiveTheBias(self, rng: np.random.Generator) -> None:
        y, _ = F.conv1dForward(rng.normal(size=(2, 3, 8)), np.zeros((4, 3, 5)), np.array([1.0, -2.0, 0.5, 3.0]))
        np.testing.assert_array_equal(y, np.broadcast_to(np.array([1.0, -2.0, 0.5, 3.0])[None, :, None], (2, 4, 8)))

    def testAgainstNestedLoops(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(1, 3, 8))
        w = rng.normal(size=(2, 3, 5))
        b = rng.normal(size=2)
        y, _ = F.conv1dForward(x, w, b)
        np.testing.assert_allclose(y, _convOracle(x, w, b), atol=1e-12)

    def testZeroUpstreamGradient(self, rng: np.random.Generator) -> None:
        y, cache = F.conv1dForward(rng.normal(size=(2, 3, 8)), rng.normal(size=(2, 3, 5)), np.zeros(2))
        dx, dw, db = F.conv1dBackward(np.zeros_like(y), cache)
        assert not dx.any() and not dw.any() and not db.any()

    def testBiasGradientIsChannelSum(self, rng: np.random.Generator) -> None:
        y, cache = F.conv1dForward(rng.normal(size=(2, 3, 8)), rng.normal(size=(2, 3, 5)), np.zeros(2))
        dy = rng.normal(size=y.shape)
        _, _, db = F.conv1dBackward(dy, cache)
        np.testing.assert_allclose(db, dy.sum(axis=(0, 2)))

    def testShapeErrors(self, rng: np.random.Generator) -> None:
        with pytest.raises(RejectedInput):
            F.conv1dForward(rng.normal(size=(2, 4, 8)), np.zeros((2, 3, 5)), np.zeros(2))
        with pytest.raises(RejectedInput):
            F.conv1dForward(rng.normal(size=(2, 3, 8)), np.zeros((2, 3, 4)), np.zeros(2))
        with pytest.raises(RejectedInput):
            F.conv1dBackward(np.zeros((2, 2, 8)), None)

    def testLabels(self) -> None:
        assert Conv1d(2, 32, 1).label == "1 × 1 Conv"
        assert Conv1d(2, 16).label == "Conv"
        assert Conv1d(2, 16).kernel == 23


class TestBatchNorm:
    def testConstantChannel(self) -> None:
        x = np.full((4, 1, 8), 3.0)
        y, _, _, _ = F.batchnormForward(x, np.ones(1), np.array([0.7]), np.zeros(1), np.ones(1), TRAIN)
        np.testing.assert_allclose(y, 0.7, atol=1e-9)

    def testInferIdentity(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(2, 3, 8))
        y, _, m, v = F.batchnormForward(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), INFER, eps=1e-5)
        np.testing.assert_allclose(y, x / np.sqrt(1.0 + 1e-5), atol=1e-12)
        np.testing.assert_array_equal(m, np.zeros(3))
        np.testing.assert_array_equal(v, np.ones(3))

    def testTrainOutputStatistics(self, rng: np.random.Generator) -> None:
        x = rng.normal(3.0, 5.0, size=(8, 4, 32))
        y, _, _, _ = F.batchnormForward(x, np.ones(4), np.zeros(4), np.zeros(4), np.ones(4), TRAIN, eps=0.0)
        np.testing.assert_allclose(y.mean(axis=(0, 2)), 0.0, atol=1e-6)
        np.testing.assert_allclose(y.var(axis=(0, 2)), 1.0, atol=1e-6)

    def testRunningStatistics(self, rng: np.random.Generator) -> None:
        x = rng.normal(2.0, 3.0, size=(4, 2, 16))
        _, _, m, v = F.batchnormForward(x, np.ones(2), np.zeros(2), np.zeros(2), np.ones(2), TRAIN, momentum=0.1)
        np.testing.assert_allclose(m, 0.1 * x.mean(axis=(0, 2)))
        np.testing.assert_allclose(v, 0.9 + 0.1 * x.var(axis=(0, 2), ddof=1))

    def testLayerUpdatesBuffersOnlyInTrain(self, rng: np.random.Generator) -> None:
        bn = BatchNorm1d(2)
        bn.initialize(rng, "float64")
        bn.forward(rng.normal(size=(4, 2, 8)), INFER)
        np.testing.assert_array_equal(bn.runningMean.data, 0.0)
        bn.forward(rng.normal(5.0, 1.0, size=(4, 2, 8)), TRAIN)
        assert np.all(bn.runningMean.data > 0.3)
        assert not bn.runningMean.trainable

    def testSingleValueInTrain(self) -> None:
        with pytest.raises(RejectedInput):
            F.batchnormForward(np.ones((1, 2, 1)), np.ones(2), np.zeros(2), np.zeros(2), np.ones(2), TRAIN)


class TestActivations:
    def testPointValues(self) -> None:
        assert F.seluForward(np.array([0.0]))[0][0] == 0.0
        assert F.reluForward(np.array([-3.0]))[0][0] == 0.0
        assert F.seluForward(np.array([1.0]))[0][0] == pytest.approx(1.0507, abs=1e-4)

    @pytest.mark.parametrize("mode", [TRAIN, INFER])
    def testZeroDropoutIsIdentity(self, mode: str, rng: np.random.Generator) -> None:
        x = rng.normal(size=(3, 5))
        y, _ = F.dropoutForward(x, 0.0, mode, rng)
        np.testing.assert_array_equal(y, x)

    def testInferDropoutIsIdentity(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(3, 5))
        np.testing.assert_array_equal(F.dropoutForward(x, 0.5, INFER)[0], x)

    def testDropoutIsInverted(self) -> None:
        x = np.ones((200, 100))
        y, _ = F.dropoutForward(x, 0.5, TRAIN, np.random.default_rng(0))
        assert set(np.unique(y)) <= {0.0, 2.0}
        assert abs(y.mean() - 1.0) < 0.05

    def testTrainDropoutNeedsAGenerator(self) -> None:
        with pytest.raises(RejectedInput):
            F.dropoutForward(np.ones((2, 2)), 0.5, TRAIN)

    def testLabels(self) -> None:
        assert Dropout(0.5).label == "Drop(50%)"
        assert Dropout(0.0).label == "Drop(0%)"
        with pytest.raises(RejectedInput):
            Dropout(1.0)


class TestPooling:
    def testMaxpool(self) -> None:
        y, _ = F.maxpool1dForward(np.array([[[1.0, 3.0, 2.0, 0.0]]]))
        np.testing.assert_array_equal(y, [[[3.0, 2.0]]])

    def testTieGoesToTheFirstIndex(self) -> None:
        _, cache = F.maxpool1dForward(np.array([[[5.0, 5.0]]]))
        np.testing.assert_array_equal(F.maxpool1dBackward(np.array([[[1.0]]]), cache), [[[1.0, 0.0]]])

    def testOddLength(self) -> None:
        with pytest.raises(RejectedInput):
            F.maxpool1dForward(np.zeros((1, 1, 5)))

    def testGlobalAverage(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(2, 3, 8))
        np.testing.assert_allclose(F.globalAvgPoolForward(x)[0], x.mean(axis=2))


class TestDenseAndLoss:
    def testIdentityWeights(self, rng: np.random.Generator) -> None:
        x = rng.normal(size=(4, 3))
        np.testing.assert_array_equal(F.fcForward(x, np.eye(3), np.zeros(3))[0], x)

    def testZeroInputGivesTheBias(self) -> None:
        y, _ = F.fcForward(np.zeros((2, 5)), np.ones((3, 5)), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(y, [[1.0, 2.0, 3.0]] * 2)

    def testShapeMismatch(self) -> None:
        with pytest.raises(RejectedInput):
            F.fcForward(np.zeros((2, 4)), np.ones((3, 5)), np.zeros(3))

    @pytest.mark.parametrize(
        "layer,shape",
        [
            (Conv1d(3, 4, 5), (2, 2, 16)),
            (BatchNorm1d(4), (2, 3, 16)),
            (MaxPool1d(), (2, 3, 15)),
            (GlobalAvgPool1d(), (2, 48)),
            (Dense(5, 3), (2, 4)),
        ],
    )
    def testLayersRejectMismatchingInput(self, layer: object, shape: tuple) -> None:
        with pytest.raises(RejectedInput):
            layer.forward(np.zeros(shape), INFER)  # type: ignore

    def testUniformLogits(self) -> None:
        loss, _ = F.softmaxXent(np.zeros((3, 6)), np.array([0, 2, 5]))
        assert loss == pytest.approx(np.log(6.0), abs=1e-12)
        assert loss == pytest.approx(1.7918, abs=1e-4)

    def testSaturation(self) -> None:
        logits = np.zeros((1, 6))
        logits[0, 2] = 1000.0
        loss, grad = F.softmaxXent(logits, np.array([2]))
        assert loss < 1e-6
        assert np.all(np.isfinite(grad))

    def testLabelRange(self) -> None:
        with pytest.raises(RejectedInput):
            F.softmaxXent(np.zeros((2, 6)), np.array([0, 6]))
        with pytest.raises(RejectedInput):
            F.softmaxXent(np.zeros((2, 6)), np.array([-1, 0]))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), classes=st.integers(2, 8))
    def testSoftmaxRowsSumToOne(self, seed: int, classes: int) -> None:
        logits = np.random.default_rng(seed).normal(0.0, 10.0, size=(5, classes))
        p = F.softmax(logits)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(p >= 0.0)

    def testLossGradient(self) -> None:
        for seed in range(INSTANCES):
            rng = np.random.default_rng(seed)
            logits = rng.normal(size=(4, 6))
            labels = rng.integers(0, 6, size=4)
            _, g = F.softmaxXent(logits, labels)
            assert gradientCheck(lambda z: F.softmaxXent(z, labels)[0], logits, g) < TOLERANCE


LAYER_CASES = [
    ("conv1d", lambda: Conv1d(3, 2, 5), (3, 8), TRAIN),
    ("conv1d_1x1", lambda: Conv1d(2, 3, 1), (2, 6), TRAIN),
    ("batchnorm_train", lambda: BatchNorm1d(3), (3, 8), TRAIN),
    ("batchnorm_infer", lambda: BatchNorm1d(3), (3, 8), INFER),
    ("relu", lambda: ReLU(), (3, 8), TRAIN),
    ("selu", lambda: SELU(), (3, 8), TRAIN),
    ("dropout", lambda: Dropout(0.5), (3, 8), TRAIN),
    ("maxpool", lambda: MaxPool1d(), (3, 8), TRAIN),
    ("global_avgpool", lambda: GlobalAvgPool1d(), (3, 8), TRAIN),
    ("flatten", lambda: Flatten(), (3, 4), TRAIN),
    ("fc", lambda: Dense(5, 3), (5,), TRAIN),
    ("residual_unit", lambda: ResidualUnit(2, 3), (2, 8), TRAIN),
]


class TestGradients:
    @pytest.mark.parametrize("name,make,shape,mode", LAYER_CASES, ids=[c[0] for c in LAYER_CASES])
    def testFiniteDifferences(self, name: str, make, shape: tuple, mode: str) -> None:
        for seed in range(INSTANCES):
            errors = checkLayer(make(), shape, seed=seed, mode=mode)
            assert "input" in errors
            worst = max(errors.values())
            assert worst < TOLERANCE, f"{name} seed {seed}: {errors}"

    def testParameterGradientsAreChecked(self) -> None:
        errors = checkLayer(Conv1d(3, 2, 5), (3, 8), seed=0)
        assert set(errors) == {"input", "0.w", "1.b"}

    def testSequentialChainsLayers(self) -> None:
        seq = Sequential([Conv1d(2, 3, 3), BatchNorm1d(3), SELU(), MaxPool1d(), Flatten(), Dense(12, 4)])
        assert seq.outputShape((2, 8)) == (4,)
        assert max(checkLayer(seq, (2, 8), seed=3, batch=3).values()) < TOLERANCE

    def testResidualUnitWithSilentBranchIsIdentity(self, rng: np.random.Generator) -> None:
        unit = ResidualUnit(4, 5)
        unit.initialize(rng, "float64")
        for p in unit.params():
            if p.trainable:
                p.data = np.zeros_like(p.data)
        x = rng.normal(size=(2, 4, 16))
        np.testing.assert_array_equal(unit.forward(x, TRAIN), x)
        np.testing.assert_array_equal(unit.forward(x, INFER), x)

    def testResidualTraceEndsWithTheAddition(self) -> None:
        rows = ResidualUnit(32, 23).trace((32, 512))
        assert [r[0] for r in rows] == ["Conv", "Batch Normalization", "ReLU_1", "Conv", "Batch Normalization", "ReLU_2", "Addition(Input, ReLU_2)"]
        assert all(shapeText(r[1]) == "32 × 512" for r in rows)


class TestOptimizer:
    def _param(self, value: float = 0.0) -> Param:
        return Param("w", np.array([value]))

    def testTwoHandComputedSteps(self) -> None:
        p = self._param()
        state = OptimizerState([p], lr=0.1, momentum=0.9)
        for expected in (-0.1, -0.29):
            p.grad = np.array([1.0])
            sgdmStep([p], state)
            assert p.data[0] == pytest.approx(expected, abs=1e-12)
        assert state.steps == 2

    def testZeroMomentumIsPlainSgd(self) -> None:
        p = self._param(1.0)
        state = OptimizerState([p], lr=0.5, momentum=0.0)
        for _ in range(3):
            p.grad = np.array([2.0])
            state.step()
        assert p.data[0] == pytest.approx(1.0 - 3 * 0.5 * 2.0)

    def testZeroLearningRateOnlyDecaysVelocity(self) -> None:
        p = self._param(1.0)
        state = OptimizerState([p], lr=0.0, momentum=0.9)
        p.grad = np.array([5.0])
        state.step()
        assert p.data[0] == 1.0
        assert state.velocity[0][0] == 0.0

        state.velocity[0][0] = 1.0
        state.step()
        assert state.velocity[0][0] == pytest.approx(0.9)

    def testBuffersAreNotOptimized(self) -> None:
        bn = BatchNorm1d(2)
        state = OptimizerState(bn.params(), lr=0.1)
        assert [p.name for p in state.params] == ["gamma", "beta"]

    def testStateBelongsToItsParameters(self) -> None:
        state = OptimizerState([self._param()], lr=0.1)
        with pytest.raises(RejectedInput):
            sgdmStep([self._param()], state)

    @pytest.mark.parametrize("lr,momentum", [(-0.1, 0.9), (0.1, 1.0), (0.1, -0.1)])
    def testHyperparameters(self, lr: float, momentum: float) -> None:
        with pytest.raises(RejectedInput):
            OptimizerState([self._param()], lr=lr, momentum=momentum)


def _checkpoint(dtype: str = "float64") -> Checkpoint:
    rng = np.random.default_rng(8)
    return Checkpoint(
        modelKind="cnn",
        classNames=["BPSK", "QPSK"],
        specText="model cnn classes=2",
        params=[("0.w", rng.normal(size=(3, 2, 5)).astype(dtype)), ("0.b", rng.normal(size=3).astype(dtype))],
        velocity=[rng.normal(size=(3, 2, 5)).astype(dtype), rng.normal(size=3).astype(dtype)],
        epoch=4,
        optimizer={"lr": 0.01, "momentum": 0.9, "steps": 40},
        history={"epochs": []},
        trainConfig='{"seed": 1}',
        dtype=dtype,
        trainData={"profile_id": "A"},
    )


class TestCheckpoint:
    @pytest.mark.parametrize("dtype", ["float32", "float64"])
    def testRoundTripIsBitExact(self, dtype: str, tmp_path: pathlib.Path) -> None:
        ckpt = _checkpoint(dtype)
        path = os.path.join(str(tmp_path), "c.modw")
        writeCheckpoint(ckpt, path)
        back = readCheckpoint(path)

        assert back.dtype == dtype
        assert [n for n, _ in back.params] == ["0.w", "0.b"]
        for (_, a), (_, b) in zip(ckpt.params, back.params):
            assert a.tobytes() == b.tobytes()
        for a, b in zip(ckpt.velocity or [], back.velocity or []):
            assert a.tobytes() == b.tobytes()
        assert back.epoch == 4
        assert back.optimizer["steps"] == 40
        assert back.trainData == {"profile_id": "A"}
        assert not os.path.exists(path + ".tmp")

    def testErrorsAreDistinct(self) -> None:
        data = checkpointBytes(_checkpoint())
        with pytest.raises(BadMagic):
            readCheckpointBytes(b"MODF" + data[4:])
        with pytest.raises(BadVersion):
            readCheckpointBytes(data[:4] + struct.pack("<H", 7) + data[6:])
        with pytest.raises(ChecksumMismatch):
            readCheckpointBytes(data[:-9])
        flipped = bytearray(data)
        flipped[-20] ^= 0x01
        with pytest.raises(ChecksumMismatch):
            readCheckpointBytes(bytes(flipped))

    def testMissingFile(self, tmp_path: pathlib.Path) -> None:
        with pytest.raises(CheckpointError):
            readCheckpoint(os.path.join(str(tmp_path), "none.modw"))
