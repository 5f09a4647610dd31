"""Signal generator: constellations, SRRC, clean synthesis, noise calibration, dataset generation."""

import os
import pathlib
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqshift.exceptions import RejectedInput
from iqshift.helpers import meanPower
from iqshift.siggen.modulationClass import ModulationClass, ALL_CLASSES, constellation, mapSymbols
from iqshift.siggen.srrc import srrcPulse, srrcTaps, nyquistIsi, DEFAULT_SPAN_SYMBOLS
from iqshift.siggen.frameMeta import FrameMeta
from iqshift.siggen.generatorProfile import (
    PROFILE_A,
    PROFILE_B,
    TOTAL,
    INBAND,
    builtinProfile,
    parseGrid,
    parseProfileText,
    saveProfile,
    loadProfile,
    snrOffsetEstimate,
)
from iqshift.siggen.synthesis import (
    symbolsNeeded,
    applyCfo,
    synthesizeClean,
    noiseVariance,
    addNoise,
    measuredSnrDb,
)
from iqshift.siggen.generator import (
    frameSeed,
    synthesizeSignal,
    generateDataset,
    expectedFrameCount,
    fullScaleCounts,
)
from iqshift.datastore.labeledFrame import framePower

from conftest import TINY_CLASSES, TINY_GRID

ISI_LIMIT = 1e-3
SNR_TOLERANCE_DB = 0.3


def _meta(cls: ModulationClass = ModulationClass.QPSK, rolloff: float = 0.35, cfo: float = 0.0, sps: int = 8, power: float = 0.0) -> FrameMeta:
    return FrameMeta(cls, 10.0, rolloff, cfo, sps, power, 0, "A")


class TestConstellations:
    def testBpskZeroMapsToPlusOne(self) -> None:
        np.testing.assert_array_equal(mapSymbols(np.array([0]), ModulationClass.BPSK), np.array([1.0 + 0.0j]))

    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def testUnitAveragePower(self, cls: ModulationClass) -> None:
        table = constellation(cls)
        assert table.size == cls.order
        assert abs(np.mean(np.abs(table) ** 2) - 1.0) < 1e-12

    def testQam16Scale(self) -> None:
        table = constellation(ModulationClass.QAM16)
        assert np.isclose(np.min(np.abs(table.real)), 1.0 / np.sqrt(10.0))
        assert np.isclose(np.max(np.abs(table.real)), 3.0 / np.sqrt(10.0))

    @pytest.mark.parametrize("cls", [ModulationClass.QPSK, ModulationClass.PSK8])
    def testPskNeighboursDifferInOneBit(self, cls: ModulationClass) -> None:
        table = constellation(cls)
        np.testing.assert_allclose(np.abs(table), 1.0, atol=1e-12)
        assert len(set(np.round(table, 9))) == cls.order

        labels = np.argsort(np.angle(table))
        for a, b in zip(labels, np.roll(labels, -1)):
            assert bin(int(a) ^ int(b)).count("1") == 1

    def testQamGridNeighboursDifferInOneBit(self) -> None:
        table = constellation(ModulationClass.QAM64)
        step = 2.0 / np.sqrt(42.0)  # unit grid spacing over the rms of a 64-point grid
        for a in range(table.size):
            for b in range(table.size):
                if np.isclose(abs(table[a] - table[b]), step):
                    assert bin(a ^ b).count("1") == 1

    def testBitCountMustDivide(self) -> None:
        with pytest.raises(RejectedInput):
            mapSymbols(np.array([0, 1, 1]), ModulationClass.QPSK)

    def testNamesResolve(self) -> None:
        assert ModulationClass.fromName("8-psk") is ModulationClass.PSK8
        assert ModulationClass.fromName("qam256") is ModulationClass.QAM256
        with pytest.raises(RejectedInput):
            ModulationClass.fromName("GMSK")

    @given(
        bits=st.lists(st.integers(0, 1), max_size=96),
        cls=st.sampled_from(ALL_CLASSES),
    )
    def testSymbolsLieOnTheConstellation(self, bits: list, cls: ModulationClass) -> None:
        k = cls.bitsPerSymbol
        bits = bits[: len(bits) - len(bits) % k]
        symbols = mapSymbols(np.array(bits, dtype=np.int64), cls)
        assert symbols.size == len(bits) // k
        table = constellation(cls)
        for s in symbols:
            assert np.min(np.abs(table - s)) < 1e-12


class TestSrrc:
    def testLengthAndSymmetry(self) -> None:
        taps = srrcTaps(0.35, 8)
        assert taps.size == DEFAULT_SPAN_SYMBOLS * 8 + 1
        np.testing.assert_allclose(taps, taps[::-1], atol=1e-15)

    @pytest.mark.parametrize("rolloff", [0.2, 0.35, 0.5])
    @pytest.mark.parametrize("sps", [8, 10, 12])
    def testNyquistIsi(self, rolloff: float, sps: int) -> None:
        taps = srrcTaps(rolloff, sps)
        r = np.convolve(taps, taps)
        assert abs(r[(r.size - 1) // 2] - 1.0) < 1e-12
        assert float(np.max(nyquistIsi(taps, sps))) < ISI_LIMIT

    def testSmallRolloffApproachesSinc(self) -> None:
        t = np.arange(-40, 41) / 8.0
        np.testing.assert_allclose(srrcPulse(t, 1e-6), np.sinc(t), atol=1e-4)

    def testSingularPointsAreContinuous(self) -> None:
        for rolloff in (0.25, 0.5, 1.0):
            edge = 1.0 / (4.0 * rolloff)
            near = srrcPulse(np.array([edge, edge + 1e-7, 0.0, 1e-7]), rolloff)
            assert np.all(np.isfinite(near))
            assert abs(near[0] - near[1]) < 1e-5
            assert abs(near[2] - near[3]) < 1e-5

    @pytest.mark.parametrize("rolloff,sps,span", [(0.0, 8, 64), (1.2, 8, 64), (0.35, 1, 64), (0.35, 8, 7)])
    def testRejectsBadParameters(self, rolloff: float, sps: int, span: int) -> None:
        with pytest.raises(RejectedInput):
            srrcTaps(rolloff, sps, span)


class TestSynthesis:
    def testRealChainStaysReal(self, rng: np.random.Generator) -> None:
        meta = _meta(ModulationClass.BPSK)
        x = synthesizeClean(meta, symbolsNeeded(1024, meta.sps), rng)
        assert x.size == 1024
        assert float(np.max(np.abs(x.imag))) < 1e-9

    @pytest.mark.parametrize("power", [0.0, 3.0, -3.0])
    def testPowerScale(self, power: float, rng: np.random.Generator) -> None:
        meta = _meta(ModulationClass.QAM64, power=power)
        x = synthesizeClean(meta, symbolsNeeded(1024, meta.sps), rng)
        assert abs(10.0 * np.log10(meanPower(x)) - power) < 0.2

    def testCfoRotatesPerSample(self) -> None:
        y = applyCfo(np.ones(8, dtype=complex), 0.25)
        np.testing.assert_allclose(y[1:] / y[:-1], 1j, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        cfo=st.floats(-0.5, 0.5, allow_nan=False),
        n=st.integers(1, 2048),
    )
    def testOppositeCfoRestoresTheSignal(self, seed: int, cfo: float, n: int) -> None:
        rng = np.random.default_rng(seed)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        np.testing.assert_allclose(applyCfo(applyCfo(x, cfo), -cfo), x, rtol=0, atol=1e-9)

    def testTooFewSymbols(self, rng: np.random.Generator) -> None:
        meta = _meta()
        with pytest.raises(RejectedInput):
            synthesizeClean(meta, symbolsNeeded(1024, meta.sps) - 1, rng)

    def testCfoFrameIsNotReal(self, rng: np.random.Generator) -> None:
        x = synthesizeClean(_meta(ModulationClass.BPSK, cfo=0.01), symbolsNeeded(1024, 8), rng)
        assert float(np.max(np.abs(x.imag))) > 0.1


class TestNoise:
    def testTotalVarianceAlgebra(self) -> None:
        assert noiseVariance(1.0, 0.0, TOTAL, 0.35, 8) == pytest.approx(1.0)

    def testInbandOffset(self) -> None:
        ratio = noiseVariance(1.0, 5.0, INBAND, 0.35, 10) / noiseVariance(1.0, 5.0, TOTAL, 0.35, 10)
        assert 10.0 * np.log10(ratio) == pytest.approx(8.697, abs=0.01)

    @pytest.mark.parametrize("snr", [-5.0, 0.0, 12.0])
    def testMeasuredSnr(self, snr: float, rng: np.random.Generator) -> None:
        x = np.exp(2j * np.pi * rng.random(100000))
        y = addNoise(x, snr, TOTAL, 0.35, 8, rng)
        assert abs(measuredSnrDb(x, y) - snr) < SNR_TOLERANCE_DB

    def testMeasuredInbandSnr(self, rng: np.random.Generator) -> None:
        x = np.exp(2j * np.pi * rng.random(100000))
        y = addNoise(x, 6.0, INBAND, 0.5, 12, rng)
        total = measuredSnrDb(x, y)
        assert abs(total + 10.0 * np.log10(12 / 1.5) - 6.0) < SNR_TOLERANCE_DB

    def testRejects(self, rng: np.random.Generator) -> None:
        with pytest.raises(RejectedInput):
            addNoise(np.zeros(0, dtype=complex), 0.0, TOTAL, 0.35, 8, rng)
        with pytest.raises(RejectedInput):
            addNoise(np.ones(4, dtype=complex), float("nan"), TOTAL, 0.35, 8, rng)
        with pytest.raises(RejectedInput):
            addNoise(np.ones(4, dtype=complex), 0.0, "PEAK", 0.35, 8, rng)


class TestProfiles:
    def testOffsetSinglePoint(self) -> None:
        p = dataclasses.replace(PROFILE_B, spsChoices=(10,), rolloffRange=(0.35, 0.35))
        assert snrOffsetEstimate(p) == pytest.approx(8.70, abs=0.01)

    def testOffsetRoundNumbers(self) -> None:
        p = dataclasses.replace(PROFILE_B, spsChoices=(4,), rolloffRange=(1.0, 1.0))
        assert snrOffsetEstimate(p) == pytest.approx(3.0103, abs=1e-3)

    def testDefaultProfileBNearEightDb(self) -> None:
        assert abs(snrOffsetEstimate(PROFILE_B) - 8.0) <= 1.5

    def testOffsetUndefinedForTotal(self) -> None:
        with pytest.raises(RejectedInput):
            snrOffsetEstimate(PROFILE_A)

    def testBuiltins(self) -> None:
        assert builtinProfile("a") is PROFILE_A
        assert PROFILE_B.framesPerSignal == 32
        assert PROFILE_A.framesPerSignal == 1
        with pytest.raises(RejectedInput):
            builtinProfile("C")

    def testProfileTextRoundTrip(self, tmp_path: pathlib.Path) -> None:
        path = os.path.join(str(tmp_path), "b.profile")
        saveProfile(PROFILE_B, path)
        assert loadProfile(path) == PROFILE_B
        assert parseProfileText(PROFILE_A.toText()) == PROFILE_A

    def testProfileRulesAreChecked(self) -> None:
        text = PROFILE_A.toText().replace("snr_convention = TOTAL", "snr_convention = INBAND")
        with pytest.raises(RejectedInput):
            parseProfileText(text)
        with pytest.raises(RejectedInput):
            parseProfileText("profile_id = A\nthis line has no value\n")

    def testGrids(self) -> None:
        assert parseGrid("-4:2:10") == [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
        assert parseGrid("0, 5,10") == [0.0, 5.0, 10.0]
        with pytest.raises(RejectedInput):
            parseGrid("0:0:10")


class TestGenerator:
    def testFrameSeedIsKeyedOnCoordinates(self) -> None:
        assert frameSeed(7, 1, 2, 3) == frameSeed(7, 1, 2, 3)
        seeds = {frameSeed(7, c, s, i) for c in range(3) for s in range(3) for i in range(3)}
        assert len(seeds) == 27
        assert frameSeed(7, 1, 2, 3) != frameSeed(8, 1, 2, 3)

    def testSignalIsReproducible(self) -> None:
        a = synthesizeSignal(PROFILE_B, ModulationClass.QAM16, 4.0, 99)
        b = synthesizeSignal(PROFILE_B, ModulationClass.QAM16, 4.0, 99)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[2] == b[2]
        assert a[0].size == 32768

    def testProfileACounts(self, tinyDatasetA) -> None:
        assert len(tinyDatasetA) == expectedFrameCount(PROFILE_A, 2, 2, 8) == 32
        assert tinyDatasetA.classes == ["BPSK", "QPSK"]
        assert set(tinyDatasetA.cellCounts().values()) == {8}
        assert np.all(tinyDatasetA.meta["sps"] == 8)
        assert np.all(tinyDatasetA.meta["cfo"] == 0.0)
        np.testing.assert_allclose(tinyDatasetA.meta["rolloff"], 0.35, rtol=1e-6)
        assert tinyDatasetA.manifest.snrOffsetDb is None

    def testFramesHaveUnitPower(self, tinyDatasetA, tinyDatasetB) -> None:
        for ds in (tinyDatasetA, tinyDatasetB):
            for i in range(0, len(ds), 7):
                assert abs(framePower(ds.iq[i]) - 1.0) < 1e-5

    def testProfileBSlicesParents(self, tinyDatasetB, shortProfileB) -> None:
        assert len(tinyDatasetB) == expectedFrameCount(shortProfileB, 2, 2, 8) == 128
        assert tinyDatasetB.manifest.framesPerCell == 32
        assert tinyDatasetB.manifest.framesPerSignal == 4
        seeds, counts = np.unique(tinyDatasetB.meta["seed"], return_counts=True)
        assert seeds.size == 32
        assert set(counts) == {4}
        assert np.all(np.isin(tinyDatasetB.meta["sps"], [8, 10, 12]))
        assert tinyDatasetB.manifest.snrConvention == INBAND
        assert tinyDatasetB.manifest.snrOffsetDb == pytest.approx(snrOffsetEstimate(shortProfileB))

    def testByteIdenticalAcrossRunsAndWorkers(self) -> None:
        a = generateDataset(PROFILE_A, TINY_CLASSES, TINY_GRID, framesPerCell=40, masterSeed=11, workers=1)
        b = generateDataset(PROFILE_A, TINY_CLASSES, TINY_GRID, framesPerCell=40, masterSeed=11, workers=2)
        assert a.iq.tobytes() == b.iq.tobytes()
        assert a.meta.tobytes() == b.meta.tobytes()

    def testCellsDoNotDependOnTheRestOfTheRequest(self, tinyDatasetA) -> None:
        # QPSK at 0 dB is the same whether or not BPSK and 10 dB are generated too
        alone = generateDataset(PROFILE_A, [ModulationClass.QPSK], [0.0], framesPerCell=8, masterSeed=3)
        qpsk0 = np.flatnonzero((tinyDatasetA.meta["cls"] == 1) & (tinyDatasetA.meta["snr"] == 0.0))
        np.testing.assert_array_equal(alone.iq, tinyDatasetA.iq[qpsk0])

    def testDeskScaleArithmetic(self) -> None:
        assert expectedFrameCount(PROFILE_A, 6, len(parseGrid("-4:2:10")), 250) == 12000

    def testFullScaleCounts(self) -> None:
        counts = fullScaleCounts()
        assert counts["A_frames"] == 2555904
        assert counts["B_long_signals"] == 112000
        assert counts["B_frames_per_signal"] == 32
        assert counts["B_frames"] == 3584000

    def testFullScaleCountsFollowTheProfiles(self) -> None:
        shortA = dataclasses.replace(PROFILE_A, snrGridDb=tuple(parseGrid("0:2:10")))
        halfB = dataclasses.replace(PROFILE_B, longSignalLen=16384)
        counts = fullScaleCounts(shortA, halfB)
        assert counts["A_frames"] == 24 * 6 * 4096
        assert counts["B_frames_per_signal"] == 16
        assert counts["B_frames"] == 112000 * 16

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"framesPerCell": 0},
            {"snrGridDb": []},
            {"classes": []},
            {"classes": [ModulationClass.BPSK, ModulationClass.BPSK]},
        ],
    )
    def testRejectsBadRequests(self, kwargs: dict) -> None:
        args = {"classes": TINY_CLASSES, "snrGridDb": TINY_GRID, "framesPerCell": 1}
        args.update(kwargs)
        with pytest.raises(RejectedInput):
            generateDataset(PROFILE_A, **args)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32))
    def testDrawnParametersStayInRange(self, seed: int) -> None:
        params = PROFILE_B.drawFrameParams(np.random.default_rng(seed))
        assert 0.2 <= params["rolloff"] <= 0.5
        assert -0.01 <= params["cfo"] <= 0.01
        assert params["sps"] in (8, 10, 12)
        assert -3.0 <= params["powerScaleDb"] <= 3.0
