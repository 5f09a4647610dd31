import os
import json
import pathlib

from typing import (
    List,
)

import pytest

from iqshift import main as cli
from iqshift.exceptions import SelftestFailed
from iqshift.version import VERSION
from iqshift.datastore.modfFormat import readDataset


def _run(args: List[str], capsys: pytest.CaptureFixture) -> tuple:
    code = cli.run(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def testNoArguments(self, capsys: pytest.CaptureFixture) -> None:
        code, out, _ = _run([], capsys)
        assert code == 1
        assert "generate" in out and "selftest" in out

    def testHelpAndVersion(self, capsys: pytest.CaptureFixture) -> None:
        code, out, _ = _run(["--help"], capsys)
        assert code == 0
        assert "exit codes: 0 success, 1 usage error, 2 data error, 3 selftest failure" in out

        code, out, _ = _run(["-V"], capsys)
        assert code == 0
        assert out.strip() == VERSION

    @pytest.mark.parametrize("subcommand", sorted(cli.OPTIONS))
    def testSubcommandHelpListsEveryFlag(self, subcommand: str, capsys: pytest.CaptureFixture) -> None:
        code, out, _ = _run([subcommand, "-h"], capsys)
        assert code == 0
        for flag, _, _ in cli.OPTIONS[subcommand] + cli.COMMON:
            assert f"--{flag}" in out

    @pytest.mark.parametrize(
        "args",
        [
            ["frobnicate"],
            ["generate", "--bogus"],
            ["generate", "stray"],
            ["generate", "--snr", "ten:2:20"],
            ["generate", "--classes", "BPSK,FSK"],
            ["generate", "--fractions", "0.5,0.5,0.5"],
            ["generate", "--frames-per-cell", "0"],
            ["generate", "--seed", "seven"],
            ["train"],
            ["train", "--data", "x.modf", "--momentum", "1.5"],
            ["eval", "--data", "x.modf"],
            ["report"],
        ],
    )
    def testUsageErrors(self, args: List[str], capsys: pytest.CaptureFixture) -> None:
        code, _, err = _run(args, capsys)
        assert code == 1
        assert err.startswith("error: kind=UsageError exit=1 msg=")
        assert len(err.strip().splitlines()) == 1

    def testMissingFilesAreDataErrors(self, tmp_path: pathlib.Path, capsys: pytest.CaptureFixture) -> None:
        missing = os.path.join(str(tmp_path), "missing.modf")
        code, _, err = _run(["train", "--data", missing], capsys)
        assert code == 2
        assert "kind=StructuralError exit=2" in err

        code, _, err = _run(["report", "--report", os.path.join(str(tmp_path), "missing.json")], capsys)
        assert code == 2

    def testUnregisteredImportFormat(self, tmp_path: pathlib.Path, capsys: pytest.CaptureFixture) -> None:
        code, _, err = _run(["generate", "--import-format", "rml2016", "--data", str(tmp_path / "x.h5")], capsys)
        assert code == 2
        assert "kind=UnsupportedFormat" in err


class TestSelftest:
    def testPass(self, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
        monkeypatch.setattr(cli, "runSelftest", lambda checks=None: {"a": True, "b": True})
        code, out, _ = _run(["selftest"], capsys)
        assert code == 0
        assert "all 2 checks passed" in out

    def testOnlySelectsGroups(self, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
        seen: List[List[str]] = []

        def recording(checks=None) -> dict:
            seen.append([name for name, _ in checks])
            return {name: True for name, _ in checks}

        monkeypatch.setattr(cli, "runSelftest", recording)
        code, out, _ = _run(["selftest", "--only", "loss,arith"], capsys)
        assert code == 0
        assert seen[0] and all(name.split(":")[0] in ("loss", "arith") for name in seen[0])
        assert f"all {len(seen[0])} checks passed" in out

    def testOnlyRejectsUnknownGroups(self, capsys: pytest.CaptureFixture) -> None:
        code, _, err = _run(["selftest", "--only", "gradient,bogus"], capsys)
        assert code == 1
        assert err.startswith("error: kind=UsageError exit=1 msg=")

    def testFailure(self, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
        def failing(checks=None) -> dict:
            raise SelftestFailed(["grad:conv1d", "dsp:isi"])

        monkeypatch.setattr(cli, "runSelftest", failing)
        code, _, err = _run(["selftest"], capsys)
        assert code == 3
        assert "kind=SelftestFailed exit=3" in err
        assert "grad:conv1d,dsp:isi" in err


@pytest.mark.slow
class TestPipeline:
    def testGenerateTrainEvalReport(self, tmp_path: pathlib.Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
        monkeypatch.setenv("IQSHIFT_OUT", str(tmp_path))

        code, out, _ = _run(
            ["generate", "--profile", "A", "--frames-per-cell", "8", "--snr", "0,10", "--classes", "BPSK,QPSK", "--seed", "3", "--deterministic", "--out", "ds.modf"],
            capsys,
        )
        assert code == 0
        ds = readDataset(os.path.join(str(tmp_path), "ds.modf"))
        assert len(ds) == 32
        assert ds.manifest.splitCounts() == {"TRAIN": 24, "VAL": 4, "TEST": 4}
        assert "32 frames" in out

        data = os.path.join(str(tmp_path), "ds.modf")
        code, out, _ = _run(["train", "--data", data, "--epochs", "2", "--batch", "8", "--deterministic", "--out", "run"], capsys)
        assert code == 0
        assert out.splitlines()[0].startswith("epoch\ttrain_loss")
        checkpoint = os.path.join(str(tmp_path), "run", "best.modw")
        assert os.path.isfile(checkpoint)
        assert os.path.isfile(os.path.join(str(tmp_path), "run", "last.modw"))

        # best.modw is evaluated and the final checkpoint of the run is reported next to it
        code, out, _ = _run(["eval", "--checkpoint", checkpoint, "--data", data], capsys)
        assert code == 0
        assert "final checkpoint epoch 2" in out
        within = os.path.join(str(tmp_path), "report.json")
        with open(within, encoding="utf-8") as f:
            d = json.load(f)
        assert d["total"] == 4
        assert d["checkpoint_epoch"] in (1, 2)
        assert d["final"]["epoch"] == 2
        assert len(d["final"]["accuracy_by_snr"]) == 2

        last = os.path.join(str(tmp_path), "run", "last.modw")
        code, out, _ = _run(["eval", "--checkpoint", last, "--data", data, "--out", "last.json"], capsys)
        assert code == 0
        with open(os.path.join(str(tmp_path), "last.json"), encoding="utf-8") as f:
            assert json.load(f)["final"] is None

        code, out, _ = _run(["cross-eval", "--checkpoint", checkpoint, "--data", data, "--offset", "8"], capsys)
        assert code == 0
        cross = os.path.join(str(tmp_path), "cross-report.json")
        with open(cross, encoding="utf-8") as f:
            assert json.load(f)["snr_offset_db"] == 8.0

        tables = os.path.join(str(tmp_path), "tables")
        code, out, _ = _run(["report", "--report", cross, "--within", within, "--out", tables], capsys)
        assert code == 0
        assert os.path.isfile(os.path.join(tables, "accuracy.tsv"))
        assert os.path.isfile(os.path.join(tables, "confusion.tsv"))
        assert "gap 0.0000" in out
        assert "final checkpoint epoch 2" in out
        with open(os.path.join(tables, "accuracy.tsv"), encoding="utf-8") as f:
            assert f.readline().rstrip("\n").endswith("\tframes\tfinal_accuracy")
