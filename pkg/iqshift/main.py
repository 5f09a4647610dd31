#!/usr/bin/python3

import os
import getopt
import sys
import logging
import contextlib
import dataclasses

from typing import (
    Optional,
    Tuple,
    Any,
    List,
    Dict,
    Callable,
    Iterator,
    Type,
)

from .version import VERSION
from .exceptions import (
    IqShiftException,
    UsageError,
    SelftestFailed,
)
from .helpers import (
    setVerbose,
    isDeterministicEnv,
    resolveOutPath,
)
from .context.parameterContext import (
    ParameterContext,
    RunConfig,
    TrainConfig,
)
from .siggen.generatorProfile import profileFromName, parseGrid
from .siggen.modulationClass import ModulationClass, ALL_CLASSES
from .siggen.generator import generateDataset
from .datastore.dataset import Dataset, partition, DEFAULT_FRACTIONS
from .datastore.modfFormat import writeDataset, readDataset
from .datastore.converters import importExternal
from .models.modelZoo import buildModel
from .nn.checkpoint import readCheckpoint
from .training.trainer import train, resume, modelFromCheckpoint
from .evaluation.evalReport import EvalReport
from .evaluation.evaluator import (
    evaluate,
    crossEvaluate,
    retentionSummary,
    compareReports,
    DEFAULT_RETENTION_THRESHOLD,
)
from .selftest import runSelftest, selectChecks

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

EXIT_OK: int = 0
EXIT_USAGE: int = 1
EXIT_DATA: int = 2
EXIT_SELFTEST: int = 3

# desk-scale grid used when generating profile A without --snr
DESK_SNR_GRID_A: str = "-4:2:10"

Flag = Tuple[str, Optional[str], str]  # long name, value placeholder (None: no value), help

COMMON: List[Flag] = [
    ("help", None, "print the flags of this subcommand and exit"),
    ("verbose", None, "debug logging on stderr"),
]

OPTIONS: Dict[str, List[Flag]] = {
    "generate": [
        ("profile", "A|B|path", "built-in profile A or B, or a profile file (default A)"),
        ("frames-per-cell", "n", "signals per (class, snr) cell, default 250; a profile B signal yields 32 frames"),
        ("snr", "grid", f"lo:step:hi or a comma list; default {DESK_SNR_GRID_A} for A, the profile grid otherwise"),
        ("classes", "list", "comma list of classes, default all six"),
        ("fractions", "t,v,s", "train,val,test fractions, default 0.75,0.125,0.125"),
        ("seed", "n", "master seed, default 7"),
        ("workers", "n", "generator processes, default the number of cores"),
        ("deterministic", None, "single worker reference mode"),
        ("import-format", "tag", "import --data with a registered converter instead of generating"),
        ("data", "path", "external dataset read by --import-format"),
        ("out", "path", "MODF output file, default dataset-<profile>.modf"),
    ],
    "train": [
        ("model", "cnn|resnet", "architecture, default cnn"),
        ("data", "path", "MODF dataset with TRAIN and VAL splits"),
        ("epochs", "n", "epochs, default 12"),
        ("batch", "n", "mini-batch size, default 256"),
        ("lr", "x", "learning rate, default 0.01"),
        ("momentum", "x", "momentum in [0, 1), default 0.9"),
        ("precision", "float32|float64", "arithmetic precision, default float32"),
        ("checkpoint-every", "n", "write epoch-NNN.modw every n epochs, default 1"),
        ("seed", "n", "initialization, shuffle and dropout seed, default 7"),
        ("resume", "path", "continue from a MODW checkpoint"),
        ("deterministic", None, "64-bit reference mode"),
        ("out", "dir", "run directory for checkpoints and history, default run-<model>"),
    ],
    "eval": [
        ("checkpoint", "path", "MODW checkpoint to evaluate"),
        ("final", "path", "final checkpoint of the same run to report alongside, default last.modw next to a best.modw"),
        ("data", "path", "MODF dataset"),
        ("split", "name", "TRAIN, VAL or TEST, default TEST"),
        ("map", "a=b,...", "map dataset class a onto model class b"),
        ("batch", "n", "frames per forward pass, default 512"),
        ("deterministic", None, "64-bit reference mode"),
        ("out", "path", "report file, default report.json"),
    ],
    "cross-eval": [
        ("checkpoint", "path", "MODW checkpoint trained on another profile"),
        ("final", "path", "final checkpoint of the same run to report alongside, default last.modw next to a best.modw"),
        ("data", "path", "MODF dataset of the test profile"),
        ("split", "name", "TRAIN, VAL or TEST, default TEST"),
        ("map", "a=b,...", "map dataset class a onto model class b"),
        ("offset", "dB", "in-band minus total SNR offset, default from the datasets"),
        ("batch", "n", "frames per forward pass, default 512"),
        ("deterministic", None, "64-bit reference mode"),
        ("out", "path", "report file, default cross-report.json"),
    ],
    "report": [
        ("report", "path", "report written by eval or cross-eval"),
        ("within", "path", "within-dataset report to compare against"),
        ("threshold", "x", f"retention recall threshold, default {DEFAULT_RETENTION_THRESHOLD}"),
        ("out", "dir", "directory for accuracy.tsv and confusion.tsv, default next to the report"),
    ],
    "selftest": [
        ("only", "group,...", "run only these check groups: gradient, loss, dsp, arith"),
    ],
}


def usage(subcommand: Optional[str] = None) -> None:
    name = os.path.basename(sys.argv[0])

    if subcommand is None:
        print(
            f"""
{name} <subcommand> [flags]

    generate     synthesize a profile A or B dataset, partition it, write MODF
    train        train the cnn or resnet on a dataset, write MODW checkpoints and history
    eval         evaluate a checkpoint on the test split of a dataset
    cross-eval   evaluate on a dataset of another profile, snr axis in both conventions
    report       write flat tables and the retained classes of a report
    selftest     run the gradient and dsp property suites

    [ -h | --help ]
        print this text, or the flags of a subcommand, and exit

    [ -V | --version ]
        print the build version string and exit

    environment: LOGLEVEL, IQSHIFT_OUT (default output directory), IQSHIFT=DETERMINISTIC
    exit codes: 0 success, 1 usage error, 2 data error, 3 selftest failure

    example: {name} generate --profile A --frames-per-cell 250 --seed 7 --out dsA.modf
    example: {name} train --model cnn --data dsA.modf --epochs 12 --batch 256
"""
        )
        return

    print(f"\n{name} {subcommand}\n")
    for flag, value, text in OPTIONS[subcommand] + COMMON:
        short = " -h |" if flag == "help" else (" -v |" if flag == "verbose" else "")
        arg = f" <{value}>" if value else ""
        print(f"    [{short} --{flag}{arg} ]\n        {text}\n")


def reportError(
    e: BaseException,
    code: int,
) -> int:
    text = " ".join(str(e).split())
    print(f"error: kind={type(e).__name__} exit={code} msg={text}", file=sys.stderr)
    return code


def parseArgs(
    subcommand: str,
    args: List[str],
) -> Dict[str, str]:
    flags = OPTIONS[subcommand] + COMMON
    longopts = [f"{f}=" if v else f for f, v, _ in flags]
    try:
        opts, rest = getopt.getopt(args, "hv", longopts)
    except getopt.GetoptError as e:
        raise UsageError(f"{subcommand}: {e}") from e
    if rest:
        raise UsageError(f"{subcommand}: unexpected arguments {rest}")

    rr: Dict[str, str] = {}
    for opt, arg in opts:
        if opt == "-h":
            opt = "--help"
        if opt == "-v":
            opt = "--verbose"
        rr[opt[2:]] = arg
    return rr


@contextlib.contextmanager
def flagValues(flag: str) -> Iterator[None]:
    # a flag value that does not parse is a usage error, not a data error
    try:
        yield
    except (TypeError, ValueError) as e:
        raise UsageError(f"--{flag}: {e}") from e


def _config(
    cls: Type[ParameterContext],
    **kwargs: Any,
) -> Any:
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e


def _number(
    o: Dict[str, str],
    name: str,
    kind: Callable[[str], Any],
) -> Any:
    if name not in o:
        return None
    try:
        return kind(o[name])
    except ValueError as e:
        raise UsageError(f"--{name} {o[name]!r} is not a valid {kind.__name__}") from e


def _need(
    o: Dict[str, str],
    name: str,
) -> str:
    if not o.get(name):
        raise UsageError(f"--{name} is required")
    return o[name]


def _fractions(text: str) -> Tuple[float, float, float]:
    parts = tuple(float(f) for f in text.split(","))
    if len(parts) != 3 or any(f < 0 for f in parts) or abs(sum(parts) - 1.0) > 1e-9:
        raise ValueError(f"'{text}' must be three non-negative train,val,test fractions summing to 1")
    return (parts[0], parts[1], parts[2])


def _mapping(text: Optional[str]) -> Dict[str, str]:
    rr: Dict[str, str] = {}
    for item in (text or "").split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise UsageError(f"--map entry '{item}' must be dataset=model")
        a, b = item.split("=", 1)
        rr[a.strip()] = b.strip()
    return rr


def _deterministic(o: Dict[str, str]) -> bool:
    return "deterministic" in o or isDeterministicEnv()


def cmdGenerate(o: Dict[str, str]) -> int:
    rc = _config(
        RunConfig,
        subcommand="generate",
        profile=o.get("profile", "A"),
        data=o.get("data"),
        out=o.get("out"),
        seed=_number(o, "seed", int),
        workers=_number(o, "workers", int),
        deterministic=_deterministic(o),
        verbose="verbose" in o,
    )
    with flagValues("profile"):
        profile = profileFromName(rc.profile)
    with flagValues("snr"):
        grid = parseGrid(o["snr"]) if "snr" in o else (parseGrid(DESK_SNR_GRID_A) if profile.profileId == "A" else list(profile.snrGridDb))
    with flagValues("classes"):
        classes = [ModulationClass.fromName(c) for c in o["classes"].split(",")] if o.get("classes") else list(ALL_CLASSES)
    with flagValues("fractions"):
        fractions = _fractions(o["fractions"]) if "fractions" in o else DEFAULT_FRACTIONS
    fpc = _number(o, "frames-per-cell", int)
    if fpc is not None and fpc < 1:
        raise UsageError(f"--frames-per-cell {fpc} must be at least 1")
    seed = int(rc.seed)

    if "import-format" in o:
        ds: Dataset = importExternal(_need(o, "data"), o["import-format"])
    else:
        workers = 1 if rc.deterministic else (rc.workers or os.cpu_count() or 1)
        ds = generateDataset(profile, classes, grid, 250 if fpc is None else fpc, seed, workers)

    ds = ds.withManifest(partition(ds, fractions, seed))
    out = resolveOutPath(rc.out, f"dataset-{ds.manifest.profileId}.modf")
    writeDataset(ds, out)

    print(f"{out}: {len(ds)} frames, classes {','.join(ds.classes)}, splits {ds.manifest.splitCounts()}")
    return EXIT_OK


def cmdTrain(o: Dict[str, str]) -> int:
    rc = _config(
        RunConfig,
        subcommand="train",
        model=o.get("model"),
        data=_need(o, "data"),
        checkpoint=o.get("resume"),
        out=o.get("out"),
        seed=_number(o, "seed", int),
        deterministic=_deterministic(o),
        verbose="verbose" in o,
    )
    cfg = _config(
        TrainConfig,
        epochs=_number(o, "epochs", int),
        batch_size=_number(o, "batch", int),
        lr=_number(o, "lr", float),
        momentum=_number(o, "momentum", float),
        precision="float64" if rc.deterministic else o.get("precision"),
        checkpoint_every=_number(o, "checkpoint-every", int),
        seed=int(rc.seed),
        out_dir=resolveOutPath(rc.out, f"run-{rc.model}"),
        verbose=bool(rc.verbose),
    )

    data = readDataset(rc.data)
    if rc.checkpoint:
        requested = buildModel(rc.model, data.numClasses, data.classes, cfg.bn_eps, cfg.bn_momentum) if "model" in o else None
        model, history = resume(rc.checkpoint, data, cfg, requested)
    else:
        model = buildModel(rc.model, data.numClasses, data.classes, cfg.bn_eps, cfg.bn_momentum)
        model, history = train(model, data, cfg)

    print(history.toTsv(), end="")
    print(f"{cfg.out_dir}: last.modw, best.modw (best epoch {history.bestEpoch()}), history.tsv")
    return EXIT_OK


def _printFinal(report: EvalReport) -> None:
    if report.final is None:
        return
    f = report.final
    print(
        f"selected checkpoint epoch {report.checkpointEpoch}: accuracy {report.overallAccuracy:.4f}, high-snr {report.highSnrAccuracy():.4f}; "
        f"final checkpoint epoch {f['epoch']}: accuracy {f['overall_accuracy']:.4f}, high-snr {f['high_snr_accuracy']:.4f}; "
        f"selected minus final {report.finalGap():.4f}"
    )


def _printReport(
    report: EvalReport,
    out: str,
) -> None:
    print(f"{out}: {report.modelId} on {report.datasetId}")
    print(f"overall accuracy {report.overallAccuracy:.4f} over {report.total} frames, high-snr {report.highSnrAccuracy():.4f}, trend {report.accuracyTrend():.3f}")
    print(f"retained classes: {','.join(retentionSummary(report)) or 'none'}")
    _printFinal(report)


def cmdEval(
    o: Dict[str, str],
    cross: bool = False,
) -> int:
    rc = _config(
        RunConfig,
        subcommand="cross-eval" if cross else "eval",
        checkpoint=_need(o, "checkpoint"),
        data=_need(o, "data"),
        out=o.get("out"),
        deterministic=_deterministic(o),
        verbose="verbose" in o,
    )
    batch = _number(o, "batch", int) or 512
    data = readDataset(rc.data)
    split = o.get("split", "TEST").upper()
    mapping = _mapping(o.get("map"))
    offset = _number(o, "offset", float)

    def evaluateCheckpoint(path: str) -> EvalReport:
        ckpt = readCheckpoint(path)
        model = modelFromCheckpoint(ckpt, "float64" if rc.deterministic else None)
        if cross:
            report = crossEvaluate(model, data, split, mapping, batch, offset)
        else:
            report = evaluate(model, data, split, mapping, batch)
        return dataclasses.replace(report, checkpointEpoch=ckpt.epoch)

    # the best-validation checkpoint is the one evaluated, the final one is reported next to it
    final = o.get("final")
    if final is None and os.path.basename(rc.checkpoint) == "best.modw":
        sibling = os.path.join(os.path.dirname(rc.checkpoint), "last.modw")
        final = sibling if os.path.isfile(sibling) else None

    report = evaluateCheckpoint(rc.checkpoint)
    if final:
        report = report.withFinal(evaluateCheckpoint(final))

    out = resolveOutPath(rc.out, "cross-report.json" if cross else "report.json")
    report.write(out)
    _printReport(report, out)
    return EXIT_OK


def cmdReport(o: Dict[str, str]) -> int:
    path = _need(o, "report")
    report = EvalReport.read(path)
    outDir = o.get("out") or os.path.dirname(os.path.abspath(path))
    os.makedirs(outDir, exist_ok=True)

    for name, text in [("accuracy.tsv", report.accuracyTsv()), ("confusion.tsv", report.confusionGrid())]:
        with open(os.path.join(outDir, name), "w", encoding="utf-8") as f:
            f.write(text)

    threshold = _number(o, "threshold", float)
    retained = retentionSummary(report, DEFAULT_RETENTION_THRESHOLD if threshold is None else threshold)
    print(f"{outDir}: accuracy.tsv, confusion.tsv")
    print(f"retained classes: {','.join(retained) or 'none'}")
    _printFinal(report)

    if "within" in o:
        gap = compareReports(EvalReport.read(o["within"]), report)
        print(f"high-snr accuracy within {gap['within_high_snr']:.4f}, cross {gap['cross_high_snr']:.4f}, gap {gap['gap']:.4f}")
    return EXIT_OK


def cmdSelftest(o: Dict[str, str]) -> int:
    checks = None
    if o.get("only"):
        with flagValues("only"):
            checks = selectChecks(o["only"].split(","))
    results = runSelftest(checks)
    print(f"selftest: all {len(results)} checks passed")
    return EXIT_OK


HANDLERS: Dict[str, Callable[[Dict[str, str]], int]] = {
    "generate": cmdGenerate,
    "train": cmdTrain,
    "eval": cmdEval,
    "cross-eval": lambda o: cmdEval(o, cross=True),
    "report": cmdReport,
    "selftest": cmdSelftest,
}


def run(argv: List[str]) -> int:
    try:
        if not argv:
            usage()
            return EXIT_USAGE
        if argv[0] in ("-h", "--help"):
            usage()
            return EXIT_OK
        if argv[0] in ("-V", "--version"):
            print(VERSION)
            return EXIT_OK

        subcommand = argv[0]
        if subcommand not in HANDLERS:
            raise UsageError(f"unknown subcommand '{subcommand}', use one of {sorted(HANDLERS)}")

        o = parseArgs(subcommand, argv[1:])
        if "help" in o:
            usage(subcommand)
            return EXIT_OK
        setVerbose("verbose" in o)

        msg = f"{subcommand} {o}"
        log.debug(msg)
        return HANDLERS[subcommand](o)

    except UsageError as e:
        return reportError(e, EXIT_USAGE)
    except SelftestFailed as e:
        return reportError(e, EXIT_SELFTEST)
    except (IqShiftException, OSError) as e:
        return reportError(e, EXIT_DATA)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
