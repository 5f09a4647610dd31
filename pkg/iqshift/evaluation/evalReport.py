import os
import json
import math
import logging
import dataclasses

from typing import (
    Optional,
    List,
    Dict,
    Tuple,
    Any,
)

import numpy as np
from scipy import stats

from ..exceptions import StructuralError

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

REPORT_VERSION: int = 1

COMMON_CLASS_NOTE = "accuracy is scored over the common class list shared by the training and test profiles"


@dataclasses.dataclass
class EvalReport:
    """
    Test-split measurements of one model on one dataset.

    confusion holds one C x C count matrix per SNR of the grid (rows: true class,
    columns: predicted class); every other figure is derived from it, except
    correct and total which are accumulated independently while predicting.
    """

    modelId: str
    datasetId: str
    classes: List[str]
    snrGridDb: List[float]
    confusion: np.ndarray
    correct: int
    total: int
    snrConvention: str = "TOTAL"
    snrOffsetDb: Optional[float] = None
    trainProfileId: Optional[str] = None
    testProfileId: Optional[str] = None
    crossDataset: bool = False
    notes: List[str] = dataclasses.field(default_factory=list)
    checkpointEpoch: Optional[int] = None
    # summary of the final checkpoint of the same run, on the same frames
    final: Optional[Dict[str, Any]] = None

    def validate(self) -> "EvalReport":
        s, c = len(self.snrGridDb), len(self.classes)
        if self.confusion.shape != (s, c, c):
            raise StructuralError(f"confusion shape {self.confusion.shape} does not match {s} snrs x {c} classes")
        if int(self.confusion.sum()) != self.total:
            raise StructuralError(f"confusion holds {int(self.confusion.sum())} frames, report says {self.total}")
        if self.final is not None:
            missing = [k for k in ("epoch", "overall_accuracy", "high_snr_accuracy", "accuracy_by_snr") if k not in self.final]
            if missing:
                raise StructuralError(f"final checkpoint summary lacks {missing}")
        return self

    # aggregates

    def confusionMatrix(self) -> np.ndarray:
        return self.confusion.sum(axis=0)

    def classCounts(self) -> np.ndarray:
        return self.confusionMatrix().sum(axis=1)

    @property
    def overallAccuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")

    def accuracyBySnr(self) -> Dict[float, float]:
        rr: Dict[float, float] = {}
        for i, snr in enumerate(self.snrGridDb):
            n = int(self.confusion[i].sum())
            rr[snr] = float(np.trace(self.confusion[i]) / n) if n else float("nan")
        return rr

    def recallBySnr(self) -> Dict[float, List[float]]:
        rr: Dict[float, List[float]] = {}
        for i, snr in enumerate(self.snrGridDb):
            rows = self.confusion[i].sum(axis=1)
            diag = np.diag(self.confusion[i])
            rr[snr] = [float(d / r) if r else float("nan") for d, r in zip(diag, rows)]
        return rr

    def highSnrGrid(self) -> List[float]:
        # the top quartile of the grid, at least one point
        grid = sorted(self.snrGridDb)
        k = max(1, math.ceil(len(grid) / 4))
        return grid[-k:]

    def _highSnrConfusion(self) -> np.ndarray:
        high = set(self.highSnrGrid())
        idx = [i for i, s in enumerate(self.snrGridDb) if s in high]
        return self.confusion[idx].sum(axis=0)

    def highSnrAccuracy(self) -> float:
        cm = self._highSnrConfusion()
        n = int(cm.sum())
        return float(np.trace(cm) / n) if n else float("nan")

    def highSnrRecall(self) -> Dict[str, Tuple[int, int]]:
        """Per class (correct, count) over the high-SNR cells."""
        cm = self._highSnrConfusion()
        return {c: (int(cm[i, i]), int(cm[i].sum())) for i, c in enumerate(self.classes)}

    def accuracyTrend(self) -> float:
        # Spearman rank correlation of SNR against accuracy
        pairs = [(s, a) for s, a in self.accuracyBySnr().items() if not math.isnan(a)]
        if len(pairs) < 2:
            return float("nan")
        rho, _ = stats.spearmanr([p[0] for p in pairs], [p[1] for p in pairs])
        return float(rho)

    def snrAxis(self) -> List[Tuple[float, Optional[float], Optional[float]]]:
        """(grid snr, total snr, in-band snr) per grid point; None where no offset is known."""
        rr: List[Tuple[float, Optional[float], Optional[float]]] = []
        for s in self.snrGridDb:
            if self.snrOffsetDb is None:
                rr.append((s, s, None) if self.snrConvention == "TOTAL" else (s, None, s))
            elif self.snrConvention == "TOTAL":
                rr.append((s, s, s + self.snrOffsetDb))
            else:
                rr.append((s, s - self.snrOffsetDb, s))
        return rr

    # selected and final checkpoint

    def summary(self) -> Dict[str, Any]:
        return {
            "epoch": self.checkpointEpoch,
            "overall_accuracy": self.overallAccuracy,
            "high_snr_accuracy": self.highSnrAccuracy(),
            "accuracy_by_snr": [[s, a] for s, a in self.accuracyTable()],
        }

    def withFinal(self, final: "EvalReport") -> "EvalReport":
        """This report with the final checkpoint's evaluation of the same frames attached."""
        if final.datasetId != self.datasetId or final.snrGridDb != self.snrGridDb or final.total != self.total:
            raise StructuralError(f"final checkpoint was evaluated on {final.datasetId} ({final.total} frames), not on {self.datasetId} ({self.total} frames)")
        note = f"selected checkpoint epoch {self.checkpointEpoch}, final checkpoint epoch {final.checkpointEpoch} reported alongside"
        return dataclasses.replace(self, final=final.summary(), notes=self.notes + [note])

    def finalGap(self) -> Optional[float]:
        # high-snr accuracy of the selected checkpoint minus that of the final one
        if self.final is None:
            return None
        return self.highSnrAccuracy() - float(self.final["high_snr_accuracy"])

    # flat tables

    def accuracyTable(self) -> List[Tuple[float, float]]:
        return sorted(self.accuracyBySnr().items())

    def accuracyTsv(self) -> str:
        counts = {s: int(self.confusion[i].sum()) for i, s in enumerate(self.snrGridDb)}
        axis = {a[0]: a for a in self.snrAxis()}
        finalAcc = None if self.final is None else {float(s): float(a) for s, a in self.final["accuracy_by_snr"]}
        rr = ["snr_db\ttotal_snr_db\tinband_snr_db\taccuracy\tframes" + ("" if finalAcc is None else "\tfinal_accuracy")]
        for snr, acc in self.accuracyTable():
            _, tot, inb = axis[snr]
            line = f"{snr:g}\t{'' if tot is None else f'{tot:.3f}'}\t{'' if inb is None else f'{inb:.3f}'}\t{acc:.6f}\t{counts[snr]}"
            if finalAcc is not None:
                line += f"\t{finalAcc[snr]:.6f}"
            rr.append(line)
        return "\n".join(rr) + "\n"

    def confusionGrid(self) -> str:
        cm = self.confusionMatrix()
        rr = ["true\\pred\t" + "\t".join(self.classes)]
        for i, c in enumerate(self.classes):
            rr.append(c + "\t" + "\t".join(str(int(v)) for v in cm[i]))
        return "\n".join(rr) + "\n"

    # structured text

    def toDict(self) -> Dict[str, Any]:
        return {
            "version": REPORT_VERSION,
            "model_id": self.modelId,
            "dataset_id": self.datasetId,
            "classes": self.classes,
            "snr_grid_db": self.snrGridDb,
            "confusion": self.confusion.astype(int).tolist(),
            "correct": self.correct,
            "total": self.total,
            "overall_accuracy": self.overallAccuracy,
            "accuracy_by_snr": [[s, a] for s, a in self.accuracyTable()],
            "snr_convention": self.snrConvention,
            "snr_offset_db": self.snrOffsetDb,
            "train_profile": self.trainProfileId,
            "test_profile": self.testProfileId,
            "cross_dataset": self.crossDataset,
            "notes": self.notes,
            "checkpoint_epoch": self.checkpointEpoch,
            "final": self.final,
        }

    def toJson(self) -> str:
        return json.dumps(self.toDict(), sort_keys=True, indent=1)

    @classmethod
    def fromJson(cls, text: str) -> "EvalReport":
        try:
            d = json.loads(text)
            return cls(
                modelId=str(d["model_id"]),
                datasetId=str(d["dataset_id"]),
                classes=list(d["classes"]),
                snrGridDb=[float(s) for s in d["snr_grid_db"]],
                confusion=np.array(d["confusion"], dtype=np.int64),
                correct=int(d["correct"]),
                total=int(d["total"]),
                snrConvention=str(d.get("snr_convention", "TOTAL")),
                snrOffsetDb=d.get("snr_offset_db"),
                trainProfileId=d.get("train_profile"),
                testProfileId=d.get("test_profile"),
                crossDataset=bool(d.get("cross_dataset", False)),
                notes=list(d.get("notes", [])),
                checkpointEpoch=d.get("checkpoint_epoch"),
                final=d.get("final"),
            ).validate()
        except (KeyError, TypeError, ValueError) as e:
            raise StructuralError(f"not an evaluation report: {e}") from e

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.toJson())

    @classmethod
    def read(cls, path: str) -> "EvalReport":
        if not os.path.isfile(path):
            raise StructuralError(f"{path} cannot be found or is not a file")
        with open(path, "r", encoding="utf-8") as f:
            return cls.fromJson(f.read())
