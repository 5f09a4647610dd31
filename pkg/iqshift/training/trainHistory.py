import os
import json
import logging
import dataclasses

from typing import (
    Optional,
    List,
    Dict,
    Any,
)

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

TSV_COLUMNS = ["epoch", "train_loss", "val_loss", "val_accuracy", "seconds", "steps"]


@dataclasses.dataclass
class EpochRecord:
    epoch: int
    trainLoss: float
    valLoss: float
    valAccuracy: float
    seconds: float
    steps: int

    def toDict(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.trainLoss,
            "val_loss": self.valLoss,
            "val_accuracy": self.valAccuracy,
            "seconds": self.seconds,
            "steps": self.steps,
        }

    @classmethod
    def fromDict(cls, d: Dict[str, Any]) -> "EpochRecord":
        return cls(
            epoch=int(d["epoch"]),
            trainLoss=float(d["train_loss"]),
            valLoss=float(d["val_loss"]),
            valAccuracy=float(d["val_accuracy"]),
            seconds=float(d["seconds"]),
            steps=int(d["steps"]),
        )


class TrainHistory:
    """One record per completed epoch, in epoch order."""

    def __init__(
        self,
        records: Optional[List[EpochRecord]] = None,
    ) -> None:
        self.records: List[EpochRecord] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    @property
    def trainLosses(self) -> List[float]:
        return [r.trainLoss for r in self.records]

    @property
    def valLosses(self) -> List[float]:
        return [r.valLoss for r in self.records]

    @property
    def valAccuracies(self) -> List[float]:
        return [r.valAccuracy for r in self.records]

    def bestEpoch(self) -> Optional[int]:
        # highest validation accuracy, the earliest epoch on ties
        if not self.records:
            return None
        best = self.records[0]
        for r in self.records[1:]:
            if r.valAccuracy > best.valAccuracy:
                best = r
        return best.epoch

    def bestAccuracy(self) -> float:
        if not self.records:
            return -1.0
        return max(self.valAccuracies)

    def toDict(self) -> Dict[str, Any]:
        return {"epochs": [r.toDict() for r in self.records], "best_epoch": self.bestEpoch()}

    @classmethod
    def fromDict(cls, d: Dict[str, Any]) -> "TrainHistory":
        return cls([EpochRecord.fromDict(e) for e in d.get("epochs", [])])

    def toJson(self) -> str:
        return json.dumps(self.toDict(), sort_keys=True, indent=1)

    def toTsv(self) -> str:
        rr = ["\t".join(TSV_COLUMNS)]
        for r in self.records:
            rr.append(f"{r.epoch}\t{r.trainLoss:.6f}\t{r.valLoss:.6f}\t{r.valAccuracy:.6f}\t{r.seconds:.2f}\t{r.steps}")
        return "\n".join(rr) + "\n"

    def write(self, outDir: str) -> None:
        with open(os.path.join(outDir, "history.tsv"), "w", encoding="utf-8") as f:
            f.write(self.toTsv())
        with open(os.path.join(outDir, "history.json"), "w", encoding="utf-8") as f:
            f.write(self.toJson())
