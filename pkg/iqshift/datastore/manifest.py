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

import numpy as np

from ..exceptions import StructuralError

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

FORMAT_VERSION: int = 1

TRAIN: int = 0
VAL: int = 1
TEST: int = 2
UNASSIGNED: int = 9

SPLIT_NAMES: Dict[str, int] = {
    "train": TRAIN,
    "val": VAL,
    "test": TEST,
}

# reports are scored over the common class list only
CLASS_LIST_NOTE: str = "scored over the common 6-class list shared by both profiles"


def splitCode(split: str) -> int:
    key = split.lower()
    if key not in SPLIT_NAMES:
        raise StructuralError(f"unknown split '{split}', use one of {sorted(SPLIT_NAMES)}")
    return SPLIT_NAMES[key]


def _encodeSplits(splits: Optional[np.ndarray]) -> str:
    if splits is None:
        return ""
    return "".join(str(int(s)) for s in splits)


def _decodeSplits(text: str) -> Optional[np.ndarray]:
    if not text:
        return None
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


@dataclasses.dataclass
class DatasetManifest:
    profileId: str
    classes: List[str]
    snrGridDb: List[float]
    frameCount: int
    masterSeed: int
    frameLen: int = 1024
    snrConvention: str = "TOTAL"
    framesPerCell: int = 0
    framesPerSignal: int = 1
    profile: Dict[str, Any] = dataclasses.field(default_factory=dict)
    snrOffsetDb: Optional[float] = None
    splits: Optional[np.ndarray] = None  # per frame: TRAIN / VAL / TEST
    formatVersion: int = FORMAT_VERSION
    notes: List[str] = dataclasses.field(default_factory=list)

    def validate(self) -> "DatasetManifest":
        if self.splits is not None:
            if self.splits.size != self.frameCount:
                raise StructuralError(f"split assignment covers {self.splits.size} frames, manifest says {self.frameCount}")
            if np.any(~np.isin(self.splits, [TRAIN, VAL, TEST])):
                raise StructuralError("split assignment holds unknown codes")
        return self

    def hasSplits(self) -> bool:
        return self.splits is not None

    def splitCounts(self) -> Dict[str, int]:
        if self.splits is None:
            return {}
        return {name: int(np.count_nonzero(self.splits == code)) for name, code in SPLIT_NAMES.items()}

    def withSplits(self, splits: np.ndarray) -> "DatasetManifest":
        return dataclasses.replace(self, splits=np.asarray(splits, dtype=np.uint8)).validate()

    def toDict(self) -> Dict[str, Any]:
        return {
            "profileId": self.profileId,
            "classes": list(self.classes),
            "snrGridDb": [float(s) for s in self.snrGridDb],
            "frameCount": int(self.frameCount),
            "masterSeed": int(self.masterSeed),
            "frameLen": int(self.frameLen),
            "snrConvention": self.snrConvention,
            "framesPerCell": int(self.framesPerCell),
            "framesPerSignal": int(self.framesPerSignal),
            "profile": self.profile,
            "snrOffsetDb": self.snrOffsetDb,
            "splits": _encodeSplits(self.splits),
            "formatVersion": int(self.formatVersion),
            "notes": list(self.notes),
        }

    @classmethod
    def fromDict(cls, d: Dict[str, Any]) -> "DatasetManifest":
        try:
            return cls(
                profileId=str(d["profileId"]),
                classes=[str(c) for c in d["classes"]],
                snrGridDb=[float(s) for s in d["snrGridDb"]],
                frameCount=int(d["frameCount"]),
                masterSeed=int(d["masterSeed"]),
                frameLen=int(d.get("frameLen", 1024)),
                snrConvention=str(d.get("snrConvention", "TOTAL")),
                framesPerCell=int(d.get("framesPerCell", 0)),
                framesPerSignal=int(d.get("framesPerSignal", 1)),
                profile=dict(d.get("profile") or {}),
                snrOffsetDb=None if d.get("snrOffsetDb") is None else float(d["snrOffsetDb"]),
                splits=_decodeSplits(str(d.get("splits", ""))),
                formatVersion=int(d.get("formatVersion", FORMAT_VERSION)),
                notes=[str(n) for n in d.get("notes", [])],
            ).validate()
        except (KeyError, TypeError, ValueError) as e:
            raise StructuralError(f"manifest is incomplete: {e}") from e

    def toText(self) -> str:
        # structured text for humans and for the MODF manifest block
        return json.dumps(self.toDict(), sort_keys=True, indent=1)

    @classmethod
    def fromText(cls, text: str) -> "DatasetManifest":
        try:
            d = json.loads(text)
        except ValueError as e:
            raise StructuralError(f"manifest is not valid json: {e}") from e
        return cls.fromDict(d)
