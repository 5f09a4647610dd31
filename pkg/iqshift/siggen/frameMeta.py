import os
import logging
import dataclasses

from typing import (
    Dict,
    Any,
)

from .modulationClass import ModulationClass

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


@dataclasses.dataclass(frozen=True)
class FrameMeta:
    # snrDb is expressed in the generating profile's convention
    cls: ModulationClass
    snrDb: float
    rolloff: float
    cfo: float  # cycles/sample
    sps: int
    powerScaleDb: float
    seed: int
    profileId: str

    def toDict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["cls"] = self.cls.name
        return d

    @classmethod
    def fromDict(cls, d: Dict[str, Any]) -> "FrameMeta":
        dd = dict(d)
        dd["cls"] = ModulationClass.fromName(str(dd["cls"]))
        return cls(**dd)
