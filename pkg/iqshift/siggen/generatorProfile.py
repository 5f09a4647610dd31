#! /usr/bin/env python3
"""
Generator profiles: the parameter distribution of one synthetic dataset.

Two built-in profiles exist:

- A: one fixed rolloff and sps, no CFO, no power randomization, SNR relative to the total noise power
- B: randomized rolloff, CFO, sps and power, SNR relative to the noise inside the occupied band,
  long signals that are sliced into frames later

Profile files are plain `key = value` text, see PROFILE_SCHEMA_JSON for the keys.
"""

import os
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

from ..exceptions import RejectedInput
from ..context.parameterContext import ParameterContext
from .srrc import DEFAULT_SPAN_SYMBOLS

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

TOTAL = "TOTAL"
INBAND = "INBAND"

PROFILE_SCHEMA_JSON: str = """
{
  "profile_id": {
    "type": "str",
    "optional": false,
    "choices": ["A", "B"],
    "help": "A: fixed pulse, total SNR; B: randomized pulse/CFO/rate/power, in-band SNR"
  },
  "rolloff_range": {
    "type": "str",
    "optional": false,
    "help": "lo, hi: SRRC rolloff drawn uniformly from [lo, hi] inside (0, 1]"
  },
  "cfo_range": {
    "type": "str",
    "optional": false,
    "help": "lo, hi: carrier frequency offset in cycles/sample drawn uniformly"
  },
  "sps_choices": {
    "type": "str",
    "optional": false,
    "help": "comma separated samples per symbol, drawn uniformly"
  },
  "snr_convention": {
    "type": "str",
    "optional": false,
    "choices": ["TOTAL", "INBAND"],
    "help": "SNR relative to the whole sampling band or to the occupied band"
  },
  "power_scale_db_range": {
    "type": "str",
    "optional": false,
    "help": "lo, hi: signal power in dB drawn uniformly"
  },
  "frame_len": {
    "type": "str",
    "default": "1024",
    "optional": true,
    "help": "samples per frame"
  },
  "long_signal_len": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "samples per long signal (profile B only), sliced into frames"
  },
  "snr_grid_db": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "default SNR grid: comma separated values or lo:step:hi (inclusive)"
  },
  "span_symbols": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "SRRC filter span in symbols (even)"
  }
}
"""


class ProfileConfig(ParameterContext):
    schemaJson = PROFILE_SCHEMA_JSON


def parseGrid(text: str) -> List[float]:
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise RejectedInput(f"grid '{text}' must be lo:step:hi with a positive step")
        lo, step, hi = parts
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return [float(lo + i * step) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _parseInterval(text: str, name: str) -> Tuple[float, float]:
    parts = [float(p) for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or parts[0] > parts[1]:
        raise RejectedInput(f"{name} '{text}' must be 'lo, hi' with lo <= hi")
    return (parts[0], parts[1])


def _formatGrid(grid: Tuple[float, ...]) -> str:
    return ", ".join(f"{g:g}" for g in grid)


@dataclasses.dataclass(frozen=True)
class GeneratorProfile:
    profileId: str
    rolloffRange: Tuple[float, float]
    cfoRange: Tuple[float, float]
    spsChoices: Tuple[int, ...]
    snrConvention: str
    powerScaleDbRange: Tuple[float, float]
    frameLen: int = 1024
    longSignalLen: Optional[int] = None
    snrGridDb: Tuple[float, ...] = ()
    spanSymbols: int = DEFAULT_SPAN_SYMBOLS

    def _validateCommon(self) -> None:
        lo, hi = self.rolloffRange
        if not (0.0 < lo <= hi <= 1.0):
            raise RejectedInput(f"rolloff range {self.rolloffRange} must lie in (0, 1]")
        if self.cfoRange[0] > self.cfoRange[1]:
            raise RejectedInput(f"cfo range {self.cfoRange} is reversed")
        if self.powerScaleDbRange[0] > self.powerScaleDbRange[1]:
            raise RejectedInput(f"power range {self.powerScaleDbRange} is reversed")
        if not self.spsChoices or min(self.spsChoices) < 2:
            raise RejectedInput(f"sps choices {self.spsChoices} must be non-empty and >= 2")
        if self.frameLen < 1:
            raise RejectedInput(f"frame length {self.frameLen} must be positive")
        if self.spanSymbols < 2 or self.spanSymbols % 2:
            raise RejectedInput(f"span {self.spanSymbols} must be a positive even number")

    def _validateA(self) -> None:
        if self.snrConvention != TOTAL:
            raise RejectedInput("profile A uses the TOTAL SNR convention")
        if self.cfoRange != (0.0, 0.0):
            raise RejectedInput("profile A has no CFO")
        if len(self.spsChoices) != 1:
            raise RejectedInput("profile A uses a single sps")
        if self.rolloffRange[0] != self.rolloffRange[1]:
            raise RejectedInput("profile A uses a single rolloff")
        if self.powerScaleDbRange != (0.0, 0.0):
            raise RejectedInput("profile A has no power randomization")
        if self.longSignalLen is not None:
            raise RejectedInput("profile A generates frames directly, no long signals")

    def _validateB(self) -> None:
        if self.snrConvention != INBAND:
            raise RejectedInput("profile B uses the INBAND SNR convention")
        if self.rolloffRange[0] >= self.rolloffRange[1]:
            raise RejectedInput("profile B needs a non-degenerate rolloff range")
        if self.cfoRange[0] >= self.cfoRange[1]:
            raise RejectedInput("profile B needs a non-degenerate cfo range")
        if len(set(self.spsChoices)) < 2:
            raise RejectedInput("profile B needs at least two sps choices")
        if self.longSignalLen is None or self.longSignalLen % self.frameLen != 0:
            raise RejectedInput(f"profile B long signal length {self.longSignalLen} must be a multiple of {self.frameLen}")

    def validate(self) -> "GeneratorProfile":
        self._validateCommon()
        if self.profileId == "A":
            self._validateA()
        elif self.profileId == "B":
            self._validateB()
        else:
            raise RejectedInput(f"unknown profile id '{self.profileId}'")
        return self

    @property
    def signalLen(self) -> int:
        # samples generated per seed
        return int(self.longSignalLen or self.frameLen)

    @property
    def framesPerSignal(self) -> int:
        return self.signalLen // self.frameLen

    def drawFrameParams(
        self,
        rng: np.random.Generator,
    ) -> Dict[str, Any]:
        # always draw all four, so the stream layout does not depend on the profile
        rolloff = float(rng.uniform(self.rolloffRange[0], self.rolloffRange[1]))
        cfo = float(rng.uniform(self.cfoRange[0], self.cfoRange[1]))
        sps = int(self.spsChoices[int(rng.integers(0, len(self.spsChoices)))])
        power = float(rng.uniform(self.powerScaleDbRange[0], self.powerScaleDbRange[1]))
        return {
            "rolloff": rolloff,
            "cfo": cfo,
            "sps": sps,
            "powerScaleDb": power,
        }

    def toDict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        for k in ["rolloffRange", "cfoRange", "spsChoices", "powerScaleDbRange", "snrGridDb"]:
            d[k] = list(d[k])
        return d

    @classmethod
    def fromDict(cls, d: Dict[str, Any]) -> "GeneratorProfile":
        return cls(
            profileId=str(d["profileId"]),
            rolloffRange=(float(d["rolloffRange"][0]), float(d["rolloffRange"][1])),
            cfoRange=(float(d["cfoRange"][0]), float(d["cfoRange"][1])),
            spsChoices=tuple(int(s) for s in d["spsChoices"]),
            snrConvention=str(d["snrConvention"]),
            powerScaleDbRange=(float(d["powerScaleDbRange"][0]), float(d["powerScaleDbRange"][1])),
            frameLen=int(d.get("frameLen", 1024)),
            longSignalLen=None if d.get("longSignalLen") is None else int(d["longSignalLen"]),
            snrGridDb=tuple(float(s) for s in d.get("snrGridDb", ())),
            spanSymbols=int(d.get("spanSymbols", DEFAULT_SPAN_SYMBOLS)),
        ).validate()

    def toText(self) -> str:
        rr = [
            f"# generator profile {self.profileId}",
            f"profile_id = {self.profileId}",
            f"rolloff_range = {self.rolloffRange[0]:g}, {self.rolloffRange[1]:g}",
            f"cfo_range = {self.cfoRange[0]:g}, {self.cfoRange[1]:g}",
            f"sps_choices = {', '.join(str(s) for s in self.spsChoices)}",
            f"snr_convention = {self.snrConvention}",
            f"power_scale_db_range = {self.powerScaleDbRange[0]:g}, {self.powerScaleDbRange[1]:g}",
            f"frame_len = {self.frameLen}",
        ]
        if self.longSignalLen is not None:
            rr.append(f"long_signal_len = {self.longSignalLen}")
        if self.snrGridDb:
            rr.append(f"snr_grid_db = {_formatGrid(self.snrGridDb)}")
        rr.append(f"span_symbols = {self.spanSymbols}")
        return "\n".join(rr) + "\n"


PROFILE_A = GeneratorProfile(
    profileId="A",
    rolloffRange=(0.35, 0.35),
    cfoRange=(0.0, 0.0),
    spsChoices=(8,),
    snrConvention=TOTAL,
    powerScaleDbRange=(0.0, 0.0),
    frameLen=1024,
    longSignalLen=None,
    snrGridDb=tuple(float(s) for s in range(-20, 31, 2)),
).validate()

PROFILE_B = GeneratorProfile(
    profileId="B",
    rolloffRange=(0.2, 0.5),
    cfoRange=(-0.01, 0.01),
    spsChoices=(8, 10, 12),
    snrConvention=INBAND,
    powerScaleDbRange=(-3.0, 3.0),
    frameLen=1024,
    longSignalLen=32768,
    snrGridDb=tuple(float(s) for s in range(0, 14)),
).validate()


def builtinProfile(profileId: str) -> GeneratorProfile:
    if profileId.upper() == "A":
        return PROFILE_A
    if profileId.upper() == "B":
        return PROFILE_B
    raise RejectedInput(f"no built-in profile '{profileId}'")


def profileFromConfig(pc: ProfileConfig) -> GeneratorProfile:
    try:
        spsChoices = tuple(int(s) for s in str(pc.sps_choices).split(",") if s.strip())
        frameLen = int(pc.frame_len)
        longSignalLen = None if pc.long_signal_len is None else int(pc.long_signal_len)
        spanSymbols = DEFAULT_SPAN_SYMBOLS if pc.span_symbols is None else int(pc.span_symbols)
    except ValueError as e:
        raise RejectedInput(f"bad profile value: {e}") from e

    grid: Tuple[float, ...] = ()
    if pc.snr_grid_db is not None:
        grid = tuple(parseGrid(str(pc.snr_grid_db)))

    return GeneratorProfile(
        profileId=str(pc.profile_id),
        rolloffRange=_parseInterval(str(pc.rolloff_range), "rolloff_range"),
        cfoRange=_parseInterval(str(pc.cfo_range), "cfo_range"),
        spsChoices=spsChoices,
        snrConvention=str(pc.snr_convention),
        powerScaleDbRange=_parseInterval(str(pc.power_scale_db_range), "power_scale_db_range"),
        frameLen=frameLen,
        longSignalLen=longSignalLen,
        snrGridDb=grid,
        spanSymbols=spanSymbols,
    ).validate()


def parseProfileText(text: str) -> GeneratorProfile:
    kv: Dict[str, Any] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#")[0].strip()
        if len(line) == 0:
            continue
        if "=" not in line:
            raise RejectedInput(f"profile line {n}: expected 'key = value', got '{line}'")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    try:
        pc = ProfileConfig(**kv)
    except (TypeError, ValueError) as e:
        raise RejectedInput(f"bad profile: {e}") from e

    return profileFromConfig(pc)


def loadProfile(path: str) -> GeneratorProfile:
    if not os.path.isfile(path):
        raise RejectedInput(f"{path} cannot be found or is not a file")

    with open(path, encoding="utf-8") as f:
        profile = parseProfileText(f.read())

    msg = f"loaded profile {profile.profileId} from {path}"
    log.debug(msg)
    return profile


def saveProfile(
    profile: GeneratorProfile,
    path: str,
) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(profile.toText())


def profileFromName(nameOrPath: str) -> GeneratorProfile:
    if nameOrPath.upper() in ("A", "B"):
        return builtinProfile(nameOrPath)
    return loadProfile(nameOrPath)


def _meanLog10Uniform(lo: float, hi: float) -> float:
    # mean of log10(u) for u uniform on [lo, hi]
    if hi - lo < 1e-12:
        return float(np.log10(lo))
    f = lambda u: u * np.log(u) - u  # noqa: E731
    return float((f(hi) - f(lo)) / (hi - lo) / np.log(10.0))


def snrOffsetEstimate(profile: GeneratorProfile) -> float:
    """
    Mean gap in dB between in-band and total SNR over the profile's (rolloff, sps) distribution:
    E[10 log10(sps / (1 + rolloff))] with rolloff uniform on its range and sps uniform on its choices.
    """
    if profile.snrConvention != INBAND:
        raise RejectedInput(f"profile {profile.profileId} uses {profile.snrConvention} SNR, the in-band offset is undefined")

    spsPart = float(np.mean([np.log10(s) for s in profile.spsChoices]))
    rollPart = _meanLog10Uniform(1.0 + profile.rolloffRange[0], 1.0 + profile.rolloffRange[1])
    return 10.0 * (spsPart - rollPart)
