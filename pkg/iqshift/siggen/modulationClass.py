#! /usr/bin/env python3
"""
Digital modulation classes and their Gray-labelled constellations.

The bit label of a constellation point is its index in the table returned by
constellation(); mapSymbols() reads bits MSB first in groups of bitsPerSymbol.

- BPSK: label 0 -> +1, label 1 -> -1
- QPSK: points at odd multiples of 45 degrees, Gray labels around the circle
- PSK8: points at multiples of 45 degrees starting at 0, Gray labels around the circle
- QAMn: square grid, Gray code per axis, high half of the label drives I, low half Q
"""

import os
import enum
import logging
import functools

from typing import (
    List,
)

import numpy as np

from ..exceptions import RejectedInput

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


class ModulationClass(enum.Enum):
    # name = (index, bits per symbol, display name)
    BPSK = (0, 1, "BPSK")
    QPSK = (1, 2, "QPSK")
    PSK8 = (2, 3, "8-PSK")
    QAM16 = (3, 4, "16-QAM")
    QAM64 = (4, 6, "64-QAM")
    QAM256 = (5, 8, "256-QAM")

    @property
    def index(self) -> int:
        return int(self.value[0])

    @property
    def bitsPerSymbol(self) -> int:
        return int(self.value[1])

    @property
    def displayName(self) -> str:
        return str(self.value[2])

    @property
    def order(self) -> int:
        return 1 << self.bitsPerSymbol

    @classmethod
    def fromIndex(cls, index: int) -> "ModulationClass":
        for c in cls:
            if c.index == index:
                return c
        raise RejectedInput(f"no modulation class with index {index}")

    @classmethod
    def fromName(cls, name: str) -> "ModulationClass":
        key = name.strip().upper().replace("_", "-")
        for c in cls:
            if key in (c.name, c.displayName.upper()):
                return c
        raise RejectedInput(f"unknown modulation class '{name}'")


ALL_CLASSES: List[ModulationClass] = sorted(ModulationClass, key=lambda c: c.index)


def classNames(classes: List[ModulationClass]) -> List[str]:
    return [c.name for c in classes]


def grayCode(i: int) -> int:
    return i ^ (i >> 1)


def _pskTable(order: int, offset: float) -> np.ndarray:
    table = np.zeros(order, dtype=np.complex128)
    for i in range(order):
        table[grayCode(i)] = np.exp(1j * (2.0 * np.pi * i / order + offset))
    return table


def _qamTable(order: int) -> np.ndarray:
    k = int(round(np.log2(order))) // 2
    m = 1 << k  # levels per axis
    levels = np.zeros(m)
    for i in range(m):
        levels[grayCode(i)] = 2 * i - (m - 1)

    table = np.zeros(order, dtype=np.complex128)
    for labelI in range(m):
        for labelQ in range(m):
            table[(labelI << k) | labelQ] = levels[labelI] + 1j * levels[labelQ]
    return table


@functools.lru_cache(maxsize=None)
def _constellation(cls: ModulationClass) -> np.ndarray:
    if cls is ModulationClass.BPSK:
        table = np.array([1.0 + 0.0j, -1.0 + 0.0j])
    elif cls is ModulationClass.QPSK:
        table = _pskTable(4, np.pi / 4)
    elif cls is ModulationClass.PSK8:
        table = _pskTable(8, 0.0)
    else:
        table = _qamTable(cls.order)

    table = table / np.sqrt(np.mean(np.abs(table) ** 2))
    table.setflags(write=False)
    return table


def constellation(cls: ModulationClass) -> np.ndarray:
    return _constellation(cls)


def mapSymbols(
    bits: np.ndarray,
    cls: ModulationClass,
) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = cls.bitsPerSymbol
    if bits.size % k != 0:
        raise RejectedInput(f"{bits.size} bits is not a multiple of {k} bits per symbol for {cls.name}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise RejectedInput("bits must be 0 or 1")

    groups = bits.reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = groups @ weights
    return constellation(cls)[labels]
