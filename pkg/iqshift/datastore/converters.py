#! /usr/bin/env python3
"""
Extension point for importing public datasets in their native containers.

No converter ships with the package: importExternal() reports an unsupported format
for every tag until someone registers one with registerConverter().

A converter is any callable `(path: str) -> Dataset`.
"""

import os
import logging

from typing import (
    Callable,
    Dict,
    List,
)

from ..exceptions import UnsupportedFormat, RejectedInput
from .dataset import Dataset

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

Converter = Callable[[str], Dataset]

# Globals in Python are global to a module, not across all modules,
# so every access goes through the functions below.
CONVERTERS: Dict[str, Converter] = {}


def registerConverter(
    formatTag: str,
    converter: Converter,
) -> None:
    if not formatTag:
        raise RejectedInput("a converter needs a non-empty format tag")
    if not callable(converter):
        raise RejectedInput(f"converter for '{formatTag}' is not callable")

    CONVERTERS[formatTag] = converter
    msg = f"registered converter '{formatTag}'"
    log.debug(msg)


def unregisterConverter(formatTag: str) -> None:
    CONVERTERS.pop(formatTag, None)


def listConverters() -> List[str]:
    return sorted(CONVERTERS.keys())


def importExternal(
    path: str,
    formatTag: str,
) -> Dataset:
    converter = CONVERTERS.get(formatTag)
    if converter is None:
        a = f"unsupported format '{formatTag}'."
        b = f"Registered converters: {listConverters() or 'none'}."
        raise UnsupportedFormat(f"{a} {b}")

    msg = f"import {path} with converter '{formatTag}'"
    log.info(msg)
    return converter(path)
