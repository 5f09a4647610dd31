import os
import logging

from typing import (
    List,
    Optional,
)

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


class IqShiftException(Exception):
    # make all other exeptions based on a generic exception
    pass


class RejectedInput(IqShiftException, ValueError):
    # a precondition of an operation was violated
    pass


class UsageError(IqShiftException):
    # bad command line: unknown flag, missing value, unknown subcommand
    pass


class UnsupportedFormat(IqShiftException):
    pass


class DatasetFormatError(IqShiftException):
    # base for everything that can go wrong reading a MODF or MODW file
    pass


class BadMagic(DatasetFormatError):
    pass


class BadVersion(DatasetFormatError):
    pass


class ChecksumMismatch(DatasetFormatError):
    # also raised for truncated files: the trailer is missing or wrong
    pass


class StructuralError(DatasetFormatError):
    pass


class CheckpointError(DatasetFormatError):
    pass


class ModelSpecMismatch(CheckpointError):
    pass


class ClassMismatch(IqShiftException):
    pass


class UnmappableClass(IqShiftException):
    def __init__(
        self,
        label: str,
        msg: Optional[str] = None,
    ) -> None:
        self.label = label
        super().__init__(msg or f"class '{label}' cannot be mapped onto the model classes")


class SelftestFailed(IqShiftException):
    def __init__(
        self,
        failed: List[str],
    ) -> None:
        self.failed = failed
        super().__init__(f"selftest failed: {','.join(failed)}")
