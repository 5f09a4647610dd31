#! /usr/bin/env python3

import os
import logging
import json

from typing import (
    List,
    Dict,
    Any,
)

from ..exceptions import RejectedInput

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

TrainParamsStringJson: str = """
{
  "batch_size": {
    "type": "int",
    "default": 256,
    "optional": true,
    "min": 1,
    "help": "number of training frames per mini-batch; the last partial batch is processed"
  },
  "epochs": {
    "type": "int",
    "default": 12,
    "optional": true,
    "min": 1,
    "help": "number of passes over the training split"
  },
  "lr": {
    "type": "float",
    "default": 0.01,
    "optional": true,
    "min": 0.0,
    "help": "constant learning rate of the momentum optimizer"
  },
  "momentum": {
    "type": "float",
    "default": 0.9,
    "optional": true,
    "min": 0.0,
    "below": 1.0,
    "help": "classical momentum factor, v = momentum * v - lr * g"
  },
  "seed": {
    "type": "int",
    "default": 0,
    "optional": true,
    "min": 0,
    "help": "seed for initialization, epoch shuffles and dropout masks"
  },
  "precision": {
    "type": "str",
    "default": "float32",
    "optional": true,
    "choices": ["float32", "float64"],
    "help": "arithmetic precision; float64 is the bit-reproducible reference mode"
  },
  "checkpoint_every": {
    "type": "int",
    "default": 1,
    "optional": true,
    "min": 1,
    "help": "write epoch-NNN.modw every this many epochs (last and best are always kept)"
  },
  "bn_eps": {
    "type": "float",
    "default": 1e-5,
    "optional": true,
    "min": 0.0,
    "help": "batch norm variance epsilon"
  },
  "bn_momentum": {
    "type": "float",
    "default": 0.1,
    "optional": true,
    "min": 0.0,
    "max": 1.0,
    "help": "weight of the current batch in the running statistics"
  },
  "eval_batch_size": {
    "type": "int",
    "default": 512,
    "optional": true,
    "min": 1,
    "help": "frames per forward pass during validation and evaluation"
  },
  "out_dir": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "directory for checkpoints and history; nothing is written when unset"
  },
  "verbose": {
    "type": "bool",
    "default": false,
    "optional": true,
    "help": "log per-batch losses"
  }
}
"""

RunParamsStringJson: str = """
{
  "subcommand": {
    "type": "str",
    "optional": false,
    "choices": ["generate", "train", "eval", "cross-eval", "report", "selftest"],
    "help": "pipeline step to run"
  },
  "model": {
    "type": "str",
    "default": "cnn",
    "optional": true,
    "choices": ["cnn", "resnet"],
    "help": "architecture to train"
  },
  "profile": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "built-in profile A or B, or the path of a profile file"
  },
  "data": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "path of a MODF dataset"
  },
  "checkpoint": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "path of a MODW checkpoint"
  },
  "out": {
    "type": "str",
    "default": null,
    "optional": true,
    "help": "output file or directory"
  },
  "seed": {
    "type": "int",
    "default": 7,
    "optional": true,
    "min": 0,
    "help": "master seed"
  },
  "workers": {
    "type": "int",
    "default": null,
    "optional": true,
    "min": 1,
    "help": "worker processes for generation, the number of cores when unset"
  },
  "deterministic": {
    "type": "bool",
    "default": false,
    "optional": true,
    "help": "single worker, 64-bit reference mode"
  },
  "verbose": {
    "type": "bool",
    "default": false,
    "optional": true,
    "help": "debug logging on stderr"
  }
}
"""


class ParameterContext:
    params: Dict[str, Any]
    value: Dict[str, Any]

    schemaJson: str = "{}"

    KT: Dict[str, Any] = {
        "int": int,
        "float": float,
        "str": str,
        "bool": bool,
    }

    def _loadDefaults(self) -> List[str]:
        mandatory: List[str] = []
        for i, k in self.params.items():
            if "default" in k:
                self.value[i] = k["default"]
            else:
                mandatory.append(i)  # params with no default become mandatory
                self.value[i] = None
        return mandatory

    def _coerce(
        self,
        name: str,
        value: Any,
    ) -> Any:
        t = self.params[name].get("type")
        if t is None:
            msg = f"unknown type: {t} for {name}"
            raise TypeError(msg)

        # ints are fine where floats are expected, bools are never ints here
        if t == "float" and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if t == "int" and isinstance(value, bool):
            msg = f"unknown type: {t} for {name}, {value}"
            raise TypeError(msg)

        if not isinstance(value, self.KT[t]):
            msg = f"unknown type: {t} for {name}, {value}"
            raise TypeError(msg)

        return value

    def _validateRange(
        self,
        name: str,
        value: Any,
    ) -> None:
        spec = self.params[name]
        if "min" in spec and value < spec["min"]:
            raise RejectedInput(f"{name}={value} is below the minimum {spec['min']}")
        if "max" in spec and value > spec["max"]:
            raise RejectedInput(f"{name}={value} is above the maximum {spec['max']}")
        if "below" in spec and value >= spec["below"]:
            raise RejectedInput(f"{name}={value} must be below {spec['below']}")
        if "choices" in spec and value not in spec["choices"]:
            raise RejectedInput(f"{name}={value} is not one of {spec['choices']}")

    def _addArgs(
        self,
        mandatory: List[str],
        **kwargs: Any,
    ) -> None:
        for name, value in kwargs.items():
            if name not in self.params:
                msg = f"ignore parameter '{name}':you specified a parameter we do not currently know"
                raise TypeError(msg)

            # we have a type and we still exist
            if value is not None:
                value = self._coerce(name, value)
                self._validateRange(name, value)
                self.value[name] = value
                if name in mandatory:
                    del mandatory[mandatory.index(name)]

    def _validateAllMandatoryNowKnown(
        self,
        mandatory: List[str],
    ) -> None:
        if len(mandatory) != 0:
            msg = f"missing mandatory parametrs: {sorted(mandatory)}"
            raise ValueError(msg)

    def __init__(
        self,
        **kwargs: Any,
    ) -> None:
        self.params = json.loads(self.schemaJson)
        self.value = {}

        mandatory: List[str] = self._loadDefaults()
        self._addArgs(mandatory, **kwargs)
        self._validateAllMandatoryNowKnown(mandatory)

    def __getattr__(self, name: str) -> Any:
        if name in ["params", "value"]:
            return object.__getattribute__(self, name)
        return self.get(name)

    def __setattr__(self, name: str, value: Any) -> None:
        if name in ["params", "value"]:
            object.__setattr__(self, name, value)
        else:
            self.set(name, value)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.toJson()})"

    def get(self, name: str) -> Any:
        if name in self.value:
            return self.value[name]
        raise AttributeError(f"'{self.__class__.__name__}' object has no attribute '{name}'")

    def set(self, name: str, value: Any) -> None:
        if name not in self.params:
            msg = f"ignore parameter '{name}':you specified a parameter we do not currently know"
            raise TypeError(msg)

        if value is not None:
            value = self._coerce(name, value)
            self._validateRange(name, value)
            self.value[name] = value
        # leave the default

    def helpText(self) -> List[str]:
        rr: List[str] = []
        for k, v in self.params.items():
            default = v.get("default")
            rr.append(f"{k} ({v.get('type')}, default {default}): {v.get('help', '')}")
        return rr

    def toJson(self) -> str:
        rr: Dict[str, Any] = {}
        for k in self.params:
            rr[k] = self.get(k)
        return json.dumps(rr, sort_keys=True)

    def fromJson(self, jString: str) -> None:
        zz = json.loads(jString)
        for k, v in zz.items():
            self.set(k, v)


class TrainConfig(ParameterContext):
    schemaJson = TrainParamsStringJson

    def dtype(self) -> str:
        return str(self.precision)


class RunConfig(ParameterContext):
    schemaJson = RunParamsStringJson
